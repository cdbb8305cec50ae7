"""Adaptive MCMC mean estimation driven by inter-trace variance.

The package bundles four layers: generic chain machinery (`chains`), an exact
dense spectral oracle for small instances (`spectral`), the paired-chain
estimators with their concentration closed forms (`estimators`), and the
adaptive estimation stack (`adaptive`), plus Glauber-dynamics coloring
counting (`coloring`) and planted-partition generation (`planted`).  The
`dynamite` console script exposes the experiment harness.
"""

from .adaptive import (
    EstimateReport,
    Schedule,
    build_schedule,
    dynamite,
    mcmc_pro,
    select_trace_length,
    uniform_mixing_steps,
    warm_start,
)
from .chains import (
    ScalarFunction,
    Trace,
    TransitionKernel,
    counting_kernel,
    identity_kernel,
    indicator_function,
    lazify,
    lift_to_trace_average,
    make_cycle,
    make_cycle_function,
    make_two_state_uniform,
    matrix_kernel,
    mod_partition,
    project_chain,
    project_function,
    run_trace,
    tensor_product,
    trace_chain,
)
from .coloring import (
    CountResult,
    Graph,
    brute_force_count,
    build_phase_sequence,
    ergodicity_floor,
    exact_glauber_matrix,
    exact_phase_ratios,
    glauber_kernel,
    glauber_step,
    greedy_coloring,
    is_proper,
    jvv_count,
    restricted_glauber_step,
)
from .errors import GuardError, NotErgodicError, StatisticalFailure
from .estimators import (
    ConcentrationParams,
    PairedEvaluations,
    bernstein_radius,
    bernstein_sample_complexity,
    empirical_mean,
    hoeffding_sample_complexity,
    static_estimate,
    two_chain_variance,
    variance_upper_bound,
)
from .planted import PartitionedGraph, PlantedParams, ZetaEstimate, cut_set, generate, zeta_estimate
from .spectral import (
    SandwichVerdict,
    SpectralSummary,
    VarianceProfile,
    autocovariance,
    check_sandwich,
    cycle_separation_profile,
    exact_trace_variance,
    summarize,
)

__version__ = "0.1.0"
