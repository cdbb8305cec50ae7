"""Adaptive mean estimation with a doubling schedule over paired chains.

Three entry points, layered:

* ``mcmc_pro`` runs two independent copies of a chain on a fixed doubling
  schedule, maintains the paired-chain variance estimate with its upper
  confidence bound, and stops at the first iteration whose data-dependent
  Bernstein radius meets the target.
* ``dynamite`` lifts the problem onto a trace chain whose relaxation time is
  at most 2 (trace length T = ceil((1+L)/(1-L) ln sqrt 2)), averaging f along
  traces so the estimator tracks the inter-trace variance instead of the
  stationary variance.
* ``warm_start`` starts from an arbitrary supported state, advances the
  paired chain for a uniform-mixing warm-up, then runs ``dynamite`` with the
  failure budget tightened to delta/4 as the nonstationarity correction.

Samples are cumulative: chains are extended across iterations, never
restarted, so the total cost is the final schedule size, not its sum.
"""
from __future__ import annotations

import dataclasses
import math
import time
from typing import Optional

import numpy as np

from .chains import ScalarFunction, TransitionKernel, _pad_trace, lift_to_trace_average, trace_chain
from .estimators import (
    ConcentrationParams,
    PairedEvaluations,
    bernstein_radius,
    empirical_mean,
    two_chain_variance,
    variance_upper_bound,
)
from .rng import CHAIN_A, CHAIN_B, WARMUP, stream

LN_SQRT2 = math.log(math.sqrt(2.0))
_CEIL_NUDGE = 1e-9  # keep exact integer boundaries (e.g. log ratios) from rounding up

RADIUS_MET = "radius-met"
SCHEDULE_EXHAUSTED = "schedule-exhausted"
DEGENERATE_RANGE = "degenerate-range"


@dataclasses.dataclass(frozen=True)
class Schedule:
    """Doubling sample schedule with its shared per-bound failure budget."""

    iterations: int
    base_size: float
    sizes: tuple
    delta_prime: float

    def __post_init__(self):
        if len(self.sizes) != self.iterations:
            raise ValueError("schedule size list must have exactly `iterations` entries")
        for a, b in zip(self.sizes, self.sizes[1:]):
            if b <= a:
                raise ValueError(f"schedule sizes must strictly increase, got {self.sizes}")
            if b > 2 * a + 1:
                raise ValueError(f"schedule sizes must at most double (plus ceiling slack), got {self.sizes}")


def build_schedule(value_range: float, epsilon: float, lambda_bound: float, delta: float) -> Schedule:
    """Compute I, alpha, and the sizes m_i = ceil(alpha 2^i) for the run.

    I = max(1, floor(log2(R / 2 eps))) iterations suffice because the ratio of
    the worst-case range-based size to the best-case variance-free size is
    R / 2 eps with all log factors cancelling; alpha is the best-case size
    (1 + L) R ln(3I/delta) / ((1 - L) eps) and each bound instance spends
    delta' = delta / 3I of the failure budget.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 <= lambda_bound < 1.0:
        raise ValueError(f"lambda bound must lie in [0, 1), got {lambda_bound}")
    if value_range <= 0:
        raise ValueError("schedule needs a positive range; degenerate functions return immediately")
    iterations = max(1, math.floor(math.log2(value_range / (2 * epsilon))))
    alpha = (1 + lambda_bound) * value_range * math.log(3 * iterations / delta) / ((1 - lambda_bound) * epsilon)
    sizes = tuple(int(math.ceil(alpha * 2 ** i)) for i in range(1, iterations + 1))
    return Schedule(
        iterations=iterations,
        base_size=alpha,
        sizes=sizes,
        delta_prime=delta / (3 * iterations),
    )


@dataclasses.dataclass(frozen=True)
class IterationRecord:
    m: int
    mean: float
    variance: float
    variance_bound: float
    radius: float

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "mean": self.mean,
            "variance": self.variance,
            "variance_bound": self.variance_bound,
            "radius": self.radius,
        }


@dataclasses.dataclass(frozen=True)
class EstimateReport:
    """Full audit trail of one adaptive run.

    ``total_base_steps`` counts both paired chains and, for trace-chain runs,
    the T-fold expansion of every trace sample, plus any warm-up steps.
    ``duration_seconds`` is informational only and excluded from equality and
    from the JSON rendering so reruns are reproducible byte for byte.
    """

    estimate: float
    iterations: tuple
    total_base_steps: int
    warmup_steps: int
    termination: str
    seed: int
    epsilon: float
    delta: float
    lambda_bound: float
    trace_length: int
    function_range: tuple
    schedule: Optional[Schedule]
    duration_seconds: float = dataclasses.field(compare=False, default=0.0)

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate,
            "termination": self.termination,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "lambda_bound": self.lambda_bound,
            "trace_length": self.trace_length,
            "function_range": list(self.function_range),
            "total_base_steps": self.total_base_steps,
            "warmup_steps": self.warmup_steps,
            "schedule": None
            if self.schedule is None
            else {
                "iterations": self.schedule.iterations,
                "base_size": self.schedule.base_size,
                "sizes": list(self.schedule.sizes),
                "delta_prime": self.schedule.delta_prime,
            },
            "iterations": [rec.to_json() for rec in self.iterations],
        }


def _degenerate_report(f, seed, epsilon, delta, lambda_bound, trace_length, warmup_steps):
    return EstimateReport(
        estimate=float(f.lo),
        iterations=(),
        total_base_steps=warmup_steps,
        warmup_steps=warmup_steps,
        termination=DEGENERATE_RANGE,
        seed=seed,
        epsilon=epsilon,
        delta=delta,
        lambda_bound=lambda_bound,
        trace_length=trace_length,
        function_range=(f.lo, f.hi),
        schedule=None,
    )


def mcmc_pro(
    initial_pair,
    kernel: TransitionKernel,
    lambda_bound: float,
    f: ScalarFunction,
    epsilon: float,
    delta: float,
    seed: int,
    *,
    _warmup_steps: int = 0,
    _trace_length: int = 1,
) -> EstimateReport:
    """Progressive paired-chain estimation with a variance-adaptive stopping rule.

    The initial pair must be drawn from the stationary law of the paired chain
    (``warm_start`` discharges that contract) and ``lambda_bound`` must upper
    bound the kernel's second absolute eigenvalue.  Returns the running mean at
    the first iteration whose radius meets ``epsilon``, or at the last
    scheduled iteration regardless.
    """
    started = time.perf_counter()
    if f.value_range == 0:
        return _degenerate_report(f, seed, epsilon, delta, lambda_bound, _trace_length, _warmup_steps)
    schedule = build_schedule(f.value_range, epsilon, lambda_bound, delta)
    rng_a = stream(seed, CHAIN_A)
    rng_b = stream(seed, CHAIN_B)
    state_a, state_b = initial_pair
    kernel.check_start(state_a)
    kernel.check_start(state_b)

    chunks_a, chunks_b = [], []
    records = []
    termination = SCHEDULE_EXHAUSTED
    previous = 0
    for i, m_i in enumerate(schedule.sizes, start=1):
        grow = m_i - previous
        path_a = kernel.path(state_a, grow, rng_a)
        path_b = kernel.path(state_b, grow, rng_b)
        state_a = path_a[-1]
        state_b = path_b[-1]
        chunks_a.append(f.values(path_a))
        chunks_b.append(f.values(path_b))
        previous = m_i

        paired = PairedEvaluations(
            np.concatenate(chunks_a), np.concatenate(chunks_b), stream_a=CHAIN_A, stream_b=CHAIN_B
        )
        params = ConcentrationParams(
            lambda_bound=lambda_bound,
            value_range=f.value_range,
            delta_prime=schedule.delta_prime,
            m=m_i,
        )
        mean_i = empirical_mean(paired)
        var_i = two_chain_variance(paired)
        bound_i = variance_upper_bound(var_i, params)
        radius_i = bernstein_radius(bound_i, params)
        records.append(IterationRecord(m=m_i, mean=mean_i, variance=var_i, variance_bound=bound_i, radius=radius_i))
        if radius_i <= epsilon:
            termination = RADIUS_MET
            break

    last = records[-1]
    return EstimateReport(
        estimate=last.mean,
        iterations=tuple(records),
        total_base_steps=_warmup_steps + 2 * last.m * kernel.base_steps_per_step,
        warmup_steps=_warmup_steps,
        termination=termination,
        seed=seed,
        epsilon=epsilon,
        delta=delta,
        lambda_bound=lambda_bound,
        trace_length=_trace_length,
        function_range=(f.lo, f.hi),
        schedule=schedule,
        duration_seconds=time.perf_counter() - started,
    )


def select_trace_length(lambda_bound: float) -> int:
    """Trace length making the trace chain's relaxation time at most 2."""
    if not 0.0 <= lambda_bound < 1.0:
        raise ValueError(f"lambda bound must lie in [0, 1), got {lambda_bound}")
    return max(1, math.ceil((1 + lambda_bound) / (1 - lambda_bound) * LN_SQRT2 - _CEIL_NUDGE))


def dynamite(
    initial_pair,
    kernel: TransitionKernel,
    lambda_bound: float,
    f: ScalarFunction,
    epsilon: float,
    delta: float,
    seed: int,
    *,
    _warmup_steps: int = 0,
) -> EstimateReport:
    """Trace-chain wrapper: average f along length-T traces, then run mcmc_pro.

    The initial pair must be stationary for the base chain and the chain must
    be lazy.  The trace states are padded with copies of the provided samples;
    the padding never enters any estimate because the first trace-chain step
    regenerates the whole trace from the last coordinate.  The eigenvalue
    bound handed down is lambda_bound**T, which is conservative for the trace
    chain.  With lambda_bound == 0 the trace length degenerates to 1 and this
    is exactly mcmc_pro on the base chain.
    """
    if not kernel.is_lazy:
        raise ValueError(f"trace averaging needs a lazy chain, got {kernel.name!r}")
    t = select_trace_length(lambda_bound)
    x0, x1 = initial_pair
    traced = trace_chain(kernel, t)
    report = mcmc_pro(
        (_pad_trace(x0, t), _pad_trace(x1, t)),
        traced,
        lambda_bound ** t,
        lift_to_trace_average(f, t),
        epsilon,
        delta,
        seed,
        _warmup_steps=_warmup_steps,
        _trace_length=t,
    )
    return report


def uniform_mixing_steps(lambda_bound: float, pi_min: float) -> int:
    """Warm-up length ceil(ln(1/pi_min) / ln(1/Lambda)); zero when Lambda == 0."""
    if not 0.0 < pi_min <= 1.0:
        raise ValueError(f"pi_min must lie in (0, 1], got {pi_min}")
    if lambda_bound == 0.0 or pi_min == 1.0:
        return 0
    return math.ceil(math.log(1.0 / pi_min) / math.log(1.0 / lambda_bound) - _CEIL_NUDGE)


def warm_start(
    start,
    kernel: TransitionKernel,
    lambda_bound: float,
    pi_min: float,
    f: ScalarFunction,
    epsilon: float,
    delta: float,
    seed: int,
) -> EstimateReport:
    """Nonstationary start: warm the paired chain up, then run the trace-chain stack.

    ``pi_min`` must lower bound the minimum stationary probability; after
    tau_unif = ceil(ln(1/pi_min)/ln(1/Lambda)) paired steps from (start, start)
    the run proceeds with failure budget delta/4, absorbing the residual
    nonstationarity.  Warm-up steps are charged to the report.
    """
    if not (kernel.is_lazy and kernel.is_reversible):
        raise ValueError(f"warm start needs a lazy reversible chain, got {kernel.name!r}")
    kernel.check_start(start)
    tau_unif = uniform_mixing_steps(lambda_bound, pi_min)
    x0, x1 = start, start
    if tau_unif > 0:
        rng_w = stream(seed, WARMUP)
        path0 = kernel.path(x0, tau_unif, rng_w)
        path1 = kernel.path(x1, tau_unif, rng_w)
        x0, x1 = path0[-1], path1[-1]
    return dynamite(
        (x0, x1),
        kernel,
        lambda_bound,
        f,
        epsilon,
        delta / 4.0,
        seed,
        _warmup_steps=2 * tau_unif * kernel.base_steps_per_step,
    )
