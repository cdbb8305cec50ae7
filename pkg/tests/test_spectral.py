import numpy as np
import pytest

import dynamite as dm
from dynamite.errors import NotErgodicError

from _oracles import (
    enumerate_autocovariance,
    enumerate_trace_variance,
    stationary_nullspace,
)

RANK_ONE = np.array([[0.3, 0.7], [0.3, 0.7]])


class TestSummarize:
    def test_cycle_stationary_is_uniform(self):
        s = dm.summarize(dm.make_cycle(4), dm.make_cycle_function(4, 1))
        assert np.allclose(s.stationary, 0.25, atol=1e-12)
        assert s.pi_min == pytest.approx(0.25, abs=1e-12)

    def test_single_state_chain_rejected(self):
        with pytest.raises(NotErgodicError):
            dm.summarize(np.array([[1.0]]), np.array([0.0]))

    def test_periodic_chain_rejected(self):
        with pytest.raises(NotErgodicError):
            dm.summarize(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.0, 1.0]))

    def test_reducible_chain_rejected(self):
        with pytest.raises(NotErgodicError):
            dm.summarize(np.eye(3), np.arange(3.0))

    def test_two_state_uniform(self):
        s = dm.summarize(dm.make_two_state_uniform(), dm.indicator_function([1]))
        assert s.second_eigenvalue == pytest.approx(0.0, abs=1e-12)
        assert s.relaxation_time == pytest.approx(1.0, abs=1e-12)
        assert s.mean == pytest.approx(0.5)
        assert s.stationary_variance == pytest.approx(0.25)

    def test_second_eigenvalue_matches_known_cycle_value(self):
        for n in (4, 8, 16):
            s = dm.summarize(dm.make_cycle(n), dm.make_cycle_function(n, 1))
            assert s.second_eigenvalue == pytest.approx(np.cos(np.pi / n) ** 2, abs=1e-12)

    def test_stationary_is_fixed_point_on_registry(self, registry):
        for name, kernel, f in registry:
            s = dm.summarize(kernel, f)
            assert np.max(np.abs(s.stationary @ kernel.matrix - s.stationary)) < 1e-9, name
            assert s.stationary_variance <= f.value_range ** 2 / 4 + 1e-12


class TestAutocovariance:
    def test_rank_one_chain_has_no_memory(self):
        f = np.array([0.0, 1.0])
        for lag in range(1, 6):
            assert dm.autocovariance(RANK_ONE, f, lag) == pytest.approx(0.0, abs=1e-14)

    def test_constant_function(self):
        f = np.full(4, 0.7)
        assert dm.autocovariance(dm.make_cycle(4).matrix, f, 3) == pytest.approx(0.0, abs=1e-14)

    def test_matches_path_enumeration(self):
        kernel = dm.make_cycle(4)
        f = dm.indicator_function([1, 2])
        fvals = f.values(np.arange(4))
        pi = stationary_nullspace(kernel.matrix)
        for lag in (1, 2, 3):
            expected = enumerate_autocovariance(kernel.matrix, pi, fvals, lag)
            assert dm.autocovariance(kernel, f, lag) == pytest.approx(expected, abs=1e-12)

    def test_decay_bound_on_registry(self, registry):
        for name, kernel, f in registry:
            s = dm.summarize(kernel, f)
            for lag in range(1, 21):
                c = dm.autocovariance(kernel, f, lag, summary=s)
                bound = s.second_eigenvalue ** lag * s.stationary_variance
                assert c <= bound + 1e-10, (name, lag)
                assert c >= -1e-10, (name, lag)  # lazy chains have nonnegative memory


class TestExactTraceVariance:
    def test_horizon_one_is_stationary_variance(self, registry):
        for name, kernel, f in registry:
            s = dm.summarize(kernel, f)
            prof = dm.exact_trace_variance(kernel, f, 1, summary=s)
            assert prof.trace_variance == pytest.approx(s.stationary_variance, abs=1e-14), name

    def test_rank_one_chain_scales_like_independence(self):
        f = np.array([0.0, 1.0])
        s = dm.summarize(RANK_ONE, f)
        for horizon in (2, 5, 17):
            prof = dm.exact_trace_variance(RANK_ONE, f, horizon, summary=s)
            assert prof.trace_variance == pytest.approx(s.stationary_variance / horizon, abs=1e-13)

    def test_matches_exhaustive_enumeration(self):
        kernel = dm.make_cycle(4)
        f = dm.indicator_function([1, 2])
        fvals = f.values(np.arange(4))
        s = dm.summarize(kernel, f)
        expected = enumerate_trace_variance(kernel.matrix, s.stationary, fvals, 3, mean=s.mean)
        got = dm.exact_trace_variance(kernel, f, 3, summary=s).trace_variance
        assert got == pytest.approx(expected, abs=1e-12)

    def test_oracle_consistency_on_small_state_spaces(self, registry):
        for name, kernel, f in registry:
            n = kernel.matrix.shape[0]
            s = dm.summarize(kernel, f)
            fvals = f.values(np.arange(n))
            for horizon in (2, 3, 4):
                if n ** horizon > 100_000:
                    continue
                expected = enumerate_trace_variance(kernel.matrix, s.stationary, fvals, horizon, mean=s.mean)
                got = dm.exact_trace_variance(kernel, f, horizon, summary=s).trace_variance
                assert got == pytest.approx(expected, abs=1e-12), (name, horizon)


class TestSandwich:
    def test_rank_one_lower_bound_tight(self):
        f = np.array([0.0, 1.0])
        verdict = dm.check_sandwich(RANK_ONE, f, 8)
        assert verdict.passed
        assert verdict.trace_variance == pytest.approx(verdict.lower, abs=1e-13)

    def test_cycle8_easy_and_hard_functions(self):
        kernel = dm.make_cycle(8)
        easy = dm.check_sandwich(kernel, dm.make_cycle_function(8, 1), 64)
        hard = dm.check_sandwich(kernel, dm.make_cycle_function(8, 4), 64)
        assert easy.passed and hard.passed
        # the widest block sits near the top of the sandwich, the parity one at the bottom
        assert hard.trace_variance > 9 * easy.trace_variance

    def test_rejects_nonlazy_kernel(self):
        skewed = dm.matrix_kernel(RANK_ONE, "skew", is_reversible=True)
        with pytest.raises(ValueError, match="lazy"):
            dm.check_sandwich(skewed, np.array([0.0, 1.0]), 4)


class TestMonotoneCumulativeVariance:
    def test_t_times_vt_nondecreasing(self, registry):
        for name, kernel, f in registry:
            s = dm.summarize(kernel, f)
            previous = 0.0
            for horizon in range(1, 65):
                v = dm.exact_trace_variance(kernel, f, horizon, summary=s).trace_variance
                assert horizon * v >= previous - 1e-10, (name, horizon)
                previous = horizon * v


class TestCycleSeparation:
    def test_ordering_at_n8(self):
        rows = dict(dm.cycle_separation_profile(8, 64))
        assert set(rows) == {1, 2, 4}
        assert rows[1] < rows[2] < rows[4]

    def test_eightfold_separation_at_n16(self):
        rows = dict(dm.cycle_separation_profile(16, 256))
        assert rows[8] / rows[1] >= 8.0

    def test_horizon_one_collapses_to_quarter(self):
        rows = dict(dm.cycle_separation_profile(4, 1))
        assert set(rows) == {1, 2}
        for v in rows.values():
            assert v == pytest.approx(0.25, abs=1e-12)


class TestProjectionConsistency:
    def test_trace_variance_survives_lumping(self):
        for n, i in ((8, 1), (8, 2), (16, 2), (16, 4)):
            kernel = dm.make_cycle(n)
            f = dm.make_cycle_function(n, i)
            blocks = dm.mod_partition(n, 2 * i)
            projected = dm.project_chain(kernel, blocks)
            induced = dm.project_function(f, blocks)
            for horizon in (1, 8, 32):
                full = dm.exact_trace_variance(kernel, f, horizon).trace_variance
                lumped = dm.exact_trace_variance(projected, induced, horizon).trace_variance
                assert full == pytest.approx(lumped, abs=1e-10), (n, i, horizon)
