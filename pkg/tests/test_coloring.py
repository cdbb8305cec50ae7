import json
import math
from fractions import Fraction

import numpy as np
import pytest

import dynamite as dm
from dynamite.coloring import apply_single_site, enumerate_colorings, render_decimal
from dynamite.errors import GuardError, StatisticalFailure

TRIANGLE = dm.Graph(3, ((0, 1), (1, 2), (0, 2)))
PATH3 = dm.Graph(3, ((0, 1), (1, 2)))
C4 = dm.Graph(4, ((0, 1), (1, 2), (2, 3), (3, 0)))
TWO_TRIANGLES = dm.Graph(6, ((0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)))


class TestGraph:
    def test_rejects_self_loops_and_range(self):
        with pytest.raises(ValueError, match="self-loop"):
            dm.Graph(3, ((1, 1),))
        with pytest.raises(ValueError, match="outside"):
            dm.Graph(3, ((0, 3),))

    def test_deduplicates_and_symmetrises(self):
        g = dm.Graph(3, ((1, 0), (0, 1), (1, 2)))
        assert g.edges == ((0, 1), (1, 2))
        assert g.adjacency[1] == (0, 2)

    def test_degree_and_degeneracy(self):
        assert C4.d_max == 2 and C4.degeneracy() == 2
        assert PATH3.d_max == 2 and PATH3.degeneracy() == 1
        assert dm.Graph(4, ((0, 1), (0, 2), (0, 3))).d_max == 3
        assert dm.Graph(4, ((0, 1), (0, 2), (0, 3))).degeneracy() == 1

    def test_json_roundtrip(self):
        payload = C4.to_json()
        assert payload == {"n": 4, "edges": [[0, 1], [1, 2], [2, 3], [0, 3]]}
        assert dm.Graph.from_json(json.loads(json.dumps(payload))) == C4


class TestIsProper:
    def test_triangle_cases(self):
        assert dm.is_proper(TRIANGLE, [1, 2, 3])
        assert not dm.is_proper(TRIANGLE, [1, 1, 2])

    def test_empty_graph(self):
        assert dm.is_proper(dm.Graph(3, ()), [1, 1, 1])

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="assign"):
            dm.is_proper(TRIANGLE, [1, 2])
        with pytest.raises(ValueError, match="exceeds"):
            dm.is_proper(TRIANGLE, [1, 2, 5], k=4)


class TestGlauberStep:
    def test_blocked_and_noop_moves(self):
        path2 = dm.Graph(2, ((0, 1),))
        # neighbour already wears color 2: the move is blocked
        assert np.array_equal(apply_single_site(path2, np.array([1, 2]), 0, 2), [1, 2])
        # recoloring to one's own color holds as well
        assert np.array_equal(apply_single_site(path2, np.array([1, 2]), 0, 1), [1, 2])
        # a free color moves
        assert np.array_equal(apply_single_site(path2, np.array([1, 2]), 0, 3), [3, 2])

    def test_rejects_improper_input(self):
        with pytest.raises(ValueError, match="proper"):
            dm.glauber_step(TRIANGLE, 3, [1, 1, 2], rng=0)

    def test_empirical_row_matches_exact_kernel(self):
        path2 = dm.Graph(2, ((0, 1),))
        states, matrix = dm.exact_glauber_matrix(path2, 3, lazy=False)
        row = matrix[states.index((1, 2))]
        rng = np.random.default_rng(123)
        counts = {s: 0 for s in states}
        trials = 100_000
        for _ in range(trials):
            nxt = tuple(int(c) for c in dm.glauber_step(path2, 3, [1, 2], rng))
            counts[nxt] += 1
        for idx, state in enumerate(states):
            assert abs(counts[state] / trials - row[idx]) < 0.01, state

    def test_properness_preserved_under_fuzz(self):
        g = dm.Graph(8, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4), (2, 6)))
        k = g.d_max + 2
        kernel = dm.glauber_kernel(g, k, lazy=False)
        start = dm.greedy_coloring(g, k)
        path = kernel.path(start, 1_000_000, np.random.default_rng(0))
        for u, v in g.edges:
            assert np.all(path[:, u] != path[:, v])
        assert path.min() >= 1 and path.max() <= k


class TestRestrictedGlauber:
    def test_full_subset_couples_exactly(self):
        for seed in range(20):
            a = dm.glauber_step(C4, 4, [1, 2, 1, 2], rng=seed)
            b = dm.restricted_glauber_step(C4, 4, range(4), [1, 2, 1, 2], rng=seed)
            assert np.array_equal(a, b)

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            dm.restricted_glauber_step(C4, 4, (), [1, 2, 1, 2], rng=0)

    def test_frozen_outside_subset(self):
        coloring = np.array([1, 2, 3, 1, 2, 3])
        rng = np.random.default_rng(5)
        state = coloring
        for _ in range(10_000):
            state = dm.restricted_glauber_step(TWO_TRIANGLES, 4, (0, 1, 2), state, rng)
        assert np.array_equal(state[3:], [1, 2, 3])

    def test_component_law_matches_full_chain_by_replay(self):
        # on a disconnected graph the full chain restricted to one component
        # is exactly the restricted chain when coupled on the same draws
        full = np.array([1, 2, 3, 1, 2, 3])
        restricted = full.copy()
        for seed in range(2000):
            full = dm.glauber_step(TWO_TRIANGLES, 4, full, rng=seed)
            restricted = dm.restricted_glauber_step(TWO_TRIANGLES, 4, (0, 1, 2), restricted, rng=seed)
            assert np.array_equal(full[:3], restricted[:3])


class TestExactKernel:
    def test_reversibility_wrt_uniform(self):
        for graph, k in ((PATH3, 3), (dm.Graph(2, ((0, 1),)), 3), (C4, 3)):
            states, matrix = dm.exact_glauber_matrix(graph, k, lazy=True)
            assert len(states) == dm.brute_force_count(graph, k)
            # uniform stationary law makes detailed balance plain symmetry
            assert np.max(np.abs(matrix - matrix.T)) < 1e-12
            assert np.allclose(matrix.sum(axis=1), 1.0, atol=1e-12)


class TestBruteForce:
    def test_known_counts(self):
        assert dm.brute_force_count(TRIANGLE, 3) == 6
        assert dm.brute_force_count(PATH3, 3) == 3 * 2 * 2
        assert dm.brute_force_count(C4, 3) == 18
        assert dm.brute_force_count(C4, 3) == (3 - 1) ** 4 + (3 - 1)

    def test_enumeration_agrees_with_count(self):
        assert len(list(enumerate_colorings(C4, 3))) == 18

    def test_guard(self):
        with pytest.raises(GuardError, match="guarded"):
            dm.brute_force_count(dm.Graph(40, ()), 3)


class TestPhaseSequence:
    def test_edgeless_graph_has_no_phases(self):
        assert dm.build_phase_sequence(dm.Graph(5, ())) == []

    def test_single_edge(self):
        phases = dm.build_phase_sequence(dm.Graph(2, ((0, 1),)))
        assert len(phases) == 1
        assert phases[0].sampling_graph.edges == ()
        assert phases[0].edge == (0, 1)

    def test_triangle_growth(self):
        phases = dm.build_phase_sequence(TRIANGLE)
        sizes = [len(p.sampling_graph.edges) for p in phases]
        assert sizes == [0, 1, 2]

    def test_shuffle_is_seeded(self):
        a = dm.build_phase_sequence(C4, rng=7)
        b = dm.build_phase_sequence(C4, rng=7)
        assert [p.edge for p in a] == [p.edge for p in b]

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError, match="permutation"):
            dm.build_phase_sequence(C4, edge_order=[(0, 1)])


class TestTelescoping:
    @pytest.mark.parametrize("graph,k", [(TRIANGLE, 3), (PATH3, 3), (C4, 3)])
    def test_exact_ratios_telescope(self, graph, k):
        ratios = dm.exact_phase_ratios(graph, k)
        product = Fraction(k ** graph.n)
        for r in ratios:
            product *= r
        assert product == dm.brute_force_count(graph, k)

    def test_phase_mean_equals_count_ratio(self):
        for phase in dm.build_phase_sequence(C4):
            hits = 0
            total = 0
            for coloring in enumerate_colorings(phase.sampling_graph, 3):
                total += 1
                hits += int(coloring[phase.edge[0]] != coloring[phase.edge[1]])
            with_edge = dm.Graph(4, phase.sampling_graph.edges + (phase.edge,))
            assert Fraction(hits, total) == Fraction(
                dm.brute_force_count(with_edge, 3), dm.brute_force_count(phase.sampling_graph, 3)
            )


class TestErgodicityFloor:
    def test_floor_values(self):
        assert dm.ergodicity_floor(C4) == 3
        assert dm.ergodicity_floor(dm.Graph(2, ((0, 1),))) == 2
        assert dm.ergodicity_floor(TWO_TRIANGLES) == 4
        assert dm.ergodicity_floor(TRIANGLE) == 3

    def test_pipeline_refuses_below_floor(self):
        with pytest.raises(GuardError, match="ergodicity floor"):
            dm.jvv_count(TWO_TRIANGLES, 3, 0.25, 0.25, seed=0)
        with pytest.raises(GuardError, match="ergodicity floor"):
            dm.jvv_count(TRIANGLE, 2, 0.25, 0.25, seed=0)


class TestJvvCount:
    def test_edgeless_graph_counts_exactly(self):
        result = dm.jvv_count(dm.Graph(3, ()), 3, 0.25, 0.25, seed=0)
        assert result.total_steps == 0
        assert result.estimate == "27"
        assert math.exp(result.log_count) == pytest.approx(27.0)

    def test_single_edge_quick_envelope(self):
        hits = 0
        for seed in range(10):
            result = dm.jvv_count(dm.Graph(2, ((0, 1),)), 2, 0.25, 0.25, seed=seed)
            hits += abs(math.exp(result.log_count) - 2.0) / 2.0 <= 0.3
        assert hits >= 9

    def test_static_estimator_variant(self):
        result = dm.jvv_count(dm.Graph(2, ((0, 1),)), 2, 0.25, 0.25, estimator="static-hoeffding", seed=1)
        assert result.estimator == "static-hoeffding"
        assert abs(math.exp(result.log_count) - 2.0) / 2.0 <= 0.3
        assert result.phases[0].report is None

    def test_lambda_default_disclosed(self):
        result = dm.jvv_count(dm.Graph(2, ((0, 1),)), 2, 0.25, 0.25, seed=0)
        assert result.lambda_defaulted
        explicit = dm.jvv_count(dm.Graph(2, ((0, 1),)), 2, 0.25, 0.25, seed=0, lambda_bound=0.875)
        assert not explicit.lambda_defaulted
        assert explicit.lambda_bound == pytest.approx(0.9375)  # lazified

    def test_nonpositive_ratio_aborts(self, monkeypatch):
        import dynamite.coloring as coloring_mod

        def fake_warm_start(*args, **kwargs):
            real = dm.warm_start(*args, **kwargs)
            object.__setattr__(real, "estimate", 0.0)
            return real

        monkeypatch.setattr(coloring_mod, "warm_start", fake_warm_start)
        with pytest.raises(StatisticalFailure, match="ratio"):
            dm.jvv_count(dm.Graph(2, ((0, 1),)), 2, 0.25, 0.25, seed=0)

    def test_log_space_rendering_reproduces_linear(self):
        result = dm.jvv_count(C4, 3, 0.25, 0.25, seed=3)
        linear = math.exp(result.log_count)
        assert abs(float(result.estimate) - linear) / linear < 1e-9


class TestRenderDecimal:
    def test_small_counts_render_plainly(self):
        assert render_decimal(math.log(18.0)) == "18"
        assert render_decimal(-math.inf) == "0"

    def test_huge_counts_render_scientifically(self):
        log_count = 1000 * math.log(7)  # 7^1000
        text = render_decimal(log_count)
        mantissa, exponent = text.split("e+")
        assert int(exponent) == math.floor(1000 * math.log10(7))
        assert 1.0 <= float(mantissa) < 10.0


class TestGreedyColoring:
    def test_produces_proper_colorings(self):
        for graph, k in ((C4, 3), (TWO_TRIANGLES, 4), (PATH3, 3)):
            coloring = dm.greedy_coloring(graph, k)
            assert dm.is_proper(graph, coloring, k)

    def test_fails_loudly_when_colors_run_out(self):
        with pytest.raises(GuardError, match="greedy"):
            dm.greedy_coloring(TRIANGLE, 2)
