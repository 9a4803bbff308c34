import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubitbath.analytic import (
    blp_analytic,
    coherence_factor,
    dephasing_rate,
    increase_intervals,
)
from qubitbath.errors import SingularMapError, ValidationError
from qubitbath.lindblad import ModelParams, TimeGrid, build_generator, evolve_expm
from qubitbath.markovianity import (
    DivisibilityVerdict,
    OPTIMAL_PAIR,
    QubitState,
    StatePair,
    _diag_choi_min_eigenvalues,
    assess_markovianity,
    blp_numeric,
    choi_matrix,
    choi_min_eigenvalue,
    cp_divisibility_witness,
    density_trace_distance,
    detect_increase_segments,
    evolved_trace_distance,
    intermediate_map,
    system_map,
    threshold_scan,
    trace_distance,
)
from qubitbath.operator_space import (
    coherence4_to_bloch,
    initial_joint_vector,
    partial_trace_bath,
)

ball_coords = st.floats(-0.577, 0.577, allow_nan=False)


def random_states(draw_tuple):
    return QubitState(*draw_tuple)


class TestQubitState:
    def test_rejects_bloch_norm_above_one(self):
        with pytest.raises(ValidationError):
            QubitState(1.0, 1.0, 0.0)

    def test_density_matrix(self):
        rho = QubitState(0.0, 0.0, 1.0).density()
        assert np.allclose(rho, np.diag([1.0, 0.0]))

    def test_pair_deltas(self):
        pair = StatePair(QubitState(0.1, 0.2, 0.3), QubitState(-0.1, 0.0, 0.5))
        assert (pair.dx, pair.dy, pair.dz) == pytest.approx((0.2, 0.2, -0.2))


class TestSystemMap:
    def test_identity_at_zero(self):
        assert np.array_equal(system_map(ModelParams(1, 4), 0.0), np.eye(4))

    def test_critical_diagonal(self):
        params = ModelParams(1.0, 8.0)
        t = 1.7
        c = math.exp(-2 * t) * (1 + 2 * t)
        assert np.allclose(system_map(params, t), np.diag([1, 1, c, c]), atol=1e-14)

    @pytest.mark.parametrize("params", [ModelParams(1, 16), ModelParams(1, 8), ModelParams(1, 4)])
    def test_agrees_with_joint_propagation(self, params):
        # oracle: trace the full 16-dimensional propagation for random states
        rng = np.random.default_rng(7)
        gen = build_generator(params)
        for _ in range(20):
            bloch = rng.uniform(-1, 1, 3)
            bloch /= max(1.0, np.linalg.norm(bloch) / 0.99)
            t = float(rng.uniform(0.0, 6.0))
            joint = evolve_expm(gen, initial_joint_vector(bloch), t)
            traced = coherence4_to_bloch(partial_trace_bath(joint))
            mapped = system_map(params, t) @ np.array(
                [0.5, 0.5 * bloch[0], 0.5 * bloch[1], 0.5 * bloch[2]]
            )
            assert traced == pytest.approx(coherence4_to_bloch(mapped), abs=1e-8)


class TestIntermediateMap:
    def test_identity_when_endpoints_coincide(self):
        assert np.array_equal(intermediate_map(ModelParams(1, 4), 1.0, 1.0), np.eye(4))

    def test_reduces_to_system_map_from_zero(self):
        params = ModelParams(1.0, 5.0)
        assert np.allclose(
            intermediate_map(params, 0.0, 2.0), system_map(params, 2.0), atol=1e-14
        )

    def test_composition_identity(self):
        params = ModelParams(1.0, 4.0)
        s, u = 0.6, 1.1
        composed = intermediate_map(params, s, u) @ intermediate_map(params, 0.0, s)
        assert np.abs(composed - system_map(params, u)).max() <= 1e-12

    def test_singular_at_coherence_zero(self):
        params = ModelParams(1.0, 4.0)
        zero = increase_intervals(params, 1)[0].t_lo
        with pytest.raises(SingularMapError):
            intermediate_map(params, zero, zero + 0.1)

    def test_rejects_unordered_times(self):
        with pytest.raises(ValidationError):
            intermediate_map(ModelParams(1, 4), 2.0, 1.0)


class TestChoi:
    def test_identity_map_eigenvalues(self):
        eigs = np.linalg.eigvalsh(choi_matrix(np.eye(4)))
        assert eigs == pytest.approx([0, 0, 0, 1.0], abs=1e-14)
        assert choi_min_eigenvalue(np.eye(4)) == pytest.approx(0.0, abs=1e-14)

    def test_trace_normalization(self):
        c = choi_matrix(np.diag([1.0, 1.0, 0.4, 0.4]))
        assert np.trace(c).real == pytest.approx(1.0, abs=1e-14)

    def test_expanding_map_is_not_cp(self):
        # eigenvalues derived by hand: {(1+l)/2, (1-l)/2, 0, 0}
        eig = choi_min_eigenvalue(np.diag([1.0, 1.0, 1.1, 1.1]))
        assert eig == pytest.approx(-0.05, abs=1e-14)

    @given(st.floats(0.0, 1.0, allow_nan=False))
    @settings(max_examples=30)
    def test_contracting_map_is_cp(self, lam):
        assert choi_min_eigenvalue(np.diag([1.0, 1.0, lam, lam])) >= -1e-12

    @given(st.floats(-1.0, 1.0, allow_nan=False), st.floats(-1.0, 1.0, allow_nan=False), st.floats(-1.0, 1.0, allow_nan=False))
    @settings(max_examples=40)
    def test_pauli_diagonal_eigenvalue_formula(self, a, b, c):
        eigs = sorted(np.linalg.eigvalsh(choi_matrix(np.diag([1.0, a, b, c]))))
        by_hand = sorted(
            [(1 + a + b + c) / 4, (1 + a - b - c) / 4, (1 - a + b - c) / 4, (1 - a - b + c) / 4]
        )
        assert eigs == pytest.approx(by_hand, abs=1e-12)

    def test_unitary_rotation_is_cp(self):
        theta = 0.7
        rot = np.eye(4)
        rot[1, 1] = rot[2, 2] = math.cos(theta)
        rot[1, 2], rot[2, 1] = -math.sin(theta), math.sin(theta)
        assert choi_min_eigenvalue(rot) >= -1e-12

    def test_rejects_non_trace_preserving(self):
        bad = np.eye(4)
        bad[0, 1] = 0.2
        with pytest.raises(ValidationError):
            choi_matrix(bad)

    @given(st.lists(st.floats(-3.0, 3.0, allow_nan=False), min_size=1, max_size=8))
    @settings(max_examples=25)
    def test_batched_route_matches_scalar(self, ratios):
        batch = _diag_choi_min_eigenvalues(np.array(ratios))
        scalar = [choi_min_eigenvalue(np.diag([1.0, 1.0, r, r])) for r in ratios]
        assert batch == pytest.approx(scalar, abs=1e-12)


class TestDivisibilityWitness:
    def test_markovian_point(self):
        witness = cp_divisibility_witness(ModelParams(1.0, 10.0))
        assert witness.verdict is DivisibilityVerdict.DIVISIBLE
        assert witness.min_choi_eigenvalue >= -1e-10
        assert witness.divisible is True

    def test_boundary_point(self):
        witness = cp_divisibility_witness(ModelParams(1.0, 8.0))
        assert witness.verdict is DivisibilityVerdict.DIVISIBLE

    def test_non_markovian_point_and_offending_window(self):
        params = ModelParams(1.0, 4.0)
        first = increase_intervals(params, 1)[0]
        witness = cp_divisibility_witness(params, horizon=2 * first.t_hi)
        assert witness.verdict is DivisibilityVerdict.NON_DIVISIBLE
        assert witness.divisible is False
        lo, hi = witness.worst_interval
        step = witness.horizon / witness.n_subintervals
        assert first.t_lo - step <= lo and hi <= first.t_hi + step

    def test_short_horizon_is_inconclusive(self):
        params = ModelParams(1.0, 4.0)
        first = increase_intervals(params, 1)[0]
        witness = cp_divisibility_witness(params, horizon=0.5 * first.t_lo)
        assert witness.verdict is DivisibilityVerdict.INCONCLUSIVE
        assert witness.divisible is None

    def test_skips_subintervals_at_zeros(self):
        params = ModelParams(1.0, 0.0)  # zeros of cos(2t) inside the horizon
        zero = increase_intervals(params, 1)[0].t_lo
        times = np.concatenate([[0.0], [zero - 1e-3, zero, zero + 1e-3], [2.0]])
        # hand-built grid hitting the zero exactly: c(zero) < 1e-12 there
        grid_times = np.sort(times)
        c_at_zero = coherence_factor(params, float(zero))
        assert abs(c_at_zero) < 1e-12
        witness = cp_divisibility_witness(
            params, grid=TimeGrid(0.0, float(grid_times[-1]), 5)
        )
        assert witness.verdict is DivisibilityVerdict.NON_DIVISIBLE

    def test_explicit_grid_zero_skip_count(self):
        params = ModelParams(1.0, 0.0)
        zero = increase_intervals(params, 1)[0].t_lo  # pi/4 for these params

        class FixedGrid:
            def times(self):
                return np.array([0.0, zero, math.pi / 2, 2.0])

        witness = cp_divisibility_witness(params, grid=FixedGrid())
        # both windows touching the zero are skipped, the last one is valid
        assert witness.n_skipped == 2
        assert witness.n_subintervals == 3
        # with the violating windows skipped, the remaining evidence reads
        # divisible: the skip policy leaves the decision to adjacent windows
        assert witness.verdict is DivisibilityVerdict.DIVISIBLE

    def test_rate_sign_matches_short_map_choi_sign(self):
        params = ModelParams(1.0, 4.0)
        eps = 1e-4
        for t in (0.4, 1.0, 1.45, 1.7, 2.2):
            rate = dephasing_rate(params, t)
            eig = choi_min_eigenvalue(
                np.diag([1, 1, *(2 * [coherence_factor(params, t + eps) / coherence_factor(params, t)])])
            )
            if rate < -1e-3:
                assert eig < -1e-8
            elif rate > 1e-3:
                assert eig >= -1e-8


class TestTraceDistance:
    def test_identical_states(self):
        s = QubitState(0.3, 0.1, -0.5)
        assert trace_distance(s, s) == 0.0

    def test_antipodal_pure_states(self):
        assert trace_distance(QubitState(0, 0, 1), QubitState(0, 0, -1)) == pytest.approx(1.0)

    def test_orthogonal_axes(self):
        d = trace_distance(QubitState(1, 0, 0), QubitState(0, 1, 0))
        assert d == pytest.approx(math.sqrt(2) / 2, abs=1e-15)

    @given(
        st.tuples(ball_coords, ball_coords, ball_coords),
        st.tuples(ball_coords, ball_coords, ball_coords),
    )
    @settings(max_examples=50)
    def test_bloch_and_eigenvalue_routes_agree(self, b1, b2):
        s1, s2 = QubitState(*b1), QubitState(*b2)
        closed = trace_distance(s1, s2)
        generic = density_trace_distance(s1.density(), s2.density())
        assert closed == pytest.approx(generic, abs=1e-12)


class TestEvolvedTraceDistance:
    def test_initial_value(self):
        pair = StatePair(QubitState(0.5, 0.1, 0.0), QubitState(-0.1, 0.0, 0.3))
        d0 = evolved_trace_distance(ModelParams(1, 4), pair, 0.0)
        assert d0 == pytest.approx(trace_distance(pair.first, pair.second), abs=1e-15)

    def test_antipodal_z_pair_tracks_coherence(self):
        params = ModelParams(1.0, 4.0)
        for t in (0.0, 0.7, 1.5, 3.0):
            d = evolved_trace_distance(params, OPTIMAL_PAIR, t)
            assert d == pytest.approx(abs(coherence_factor(params, t)), abs=1e-14)

    def test_x_only_pair_is_constant(self):
        pair = StatePair(QubitState(0.8, 0, 0), QubitState(-0.6, 0, 0))
        params = ModelParams(1.0, 4.0)
        t = np.linspace(0, 10, 50)
        d = evolved_trace_distance(params, pair, t)
        assert np.abs(d - 0.7).max() <= 1e-14

    @given(
        st.tuples(ball_coords, ball_coords, ball_coords),
        st.tuples(ball_coords, ball_coords, ball_coords),
        st.floats(0.0, 8.0, allow_nan=False),
    )
    @settings(max_examples=40)
    def test_matches_mapped_states(self, b1, b2, t):
        params = ModelParams(1.0, 3.0)
        pair = StatePair(QubitState(*b1), QubitState(*b2))
        c = coherence_factor(params, t)
        mapped1 = QubitState(pair.first.x, c * pair.first.y, c * pair.first.z)
        mapped2 = QubitState(pair.second.x, c * pair.second.y, c * pair.second.z)
        assert evolved_trace_distance(params, pair, t) == pytest.approx(
            trace_distance(mapped1, mapped2), abs=1e-12
        )


class TestIncreaseDetection:
    def test_matches_predicted_windows(self):
        params = ModelParams(1.0, 4.0)
        predicted = increase_intervals(params, 3)
        horizon = predicted[-1].t_hi + 0.3
        detected = detect_increase_segments(params, horizon)
        assert len(detected) == 3
        for (lo, hi), window in zip(detected, predicted):
            assert lo == pytest.approx(window.t_lo, abs=1e-8)
            assert hi == pytest.approx(window.t_hi, abs=1e-8)

    def test_no_windows_when_markovian(self):
        assert detect_increase_segments(ModelParams(1.0, 9.0), 20.0) == []
        assert detect_increase_segments(ModelParams(1.0, 8.0), 20.0) == []


class TestBlpNumeric:
    def test_zero_at_and_above_threshold(self):
        assert blp_numeric(ModelParams(1.0, 8.0), n_pairs=2).value == 0.0
        assert blp_numeric(ModelParams(1.0, 12.0), n_pairs=2).value == 0.0

    def test_matches_analytic(self):
        params = ModelParams(1.0, 4.0)
        result = blp_numeric(params, n_pairs=8, seed=3)
        assert result.value == pytest.approx(blp_analytic(params), abs=1e-3)
        assert abs(result.value - blp_analytic(params)) <= result.tail_bound * 1.01 + 1e-12

    def test_divergent_case_counts_windows(self):
        result = blp_numeric(ModelParams(1.0, 0.0), horizon=10.0, n_pairs=0)
        assert result.divergent
        assert result.n_intervals == 6  # windows end at n*pi/2 <= 10
        assert result.value == pytest.approx(result.n_intervals, abs=1e-6)
        # per-window increment is 1 for the optimal pair when kappa = 0
        assert result.value / result.n_intervals == pytest.approx(1.0, abs=1e-6)

    def test_divergent_requires_explicit_horizon(self):
        from qubitbath.errors import DegenerateModelError

        with pytest.raises(DegenerateModelError):
            blp_numeric(ModelParams(1.0, 0.0))

    def test_random_pairs_never_beat_optimal(self):
        params = ModelParams(1.0, 3.0)
        result = blp_numeric(params, n_pairs=64, seed=11)
        assert max(result.random_values) <= result.optimal_value + 1e-9
        assert result.value == result.optimal_value
        assert result.best_pair == OPTIMAL_PAIR

    def test_deterministic_for_seed(self):
        params = ModelParams(1.0, 5.0)
        a = blp_numeric(params, n_pairs=16, seed=42)
        b = blp_numeric(params, n_pairs=16, seed=42)
        assert a.random_values == b.random_values

    def test_telescoped_increase_equals_quadrature(self):
        # independent oracle: integrate max(d', 0) by fine trapezoidal quadrature
        params = ModelParams(1.0, 4.0)
        horizon = increase_intervals(params, 2)[-1].t_hi + 0.2
        t = np.linspace(0, horizon, 200001)
        d = evolved_trace_distance(params, OPTIMAL_PAIR, t)
        rates = np.diff(d) / np.diff(t)
        quadrature = float(np.sum(np.clip(rates, 0, None) * np.diff(t)))
        result = blp_numeric(params, horizon=horizon, n_pairs=0)
        assert result.value == pytest.approx(quadrature, abs=1e-4)


class TestThresholdScan:
    @pytest.mark.parametrize("xi,expected", [(1.0, 8.0), (0.5, 4.0), (-1.0, 8.0), (2.0, 16.0)])
    def test_finds_threshold(self, xi, expected):
        lo, hi = 0.5 * expected, 2.5 * expected
        assert threshold_scan(xi, lo, hi, tol=1e-6) == pytest.approx(expected, abs=1e-6)

    def test_spec_bracket(self):
        assert threshold_scan(1.0, 1.0, 20.0, tol=1e-6) == pytest.approx(8.0, abs=1e-6)

    def test_invalid_bracket_same_side(self):
        with pytest.raises(ValidationError):
            threshold_scan(1.0, 9.0, 20.0)
        with pytest.raises(ValidationError):
            threshold_scan(1.0, 1.0, 7.0)

    def test_invalid_bracket_order(self):
        with pytest.raises(ValidationError):
            threshold_scan(1.0, 5.0, 4.0)


class TestAssess:
    def test_non_markovian_report(self):
        report = assess_markovianity(ModelParams(1.0, 4.0), seed=5)
        assert report.cp_divisible is False
        assert report.min_choi_eigenvalue < -1e-10
        assert report.blp_numeric_value == pytest.approx(report.blp_analytic_value, abs=1e-3)
        assert not report.blp_divergent
        assert len(report.increase_windows) >= 1
        predicted = increase_intervals(report.params, len(report.increase_windows))
        for found, want in zip(report.increase_windows, predicted):
            assert found.t_hi == pytest.approx(want.t_hi, abs=1e-6)

    def test_markovian_report(self):
        report = assess_markovianity(ModelParams(1.0, 10.0))
        assert report.cp_divisible is True
        assert report.blp_numeric_value == 0.0
        assert report.blp_analytic_value == 0.0
        assert report.increase_windows == ()

    def test_divergent_report(self):
        report = assess_markovianity(ModelParams(1.0, 0.0))
        assert report.blp_divergent
        assert report.blp_analytic_value == math.inf
        assert report.cp_divisible is False
