"""Optimal precoder: water-filling, inner maximizer, dual oracle, full solve."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize as scipy_minimize

from mcbd.bd_optimal import (
    dual_oracle,
    dual_point,
    free_group_cut,
    inner_solution,
    positive_dual_count,
    solution_to_json,
    solve_optimal,
    waterfill,
)
from mcbd.dual_solver import Infeasible, Value
from mcbd.errors import UnboundedDualError
from mcbd.model import ConstraintScheme, SystemConfig, build_instance
from mcbd.numerics import herm, logdet_identity_plus

from conftest import make_instance, single_channel_instance


def inner_objective(problem, k, mu, Q):
    """Objective of the per-user inner problem at a candidate Q."""
    V = problem.bases.bases[k]
    F0 = problem.channels.channels[k] @ V
    A = herm((V.conj().T * (mu @ problem.masks.diagonals)) @ V)
    w = problem.config.weights[k]
    return (w * logdet_identity_plus(herm(F0 @ Q @ F0.conj().T))
            - float(np.real(np.trace(A @ Q))))


def first_order_inner_max(problem, k, mu, tries=3, seed=0):
    """Independent maximizer of the inner problem via a factored Q = X X^H."""
    V = problem.bases.bases[k]
    d = V.shape[1]
    N = problem.config.antennas_per_user
    F0 = problem.channels.channels[k] @ V
    A = herm((V.conj().T * (mu @ problem.masks.diagonals)) @ V)
    w = problem.config.weights[k]
    rng = np.random.default_rng(seed)

    def neg_f(x):
        X = x[: d * N].reshape(d, N) + 1j * x[d * N:].reshape(d, N)
        Q = X @ X.conj().T
        val = (w * logdet_identity_plus(herm(F0 @ Q @ F0.conj().T))
               - float(np.real(np.trace(A @ Q))))
        M = np.eye(F0.shape[0]) + F0 @ Q @ F0.conj().T
        G = w * F0.conj().T @ np.linalg.solve(herm(M), F0) - A
        GX = 2.0 * G @ X
        return -val, -np.concatenate([np.real(GX).ravel(), np.imag(GX).ravel()])

    best = -np.inf
    for _ in range(tries):
        res = scipy_minimize(neg_f, 0.3 * rng.standard_normal(2 * d * N), jac=True,
                             method="L-BFGS-B",
                             options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def waterfill_capacity(sigmas, total_power):
    """Single-user capacity under a total power budget, by water-level bisection."""
    s2 = np.sort(np.asarray(sigmas, dtype=float) ** 2)[::-1]
    lo, hi = 0.0, 1.0 / s2[-1] + total_power + 1.0
    for _ in range(200):
        level = 0.5 * (lo + hi)
        if np.maximum(level - 1.0 / s2, 0.0).sum() > total_power:
            hi = level
        else:
            lo = level
    p = np.maximum(0.5 * (lo + hi) - 1.0 / s2, 0.0)
    return float(np.sum(np.log1p(s2 * p)))


class TestWaterfill:
    def test_threshold_exactly_met(self):
        np.testing.assert_array_equal(waterfill(1.0, np.array([1.0])), [0.0])

    def test_two_streams(self):
        np.testing.assert_allclose(
            waterfill(1.0, np.sqrt([2.0, 0.5])), [0.5, 0.0], atol=1e-15)

    def test_weighted(self):
        np.testing.assert_allclose(
            waterfill(2.0, np.sqrt([4.0, 1.0])), [1.75, 1.0], atol=1e-15)

    def test_zero_gain_gets_zero_power(self):
        np.testing.assert_array_equal(waterfill(5.0, np.array([0.0, 1.0])), [0.0, 4.0])

    @given(st.floats(0.1, 10.0), st.lists(st.floats(0.01, 10.0), min_size=1, max_size=4))
    def test_closed_form(self, w, gains):
        lam = waterfill(w, np.array(gains))
        assert np.all(lam >= 0)
        for lam_i, g in zip(lam, gains):
            assert lam_i == pytest.approx(max(0.0, w - 1.0 / g**2))


class TestInnerSolution:
    def test_hand_computed_single_user(self):
        prob = single_channel_instance(np.array([[1.0, 0.0]]), weights=(np.e,))
        sol = inner_solution(np.array([1.0, 1.0]), 0, prob)
        np.testing.assert_allclose(sol.svd.sigma, [1.0], atol=1e-12)
        np.testing.assert_allclose(sol.lam, [np.e - 1.0], atol=1e-12)
        np.testing.assert_allclose(sol.Q, np.diag([np.e - 1.0, 0.0]), atol=1e-12)
        assert sol.contribution == pytest.approx(1.0, abs=1e-12)

    def test_water_level_below_all_channels(self):
        prob = single_channel_instance(np.array([[1.0, 0.0]]), weights=(0.5,))
        sol = inner_solution(np.array([1.0, 1.0]), 0, prob)
        np.testing.assert_array_equal(sol.lam, [0.0])
        np.testing.assert_allclose(sol.Q, np.zeros((2, 2)), atol=1e-15)

    def test_unpriced_group_unbounded(self):
        prob = single_channel_instance(np.array([[1.0, 1.0]]), weights=(1.0,))
        with pytest.raises(UnboundedDualError):
            inner_solution(np.array([1.0, 0.0]), 0, prob)
        # the lenient mode clamps instead of raising
        inner_solution(np.array([1.0, 0.0]), 0, prob, allow_singular=True)

    @settings(max_examples=10)
    @given(st.integers(0, 100))
    def test_matches_first_order_oracle(self, seed):
        prob = make_instance(num_bs=2, antennas_per_bs=3, num_users=2,
                             antennas_per_user=2, weights=(1.5, 1.0), seed=seed)
        mu = np.array([0.4, 0.7])
        for k in range(2):
            sol = inner_solution(mu, k, prob)
            assert inner_objective(prob, k, mu, sol.Q) == pytest.approx(
                sol.contribution, abs=1e-9)
            oracle = first_order_inner_max(prob, k, mu, seed=seed + k)
            assert abs(oracle - sol.contribution) < 1e-6


class TestDualOracle:
    def test_huge_prices_turn_everything_off(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=4)
        mu = np.full(2, 100.0)
        point = dual_point(mu, prob)
        assert np.all([np.all(s.lam == 0.0) for s in point.inner])
        budgets = np.asarray(prob.config.budgets)
        assert point.value == pytest.approx(float(mu @ budgets), abs=1e-12)
        np.testing.assert_allclose(point.subgradient, budgets, atol=1e-12)

    def test_complementary_slackness_at_optimum(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=5)
        sol = solve_optimal(prob)
        point = dual_point(sol.mu, prob, allow_singular=True)
        assert np.max(np.abs(sol.mu * point.subgradient)) < 1e-4

    @settings(max_examples=15)
    @given(st.integers(0, 100))
    def test_convexity_probe(self, seed):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=2, seed=3)
        rng = np.random.default_rng(seed)
        mu1 = rng.uniform(0.1, 5.0, size=2)
        mu2 = rng.uniform(0.1, 5.0, size=2)
        g_mid = dual_point(0.5 * (mu1 + mu2), prob).value
        g_avg = 0.5 * dual_point(mu1, prob).value + 0.5 * dual_point(mu2, prob).value
        assert g_mid <= g_avg + 1e-9

    def test_subgradient_inequality(self):
        # g(nu) >= g(mu) + s(mu) . (nu - mu) for the concave-conjugate sense
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=6)
        rng = np.random.default_rng(0)
        for _ in range(10):
            mu = rng.uniform(0.2, 3.0, size=2)
            nu = rng.uniform(0.2, 3.0, size=2)
            pm = dual_point(mu, prob)
            pn = dual_point(nu, prob)
            assert pn.value >= pm.value + float(pm.subgradient @ (nu - mu)) - 1e-9

    def test_unbounded_point_reports_cut(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=7)
        resp = dual_oracle(np.zeros(2), prob)
        assert isinstance(resp, Infeasible)
        np.testing.assert_allclose(resp.cut, -np.ones(2) / np.sqrt(2.0))

    def test_feasible_point_reports_value(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=7)
        resp = dual_oracle(np.array([0.5, 0.5]), prob)
        assert isinstance(resp, Value)

    def test_free_group_cut_prices_free_groups(self):
        cut = free_group_cut(np.array([0.0, 5.0, 1e-9]))
        np.testing.assert_allclose(cut.cut, [-1.0 / np.sqrt(2), 0.0, -1.0 / np.sqrt(2)])
        # all groups priced: fall back to a uniform cut
        cut = free_group_cut(np.array([1.0, 2.0]))
        np.testing.assert_allclose(cut.cut, -np.ones(2) / np.sqrt(2.0))


class TestSolveOptimal:
    def test_duality_gap_small(self):
        for seed in range(3):
            prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                                 antennas_per_user=2, seed=seed)
            sol = solve_optimal(prob)
            assert sol.converged
            assert sol.duality_gap >= -1e-8
            assert sol.duality_gap / abs(sol.primal_value) < 1e-4

    def test_primal_feasible(self):
        prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=2,
                             antennas_per_user=2, seed=11)
        sol = solve_optimal(prob)
        budgets = np.asarray(prob.config.budgets)
        assert np.all(sol.per_group_powers <= budgets + 1e-6)
        for k, S in enumerate(sol.covariances):
            assert float(np.linalg.eigvalsh(herm(S))[0]) >= -1e-9
            for j, H in enumerate(prob.channels.channels):
                if j != k:
                    assert np.linalg.norm(H @ S @ H.conj().T) <= 1e-8

    def test_covariance_factorization(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=12)
        sol = solve_optimal(prob)
        for S, T in zip(sol.covariances, sol.precoders):
            assert np.linalg.norm(S - T @ T.conj().T) < 1e-8

    def test_weighted_primal_recomposition(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, weights=(2.0, 0.5), seed=13)
        sol = solve_optimal(prob)
        assert sol.primal_value == pytest.approx(
            float(np.array([2.0, 0.5]) @ sol.per_user_rates), abs=1e-12)

    def test_sum_power_precoders_have_orthogonal_columns(self):
        prob = make_instance(num_bs=2, antennas_per_bs=3, num_users=2,
                             antennas_per_user=2, scheme=ConstraintScheme.SUM, seed=14)
        sol = solve_optimal(prob)
        for T in sol.precoders:
            gram = T.conj().T @ T
            off = gram - np.diag(np.diag(gram))
            assert np.max(np.abs(off)) < 1e-8

    def test_single_user_matches_waterfilling_capacity(self):
        cfg = SystemConfig(num_bs=2, antennas_per_bs=2, num_users=1,
                           antennas_per_user=2, power=10.0,
                           scheme=ConstraintScheme.SUM)
        prob = build_instance(cfg, seed=15)
        sol = solve_optimal(prob)
        sigmas = np.linalg.svd(prob.channels.channels[0], compute_uv=False)
        assert sol.primal_value == pytest.approx(
            waterfill_capacity(sigmas, 10.0), abs=1e-6)

    def test_positive_dual_floor(self):
        # enough groups must be priced for the inner problems to stay bounded
        for scheme in (ConstraintScheme.PER_BS, ConstraintScheme.PER_ANTENNA):
            prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=2,
                                 antennas_per_user=2, scheme=scheme, seed=16)
            sol = solve_optimal(prob)
            cfg = prob.config
            free_dims = cfg.total_antennas - cfg.antennas_per_user * (cfg.num_users - 1)
            group_size = cfg.antennas_per_bs if scheme is ConstraintScheme.PER_BS else 1
            floor = -(-free_dims // group_size)
            assert positive_dual_count(sol) >= floor

    def test_covariances_live_in_complement_subspace(self):
        prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=3,
                             antennas_per_user=1, seed=17)
        sol = solve_optimal(prob)
        for k, S in enumerate(sol.covariances):
            Vt = prob.bases.bases[k]
            projected = Vt @ (Vt.conj().T @ S @ Vt) @ Vt.conj().T
            assert np.linalg.norm(S - projected) < 1e-8
            G = np.vstack([prob.channels.channels[j] for j in range(3) if j != k])
            _, _, Vh = np.linalg.svd(G, full_matrices=False)
            Vrow = Vh.conj().T
            assert np.linalg.norm(Vrow.conj().T @ S @ Vrow) < 1e-9

    def test_rate_monotone_in_power(self):
        values = []
        for power in (2.0, 10.0, 50.0):
            prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                                 antennas_per_user=1, power=power, seed=18)
            values.append(solve_optimal(prob).primal_value)
        assert values[0] <= values[1] + 1e-8 <= values[2] + 2e-8

    def test_point_cache_records_oracle_calls(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=19)
        cache = {}
        sol = solve_optimal(prob, point_cache=cache)
        assert cache
        hits = [st_ for st_ in sol.trace if st_.center.tobytes() in cache]
        assert hits
        point = cache[hits[0].center.tobytes()]
        assert point.subgradient.shape == (2,)

    def test_solution_json_is_well_formed(self):
        import json

        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=20)
        sol = solve_optimal(prob)
        doc = json.loads(solution_to_json(sol))
        assert doc["method"] == "optimal"
        assert len(doc["covariances"]) == 2
        assert doc["converged"] is True
        assert doc["primal_value"] == pytest.approx(sol.primal_value)
