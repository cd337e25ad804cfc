"""Frozen-direction precoder: projected channels, scalar water-filling, solver."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcbd.bd_optimal import solve_optimal, waterfill
from mcbd.bd_suboptimal import (
    projected_channel_svd,
    solve_suboptimal,
    suboptimal_power_allocation,
)
from mcbd.errors import NumericFailure, UnboundedDualError
from mcbd.model import (
    ChannelSet,
    ComplementBasis,
    ConstraintScheme,
    ProblemInstance,
    SystemConfig,
    build_constraint_masks,
    complement_basis,
)
from mcbd.numerics import herm

from conftest import make_instance, single_channel_instance


class TestProjectedChannelSvd:
    def test_single_user_projection_is_identity(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=1,
                             antennas_per_user=2, seed=0)
        svd = projected_channel_svd(prob, 0)
        rebuilt = (svd.U * svd.sigma) @ svd.V.conj().T
        assert np.linalg.norm(rebuilt - prob.channels.channels[0]) < 1e-9

    def test_directions_do_not_interfere(self):
        prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=3,
                             antennas_per_user=2, seed=1)
        for k in range(3):
            V = projected_channel_svd(prob, k).V
            for j in range(3):
                if j != k:
                    assert np.linalg.norm(prob.channels.channels[j] @ V) < 1e-9

    def test_singular_values_survive_projection(self):
        prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=2,
                             antennas_per_user=2, seed=2)
        for k in range(2):
            svd = projected_channel_svd(prob, k)
            direct = np.linalg.svd(
                prob.channels.channels[k] @ prob.bases.bases[k], compute_uv=False)
            np.testing.assert_allclose(svd.sigma, direct[: svd.sigma.size], atol=1e-9)

    def test_orthonormal_factors(self):
        prob = make_instance(num_bs=2, antennas_per_bs=3, num_users=2,
                             antennas_per_user=2, seed=3)
        svd = projected_channel_svd(prob, 0)
        N = 2
        assert np.linalg.norm(svd.U.conj().T @ svd.U - np.eye(N)) < 1e-10
        assert np.linalg.norm(svd.V.conj().T @ svd.V - np.eye(N)) < 1e-10

    def test_degenerate_projection_raises(self):
        # user 0's rows differ only inside user 1's row space, so the
        # projection collapses them onto one direction: rank 1, not N = 2
        from mcbd.model import PrecodingMode

        rng = np.random.default_rng(0)
        H1 = rng.standard_normal((2, 6)) + 1j * rng.standard_normal((2, 6))
        a = rng.standard_normal((1, 6)) + 1j * rng.standard_normal((1, 6))
        H0 = np.vstack([a, a + H1[:1]])
        chans = ChannelSet((H0, H1), seed=0)
        cfg = SystemConfig(num_bs=6, antennas_per_bs=1, num_users=2,
                           antennas_per_user=2, power=10.0)
        bases = ComplementBasis(tuple(
            complement_basis(chans, k, PrecodingMode.BD) for k in range(2)))
        prob = ProblemInstance(cfg, chans, build_constraint_masks(cfg), bases)
        with pytest.raises(NumericFailure):
            projected_channel_svd(prob, 0)


class TestPowerAllocation:
    def test_hand_computed_stream(self):
        # price 0.5, unit gain, unit weight: water level 2 minus noise 1
        prob = single_channel_instance(np.array([[1.0, 0.0]]), weights=(1.0,),
                                       scheme=ConstraintScheme.SUM)
        alloc = suboptimal_power_allocation(np.array([0.5]), prob)
        np.testing.assert_allclose(alloc.lam, [[1.0]], atol=1e-12)

    def test_sum_power_reduces_to_plain_waterfilling(self):
        prob = make_instance(num_bs=2, antennas_per_bs=3, num_users=2,
                             antennas_per_user=2, scheme=ConstraintScheme.SUM,
                             weights=(2.0, 1.0), seed=4)
        mu = np.array([0.7])
        alloc = suboptimal_power_allocation(mu, prob)
        np.testing.assert_allclose(alloc.couplings.sum(axis=0), np.ones((2, 2)),
                                   atol=1e-10)
        for k in range(2):
            svd = projected_channel_svd(prob, k)
            expected = waterfill(prob.config.weights[k] / mu[0], svd.sigma)
            np.testing.assert_allclose(alloc.lam[k], expected, atol=1e-12)

    def test_coupling_tensor_shape_and_mass(self):
        prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=2,
                             antennas_per_user=2, seed=5)
        alloc = suboptimal_power_allocation(np.array([0.5, 0.5, 0.5]), prob)
        assert alloc.couplings.shape == (3, 2, 2)
        # each direction's power splits across groups without loss
        np.testing.assert_allclose(alloc.couplings.sum(axis=0), np.ones((2, 2)),
                                   atol=1e-10)

    def test_zero_prices_unbounded(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=1, seed=6)
        with pytest.raises(UnboundedDualError):
            suboptimal_power_allocation(np.zeros(2), prob)

    @settings(max_examples=10)
    @given(st.integers(0, 100))
    def test_beats_scalar_grid_search(self, seed):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=2, weights=(1.5, 1.0), seed=seed)
        rng = np.random.default_rng(seed)
        mu = rng.uniform(0.2, 2.0, size=2)
        alloc = suboptimal_power_allocation(mu, prob)
        prices = np.einsum("a,akn->kn", mu, alloc.couplings)
        for k in range(2):
            svd = projected_channel_svd(prob, k)
            w = prob.config.weights[k]
            for i in range(2):
                sigma2 = svd.sigma[i] ** 2
                price = prices[k, i]

                def phi(lam):
                    return w * np.log1p(sigma2 * lam) - price * lam

                grid = np.linspace(0.0, 4.0 * alloc.lam[k, i] + 2.0, 20001)
                assert phi(alloc.lam[k, i]) >= phi(grid).max() - 1e-8


class TestSolveSuboptimal:
    def test_square_miso_matches_optimal(self):
        # M = K: only one zero-forcing direction exists, so both methods agree
        for seed in (1, 2, 3):
            prob = make_instance(num_bs=2, antennas_per_bs=1, num_users=2,
                                 antennas_per_user=1,
                                 scheme=ConstraintScheme.PER_ANTENNA, seed=seed)
            opt = solve_optimal(prob)
            sub = solve_suboptimal(prob)
            assert abs(sub.primal_value - opt.primal_value) < 1e-6

    def test_never_beats_optimal(self):
        for seed in (7, 8, 9):
            prob = make_instance(num_bs=2, antennas_per_bs=3, num_users=2,
                                 antennas_per_user=2, seed=seed)
            assert (solve_suboptimal(prob).primal_value
                    <= solve_optimal(prob).primal_value + 1e-8)

    def test_sum_power_matches_optimal(self):
        # frozen directions are optimal when a single budget covers everything
        prob = make_instance(num_bs=2, antennas_per_bs=3, num_users=2,
                             antennas_per_user=2, scheme=ConstraintScheme.SUM,
                             seed=10)
        opt = solve_optimal(prob)
        sub = solve_suboptimal(prob)
        assert abs(sub.primal_value - opt.primal_value) < 1e-6

    def test_active_group_bound(self):
        # at most N*K groups can be driven to their budget
        for seed in (11, 12, 13):
            prob = make_instance(num_bs=8, antennas_per_bs=1, num_users=2,
                                 antennas_per_user=1,
                                 scheme=ConstraintScheme.PER_ANTENNA, seed=seed)
            sol = solve_suboptimal(prob)
            budgets = np.asarray(prob.config.budgets)
            active = int(np.sum(np.abs(budgets - sol.per_group_powers) < 1e-6 * budgets))
            assert active <= 2

    def test_scalar_rate_chain(self):
        prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=2,
                             antennas_per_user=2, seed=14)
        sol = solve_suboptimal(prob)
        alloc = suboptimal_power_allocation(sol.mu, prob)
        for k in range(2):
            svd = projected_channel_svd(prob, k)
            scalar = float(np.sum(np.log1p(svd.sigma**2 * alloc.lam[k])))
            assert abs(scalar - sol.per_user_rates[k]) < 1e-8

    def test_feasible_and_zero_forcing(self):
        prob = make_instance(num_bs=3, antennas_per_bs=2, num_users=3,
                             antennas_per_user=1, seed=15)
        sol = solve_suboptimal(prob)
        budgets = np.asarray(prob.config.budgets)
        assert np.all(sol.per_group_powers <= budgets + 1e-6)
        for k, S in enumerate(sol.covariances):
            assert float(np.linalg.eigvalsh(herm(S))[0]) >= -1e-9
            for j, H in enumerate(prob.channels.channels):
                if j != k:
                    assert np.linalg.norm(H @ S @ H.conj().T) <= 1e-8

    def test_duality_gap_small(self):
        prob = make_instance(num_bs=2, antennas_per_bs=2, num_users=2,
                             antennas_per_user=2, seed=16)
        sol = solve_suboptimal(prob)
        assert sol.converged
        assert sol.duality_gap >= -1e-8
        assert sol.duality_gap / abs(sol.primal_value) < 1e-4

    def test_miso_directions_collinear_with_pseudo_inverse(self):
        # under zero forcing only one useful direction per user remains, and
        # it coincides with the matched column of the stacked channel inverse
        for seed in range(1, 11):
            prob = make_instance(num_bs=4, antennas_per_bs=1, num_users=2,
                                 antennas_per_user=1,
                                 scheme=ConstraintScheme.PER_ANTENNA, seed=seed)
            sol = solve_suboptimal(prob)
            stacked = np.vstack(prob.channels.channels)
            pinv = np.linalg.pinv(stacked)
            for k in range(2):
                t = sol.precoders[k][:, 0]
                if np.linalg.norm(t) < 1e-12:
                    continue
                cos = abs(t.conj() @ pinv[:, k]) / (
                    np.linalg.norm(t) * np.linalg.norm(pinv[:, k]))
                assert cos > 1.0 - 1e-8
