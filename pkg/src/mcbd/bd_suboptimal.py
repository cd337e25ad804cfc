"""Suboptimal precoding: fixed projected-channel directions, tuned powers.

Instead of re-deriving directions at every price vector, the transmit
directions are frozen to the right singular vectors of each user's
projected channel H_k Vt_k Vt_k^H. Only the per-stream powers remain to
be optimized, so the inner problem collapses to scalar water-filling with
a per-stream price, making each dual iteration much cheaper than in the
optimal solver. The cost is a rate loss whenever the grouped constraints
favor rotated directions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual_solver
from .bd_optimal import Solution, free_group_cut
from .dual_solver import OracleResponse, Value
from .errors import NumericFailure, UnboundedDualError
from .model import ProblemInstance
from .numerics import herm, logdet_identity_plus, reduced_svd

__all__ = [
    "ProjectedChannelSvd",
    "SuboptimalAllocation",
    "projected_channel_svd",
    "suboptimal_power_allocation",
    "solve_suboptimal",
]


@dataclass(frozen=True)
class ProjectedChannelSvd:
    """Reduced SVD of one user's projected channel; V holds the directions."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class SuboptimalAllocation:
    """Per-stream powers and the coupling of each stream into each group.

    couplings[a, k, i] is the fraction of stream (k, i)'s power landing on
    constraint group a, i.e. the squared mask-weighted norm of the i-th
    transmit direction of user k.
    """

    lam: np.ndarray
    couplings: np.ndarray


def projected_channel_svd(problem: ProblemInstance, k: int) -> ProjectedChannelSvd:
    """SVD of H_k projected onto user k's interference-free subspace."""
    V = problem.bases.bases[k]
    H_proj = problem.channels.channels[k] @ V @ V.conj().T
    svd = reduced_svd(H_proj)
    N = problem.config.antennas_per_user
    if svd.rank != N:
        raise NumericFailure(
            f"projected channel of user {k} has rank {svd.rank}, expected {N}"
        )
    return ProjectedChannelSvd(svd.U, svd.s, svd.V)


def _precompute(problem: ProblemInstance):
    svds = [projected_channel_svd(problem, k) for k in range(problem.config.num_users)]
    # couplings: (G, K, N)
    couplings = np.stack(
        [problem.masks.diagonals @ (np.abs(svd.V) ** 2) for svd in svds], axis=1
    )
    sigma = np.stack([svd.sigma for svd in svds])  # (K, N)
    return svds, couplings, sigma


def _allocate(
    mu: np.ndarray,
    couplings: np.ndarray,
    sigma: np.ndarray,
    weights: np.ndarray,
    allow_singular: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Water-filling against per-stream prices; returns (lam, prices)."""
    prices = np.einsum("a,akn->kn", mu, couplings)
    floor = 1e-12 * (1.0 + float(np.max(mu, initial=0.0)))
    unpriced = (prices <= floor) & (sigma > 0)
    if np.any(unpriced):
        if not allow_singular:
            raise UnboundedDualError(int(np.argmax(np.any(unpriced, axis=1))))
        # degenerate guard: a stream nothing prices gets nothing
        prices = np.where(unpriced, np.inf, prices)
    with np.errstate(divide="ignore"):
        inv_g2 = np.where(sigma > 0, sigma**-2.0, np.inf)
    lam = np.maximum(0.0, weights[:, None] / prices - inv_g2)
    return lam, prices


def suboptimal_power_allocation(
    mu: np.ndarray, problem: ProblemInstance
) -> SuboptimalAllocation:
    """Closed-form power allocation at fixed prices over the frozen directions."""
    _, couplings, sigma = _precompute(problem)
    weights = np.asarray(problem.config.weights)
    lam, _ = _allocate(np.asarray(mu, dtype=float), couplings, sigma, weights, False)
    return SuboptimalAllocation(lam, couplings)


def solve_suboptimal(
    problem: ProblemInstance,
    tol: float = 1e-6,
    max_iter: int = 5000,
    initial_mu: float = 0.2,
) -> Solution:
    """Dual loop over the per-stream water-filling oracle, then assembly."""
    from .bd_optimal import initial_radius

    cfg = problem.config
    svds, couplings, sigma = _precompute(problem)
    weights = np.asarray(cfg.weights)
    budgets = np.asarray(cfg.budgets)

    def evaluate(mu: np.ndarray, allow_singular: bool):
        lam, prices = _allocate(mu, couplings, sigma, weights, allow_singular)
        finite = np.isfinite(prices)
        spent = np.where(finite & (lam > 0), prices * lam, 0.0)
        value = float(
            np.sum(weights[:, None] * np.log1p(sigma**2 * lam) - spent) + mu @ budgets
        )
        subgradient = budgets - np.einsum("akn,kn->a", couplings, lam)
        return value, subgradient, lam

    def oracle(mu: np.ndarray) -> OracleResponse:
        try:
            value, subgradient, _ = evaluate(mu, False)
        except UnboundedDualError:
            return free_group_cut(mu)
        return Value(value, subgradient)

    def lenient_oracle(mu: np.ndarray) -> OracleResponse:
        value, subgradient, _ = evaluate(mu, True)
        return Value(value, subgradient)

    mu0 = np.full(cfg.group_count, float(initial_mu))
    result = dual_solver.minimize(
        oracle,
        dim=cfg.group_count,
        initial_mu=mu0,
        initial_radius=initial_radius(problem, mu0),
        tol=tol,
        max_iter=max_iter,
    )
    mu_star, polished = dual_solver.refine_active_set(
        lenient_oracle, result.mu, scale=max(1.0, max(cfg.budgets))
    )

    value, subgradient, lam = evaluate(mu_star, True)
    covariances = []
    precoders = []
    rates = np.zeros(cfg.num_users)
    for k, svd in enumerate(svds):
        S = herm((svd.V * lam[k]) @ svd.V.conj().T)
        covariances.append(S)
        precoders.append(svd.V * np.sqrt(lam[k]))
        H = problem.channels.channels[k]
        rates[k] = logdet_identity_plus(herm(H @ S @ H.conj().T))
        scalar_rate = float(np.sum(np.log1p(svd.sigma**2 * lam[k])))
        if abs(rates[k] - scalar_rate) > 1e-8:
            raise NumericFailure(
                f"scalar-subchannel rate disagrees with log-det rate for user {k}"
            )
    primal = float(weights @ rates)
    powers = budgets - subgradient
    return Solution(
        covariances=tuple(covariances),
        precoders=tuple(precoders),
        per_user_rates=rates,
        per_group_powers=powers,
        dual_value=value,
        primal_value=primal,
        duality_gap=value - primal,
        mu=mu_star.copy(),
        iterations=result.iterations,
        converged=bool(result.converged or polished),
        method="suboptimal",
        trace=result.trace,
    )
