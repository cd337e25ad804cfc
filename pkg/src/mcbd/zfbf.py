"""Single-receive-antenna specialization: zero-forcing beamforming vectors.

With N = 1 every optimal covariance is (at most) rank one, so the solution
collapses to one beam per user. This module extracts those beams, checks
them against the direct closed form, and provides the classical
pseudo-inverse construction for the single shared power budget.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bd_optimal import Solution, inner_solution, solve_optimal
from .errors import InfeasibleConfigError, NumericFailure
from .model import ConstraintScheme, ProblemInstance
from .numerics import herm

__all__ = ["BeamSet", "optimal_miso_beams", "pseudo_inverse_beams", "beam_rates"]

RANK_ONE_TOL = 1e-8


@dataclass(frozen=True)
class BeamSet:
    """One transmit vector per user plus the construction it came from."""

    vectors: tuple[np.ndarray, ...]
    method: str


def _fix_phase(t: np.ndarray) -> np.ndarray:
    """Rotate so the largest-magnitude entry is real positive."""
    idx = int(np.argmax(np.abs(t)))
    pivot = t[idx]
    if np.abs(pivot) == 0.0:
        return t
    return t * (np.conj(pivot) / np.abs(pivot))


def _require_miso(problem: ProblemInstance) -> None:
    if problem.config.antennas_per_user != 1:
        raise ValueError("beamforming extraction requires single-antenna users")


def optimal_miso_beams(
    problem: ProblemInstance,
    tol: float = 1e-6,
    max_iter: int = 5000,
    solution: Solution | None = None,
) -> BeamSet:
    """Solve optimally, then peel each covariance into its single beam.

    Each extracted beam is cross-checked against the closed form
    sqrt(lam) / sigma * Vt (Vt^H B_mu Vt)^{-1} Vt^H h_k, which must agree
    up to a global phase. Passing a precomputed solution skips the solve.
    """
    _require_miso(problem)
    if solution is None:
        solution = solve_optimal(problem, tol=tol, max_iter=max_iter)
    bmu = solution.mu @ problem.masks.diagonals
    beams = []
    for k, S in enumerate(solution.covariances):
        evals, evecs = np.linalg.eigh(herm(S))
        top = float(evals[-1])
        if top <= RANK_ONE_TOL * max(1.0, float(np.trace(S).real)):
            beams.append(np.zeros(S.shape[0], dtype=complex))
            continue
        if evals.size > 1 and evals[-2] > RANK_ONE_TOL * top:
            raise NumericFailure(f"covariance of user {k} is not rank one")
        t = _fix_phase(np.sqrt(top) * evecs[:, -1])

        inner = inner_solution(solution.mu, k, problem, allow_singular=True)
        lam = float(inner.lam[0])
        sigma = float(inner.svd.sigma[0])
        V = problem.bases.bases[k]
        if lam > 0 and sigma > 0:
            A = herm((V.conj().T * bmu) @ V)
            h = problem.channels.channels[k].conj().T[:, 0]
            t_closed = np.sqrt(lam) / sigma * (V @ np.linalg.solve(A, V.conj().T @ h))
            t_closed = _fix_phase(t_closed)
            if np.linalg.norm(t - t_closed) > 1e-6 * max(1.0, np.linalg.norm(t)):
                raise NumericFailure(f"beam of user {k} disagrees with the closed form")
        beams.append(t)
    return BeamSet(tuple(beams), "optimal-per-group")


def pseudo_inverse_beams(problem: ProblemInstance) -> BeamSet:
    """Channel-inverting beams with water-filled powers on one shared budget.

    The pseudo-inverse columns pre-cancel all cross-talk, leaving K scalar
    links with gains 1/||col_k||^2; the budget is then split by weighted
    water-filling. Only meaningful under the sum-power scheme.
    """
    _require_miso(problem)
    if problem.config.scheme is not ConstraintScheme.SUM:
        raise ValueError("pseudo-inverse beams assume the sum-power scheme")
    H = np.vstack(problem.channels.channels)  # K x M
    K = H.shape[0]
    s = np.linalg.svd(H, compute_uv=False)
    if s[-1] <= 1e-10 * max(H.shape) * s[0]:
        raise InfeasibleConfigError("stacked channel rows are rank deficient")
    pinv = np.linalg.pinv(H)  # M x K
    gains = 1.0 / np.sum(np.abs(pinv) ** 2, axis=0)  # effective scalar gains e_k
    weights = np.asarray(problem.config.weights)
    powers = _weighted_waterfill(weights, gains, float(problem.config.budgets[0]))
    beams = []
    for k in range(K):
        col = pinv[:, k]
        t = np.sqrt(powers[k]) * col / np.linalg.norm(col)
        beams.append(_fix_phase(t))
    return BeamSet(tuple(beams), "pseudo-inverse-sum-power")


def _weighted_waterfill(weights: np.ndarray, gains: np.ndarray, budget: float) -> np.ndarray:
    """Split one budget: p_k = (nu * w_k - 1/e_k)^+ with sum(p) = budget."""
    thresholds = 1.0 / (weights * gains)
    order = np.argsort(thresholds)
    for m in range(len(order), 0, -1):
        active = order[:m]
        nu = (budget + np.sum(1.0 / gains[active])) / np.sum(weights[active])
        p = np.zeros(len(gains))
        p[active] = np.maximum(0.0, nu * weights[active] - 1.0 / gains[active])
        if np.min(p[active]) >= 0.0 and abs(p.sum() - budget) <= 1e-9 * budget:
            return p
    raise NumericFailure("water level search failed")


def beam_rates(beams: BeamSet, problem: ProblemInstance) -> np.ndarray:
    """Achieved per-user rates, counting residual cross-talk as noise."""
    channels = problem.channels.channels
    K = len(channels)
    rates = np.zeros(K)
    for k in range(K):
        own = abs(channels[k][0] @ beams.vectors[k]) ** 2
        cross = sum(
            abs(channels[k][0] @ beams.vectors[j]) ** 2 for j in range(K) if j != k
        )
        rates[k] = np.log1p(own / (1.0 + cross))
    return rates
