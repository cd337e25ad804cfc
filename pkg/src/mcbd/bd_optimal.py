"""Optimal block-diagonal precoding under grouped power constraints.

The weighted sum-rate problem is solved through its Lagrangian dual: for a
price vector mu on the constraint groups the inner maximization decouples
per user and has a closed form (whitening by the priced Gram matrix, SVD,
water-filling). The ellipsoid loop minimizes the dual, an active-set
Newton pass polishes the prices, and the final covariances and precoders
are read off the last inner solve.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import dual_solver
from .dual_solver import Infeasible, MinimizeResult, OracleResponse, Value
from .errors import UnboundedDualError
from .model import ProblemInstance
from .numerics import herm, logdet_identity_plus

__all__ = [
    "EffectiveChannelSvd",
    "InnerSolution",
    "DualPoint",
    "Solution",
    "waterfill",
    "inner_solution",
    "dual_point",
    "dual_oracle",
    "solve_optimal",
    "diagonalized_form",
    "positive_dual_count",
    "solution_to_json",
    "free_group_cut",
]

#: relative eigenvalue floor below which the priced Gram matrix counts as singular
SINGULAR_REL_TOL = 1e-10
#: duals above this are counted as strictly positive
POSITIVE_DUAL_TOL = 1e-6


@dataclass(frozen=True)
class EffectiveChannelSvd:
    """SVD of the whitened effective channel H_k Vt_k W."""

    U_hat: np.ndarray
    sigma: np.ndarray
    V_hat: np.ndarray


@dataclass(frozen=True)
class InnerSolution:
    """Closed-form maximizer of the per-user inner problem at fixed prices."""

    Q: np.ndarray
    contribution: float
    svd: EffectiveChannelSvd
    lam: np.ndarray
    W: np.ndarray


@dataclass(frozen=True)
class DualPoint:
    """Dual value, subgradient and every primal byproduct at one price vector."""

    value: float
    subgradient: np.ndarray
    inner: tuple[InnerSolution, ...]
    covariances: tuple[np.ndarray, ...]
    powers: np.ndarray
    rates: np.ndarray


@dataclass(frozen=True)
class Solution:
    """Solved precoding problem: covariances, precoders and certificates."""

    covariances: tuple[np.ndarray, ...]
    precoders: tuple[np.ndarray, ...]
    per_user_rates: np.ndarray
    per_group_powers: np.ndarray
    dual_value: float
    primal_value: float
    duality_gap: float
    mu: np.ndarray
    iterations: int
    converged: bool
    method: str
    trace: tuple[dual_solver.DualState, ...] = field(default=(), repr=False)


def waterfill(weight: float, gains: np.ndarray) -> np.ndarray:
    """Per-stream allocation lambda_i = max(0, w - 1/gains_i^2).

    Zero gains are allowed and get zero power.
    """
    gains = np.asarray(gains, dtype=float)
    with np.errstate(divide="ignore"):
        inv_g2 = np.where(gains > 0, gains**-2.0, np.inf)
    return np.maximum(0.0, float(weight) - inv_g2)


def _priced_gram(mu: np.ndarray, problem: ProblemInstance, k: int) -> np.ndarray:
    bmu = mu @ problem.masks.diagonals  # per-antenna price
    V = problem.bases.bases[k]
    return herm((V.conj().T * bmu) @ V)


def inner_solution(
    mu: np.ndarray,
    k: int,
    problem: ProblemInstance,
    allow_singular: bool = False,
) -> InnerSolution:
    """Whiten, SVD, water-fill: the closed-form inner maximizer for user k.

    A singular priced Gram matrix means free power on unpriced antennas and
    an unbounded inner problem; the strict mode raises so the dual loop can
    cut toward priced regions. The lenient mode clamps eigenvalues at the
    jitter floor instead, used at polish and assembly time where a group's
    price may legitimately sit at exactly zero.
    """
    A = _priced_gram(mu, problem, k)
    evals, evecs = np.linalg.eigh(A)
    top = max(float(evals[-1]), 0.0)
    if not allow_singular and (top <= 0.0 or evals[0] <= SINGULAR_REL_TOL * top):
        raise UnboundedDualError(k)
    jitter = 1e-12 * (1.0 + float(np.max(mu, initial=0.0)))
    W = (evecs * np.clip(evals, jitter, None) ** -0.5) @ evecs.conj().T

    F = problem.channels.channels[k] @ problem.bases.bases[k] @ W
    U_hat, sigma, Vh = np.linalg.svd(F, full_matrices=False)
    V_hat = Vh.conj().T
    w_k = problem.config.weights[k]
    lam = waterfill(w_k, sigma)
    Q = herm(((W @ V_hat) * lam) @ (V_hat.conj().T @ W))
    contribution = float(w_k * np.sum(np.log1p(sigma**2 * lam)) - lam.sum())
    return InnerSolution(Q, contribution, EffectiveChannelSvd(U_hat, sigma, V_hat), lam, W)


def dual_point(
    mu: np.ndarray,
    problem: ProblemInstance,
    allow_singular: bool = False,
) -> DualPoint:
    """Evaluate the dual at mu with all primal byproducts.

    Raises UnboundedDualError in strict mode when any user's inner problem
    is unbounded.
    """
    cfg = problem.config
    inner = tuple(
        inner_solution(mu, k, problem, allow_singular) for k in range(cfg.num_users)
    )
    covariances = []
    used = np.zeros(cfg.group_count)
    rates = np.zeros(cfg.num_users)
    for k, sol in enumerate(inner):
        V = problem.bases.bases[k]
        S = herm(V @ sol.Q @ V.conj().T)
        covariances.append(S)
        used += problem.masks.diagonals @ np.real(np.diag(S))
        rates[k] = float(np.sum(np.log1p(sol.svd.sigma**2 * sol.lam)))
    budgets = np.asarray(cfg.budgets)
    value = sum(s.contribution for s in inner) + float(mu @ budgets)
    subgradient = budgets - used
    return DualPoint(value, subgradient, inner, tuple(covariances), used, rates)


def free_group_cut(mu: np.ndarray) -> Infeasible:
    """Cut emitted at unbounded dual points: price the currently free groups.

    Unboundedness comes from power piling onto antennas with zero price, so
    the kept halfspace is the one where the free groups' total price grows.
    """
    d = (mu <= 1e-8).astype(float)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        d = np.ones_like(mu)
        norm = np.linalg.norm(d)
    return Infeasible(-d / norm)


def dual_oracle(mu: np.ndarray, problem: ProblemInstance) -> OracleResponse:
    """Value-and-subgradient oracle for the dual minimization."""
    try:
        point = dual_point(mu, problem)
    except UnboundedDualError:
        return free_group_cut(mu)
    return Value(point.value, point.subgradient)


def initial_radius(problem: ProblemInstance, mu0: np.ndarray) -> float:
    """Ball guaranteed to contain the optimal prices.

    At the optimum sum_a mu_a P_a equals the total whitened power, which the
    water-filling levels bound by N * sum_k w_k; doubling that leaves slack.
    """
    cfg = problem.config
    bound = 2.0 * cfg.antennas_per_user * sum(cfg.weights) / min(cfg.budgets)
    return max(2.0, float(np.linalg.norm(mu0)) + bound)


def _run_dual(
    problem: ProblemInstance,
    oracle,
    lenient_oracle,
    tol: float,
    max_iter: int,
    initial_mu: float,
) -> tuple[np.ndarray, MinimizeResult, bool]:
    cfg = problem.config
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
    return mu_star, result, polished


def solve_optimal(
    problem: ProblemInstance,
    tol: float = 1e-6,
    max_iter: int = 5000,
    initial_mu: float = 0.2,
    point_cache: dict | None = None,
) -> Solution:
    """Full pipeline: ellipsoid dual search, active-set polish, assembly.

    point_cache, when given, records every strict-oracle evaluation keyed
    by the price vector's bytes; the reporting layer uses it to attach
    primal quantities to the iteration trace without re-solving.
    """

    def oracle(mu: np.ndarray) -> OracleResponse:
        try:
            point = dual_point(mu, problem)
        except UnboundedDualError:
            return free_group_cut(mu)
        if point_cache is not None:
            point_cache[mu.tobytes()] = point
        return Value(point.value, point.subgradient)

    def lenient_oracle(mu: np.ndarray) -> OracleResponse:
        try:
            point = dual_point(mu, problem, allow_singular=True)
        except UnboundedDualError:  # pragma: no cover - lenient mode clamps
            return free_group_cut(mu)
        return Value(point.value, point.subgradient)

    mu_star, result, polished = _run_dual(
        problem, oracle, lenient_oracle, tol, max_iter, initial_mu
    )
    final = dual_point(mu_star, problem, allow_singular=True)
    return _assemble(problem, mu_star, final, result, polished, "optimal")


def _assemble(
    problem: ProblemInstance,
    mu: np.ndarray,
    final: DualPoint,
    result: MinimizeResult,
    polished: bool,
    method: str,
) -> Solution:
    cfg = problem.config
    precoders = []
    rates = np.zeros(cfg.num_users)
    for k, sol in enumerate(final.inner):
        V = problem.bases.bases[k]
        T = V @ ((sol.W @ sol.svd.V_hat) * np.sqrt(sol.lam))
        precoders.append(T)
        H = problem.channels.channels[k]
        rates[k] = logdet_identity_plus(herm(H @ final.covariances[k] @ H.conj().T))
    weights = np.asarray(cfg.weights)
    primal = float(weights @ rates)
    return Solution(
        covariances=final.covariances,
        precoders=tuple(precoders),
        per_user_rates=rates,
        per_group_powers=final.powers.copy(),
        dual_value=final.value,
        primal_value=primal,
        duality_gap=final.value - primal,
        mu=mu.copy(),
        iterations=result.iterations,
        converged=bool(result.converged or polished),
        method=method,
        trace=result.trace,
    )


def diagonalized_form(
    solution: Solution, problem: ProblemInstance, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Receive filter and per-stream gains that diagonalize user k's link.

    Applying the returned decoder to H_k T_k leaves diag(sigma_i *
    sqrt(lambda_i)): the link splits into independent scalar subchannels
    whose rates sum to the user rate.
    """
    sol = inner_solution(solution.mu, k, problem, allow_singular=True)
    decoder = sol.svd.U_hat.conj().T
    gains = sol.svd.sigma * np.sqrt(sol.lam)
    return decoder, gains


def positive_dual_count(solution: Solution, thresh: float = POSITIVE_DUAL_TOL) -> int:
    """How many constraint groups carry a strictly positive price."""
    return int(np.sum(solution.mu > thresh))


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]


def solution_to_json(solution: Solution) -> str:
    doc = {
        "method": solution.method,
        "covariances": [_matrix_json(S) for S in solution.covariances],
        "precoders": [_matrix_json(T) for T in solution.precoders],
        "per_user_rates": [float(r) for r in solution.per_user_rates],
        "per_group_powers": [float(p) for p in solution.per_group_powers],
        "dual_value": solution.dual_value,
        "primal_value": solution.primal_value,
        "duality_gap": solution.duality_gap,
        "mu": [float(m) for m in solution.mu],
        "iterations": solution.iterations,
        "converged": solution.converged,
    }
    return json.dumps(doc, indent=1)
