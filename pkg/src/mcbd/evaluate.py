"""Method-agnostic verification: rates, powers, residuals, and a slow
first-order oracle that re-solves small instances from scratch.

The oracle shares only the model layer with the main solvers (channels,
bases, masks); its optimizer is plain projected-gradient ascent with
Dykstra alternating projections, deliberately simple so its answer can be
trusted as an independent reference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ConstraintScheme, PrecodingMode, ProblemInstance, SystemConfig
from .numerics import herm, logdet_identity_plus

__all__ = [
    "Metrics",
    "metrics",
    "OracleResult",
    "oracle_solve",
    "AuditRecord",
    "audit",
]

ACTIVE_REL_TOL = 1e-6


@dataclass(frozen=True)
class Metrics:
    weighted_sum_rate: float
    per_user_rates: np.ndarray
    per_group_powers: np.ndarray
    active_groups: int
    max_zf_residual: float
    min_covariance_eigenvalue: float


def _forbidden_pairs(mode: PrecodingMode, K: int):
    for k in range(K):
        for j in range(K):
            if j == k:
                continue
            if mode is PrecodingMode.BD or j > k:
                yield j, k


def metrics(covariances: tuple[np.ndarray, ...], problem: ProblemInstance) -> Metrics:
    """Rates, powers and residuals of a set of transmit covariances.

    Works for any producer: only the covariances and the instance matter.
    """
    cfg = problem.config
    channels = problem.channels.channels
    for S in covariances:
        defect = np.linalg.norm(S - S.conj().T) / max(1.0, np.linalg.norm(S))
        if defect > 1e-8:
            raise ValueError("covariances must be Hermitian")

    rates = np.zeros(cfg.num_users)
    min_eig = np.inf
    for k, S in enumerate(covariances):
        Hk = channels[k]
        rates[k] = logdet_identity_plus(herm(Hk @ S @ Hk.conj().T))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(herm(S))[0]))

    total = sum(covariances)
    powers = problem.masks.diagonals @ np.real(np.diag(total))
    budgets = np.asarray(cfg.budgets)
    active = int(np.sum(np.abs(budgets - powers) < ACTIVE_REL_TOL * budgets))

    residual = 0.0
    for j, k in _forbidden_pairs(cfg.mode, cfg.num_users):
        leak = channels[j] @ covariances[k] @ channels[j].conj().T
        residual = max(residual, float(np.linalg.norm(leak)))

    weights = np.asarray(cfg.weights)
    return Metrics(
        weighted_sum_rate=float(weights @ rates),
        per_user_rates=rates,
        per_group_powers=powers,
        active_groups=active,
        max_zf_residual=residual,
        min_covariance_eigenvalue=float(min_eig),
    )


@dataclass(frozen=True)
class AuditRecord:
    """Everything the invariant checks need about one solved instance."""

    seed: int
    method: str
    config: SystemConfig
    metrics: Metrics
    primal_value: float
    dual_value: float
    duality_gap: float
    positive_duals: int
    diag_offdiag: float
    diag_rate_err: float
    rank_one_defect: float | None
    orth_defect: float | None
    iterations: int
    converged: bool


def audit(problem: ProblemInstance, solution, seed: int = 0) -> AuditRecord:
    """Collect metrics plus structural defects for one Solution.

    The diagonalization defect compares the decoded link matrix against
    the diagonal of per-stream gains; for single-antenna users the largest
    secondary eigenvalue ratio is recorded, and under the sum-power scheme
    the worst off-diagonal of T^H T.
    """
    from .bd_optimal import diagonalized_form, positive_dual_count
    from .bd_suboptimal import projected_channel_svd, suboptimal_power_allocation

    cfg = problem.config
    m = metrics(solution.covariances, problem)

    sub_alloc = None
    if solution.method != "optimal":
        sub_alloc = suboptimal_power_allocation(solution.mu, problem)

    diag_offdiag = 0.0
    diag_rate_err = 0.0
    for k in range(cfg.num_users):
        if sub_alloc is None:
            decoder, gains = diagonalized_form(solution, problem, k)
        else:
            svd = projected_channel_svd(problem, k)
            decoder = svd.U.conj().T
            gains = svd.sigma * np.sqrt(sub_alloc.lam[k])
        D = decoder @ problem.channels.channels[k] @ solution.precoders[k]
        diag_offdiag = max(diag_offdiag, float(np.max(np.abs(D - np.diag(gains)))))
        scalar_rate = float(np.sum(np.log1p(gains**2)))
        diag_rate_err = max(diag_rate_err, abs(scalar_rate - float(solution.per_user_rates[k])))

    rank_one_defect = None
    if cfg.antennas_per_user == 1:
        rank_one_defect = 0.0
        for S in solution.covariances:
            evals = np.linalg.eigvalsh(herm(S))
            top = float(evals[-1])
            if top > 1e-12 and evals.size > 1:
                rank_one_defect = max(rank_one_defect, float(evals[-2]) / top)

    orth_defect = None
    if cfg.scheme is ConstraintScheme.SUM:
        orth_defect = 0.0
        for T in solution.precoders:
            gram = T.conj().T @ T
            off = gram - np.diag(np.diag(gram))
            orth_defect = max(orth_defect, float(np.max(np.abs(off))) if off.size else 0.0)

    return AuditRecord(
        seed=seed,
        method=solution.method,
        config=cfg,
        metrics=m,
        primal_value=solution.primal_value,
        dual_value=solution.dual_value,
        duality_gap=solution.duality_gap,
        positive_duals=positive_dual_count(solution),
        diag_offdiag=diag_offdiag,
        diag_rate_err=diag_rate_err,
        rank_one_defect=rank_one_defect,
        orth_defect=orth_defect,
        iterations=solution.iterations,
        converged=solution.converged,
    )


@dataclass(frozen=True)
class OracleResult:
    value: float
    iterations: int
    converged: bool


def _project_psd(Q: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(herm(Q))
    return (evecs * np.maximum(evals, 0.0)) @ evecs.conj().T


def oracle_solve(
    problem: ProblemInstance,
    stat_tol: float = 1e-7,
    max_iter: int = 50_000,
    plateau_tol: float | None = None,
    plateau_window: int = 50,
    dykstra_iter: int = 300,
) -> OracleResult:
    """Projected-gradient reference solve of the reduced convex problem.

    Ascent on the per-user reduced covariances with backtracking line
    search; the feasible set (PSD cones intersected with the group power
    half-spaces) is handled by Dykstra's alternating projections. Stops at
    the stationarity tolerance, or, when plateau_tol is given, once the
    objective improves by less than plateau_tol (relative) over a window.
    Simple and slow by design.
    """
    cfg = problem.config
    K = cfg.num_users
    A_eff = [problem.channels.channels[k] @ problem.bases.bases[k] for k in range(K)]
    dims = [problem.bases.bases[k].shape[1] for k in range(K)]
    G = cfg.group_count
    budgets = np.asarray(cfg.budgets)
    weights = np.asarray(cfg.weights)
    # constraint matrices in the reduced bases: power_a = sum_k <C[a][k], Q_k>
    C = [
        [
            herm((problem.bases.bases[k].conj().T * problem.masks.diagonals[a])
                 @ problem.bases.bases[k])
            for k in range(K)
        ]
        for a in range(G)
    ]
    C_norm2 = np.array(
        [sum(np.linalg.norm(C[a][k]) ** 2 for k in range(K)) for a in range(G)]
    )

    def objective(Qs):
        return float(
            sum(
                weights[k]
                * logdet_identity_plus(herm(A_eff[k] @ Qs[k] @ A_eff[k].conj().T))
                for k in range(K)
            )
        )

    def gradient(Qs):
        grads = []
        for k in range(K):
            N = A_eff[k].shape[0]
            inv = np.linalg.inv(np.eye(N) + A_eff[k] @ Qs[k] @ A_eff[k].conj().T)
            grads.append(herm(weights[k] * A_eff[k].conj().T @ inv @ A_eff[k]))
        return grads

    def project(Qs):
        X = [Q.copy() for Q in Qs]
        inc_psd = [np.zeros_like(Q) for Q in Qs]
        inc_half = [[np.zeros_like(Q) for Q in Qs] for _ in range(G)]
        # PSD pass last so the returned point is exactly in the cones and
        # the residual Dykstra error sits on the power half-spaces, where
        # the objective tolerates it
        for _ in range(dykstra_iter):
            delta = 0.0
            for a in range(G):
                Y = [X[k] + inc_half[a][k] for k in range(K)]
                excess = (
                    sum(float(np.real(np.trace(C[a][k] @ Y[k]))) for k in range(K))
                    - budgets[a]
                )
                if excess > 0:
                    t = excess / C_norm2[a]
                    Xn = [Y[k] - t * C[a][k] for k in range(K)]
                else:
                    Xn = Y
                for k in range(K):
                    inc_half[a][k] = Y[k] - Xn[k]
                    delta += float(np.linalg.norm(Xn[k] - X[k]) ** 2)
                    X[k] = Xn[k]
            for k in range(K):
                Y = X[k] + inc_psd[k]
                Xn = _project_psd(Y)
                inc_psd[k] = Y - Xn
                delta += float(np.linalg.norm(Xn - X[k]) ** 2)
                X[k] = Xn
            if delta < 1e-12:
                break
        return X

    Qs = [np.zeros((d, d), dtype=complex) for d in dims]
    f = objective(Qs)
    step = 1.0
    history = [f]
    for it in range(max_iter):
        grads = gradient(Qs)
        dist2 = 0.0
        while True:
            cand = project([Qs[k] + step * grads[k] for k in range(K)])
            f_cand = objective(cand)
            ascent = sum(
                float(np.real(np.trace(grads[k].conj().T @ (cand[k] - Qs[k]))))
                for k in range(K)
            )
            dist2 = sum(float(np.linalg.norm(cand[k] - Qs[k]) ** 2) for k in range(K))
            if f_cand >= f + 0.3 * ascent - 1e-15 or dist2 < 1e-30 or step < 1e-12:
                break
            step *= 0.5
        stationarity = np.sqrt(dist2) / max(step, 1e-12)
        Qs, f = cand, f_cand
        step = min(step * 1.3, 1e3)
        history.append(f)
        if stationarity < stat_tol:
            return OracleResult(f, it + 1, True)
        if (
            plateau_tol is not None
            and len(history) > plateau_window
            and history[-1] - history[-1 - plateau_window]
            < plateau_tol * max(1.0, abs(history[-1]))
        ):
            return OracleResult(f, it + 1, True)
    return OracleResult(f, max_iter, False)
