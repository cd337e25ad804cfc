"""Ellipsoid minimization of a convex dual over the nonnegative orthant.

The minimizer only sees a value-and-subgradient oracle, so the same loop
drives both the full matrix dual and the cheaper per-stream dual. A cut
vector c always means "keep the halfspace c^T (z - center) <= 0".

The ellipsoid lands near, not at, the optimum; refine_active_set then
solves the subgradient system exactly on the detected active set with a
damped Newton iteration, which is what makes active power constraints
tight to machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import NumericFailure

__all__ = [
    "Value",
    "Infeasible",
    "OracleResponse",
    "DualState",
    "MinimizeResult",
    "minimize",
    "refine_active_set",
    "trace_to_rows",
]


@dataclass(frozen=True)
class Value:
    """Feasible oracle answer: objective value and a subgradient."""

    value: float
    subgradient: np.ndarray


@dataclass(frozen=True)
class Infeasible:
    """The objective is unbounded below the cut halfspace at this point."""

    cut: np.ndarray


OracleResponse = Union[Value, Infeasible]
Oracle = Callable[[np.ndarray], OracleResponse]


@dataclass(frozen=True)
class DualState:
    center: np.ndarray
    shape: np.ndarray
    iteration: int
    best_value: float
    best_mu: np.ndarray | None


@dataclass(frozen=True)
class MinimizeResult:
    mu: np.ndarray
    value: float
    trace: tuple[DualState, ...]
    converged: bool
    iterations: int


def _check_response(resp: OracleResponse, dim: int) -> None:
    vec = resp.cut if isinstance(resp, Infeasible) else resp.subgradient
    if vec.shape != (dim,) or not np.all(np.isfinite(vec)):
        raise NumericFailure("oracle returned a malformed cut vector")


def minimize(
    oracle: Oracle,
    dim: int,
    initial_mu: np.ndarray | None = None,
    initial_radius: float = 10.0,
    tol: float = 1e-6,
    max_iter: int = 5000,
) -> MinimizeResult:
    """Central-cut ellipsoid minimization of a convex f over mu >= 0.

    Cut priority per iteration: a negative coordinate triggers a
    feasibility cut -e_a (most negative entry first) without querying the
    oracle; an Infeasible response applies the oracle's own cut; otherwise
    the subgradient makes an objective cut. Terminates once the guaranteed
    objective gap sqrt(g^T P g) on an objective cut drops to tol. The best
    feasible value seen is tracked and returned with the full trace.

    dim == 1 is served by bisection on the subgradient sign, which is more
    robust than a one-dimensional ellipsoid.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    mu0 = np.zeros(dim) if initial_mu is None else np.asarray(initial_mu, dtype=float)
    if dim == 1:
        return _bisect(oracle, float(mu0[0]), initial_radius, tol, max_iter)

    n = dim
    mu = mu0.copy()
    shape = np.eye(n) * float(initial_radius) ** 2
    best_value = np.inf
    best_mu: np.ndarray | None = None
    trace: list[DualState] = []
    converged = False
    iterations = 0

    for it in range(max_iter):
        iterations = it + 1
        if np.any(mu < 0):
            cut = np.zeros(n)
            cut[int(np.argmin(mu))] = -1.0
            objective_cut = False
        else:
            resp = oracle(mu)
            _check_response(resp, n)
            if isinstance(resp, Infeasible):
                cut = resp.cut
                objective_cut = False
            else:
                if resp.value < best_value:
                    best_value = resp.value
                    best_mu = mu.copy()
                cut = resp.subgradient
                objective_cut = True

        Pg = shape @ cut
        gPg = float(cut @ Pg)
        if gPg <= 0:
            # the ellipsoid has collapsed along the cut direction
            break
        width = np.sqrt(gPg)
        if objective_cut and width <= tol:
            converged = True
            trace.append(DualState(mu.copy(), shape.copy(), iterations, best_value,
                                   None if best_mu is None else best_mu.copy()))
            break
        gt = Pg / width
        mu = mu - gt / (n + 1)
        shape = (n**2 / (n**2 - 1.0)) * (shape - (2.0 / (n + 1)) * np.outer(gt, gt))
        shape = 0.5 * (shape + shape.T)
        trace.append(DualState(mu.copy(), shape.copy(), iterations, best_value,
                               None if best_mu is None else best_mu.copy()))

    if best_mu is None:
        # never saw a feasible value; fall back to the clipped center
        best_mu = np.maximum(mu, 0.0)
        resp = oracle(best_mu)
        if isinstance(resp, Value):
            best_value = resp.value
    return MinimizeResult(best_mu, best_value, tuple(trace), converged, iterations)


def _bisect(oracle: Oracle, mu0: float, radius: float, tol: float, max_iter: int) -> MinimizeResult:
    """Scalar dual: the subgradient is increasing, so bracket its sign change.

    An Infeasible response means the price is still too low and counts as a
    negative subgradient.
    """

    def probe(x: float) -> tuple[float | None, float]:
        resp = oracle(np.array([x]))
        _check_response(resp, 1)
        if isinstance(resp, Infeasible):
            return None, -1.0
        return resp.value, float(resp.subgradient[0])

    best_value = np.inf
    best_mu = None
    trace: list[DualState] = []
    iterations = 0

    lo = 0.0
    hi = max(abs(mu0), 1.0)
    for _ in range(200):
        iterations += 1
        value, s = probe(hi)
        if value is not None and value < best_value:
            best_value, best_mu = value, np.array([hi])
        trace.append(DualState(np.array([hi]), np.array([[hi * hi]]), iterations,
                               best_value, best_mu))
        if s >= 0:
            break
        hi *= 2.0
    else:
        raise NumericFailure("scalar dual: subgradient never became nonnegative")

    converged = False
    while iterations < max_iter:
        iterations += 1
        mid = 0.5 * (lo + hi)
        value, s = probe(mid)
        if value is not None and value < best_value:
            best_value, best_mu = value, np.array([mid])
        half = 0.5 * (hi - lo)
        trace.append(DualState(np.array([mid]), np.array([[half * half]]), iterations,
                               best_value, best_mu))
        if s < 0:
            lo = mid
        else:
            hi = mid
        if (hi - lo) * max(abs(s), 1.0) <= tol or (hi - lo) <= 1e-15 * max(1.0, hi):
            converged = True
            break

    if best_mu is None:
        best_mu = np.array([hi])
        value, _ = probe(hi)
        best_value = value if value is not None else np.inf
    return MinimizeResult(best_mu, best_value, tuple(trace), converged, iterations)


def trace_to_rows(trace: tuple[DualState, ...]) -> list[tuple]:
    """Flatten a trace into (iteration, mu..., best_value) tuples."""
    return [(st.iteration, *np.asarray(st.center, dtype=float), st.best_value) for st in trace]


def _subgradient_at(oracle: Oracle, mu: np.ndarray) -> np.ndarray | None:
    resp = oracle(mu)
    if isinstance(resp, Infeasible):
        return None
    return np.asarray(resp.subgradient, dtype=float)


def refine_active_set(
    oracle: Oracle,
    mu_hat: np.ndarray,
    scale: float = 1.0,
    active_tol: float = 1e-6,
    target: float = 1e-10,
    max_newton: int = 60,
) -> tuple[np.ndarray, bool]:
    """Polish a near-optimal dual point to machine-precision KKT residuals.

    Starting from the ellipsoid's best point, coordinates above
    max(active_tol, 1e-3 * max entry) form the trial active set; a damped
    Newton iteration with a finite-difference Jacobian drives the active
    subgradients to zero. Coordinates pushed nonpositive are dropped (ratio
    test), near-singular Jacobians drop the smallest coordinate, and the
    final point must leave every inactive subgradient nonnegative or the
    violated coordinate is re-activated. Falls back to mu_hat on failure.
    """
    mu_hat = np.maximum(np.asarray(mu_hat, dtype=float), 0.0)
    dim = mu_hat.size
    top = float(mu_hat.max()) if dim else 0.0
    active = set(np.where(mu_hat > max(active_tol, 1e-3 * top))[0].tolist())
    if not active:
        return mu_hat, False
    tol_f = target * max(1.0, scale)

    for _round in range(4):
        result = _newton_on_active(oracle, mu_hat, sorted(active), tol_f, max_newton)
        if result is None:
            return mu_hat, False
        mu, s = result
        violated = [a for a in range(dim) if a not in active and s[a] < -10 * tol_f]
        if not violated:
            return mu, True
        active.update(violated)
    return mu_hat, False


def _newton_on_active(
    oracle: Oracle,
    mu_hat: np.ndarray,
    active: list[int],
    tol_f: float,
    max_newton: int,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Solve s_a(mu) = 0 for a in the active set, zeros elsewhere.

    Returns (mu, full subgradient) or None. The active list shrinks in
    place when the ratio test or a rank-deficient Jacobian drops an index.
    """
    active = list(active)
    dim = mu_hat.size

    def full(nu: np.ndarray) -> np.ndarray:
        m = np.zeros(dim)
        m[active] = nu
        return m

    def F(nu: np.ndarray) -> np.ndarray | None:
        s = _subgradient_at(oracle, full(nu))
        return None if s is None else s[active]

    nu = mu_hat[active].copy()
    for _ in range(max_newton):
        if not active:
            return None
        f0 = F(nu)
        if f0 is None:
            return None
        if np.max(np.abs(f0)) <= tol_f:
            s = _subgradient_at(oracle, full(nu))
            if s is None:
                return None
            return full(nu), s

        m = len(active)
        J = np.empty((m, m))
        base = 1e-7
        for j in range(m):
            h = base * max(1.0, abs(nu[j]))
            nu2 = nu.copy()
            nu2[j] += h
            f2 = F(nu2)
            if f2 is None:
                return None
            J[:, j] = (f2 - f0) / h

        drop = None
        try:
            cond_bad = np.linalg.cond(J) > 1e12
        except np.linalg.LinAlgError:
            cond_bad = True
        if cond_bad:
            drop = active[int(np.argmin(nu))]
        else:
            step = np.linalg.solve(J, -f0)
            # ratio test: stay strictly inside the orthant
            t_max = 1.0
            blocker = None
            for j in range(m):
                if step[j] < 0 and nu[j] + step[j] <= 0:
                    t_j = -nu[j] / step[j]
                    if t_j < t_max:
                        t_max = t_j
                        blocker = active[j]
            if t_max < 1e-10 and blocker is not None:
                drop = blocker
            else:
                norm0 = np.linalg.norm(f0)
                t = t_max
                accepted = False
                for _ls in range(40):
                    cand = nu + t * step
                    if np.all(cand > 0):
                        fc = F(cand)
                        if fc is not None and np.linalg.norm(fc) < norm0:
                            nu = cand
                            accepted = True
                            break
                    t *= 0.5
                if not accepted:
                    if blocker is not None:
                        drop = blocker
                    elif m > 1:
                        drop = active[int(np.argmin(nu))]
                    else:
                        return None

        if drop is not None:
            j = active.index(drop)
            active.pop(j)
            nu = np.delete(nu, j)
            if not active:
                return None
    return None
