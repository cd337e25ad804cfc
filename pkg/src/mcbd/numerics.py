"""Dense complex-matrix kernels used by every solver.

All operations are pure functions on ndarray inputs and are safe to call
concurrently. Logs are natural throughout; rate conversion to bits happens
only at the reporting layer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericFailure, SingularMatrixError

__all__ = [
    "ReducedSvd",
    "herm",
    "check_finite",
    "reduced_svd",
    "psd_inv_sqrt",
    "logdet_identity_plus",
]

#: absolute floor used when deciding whether a matrix is Hermitian / PSD
HERM_TOL = 1e-10
PSD_EIG_TOL = 1e-9


def herm(m: np.ndarray) -> np.ndarray:
    """Hermitian part (m + m^H)/2; absorbs accumulation error before eigh."""
    return 0.5 * (m + m.conj().T)


def check_finite(m: np.ndarray, name: str = "matrix") -> None:
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")


def _herm_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - m.conj().T)) / max(1.0, float(np.linalg.norm(m)))


@dataclass(frozen=True)
class ReducedSvd:
    """Rank-truncated SVD: m = U @ diag(s) @ V^H with r columns kept."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.s.size)


def reduced_svd(m: np.ndarray, rank_tol: float | None = None) -> ReducedSvd:
    """SVD keeping only singular triplets with sigma > rank_tol.

    The default tolerance is relative: 1e-10 * max(rows, cols) * sigma_max.
    Exact ranks do not survive floating point, so the threshold is explicit.
    """
    check_finite(m, "svd input")
    try:
        U, s, Vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"svd failed to converge on a {m.shape} matrix") from exc
    if rank_tol is None:
        rank_tol = 1e-10 * max(m.shape) * (float(s[0]) if s.size else 0.0)
    r = int(np.sum(s > rank_tol))
    return ReducedSvd(U[:, :r], s[:r].copy(), Vh[:r].conj().T)


def psd_inv_sqrt(m: np.ndarray, jitter: float = 0.0) -> np.ndarray:
    """Inverse square root of a Hermitian PSD matrix.

    Eigenvalues are clamped from below at `jitter`, which acts as a
    last-resort regularizer for near-singular inputs. If every eigenvalue
    sits at or below the floor the matrix carries no usable energy and a
    SingularMatrixError is raised instead.
    """
    check_finite(m, "psd_inv_sqrt input")
    if _herm_defect(m) > HERM_TOL:
        raise ValueError("psd_inv_sqrt expects a Hermitian matrix")
    evals, evecs = np.linalg.eigh(herm(m))
    scale = max(float(evals[-1]), 0.0)
    if evals[0] < -PSD_EIG_TOL * max(1.0, scale):
        raise ValueError("psd_inv_sqrt expects a positive semidefinite matrix")
    if scale <= jitter or scale == 0.0:
        raise SingularMatrixError("all eigenvalues at or below the jitter floor")
    clamped = np.maximum(evals, max(jitter, np.finfo(float).tiny))
    return (evecs * clamped**-0.5) @ evecs.conj().T


def logdet_identity_plus(x: np.ndarray) -> float:
    """log|I + x| for Hermitian PSD x, via eigenvalues; always >= 0."""
    check_finite(x, "logdet input")
    if _herm_defect(x) > HERM_TOL:
        raise ValueError("logdet_identity_plus expects a Hermitian matrix")
    evals = np.linalg.eigvalsh(herm(x))
    if evals.size and evals[0] < -PSD_EIG_TOL:
        raise ValueError("logdet_identity_plus expects a PSD matrix")
    return float(np.sum(np.log1p(np.maximum(evals, 0.0))))
