"""Proper orthogonal decomposition and Galerkin-reduced operators."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

log = logging.getLogger(__name__)


class PodError(ValueError):
    pass


@dataclass(frozen=True)
class PodBasis:
    """Leading left singular vectors of a snapshot matrix.

    Attributes
    ----------
    V : (N, n) ndarray
        Orthonormal basis, columns ordered by decreasing singular value.
    sigma : ndarray
        Every singular value of the snapshot matrix (kept for decay plots).
    tol : float or None
        Relative singular-value threshold used to pick ``n``, if any.
    """

    V: np.ndarray
    sigma: np.ndarray
    tol: float | None = None

    @property
    def n(self) -> int:
        return self.V.shape[1]

    @property
    def N(self) -> int:
        return self.V.shape[0]

    def project(self, z):
        return project(self.V, z)

    def lift(self, alpha):
        return lift(self.V, alpha)


def numerical_rank(sigma: np.ndarray, shape) -> int:
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    cutoff = sigma[0] * max(shape) * np.finfo(float).eps
    return int(np.count_nonzero(sigma > cutoff))


def modes_for_tolerance(sigma: np.ndarray, tol: float) -> int:
    """Number of modes with ``sigma_i / sigma_1 >= tol``.

    Equivalently, one less than the first index where the normalized singular
    value drops below ``tol``; a value exactly at ``tol`` is kept.
    """
    if not tol > 0:
        raise PodError(f"tolerance must be positive, got {tol}")
    return int(np.count_nonzero(sigma / sigma[0] >= tol))


def _svd(S, what):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.size == 0:
        raise PodError(f"{what} matrix must be a non-empty 2D array")
    if not np.all(np.isfinite(S)):
        raise PodError(f"{what} matrix has non-finite entries")
    U, sigma, _ = la.svd(S, full_matrices=False, lapack_driver="gesdd")
    rank = numerical_rank(sigma, S.shape)
    if rank == 0:
        raise PodError(f"{what} matrix is zero")
    return U, sigma, rank


def _clamp(n, rank, what):
    if n < 1:
        raise PodError(f"mode count must be positive, got {n}")
    if n > rank:
        warnings.warn(f"requested {n} modes but {what} rank is {rank}; clamping", stacklevel=4)
        return rank
    return n


def truncated_svd(S, tol=None, n=None, what="snapshot"):
    """Thin SVD of ``S`` truncated by a relative tolerance or a fixed count.

    Returns ``(U[:, :n], sigma)`` with the full singular-value sequence.
    """
    if (tol is None) == (n is None):
        raise PodError("give exactly one of tol or n")
    U, sigma, rank = _svd(S, what)
    if n is None:
        n = min(modes_for_tolerance(sigma, tol), rank)
    else:
        n = _clamp(n, rank, what)
    return U[:, :n].copy(), sigma


def shared_truncated_svd(mats, tol=None, n=None, what="snapshot"):
    """Truncate several matrices to one common size.

    With a tolerance, each matrix's count is computed separately and the
    largest is used for all, clamped to the smallest rank. Returns a list of
    ``(U, sigma)`` pairs.
    """
    if (tol is None) == (n is None):
        raise PodError("give exactly one of tol or n")
    svds = [_svd(S, what) for S in mats]
    rank = min(r for _, _, r in svds)
    if n is None:
        n = min(max(modes_for_tolerance(s, tol) for _, s, _ in svds), rank)
    else:
        n = _clamp(n, rank, what)
    return [(U[:, :n].copy(), s) for U, s, _ in svds]


def compute_pod(S, tol=None, n=None) -> PodBasis:
    """POD basis of a snapshot matrix by tolerance ``tol`` or fixed size ``n``."""
    V, sigma = truncated_svd(S, tol=tol, n=n)
    log.debug("POD: kept %d of %d singular values", V.shape[1], sigma.size)
    return PodBasis(V=V, sigma=sigma, tol=tol)


def compute_pods(mats, tol=None, n=None) -> list[PodBasis]:
    """One POD basis per snapshot matrix, all of the same size."""
    return [PodBasis(V=V, sigma=s, tol=tol) for V, s in shared_truncated_svd(mats, tol=tol, n=n)]


def _matrix(V):
    return V.V if isinstance(V, PodBasis) else np.asarray(V)


def project(V, z):
    V = _matrix(V)
    z = np.asarray(z, dtype=float)
    if z.shape[0] != V.shape[0]:
        raise PodError(f"state length {z.shape[0]} does not match basis rows {V.shape[0]}")
    return V.T @ z


def lift(V, alpha):
    V = _matrix(V)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[0] != V.shape[1]:
        raise PodError(f"coefficient length {alpha.shape[0]} does not match basis size {V.shape[1]}")
    return V @ alpha


def reduce_operator(V, D) -> np.ndarray:
    """Dense ``V.T @ D @ V`` for a sparse or dense operator ``D``."""
    V = _matrix(V)
    if D.shape != (V.shape[0], V.shape[0]):
        raise PodError(f"operator shape {D.shape} incompatible with basis {V.shape}")
    return np.asarray(V.T @ (D @ V))


def cross_mass(V1, V2) -> np.ndarray:
    V1, V2 = _matrix(V1), _matrix(V2)
    if V1.shape[0] != V2.shape[0]:
        raise PodError("bases live on different grids")
    return V1.T @ V2
