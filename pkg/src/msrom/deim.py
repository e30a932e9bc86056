"""Discrete empirical interpolation with QDEIM point selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .pod import PodError, shared_truncated_svd, truncated_svd


class DeimError(ValueError):
    pass


def compute_deim(S_nl, tol=None, n=None) -> tuple[np.ndarray, np.ndarray]:
    """DEIM basis ``Phi`` (left singular vectors) and all singular values."""
    return truncated_svd(S_nl, tol=tol, n=n, what="nonlinear snapshot")


def qdeim_select(Phi) -> np.ndarray:
    """Interpolation rows from a column-pivoted QR of ``Phi.T``.

    Raises ``DeimError`` when a pivot vanishes, i.e. ``Phi`` is rank deficient.
    """
    Phi = np.asarray(Phi, dtype=float)
    N, m = Phi.shape
    if m > N:
        raise DeimError(f"DEIM basis has more columns ({m}) than rows ({N})")
    R, piv = la.qr(Phi.T, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))
    tiny = max(N, m) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    bad = np.flatnonzero(diag <= tiny)
    if diag.size == 0 or bad.size:
        col = int(bad[0]) if bad.size else 0
        raise DeimError(f"DEIM basis is rank deficient at column {col}")
    return np.sort(piv[:m])


@dataclass(frozen=True)
class DeimOperator:
    """Interpolation data for one nonlinear term.

    Attributes
    ----------
    Phi : (N, m) ndarray
    indices : (m,) int ndarray
        Selected rows, i.e. the selection matrix ``P``.
    W : (N, m) ndarray
        ``Phi @ inv(P.T @ Phi)``; ``W @ y[indices]`` interpolates ``y``.
    projected : (n, m) ndarray
        ``V.T @ W`` for the basis the term is projected with.
    inv_norm : float
        Spectral norm of ``inv(P.T @ Phi)``.
    complement_norm : float
        Spectral norm of ``I - Phi Phi.T`` (1 whenever m < N).
    """

    Phi: np.ndarray
    indices: np.ndarray
    W: np.ndarray
    projected: np.ndarray
    inv_norm: float
    complement_norm: float

    @property
    def m(self) -> int:
        return self.indices.size

    @property
    def bound_constant(self) -> float:
        return self.inv_norm * self.complement_norm

    def interpolate(self, y):
        return self.W @ np.asarray(y)[self.indices]


def build_deim_operator(Phi, indices, V) -> DeimOperator:
    Phi = np.asarray(Phi, dtype=float)
    indices = np.asarray(indices, dtype=np.intp)
    V = getattr(V, "V", V)
    if np.unique(indices).size != indices.size:
        raise DeimError("interpolation indices are not distinct")
    if indices.size != Phi.shape[1]:
        raise DeimError(f"{indices.size} indices for {Phi.shape[1]} basis vectors")
    if V.shape[0] != Phi.shape[0]:
        raise DeimError(f"basis rows {V.shape[0]} != DEIM rows {Phi.shape[0]}")
    PtPhi = Phi[indices]
    sv = la.svdvals(PtPhi)
    if sv[-1] <= sv[0] * Phi.shape[1] * np.finfo(float).eps:
        raise DeimError("P.T @ Phi is singular")
    # W = Phi inv(P^T Phi)  <=>  W^T = solve((P^T Phi)^T, Phi^T)
    W = la.solve(PtPhi.T, Phi.T).T
    m, N = Phi.shape[1], Phi.shape[0]
    complement = 1.0 if m < N else float(np.linalg.norm(np.eye(N) - Phi @ Phi.T, 2))
    return DeimOperator(Phi=Phi, indices=indices, W=W, projected=V.T @ W,
                        inv_norm=float(1.0 / sv[-1]), complement_norm=complement)


def deim_from_snapshots(S_nl, V, tol=None, n=None) -> tuple[DeimOperator, np.ndarray]:
    """SVD, QDEIM and operator assembly in one call. Returns ``(operator, sigma)``."""
    try:
        Phi, sigma = compute_deim(S_nl, tol=tol, n=n)
    except PodError as exc:
        raise DeimError(str(exc)) from exc
    return build_deim_operator(Phi, qdeim_select(Phi), V), sigma


def deims_from_snapshots(mats, bases, tol=None, n=None) -> tuple[list[DeimOperator], list[np.ndarray]]:
    """DEIM operators for several nonlinear terms sharing one size.

    ``bases[i]`` is the basis that projects term ``i``. Returns the operators
    and the singular values of each nonlinear snapshot matrix.
    """
    try:
        pairs = shared_truncated_svd(mats, tol=tol, n=n, what="nonlinear snapshot")
    except PodError as exc:
        raise DeimError(str(exc)) from exc
    ops = [build_deim_operator(Phi, qdeim_select(Phi), V) for (Phi, _), V in zip(pairs, bases)]
    return ops, [s for _, s in pairs]
