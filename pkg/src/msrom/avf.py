"""Average vector field (AVF) time stepping for linearly-implicit skew systems.

A system here is the eliminated form

    C (z1 - z0)/dt + A (z1 + z0)/2 = B * integral_0^1 N(L((1-s) z0 + s z1)) ds

with constant matrices ``C``, ``A``, ``B``, an optional constant lift ``L``
and a pointwise polynomial nonlinearity ``N``. The implicit equation is solved
by fixed-point iteration around a factorization of ``C/dt + A/2`` computed once.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class StepFailure(RuntimeError):
    """The fixed-point iteration did not converge."""

    def __init__(self, message, residual=np.nan, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class FactorizationError(RuntimeError):
    """The linear step operator is singular."""


@dataclass(frozen=True)
class AvfConfig:
    dt: float
    tol: float = 1e-12
    max_iters: int = 100
    quadrature: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        # every nonlinearity in this package has degree <= 3 along a segment
        if self.quadrature < 2:
            raise ValueError("need at least 2 Gauss points for cubic integrands")


@lru_cache(maxsize=None)
def gauss_legendre(points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(points)
    return 0.5 * (x + 1.0), 0.5 * w


def avf_average(nonlinearity: Callable[[np.ndarray], np.ndarray], a, b, quadrature: int = 2) -> np.ndarray:
    """Return the segment average of ``nonlinearity`` between ``a`` and ``b``.

    Exact for polynomial integrands of degree up to ``2*quadrature - 1``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"segment endpoints differ in shape: {a.shape} vs {b.shape}")
    nodes, weights = gauss_legendre(quadrature)
    d = b - a
    out = weights[0] * nonlinearity(a + nodes[0] * d)
    for s, w in zip(nodes[1:], weights[1:]):
        out = out + w * nonlinearity(a + s * d)
    return out


@dataclass
class ImplicitSkewSystem:
    """Constant-coefficient data of one AVF-discretized model.

    ``C``, ``A``, ``B`` and ``lift`` may be scipy sparse matrices or dense
    arrays. ``lift=None`` means the nonlinearity acts on the state itself.
    """

    C: object
    A: object
    B: object
    nonlinear: Callable[[np.ndarray], np.ndarray]
    lift: object = None

    @property
    def size(self) -> int:
        return self.C.shape[0]

    def lifted(self, z: np.ndarray) -> np.ndarray:
        return z if self.lift is None else self.lift @ z


class StepWorkspace:
    """Prefactorized linear core of the AVF step for one ``(system, dt)``.

    Sparse systems keep a sparse LU; dense (reduced) systems precompute the
    propagator ``(C/dt + A/2)^-1 (C/dt - A/2)`` and forcing ``(C/dt + A/2)^-1 B``
    explicitly so that an online step is a handful of small mat-vecs.
    """

    def __init__(self, system: ImplicitSkewSystem, dt: float):
        if dt == 0:
            raise ValueError("dt must be nonzero")
        self.dt = dt
        self.iterations = 0
        self.steps = 0
        C, A, B = system.C, system.A, system.B
        if sp.issparse(C) or sp.issparse(A):
            S = sp.csc_matrix(C / dt + 0.5 * A)
            R = sp.csr_matrix(C / dt - 0.5 * A)
            try:
                lu = spla.splu(S)
            except RuntimeError as exc:
                raise FactorizationError(str(exc)) from exc
            Bs = sp.csr_matrix(B) if sp.issparse(B) else np.asarray(B)
            self.propagate = lambda z: lu.solve(R @ z)
            self.force = lambda y: lu.solve(Bs @ y)
            self.dense = False
        else:
            C = np.asarray(C, dtype=float)
            A = np.asarray(A, dtype=float)
            S = C / dt + 0.5 * A
            with warnings.catch_warnings():
                warnings.simplefilter("error", la.LinAlgWarning)
                try:
                    lu = la.lu_factor(S)
                except (la.LinAlgWarning, la.LinAlgError) as exc:
                    raise FactorizationError(f"singular step matrix: {exc}") from exc
            if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0]))) == 0.0:
                raise FactorizationError("singular step matrix")
            self.G = la.lu_solve(lu, C / dt - 0.5 * A)
            self.H = la.lu_solve(lu, np.asarray(B, dtype=float))
            self.propagate = self.G.__matmul__
            self.force = self.H.__matmul__
            self.dense = True


def avf_step(system: ImplicitSkewSystem, zk: np.ndarray, cfg: AvfConfig, ws: StepWorkspace) -> np.ndarray:
    """Advance one AVF step from ``zk`` and return the new state.

    Each sweep re-evaluates the nonlinear average with the latest iterate and
    solves the prefactorized linear system. Converged when the update norm is
    below ``cfg.tol * max(1, |zk|)``.
    """
    base = ws.propagate(zk)
    lk = system.lifted(zk)
    threshold = cfg.tol * max(1.0, float(np.linalg.norm(zk)))
    z = zk
    update = np.inf
    for it in range(1, cfg.max_iters + 1):
        avg = avf_average(system.nonlinear, lk, system.lifted(z), cfg.quadrature)
        z_new = base + ws.force(avg)
        update = float(np.linalg.norm(z_new - z))
        z = z_new
        if update <= threshold:
            ws.iterations += it
            ws.steps += 1
            return z
        if not np.isfinite(update):
            break
    raise StepFailure(
        f"fixed-point iteration stalled after {it} sweeps (update {update:.3e} > {threshold:.3e})",
        residual=update,
    )
