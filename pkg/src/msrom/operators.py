"""Periodic centered-difference operators on uniform 1D and 2D grids.

All operators are stored as scipy CSR matrices. In 2D the node ordering is
lexicographic with the x-index running fastest, so node ``j`` sits at
``(x[j % nx], y[j // nx])``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class GridError(ValueError):
    """Invalid grid or operator request."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid.

    ``nx`` (and ``ny``) count the distinct periodic nodes, so the mesh size is
    ``(x_right - x_left) / nx`` and the right endpoint is identified with the
    left one.
    """

    x_left: float
    x_right: float
    nx: int
    y_left: float | None = None
    y_right: float | None = None
    ny: int | None = None

    def __post_init__(self):
        if self.nx < 3 or self.x_right <= self.x_left:
            raise GridError(f"invalid x-partition: nx={self.nx}, [{self.x_left}, {self.x_right}]")
        if self.ny is not None:
            if self.y_left is None or self.y_right is None:
                raise GridError("2D grid needs y bounds")
            if self.ny < 3 or self.y_right <= self.y_left:
                raise GridError(f"invalid y-partition: ny={self.ny}, [{self.y_left}, {self.y_right}]")

    @property
    def dims(self) -> int:
        return 1 if self.ny is None else 2

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.nx

    @property
    def dy(self) -> float:
        if self.ny is None:
            raise GridError("1D grid has no dy")
        return (self.y_right - self.y_left) / self.ny

    @property
    def size(self) -> int:
        return self.nx if self.ny is None else self.nx * self.ny

    @property
    def cell(self) -> float:
        """Quadrature weight of one node (dx, or dx*dy in 2D)."""
        return self.dx if self.ny is None else self.dx * self.dy

    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.nx)

    def y(self) -> np.ndarray:
        if self.ny is None:
            raise GridError("1D grid has no y nodes")
        return self.y_left + self.dy * np.arange(self.ny)

    def nodes(self):
        """Node coordinates flattened in solver order.

        Returns ``x`` for 1D grids and the pair ``(x, y)`` of length-N arrays
        for 2D grids.
        """
        if self.ny is None:
            return self.x()
        X, Y = np.meshgrid(self.x(), self.y(), indexing="xy")
        return X.ravel(), Y.ravel()


def build_centered_diff(n: int, dx: float) -> sp.csr_matrix:
    """Return the n x n periodic centered first-difference matrix.

    Row j holds ``-1/(2dx)`` at column j-1 and ``+1/(2dx)`` at column j+1,
    indices taken modulo n.
    """
    if n < 3:
        raise GridError(f"centered stencil needs n >= 3, got {n}")
    if not dx > 0:
        raise GridError(f"mesh size must be positive, got {dx}")
    h = 1.0 / (2.0 * dx)
    rows = np.repeat(np.arange(n), 2)
    cols = np.empty(2 * n, dtype=np.int64)
    cols[0::2] = (np.arange(n) + 1) % n
    cols[1::2] = (np.arange(n) - 1) % n
    vals = np.tile([h, -h], n)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def build_2d_diffs(grid: Grid) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Return ``(Dx, Dy)`` for a 2D grid using Kronecker products."""
    if grid.dims != 2:
        raise GridError("build_2d_diffs needs a 2D grid")
    dnx = build_centered_diff(grid.nx, grid.dx)
    dny = build_centered_diff(grid.ny, grid.dy)
    Dx = sp.kron(sp.identity(grid.ny, format="csr"), dnx, format="csr")
    Dy = sp.kron(dny, sp.identity(grid.nx, format="csr"), format="csr")
    return Dx, Dy


def apply(op, v: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product with a length check."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != op.shape[1]:
        raise GridError(f"operator of size {op.shape[1]} applied to vector of length {v.shape[0]}")
    return op @ v


def block_diag(*blocks) -> sp.csr_matrix:
    return sp.block_diag(blocks, format="csr")
