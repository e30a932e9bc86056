"""Benchmark multi-symplectic PDEs in their eliminated (solved-variable) form.

Every model reduces to

    C dz/dt + A z = B N(z)

with skew ``C`` and with ``A``, ``B`` built from skew difference operators,
so that the AVF step conserves a discrete energy exactly. State vectors use
component blocks: ``u`` for KdV/ZK, ``(p; q)`` for the NLS models.

Each model also knows how to assemble its Galerkin-reduced operators. Reduced
powers are powers of the reduced difference matrix (``D_hat**3``, not
``V.T D**3 V``); that keeps the reduced system skew and energy conserving.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .operators import Grid, GridError, build_2d_diffs, build_centered_diff
from .pod import reduce_operator, cross_mass


class ModelError(ValueError):
    """Invalid model parameters or state layout."""


def sech(x):
    return 1.0 / np.cosh(x)


class Model:
    """Common machinery; subclasses fill in the physics.

    Attributes set by subclasses: ``name``, ``grid``, ``components`` (names of
    the solved fields), ``terms`` (names of the nonlinear vectors) and
    ``term_component`` (index of the component whose basis projects each
    nonlinear term in the reduced model).
    """

    name: str
    grid: Grid
    components: tuple[str, ...]
    terms: tuple[str, ...]
    term_component: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return self.grid.size

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def size(self) -> int:
        return self.n_components * self.n_nodes

    def split(self, state) -> list[np.ndarray]:
        state = np.asarray(state, dtype=float)
        if state.shape[0] != self.size:
            raise ModelError(f"{self.name}: state length {state.shape[0]} != {self.size}")
        return [state[i * self.n_nodes:(i + 1) * self.n_nodes] for i in range(self.n_components)]

    def nonlinear(self, state) -> np.ndarray:
        """All nonlinear terms at every node, stacked like the state."""
        comps = self.split(state)
        return np.concatenate([self.term(i, comps) for i in range(len(self.terms))])

    def energy(self, state) -> float:
        """Discrete global energy of a full-order state."""
        raise NotImplementedError

    def potential(self, comps, nodes=None) -> np.ndarray:
        """Nodal density whose gradient is the nonlinear vector."""
        raise NotImplementedError

    def term(self, i, comps, nodes=None) -> np.ndarray:
        """Nonlinear term ``i`` evaluated from component values at ``nodes``.

        ``comps`` holds the component values at exactly those nodes;
        ``nodes=None`` means all grid nodes.
        """
        raise NotImplementedError

    def exact(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def initial_state(self) -> np.ndarray:
        return self.exact(0.0)

    def linear_system(self):
        """Sparse ``(C, A, B)`` of the full-order eliminated system."""
        raise NotImplementedError

    def snapshot_operators(self) -> list:
        """Operators whose images augment the state snapshots."""
        raise NotImplementedError

    def reduced_operators(self, bases) -> dict:
        """Dense Galerkin operators; keys ``C``, ``A``, ``B`` plus reduced differences."""
        raise NotImplementedError

    def galerkin_energy(self, bases, ops, alpha) -> float:
        """Energy the reduced system conserves exactly (reduced differences in the gradient terms)."""
        raise NotImplementedError

    def check_bases(self, bases):
        if len(bases) != self.n_components:
            raise ModelError(f"{self.name} needs {self.n_components} bases, got {len(bases)}")
        for V in bases:
            if V.shape[0] != self.n_nodes:
                raise ModelError(f"{self.name}: basis has {V.shape[0]} rows, grid has {self.n_nodes} nodes")
            if V.shape[1] == 0:
                raise ModelError(f"{self.name}: empty basis")


class KdV(Model):
    """u_t + eta u u_x + gamma^2 u_xxx = 0 on [0, P), soliton of speed c."""

    components = ("u",)
    terms = ("f",)
    term_component = (0,)

    def __init__(self, grid: Grid, eta=6.0, gamma=1.0, c=4.0, period=20.0):
        if grid.dims != 1:
            raise GridError("KdV needs a 1D grid")
        if gamma == 0:
            raise ModelError("gamma must be nonzero")
        self.name = "kdv"
        self.grid = grid
        self.eta, self.gamma, self.c, self.period = eta, gamma, c, period
        self.D = build_centered_diff(grid.nx, grid.dx)

    def term(self, i, comps, nodes=None):
        u = comps[0]
        return 0.5 * self.eta * u * u

    def potential(self, comps, nodes=None):
        u = comps[0]
        return self.eta / 6.0 * u**3

    def energy(self, state):
        (u,) = self.split(state)
        du = self.D @ u
        return self.grid.dx * float(np.sum(self.eta / 6.0 * u**3 - 0.5 * self.gamma**2 * du**2))

    def exact(self, t):
        x = self.grid.x()
        xi = np.mod(-x + self.c * t, self.period)
        return 0.5 * self.c * sech(xi - 0.5 * self.period) ** 2

    def linear_system(self):
        D = self.D
        n = self.n_nodes
        return sp.identity(n, format="csr"), (self.gamma**2) * (D @ D @ D), -D

    def snapshot_operators(self):
        return [self.gamma * self.D]

    def reduced_operators(self, bases):
        self.check_bases(bases)
        (V,) = bases
        Dh = reduce_operator(V, self.D)
        n = V.shape[1]
        return {"C": np.eye(n), "A": self.gamma**2 * Dh @ Dh @ Dh, "B": -Dh, "D": Dh}

    def galerkin_energy(self, bases, ops, alpha):
        u = bases[0] @ alpha
        da = ops["D"] @ alpha
        return self.grid.dx * (self.eta / 6.0 * float(np.sum(u**3)) - 0.5 * self.gamma**2 * float(da @ da))


class _CoupledNLS(Model):
    components = ("p", "q")
    terms = ("f", "g")
    term_component = (0, 1)

    def _mass(self):
        n = self.n_nodes
        I = sp.identity(n, format="csr")
        return sp.bmat([[None, I], [-I, None]], format="csr")

    @staticmethod
    def _reduced_mass(V1, V2):
        M = cross_mass(V1, V2)
        n1, n2 = M.shape
        return np.block([[np.zeros((n1, n1)), M], [-M.T, np.zeros((n2, n2))]])


class NLS1D(_CoupledNLS):
    """i psi_t + psi_xx + beta |psi|^2 psi = 0, psi = p + i q."""

    def __init__(self, grid: Grid, beta=2.0):
        if grid.dims != 1:
            raise GridError("1D NLS needs a 1D grid")
        if not beta > 0:
            raise ModelError("beta must be positive (focusing case)")
        self.name = "nls1d"
        self.grid = grid
        self.beta = beta
        self.D = build_centered_diff(grid.nx, grid.dx)

    def term(self, i, comps, nodes=None):
        p, q = comps
        rho = p * p + q * q
        return self.beta * rho * (p if i == 0 else q)

    def potential(self, comps, nodes=None):
        p, q = comps
        rho = p * p + q * q
        return 0.25 * self.beta * rho * rho

    def energy(self, state):
        p, q = self.split(state)
        dp, dq = self.D @ p, self.D @ q
        rho = p * p + q * q
        return 0.5 * self.grid.dx * float(np.sum(0.5 * self.beta * rho**2 - dp**2 - dq**2))

    def exact(self, t):
        x = self.grid.x()
        amp = sech(x - 2.0 * t)
        return np.concatenate([amp * np.cos(x), amp * np.sin(x)])

    def linear_system(self):
        D2 = self.D @ self.D
        A = sp.block_diag([-D2, -D2], format="csr")
        return self._mass(), A, sp.identity(self.size, format="csr")

    def snapshot_operators(self):
        return [self.D]

    def reduced_operators(self, bases):
        self.check_bases(bases)
        V1, V2 = bases
        D1, D2 = reduce_operator(V1, self.D), reduce_operator(V2, self.D)
        A = np.block([
            [-D1 @ D1, np.zeros((D1.shape[0], D2.shape[1]))],
            [np.zeros((D2.shape[0], D1.shape[1])), -D2 @ D2],
        ])
        C = self._reduced_mass(V1, V2)
        return {"C": C, "A": A, "B": np.eye(C.shape[0]), "D1": D1, "D2": D2}

    def galerkin_energy(self, bases, ops, alpha):
        V1, V2 = bases
        n1 = V1.shape[1]
        a1, a2 = alpha[:n1], alpha[n1:]
        p, q = V1 @ a1, V2 @ a2
        d1, d2 = ops["D1"] @ a1, ops["D2"] @ a2
        pot = float(np.sum(self.potential((p, q))))
        return self.grid.dx * (pot - 0.5 * float(d1 @ d1) - 0.5 * float(d2 @ d2))


class ZK(Model):
    """Zakharov-Kuznetsov: u_t + u u_x + u_xxx + u_xyy = 0 on [0, P)^2."""

    components = ("u",)
    terms = ("f",)
    term_component = (0,)

    def __init__(self, grid: Grid, c=1.0, period=20.0):
        if grid.dims != 2:
            raise GridError("ZK needs a 2D grid")
        self.name = "zk"
        self.grid = grid
        self.c, self.period = c, period
        self.Dx, self.Dy = build_2d_diffs(grid)

    def term(self, i, comps, nodes=None):
        u = comps[0]
        return 0.5 * u * u

    def potential(self, comps, nodes=None):
        return comps[0] ** 3 / 6.0

    def energy(self, state):
        (u,) = self.split(state)
        ux, uy = self.Dx @ u, self.Dy @ u
        return self.grid.cell * float(np.sum(0.5 * ux**2 + 0.5 * uy**2 - u**3 / 6.0))

    def exact(self, t):
        x, _ = self.grid.nodes()
        xi = np.mod(x - self.c * t, self.period)
        return 3.0 * self.c * sech(0.5 * np.sqrt(self.c) * (xi - 0.5 * self.period)) ** 2

    def linear_system(self):
        Dx, Dy = self.Dx, self.Dy
        A = Dx @ (Dx @ Dx + Dy @ Dy)
        return sp.identity(self.n_nodes, format="csr"), A.tocsr(), -Dx

    def snapshot_operators(self):
        return [self.Dx, self.Dy]

    def reduced_operators(self, bases):
        self.check_bases(bases)
        (V,) = bases
        Dx, Dy = reduce_operator(V, self.Dx), reduce_operator(V, self.Dy)
        n = V.shape[1]
        return {"C": np.eye(n), "A": Dx @ (Dx @ Dx + Dy @ Dy), "B": -Dx, "Dx": Dx, "Dy": Dy}

    def galerkin_energy(self, bases, ops, alpha):
        u = bases[0] @ alpha
        ax, ay = ops["Dx"] @ alpha, ops["Dy"] @ alpha
        return self.grid.cell * (0.5 * float(ax @ ax) + 0.5 * float(ay @ ay) - float(np.sum(u**3)) / 6.0)


class NLS2D(_CoupledNLS):
    """Gross-Pitaevskii form of the 2D NLS with a harmonic-plus-Gaussian potential."""

    def __init__(self, grid: Grid, mu=0.5, beta=1.0):
        if grid.dims != 2:
            raise GridError("2D NLS needs a 2D grid")
        self.name = "nls2d"
        self.grid = grid
        self.mu, self.beta = mu, beta
        self.Dx, self.Dy = build_2d_diffs(grid)
        x, y = grid.nodes()
        r2 = x * x + y * y
        self.r2 = r2
        self.R1 = -0.5 * r2 - 2.0 * np.exp(-r2)

    def _r1(self, nodes, like):
        r1 = self.R1 if nodes is None else self.R1[nodes]
        # snapshot evaluation passes (N, Nt) blocks
        return r1 if like.ndim == 1 else r1[:, None]

    def term(self, i, comps, nodes=None):
        p, q = comps
        coef = self._r1(nodes, p) + self.beta * (p * p + q * q)
        return coef * (p if i == 0 else q)

    def potential(self, comps, nodes=None):
        p, q = comps
        rho = p * p + q * q
        return 0.5 * (self._r1(nodes, p) * rho + 0.5 * self.beta * rho * rho)

    def energy(self, state):
        p, q = self.split(state)
        grads = sum(float(v @ v) for v in (self.Dx @ p, self.Dx @ q, self.Dy @ p, self.Dy @ q))
        rho = p * p + q * q
        R = self.R1 * rho + 0.5 * self.beta * rho**2
        return 0.5 * self.grid.cell * (float(np.sum(R)) - self.mu * grads)

    def exact(self, t):
        amp = np.sqrt(2.0) * np.exp(-0.5 * self.r2)
        return np.concatenate([amp * np.cos(t), -amp * np.sin(t)])

    def linear_system(self):
        L = -self.mu * (self.Dx @ self.Dx + self.Dy @ self.Dy)
        A = sp.block_diag([L, L], format="csr")
        return self._mass(), A, sp.identity(self.size, format="csr")

    def snapshot_operators(self):
        return [self.Dx, self.Dy]

    def reduced_operators(self, bases):
        self.check_bases(bases)
        V1, V2 = bases
        Dx1, Dy1 = reduce_operator(V1, self.Dx), reduce_operator(V1, self.Dy)
        Dx2, Dy2 = reduce_operator(V2, self.Dx), reduce_operator(V2, self.Dy)
        L1 = -self.mu * (Dx1 @ Dx1 + Dy1 @ Dy1)
        L2 = -self.mu * (Dx2 @ Dx2 + Dy2 @ Dy2)
        A = np.block([
            [L1, np.zeros((L1.shape[0], L2.shape[1]))],
            [np.zeros((L2.shape[0], L1.shape[1])), L2],
        ])
        C = self._reduced_mass(V1, V2)
        return {"C": C, "A": A, "B": np.eye(C.shape[0]), "Dx1": Dx1, "Dy1": Dy1, "Dx2": Dx2, "Dy2": Dy2}

    def galerkin_energy(self, bases, ops, alpha):
        V1, V2 = bases
        n1 = V1.shape[1]
        a1, a2 = alpha[:n1], alpha[n1:]
        pot = float(np.sum(self.potential((V1 @ a1, V2 @ a2))))
        grads = sum(float(v @ v) for v in (ops["Dx1"] @ a1, ops["Dy1"] @ a1, ops["Dx2"] @ a2, ops["Dy2"] @ a2))
        return self.grid.cell * (pot - 0.5 * self.mu * grads)


def kdv_model(eta=6.0, gamma=1.0, c=4.0, period=20.0, grid: Grid | None = None, nx=1000) -> KdV:
    grid = grid or Grid(0.0, period, nx)
    return KdV(grid, eta=eta, gamma=gamma, c=c, period=period)


def nls1d_model(beta=2.0, grid: Grid | None = None, nx=1000) -> NLS1D:
    grid = grid or Grid(-20.0, 60.0, nx)
    return NLS1D(grid, beta=beta)


def zk_model(c=1.0, period=20.0, grid: Grid | None = None, nx=100, ny=None) -> ZK:
    grid = grid or Grid(0.0, period, nx, 0.0, period, ny or nx)
    return ZK(grid, c=c, period=period)


def nls2d_model(mu=0.5, beta=1.0, grid: Grid | None = None, nx=100, ny=None) -> NLS2D:
    grid = grid or Grid(-6.0, 6.0, nx, -6.0, 6.0, ny or nx)
    return NLS2D(grid, mu=mu, beta=beta)


MODELS = {
    "kdv": kdv_model,
    "nls1d": nls1d_model,
    "zk": zk_model,
    "nls2d": nls2d_model,
}


def discrete_energy(model: Model, state) -> float:
    return model.energy(state)
