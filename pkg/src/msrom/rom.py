"""Galerkin (P-ROM) and DEIM hyper-reduced (PD-ROM) reduced-order models.

Both variants reuse the AVF machinery in coefficient space. The PD-ROM only
ever touches the interpolation rows of the bases online: its lift matrix holds
``V[indices]`` slices and its forcing matrix is ``B_hat @ V.T @ W``, so one
step costs O(n * m) regardless of the grid size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .avf import AvfConfig, ImplicitSkewSystem, StepWorkspace
from .deim import DeimOperator
from .fom import EnergyTrace, Trajectory, integrate, step_count
from .models import Model, ModelError

P_ROM = "P-ROM"
PD_ROM = "PD-ROM"


def _as_matrix(V):
    return np.asarray(getattr(V, "V", V), dtype=float)


def sampled_lift(model: Model, bases, deims) -> np.ndarray:
    """Rows of the block lift evaluated only at each term's interpolation points.

    The output of ``sampled_lift @ alpha`` is laid out term by term, and
    within a term component by component.
    """
    widths = [V.shape[1] for V in bases]
    offsets = np.concatenate([[0], np.cumsum(widths)])
    blocks = []
    for d in deims:
        for c, V in enumerate(bases):
            row = np.zeros((d.m, offsets[-1]))
            row[:, offsets[c]:offsets[c + 1]] = V[d.indices]
            blocks.append(row)
    return np.vstack(blocks)


def sampled_nonlinearity(model: Model, bases, deims, alpha=None):
    """Nonlinear terms evaluated at the interpolation rows only.

    Returns the callable acting on ``sampled_lift @ alpha``; when ``alpha`` is
    given, also evaluates it and returns the stacked sampled vector.
    """
    indices = [d.indices for d in deims]
    sizes = [d.m for d in deims]
    ncomp = model.n_components

    def nonlinear(y):
        out = []
        pos = 0
        for i, (idx, m) in enumerate(zip(indices, sizes)):
            comps = [y[pos + c * m: pos + (c + 1) * m] for c in range(ncomp)]
            pos += ncomp * m
            out.append(model.term(i, comps, idx))
        return np.concatenate(out) if len(out) > 1 else out[0]

    if alpha is None:
        return nonlinear
    return nonlinear(sampled_lift(model, bases, deims) @ np.asarray(alpha, dtype=float))


@dataclass
class ReducedSystem:
    model: Model
    variant: str
    bases: list
    ops: dict
    system: ImplicitSkewSystem
    deims: list | None = None
    offline_seconds: dict = field(default_factory=dict)

    @property
    def widths(self) -> list[int]:
        return [V.shape[1] for V in self.bases]

    @property
    def dim(self) -> int:
        return sum(self.widths)

    def split(self, alpha):
        offsets = np.concatenate([[0], np.cumsum(self.widths)])
        return [alpha[offsets[i]:offsets[i + 1]] for i in range(len(self.bases))]

    def project(self, z) -> np.ndarray:
        comps = self.model.split(z)
        return np.concatenate([V.T @ c for V, c in zip(self.bases, comps)])

    def lift(self, alpha) -> np.ndarray:
        """Full-order state(s) ``V alpha``; accepts one vector or a column stack."""
        alpha = np.asarray(alpha, dtype=float)
        parts = self.split(alpha)
        return np.concatenate([V @ a for V, a in zip(self.bases, parts)], axis=0)


def build_reduced_system(model: Model, bases, deims: list[DeimOperator] | None = None) -> ReducedSystem:
    """Assemble the P-ROM (``deims=None``) or PD-ROM of ``model``.

    ``bases`` holds one POD basis per solved component; ``deims`` one DEIM
    operator per nonlinear term, each built against the basis of
    ``model.term_component[i]``.
    """
    bases = [_as_matrix(V) for V in bases]
    model.check_bases(bases)
    ops = model.reduced_operators(bases)
    widths = [V.shape[1] for V in bases]
    if deims is None:
        projectors = [bases[c].T for c in model.term_component]
        lift = la.block_diag(*bases)
        nonlinear = model.nonlinear
        variant = P_ROM
    else:
        if len(deims) != len(model.terms):
            raise ModelError(f"{model.name} needs {len(model.terms)} DEIM operators, got {len(deims)}")
        projectors = []
        for d, c in zip(deims, model.term_component):
            if d.projected.shape[0] != widths[c] or d.W.shape[0] != model.n_nodes:
                raise ModelError(f"DEIM operator does not match the {model.components[c]} basis")
            projectors.append(d.projected)
        lift = sampled_lift(model, bases, deims)
        nonlinear = sampled_nonlinearity(model, bases, deims)
        variant = PD_ROM
    B = ops["B"] @ la.block_diag(*projectors)
    system = ImplicitSkewSystem(C=ops["C"], A=ops["A"], B=B, nonlinear=nonlinear, lift=lift)
    return ReducedSystem(model, variant, bases, ops, system, deims)


def run_rom(rs: ReducedSystem, cfg: AvfConfig, t_final: float, z0=None, ws: StepWorkspace | None = None):
    """Integrate the reduced system from ``alpha0 = V.T z0``.

    Returns ``(trajectory, energy_trace)`` where the trajectory holds the
    reduced coefficients and the trace is the full-order energy of the lifted
    states. ``trajectory.wall_clock`` covers the stepping loop only.
    """
    nt = step_count(cfg, t_final)
    z0 = rs.model.initial_state() if z0 is None else np.asarray(z0, dtype=float)
    alpha0 = rs.project(z0)
    states, seconds, ws = integrate(rs.system, alpha0, cfg, nt, ws)
    traj = Trajectory(f"{rs.model.name}:{rs.variant}", cfg.dt * np.arange(nt + 1), states, seconds, ws.iterations)
    return traj, lifted_energy_trace(rs, traj)


def reduced_energy(model: Model, bases, alpha) -> float:
    """Model energy of the lifted state ``V alpha``."""
    bases = [_as_matrix(V) for V in bases]
    offsets = np.concatenate([[0], np.cumsum([V.shape[1] for V in bases])])
    z = np.concatenate([V @ alpha[offsets[i]:offsets[i + 1]] for i, V in enumerate(bases)])
    return model.energy(z)


def lifted_energy_trace(rs: ReducedSystem, traj: Trajectory) -> EnergyTrace:
    Z = rs.lift(traj.states)
    values = np.array([rs.model.energy(Z[:, k]) for k in range(Z.shape[1])])
    return EnergyTrace(traj.times, values, "lifted")


def galerkin_energy_trace(rs: ReducedSystem, traj: Trajectory) -> EnergyTrace:
    values = np.array([rs.model.galerkin_energy(rs.bases, rs.ops, traj.states[:, k])
                       for k in range(traj.states.shape[1])])
    return EnergyTrace(traj.times, values, "galerkin")


@dataclass
class BoundTrace:
    """Per-step energy defect of a PD-ROM against its DEIM error bound.

    ``rhs = cell * inv_norm * complement_norm * potential_rate`` where
    ``potential_rate = sum_j |F_j(z^{k+1}) - F_j(z^k)| / dt`` over the nodal
    nonlinear potential ``F``.
    """

    steps: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    inv_norm: float
    complement_norm: float
    potential_rate: np.ndarray

    @property
    def violations(self) -> int:
        return int(np.count_nonzero(self.lhs > self.rhs))


def energy_bound_trace(rs: ReducedSystem, traj: Trajectory, dt: float) -> BoundTrace:
    """Measured ``|delta_t energy|`` of a PD-ROM run next to the DEIM bound."""
    if rs.deims is None:
        raise ValueError("energy bound applies to the hyper-reduced variant only")
    energy = galerkin_energy_trace(rs, traj).values
    Z = rs.lift(traj.states)
    n = rs.model.n_nodes
    dens = np.array([rs.model.potential([Z[c * n:(c + 1) * n, k] for c in range(rs.model.n_components)])
                     for k in range(Z.shape[1])])
    rate = np.sum(np.abs(np.diff(dens, axis=0)), axis=1) / dt
    inv_norm = max(d.inv_norm for d in rs.deims)
    comp = max(d.complement_norm for d in rs.deims)
    lhs = np.abs(np.diff(energy)) / dt
    rhs = rs.model.grid.cell * inv_norm * comp * rate
    return BoundTrace(np.arange(1, len(lhs) + 1), lhs, rhs, inv_norm, comp, rate)
