"""Full-order simulation and snapshot assembly."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .avf import AvfConfig, ImplicitSkewSystem, StepFailure, StepWorkspace, avf_step
from .models import Model


@dataclass
class Trajectory:
    """States ``z^0..z^Nt`` stored as columns of ``states``."""

    model: str
    times: np.ndarray
    states: np.ndarray
    wall_clock: float = 0.0
    iterations: int = 0

    @property
    def n_steps(self) -> int:
        return self.states.shape[1] - 1

    def final(self) -> np.ndarray:
        return self.states[:, -1]


@dataclass
class EnergyTrace:
    times: np.ndarray
    values: np.ndarray
    label: str = "energy"

    def __len__(self):
        return len(self.values)


@dataclass
class SnapshotMatrix:
    """Snapshot columns plus a note of which block holds what."""

    data: np.ndarray
    blocks: list[str] = field(default_factory=list)

    @property
    def shape(self):
        return self.data.shape


def step_count(cfg: AvfConfig, t_final: float) -> int:
    if t_final < 0:
        raise ValueError(f"final time must be non-negative, got {t_final}")
    nt = int(round(t_final / cfg.dt))
    if abs(nt * cfg.dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"T={t_final} is not an integer multiple of dt={cfg.dt}")
    return nt


def integrate(system: ImplicitSkewSystem, z0, cfg: AvfConfig, nt: int, ws: StepWorkspace | None = None):
    """Run ``nt`` AVF steps from ``z0``.

    Returns ``(states, seconds, workspace)``; the timer covers the stepping
    loop only, not the factorization.
    """
    ws = ws or StepWorkspace(system, cfg.dt)
    states = np.empty((z0.shape[0], nt + 1))
    states[:, 0] = z0
    z = z0
    start = time.perf_counter()
    for k in range(nt):
        try:
            z = avf_step(system, z, cfg, ws)
        except StepFailure as exc:
            exc.step = k + 1
            exc.args = (f"step {k + 1}: {exc.args[0]}",)
            raise
        states[:, k + 1] = z
    return states, time.perf_counter() - start, ws


def full_order_system(model: Model) -> ImplicitSkewSystem:
    C, A, B = model.linear_system()
    return ImplicitSkewSystem(C=C, A=A, B=B, nonlinear=model.nonlinear)


def energy_trace(model: Model, traj: Trajectory) -> EnergyTrace:
    values = np.array([model.energy(traj.states[:, k]) for k in range(traj.states.shape[1])])
    return EnergyTrace(times=traj.times, values=values)


def run_fom(model: Model, cfg: AvfConfig, t_final: float, z0=None) -> tuple[Trajectory, EnergyTrace]:
    """Simulate from the exact initial data (or ``z0``) up to ``t_final``."""
    nt = step_count(cfg, t_final)
    z0 = model.initial_state() if z0 is None else np.asarray(z0, dtype=float)
    system = full_order_system(model)
    states, seconds, ws = integrate(system, z0, cfg, nt)
    traj = Trajectory(model.name, cfg.dt * np.arange(nt + 1), states, seconds, ws.iterations)
    return traj, energy_trace(model, traj)


def _snapshot_columns(traj: Trajectory) -> np.ndarray:
    if traj.states.shape[1] < 2:
        raise ValueError("trajectory has no steps beyond the initial state")
    return traj.states[:, 1:]


def assemble_snapshots(traj: Trajectory, model: Model) -> list[SnapshotMatrix]:
    """One derivative-augmented snapshot matrix per solved component.

    Columns are the states at t_1..t_Nt followed by the images of those states
    under each of ``model.snapshot_operators()``.
    """
    cols = _snapshot_columns(traj)
    n = model.n_nodes
    out = []
    for i, name in enumerate(model.components):
        Z = cols[i * n:(i + 1) * n]
        blocks = [Z] + [np.asarray(op @ Z) for op in model.snapshot_operators()]
        labels = [name] + [f"op{j}({name})" for j in range(1, len(blocks))]
        out.append(SnapshotMatrix(np.hstack(blocks), labels))
    return out


def collect_nonlinear_snapshots(traj: Trajectory, model: Model) -> list[SnapshotMatrix]:
    """Nonlinear vectors evaluated on the states at t_1..t_Nt, one matrix per term."""
    cols = _snapshot_columns(traj)
    n = model.n_nodes
    comps = [cols[i * n:(i + 1) * n] for i in range(model.n_components)]
    return [SnapshotMatrix(np.asarray(model.term(i, comps)), [t]) for i, t in enumerate(model.terms)]
