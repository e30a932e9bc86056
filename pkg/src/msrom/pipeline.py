"""End-to-end runs: FOM, offline reduction, P-ROM and PD-ROM, metrics.

``REFERENCE_CASES`` holds the reference settings for each benchmark so that a
bare ``RunConfig(model)`` reproduces the published tables.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .avf import AvfConfig, StepWorkspace
from .deim import deims_from_snapshots
from .fom import (Trajectory, assemble_snapshots, collect_nonlinear_snapshots, energy_trace,
                  full_order_system, integrate, step_count)
from .metrics import ErrorReport, e_energy, e_shape, e_sol, observable
from .models import MODELS, Model, ModelError
from .pod import compute_pods
from .rom import (P_ROM, PD_ROM, BoundTrace, ReducedSystem, build_reduced_system, energy_bound_trace,
                  galerkin_energy_trace, lifted_energy_trace)

FOM = "FOM"
VARIANTS = (FOM, P_ROM, PD_ROM)


@dataclass(frozen=True)
class ReferenceCase:
    nx: int
    ny: int | None
    dt: float
    t_final: float
    pod_n: int
    deim_n: int
    profile_times: tuple = ()


REFERENCE_CASES = {
    "kdv": ReferenceCase(1000, None, 0.01, 10.0, 40, 45, (0.0, 4.0, 10.0)),
    "nls1d": ReferenceCase(1000, None, 0.01, 5.0, 25, 45, (0.0, 5.0)),
    "zk": ReferenceCase(100, 100, 0.01, 5.0, 15, 25, (0.0, 5.0)),
    "nls2d": ReferenceCase(100, 100, 0.01, 10.0, 10, 20, (0.0, 10.0)),
}


@dataclass
class RunConfig:
    """Parameters of one run; ``None`` fields fall back to ``REFERENCE_CASES``."""

    model: str
    nx: int | None = None
    ny: int | None = None
    dt: float | None = None
    t_final: float | None = None
    pod_tol: float | None = None
    pod_n: int | None = None
    deim_tol: float | None = None
    deim_n: int | None = None
    tol: float = 1e-12
    max_iters: int = 100
    observable: str = "modulus"
    out: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ModelError(f"unknown model {self.model!r}; valid names: {', '.join(MODELS)}")
        if self.pod_tol is not None and self.pod_n is not None:
            raise ValueError("give either pod_tol or pod_n, not both")
        if self.deim_tol is not None and self.deim_n is not None:
            raise ValueError("give either deim_tol or deim_n, not both")

    def resolved(self) -> "RunConfig":
        case = REFERENCE_CASES[self.model]
        cfg = replace(
            self,
            nx=self.nx or case.nx,
            # square grids by default when only nx is given
            ny=None if case.ny is None else (self.ny or self.nx or case.ny),
            dt=self.dt or case.dt,
            t_final=case.t_final if self.t_final is None else self.t_final,
        )
        if cfg.pod_tol is None and cfg.pod_n is None:
            cfg.pod_n = case.pod_n
        if cfg.deim_tol is None and cfg.deim_n is None:
            cfg.deim_n = case.deim_n
        return cfg

    @property
    def profile_times(self) -> tuple:
        case = REFERENCE_CASES[self.model]
        T = self.t_final
        times = [t for t in case.profile_times if t <= T] if T is not None else list(case.profile_times)
        return tuple(sorted(set(times) | {0.0, T or 0.0}))

    def build_model(self) -> Model:
        cfg = self.resolved()
        factory = MODELS[cfg.model]
        if cfg.model in ("zk", "nls2d"):
            return factory(nx=cfg.nx, ny=cfg.ny)
        return factory(nx=cfg.nx)

    def avf(self) -> AvfConfig:
        cfg = self.resolved()
        return AvfConfig(dt=cfg.dt, tol=cfg.tol, max_iters=cfg.max_iters)


def exact_matrix(model: Model, times) -> np.ndarray:
    return np.column_stack([model.exact(t) for t in times])


def solution_metrics(model: Model, states, times, kind="modulus") -> tuple[float, float]:
    """``(E_sol, E_shape)`` of full-order states against the exact solution."""
    Ze = observable(model, exact_matrix(model, times), kind)
    Zh = observable(model, states, kind)
    return e_sol(Zh, Ze), e_shape(Zh[:, -1], Ze)


def timed_integration(system, z0, cfg: AvfConfig, nt: int, repeats: int = 1):
    """Integrate ``repeats`` times on one factorization.

    Returns ``(states, median_seconds, factorization_seconds, workspace)``.
    """
    start = time.perf_counter()
    ws = StepWorkspace(system, cfg.dt)
    factor = time.perf_counter() - start
    timings = []
    for _ in range(max(1, repeats)):
        states, seconds, ws = integrate(system, z0, cfg, nt, ws)
        timings.append(seconds)
    return states, statistics.median(timings), factor, ws


@dataclass
class Offline:
    pods: list
    deims: list
    deim_sigma: list
    seconds: dict = field(default_factory=dict)

    @property
    def bases(self) -> list:
        return [p.V for p in self.pods]

    @property
    def n(self) -> int:
        return self.pods[0].n

    @property
    def ntilde(self) -> int:
        return self.deims[0].m


def offline_stage(model: Model, traj: Trajectory, cfg: RunConfig) -> Offline:
    """POD bases and DEIM operators from a FOM trajectory."""
    cfg = cfg.resolved()
    t0 = time.perf_counter()
    snaps = assemble_snapshots(traj, model)
    pods = compute_pods([s.data for s in snaps], tol=cfg.pod_tol, n=cfg.pod_n)
    t1 = time.perf_counter()
    nl = collect_nonlinear_snapshots(traj, model)
    term_bases = [pods[c].V for c in model.term_component]
    deims, sigma = deims_from_snapshots([s.data for s in nl], term_bases, tol=cfg.deim_tol, n=cfg.deim_n)
    t2 = time.perf_counter()
    return Offline(pods, deims, sigma, {"pod_s": t1 - t0, "deim_s": t2 - t1})


@dataclass
class VariantResult:
    variant: str
    report: ErrorReport
    traj: Trajectory
    energy: np.ndarray
    galerkin_energy: np.ndarray | None = None
    bound: BoundTrace | None = None
    system: ReducedSystem | None = None
    offline_seconds: dict = field(default_factory=dict)

    def lifted_states(self) -> np.ndarray:
        return self.traj.states if self.system is None else self.system.lift(self.traj.states)


@dataclass
class CaseResult:
    config: RunConfig
    model: Model
    results: dict
    offline: Offline | None = None

    @property
    def reports(self) -> list[ErrorReport]:
        return [self.results[v].report for v in VARIANTS if v in self.results]


def run_fom_case(cfg: RunConfig, repeats: int = 1, model: Model | None = None) -> VariantResult:
    cfg = cfg.resolved()
    model = model or cfg.build_model()
    avf = cfg.avf()
    nt = step_count(avf, cfg.t_final)
    z0 = model.initial_state()
    states, seconds, factor, ws = timed_integration(full_order_system(model), z0, avf, nt, repeats)
    traj = Trajectory(model.name, avf.dt * np.arange(nt + 1), states, seconds, ws.iterations)
    energy = energy_trace(model, traj).values
    es, esh = solution_metrics(model, states, traj.times, cfg.observable)
    report = ErrorReport(model.name, FOM, None, None, es, esh, e_energy(energy), seconds)
    return VariantResult(FOM, report, traj, energy, offline_seconds={"factorization_s": factor})


def run_rom_case(cfg: RunConfig, model: Model, offline: Offline, variant: str, repeats: int = 1,
                 with_bound: bool = True) -> VariantResult:
    """Build and run one reduced variant; energies are evaluated after timing."""
    cfg = cfg.resolved()
    avf = cfg.avf()
    nt = step_count(avf, cfg.t_final)
    start = time.perf_counter()
    rs = build_reduced_system(model, offline.bases, offline.deims if variant == PD_ROM else None)
    assembly = time.perf_counter() - start
    z0 = model.initial_state()
    alpha, seconds, factor, ws = timed_integration(rs.system, rs.project(z0), avf, nt, repeats)
    traj = Trajectory(f"{model.name}:{variant}", avf.dt * np.arange(nt + 1), alpha, seconds, ws.iterations)
    lifted = lifted_energy_trace(rs, traj).values
    galerkin = galerkin_energy_trace(rs, traj).values
    es, esh = solution_metrics(model, rs.lift(alpha), traj.times, cfg.observable)
    # the reduced energy is measured against the energy of the full-order initial data
    ee = e_energy(lifted, reference=model.energy(z0))
    ntilde = offline.ntilde if variant == PD_ROM else None
    report = ErrorReport(model.name, variant, offline.n, ntilde, es, esh, ee, seconds)
    bound = energy_bound_trace(rs, traj, avf.dt) if variant == PD_ROM and with_bound and nt > 0 else None
    return VariantResult(variant, report, traj, lifted, galerkin, bound, rs,
                         {"assembly_s": assembly, "factorization_s": factor})


def run_case(cfg: RunConfig, variants=VARIANTS, repeats: int = 1) -> CaseResult:
    """FOM, offline stage and the requested reduced variants for one model.

    The FOM always runs since it provides the snapshots. Speedups are the FOM
    stepping time divided by each variant's stepping time.
    """
    cfg = cfg.resolved()
    model = cfg.build_model()
    fom = run_fom_case(cfg, repeats if FOM in variants else 1, model)
    results = {FOM: fom}
    offline = None
    reduced = [v for v in variants if v != FOM]
    if reduced:
        offline = offline_stage(model, fom.traj, cfg)
        for v in reduced:
            results[v] = run_rom_case(cfg, model, offline, v, repeats)
    for r in results.values():
        wall = r.report.wall_clock_s
        r.report.speedup = fom.report.wall_clock_s / wall if wall > 0 else float("inf")
    if FOM not in variants:
        del results[FOM]
    return CaseResult(cfg, model, results, offline)
