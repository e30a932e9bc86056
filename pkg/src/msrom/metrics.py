"""Error metrics and result tables.

For the NLS models the errors are measured on the modulus ``sqrt(p^2 + q^2)``
by default (``observable="modulus"``); pass ``observable="state"`` to compare
the stacked ``(p; q)`` blocks instead. The modulus is insensitive to the slow
global phase drift of the discrete soliton, which otherwise dominates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

TABLE_COLUMNS = ("model", "variant", "n", "ntilde", "e_sol", "e_shape", "e_energy", "wall_clock_s", "speedup")


class MetricError(ValueError):
    pass


def observable(model, states, kind: str = "modulus") -> np.ndarray:
    """Field on which errors are measured, for one state or a column stack."""
    states = np.asarray(states, dtype=float)
    if kind == "state" or model.n_components == 1:
        return states
    if kind != "modulus":
        raise MetricError(f"unknown observable {kind!r}")
    n = model.n_nodes
    return np.hypot(states[:n], states[n:2 * n])


def e_sol(Zh, Ze) -> float:
    """Relative Frobenius error ``|Zh - Ze|_F / |Ze|_F``."""
    Zh = np.asarray(Zh, dtype=float)
    Ze = np.asarray(Ze, dtype=float)
    if Zh.shape != Ze.shape:
        raise MetricError(f"shape mismatch {Zh.shape} vs {Ze.shape}")
    ref = np.linalg.norm(Ze)
    if ref == 0.0:
        raise MetricError("exact solution matrix is zero")
    return float(np.linalg.norm(Zh - Ze) / ref)


def e_shape(z_final, exact) -> float:
    """Smallest squared distance of the final state to any exact state.

    ``exact`` is either a matrix whose columns are the exact states on the time
    grid (last column at the final time) or a pair ``(func, n_times)`` with
    ``func(k)`` returning the exact state at ``t_k``. The squared distance is
    normalized by the squared norm of the exact final state.
    """
    z_final = np.asarray(z_final, dtype=float)
    if isinstance(exact, tuple):
        func, count = exact
        columns = (func(k) for k in range(count))
        ref = np.asarray(func(count - 1), dtype=float)
    else:
        exact = np.asarray(exact, dtype=float)
        columns = exact.T
        ref = exact[:, -1]
    denom = float(ref @ ref)
    if denom == 0.0:
        raise MetricError("exact final state is zero")
    best = min(float(np.sum((z_final - col) ** 2)) for col in columns)
    return best / denom


def e_energy(values, reference: float | None = None) -> float:
    """``max_k |e_k - e_ref| / |e_ref|``; ``e_ref`` defaults to ``values[0]``."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    ref = values[0] if reference is None else float(reference)
    if ref == 0.0:
        raise MetricError("reference energy is zero; report the absolute drift instead")
    return float(np.max(np.abs(values - ref)) / abs(ref))


def energy_drift(values) -> float:
    values = np.asarray(getattr(values, "values", values), dtype=float)
    return float(np.max(np.abs(values - values[0])))


@dataclass
class ErrorReport:
    model: str
    variant: str
    n: int | None
    ntilde: int | None
    e_sol: float
    e_shape: float
    e_energy: float
    wall_clock_s: float
    speedup: float = 1.0

    def __post_init__(self):
        for name in ("e_sol", "e_shape", "e_energy"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise MetricError(f"{name}={v} is not a finite non-negative number")

    def row(self) -> dict:
        return asdict(self)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.8e}"
    return str(v)


def write_table(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for r in reports:
            d = r.row()
            w.writerow([_fmt(d[c]) for c in TABLE_COLUMNS])


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_columns(path, header, columns) -> None:
    """Write equally long columns as CSV in scientific notation."""
    columns = [np.asarray(c) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([str(int(v)) if np.issubdtype(type(v), np.integer) else f"{float(v):.10e}" for v in row])


def write_decay(path, sigma) -> None:
    sigma = np.asarray(sigma, dtype=float)
    write_columns(path, ("index", "sigma_rel"), (np.arange(1, sigma.size + 1), sigma / sigma[0]))
