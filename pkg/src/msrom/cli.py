"""Command-line driver: ``msrom fom|reduce|rom|bench``.

Exit codes: 0 success, 2 usage or config error, 3 missing or unreadable
input file, 4 basis/model mismatch, 5 numerical failure (e.g. a stalled
fixed-point iteration).

Every subcommand accepts ``--config FILE`` with ``key = value`` lines whose
keys are the long option names (dashes or underscores). Values from the file
act as defaults; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .avf import FactorizationError, StepFailure
from .deim import DeimError, build_deim_operator, deims_from_snapshots
from .fom import assemble_snapshots, collect_nonlinear_snapshots
from .metrics import MetricError, observable, write_columns, write_decay, write_table
from .models import MODELS, ModelError
from .msrm import MsrmError, read_msrm, write_msrm
from .pipeline import FOM, P_ROM, PD_ROM, VARIANTS, Offline, RunConfig, run_case, run_fom_case, run_rom_case
from .pod import PodBasis, PodError, compute_pods

log = logging.getLogger("msrom")

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MISMATCH = 4
EXIT_NUMERIC = 5


class ConfigError(Exception):
    pass


class MismatchError(Exception):
    pass


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
        return v
    parse.__name__ = f"positive {kind.__name__}"
    return parse


def _non_negative_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text!r}")
    return v


pos_int = _positive(int)
pos_float = _positive(float)


def _add_run_options(p, reduction=True):
    p.add_argument("--model", required=True, choices=sorted(MODELS), help="benchmark model")
    p.add_argument("--nx", type=pos_int, help="grid points in x")
    p.add_argument("--ny", type=pos_int, help="grid points in y (2D models)")
    p.add_argument("--dt", type=pos_float, help="time step")
    p.add_argument("--t-final", type=_non_negative_float, help="final time")
    p.add_argument("--tol", type=pos_float, default=1e-12, help="fixed-point tolerance")
    p.add_argument("--max-iters", type=pos_int, default=100, help="fixed-point sweep limit")
    p.add_argument("--observable", choices=("modulus", "state"), default="modulus",
                   help="field compared with the exact solution for NLS models")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="key=value file; flags override it")
    if reduction:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--pod-tol", type=pos_float, help="relative singular value cutoff for POD")
        g.add_argument("--pod-n", type=pos_int, help="number of POD modes")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--deim-tol", type=pos_float, help="relative singular value cutoff for DEIM")
        g.add_argument("--deim-n", type=pos_int, help="number of DEIM modes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msrom", description="Energy-preserving FOM and reduced models")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fom", help="run the full-order model and write snapshots")
    _add_run_options(p, reduction=False)
    p.set_defaults(func=cmd_fom)

    p = sub.add_parser("reduce", help="compute POD and DEIM bases from snapshots")
    _add_run_options(p)
    p.add_argument("--snapshots", required=True, help="directory written by 'msrom fom'")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("rom", help="run a reduced model from stored bases")
    _add_run_options(p, reduction=False)
    p.add_argument("--bases", required=True, help="directory written by 'msrom reduce'")
    p.add_argument("--variant", choices=("p", "pd"), default="pd")
    p.set_defaults(func=cmd_rom)

    p = sub.add_parser("bench", help="FOM, P-ROM and PD-ROM with reference settings")
    p.add_argument("--model", default="all", choices=["all"] + sorted(MODELS))
    p.add_argument("--variant", default="all", choices=("all", "fom", "p", "pd"))
    p.add_argument("--repeats", type=pos_int, default=3, help="timed repetitions (median is reported)")
    p.add_argument("--jobs", type=pos_int, default=1, help="models run in parallel (skews timings)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="key=value file; flags override it")
    _add_bench_overrides(p)
    p.set_defaults(func=cmd_bench)
    return parser


def _add_bench_overrides(p):
    p.add_argument("--nx", type=pos_int)
    p.add_argument("--ny", type=pos_int)
    p.add_argument("--dt", type=pos_float)
    p.add_argument("--t-final", type=_non_negative_float)
    p.add_argument("--pod-n", type=pos_int)
    p.add_argument("--deim-n", type=pos_int)
    p.add_argument("--tol", type=pos_float, default=1e-12)
    p.add_argument("--max-iters", type=pos_int, default=100)
    p.add_argument("--observable", choices=("modulus", "state"), default="modulus")


def read_config(path, subparser: argparse.ArgumentParser) -> dict:
    """Parse ``key = value`` lines into typed defaults for ``subparser``."""
    actions = {a.dest: a for a in subparser._actions if a.option_strings}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}")
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")
        action = actions[dest]
        try:
            typed = action.type(value) if action.type else value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"{path}:{lineno}: field {key!r}: {exc}")
        if action.choices is not None and typed not in action.choices:
            raise ConfigError(f"{path}:{lineno}: field {key!r}: {typed!r} not in {sorted(action.choices)}")
        values[dest] = typed
    return values


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        command = next((a for a in argv if a in subparsers.choices), None)
        if command is not None:
            sub = subparsers.choices[command]
            try:
                values = read_config(known.config, sub)
            except ConfigError as exc:
                parser.exit(EXIT_USAGE, f"msrom: error: {exc}\n")
            # required options may come from the file
            for a in sub._actions:
                if a.dest in values:
                    a.required = False
            sub.set_defaults(**values)
    return parser.parse_args(argv)


def _run_config(args, **extra) -> RunConfig:
    fields = ("nx", "ny", "dt", "t_final", "pod_tol", "pod_n", "deim_tol", "deim_n", "tol", "max_iters", "observable")
    kw = {f: getattr(args, f) for f in fields if getattr(args, f, None) is not None}
    kw.update(extra)
    try:
        return RunConfig(args.model, out=getattr(args, "out", None), **kw).resolved()
    except ValueError as exc:
        raise ConfigError(str(exc))


def _write_energy(path, times, **columns):
    names = list(columns)
    write_columns(path, ["step", "t"] + names, [np.arange(len(times)), times] + [columns[n] for n in names])


def write_profiles(path, model, times_all, states, profile_times, kind="modulus"):
    """Exact and numerical fields at the grid times nearest ``profile_times``."""
    header, cols = [], []
    if model.grid.dims == 1:
        header.append("x")
        cols.append(model.grid.x())
    else:
        X, Y = model.grid.nodes()
        header += ["x", "y"]
        cols += [X, Y]
    for t in profile_times:
        k = int(np.argmin(np.abs(times_all - t)))
        tk = times_all[k]
        header += [f"exact_t{tk:g}", f"numeric_t{tk:g}"]
        cols += [observable(model, model.exact(tk), kind), observable(model, states[:, k], kind)]
    write_columns(path, header, cols)


def _print_report(rep):
    print(f"{rep.model} {rep.variant}: E_sol={rep.e_sol:.6e} E_shape={rep.e_shape:.6e} "
          f"E_energy={rep.e_energy:.6e} wall_clock={rep.wall_clock_s:.3f}s")


def cmd_fom(args) -> int:
    cfg = _run_config(args)
    os.makedirs(args.out, exist_ok=True)
    res = run_fom_case(cfg)
    model = cfg.build_model()
    traj = res.traj
    write_msrm(os.path.join(args.out, "trajectory.msrm"), traj.states)
    if traj.n_steps > 0:
        for name, s in zip(model.components, assemble_snapshots(traj, model)):
            write_msrm(os.path.join(args.out, f"snapshots_{name}.msrm"), s.data)
        for name, s in zip(model.terms, collect_nonlinear_snapshots(traj, model)):
            write_msrm(os.path.join(args.out, f"nonlinear_{name}.msrm"), s.data)
    else:
        log.warning("no time steps taken; snapshot files not written")
    _write_energy(os.path.join(args.out, "energy.csv"), traj.times, energy=res.energy)
    write_profiles(os.path.join(args.out, "profiles.csv"), model, traj.times, traj.states,
                   cfg.profile_times, cfg.observable)
    write_table([res.report], os.path.join(args.out, "metrics.csv"))
    _print_report(res.report)
    return 0


def _load(path):
    try:
        return read_msrm(path)
    except FileNotFoundError:
        raise FileNotFoundError(f"missing file: {path}")


def cmd_reduce(args) -> int:
    cfg = _run_config(args)
    model = cfg.build_model()
    snaps = [_load(os.path.join(args.snapshots, f"snapshots_{c}.msrm")) for c in model.components]
    nl = [_load(os.path.join(args.snapshots, f"nonlinear_{t}.msrm")) for t in model.terms]
    for S in snaps + nl:
        if S.shape[0] != model.n_nodes:
            raise MismatchError(f"snapshot rows {S.shape[0]} != {model.n_nodes} grid nodes of {model.name}")
    pods = compute_pods(snaps, tol=cfg.pod_tol, n=cfg.pod_n)
    deims, sigma = deims_from_snapshots(nl, [pods[c].V for c in model.term_component],
                                        tol=cfg.deim_tol, n=cfg.deim_n)
    os.makedirs(args.out, exist_ok=True)
    for name, p in zip(model.components, pods):
        write_msrm(os.path.join(args.out, f"basis_{name}.msrm"), p.V)
        write_decay(os.path.join(args.out, f"decay_pod_{name}.csv"), p.sigma)
    for name, d, s in zip(model.terms, deims, sigma):
        write_msrm(os.path.join(args.out, f"deim_{name}.msrm"), d.Phi)
        write_msrm(os.path.join(args.out, f"deim_indices_{name}.msrm"), d.indices.astype(float))
        write_decay(os.path.join(args.out, f"decay_deim_{name}.csv"), s)
    print(f"{model.name}: n={pods[0].n} ntilde={deims[0].m}")
    return 0


def load_offline(model, directory, with_deim: bool) -> Offline:
    bases = [_load(os.path.join(directory, f"basis_{c}.msrm")) for c in model.components]
    for V in bases:
        if V.shape[0] != model.n_nodes:
            raise MismatchError(f"basis rows {V.shape[0]} != {model.n_nodes} grid nodes of {model.name}")
    if len({V.shape[1] for V in bases}) != 1:
        raise MismatchError("component bases differ in size")
    pods = [PodBasis(V=V, sigma=np.array([])) for V in bases]
    deims = []
    if with_deim:
        for i, t in enumerate(model.terms):
            Phi = _load(os.path.join(directory, f"deim_{t}.msrm"))
            idx = _load(os.path.join(directory, f"deim_indices_{t}.msrm")).ravel()
            if Phi.shape[0] != model.n_nodes:
                raise MismatchError(f"DEIM basis rows {Phi.shape[0]} != {model.n_nodes} grid nodes")
            if np.any(idx != np.round(idx)) or np.any(idx < 0) or np.any(idx >= model.n_nodes):
                raise MismatchError(f"DEIM indices for {t} are not valid node numbers")
            deims.append(build_deim_operator(Phi, idx.astype(np.intp), bases[model.term_component[i]]))
    return Offline(pods, deims, [])


def cmd_rom(args) -> int:
    cfg = _run_config(args)
    model = cfg.build_model()
    variant = PD_ROM if args.variant == "pd" else P_ROM
    offline = load_offline(model, args.bases, variant == PD_ROM)
    try:
        res = run_rom_case(cfg, model, offline, variant)
    except (ModelError, DeimError) as exc:
        raise MismatchError(str(exc))
    os.makedirs(args.out, exist_ok=True)
    traj = res.traj
    write_msrm(os.path.join(args.out, "coefficients.msrm"), traj.states)
    _write_energy(os.path.join(args.out, "energy.csv"), traj.times, lifted=res.energy, galerkin=res.galerkin_energy)
    write_profiles(os.path.join(args.out, "profiles.csv"), model, traj.times, res.lifted_states(),
                   cfg.profile_times, cfg.observable)
    if res.bound is not None:
        b = res.bound
        write_columns(os.path.join(args.out, "bound.csv"), ["step", "lhs", "rhs"], [b.steps, b.lhs, b.rhs])
        print(f"energy bound: {b.violations} violations in {b.steps.size} steps")
    write_table([res.report], os.path.join(args.out, "metrics.csv"))
    _print_report(res.report)
    return 0


_VARIANT_FLAGS = {"all": VARIANTS, "fom": (FOM,), "p": (P_ROM,), "pd": (PD_ROM,)}


def _bench_one(cfg: RunConfig, variants, repeats):
    return run_case(cfg, variants, repeats)


def cmd_bench(args) -> int:
    names = sorted(MODELS, key=list(MODELS).index) if args.model == "all" else [args.model]
    variants = _VARIANT_FLAGS[args.variant]
    configs = [_run_config(argparse.Namespace(**{**vars(args), "model": m})) for m in names]
    os.makedirs(args.out, exist_ok=True)
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_one, configs, [variants] * len(configs), [args.repeats] * len(configs)))
    else:
        results = [_bench_one(c, variants, args.repeats) for c in configs]
    reports, offline_rows = [], []
    for res in results:
        for v, r in res.results.items():
            reports.append(r.report)
            _print_report(r.report)
            tag = v.lower().replace("-", "")
            cols = {"energy": r.energy}
            if r.galerkin_energy is not None:
                cols["galerkin"] = r.galerkin_energy
            _write_energy(os.path.join(args.out, f"energy_{res.model.name}_{tag}.csv"), r.traj.times, **cols)
            offline_rows.append((res.model.name, v, r.offline_seconds))
        if res.offline is not None:
            for name, p in zip(res.model.components, res.offline.pods):
                write_decay(os.path.join(args.out, f"decay_{res.model.name}_pod_{name}.csv"), p.sigma)
            for name, s in zip(res.model.terms, res.offline.deim_sigma):
                write_decay(os.path.join(args.out, f"decay_{res.model.name}_deim_{name}.csv"), s)
            offline_rows.append((res.model.name, "offline", res.offline.seconds))
    write_table(reports, os.path.join(args.out, "table.csv"))
    keys = ("pod_s", "deim_s", "assembly_s", "factorization_s")
    with open(os.path.join(args.out, "offline.csv"), "w") as fh:
        fh.write("model,stage," + ",".join(keys) + "\n")
        for model, stage, secs in offline_rows:
            fh.write(f"{model},{stage}," + ",".join(f"{secs[k]:.6e}" if k in secs else "" for k in keys) + "\n")
    print(f"wrote {os.path.join(args.out, 'table.csv')} ({len(reports)} rows)")
    return 0


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="msrom: %(levelname)s: %(message)s")
    warnings.showwarning = lambda message, *rest, **kw: log.warning("%s", message)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"msrom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, MsrmError) as exc:
        print(f"msrom: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (MismatchError, ModelError) as exc:
        print(f"msrom: error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except StepFailure as exc:
        print(f"msrom: error: time stepping failed at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FactorizationError, PodError, DeimError, MetricError) as exc:
        print(f"msrom: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"msrom: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
