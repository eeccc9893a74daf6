"""Command-line harness: evolve | compare | spectrum | gs-scan | cache.

Exit codes: 0 success, 1 usage/config error, 2 numerical failure
(series not converged, non-finite amplitudes), 3 method comparison above
tolerance.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .cache import CacheCorruptError, CacheEntry, PropagatorCache, propagator_fingerprint
from .config import ConfigError, RunConfig, load_run_config, parse_p_values
from .model import TransferMatrix, build_transfer_matrix
from .propagator import (
    NonFiniteState,
    NotConverged,
    PropagatorConfig,
    StepPropagator,
    build_step_propagator,
    evolve,
    suggest_step,
)
from .spectral import NonHermitianInput, diagonalize, gs_scan, level_differences, teee_evolve
from .states import TailMassTooLarge
from .trajectory import csv_lines

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_MISMATCH = 3

COMPARE_TOL = 1e-6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse insists on exiting with code 2; route usage problems through
    # the normal error path so they come back as exit code 1 instead.
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="sbprop",
                     description="Spin-boson dynamics via a certified "
                                 "Taylor-series step propagator.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    run_flags = _Parser(add_help=False)
    run_flags.add_argument("--config", metavar="PATH",
                           help="flat key=value config file")
    run_flags.add_argument("--set", action="append", default=[],
                           metavar="KEY=VALUE",
                           help="override one config key (repeatable)")
    run_flags.add_argument("--out", metavar="PATH",
                           help="write CSV here instead of stdout")
    run_flags.add_argument("--serial", action="store_true",
                           help="force deterministic sequential mode")
    run_flags.add_argument("--normalize", action="store_true",
                           help="compare normalized instead of raw observables")

    p = sub.add_parser("evolve", parents=[run_flags],
                       help="step a state forward, emit the trajectory CSV")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("compare", parents=[run_flags],
                       help="Taylor vs eigendecomposition on one time grid")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("spectrum", parents=[run_flags],
                       help="eigenvalues and level differences as CSV")
    p.add_argument("--levels", type=int, default=None,
                   help="how many excitation energies to list")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("gs-scan", parents=[run_flags],
                       help="ground-state energy vs Fock cutoff")
    p.add_argument("--p-values", dest="p_values_flag", metavar="A:B[:STEP]",
                   help="cutoff scan, overrides the p_values config key")
    p.set_defaults(func=cmd_gs_scan)

    p = sub.add_parser("cache", help="inspect or clear the propagator store")
    p.add_argument("action", choices=["list", "info", "clear"])
    p.set_defaults(func=cmd_cache)
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config, args.set)
    if args.out:
        cfg.out = args.out
    if args.serial:
        cfg.serial = True
    if args.normalize:
        cfg.normalize = True
    return cfg


def _steps_for(t_max: float, dt: float) -> int:
    if not (math.isfinite(t_max) and t_max >= 0.0):
        raise ConfigError(f"t_max must be non-negative, got {t_max}")
    return max(int(math.ceil(t_max / dt - 1e-9)), 0)


def _prepare(cfg: RunConfig) -> tuple[TransferMatrix, PropagatorConfig]:
    q = build_transfer_matrix(cfg.to_params(), cfg.to_truncation())
    dt = cfg.dt if cfg.dt is not None else suggest_step(q, cfg.N, cfg.tol)
    steps = _steps_for(cfg.t_max, dt)
    return q, PropagatorConfig(dt=dt, steps=steps, N=cfg.N, tol=cfg.tol)


def _obtain_propagator(q: TransferMatrix, pcfg: PropagatorConfig) -> StepPropagator:
    """Cache-backed build: hit -> load, miss/corrupt -> build and store."""
    store = PropagatorCache()
    fp = propagator_fingerprint(q.params, q.trunc.P, pcfg.N, pcfg.dt)
    try:
        entry = store.get(fp)
    except CacheCorruptError as err:
        print(f"warning: rebuilding corrupt cache entry ({err})", file=sys.stderr)
        entry = None
    if entry is not None and (entry.dim, entry.N, entry.dt) == (q.dim, pcfg.N, pcfg.dt):
        return StepPropagator(matrix=entry.matrix, fingerprint=fp,
                              dt=entry.dt, N=entry.N,
                              last_term_norm=None, unitarity_defect=None)
    prop = build_step_propagator(q, pcfg)
    try:
        store.put(CacheEntry(fingerprint=fp, dim=q.dim, N=pcfg.N,
                             dt=pcfg.dt, matrix=prop.matrix))
    except OSError as err:
        print(f"warning: could not store propagator: {err}", file=sys.stderr)
    return prop


def _write_lines(lines, out_path: str) -> None:
    if not out_path:
        for line in lines:
            sys.stdout.write(line + "\n")
        return
    path = Path(out_path)
    if path.parent and not path.parent.is_dir():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent or "."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    print(f"wrote {path}")


def cmd_evolve(args: argparse.Namespace) -> int:
    cfg = _load(args)
    q, pcfg = _prepare(cfg)
    prop = _obtain_propagator(q, pcfg)
    state = cfg.build_initial_state()
    traj = evolve(state, prop, pcfg, q, snapshot_stride=cfg.snapshot_stride)
    _write_lines(csv_lines(traj), cfg.out)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if not cfg.to_params().is_hermitian():
        raise ConfigError("dissipative parameters: the eigendecomposition "
                          "reference cannot be built, compare needs beta=gamma=0")
    q, pcfg = _prepare(cfg)
    prop = _obtain_propagator(q, pcfg)
    state = cfg.build_initial_state()
    traj = evolve(state, prop, pcfg, q)
    ref = teee_evolve(state, diagonalize(q), traj.times)

    if cfg.normalize:
        dn = np.abs(traj.n_norm - ref.n_norm)
        dsz = np.abs(traj.sz_norm - ref.sz_norm)
    else:
        dn = np.abs(traj.n_raw - ref.n_raw)
        dsz = np.abs(traj.sz_raw - ref.sz_raw)

    lines = ["t,dn_abs,dsz_abs"]
    lines += [f"{t!r},{a!r},{b!r}"
              for t, a, b in zip(map(float, traj.times), map(float, dn),
                                 map(float, dsz))]
    _write_lines(lines, cfg.out)
    max_dn, max_dsz = float(dn.max()), float(dsz.max())
    print(f"max_dn={max_dn!r}")
    print(f"max_dsz={max_dsz!r}")
    return EXIT_OK if max(max_dn, max_dsz) < COMPARE_TOL else EXIT_MISMATCH


def cmd_spectrum(args: argparse.Namespace) -> int:
    cfg = _load(args)
    q, _ = _prepare(cfg)
    dec = diagonalize(q)
    levels = args.levels if args.levels is not None else cfg.levels
    levels = max(1, min(int(levels), dec.dim - 1))
    deltas = level_differences(dec, levels)
    lines = ["j,energy,delta_e", f"0,{float(dec.energies[0])!r},0.0"]
    lines += [f"{j},{float(dec.energies[j])!r},{float(deltas[j - 1])!r}"
              for j in range(1, levels + 1)]
    _write_lines(lines, cfg.out)
    return EXIT_OK


def cmd_gs_scan(args: argparse.Namespace) -> int:
    cfg = _load(args)
    text = args.p_values_flag or cfg.p_values
    result = gs_scan(cfg.to_params(), parse_p_values(text))
    lines = ["P,E0"]
    lines += [f"{int(p)},{float(e)!r}"
              for p, e in zip(result.p_values, result.e0)]
    _write_lines(lines, cfg.out)
    print(f"plateau_P={result.plateau_P}")
    print(f"slope={result.slope!r}")
    print(f"classification={result.classification}")
    return EXIT_OK


def cmd_cache(args: argparse.Namespace) -> int:
    store = PropagatorCache()
    if args.action == "list":
        for path, item in store.entries():
            if isinstance(item, CacheCorruptError):
                print(f"corrupt {path.name}: {item.reason}")
            else:
                stamp = time.strftime("%Y-%m-%dT%H:%M:%S",
                                      time.localtime(item.created_at))
                print(f"{item.fingerprint:016x} dim={item.dim} N={item.N} "
                      f"dt={item.dt!r} created={stamp}")
    elif args.action == "info":
        entries = store.entries()
        total = sum(p.stat().st_size for p, _ in entries)
        corrupt = sum(isinstance(e, CacheCorruptError) for _, e in entries)
        print(f"dir={store.root}")
        print(f"entries={len(entries)} corrupt={corrupt} bytes={total}")
    else:
        print(f"removed={store.clear()}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, TailMassTooLarge, NonHermitianInput, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NotConverged, NonFiniteState) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
