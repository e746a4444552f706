"""``homoflow`` command-line tool.

Exit codes: 0 success, 2 usage error or unreadable input, 3 divergence of a
fixed-step flow, 4 non-dissipative data in blind rescaling.
"""

import argparse
import csv
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, io
from .analytic import paradox_table
from .bench import (
    NoiseBenchConfig,
    loglog_slope,
    noise_benchmark,
    timing_sweep,
    write_noise_csv,
    write_timing_csv,
)
from .exceptions import DivergenceError, HomoflowError, NonDissipativeError
from .flow import SnapshotSequence, evolve_adaptive, evolve_fixed
from .operators import NormPowerOperator, OperatorConfig
from .orthons import band_filter, filter_modes, orthons, orthons_posterior

log = logging.getLogger("homoflow")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3
EXIT_NONDISSIPATIVE = 4

SNAPSHOT_PREFIX = "psi_"


class UsageError(Exception):
    pass


def default_dt(p, eps, h=1.0):
    """Conservative explicit step: ``0.2 h^2 eps^(2-p)``, or ``0.2 h^2`` at ``p = 2``."""
    if p >= 2.0:
        return 0.2 * h * h
    return 0.2 * h * h * eps ** (2.0 - p)


def _write_snapshots(seq, out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(len(seq) - 1)))
    for k, snap in enumerate(seq.snapshots):
        io.write_csv(out / f"{SNAPSHOT_PREFIX}{k:0{width}d}.csv", snap)
    io.write_csv(out / "times.csv", seq.times)


def read_snapshots(directory):
    """Snapshots and cumulative times written by ``flow``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(directory)
    files = sorted(directory.glob(f"{SNAPSHOT_PREFIX}*.csv"))
    if len(files) < 2:
        raise UsageError(f"{directory}: need at least two snapshot files")
    snaps = np.stack([io.read_csv(f) for f in files])
    tfile = directory / "times.csv"
    if tfile.exists():
        times = np.atleast_1d(io.read_csv(tfile))
        if len(times) != len(snaps):
            raise UsageError(f"{tfile}: {len(times)} times for {len(snaps)} snapshots")
        dts = np.diff(times)
    else:
        dts = np.ones(len(snaps) - 1)
    return SnapshotSequence(snaps, dts)


def _operator(args, ref):
    if args.operator == "normpower":
        if args.lam is None:
            raise UsageError("--operator normpower needs --lambda")
        return NormPowerOperator.for_signal(ref, args.p, args.lam)
    return OperatorConfig(p=args.p, eps=args.eps, h=args.spacing)


def cmd_flow(args):
    f = io.read_signal(args.input)
    if np.ptp(f) == 0:
        log.warning("constant input: the flow is stationary")
    op = OperatorConfig(p=args.p, eps=args.eps, h=args.spacing)
    if args.delta is not None:
        seq = evolve_adaptive(f, op, args.delta, args.steps)
        if len(seq) < args.steps + 1:
            # steady state reached early; pad with the final state so the count contract holds
            pad = args.steps + 1 - len(seq)
            last = seq.dts[-1] if seq.n_steps else 1.0
            seq = SnapshotSequence(
                np.concatenate([seq.snapshots, np.repeat(seq.snapshots[-1:], pad, axis=0)]),
                np.concatenate([seq.dts, np.full(pad, last)]),
                terminated=True,
            )
    else:
        dt = default_dt(args.p, args.eps, args.spacing) if args.dt == "auto" else float(args.dt)
        seq = evolve_fixed(f, op, dt, args.steps)
    _write_snapshots(seq, args.out)
    log.info("wrote %d snapshots to %s", len(seq), args.out)
    return EXIT_OK


def cmd_decompose(args):
    rank = args.rank
    tol = args.tol if args.tol is not None else 1e-10
    if args.mode == "prior":
        if args.input is None:
            raise UsageError("prior mode needs --input")
        f = io.read_signal(args.input)
        op = _operator(args, f)
        dec = orthons(
            f, op, delta=args.delta, steps=args.steps, rank=rank, tol=tol, eigenvalue=args.eigenvalue
        )
    else:
        if args.snapshots is None:
            raise UsageError(f"{args.mode} mode needs --snapshots")
        seq = read_snapshots(args.snapshots)
        op = _operator(args, seq.snapshots[0]) if args.mode == "posterior" else None
        dec = orthons_posterior(
            seq,
            args.p,
            op=op,
            rank=rank,
            tol=tol,
            samples=args.samples,
            eigenvalue=args.eigenvalue,
            on_nondissipative=args.on_nondissipative,
        )
    io.save_decomposition(args.out, dec)
    log.info("wrote %d modes to %s", dec.rank, args.out)
    return EXIT_OK


def _parse_band(text):
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise UsageError(f"--keep-T expects MIN:MAX, got {text!r}") from None


def cmd_filter(args):
    dec = io.load_decomposition(args.dec)
    if args.keep_T is not None:
        h = band_filter(dec, *_parse_band(args.keep_T))
    else:
        h = np.atleast_1d(io.read_csv(args.h))
        if h.shape != (dec.rank,):
            raise UsageError(f"--h needs {dec.rank} gains, got {h.size}")
    if not np.any(h):
        log.warning("empty band: the output is zero")
    out = filter_modes(dec, h)
    io.write_signal(args.out, out)
    return EXIT_OK


def cmd_paradox(args):
    rows = paradox_table(args.lam, args.p, args.levels, f_norm_sq=args.f_norm_sq)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dt", "err_dmd", "err_rec_c", "bound", "mu_tilde"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    return EXIT_OK


def cmd_bench_noise(args):
    snrs = [float(s) for s in args.snr.split(",")]
    cfg = NoiseBenchConfig(
        snapshots=args.snapshots_count, snr_db_range=snrs, trials=args.trials, rng_seed=args.seed
    )
    res = noise_benchmark(cfg, methods=args.methods.split(","))
    write_noise_csv(res, args.out)
    dropped = sum(res.discarded.values())
    if dropped:
        log.warning("%d degenerate trials discarded", dropped)
    return EXIT_OK


def cmd_bench_time(args):
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = timing_sweep(
        sizes, p=args.p, delta=args.delta, steps=args.steps, rank=args.rank, seed=args.seed
    )
    write_timing_csv(rows, args.out)
    if len(rows) > 1:
        log.info("log-log slope %.3f", loglog_slope(rows))
    return EXIT_OK


def _add_operator_args(sp, p_required=True):
    sp.add_argument("--p", type=float, required=p_required, help="homogeneity in [1, 2)")
    sp.add_argument("--eps", type=float, default=1e-8, help="gradient regularization")
    sp.add_argument("--spacing", type=float, default=1.0, help="grid spacing h")


def build_parser():
    parser = argparse.ArgumentParser(prog="homoflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("flow", help="evolve the p-Laplacian flow and write snapshots")
    sp.add_argument("--input", required=True)
    _add_operator_args(sp)
    step = sp.add_mutually_exclusive_group(required=True)
    step.add_argument("--delta", type=float, help="adaptive step factor in (0, 1]")
    step.add_argument("--dt", help="fixed step size, or 'auto' for a conservative bound")
    sp.add_argument("--steps", type=int, default=100)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("decompose", help="orthogonal nonlinear spectral decomposition")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--snapshots")
    _add_operator_args(sp)
    sp.add_argument("--mode", choices=("prior", "posterior", "blind"), default="prior")
    sp.add_argument("--operator", choices=("plaplacian", "normpower"), default="plaplacian")
    sp.add_argument("--lambda", dest="lam", type=float, help="eigenvalue of the normpower operator")
    trunc = sp.add_mutually_exclusive_group()
    trunc.add_argument("--rank", type=int)
    trunc.add_argument("--tol", type=float)
    sp.add_argument("--delta", type=float, default=0.5)
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--samples", type=int, help="uniform resampling size (posterior/blind)")
    sp.add_argument("--eigenvalue", choices=("auto", "mu", "mode"), default="auto")
    sp.add_argument("--on-nondissipative", choices=("error", "clamp"), default="error")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("filter", help="filter a decomposition into a signal or image")
    sp.add_argument("--dec", required=True)
    gains = sp.add_mutually_exclusive_group(required=True)
    gains.add_argument("--keep-T", dest="keep_T", help="keep modes with MIN <= T <= MAX")
    gains.add_argument("--h", help="CSV of per-mode gains")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("paradox", help="fitting versus reconstruction error of exponential DMD")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--levels", type=int, default=8)
    sp.add_argument("--f-norm-sq", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_paradox)

    sp = sub.add_parser("bench-noise", help="Monte-Carlo eigenvalue recovery under noise")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--snr", default="-4,-2,0,2,4", help="comma-separated SNR values in dB")
    sp.add_argument("--snapshots", dest="snapshots_count", type=int, default=8)
    sp.add_argument("--methods", default="dmd,sdmd")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bench_noise)

    sp = sub.add_parser("bench-time", help="decomposition wall-clock time versus size")
    sp.add_argument("--sizes", default="1024,4096,16384")
    sp.add_argument("--p", type=float, default=1.5)
    sp.add_argument("--delta", type=float, default=0.5)
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--rank", type=int, default=10)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bench_time)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="homoflow: %(message)s"
    )
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except DivergenceError as exc:
        log.error("flow diverged at step %d", exc.step)
        return EXIT_DIVERGENCE
    except NonDissipativeError as exc:
        log.error("non-dissipative step at index %d", exc.index)
        return EXIT_NONDISSIPATIVE
    except FileNotFoundError as exc:
        log.error("file not found: %s", exc.filename or exc)
        return EXIT_USAGE
    except (UsageError, HomoflowError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
