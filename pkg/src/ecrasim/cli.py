"""Command-line entry point.

Every run subcommand accepts an optional TOML spec file; flags override its
keys. Exit codes: 0 success, 1 invalid spec or output, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .core import ConfigError
from .experiment import MODES, ExperimentSpec, SpecError, run_experiment

EXIT_OK, EXIT_SPEC, EXIT_RUNTIME = 0, 1, 2

# flag name -> (spec field, type, is list)
_FLAGS = {
    "name": ("name", str, False),
    "scheme": ("scheme", str, True),
    "g-load": ("g_load", float, True),
    "rate": ("rate", float, True),
    "esn0-db": ("esn0_db", float, False),
    "degree": ("degree", int, False),
    "vf-len": ("vf_len", int, False),
    "window-len": ("window_len", float, False),
    "window-shift": ("window_shift", float, False),
    "max-sic-iters": ("max_sic_iters", int, False),
    "seeds": ("seeds", int, True),
    "min-packet-errors": ("min_packet_errors", int, False),
    "max-packets": ("max_packets", int, False),
    "output": ("output", str, False),
    "pg-over-n-db": ("pg_over_n_db", float, False),
    "alpha-samples": ("alpha_samples", int, False),
}


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("spec", nargs="?", help="experiment spec (TOML)")
    for flag, (dest, typ, many) in _FLAGS.items():
        p.add_argument(f"--{flag}", dest=dest, type=typ, nargs="+" if many else None, default=None)
    p.add_argument("--g-load-range", dest="g_load_range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    p.add_argument("--no-wall-time", dest="wall_time", action="store_false", default=None,
                   help="write 0 in wall_time_s so reruns are byte-identical")
    p.add_argument("--fresh", action="store_true", help="ignore the resume journal")
    p.add_argument("--workers", type=int, default=None, help="process count (default: ECRASIM_THREADS or CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecrasim", description="Asynchronous random access simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in MODES:
        _add_spec_flags(sub.add_parser(mode, help=f"run in {mode} mode"))
    p = sub.add_parser("plot", help="render a result CSV to vector figures")
    p.add_argument("csv")
    p.add_argument("--out-dir", default="figures")
    p.add_argument("--format", default="svg", choices=("svg", "pdf", "eps"))
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    base: dict = {}
    if args.spec:
        base = dataclasses.asdict(ExperimentSpec.load(args.spec))
    for dest, _, _ in _FLAGS.values():
        v = getattr(args, dest)
        if v is not None:
            base[dest] = v
    if args.g_load_range is not None:
        base.pop("g_load", None)
        base["g_load_range"] = list(args.g_load_range)
    if args.wall_time is not None:
        base["wall_time"] = args.wall_time
    base["mode"] = args.command
    return ExperimentSpec.from_dict(base)


def _print_table(records) -> None:
    if not records:
        return
    if isinstance(records[0], dict):
        keys = list(records[0])
        print("  ".join(f"{k:>10}" for k in keys))
        for r in records:
            print("  ".join(f"{r[k]:>10.5g}" for k in keys))
        return
    print(f"{'scheme':>9} {'G':>6} {'R':>7} {'packets':>9} {'losses':>7} {'PLR':>10} {'S':>8} {'xi':>8}")
    for r in records:
        print(f"{r.scheme:>9} {r.g_load:>6.3g} {r.rate:>7.4g} {r.packets:>9d} {r.losses:>7d} "
              f"{r.plr:>10.3e} {r.throughput:>8.4f} {r.spectral_eff:>8.4f}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "plot":
        from .plotting import plot_csv
        try:
            for path in plot_csv(args.csv, args.out_dir, args.format):
                print(path)
        except (OSError, KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        return EXIT_OK
    try:
        spec = spec_from_args(args)
    except (SpecError, ConfigError, TypeError, ValueError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    try:
        records = run_experiment(spec, resume=not args.fresh, workers=args.workers)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _print_table(records)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
