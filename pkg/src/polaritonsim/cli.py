"""Command-line entry point.

One subcommand per reproduction driver.  Config problems exit with
status 2, runtime failures with status 1; either case emits a single
JSON line on stderr so wrapping scripts can parse the failure without
scraping tracebacks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, load_config
from .experiments import (
    TruncationError,
    run_convergence,
    run_coupling_sweep,
    run_delay_maps,
    run_drive_sweep,
    run_spectrum,
)

_DRIVERS = {
    "spectrum": run_spectrum,
    "drive-sweep": run_drive_sweep,
    "coupling-sweep": run_coupling_sweep,
    "delay-maps": run_delay_maps,
    "converge": run_convergence,
}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polaritonsim",
        description="Driven dissipative cavity QED simulator with "
                    "polaritonic output statistics.",
    )
    parser.add_argument("--config", metavar="FILE", default=None,
                        help="key = value config file (defaults apply when omitted)")
    parser.add_argument("--out", metavar="DIR", default="results",
                        help="output directory (default: results)")
    parser.add_argument("--threads", type=int, default=None, metavar="N",
                        help="worker processes for independent sweep points "
                             "(default: POLARITONSIM_THREADS or 1)")
    parser.add_argument("--truncation", type=int, default=None, metavar="N",
                        help="override the cavity Fock truncation from the config")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", help="dressed levels vs coupling")
    sub.add_parser("drive-sweep", help="equal-time statistics vs drive frequency")
    sub.add_parser("coupling-sweep", help="resonance-locked statistics vs coupling")
    sub.add_parser("delay-maps", help="delayed g2/g3 at the two operating points")
    sub.add_parser("converge", help="truncation and step-size stability check")
    return parser


def _resolve_workers(arg: int | None) -> int:
    if arg is not None:
        value = arg
    else:
        raw = os.environ.get("POLARITONSIM_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"POLARITONSIM_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"worker count must be >= 1, got {value}")
    return value


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.truncation is not None:
            if args.truncation < 2:
                raise ConfigError("--truncation must be >= 2")
            cfg["n_cavity"] = args.truncation
        workers = _resolve_workers(args.threads)
    except (ConfigError, OSError) as exc:
        return _fail("config", str(exc), 2)

    driver = _DRIVERS[args.command]
    try:
        manifest = driver(cfg, args.out, workers=workers)
    except (TruncationError, RuntimeError, FloatingPointError, ValueError) as exc:
        return _fail("runtime", str(exc), 1)

    if manifest.errors:
        sys.stderr.write(json.dumps({
            "error": "points",
            "message": f"{len(manifest.errors)} sweep point(s) failed; see manifest.json",
        }) + "\n")
    if manifest.notes.get("converged") is False:
        return _fail("runtime", "convergence check failed; see manifest.json", 1)
    print(f"{args.command}: wrote {len(manifest.outputs)} file(s) to {args.out} "
          f"in {manifest.wall_seconds:.1f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
