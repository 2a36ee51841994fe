"""Command line interface.

    chemokin run <config.json> [--out DIR] [--frames N] [--dump-f]
                 [--dump-classification] [--restart CKPT]
    chemokin presets list
    chemokin presets emit <name> [--out FILE]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config, preset, preset_names
from .diffusion import SolverError
from .driver import SimulationError, run_scenario
from .shapes import ProjectionError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="chemokin",
        description="kinetic chemotaxis simulator on Cartesian meshes")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config")
    run_p.add_argument("config", help="path to a scenario JSON file")
    run_p.add_argument("--out", default="out", help="output directory")
    run_p.add_argument("--frames", type=int, default=None,
                       help="number of output frames over the run")
    run_p.add_argument("--dump-f", action="store_true",
                       help="also dump the full kinetic field per frame")
    run_p.add_argument("--dump-classification", action="store_true",
                       help="dump the grid classification as CSV")
    run_p.add_argument("--dump-weights", action="store_true",
                       help="dump per-ghost reconstruction weights as CSV")
    run_p.add_argument("--restart", default=None,
                       help="resume from a checkpoint.npz")

    pre_p = sub.add_parser("presets", help="list or emit built-in scenarios")
    pre_sub = pre_p.add_subparsers(dest="preset_command", required=True)
    pre_sub.add_parser("list", help="list preset names")
    emit_p = pre_sub.add_parser("emit", help="write a preset config as JSON")
    emit_p.add_argument("name")
    emit_p.add_argument("--out", default=None,
                        help="output file (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "presets":
        if args.preset_command == "list":
            for name in preset_names():
                print(name)
            return 0
        try:
            cfg = preset(args.name)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        text = json.dumps(cfg, indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return 0

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_scenario(cfg, args.out, frames=args.frames,
                              dump_f=args.dump_f,
                              dump_classification=args.dump_classification,
                              dump_weights=args.dump_weights,
                              restart=args.restart)
    except (SimulationError, SolverError, ProjectionError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"completed {result.steps} steps to t = {result.final_time:.6g} "
          f"(dt = {result.dt:.3e}); outputs in {result.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
