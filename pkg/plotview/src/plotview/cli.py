"""Command line interface.

    plotview heatmap --in RUNDIR --out PATH [--field rho|N|S] [--frame K]
    plotview sections --in RUNDIR --out PATH [--field F] [--axis x|y] [--log]
                      [--frames K K ...] [--sequence DIR]
    plotview observables --in RUNDIR --out PATH
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .frames import FrameError, RunDirectory
from .render import render_heatmap, render_observables, render_sections


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="plotview", description="render figures from simulation outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    heat = sub.add_parser("heatmap", help="2D field heatmap")
    heat.add_argument("--in", dest="run_dir", required=True)
    heat.add_argument("--out", required=True)
    heat.add_argument("--field", default="rho", choices=("rho", "N", "S"))
    heat.add_argument("--frame", type=int, default=None,
                      help="frame index (default: last)")
    heat.add_argument("--sequence", default=None, metavar="DIR",
                      help="emit every frame as numbered PNGs into DIR")

    sec = sub.add_parser("sections", help="overlaid 1D profiles")
    sec.add_argument("--in", dest="run_dir", required=True)
    sec.add_argument("--out", required=True)
    sec.add_argument("--field", default="rho", choices=("rho", "N", "S"))
    sec.add_argument("--axis", default="x", choices=("x", "y"))
    sec.add_argument("--log", action="store_true")
    sec.add_argument("--frames", type=int, nargs="*", default=None)

    obs = sub.add_parser("observables", help="observable time series")
    obs.add_argument("--in", dest="run_dir", required=True)
    obs.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        run = RunDirectory(args.run_dir)
        if args.command == "heatmap":
            if args.sequence:
                seq = Path(args.sequence)
                seq.mkdir(parents=True, exist_ok=True)
                for entry in run.frame_entries:
                    render_heatmap(run, entry["index"], args.field,
                                   seq / f"{args.field}_{entry['index']:04d}.png")
                print(f"wrote {len(run.frame_entries)} frames to {seq}")
            else:
                frame = args.frame
                if frame is None:
                    if not run.frame_entries:
                        raise FrameError("run contains no frames")
                    frame = run.frame_entries[-1]["index"]
                render_heatmap(run, frame, args.field, args.out)
                print(f"wrote {args.out}")
        elif args.command == "sections":
            render_sections(run, args.out, field=args.field, axis=args.axis,
                            log_scale=args.log, frame_indices=args.frames)
            print(f"wrote {args.out}")
        else:
            _, skipped = render_observables(run, args.out)
            note = f" (skipped: {', '.join(skipped)})" if skipped else ""
            print(f"wrote {args.out}{note}")
    except (FrameError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
