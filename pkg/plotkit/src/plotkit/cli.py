"""Command-line front end: render one figure from a run directory."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .reader import SchemaError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render figures from simulator trajectory.csv outputs.")
    sub = parser.add_subparsers(dest="command", required=True)
    ren = sub.add_parser("render", help="draw one figure kind to a PNG file")
    ren.add_argument("--kind", required=True, choices=KINDS)
    ren.add_argument("--traj", required=True, help="run directory with trajectory.csv")
    ren.add_argument("--out", required=True, help="output PNG path")
    ren.add_argument("--traj2", default=None,
                     help="second run directory (traj3d_compare only)")
    ren.set_defaults(func=cmd_render)
    return parser


def cmd_render(args):
    try:
        spec = FigureSpec(traj=args.traj, kind=args.kind, out=args.out,
                          traj2=args.traj2)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        out = render(spec)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SchemaError as exc:
        print(f"error: schema mismatch: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
