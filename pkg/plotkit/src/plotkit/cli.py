"""plotkit <command> --log DIR --out PATH [--style FILE]"""

from __future__ import annotations

import argparse
import sys

from .figures import plot_multi_robot, plot_terrain_scenario, plot_tracking
from .io import LogBundle, SchemaError

COMMANDS = {
    "tracking": plot_tracking,
    "terrain": plot_terrain_scenario,
    "multirobot": plot_multi_robot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0].lower())
        p.add_argument("--log", required=True, help="run directory with trajectory.csv")
        p.add_argument("--out", required=True, help="output image path (.svg/.png/.pdf)")
        p.add_argument("--style", default=None, help="matplotlib style file")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        bundle = LogBundle.load(args.log)
        out = args.fn(bundle, args.out, style_file=args.style)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
