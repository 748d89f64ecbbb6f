"""figrender render --kind KIND --in DIR --out FILE [--combos LIST]

Exit codes: 0 success, 2 missing inputs or schema mismatch.
"""

import argparse
import sys
from pathlib import Path

from .io import SchemaError
from .panels import alpha_grid, power_grid, trajectory_example

KINDS = ("power_grid_S", "power_grid_F", "trajectory_example", "alpha_grid")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figrender",
        description="Render figures from qusmooth sweep output directories",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    render = subs.add_parser("render", help="render one figure")
    render.add_argument("--kind", choices=KINDS, required=True)
    render.add_argument("--in", dest="indir", metavar="DIR", required=True)
    render.add_argument("--out", metavar="FILE", required=True)
    render.add_argument(
        "--combos", metavar="LIST",
        help="comma-separated dOdVdW names (trajectory_example only)",
    )
    args = parser.parse_args(argv)

    indir = Path(args.indir)
    if not indir.is_dir():
        print(f"input directory not found: {indir}", file=sys.stderr)
        return 2
    try:
        if args.kind == "power_grid_S":
            power_grid(indir, "R_S", args.out)
        elif args.kind == "power_grid_F":
            power_grid(indir, "R_F", args.out)
        elif args.kind == "alpha_grid":
            alpha_grid(indir, args.out)
        else:
            combos = args.combos.split(",") if args.combos else None
            trajectory_example(indir, args.out, combos=combos)
    except SchemaError as err:
        print(f"schema error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
