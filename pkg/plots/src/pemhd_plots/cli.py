"""Command-line wrapper: render figures from solver CSV artifacts.

    pemhd-plots convergence SWEEP_CSV FIT_CSV OUT_IMAGE
    pemhd-plots energy DIAGNOSTICS_CSV OUT_IMAGE

Exit codes: 0 ok, 1 bad or empty input data, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from pemhd_plots.convergence import plot_convergence
from pemhd_plots.energy import plot_energy


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pemhd-plots")
    sub = parser.add_subparsers(dest="command", required=True)

    p_conv = sub.add_parser("convergence")
    p_conv.add_argument("sweep_csv")
    p_conv.add_argument("fit_csv")
    p_conv.add_argument("out_image")

    p_energy = sub.add_parser("energy")
    p_energy.add_argument("diagnostics_csv")
    p_energy.add_argument("out_image")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "convergence":
            meta = plot_convergence(args.sweep_csv, args.fit_csv,
                                    args.out_image)
            for label in meta["annotations"]:
                print(label)
        else:
            plot_energy(args.diagnostics_csv, args.out_image)
        print(f"wrote {args.out_image}")
    except (ValueError, OSError) as err:
        print(f"pemhd-plots: error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
