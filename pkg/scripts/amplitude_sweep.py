#!/usr/bin/env python3
"""Scan an amplitude family and watch the counterfactual outcome shrink.

Sweeps the family parameter, printing for each point the fourth joint
probability and the conditional weight the ML2+ pivot leaves on MR2+; with
--maximize it instead locates the parameter maximizing the fourth joint
probability by golden-section search.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from chainlogic.sweep import FAMILIES, maximize_s4, parameter_sweep


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--family", choices=FAMILIES,
                        default="symmetric_outer")
    parser.add_argument("--start", type=float, default=0.5)
    parser.add_argument("--stop", type=float, default=0.01)
    parser.add_argument("--points", type=int, default=8)
    parser.add_argument("--log", action="store_true",
                        help="space the parameters geometrically")
    parser.add_argument("--mode", choices=("particle", "apparatus"),
                        default="particle")
    parser.add_argument("--maximize", action="store_true",
                        help="search for the fourth-probability maximum "
                             "instead of sweeping")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    if args.maximize:
        result = maximize_s4(family=args.family, mode=args.mode)
        print(f"family {result.family}: max P(ML2+ and MR2- | ML2, MR2) = "
              f"{result.s4:.10f} at parameter {result.parameter:.10f} "
              f"({result.evaluations} evaluations)")
        return 0
    space = np.geomspace if args.log else np.linspace
    values = space(args.start, args.stop, args.points)
    rows = parameter_sweep(values, family=args.family, mode=args.mode)
    print(f"{'parameter':>12}  {'s4':>12}  {'P(MR2+|ML2+)':>14}  "
          f"{'ML1 verdict':<16}  {'ML2 verdict':<10}")
    for row in rows:
        ml1 = (f"necessary({row.verdict_ml1_outcome})"
               if row.verdict_ml1_kind == "necessary"
               else row.verdict_ml1_kind)
        print(f"{row.parameter:>12.6f}  {row.s4:>12.6f}  "
              f"{row.p_mr2_plus_given_ml2_plus:>14.6e}  "
              f"{ml1:<16}  {row.verdict_ml2_kind:<10}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
