"""Data for a penalised-cost line plot of a CROPS run.

Prints, for each segmentation found, its line Q_m + (m + 1) * beta sampled on
a grid, plus the interval over which it is optimal.  Reads a series with the
same CSV rules as the CLI, or simulates one.

    python3 scripts/penalty_lines.py --simulate 1000 --beta-min 5 --beta-max 40
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from cropscpd.cli import ingest
from cropscpd.costs import mean_variance
from cropscpd.crops import PmLine, crops
from cropscpd.simulate import SimulationSpec, generate


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--simulate", type=int, metavar="N")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--beta-min", type=float, default=5.0)
    parser.add_argument("--beta-max", type=float, default=40.0)
    parser.add_argument("--points", type=int, default=50)
    args = parser.parse_args(argv)
    ts = ingest(args.input) if args.input else generate(SimulationSpec(args.simulate, seed=args.seed)).series
    result = crops(ts, mean_variance(), args.beta_min, args.beta_max, recycle=True)
    grid = np.linspace(args.beta_min, args.beta_max, args.points)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["m", "beta", "penalised_cost", "optimal"])
    for iv in result.intervals:
        line = PmLine.of(iv.segmentation)
        for beta in grid:
            writer.writerow([iv.m, f"{beta:.6g}", f"{line(beta):.10g}", int(beta in iv)])


if __name__ == "__main__":
    main()
