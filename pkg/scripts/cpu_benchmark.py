"""CPU time of CROPS (with and without recycling) against Segment Neighbourhood.

SN is run with the maximum number of changepoints set to the count found at
the smallest penalty.  Writes one CSV row per method and instance.

    python3 scripts/cpu_benchmark.py --n 1000 2000 5000 10000 --regime linear
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

from cropscpd.cli import bench_rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[1000, 2000, 5000, 10000])
    parser.add_argument("--regime", choices=["fixed", "sublinear", "linear"], default="linear")
    parser.add_argument("--model", choices=["gaussian", "misspecified"], default="gaussian")
    parser.add_argument("--instances", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sic-fraction", type=float, nargs=2, default=[0.5, 2.0],
                        metavar=("LO", "HI"), help="penalty range as multiples of SIC")
    args = parser.parse_args(argv)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["n", "regime", "method", "seconds", "solver_runs", "seed"])
    for n in args.n:
        sic = 2 * math.log(n)
        lo, hi = args.sic_fraction[0] * sic, args.sic_fraction[1] * sic
        for row in bench_rows([n], args.regime, args.model, args.instances, args.seed, lo, hi):
            row[3] = f"{row[3]:.4f}"
            writer.writerow(row)
            sys.stdout.flush()


if __name__ == "__main__":
    main()
