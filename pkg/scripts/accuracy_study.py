"""Penalty-choice accuracy study on simulated data.

For each series length, simulates instances, runs CROPS over a wide penalty
range and records: the penalty range giving the true number of changepoints,
and, for AIC / Hannan-Quinn / SIC, the proportions of true and false
detections and the per-point MSE of the fitted means and sds.

    python3 scripts/accuracy_study.py --n 500 1000 2000 --regime fixed --model gaussian
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from cropscpd.costs import mean_variance
from cropscpd.crops import crops
from cropscpd.metrics import accuracy_report, correct_m_range
from cropscpd.penalties import PenaltyRule, penalty_value
from cropscpd.simulate import SimulationSpec, generate

RULES = ("aic", "hq", "sic")


def study(n, regime, model_kind, instances, seed):
    model = mean_variance()
    beta_min, beta_max = 1.0, 100 * penalty_value(PenaltyRule("sic", p=model.p), n)
    lows, highs, absent = [], [], 0
    per_rule = {r: [] for r in RULES}
    for i in range(instances):
        sim = generate(SimulationSpec(n, regime=regime, model_kind=model_kind, seed=seed + i))
        result = crops(sim.series, model, beta_min, beta_max, recycle=True)
        rng = correct_m_range(result, len(sim.changepoints))
        if rng is None:
            absent += 1
        else:
            lows.append(rng[0])
            highs.append(rng[1])
        for rule in RULES:
            beta = penalty_value(PenaltyRule(rule, p=model.p), n)
            seg = result.intervals[[beta in iv for iv in result.intervals].index(True)].segmentation
            per_rule[rule].append(accuracy_report(sim.series, seg, sim.changepoints, sim.means, sim.sds))
    rows = []
    for rule in RULES:
        reps = per_rule[rule]
        rows.append({
            "n": n, "regime": regime, "model": model_kind, "rule": rule,
            "beta": penalty_value(PenaltyRule(rule, p=model.p), n),
            "mean_correct_lo": np.mean(lows) if lows else math.nan,
            "mean_correct_hi": np.mean(highs) if highs else math.nan,
            "instances_without_true_m": absent,
            "proportion_detected": np.mean([r.proportion_detected for r in reps]),
            "proportion_false": np.mean([r.proportion_false for r in reps]),
            "mse_mean": np.mean([r.mse_mean for r in reps]),
            "mse_sd": np.mean([r.mse_sd for r in reps]),
        })
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[500, 1000, 2000])
    parser.add_argument("--regime", choices=["fixed", "sublinear", "linear"], default="fixed")
    parser.add_argument("--model", choices=["gaussian", "misspecified"], default="gaussian")
    parser.add_argument("--instances", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    writer = None
    for n in args.n:
        for row in study(n, args.regime, args.model, args.instances, args.seed):
            if writer is None:
                writer = csv.DictWriter(sys.stdout, fieldnames=list(row), lineterminator="\n")
                writer.writeheader()
            writer.writerow({k: f"{v:.6g}" if isinstance(v, float) else v for k, v in row.items()})
            sys.stdout.flush()


if __name__ == "__main__":
    main()
