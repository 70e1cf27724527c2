"""Command-line front end.

Subcommands: ``segment`` (single penalty), ``crops`` (penalty range), ``sn``
(Segment Neighbourhood), ``simulate`` (write a synthetic series) and
``bench`` (CROPS vs SN timings).  Exit codes: 0 success, 1 usage error,
2 data error, 3 numerical or solver error.  Set ``CROPSCPD_LOG_LEVEL`` to
change log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Optional, Sequence

from .costs import MEAN, MEANVAR, CostModel, TimeSeries, cost_model
from .crops import PmLine, crops
from .exceptions import CropsError, DataError, PreconditionError
from .penalties import PenaltyRule, elbow_curve, penalty_value
from .simulate import SimulationSpec, generate
from .solvers import Segmentation, solve_op, solve_pelt, solve_sn

logger = logging.getLogger("cropscpd")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(x, ".17g")


def ingest(path: os.PathLike | str) -> TimeSeries:
    """Read a one-column (value) or two-column (index,value) CSV file.

    A non-numeric first row is taken as a header and skipped with a warning.
    """
    values = []
    seen_row = False
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not any(cell.strip() for cell in row):
                continue
            first = not seen_row
            seen_row = True
            if len(row) > 2:
                raise DataError(f"line {lineno}: expected 1 or 2 columns, got {len(row)}")
            cell = row[-1].strip()
            try:
                value = float(cell)
            except ValueError:
                if first:
                    logger.warning("%s: treating line %d (%s) as a header", path, lineno, ",".join(row))
                    continue
                raise DataError(f"line {lineno}: non-numeric value {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"line {lineno}: non-finite value {cell!r}")
            values.append(value)
    if not values:
        raise DataError(f"{path}: no observations")
    return TimeSeries(values)


def emit_series(values: Sequence[float]) -> str:
    return "".join(fmt(float(v)) + "\n" for v in values)


class _AtomicWriter:
    """Stage files next to their targets; rename all on commit, delete all on abort."""

    def __init__(self):
        self._staged: list[tuple[str, Path]] = []

    def add(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        self._staged.append((tmp, path))

    def commit(self) -> None:
        for tmp, path in self._staged:
            os.replace(tmp, path)
        self._staged = []

    def abort(self) -> None:
        for tmp, _ in self._staged:
            try:
                os.remove(tmp)
            except OSError:
                pass
        self._staged = []


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _model_from(args) -> CostModel:
    kwargs = {}
    if args.min_seg_len is not None:
        kwargs["min_segment_length"] = args.min_seg_len
    if args.cost == MEAN:
        kwargs["sigma"] = args.sigma
    return cost_model(args.cost, **kwargs)


def default_beta_range(n: int, model: CostModel) -> tuple[float, float]:
    return math.log(n), 10.0 * model.p * math.log(n)


def _segmentation_record(seg: Segmentation) -> dict:
    return {"m": seg.m, "cost": seg.cost, "changepoints": list(seg.changepoints)}


def _cmd_segment(args, out: _AtomicWriter) -> None:
    ts = ingest(args.input)
    model = _model_from(args)
    if (args.beta is None) == (args.penalty is None):
        raise UsageError("give exactly one of --beta or --penalty")
    if args.beta is not None:
        if not args.beta >= 0:
            raise UsageError("--beta must be non-negative")
        beta = args.beta
    else:
        beta = penalty_value(PenaltyRule(args.penalty, p=model.p), ts.n)
    solve = solve_pelt if args.method == "pelt" else solve_op
    _, seg = solve(ts, model, beta)
    if args.format == "json":
        record = {"schema_version": SCHEMA_VERSION, "n": ts.n, "cost_model": model.kind,
                  "beta": beta, **_segmentation_record(seg),
                  "penalised_cost": seg.penalised_cost(beta)}
        text = json.dumps(record, indent=2) + "\n"
    else:
        text = _csv_text(["beta", "m", "cost", "changepoints"],
                         [[fmt(beta), seg.m, fmt(seg.cost), " ".join(map(str, seg.changepoints))]])
    _write(out, args.output, text)


def _write(out: _AtomicWriter, path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        out.add(Path(path), text)


def _cmd_crops(args, out: _AtomicWriter) -> None:
    ts = ingest(args.input)
    model = _model_from(args)
    if (args.beta_min is None) != (args.beta_max is None):
        raise UsageError("give both --beta-min and --beta-max, or neither")
    if args.beta_min is None:
        beta_min, beta_max = default_beta_range(ts.n, model)
    else:
        beta_min, beta_max = args.beta_min, args.beta_max
        if not 0 <= beta_min < beta_max:
            raise UsageError(f"need 0 <= --beta-min < --beta-max, got [{beta_min}, {beta_max}]")
    result = crops(ts, model, beta_min, beta_max, recycle=args.recycle)
    outdir = Path(args.output_dir)
    if args.format == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "n": ts.n,
            "cost_model": model.kind,
            "beta_min": beta_min,
            "beta_max": beta_max,
            "solver_runs": result.solver_run_count,
            "intervals": [
                {"beta_lo": iv.beta_lo, "beta_hi": iv.beta_hi, "m": iv.m, "cost": iv.cost,
                 "changepoints": list(iv.segmentation.changepoints)}
                for iv in result.intervals
            ],
        }
        out.add(outdir / "intervals.json", json.dumps(doc, indent=2) + "\n")
    else:
        rows = [[fmt(iv.beta_lo), fmt(iv.beta_hi), iv.m, fmt(iv.cost),
                 " ".join(map(str, iv.segmentation.changepoints))] for iv in result.intervals]
        out.add(outdir / "intervals.csv",
                _csv_text(["beta_lo", "beta_hi", "m", "cost", "changepoints"], rows))
    points = elbow_curve(result) if len(result.intervals) > 1 else [
        (iv.m, iv.cost) for iv in result.intervals]
    out.add(outdir / "elbow.csv", _csv_text(["m", "cost"], [[m, fmt(q)] for m, q in points]))
    lines = [PmLine.of(s) for s in result.segmentations]
    out.add(outdir / "lines.csv", _csv_text(
        ["m", "cost", "penalised_at_beta_min", "penalised_at_beta_max"],
        [[ln.m, fmt(ln.Q), fmt(ln(beta_min)), fmt(ln(beta_max))] for ln in lines]))
    out.add(outdir / "audit.csv", _csv_text(
        ["beta", "m", "cost", "seconds", "evaluations", "resolved"],
        [[fmt(r.beta), r.m, fmt(r.cost), f"{r.seconds:.6f}", r.n_evals, r.n_resolved]
         for r in result.runs]))


def _cmd_sn(args, out: _AtomicWriter) -> None:
    ts = ingest(args.input)
    model = _model_from(args)
    segs = solve_sn(ts, model, args.max_changepoints)
    if args.format == "json":
        doc = {"schema_version": SCHEMA_VERSION, "n": ts.n, "cost_model": model.kind,
               "segmentations": [_segmentation_record(s) for s in segs]}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = _csv_text(["m", "cost", "changepoints"],
                         [[s.m, fmt(s.cost), " ".join(map(str, s.changepoints))] for s in segs])
    _write(out, args.output, text)


def _cmd_simulate(args, out: _AtomicWriter) -> None:
    spec = SimulationSpec(args.n, regime=args.regime, model_kind=args.model,
                          min_gap=args.min_gap, seed=args.seed)
    sim = generate(spec)
    _write(out, args.output, emit_series(sim.series.values))
    if args.truth:
        doc = {"schema_version": SCHEMA_VERSION, "n": spec.n, "regime": spec.regime,
               "model": spec.model_kind, "seed": spec.seed,
               "changepoints": list(sim.changepoints),
               "means": sim.means.tolist(), "sds": sim.sds.tolist()}
        out.add(Path(args.truth), json.dumps(doc, indent=2) + "\n")


def bench_rows(ns, regime, model_kind, instances, seed, beta_min, beta_max):
    """CROPS (recycling on and off) and SN wall times for simulated instances."""
    model = cost_model(MEANVAR)
    rows = []
    for n in ns:
        for i in range(instances):
            inst_seed = seed + i
            ts = generate(SimulationSpec(n, regime=regime, model_kind=model_kind, seed=inst_seed)).series
            m_min = None
            for method, recycle in (("crops", False), ("crops_recycle", True)):
                start = time.perf_counter()
                res = crops(ts, model, beta_min, beta_max, recycle=recycle)
                rows.append([n, regime, method, time.perf_counter() - start, res.solver_run_count, inst_seed])
                m_min = res.intervals[0].m
            start = time.perf_counter()
            solve_sn(ts, model, min(m_min, ts.n // model.min_segment_length - 1))
            rows.append([n, regime, "sn", time.perf_counter() - start, 1, inst_seed])
    return rows


def _cmd_bench(args, out: _AtomicWriter) -> None:
    rows = bench_rows(args.n, args.regime, args.model, args.instances, args.seed,
                      args.beta_min, args.beta_max)
    text = _csv_text(["n", "regime", "method", "seconds", "solver_runs", "seed"],
                     [[n, r, meth, f"{sec:.6f}", runs, s] for n, r, meth, sec, runs, s in rows])
    _write(out, args.output, text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cropscpd", description="Exact changepoint segmentation over penalty ranges.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(p):
        p.add_argument("input", help="CSV file: one value per line, or index,value")
        p.add_argument("--cost", choices=[MEAN, MEANVAR], default=MEANVAR)
        p.add_argument("--sigma", type=float, default=1.0, help="noise sd for the mean cost")
        p.add_argument("--min-seg-len", type=int, default=None)
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("segment", help="optimal segmentation for one penalty")
    data_args(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--penalty", choices=["aic", "sic", "hq"])
    p.add_argument("--method", choices=["pelt", "op"], default="pelt")
    p.add_argument("--output", "-o")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("crops", help="all optimal segmentations over a penalty range")
    data_args(p)
    p.add_argument("--beta-min", type=float)
    p.add_argument("--beta-max", type=float)
    p.add_argument("--recycle", action="store_true")
    p.add_argument("--output-dir", "-o", default=".")
    p.set_defaults(func=_cmd_crops)

    p = sub.add_parser("sn", help="Segment Neighbourhood for m = 0..M")
    data_args(p)
    p.add_argument("--max-changepoints", "-M", type=int, required=True)
    p.add_argument("--output", "-o")
    p.set_defaults(func=_cmd_sn)

    p = sub.add_parser("simulate", help="write a simulated series")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--regime", choices=["fixed", "sublinear", "linear"], default="fixed")
    p.add_argument("--model", choices=["gaussian", "misspecified"], default="gaussian")
    p.add_argument("--min-gap", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.add_argument("--truth", help="JSON file for true changepoints and parameters")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bench", help="CROPS vs Segment Neighbourhood timings")
    p.add_argument("--n", type=int, nargs="+", default=[1000, 2000, 4000])
    p.add_argument("--regime", choices=["fixed", "sublinear", "linear"], default="linear")
    p.add_argument("--model", choices=["gaussian", "misspecified"], default="gaussian")
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta-min", type=float, default=14.0)
    p.add_argument("--beta-max", type=float, default=40.0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("CROPSCPD_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    out = _AtomicWriter()
    try:
        args.func(args, out)
        out.commit()
    except UsageError as exc:
        out.abort()
        print(f"cropscpd: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PreconditionError) as exc:
        out.abort()
        print(f"cropscpd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CropsError, ArithmeticError) as exc:
        out.abort()
        print(f"cropscpd: solver error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BaseException:
        out.abort()
        raise
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
