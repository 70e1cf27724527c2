import csv
import json
import logging

import numpy as np
import pytest

from cropscpd.cli import bench_rows, emit_series, ingest, main
from cropscpd.costs import mean_variance
from cropscpd.exceptions import DataError
from cropscpd.simulate import SimulationSpec, generate
from cropscpd.solvers import solve_sn


def write(path, text):
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------
# ingest


def test_ingest_plain_column(tmp_path):
    ts = ingest(write(tmp_path / "a.csv", "1.0\n2.0\n3.0"))
    assert ts.values.tolist() == [1.0, 2.0, 3.0]


def test_ingest_skips_header_with_warning(tmp_path, caplog):
    with caplog.at_level(logging.WARNING, logger="cropscpd"):
        ts = ingest(write(tmp_path / "a.csv", "value\n4\n5\n"))
    assert ts.values.tolist() == [4.0, 5.0]
    assert "header" in caplog.text


def test_ingest_two_columns(tmp_path):
    ts = ingest(write(tmp_path / "a.csv", "index,value\n0,1.5\n1,2.5\n"))
    assert ts.values.tolist() == [1.5, 2.5]


def test_ingest_reports_line_number(tmp_path):
    with pytest.raises(DataError, match="line 5"):
        ingest(write(tmp_path / "a.csv", "1\n2\n3\n4\nabc\n6\n"))


@pytest.mark.parametrize("text", ["", "\n\n", "value\n"])
def test_ingest_rejects_empty(tmp_path, text):
    with pytest.raises(DataError):
        ingest(write(tmp_path / "a.csv", text))


@pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
def test_ingest_rejects_non_finite(tmp_path, bad):
    with pytest.raises(DataError, match="line 2"):
        ingest(write(tmp_path / "a.csv", f"1\n{bad}\n"))


def test_ingest_missing_file(tmp_path):
    with pytest.raises(DataError):
        ingest(tmp_path / "missing.csv")


def test_round_trip_full_precision(tmp_path):
    values = np.random.default_rng(0).normal(size=200) * 10.0 ** np.arange(-100, 100)
    ts = ingest(write(tmp_path / "a.csv", emit_series(values)))
    np.testing.assert_array_equal(ts.values, values)


# --------------------------------------------------------------------------
# segment / crops / sn


def test_segment_with_named_penalty(tmp_path, capsys):
    src = write(tmp_path / "a.csv", emit_series([0.0] * 30 + [8.0] * 30))
    assert main(["segment", src, "--cost", "mean", "--penalty", "sic"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["changepoints"] == [30] and doc["m"] == 1
    assert doc["beta"] == pytest.approx(np.log(60))


def test_segment_usage_errors(tmp_path):
    src = write(tmp_path / "a.csv", "1\n2\n3\n")
    assert main(["segment", src]) == 1
    assert main(["segment", src, "--beta", "1", "--penalty", "aic"]) == 1
    assert main(["segment", src, "--beta", "-2"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["segment", src, "--penalty", "nonsense"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1


def test_data_errors_exit_2(tmp_path):
    src = write(tmp_path / "a.csv", "1\nxyz\n")
    assert main(["segment", src, "--beta", "1"]) == 2
    one = write(tmp_path / "b.csv", "1\n")
    assert main(["segment", one, "--beta", "1"]) == 2  # shorter than the meanvar minimum


def test_crops_constant_input(tmp_path):
    src = write(tmp_path / "a.csv", "3\n" * 40)
    out = tmp_path / "out"
    assert main(["crops", src, "--beta-min", "1", "--beta-max", "10", "-o", str(out)]) == 0
    doc = json.loads((out / "intervals.json").read_text())
    assert doc["schema_version"] == 1
    assert len(doc["intervals"]) == 1 and doc["intervals"][0]["m"] == 0
    assert set(doc["intervals"][0]) == {"beta_lo", "beta_hi", "m", "cost", "changepoints"}
    assert len(read_csv(out / "audit.csv")) == doc["solver_runs"] == 2


@pytest.fixture(scope="module")
def fixed_series(tmp_path_factory):
    sim = generate(SimulationSpec(1000, seed=7))
    path = tmp_path_factory.mktemp("data") / "series.csv"
    path.write_text(emit_series(sim.series.values))
    return str(path), sim


def test_crops_recovers_true_count(tmp_path, fixed_series):
    src, sim = fixed_series
    out = tmp_path / "out"
    assert main(["crops", src, "--beta-min", "2", "--beta-max", "60", "-o", str(out)]) == 0
    doc = json.loads((out / "intervals.json").read_text())
    ms = [iv["m"] for iv in doc["intervals"]]
    assert 10 in ms
    # the reported 10-changepoint segmentation is SN's best one
    sn = solve_sn(sim.series, mean_variance(), 10)[10]
    rec = next(iv for iv in doc["intervals"] if iv["m"] == 10)
    assert tuple(rec["changepoints"]) == sn.changepoints
    assert rec["cost"] == pytest.approx(sn.cost, abs=1e-8)
    elbow = read_csv(out / "elbow.csv")
    assert [int(r["m"]) for r in elbow] == sorted(ms)
    audit = read_csv(out / "audit.csv")
    assert len(audit) == doc["solver_runs"]
    assert {"beta", "m", "seconds"} <= set(audit[0])
    assert len(read_csv(out / "lines.csv")) == len(ms)


def test_crops_reports_are_deterministic(tmp_path, fixed_series):
    src, _ = fixed_series
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["crops", src, "--beta-min", "5", "--beta-max", "40", "--recycle",
                     "--format", "csv", "-o", str(out)]) == 0
        outs.append(out)
    for fname in ("intervals.csv", "elbow.csv", "lines.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
    # audit rows agree apart from wall time
    strip = lambda rows: [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    assert strip(read_csv(outs[0] / "audit.csv")) == strip(read_csv(outs[1] / "audit.csv"))


def test_crops_default_range(tmp_path, fixed_series):
    src, _ = fixed_series
    out = tmp_path / "out"
    assert main(["crops", src, "-o", str(out)]) == 0
    doc = json.loads((out / "intervals.json").read_text())
    assert doc["beta_min"] == pytest.approx(np.log(1000))
    assert doc["beta_max"] == pytest.approx(20 * np.log(1000))


def test_crops_bad_range_writes_nothing(tmp_path, fixed_series):
    src, _ = fixed_series
    out = tmp_path / "out"
    assert main(["crops", src, "--beta-min", "9", "--beta-max", "3", "-o", str(out)]) == 1
    assert main(["crops", src, "--beta-min", "9", "-o", str(out)]) == 1
    assert not out.exists() or not any(out.iterdir())


def test_failed_run_removes_partial_output(tmp_path, monkeypatch, fixed_series):
    from cropscpd import cli
    from cropscpd.exceptions import NumericalError

    def broken(*a, **k):
        raise NumericalError("forced")

    src, _ = fixed_series
    out = tmp_path / "out"
    monkeypatch.setattr(cli, "elbow_curve", broken)
    assert main(["crops", src, "--beta-min", "5", "--beta-max", "40", "-o", str(out)]) == 3
    assert list(out.iterdir()) == []


def test_sn_command(tmp_path, fixed_series):
    src, sim = fixed_series
    dest = tmp_path / "sn.csv"
    assert main(["sn", src, "-M", "12", "--format", "csv", "-o", str(dest)]) == 0
    rows = read_csv(dest)
    assert [int(r["m"]) for r in rows] == list(range(13))
    costs = [float(r["cost"]) for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(costs, costs[1:]))


def test_sn_infeasible_m(tmp_path):
    src = write(tmp_path / "a.csv", "1\n2\n3\n4\n")
    assert main(["sn", src, "-M", "5"]) == 2


# --------------------------------------------------------------------------
# simulate / bench


def test_simulate_writes_series_and_truth(tmp_path):
    series, truth = tmp_path / "s.csv", tmp_path / "t.json"
    args = ["simulate", "--n", "400", "--regime", "sublinear", "--seed", "3",
            "-o", str(series), "--truth", str(truth)]
    assert main(args) == 0
    ts = ingest(series)
    doc = json.loads(truth.read_text())
    assert ts.n == 400 and len(doc["changepoints"]) == 5
    np.testing.assert_array_equal(ts.values, generate(SimulationSpec(400, regime="sublinear", seed=3)).series.values)
    first = series.read_bytes()
    assert main(args) == 0
    assert series.read_bytes() == first


def test_simulate_infeasible(tmp_path):
    assert main(["simulate", "--n", "100", "-o", str(tmp_path / "s.csv")]) == 2


def test_bench_format(tmp_path):
    dest = tmp_path / "bench.csv"
    assert main(["bench", "--n", "2000", "--regime", "linear", "-o", str(dest)]) == 0
    rows = read_csv(dest)
    assert list(rows[0]) == ["n", "regime", "method", "seconds", "solver_runs", "seed"]
    assert [r["method"] for r in rows] == ["crops", "crops_recycle", "sn"]
    assert all(r["n"] == "2000" and r["regime"] == "linear" for r in rows)


def test_bench_runs_match_audit():
    from cropscpd.crops import crops
    rows = bench_rows([1000], "linear", "gaussian", 1, 0, 14.0, 40.0)
    ts = generate(SimulationSpec(1000, regime="linear", seed=0)).series
    result = crops(ts, mean_variance(), 14.0, 40.0)
    assert rows[0][4] == result.solver_run_count == len(result.runs)


@pytest.mark.slow
def test_sn_time_grows_quadratically():
    rows = bench_rows([1000, 4000], "linear", "gaussian", 1, 0, 14.0, 40.0)
    sn = {r[0]: r[3] for r in rows if r[2] == "sn"}
    assert sn[4000] / sn[1000] > 8
