import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cropscpd.costs import TimeSeries, mean_variance
from cropscpd.crops import CropsResult, PenaltyInterval, crops
from cropscpd.exceptions import PreconditionError
from cropscpd.metrics import (
    accuracy_report,
    correct_m_range,
    fitted_parameters,
    match_changepoints,
    parameter_mse,
)
from cropscpd.simulate import SimulationSpec, generate
from cropscpd.solvers import Segmentation, solve_pelt

from _oracles import optimal_matching


@pytest.mark.parametrize(
    "truth, detected, expected",
    [
        ([100], [107], (1, 0)),
        ([100], [], (0, 0)),
        ([100, 115], [108], (1, 0)),
        ([100], [111], (0, 1)),
        ([], [5, 9], (0, 2)),
        ([100, 200], [95, 105, 198], (2, 1)),
    ],
)
def test_matching_examples(truth, detected, expected):
    assert match_changepoints(truth, detected) == expected


def test_sweep_beats_greedy_nearest_first():
    # nearest-first would pair 108 with 110 and leave 100 unmatched
    assert match_changepoints([100, 110], [108, 119]) == (2, 0)


sorted_sets = st.lists(st.integers(0, 80), max_size=6, unique=True).map(sorted)


@settings(max_examples=300)
@given(sorted_sets, sorted_sets, st.integers(0, 12))
def test_matching_is_maximum(truth, detected, tol):
    tp, fp = match_changepoints(truth, detected, tol)
    assert tp == optimal_matching(truth, detected, tol)
    assert tp <= min(len(truth), len(detected))
    assert fp == len(detected) - tp >= 0


def test_parameter_mse_examples():
    assert parameter_mse(np.zeros(10), np.zeros(10)) == 0.0
    assert parameter_mse(np.zeros(10), np.ones(10)) == 1.0
    with pytest.raises(PreconditionError):
        parameter_mse(np.zeros(3), np.zeros(4))


def test_parameter_mse_matches_direct_sum():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=50), rng.normal(size=50)
    assert parameter_mse(a, b) == pytest.approx(sum((x - y) ** 2 for x, y in zip(a, b)) / 50)


def test_fitted_parameters_are_segment_mles():
    ts = TimeSeries([1.0, 3.0, 10.0, 10.0, 14.0])
    mean, sd = fitted_parameters(ts, Segmentation((2,), 0.0, 5))
    np.testing.assert_allclose(mean, [2, 2, 34 / 3, 34 / 3, 34 / 3])
    assert sd[0] == 1.0
    assert sd[4] == pytest.approx(np.std([10.0, 10.0, 14.0]))


def test_perfect_estimate_has_zero_error():
    sim = generate(SimulationSpec(400, seed=2))
    seg = Segmentation.from_changepoints(sim.series, mean_variance(), sim.changepoints)
    mean, _ = fitted_parameters(sim.series, seg)
    report = accuracy_report(sim.series, seg, sim.changepoints, mean, sim.sds)
    assert report.true_positives == 10 and report.false_positives == 0
    assert report.proportion_detected == 1.0 and report.proportion_false == 0.0
    assert report.mse_mean == 0.0


def test_report_zero_over_zero():
    ts = TimeSeries(np.zeros(30))
    report = accuracy_report(ts, Segmentation((), 0.0, 30), [], np.zeros(30), np.ones(30))
    assert report.proportion_detected == 0.0 and report.proportion_false == 0.0


def _result(rows):
    ivs = [
        PenaltyInterval(lo, hi, Segmentation(tuple(range(1, m + 1)), 0.0, 100))
        for lo, hi, m in rows
    ]
    return CropsResult(rows[0][0], rows[-1][1], ivs, [])


def test_correct_m_range_examples():
    assert correct_m_range(_result([(1.0, 4.0, 3)]), 3) == (1.0, 4.0)
    assert correct_m_range(_result([(1.0, 4.0, 3), (4.0, 9.0, 2)]), 2) == (4.0, 9.0)
    assert correct_m_range(_result([(1.0, 4.0, 3)]), 5) is None


def test_correct_m_range_against_grid():
    sim = generate(SimulationSpec(600, seed=17))
    model = mean_variance()
    result = crops(sim.series, model, 2.0, 60.0)
    rng_ = correct_m_range(result, 10)
    assert rng_ is not None
    grid = np.linspace(2.0, 60.0, 600)
    hits = [b for b in grid if solve_pelt(sim.series, model, b)[1].m == 10]
    spacing = grid[1] - grid[0]
    assert min(hits) == pytest.approx(rng_[0], abs=spacing)
    assert max(hits) == pytest.approx(rng_[1], abs=spacing)
