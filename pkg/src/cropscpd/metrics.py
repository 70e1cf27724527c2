"""Accuracy metrics for estimated segmentations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .costs import TimeSeries
from .crops import CropsResult
from .exceptions import PreconditionError
from .solvers import Segmentation


@dataclass(frozen=True)
class AccuracyReport:
    true_positives: int
    false_positives: int
    proportion_detected: float
    proportion_false: float
    mse_mean: float
    mse_sd: float
    correct_m_beta_range: Optional[tuple[float, float]] = None


def match_changepoints(
    truth: Sequence[int], detected: Sequence[int], tolerance: int = 10
) -> tuple[int, int]:
    """True and false positives with one-to-one matching within ``tolerance``.

    Truths are swept in order, each taking the earliest unused detection within
    reach; on a line this yields a maximum-cardinality matching.
    """
    det = sorted(detected)
    tp = 0
    j = 0
    for tau in sorted(truth):
        while j < len(det) and det[j] < tau - tolerance:
            j += 1
        if j < len(det) and det[j] <= tau + tolerance:
            tp += 1
            j += 1
    return tp, len(det) - tp


def fitted_parameters(ts: TimeSeries, segmentation: Segmentation) -> tuple[np.ndarray, np.ndarray]:
    """Per-time maximum-likelihood mean and standard deviation of each segment."""
    mean = np.empty(ts.n)
    sd = np.empty(ts.n)
    for s, t in segmentation.bounds():
        seg = ts.values[s:t]
        mu = seg.mean()
        mean[s:t] = mu
        sd[s:t] = np.sqrt(np.mean((seg - mu) ** 2))
    return mean, sd


def parameter_mse(truth: np.ndarray, estimate: np.ndarray) -> float:
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if truth.shape != estimate.shape:
        raise PreconditionError(f"length mismatch: {truth.shape} vs {estimate.shape}")
    return float(np.mean((estimate - truth) ** 2))


def correct_m_range(result: CropsResult, true_m: int) -> Optional[tuple[float, float]]:
    """Penalty range whose optimal segmentation has ``true_m`` changepoints, if any."""
    hits = [iv for iv in result.intervals if iv.m == true_m]
    if not hits:
        return None
    return min(iv.beta_lo for iv in hits), max(iv.beta_hi for iv in hits)


def accuracy_report(
    ts: TimeSeries,
    segmentation: Segmentation,
    truth: Sequence[int],
    true_means: np.ndarray,
    true_sds: np.ndarray,
    tolerance: int = 10,
    crops_result: Optional[CropsResult] = None,
) -> AccuracyReport:
    tp, fp = match_changepoints(truth, segmentation.changepoints, tolerance)
    n_true, n_det = len(truth), segmentation.m
    mean, sd = fitted_parameters(ts, segmentation)
    return AccuracyReport(
        true_positives=tp,
        false_positives=fp,
        proportion_detected=tp / n_true if n_true else 0.0,
        proportion_false=fp / n_det if n_det else 0.0,
        mse_mean=parameter_mse(true_means, mean),
        mse_sd=parameter_mse(true_sds, sd),
        correct_m_beta_range=(
            correct_m_range(crops_result, n_true) if crops_result is not None else None
        ),
    )
