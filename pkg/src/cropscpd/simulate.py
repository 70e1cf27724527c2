"""Piecewise Gaussian series for benchmarking and accuracy studies.

Changepoints are placed uniformly over all configurations with at least
``min_gap`` observations per segment.  Segment means are drawn from
``N(0, mean_sd^2)`` and segment standard deviations from a log-normal with
log-scale ``lognormal_sigma``.  Under the ``misspecified`` model the mean
random-walks inside each segment with ``N(0, drift_sd^2)`` steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costs import TimeSeries
from .exceptions import PreconditionError

FIXED = "fixed"
SUBLINEAR = "sublinear"
LINEAR = "linear"
TRUE_GAUSSIAN = "gaussian"
MISSPECIFIED = "misspecified"


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SimulationSpec:
    n: int
    regime: str = FIXED
    model_kind: str = TRUE_GAUSSIAN
    min_gap: int = 20
    mean_sd: float = 2.5
    lognormal_sigma: float = math.log(10) / 2
    drift_sd: float = math.sqrt(0.1)
    seed: int = 0
    fixed_m: int = 10

    def __post_init__(self):
        if self.regime not in (FIXED, SUBLINEAR, LINEAR):
            raise PreconditionError(f"unknown regime {self.regime!r}")
        if self.model_kind not in (TRUE_GAUSSIAN, MISSPECIFIED):
            raise PreconditionError(f"unknown model kind {self.model_kind!r}")
        if self.min_gap < 1:
            raise PreconditionError("min_gap must be positive")
        if (self.m + 1) * self.min_gap > self.n:
            raise PreconditionError(
                f"{self.m} changepoints with min_gap={self.min_gap} do not fit in n={self.n}"
            )

    @property
    def m(self) -> int:
        if self.regime == FIXED:
            return self.fixed_m
        if self.regime == SUBLINEAR:
            return _round_half_up(math.sqrt(self.n) / 4)
        return _round_half_up(self.n / 100)


@dataclass(frozen=True, eq=False)
class Simulated:
    series: TimeSeries
    changepoints: tuple[int, ...]
    means: np.ndarray
    sds: np.ndarray


def sample_changepoints(n: int, m: int, min_gap: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from all ``m``-changepoint layouts with segments >= ``min_gap``."""
    excess = n - (m + 1) * min_gap
    if excess < 0:
        raise PreconditionError("infeasible changepoint layout")
    # stars and bars: m bars among excess + m slots give a uniform weak composition
    bars = np.sort(rng.choice(excess + m, size=m, replace=False))
    extra = np.diff(np.concatenate(([-1], bars, [excess + m]))) - 1
    gaps = extra + min_gap
    return np.cumsum(gaps)[:-1]


def generate(spec: SimulationSpec) -> Simulated:
    rng = np.random.default_rng(spec.seed)
    m = spec.m
    cps = sample_changepoints(spec.n, m, spec.min_gap, rng)
    edges = np.concatenate(([0], cps, [spec.n]))
    seg_means = rng.normal(0.0, spec.mean_sd, size=m + 1)
    seg_sds = rng.lognormal(0.0, spec.lognormal_sigma, size=m + 1)
    means = np.empty(spec.n)
    sds = np.empty(spec.n)
    for k in range(m + 1):
        s, t = edges[k], edges[k + 1]
        sds[s:t] = seg_sds[k]
        if spec.model_kind == TRUE_GAUSSIAN:
            means[s:t] = seg_means[k]
        else:
            steps = rng.normal(0.0, spec.drift_sd, size=t - s - 1)
            means[s:t] = seg_means[k] + np.concatenate(([0.0], np.cumsum(steps)))
    values = rng.normal(means, sds)
    return Simulated(TimeSeries(values), tuple(int(c) for c in cps), means, sds)
