"""Gaussian segment costs evaluated in O(1) from cumulative sums.

Two costs are provided, both equal to minus twice a maximised Gaussian
log-likelihood (up to terms that do not depend on the segmentation):

* ``mean`` -- change in mean with known standard deviation ``sigma``.
  The ``n log(sigma^2)`` term is constant over segmentations and is dropped,
  leaving a scaled square-error cost.
* ``meanvar`` -- change in mean and variance, ``(t - s) * (log v + 1)`` where
  ``v`` is the segment's mean squared deviation.

Segment sums come from compensated prefix sums of the centred series, with
an exact two-pass fallback when the one-pass variance cancels badly, so a
cost costs O(1) for any well-conditioned segment.

A segment is addressed by ``(s, t]``: it holds the observations at 1-indexed
positions ``s + 1 .. t``, i.e. ``values[s:t]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .exceptions import NumericalError, PreconditionError

MEAN = "mean"
MEANVAR = "meanvar"

# Integer codes passed to the compiled kernels.
KIND_CODES = {MEAN: 0, MEANVAR: 1}


@njit(cache=True)
def _prefix_table(y):
    """Rows: centred values (padded), then compensated prefix sums of values
    and squares, each as a (high, low) pair of rows."""
    n = y.shape[0]
    pre = np.zeros((5, n + 1))
    s_hi = 0.0
    s_lo = 0.0
    q_hi = 0.0
    q_lo = 0.0
    for i in range(n):
        x = y[i]
        pre[0, i] = x
        # TwoSum keeps the rounding error of each addition in the low word
        t = s_hi + x
        e = (s_hi - (t - (t - s_hi))) + (x - (t - s_hi))
        s_hi = t
        s_lo += e
        x2 = x * x
        t = q_hi + x2
        e = (q_hi - (t - (t - q_hi))) + (x2 - (t - q_hi))
        q_hi = t
        q_lo += e
        pre[1, i + 1] = s_hi
        pre[2, i + 1] = s_lo
        pre[3, i + 1] = q_hi
        pre[4, i + 1] = q_lo
    return pre


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """An observed sequence with cumulative sums of values and squares.

    ``cum_sum[t] - cum_sum[s]`` is the sum of ``values[s:t]``; both cumulative
    arrays have a leading zero and length ``n + 1``.  The cost kernels use a
    separate, more accurate table (``prefix``) built from the values centred
    on their overall mean.
    """

    values: np.ndarray
    cum_sum: np.ndarray = field(init=False, repr=False)
    cum_sum_sq: np.ndarray = field(init=False, repr=False)
    prefix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.size == 0:
            raise PreconditionError("a time series needs at least one observation")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("time series values must be finite")
        cum_sum = np.concatenate(([0.0], np.cumsum(values)))
        cum_sum_sq = np.concatenate(([0.0], np.cumsum(values * values)))
        prefix = _prefix_table(values - values.mean())
        for arr in (values, cum_sum, cum_sum_sq, prefix):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cum_sum", cum_sum)
        object.__setattr__(self, "cum_sum_sq", cum_sum_sq)
        object.__setattr__(self, "prefix", prefix)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class CostModel:
    """Segment cost configuration.

    Use :func:`mean_square_error` or :func:`mean_variance` rather than
    constructing this directly; they fill in the per-kind defaults.

    Attributes
    ----------
    kind : str
        ``"mean"`` or ``"meanvar"``.
    sigma : float
        Known noise standard deviation (``mean`` only).
    variance_floor : float
        Lower clamp on the segment variance (``meanvar`` only).
    min_segment_length : int
        Shortest admissible segment.
    K : float
        Pruning constant with ``C(s,t) + C(t,T) + K <= C(s,T)``; zero for
        both bundled costs.
    """

    kind: str
    sigma: float = 1.0
    variance_floor: float = 1e-12
    min_segment_length: int = 1
    K: float = 0.0

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise PreconditionError(f"unknown cost kind {self.kind!r}")
        if self.kind == MEAN and not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise PreconditionError("sigma must be a positive finite number")
        if self.kind == MEANVAR and not self.variance_floor > 0:
            raise PreconditionError("variance_floor must be positive")
        min_len = 1 if self.kind == MEAN else 2
        if int(self.min_segment_length) != self.min_segment_length or self.min_segment_length < min_len:
            raise PreconditionError(
                f"min_segment_length must be an integer >= {min_len} for {self.kind!r}"
            )

    @property
    def p(self) -> int:
        """Parameters estimated per segment."""
        return 1 if self.kind == MEAN else 2

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def inv_var(self) -> float:
        return 1.0 / (self.sigma * self.sigma)


def mean_square_error(sigma: float = 1.0, min_segment_length: int = 1) -> CostModel:
    """Change-in-mean cost with known noise standard deviation."""
    return CostModel(MEAN, sigma=sigma, min_segment_length=min_segment_length)


def mean_variance(variance_floor: float = 1e-12, min_segment_length: int = 2) -> CostModel:
    """Change-in-mean-and-variance cost."""
    return CostModel(MEANVAR, variance_floor=variance_floor, min_segment_length=min_segment_length)


def cost_model(kind: str, **kwargs) -> CostModel:
    if kind == MEAN:
        return mean_square_error(**kwargs)
    if kind == MEANVAR:
        kwargs.pop("sigma", None)
        return mean_variance(**kwargs)
    raise PreconditionError(f"unknown cost kind {kind!r}")


# Below this ratio of deviation to raw sum of squares the one-pass variance
# has lost more than ~4 significant digits and is recomputed in two passes.
CANCELLATION_GUARD = 1e-4


@njit(cache=True, nogil=True)
def cost_kernel(pre, s, t, kind, inv_var, floor):
    """Cost of segment ``(s, t]``; ``kind`` is a :data:`KIND_CODES` value."""
    length = t - s
    total = (pre[1, t] - pre[1, s]) + (pre[2, t] - pre[2, s])
    total_sq = (pre[3, t] - pre[3, s]) + (pre[4, t] - pre[4, s])
    dev = total_sq - total * total / length
    if dev < CANCELLATION_GUARD * total_sq:
        mean = 0.0
        for i in range(s, t):
            mean += pre[0, i]
        mean /= length
        dev = 0.0
        for i in range(s, t):
            d = pre[0, i] - mean
            dev += d * d
    if kind == 0:
        return dev * inv_var
    v = dev / length
    if v < 0.0:
        v = 0.0
    if v < floor:
        v = floor
    return length * (np.log(v) + 1.0)


def segment_cost(ts: TimeSeries, model: CostModel, s: int, t: int) -> float:
    """Cost of the segment holding ``values[s:t]``."""
    if not (0 <= s < t <= ts.n):
        raise PreconditionError(f"segment ({s}, {t}] outside 0 <= s < t <= {ts.n}")
    if t - s < model.min_segment_length:
        raise PreconditionError(
            f"segment ({s}, {t}] shorter than min_segment_length={model.min_segment_length}"
        )
    value = cost_kernel(ts.prefix, s, t, model.code, model.inv_var, model.variance_floor)
    if not math.isfinite(value):
        raise NumericalError(f"non-finite cost for segment ({s}, {t}]")
    return float(value)


def segment_costs(ts: TimeSeries, model: CostModel, starts: np.ndarray, t: int) -> np.ndarray:
    """Vectorised costs of ``(s, t]`` for every ``s`` in ``starts`` (no checks)."""
    pre = ts.prefix
    starts = np.asarray(starts, dtype=np.int64)
    length = t - starts
    total = (pre[1, t] - pre[1, starts]) + (pre[2, t] - pre[2, starts])
    total_sq = (pre[3, t] - pre[3, starts]) + (pre[4, t] - pre[4, starts])
    dev = total_sq - total * total / length
    for i in np.flatnonzero(dev < CANCELLATION_GUARD * total_sq):
        seg = pre[0, starts[i]:t]
        dev[i] = np.sum((seg - seg.mean()) ** 2)
    if model.kind == MEAN:
        return dev * model.inv_var
    v = np.maximum(np.maximum(dev / length, 0.0), model.variance_floor)
    return length * (np.log(v) + 1.0)
