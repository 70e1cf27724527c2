"""Exact segmentation solvers.

* :func:`solve_op` -- Optimal Partitioning, the O(n^2) penalised recursion.
* :func:`solve_pelt` -- the same recursion with PELT pruning, optionally
  warm-started from a :class:`PartialState`.
* :func:`solve_sn` -- Segment Neighbourhood, exact for every changepoint count
  ``0..M`` in O(M n^2).

Penalty bookkeeping: ``F[0] = -beta`` and every segment adds ``beta``, so
``F[t] = Q(y_{1:t}) + m_arr[t] * beta`` where ``m_arr[t]`` counts changepoints
(``m_arr[0] = -1``).  The penalised cost ``Q_m + (m + 1) * beta`` of the full
series is therefore ``F[n] + beta``.

Ties within ``tol`` in the recursion's argmin go to the candidate with the
fewest changepoints, so the returned segmentation is the minimal-m optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .costs import CostModel, TimeSeries, cost_kernel, segment_cost, segment_costs
from .exceptions import IntegrityError, NumericalError, PreconditionError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Segmentation:
    """Ordered changepoints of a length-``n`` series and their unpenalised cost.

    A changepoint ``tau`` ends a segment at 1-indexed position ``tau``; the
    segments are ``(0, tau_1], (tau_1, tau_2], ..., (tau_m, n]``.
    """

    changepoints: tuple[int, ...]
    cost: float
    n: int

    @property
    def m(self) -> int:
        return len(self.changepoints)

    def penalised_cost(self, beta: float) -> float:
        return self.cost + (self.m + 1) * beta

    def bounds(self) -> list[tuple[int, int]]:
        edges = (0, *self.changepoints, self.n)
        return list(zip(edges[:-1], edges[1:]))

    @classmethod
    def from_changepoints(
        cls, ts: TimeSeries, model: CostModel, changepoints: Sequence[int]
    ) -> "Segmentation":
        cps = tuple(int(c) for c in changepoints)
        edges = (0, *cps, ts.n)
        if any(b <= a for a, b in zip(edges[:-1], edges[1:])):
            raise PreconditionError(f"changepoints must be strictly inside (0, {ts.n}) and increasing")
        cost = 0.0
        for s, t in zip(edges[:-1], edges[1:]):
            cost += segment_cost(ts, model, s, t)
        return cls(cps, cost, ts.n)


@dataclass(frozen=True, eq=False)
class SolverState:
    """Per-time records of one penalised solve.

    ``pruned_counts[t]`` is the number of candidates evaluated at time ``t``
    (zero where a warm start supplied the answer); ``n_evals`` is their sum.
    """

    ts: TimeSeries
    model: CostModel
    beta: float
    F: np.ndarray
    cp: np.ndarray
    m_arr: np.ndarray
    pruned_counts: np.ndarray
    n_evals: int
    n_resolved: int = 0

    @property
    def n(self) -> int:
        return self.ts.n


@dataclass(frozen=True, eq=False)
class PartialState:
    """Precomputed ``(F, cp, m_arr)`` at the times where ``resolved`` is set."""

    beta: float
    F: np.ndarray
    cp: np.ndarray
    m_arr: np.ndarray
    resolved: np.ndarray


def _check_inputs(ts: TimeSeries, model: CostModel, beta: float) -> None:
    if not np.isfinite(beta) or beta < 0:
        raise PreconditionError(f"beta must be a finite non-negative number, got {beta!r}")
    if ts.n < model.min_segment_length:
        raise PreconditionError(
            f"series of length {ts.n} is shorter than min_segment_length={model.min_segment_length}"
        )


@njit(cache=True, nogil=True)
def _pelt_kernel(pre, kind, inv_var, floor, K, L, beta, tol, prune,
                 F, cp, marr, resolved, sizes):
    n = F.shape[0] - 1
    cand = np.empty(n + 1, np.int64)
    expire = np.empty(n + 1, np.int64)
    vals = np.empty(n + 1, np.float64)
    never = n + L + 1
    k = 0
    evals = 0
    F[0] = -beta
    cp[0] = 0
    marr[0] = -1
    for t in range(1, n + 1):
        # s = t - L has just become old enough to start a segment ending at t.
        s_new = t - L
        if s_new >= 0 and np.isfinite(F[s_new]):
            cand[k] = s_new
            expire[k] = never
            k += 1
        if resolved[t]:
            sizes[t] = 0
            continue
        j = 0
        for i in range(k):
            if expire[i] > t:
                cand[j] = cand[i]
                expire[j] = expire[i]
                j += 1
        k = j
        sizes[t] = k
        if k == 0:
            F[t] = np.inf
            cp[t] = -1
            marr[t] = -1
            continue
        vmin = np.inf
        for i in range(k):
            s = cand[i]
            v = F[s] + cost_kernel(pre, s, t, kind, inv_var, floor) + beta
            vals[i] = v
            if v < vmin:
                vmin = v
        evals += k
        best = -1
        for i in range(k):
            if vals[i] <= vmin + tol:
                if best < 0:
                    best = i
                else:
                    mi = marr[cand[i]]
                    mb = marr[cand[best]]
                    if mi < mb or (mi == mb and vals[i] < vals[best]):
                        best = i
        F[t] = vals[best]
        cp[t] = cand[best]
        marr[t] = marr[cand[best]] + 1
        if prune:
            # s is dominated by t for every T >= t + L; until then it stays.
            thr = F[t] + tol
            for i in range(k):
                if expire[i] == never and vals[i] - beta + K >= thr:
                    expire[i] = t + L
    return evals


def solve_pelt(
    ts: TimeSeries,
    model: CostModel,
    beta: float,
    warm_start: Optional[PartialState] = None,
    prune: bool = True,
    tol: float = DEFAULT_TOL,
) -> tuple[SolverState, Segmentation]:
    """Penalised segmentation by PELT.

    Parameters
    ----------
    ts, model
        Data and segment cost.
    beta : float
        Penalty per segment, ``>= 0``.
    warm_start : PartialState, optional
        Values fixed in advance (see :func:`cropscpd.crops.recycle_precompute`);
        the recursion only runs at unresolved times.
    prune : bool
        ``False`` keeps every admissible candidate (plain Optimal Partitioning).
    tol : float
        Absolute tolerance for argmin ties and the pruning test.
    """
    beta = float(beta)
    _check_inputs(ts, model, beta)
    n = ts.n
    if warm_start is None:
        F = np.empty(n + 1)
        cp = np.empty(n + 1, dtype=np.int64)
        m_arr = np.empty(n + 1, dtype=np.int64)
        resolved = np.zeros(n + 1, dtype=np.bool_)
    else:
        if warm_start.F.shape[0] != n + 1:
            raise PreconditionError("warm start was built for a series of a different length")
        if warm_start.beta != beta:
            raise PreconditionError("warm start was built for a different beta")
        F = warm_start.F.astype(np.float64, copy=True)
        cp = warm_start.cp.astype(np.int64, copy=True)
        m_arr = warm_start.m_arr.astype(np.int64, copy=True)
        resolved = warm_start.resolved.astype(np.bool_, copy=True)
        resolved[0] = True
    sizes = np.zeros(n + 1, dtype=np.int64)
    evals = _pelt_kernel(
        ts.prefix, model.code, model.inv_var, model.variance_floor,
        float(model.K), int(model.min_segment_length), beta, float(tol), bool(prune),
        F, cp, m_arr, resolved, sizes,
    )
    if not np.isfinite(F[n]):
        raise NumericalError(f"penalised cost at t={n} is not finite")
    for arr in (F, cp, m_arr, sizes):
        arr.setflags(write=False)
    state = SolverState(ts, model, beta, F, cp, m_arr, sizes, int(evals), int(resolved[1:].sum()))
    return state, backtrack(state)


def solve_op(
    ts: TimeSeries, model: CostModel, beta: float, tol: float = DEFAULT_TOL
) -> tuple[SolverState, Segmentation]:
    """Penalised segmentation by Optimal Partitioning (no pruning).

    Written with vectorised numpy over all admissible last changepoints; it
    shares no code with the PELT kernel so either can check the other.
    """
    beta = float(beta)
    _check_inputs(ts, model, beta)
    n, L = ts.n, model.min_segment_length
    F = np.full(n + 1, np.inf)
    cp = np.full(n + 1, -1, dtype=np.int64)
    m_arr = np.full(n + 1, -1, dtype=np.int64)
    sizes = np.zeros(n + 1, dtype=np.int64)
    F[0] = -beta
    cp[0] = 0
    evals = 0
    for t in range(L, n + 1):
        starts = np.arange(0, t - L + 1)
        starts = starts[np.isfinite(F[starts])]
        vals = F[starts] + segment_costs(ts, model, starts, t) + beta
        near = np.flatnonzero(vals <= vals.min() + tol)
        # minimal changepoint count first, then smallest value, then earliest s
        order = np.lexsort((vals[near], m_arr[starts[near]]))
        best = near[order[0]]
        F[t] = vals[best]
        cp[t] = starts[best]
        m_arr[t] = m_arr[starts[best]] + 1
        sizes[t] = starts.size
        evals += starts.size
    if not np.isfinite(F[n]):
        raise NumericalError(f"penalised cost at t={n} is not finite")
    state = SolverState(ts, model, beta, F, cp, m_arr, sizes, evals)
    return state, backtrack(state)


def backtrack(state: SolverState) -> Segmentation:
    """Recover the optimal changepoints of ``y_{1:n}`` by following ``cp``."""
    n = state.n
    cps = []
    t = n
    while True:
        s = int(state.cp[t])
        if s < 0 or s >= t:
            raise IntegrityError(f"cp[{t}] = {s} does not point strictly backwards")
        if s == 0:
            break
        cps.append(s)
        t = s
    if len(cps) != state.m_arr[n]:
        raise IntegrityError(
            f"backtracked {len(cps)} changepoints but m_arr[n] = {int(state.m_arr[n])}"
        )
    return Segmentation.from_changepoints(state.ts, state.model, cps[::-1])


@njit(cache=True, nogil=True)
def _sn_kernel(pre, kind, inv_var, floor, L, M, Q, arg):
    n = Q.shape[1] - 1
    c = np.empty(n + 1)
    for t in range(L, n + 1):
        smax = t - L
        c[0] = cost_kernel(pre, 0, t, kind, inv_var, floor)
        for s in range(L, smax + 1):
            c[s] = cost_kernel(pre, s, t, kind, inv_var, floor)
        Q[0, t] = c[0]
        arg[0, t] = 0
        kmax = min(M, t // L - 1)
        for k in range(1, kmax + 1):
            best = np.inf
            bs = -1
            prev = Q[k - 1]
            for s in range(k * L, smax + 1):
                v = prev[s] + c[s]
                if v < best:
                    best = v
                    bs = s
            Q[k, t] = best
            arg[k, t] = bs


def solve_sn(ts: TimeSeries, model: CostModel, max_changepoints: int) -> list[Segmentation]:
    """Best segmentation with exactly ``m`` changepoints for each ``m = 0..M``."""
    n, L = ts.n, model.min_segment_length
    M = int(max_changepoints)
    if M < 0 or M > n // L - 1:
        raise PreconditionError(
            f"max_changepoints={max_changepoints} infeasible for n={n}, "
            f"min_segment_length={L} (at most {n // L - 1})"
        )
    Q = np.full((M + 1, n + 1), np.inf)
    arg = np.full((M + 1, n + 1), -1, dtype=np.int64)
    _sn_kernel(ts.prefix, model.code, model.inv_var, model.variance_floor,
               L, M, Q, arg)
    out = []
    for m in range(M + 1):
        if not np.isfinite(Q[m, n]):
            raise NumericalError(f"constrained cost for m={m} is not finite")
        cps = []
        t, k = n, m
        while k > 0:
            t = int(arg[k, t])
            cps.append(t)
            k -= 1
        out.append(Segmentation.from_changepoints(ts, model, cps[::-1]))
    return out
