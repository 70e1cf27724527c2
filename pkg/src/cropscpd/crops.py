"""Optimal segmentations for every penalty in a range (CROPS).

For a fixed number of changepoints ``m`` the best penalised cost is the line
``P_m(beta) = Q_m + (m + 1) * beta``; the penalised optimum is the lower
envelope of these lines.  Solving at the two ends of an interval and then at
the intersection of the two lines found is enough to pin down every
segmentation on the envelope, with at most ``m(beta_min) - m(beta_max) + 1``
solves in total when the end counts differ.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .costs import CostModel, TimeSeries
from .exceptions import CropsError, NumericalError, PreconditionError, SolverError
from .solvers import DEFAULT_TOL, PartialState, Segmentation, SolverState, solve_pelt

logger = logging.getLogger(__name__)

Solver = Callable[[float, Optional[PartialState]], "tuple[Optional[SolverState], Segmentation]"]


@dataclass(frozen=True)
class PmLine:
    """Penalised cost of the best ``m``-changepoint segmentation as a function of beta."""

    m: int
    Q: float

    def __call__(self, beta: float) -> float:
        return self.Q + (self.m + 1) * beta

    @classmethod
    def of(cls, seg: Segmentation) -> "PmLine":
        return cls(seg.m, seg.cost)


def beta_intersection(line_lo: PmLine, line_hi: PmLine, tol: float = DEFAULT_TOL) -> float:
    """Penalty at which two lines meet.

    ``line_lo`` is the line with more changepoints (optimal at the lower
    penalty).  Raises :class:`ZeroDivisionError` for equal counts and
    :class:`NumericalError` when the result is negative, which can only happen
    if ``Q`` is not non-increasing in ``m``.
    """
    dm = line_lo.m - line_hi.m
    if dm == 0:
        raise ZeroDivisionError(f"lines with equal m={line_lo.m} never intersect")
    if dm < 0:
        raise PreconditionError("line_lo must have more changepoints than line_hi")
    if not (math.isfinite(line_lo.Q) and math.isfinite(line_hi.Q)):
        raise NumericalError("line costs must be finite")
    beta = (line_hi.Q - line_lo.Q) / dm
    if beta < -tol:
        raise NumericalError(
            f"negative intersection {beta!r}: Q_{line_lo.m}={line_lo.Q!r} exceeds Q_{line_hi.m}={line_hi.Q!r}"
        )
    return max(beta, 0.0)


@dataclass(frozen=True)
class PenaltyInterval:
    """A penalty interval over which ``segmentation`` is the (minimal-m) optimum."""

    beta_lo: float
    beta_hi: float
    segmentation: Segmentation
    closed_lo: bool = True
    closed_hi: bool = False

    @property
    def m(self) -> int:
        return self.segmentation.m

    @property
    def cost(self) -> float:
        return self.segmentation.cost

    def __contains__(self, beta: float) -> bool:
        above = beta >= self.beta_lo if self.closed_lo else beta > self.beta_lo
        below = beta <= self.beta_hi if self.closed_hi else beta < self.beta_hi
        return above and below


@dataclass(frozen=True)
class RunRecord:
    beta: float
    m: int
    cost: float
    seconds: float
    n_evals: int
    n_resolved: int


@dataclass
class CropsResult:
    """Intervals tiling ``[beta_min, beta_max]`` plus the solver-run audit trail."""

    beta_min: float
    beta_max: float
    intervals: list[PenaltyInterval]
    runs: list[RunRecord]
    notes: list[str] = field(default_factory=list)

    @property
    def solver_run_count(self) -> int:
        return len(self.runs)

    @property
    def total_evaluations(self) -> int:
        return sum(r.n_evals for r in self.runs)

    @property
    def segmentations(self) -> list[Segmentation]:
        return [iv.segmentation for iv in self.intervals]

    def m_at(self, beta: float) -> int:
        for iv in self.intervals:
            if beta in iv:
                return iv.m
        raise PreconditionError(f"beta={beta!r} outside [{self.beta_min}, {self.beta_max}]")


def recycle_precompute(
    state_lo: SolverState, state_hi: SolverState, beta_int: float, tol: float = DEFAULT_TOL
) -> PartialState:
    """Warm start for a solve at ``beta_int`` from solves at bracketing penalties.

    Where the two prefix solutions agree on the changepoint count the answer
    carries over with its cost shifted along its line; where they differ by
    one the cheaper of the two shifted lines wins (the smaller count on a
    tie).  Everything else is left for the solver.
    """
    if state_lo.n != state_hi.n:
        raise PreconditionError("states come from series of different lengths")
    b0, b1 = state_lo.beta, state_hi.beta
    if not b0 <= beta_int <= b1:
        raise PreconditionError(f"beta_int={beta_int!r} outside [{b0!r}, {b1!r}]")
    n = state_lo.n
    m0 = state_lo.m_arr
    m1 = state_hi.m_arr
    a = state_lo.F + m0 * (beta_int - b0)
    b = state_hi.F + m1 * (beta_int - b1)
    same = m0 == m1
    step = m0 == m1 + 1
    take_lo = same | (step & (a < b - tol))
    take_hi = step & ~take_lo

    F = np.full(n + 1, np.nan)
    cp = np.full(n + 1, -1, dtype=np.int64)
    m_arr = np.full(n + 1, -1, dtype=np.int64)
    F[take_lo] = a[take_lo]
    cp[take_lo] = state_lo.cp[take_lo]
    m_arr[take_lo] = m0[take_lo]
    F[take_hi] = b[take_hi]
    cp[take_hi] = state_hi.cp[take_hi]
    m_arr[take_hi] = m1[take_hi]
    resolved = take_lo | take_hi
    F[0], cp[0], m_arr[0], resolved[0] = -beta_int, 0, -1, True
    return PartialState(beta_int, F, cp, m_arr, resolved)


def crops(
    ts: TimeSeries,
    model: CostModel,
    beta_min: float,
    beta_max: float,
    recycle: bool = False,
    solver: Optional[Solver] = None,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
) -> CropsResult:
    """Find every segmentation that is optimal for some beta in ``[beta_min, beta_max]``.

    Parameters
    ----------
    ts, model
        Data and segment cost.
    beta_min, beta_max : float
        Penalty range, ``0 <= beta_min < beta_max``.
    recycle : bool
        Warm-start each intermediate solve from the two runs bracketing it.
    solver : callable, optional
        ``solver(beta, warm_start) -> (state, segmentation)``; defaults to
        PELT.  ``state`` may be ``None``, which disables recycling for that run.
    workers : int
        With more than one worker, all pending intervals are solved
        concurrently in waves and the audit trail is ordered by beta.

    Returns
    -------
    CropsResult
        Intervals ordered by increasing beta (strictly decreasing ``m``).
    """
    beta_min, beta_max = float(beta_min), float(beta_max)
    if not (math.isfinite(beta_min) and math.isfinite(beta_max)):
        raise PreconditionError("penalty range must be finite")
    if beta_min < 0 or beta_min >= beta_max:
        raise PreconditionError(f"need 0 <= beta_min < beta_max, got [{beta_min}, {beta_max}]")
    if solver is None:
        def solver(beta, warm_start):
            return solve_pelt(ts, model, beta, warm_start=warm_start, tol=tol)

    results: dict[float, tuple[Optional[SolverState], Segmentation]] = {}
    runs: list[RunRecord] = []
    notes: list[str] = []

    def note(msg: str) -> None:
        logger.warning(msg)
        notes.append(msg)

    def run(beta: float, bracket: Optional[tuple[float, float]] = None) -> RunRecord:
        warm = None
        if recycle and bracket is not None:
            lo_state, hi_state = results[bracket[0]][0], results[bracket[1]][0]
            if lo_state is not None and hi_state is not None:
                warm = recycle_precompute(lo_state, hi_state, beta, tol=tol)
        start = time.perf_counter()
        try:
            state, seg = solver(beta, warm)
        except CropsError as exc:
            raise SolverError(str(exc), beta) from exc
        seconds = time.perf_counter() - start
        results[beta] = (state, seg)
        return RunRecord(
            beta, seg.m, seg.cost, seconds,
            state.n_evals if state is not None else 0,
            state.n_resolved if state is not None else 0,
        )

    def m_of(beta: float) -> int:
        return results[beta][1].m

    def next_beta(b0: float, b1: float) -> Optional[float]:
        m0, m1 = m_of(b0), m_of(b1)
        if m0 <= m1 + 1:
            return None
        bi = beta_intersection(PmLine.of(results[b0][1]), PmLine.of(results[b1][1]), tol=tol)
        if not (b0 < bi < b1):
            note(f"intersection {bi!r} outside ({b0!r}, {b1!r}); interval resolved without a solve")
            return None
        return bi

    def children(b0: float, bi: float, b1: float) -> list[tuple[float, float]]:
        mi, m0, m1 = m_of(bi), m_of(b0), m_of(b1)
        if mi == m1:
            return []
        if mi >= m0:
            note(f"solve at {bi!r} returned m={mi} >= m({b0!r})={m0}; treating interval as resolved")
            return []
        return [(b0, bi), (bi, b1)]

    for beta in (beta_min, beta_max):
        runs.append(run(beta))

    stack = [(beta_min, beta_max)]
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while stack:
            if pool is None:
                b0, b1 = stack.pop()
                bi = next_beta(b0, b1)
                if bi is None:
                    continue
                runs.append(run(bi, (b0, b1)))
                # LIFO with the left half on top: left intervals are processed first.
                stack.extend(reversed(children(b0, bi, b1)))
            else:
                wave = [(b0, b1, next_beta(b0, b1)) for b0, b1 in stack]
                wave = [w for w in wave if w[2] is not None]
                stack = []
                runs.extend(pool.map(lambda w: run(w[2], (w[0], w[1])), wave))
                for b0, b1, bi in wave:
                    stack.extend(children(b0, bi, b1))
    finally:
        if pool is not None:
            pool.shutdown()
    if pool is not None:
        runs.sort(key=lambda r: r.beta)

    intervals = _assemble(beta_min, beta_max, results, tol)
    return CropsResult(beta_min, beta_max, intervals, runs, notes)


def _assemble(beta_min, beta_max, results, tol) -> list[PenaltyInterval]:
    by_m: dict[int, Segmentation] = {}
    for beta in sorted(results):
        seg = results[beta][1]
        by_m.setdefault(seg.m, seg)
    segs = [by_m[m] for m in sorted(by_m, reverse=True)]
    bounds = [beta_min]
    for left, right in zip(segs[:-1], segs[1:]):
        b = beta_intersection(PmLine.of(left), PmLine.of(right), tol=tol)
        bounds.append(min(max(b, bounds[-1]), beta_max))
    bounds.append(beta_max)
    intervals = []
    for i, seg in enumerate(segs):
        lo, hi = bounds[i], bounds[i + 1]
        last = i == len(segs) - 1
        intervals.append(PenaltyInterval(lo, hi, seg, closed_lo=True, closed_hi=last or lo == hi))
    return intervals


def lower_hull(points: Sequence[tuple[int, float]], tol: float = 0.0) -> list[tuple[int, float]]:
    """Vertices of the lower convex hull of ``(m, Q)`` points, ordered by ``m``.

    Points within ``tol`` of a hull edge are not reported as vertices.
    """
    pts = sorted(points)
    hull: list[tuple[int, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] unless it lies strictly below the chord hull[-2] -> p
            chord = y1 + (p[1] - y1) * (x2 - x1) / (p[0] - x1)
            if y2 >= chord - tol:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def unreachable_segmentations(
    sn_results: Sequence[Segmentation], crops_result: CropsResult, tol: float = 0.0
) -> list[int]:
    """Changepoint counts skipped by CROPS whose SN cost lies above the recovered chord.

    Every ``m`` strictly between the smallest and largest recovered counts that
    CROPS did not return is compared with the straight line joining its two
    neighbouring recovered ``(m, Q_m)`` points.
    """
    sn_cost = {seg.m: seg.cost for seg in sn_results}
    recovered = sorted((iv.m, iv.cost) for iv in crops_result.intervals)
    missing = [m for m in range(recovered[0][0], recovered[-1][0] + 1) if m not in sn_cost]
    if missing:
        raise PreconditionError(f"SN results lack m={missing}")
    out = []
    for (ma, qa), (mb, qb) in zip(recovered[:-1], recovered[1:]):
        for m in range(ma + 1, mb):
            chord = qa + (qb - qa) * (m - ma) / (mb - ma)
            if sn_cost[m] > chord + tol:
                out.append(m)
    return out
