"""Standard penalty constants and the elbow diagnostic.

Natural logarithms throughout.  ``p`` is the number of parameters a new
segment introduces (1 for the mean cost, 2 for mean-and-variance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .crops import CropsResult
from .exceptions import PreconditionError
from .solvers import Segmentation

AIC = "aic"
SIC = "sic"
HANNAN_QUINN = "hq"
MANUAL = "manual"

_ALIASES = {
    "aic": AIC,
    "sic": SIC,
    "bic": SIC,
    "hq": HANNAN_QUINN,
    "hannanquinn": HANNAN_QUINN,
    "hannan-quinn": HANNAN_QUINN,
    "manual": MANUAL,
}


@dataclass(frozen=True)
class PenaltyRule:
    kind: str
    p: int = 1
    value: Optional[float] = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower())
        if kind is None:
            raise PreconditionError(f"unknown penalty rule {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.p < 1:
            raise PreconditionError("p must be a positive integer")
        if kind == MANUAL and (self.value is None or not self.value > 0):
            raise PreconditionError("a manual penalty needs a positive value")


def penalty_value(rule: PenaltyRule, n: int) -> float:
    """AIC ``2p``, SIC ``p log n``, Hannan-Quinn ``2p log log n``, or the manual value."""
    if rule.kind == MANUAL:
        return float(rule.value)
    if rule.kind == AIC:
        if n < 1:
            raise PreconditionError("AIC needs n >= 1")
        return 2.0 * rule.p
    if n < 3:
        raise PreconditionError(f"{rule.kind} penalty needs n >= 3, got n={n}")
    if rule.kind == SIC:
        return rule.p * math.log(n)
    return 2.0 * rule.p * math.log(math.log(n))


def elbow_curve(result: Union[CropsResult, Sequence[Segmentation]]) -> list[tuple[int, float]]:
    """``(m, Q_m)`` pairs ordered by increasing ``m``, for picking an elbow by eye."""
    if isinstance(result, CropsResult):
        segs = result.segmentations
    else:
        segs = list(result)
    points = sorted({seg.m: seg.cost for seg in segs}.items())
    if len(points) < 2:
        raise PreconditionError("an elbow curve needs at least two distinct changepoint counts")
    return points
