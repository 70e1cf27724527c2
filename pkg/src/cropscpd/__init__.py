"""Exact changepoint detection for single penalties and whole penalty ranges."""

from .costs import CostModel, TimeSeries, mean_square_error, mean_variance, segment_cost
from .crops import (
    CropsResult,
    PenaltyInterval,
    PmLine,
    beta_intersection,
    crops,
    recycle_precompute,
    unreachable_segmentations,
)
from .exceptions import (
    CropsError,
    DataError,
    IntegrityError,
    NumericalError,
    PreconditionError,
    SolverError,
)
from .metrics import AccuracyReport, correct_m_range, match_changepoints, parameter_mse
from .penalties import PenaltyRule, elbow_curve, penalty_value
from .simulate import SimulationSpec, generate
from .solvers import PartialState, Segmentation, SolverState, backtrack, solve_op, solve_pelt, solve_sn

__version__ = "0.1.0"
