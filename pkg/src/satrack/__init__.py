"""Comparator-adaptive online learning with movement cost, a strongly
adaptive memory learner built on top of it, and their reduction to tracking
control of time-varying linear systems — plus a harness that numerically
audits every stated bound."""

from .ball import BallHyper, BallLearnerState, fresh_ball, predict_ball, step_ball
from .betting import (
    BettingState,
    Hyper1d,
    fresh_state,
    solve_wealth,
    step_1d,
    surrogate_grad_1d,
)
from .control import (
    ControlConstants,
    LossOracle,
    TrackingController,
    ideal_affine,
    ideal_loss_value_and_grad,
    infer_disturbance,
    norm_tracking_loss,
    theory_memory,
)
from .errors import (
    ActionBoundError,
    AuditViolation,
    GradientBoundError,
    HorizonError,
    SatrackError,
    WealthSolveError,
)
from .meta import OcomConfig, OcomMeta, constrained_surrogate, project_ball
from .simenv import ExperimentConfig, LtvPlant, build_plant, make_experiment
from .subroutine import (
    GcSubroutine,
    feed,
    gc_interval,
    gc_levels_starting_at,
    k_max,
    make_subroutine_1d,
    make_subroutine_ball,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
