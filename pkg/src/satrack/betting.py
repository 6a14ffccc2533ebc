"""One-dimensional comparator-adaptive online linear optimization with movement cost.

The learner is a wealth/betting scheme on the domain [0, r_bar]: each round it
bets a clipped fraction of its current wealth, pays the incoming linear loss,
a movement penalty proportional to the change of the bet, and a mild
regularizer, then projects the bet onto the domain.  Constraints enter through
a surrogate gradient that zeroes out losses pushing further outside the
domain.  All state is value-semantic: ``step_1d`` returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GradientBoundError, WealthSolveError

# Absolute slack when testing the two sign-branch case conditions of the
# wealth fixed point; at an exact tie both branches coincide.
BRANCH_TOL = 1e-12

# Relative headroom accepted on |g| <= G checks (inner products of unit
# vectors can overshoot by a few ulps).
GRAD_SLACK = 1e-9


@dataclass(frozen=True)
class Hyper1d:
    """Hyperparameters of the 1-d learner.

    lam    weight of the movement cost
    gamma  weight of the |x_t|/sqrt(t) regularizer
    eps    initial wealth (cost budget at the null comparator)
    G      bound on the loss gradients
    r_bar  domain radius; math.inf disables the projection

    The wealth and movement ceilings additionally require eps <= G * r_bar;
    that is a precondition of the audited bounds, not a construction guard
    (cascade levels with large budgets deliberately exceed it).
    """

    lam: float
    gamma: float
    eps: float
    G: float
    r_bar: float = math.inf

    def __post_init__(self) -> None:
        if self.lam < 0.0 or self.gamma < 0.0:
            raise ValueError("lam and gamma must be nonnegative")
        if self.eps <= 0.0 or self.G <= 0.0:
            raise ValueError("eps and G must be positive")
        if self.r_bar <= 0.0:
            raise ValueError("r_bar must be positive")

    @property
    def C(self) -> float:
        return self.G + self.lam + self.gamma

    def budget_ok(self) -> bool:
        """Whether eps <= G * r_bar, the precondition of the ceiling bounds."""
        return not math.isfinite(self.r_bar) or self.eps <= self.G * self.r_bar


@dataclass(frozen=True)
class BettingState:
    """State entering round t.

    wealth     Wel_{t-1}
    beta       fraction bet in round t (beta_1 = 0)
    beta_prev  fraction bet in round t-1 (for drift checks)
    grad_sum   sum of surrogate gradients over rounds < t
    x_tilde    unconstrained prediction for round t
    x          projected prediction for round t

    After an update the new state's ``beta`` is the next round's fraction,
    i.e. what was beta_{t+1} from round t's point of view.
    """

    t: int
    wealth: float
    beta: float
    beta_prev: float
    grad_sum: float
    x_tilde: float
    x: float


def fresh_state(hyper: Hyper1d) -> BettingState:
    return BettingState(
        t=1, wealth=hyper.eps, beta=0.0, beta_prev=0.0,
        grad_sum=0.0, x_tilde=0.0, x=0.0,
    )


def surrogate_grad_1d(g: float, x_tilde: float, x: float) -> float:
    """Constraint-reduction surrogate: g when the loss does not reward leaving
    the domain, 0 otherwise.  Ties take the g branch."""
    return g if g * x_tilde >= g * x else 0.0


def solve_wealth(
    wealth_prev: float,
    g_tilde: float,
    beta_t: float,
    beta_next: float,
    t: int,
    hyper: Hyper1d,
) -> float:
    """Solve Wel = (1 - g~*b - gamma*b/sqrt(t))*Wel_prev - lam*|b*Wel_prev - b'*Wel|.

    Closed-form two-branch resolution: each sign of the absolute value gives a
    linear equation; the branch whose solution satisfies its own case
    condition (within BRANCH_TOL) is the unique fixed point.
    """
    lam = hyper.lam
    a = 1.0 - g_tilde * beta_t - hyper.gamma * beta_t / math.sqrt(t)
    lhs = beta_t * wealth_prev

    # branch A: b*Wel_prev >= b'*Wel
    w_a = (a - lam * beta_t) * wealth_prev / (1.0 - lam * beta_next)
    if lhs >= beta_next * w_a - BRANCH_TOL:
        if w_a <= 0.0:
            raise WealthSolveError(
                f"nonpositive wealth {w_a} at t={t}; precondition violated"
            )
        return w_a

    # branch B: b*Wel_prev < b'*Wel
    w_b = (a + lam * beta_t) * wealth_prev / (1.0 + lam * beta_next)
    if lhs <= beta_next * w_b + BRANCH_TOL:
        if w_b <= 0.0:
            raise WealthSolveError(
                f"nonpositive wealth {w_b} at t={t}; precondition violated"
            )
        return w_b

    raise WealthSolveError(
        f"no self-consistent branch at t={t} "
        f"(wealth_prev={wealth_prev}, g_tilde={g_tilde}, "
        f"beta_t={beta_t}, beta_next={beta_next})"
    )


def step_1d(state: BettingState, g: float, hyper: Hyper1d) -> BettingState:
    """Process the loss gradient of round ``state.t`` and return the state
    entering the next round."""
    if abs(g) > hyper.G * (1.0 + GRAD_SLACK):
        raise GradientBoundError(f"|g|={abs(g)} exceeds G={hyper.G}")

    g_tilde = surrogate_grad_1d(g, state.x_tilde, state.x)
    grad_sum = state.grad_sum + g_tilde

    t = state.t
    C = hyper.C
    beta_hat = -grad_sum / (2.0 * C * C * t)
    beta_cap = 1.0 / (C * math.sqrt(2.0 * t))
    beta_next = min(max(beta_hat, 0.0), beta_cap)

    wealth = solve_wealth(state.wealth, g_tilde, state.beta, beta_next, t, hyper)
    x_tilde = beta_next * wealth  # >= 0: both factors nonnegative
    x = x_tilde if x_tilde <= hyper.r_bar else hyper.r_bar

    return BettingState(
        t=t + 1, wealth=wealth, beta=beta_next, beta_prev=state.beta,
        grad_sum=grad_sum, x_tilde=x_tilde, x=x,
    )
