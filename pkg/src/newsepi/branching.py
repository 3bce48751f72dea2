"""Stochastic propagation of a single news item on a social network.

A post spreads as a branching process whose offspring mean shrinks as the
total number of circulated copies grows (readers rarely forward a post
twice). Raw live/total copy counts are tracked through wake-up epochs;
their normalized fractions follow a constant-step-size tracking iterate
with two regimes: regular propagation, and replacement once the post
saturates (live fraction below delta_psi while the total fraction is
still above delta_theta) and a fresh post takes over.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import Trajectory


class Regime(Enum):
    REGULAR = "regular"
    REPLACEMENT = "replacement"


@dataclass(frozen=True)
class RawCounts:
    """Integer live/total copy counts of one post at a wake-up epoch."""

    live: int
    total: int
    epoch: int = 0

    def __post_init__(self):
        if self.live < 0 or self.total < 0 or self.epoch < 0:
            raise ValueError("counts and epoch must be nonnegative")
        if self.total < self.live:
            raise ValueError(f"total ({self.total}) < live ({self.live})")


@dataclass(frozen=True)
class NewsState:
    """Normalized live-copy fraction psi and total-copy fraction theta."""

    psi: float
    theta: float


@dataclass(frozen=True)
class OffspringLaw:
    """Parameters of the offspring distribution and regime thresholds.

    eta_bar, p, q define the infection-dependent attractiveness
    eta(i) = eta_bar * (p*i + q); `a` is the network-specific saturation
    conversion factor in the offspring mean eta*(1 - a*theta); rho is the
    almost-sure offspring bound; c is the replacement decay rate applied
    to theta while a saturated post is swapped out; delta_psi/delta_theta
    are the saturation thresholds.

    eta(i) may be negative for q < 0 (it is clamped where sampling needs
    it); the positive part must stay within the offspring bound rho on
    i in [0, 1].
    """

    eta_bar: float
    p: float
    q: float
    a: float
    rho: int
    c: float
    delta_psi: float
    delta_theta: float

    def __post_init__(self):
        if not self.eta_bar > 0:
            raise ValueError(f"eta_bar must be positive, got {self.eta_bar}")
        if self.a < 0:
            raise ValueError(f"a must be nonnegative, got {self.a}")
        if int(self.rho) != self.rho or self.rho < 1:
            raise ValueError(f"rho must be an integer >= 1, got {self.rho}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.delta_psi > 0 or not self.delta_theta > 0:
            raise ValueError("delta_psi and delta_theta must be positive")
        # eta(i) is linear in i, so its maximum on [0, 1] is at an endpoint.
        eta_max = max(self.eta_at(0.0), self.eta_at(1.0), 0.0)
        if eta_max > self.rho:
            raise ValueError(
                f"offspring mean bound violated: max eta(i)={eta_max} > rho={self.rho}"
            )

    def eta_at(self, i: float) -> float:
        """Attractiveness at infection level i (may be negative for q < 0)."""
        return self.eta_bar * (self.p * i + self.q)


def mean_offspring(theta: float, eta: float, law: OffspringLaw) -> float:
    """Expected effective forwards per parent, eta*(1 - a*theta).

    May be negative for theta > 1/a; sampling clamps, the mean-field
    formulas keep the raw value.
    """
    return eta * (1.0 - law.a * theta)


def sample_offspring(theta: float, eta: float, law: OffspringLaw, rng) -> int:
    """Draw the number of effective forwards for one wake-up.

    Distributed Binomial(rho, m/rho) where m = clip(mean_offspring, 0, rho),
    so the draw is bounded by rho and has mean m.
    """
    m = mean_offspring(theta, eta, law)
    m = min(max(m, 0.0), float(law.rho))
    return int(rng.binomial(law.rho, m / law.rho))


def classify_regime(state: NewsState, law: OffspringLaw) -> Regime:
    """Replacement iff 0 <= psi <= delta_psi and theta >= delta_theta.

    The saturation set is closed: boundary points count as replacement.
    """
    if 0.0 <= state.psi <= law.delta_psi and state.theta >= law.delta_theta:
        return Regime.REPLACEMENT
    return Regime.REGULAR


def step_raw(state: RawCounts, xi: int) -> RawCounts:
    """One wake-up epoch on raw counts: the parent copy dies, xi are born."""
    if state.live < 1:
        raise ValueError("extinct post (live=0) cannot step")
    if xi < 0:
        raise ValueError(f"offspring count must be nonnegative, got {xi}")
    return RawCounts(live=state.live - 1 + xi, total=state.total + xi,
                     epoch=state.epoch + 1)


def step_tracking(state: NewsState, xi: int, eps: float,
                  law: OffspringLaw) -> NewsState:
    """One constant-step tracking update of (psi, theta).

    The regime indicator is evaluated on the input state. Regular:
    psi += eps*(xi - 1 - psi), theta += eps*(xi - theta). Replacement
    (fictitious swap-out iterates): psi += eps*(-psi),
    theta += eps*(-c*theta), and xi is ignored.
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    if classify_regime(state, law) is Regime.REGULAR:
        return NewsState(psi=state.psi + eps * (xi - 1.0 - state.psi),
                         theta=state.theta + eps * (xi - state.theta))
    return NewsState(psi=state.psi + eps * (-state.psi),
                     theta=state.theta + eps * (-law.c * state.theta))


def simulate_news(law: OffspringLaw, eta: float, eps: float, n_steps: int,
                  init: NewsState, seed: int) -> Trajectory:
    """Simulate the tracking iterates of one post for n_steps updates.

    Returns a trajectory of n_steps+1 samples (including the initial
    state) on the grid tau_k = eps*k, with a per-sample "regime" label.
    Deterministic for a fixed (law, eta, eps, init, seed).
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    rng = np.random.default_rng(seed)
    states = np.empty((n_steps + 1, 2))
    regimes = np.empty(n_steps + 1, dtype=object)
    cur = init
    states[0] = cur.psi, cur.theta
    regimes[0] = classify_regime(cur, law).value
    for k in range(n_steps):
        xi = sample_offspring(cur.theta, eta, law, rng)
        cur = step_tracking(cur, xi, eps, law)
        states[k + 1] = cur.psi, cur.theta
        regimes[k + 1] = classify_regime(cur, law).value
    times = eps * np.arange(n_steps + 1)
    return Trajectory(times=times, states=states,
                      labels={"regime": np.asarray(regimes)})
