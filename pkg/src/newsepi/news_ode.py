"""Mean-field ODE of news propagation and its closed-form solutions.

As the tracking step size shrinks, the stochastic iterates of a post
follow a two-regime ODE: during regular propagation

    psi' = M(theta) - 1 - psi,   theta' = M(theta) - theta,

with offspring mean M(theta) = eta*(1 - a*theta), and during replacement

    psi' = -psi,   theta' = -c*theta.

For a supercritical post (eta > 1) the solution settles into a cycle
alternating between the two regimes. This module provides the piecewise
field, the per-regime closed forms, the cycle fixed point, and the
sup-gap statistics between stochastic iterates and the ODE solution.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .branching import (NewsState, OffspringLaw, Regime, classify_regime,
                        sample_offspring, simulate_news, step_tracking)
from .numerics import IntegratorConfig, Trajectory, find_root_bracketed, integrate


class NoCycleError(ValueError):
    """Raised when the news ODE has no saturation-replacement cycle."""


@dataclass(frozen=True)
class LimitCycle:
    """Fixed point of the alternating-regime cycle.

    theta_02: peak total-copy fraction, attained when the regular phase
    ends; psi_01: live fraction when the replacement phase ends; nu_1 and
    nu_2: replacement and regular dwell times. boundary_overlap flags
    parameter sets for which the regular phase is launched from inside
    the closed saturation band (psi_01 <= delta_psi with theta at
    delta_theta and rising), i.e. where the phase-connection order is an
    approximation of the true boundary behaviour.
    """

    theta_02: float
    psi_01: float
    nu_1: float
    nu_2: float
    boundary_overlap: bool = False


def news_rhs(state: NewsState, eta: float, law: OffspringLaw,
             regime: Regime | None = None):
    """Derivative (dpsi, dtheta) of the mean-field news ODE.

    The regime is classified from the state unless given explicitly
    (explicit regimes are used to freeze a field for per-regime
    integration).
    """
    if regime is None:
        regime = classify_regime(state, law)
    if regime is Regime.REPLACEMENT:
        return (-state.psi, -law.c * state.theta)
    m = eta * (1.0 - law.a * state.theta)
    return (m - 1.0 - state.psi, m - state.theta)


def closed_form_replacement(init: NewsState, tau: float,
                            law: OffspringLaw) -> NewsState:
    """Replacement-regime solution: plain exponential decay of both fractions."""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    return NewsState(psi=init.psi * math.exp(-tau),
                     theta=init.theta * math.exp(-law.c * tau))


def closed_form_regular(psi0: float, tau: float, eta: float,
                        law: OffspringLaw) -> NewsState:
    """Regular-regime solution started at theta(0)=delta_theta, psi(0)=psi0.

    theta(tau) = (delta_theta - eta/D) e^{-D tau} + eta/D with D = a*eta+1,
    and psi(tau) = theta(tau) - 1 + (psi0 + 1 - delta_theta) e^{-tau},
    which follows from (psi - theta)' = -1 - (psi - theta).
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    d = law.a * eta + 1.0
    theta = (law.delta_theta - eta / d) * math.exp(-d * tau) + eta / d
    psi = theta - 1.0 + (psi0 + 1.0 - law.delta_theta) * math.exp(-tau)
    return NewsState(psi=psi, theta=theta)


def theta_star(eta: float, a: float) -> float:
    """Limiting peak total-copy fraction per news cycle, eta/(a*eta + 1).

    This is the channel through which a viral post influences the
    epidemic: the higher the interest eta, the closer the peak gets to
    the network ceiling 1/a.
    """
    if eta < 0 or a < 0:
        raise ValueError("eta and a must be nonnegative")
    return eta / (a * eta + 1.0)


def _regular_return_time(psi0: float, eta: float,
                         law: OffspringLaw) -> float:
    """Time for the regular phase from (psi0, delta_theta) to bring psi
    back down to delta_psi (the downward crossing)."""
    d = law.a * eta + 1.0
    dth = law.delta_theta
    b = psi0 + 1.0 - dth
    coef = eta - d * dth  # = d*(eta/d - delta_theta) > 0 for a cycle

    def psi_of(tau):
        return ((dth - eta / d) * math.exp(-d * tau) + eta / d - 1.0
                + b * math.exp(-tau))

    if b >= coef or d <= 1.0:
        raise NoCycleError("live fraction never rises above its threshold")
    tau_pk = -math.log(b / coef) / (d - 1.0)
    if psi_of(tau_pk) <= law.delta_psi:
        raise NoCycleError("live fraction never exceeds delta_psi")
    hi = tau_pk + 1.0
    while psi_of(hi) > law.delta_psi:
        hi = tau_pk + 2.0 * (hi - tau_pk)
    return find_root_bracketed(lambda t: psi_of(t) - law.delta_psi,
                               tau_pk, hi, tol=1e-14 * max(1.0, hi))


def limit_cycle(eta: float, law: OffspringLaw, tol: float = 1e-12,
                max_iter: int = 100) -> LimitCycle:
    """Solve the cycle fixed point by iterated substitution.

    Seeded with the large-dwell approximation theta_02 ~ eta/(a*eta+1);
    iterates theta_02 -> nu_1 -> psi_01 -> nu_2 -> theta_02 until the
    peak fraction changes by less than `tol` (or max_iter sweeps).

    Raises NoCycleError for subcritical posts (eta <= 1), when the
    approximate peak cannot exceed delta_theta, or when the live
    fraction never returns below delta_psi (no saturation, a ~ 0).
    """
    if eta <= 1.0:
        raise NoCycleError(f"subcritical post (eta={eta} <= 1): it vanishes")
    d = law.a * eta + 1.0
    approx = eta / d
    if approx <= law.delta_theta:
        raise NoCycleError(
            f"peak fraction {approx:.4g} cannot exceed delta_theta={law.delta_theta}")
    if approx - 1.0 >= law.delta_psi:
        raise NoCycleError("live fraction saturates above delta_psi; no replacement")

    theta02 = approx
    nu1 = psi01 = nu2 = math.nan
    for _ in range(max_iter):
        nu1 = math.log(theta02 / law.delta_theta) / law.c
        psi01 = law.delta_psi * math.exp(-nu1)
        nu2 = _regular_return_time(psi01, eta, law)
        theta02_new = (law.delta_theta - approx) * math.exp(-d * nu2) + approx
        done = abs(theta02_new - theta02) < tol
        theta02 = theta02_new
        if done:
            break
    # The regular phase enters at (psi_01, delta_theta); if theta rises
    # there (offspring mean above delta_theta), the connection starts
    # inside the closed saturation band.
    overlap = eta * (1.0 - law.a * law.delta_theta) > law.delta_theta
    return LimitCycle(theta_02=theta02, psi_01=psi01, nu_1=nu1, nu_2=nu2,
                      boundary_overlap=overlap)


def cycle_residuals(cycle: LimitCycle, eta: float, law: OffspringLaw):
    """Residuals of the four cycle fixed-point equations at `cycle`."""
    d = law.a * eta + 1.0
    r1 = cycle.theta_02 - ((law.delta_theta - eta / d) * math.exp(-d * cycle.nu_2)
                           + eta / d)
    r2 = cycle.psi_01 - law.delta_psi * math.exp(-cycle.nu_1)
    r3 = cycle.theta_02 * math.exp(-law.c * cycle.nu_1) - law.delta_theta
    end = closed_form_regular(cycle.psi_01, cycle.nu_2, eta, law)
    r4 = end.psi - law.delta_psi
    return np.array([r1, r2, r3, r4])


def simulate_news_ode(eta: float, law: OffspringLaw, init: NewsState,
                      cfg: IntegratorConfig) -> Trajectory:
    """Integrate the switched mean-field ODE with the regime frozen per step."""

    def prepare(t, y):
        regime = classify_regime(NewsState(psi=y[0], theta=y[1]), law)
        if regime is Regime.REPLACEMENT:
            return lambda tt, yy: np.array([-yy[0], -law.c * yy[1]])

        def regular(tt, yy):
            m = eta * (1.0 - law.a * yy[1])
            return np.array([m - 1.0 - yy[0], m - yy[1]])

        return regular

    traj = integrate(None, np.array([init.psi, init.theta]),
                     cfg, prepare_step=prepare)
    regimes = np.where(
        (traj.states[:, 0] >= 0.0) & (traj.states[:, 0] <= law.delta_psi)
        & (traj.states[:, 1] >= law.delta_theta),
        Regime.REPLACEMENT.value, Regime.REGULAR.value)
    traj.labels["regime"] = regimes
    return traj


def cycle_maxima(trajectory: Trajectory, law: OffspringLaw):
    """Peak theta of each completed news cycle in a (psi, theta) trajectory.

    A cycle completes at a regular-to-replacement switch whose regular
    span actually left the saturation band (psi exceeded delta_psi at
    some point); switches produced by boundary chatter near
    theta = delta_theta are not counted as cycles.
    """
    psi = trajectory.states[:, 0]
    theta = trajectory.states[:, 1]
    repl = (psi >= 0.0) & (psi <= law.delta_psi) & (theta >= law.delta_theta)
    maxima = []
    cur_max = theta[0]
    escaped = psi[0] > law.delta_psi
    for k in range(1, len(theta)):
        cur_max = max(cur_max, theta[k])
        if psi[k] > law.delta_psi:
            escaped = True
        if repl[k] and not repl[k - 1] and escaped:
            maxima.append(cur_max)
            cur_max = theta[k]
            escaped = False
    return np.asarray(maxima)


@dataclass
class GapReport:
    """Sup-gap statistics between stochastic iterates and the ODE solution."""

    eps: float
    horizon: float
    sup_gaps: np.ndarray
    threshold: float

    @property
    def mean_sup(self) -> float:
        return float(self.sup_gaps.mean())

    @property
    def exceed_fraction(self) -> float:
        return float(np.mean(self.sup_gaps > self.threshold))


def _seed_sup_gap(args):
    law, eta, eps, n_steps, init, seed, ref, noiseless = args
    if noiseless:
        cur = init
        sup = 0.0
        for k in range(n_steps):
            m = eta * (1.0 - law.a * cur.theta)
            xi = min(max(m, 0.0), float(law.rho))
            cur = step_tracking(cur, xi, eps, law)
            sup = max(sup, abs(cur.psi - ref[k + 1, 0]),
                      abs(cur.theta - ref[k + 1, 1]))
        return sup
    traj = simulate_news(law, eta, eps, n_steps, init, seed)
    gap = np.abs(traj.states - ref)
    return float(gap.max())


def ode_tracking_gap(law: OffspringLaw, eta: float, eps: float,
                     horizon: float, n_seeds: int, seed: int = 0,
                     threshold: float = 0.1,
                     init: NewsState = NewsState(0.0, 0.0),
                     noiseless: bool = False, ode_refine: int = 10,
                     jobs: int = 1) -> GapReport:
    """Per-seed sup_k |iterate_k - ode(eps*k)| over k <= horizon/eps.

    The ODE reference is integrated at dt = eps/ode_refine and
    subsampled onto the iterate grid. With `noiseless=True` the draws
    are replaced by the conditional mean, so the gap reduces to the
    discretization error of the iterate itself. Seeds are derived by
    spawning from `seed`; `jobs` > 1 splits seeds across processes
    without changing the result.
    """
    n_steps = int(round(horizon / eps))
    cfg = IntegratorConfig(dt=eps / ode_refine, max_time=horizon)
    ref = simulate_news_ode(eta, law, init, cfg).states[::ode_refine]
    seeds = [s.generate_state(1)[0] for s in np.random.SeedSequence(seed).spawn(n_seeds)]
    tasks = [(law, eta, eps, n_steps, init, s, ref, noiseless) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            sups = list(pool.map(_seed_sup_gap, tasks, chunksize=max(1, n_seeds // jobs)))
    else:
        sups = [_seed_sup_gap(t) for t in tasks]
    return GapReport(eps=eps, horizon=horizon, sup_gaps=np.asarray(sups),
                     threshold=threshold)
