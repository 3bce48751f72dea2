"""Fixed-step explicit ODE integration and bracketed root finding.

The integrator is deliberately fixed-step: the vector fields in this
package are piecewise continuous (regime switching), and a frozen-regime
step mirrors the behaviour of the underlying discrete processes. Event
localization inside a step is intentionally not attempted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NumericalBlowupError(RuntimeError):
    """Raised when an integration step produces a non-finite state."""

    def __init__(self, time: float, state):
        self.time = float(time)
        self.state = np.asarray(state)
        super().__init__(
            f"non-finite state encountered at t={self.time:.6g}: {self.state}"
        )


class BracketError(ValueError):
    """Raised when a root bracket does not enclose a sign change."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    dt: step size (> 0); method: "rk4" or "euler"; max_time: horizon (>= dt).
    """

    dt: float
    method: str = "rk4"
    max_time: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.max_time > 0:
            raise ValueError(f"max_time must be positive, got {self.max_time}")
        if self.dt > self.max_time:
            raise ValueError(f"dt={self.dt} exceeds max_time={self.max_time}")
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"unknown method {self.method!r} (use 'rk4' or 'euler')")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.max_time / self.dt)))


@dataclass
class Trajectory:
    """Uniformly sampled trajectory: times (n+1,), states (n+1, d).

    Times are computed as t0 + k*dt (never by repeated addition), so the
    grid is exact up to one rounding per sample. `labels` holds optional
    per-sample annotations (regime tags, effective infection rate, ...).
    """

    times: np.ndarray
    states: np.ndarray
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        if len(self.times) < 2:
            raise ValueError("trajectory has a single sample, dt undefined")
        return (self.times[-1] - self.times[0]) / (len(self.times) - 1)


def integrate(rhs, init, cfg: IntegratorConfig, t0: float = 0.0,
              prepare_step=None) -> Trajectory:
    """Integrate y' = rhs(t, y) on a fixed grid.

    rhs maps (t, state array) -> derivative array. If `prepare_step` is
    given (rhs may then be None), it is called once per step with the
    step's initial (t, y) and must return the field used for every stage
    of that step; this is how regime-switching fields are frozen per step.

    Raises NumericalBlowupError (with the offending time) if any step
    produces a non-finite state.
    """
    if rhs is None and prepare_step is None:
        raise ValueError("either rhs or prepare_step is required")
    y = np.asarray(init, dtype=float).copy()
    if not np.all(np.isfinite(y)):
        raise NumericalBlowupError(t0, y)
    n = cfg.n_steps
    dt = cfg.dt
    out = np.empty((n + 1, y.size))
    out[0] = y
    use_rk4 = cfg.method == "rk4"
    for k in range(n):
        t = t0 + k * dt
        f = rhs if prepare_step is None else prepare_step(t, y)
        if use_rk4:
            k1 = f(t, y)
            k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
            k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
            k4 = f(t + dt, y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            y = y + dt * f(t, y)
        if not np.all(np.isfinite(y)):
            raise NumericalBlowupError(t0 + (k + 1) * dt, y)
        out[k + 1] = y
    times = t0 + np.arange(n + 1) * dt
    return Trajectory(times=times, states=out)


def find_root_bracketed(f, lo: float, hi: float, tol: float) -> float:
    """Bisection root of f on [lo, hi]; requires f(lo)*f(hi) <= 0.

    Returns the bracket midpoint once the interval width is <= tol.
    """
    if not lo < hi:
        raise BracketError(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise BracketError(
            f"f has the same sign at both ends: f({lo})={f_lo}, f({hi})={f_hi}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # interval at floating-point resolution
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def finite_difference_jacobian(f, x, rel_step: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of f at x with relative step size."""
    x = np.asarray(x, dtype=float)
    fx = np.asarray(f(x), dtype=float)
    jac = np.empty((fx.size, x.size))
    for j in range(x.size):
        h = rel_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * h)
    return jac
