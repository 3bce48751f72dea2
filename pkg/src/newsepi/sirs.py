"""Uncoupled SIRS compartmental dynamics, equilibria and invariance checks.

State is the pair (i, r) of infected and recovered fractions (the
susceptible fraction is 1 - i - r). The dynamics

    di/dt = i * (beta_bar*(1 - i - r) - alpha)
    dr/dt = i*alpha*p_r - r*l_i

keep the simplex {i, r >= 0, i + r <= 1} invariant: an immunized
fraction p_r of recoveries enters r, and immunity is lost at rate l_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import IntegratorConfig, Trajectory, integrate

_SIMPLEX_ATOL = 1e-12  # construction slack for states computed in floating point


@dataclass(frozen=True)
class SirsParams:
    """Epidemic rates: infection beta_bar, recovery alpha, immunized
    fraction p_r of the recovered, immunity-loss rate l_i."""

    beta_bar: float
    alpha: float
    p_r: float
    l_i: float

    def __post_init__(self):
        if not self.beta_bar > 0:
            raise ValueError(f"beta_bar must be positive, got {self.beta_bar}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.p_r < 1.0:
            raise ValueError(f"p_r must lie in (0, 1), got {self.p_r}")
        if not self.l_i > 0:
            raise ValueError(f"l_i must be positive, got {self.l_i}")

    @property
    def c_ir(self) -> float:
        """Interior-equilibrium rescaling constant 1 + alpha*p_r/l_i."""
        return 1.0 + self.alpha * self.p_r / self.l_i


@dataclass(frozen=True)
class EpiState:
    """Infected/recovered fractions, constrained to the simplex."""

    i: float
    r: float

    def __post_init__(self):
        if self.i < -_SIMPLEX_ATOL or self.r < -_SIMPLEX_ATOL:
            raise ValueError(f"fractions must be nonnegative, got ({self.i}, {self.r})")
        if self.i + self.r > 1.0 + _SIMPLEX_ATOL:
            raise ValueError(f"i + r = {self.i + self.r} exceeds 1")


class EquilibriumKind(Enum):
    DISEASE_FREE = "disease_free"
    ENDEMIC = "endemic"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SirsEquilibrium:
    kind: EquilibriumKind
    state: EpiState | None


def sirs_rhs(state: EpiState, params: SirsParams):
    """Derivative (di/dt, dr/dt) of the SIRS dynamics."""
    di = state.i * (params.beta_bar * (1.0 - state.i - state.r) - params.alpha)
    dr = state.i * params.alpha * params.p_r - state.r * params.l_i
    return (di, dr)


def sirs_field(params: SirsParams):
    """Array-valued field for the integrator."""

    def rhs(t, y):
        i, r = y[0], y[1]
        return np.array([
            i * (params.beta_bar * (1.0 - i - r) - params.alpha),
            i * params.alpha * params.p_r - r * params.l_i,
        ])

    return rhs


def sirs_equilibrium(params: SirsParams) -> SirsEquilibrium:
    """Long-run limit of the SIRS dynamics.

    beta_bar < alpha: the disease dies out and the limit is (0, 0).
    beta_bar > alpha: the limit is the endemic point

        i* = (beta_bar - alpha) / (beta_bar * c_ir),
        r* = (alpha*p_r/l_i) * i*.

    The boundary case beta_bar == alpha is reported as degenerate: the
    convergence results cover only the strict inequalities.
    """
    if params.beta_bar < params.alpha:
        return SirsEquilibrium(EquilibriumKind.DISEASE_FREE, EpiState(0.0, 0.0))
    if params.beta_bar == params.alpha:
        return SirsEquilibrium(EquilibriumKind.DEGENERATE, None)
    i_star = (params.beta_bar - params.alpha) / (params.beta_bar * params.c_ir)
    r_star = (params.alpha * params.p_r / params.l_i) * i_star
    return SirsEquilibrium(EquilibriumKind.ENDEMIC, EpiState(i_star, r_star))


def sirs_jacobian(params: SirsParams, state: EpiState) -> np.ndarray:
    """Analytic Jacobian of the SIRS field at any state."""
    b, al = params.beta_bar, params.alpha
    return np.array([
        [b * (1.0 - 2.0 * state.i - state.r) - al, -b * state.i],
        [al * params.p_r, -params.l_i],
    ])


def simulate_sirs(params: SirsParams, init: EpiState,
                  cfg: IntegratorConfig) -> Trajectory:
    """Integrate the uncoupled SIRS dynamics from an initial simplex state."""
    return integrate(sirs_field(params), np.array([init.i, init.r]), cfg)


@dataclass(frozen=True)
class InvarianceReport:
    """Outcome of a simplex-invariance check over a trajectory."""

    ok: bool
    tol: float
    first_violation: int | None = None
    time: float | None = None
    state: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_simplex_invariance(trajectory: Trajectory,
                             tol: float | None = None) -> InvarianceReport:
    """Check that every sample satisfies i >= -tol, r >= -tol, i+r <= 1+tol.

    The default tolerance is 10*dt**2, the slack a fixed-step integrator
    is allowed around the invariant set; states are never clamped.
    """
    if tol is None:
        tol = 10.0 * trajectory.dt ** 2
    i = trajectory.states[:, 0]
    r = trajectory.states[:, 1]
    bad = (i < -tol) | (r < -tol) | (i + r > 1.0 + tol)
    if not bad.any():
        return InvarianceReport(ok=True, tol=tol)
    k = int(np.argmax(bad))
    return InvarianceReport(ok=False, tol=tol, first_violation=k,
                            time=float(trajectory.times[k]),
                            state=(float(i[k]), float(r[k])))
