"""Integrative two-timescale system coupling news propagation and SIRS.

The epidemic's infection rate is modulated by the influence of viral
posts: beta(i) = beta_bar + w(i) * eta(i)/(a*eta(i) + 1), where the
second factor is the peak total-copy fraction a viral post reaches per
news cycle. Coupling scenarios:

  sirs      - no coupling, beta(i) = beta_bar
  i3n       - interest in news rises with infection: eta(i) linear in i,
              constant influence weight w_bar
  ibin      - constant interest (eta = 1, a = 0), influence weight
              proportional to infection: w(i) = u*i
  combined  - both effects: weight w_bar + u*i with linear eta(i)

The module provides the consolidated vector field, closed-form and
numerical equilibrium analysis with asymptotic-regime classification
(GPA / CoP / PCo), ODE simulation, cycle detection, and an explicit
two-timescale hybrid simulator in which stochastic news iterates run
many fast steps per slow epidemic step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .branching import NewsState, OffspringLaw, Regime, classify_regime, \
    sample_offspring, step_tracking
from .news_ode import theta_star
from .numerics import IntegratorConfig, Trajectory, find_root_bracketed, \
    finite_difference_jacobian, integrate
from .sirs import EpiState, SirsParams

_DEFAULT_IBIN_LAW = OffspringLaw(eta_bar=1.0, p=0.0, q=1.0, a=0.0, rho=10,
                                 c=1.0, delta_psi=0.05, delta_theta=0.1)


class Scenario(Enum):
    SIRS_ONLY = "sirs"
    I3N = "i3n"
    IBIN = "ibin"
    COMBINED = "combined"


@dataclass(frozen=True)
class ScenarioSpec:
    """Coupling scenario with its influence parameters.

    w_bar is the constant integrated influence of the circulating viral
    posts (positive when misinformation dominates, negative for
    predominantly authentic content); u is the slope of the linear
    behavioural influence w(i) = u*i. The news law supplies eta(i) and
    the saturation factor a.
    """

    kind: Scenario
    w_bar: float = 0.0
    u: float = 0.0
    news: OffspringLaw | None = None

    def __post_init__(self):
        if self.kind is Scenario.SIRS_ONLY:
            if self.w_bar != 0.0 or self.u != 0.0:
                raise ValueError("uncoupled scenario requires w_bar = u = 0")
        if self.kind is Scenario.I3N and self.u != 0.0:
            raise ValueError("interest-only scenario has no behavioural slope u")
        if self.kind is Scenario.IBIN:
            if self.w_bar != 0.0:
                raise ValueError("behaviour-only scenario has no constant weight w_bar")
            if self.news is not None and self.news.a != 0.0:
                raise ValueError("behaviour-only scenario requires a news law with a = 0")
            if self.news is None:
                object.__setattr__(self, "news", _DEFAULT_IBIN_LAW)
        if self.kind in (Scenario.I3N, Scenario.COMBINED) and self.news is None:
            raise ValueError(f"{self.kind.value} scenario requires a news law")

    @classmethod
    def sirs_only(cls) -> "ScenarioSpec":
        return cls(kind=Scenario.SIRS_ONLY)

    @classmethod
    def i3n(cls, w_bar: float, news: OffspringLaw) -> "ScenarioSpec":
        return cls(kind=Scenario.I3N, w_bar=w_bar, news=news)

    @classmethod
    def ibin(cls, u: float, news: OffspringLaw | None = None) -> "ScenarioSpec":
        return cls(kind=Scenario.IBIN, u=u, news=news)

    @classmethod
    def combined(cls, w_bar: float, u: float, news: OffspringLaw) -> "ScenarioSpec":
        return cls(kind=Scenario.COMBINED, w_bar=w_bar, u=u, news=news)

    def validate_for_analysis(self):
        """Equilibrium analysis needs eta(i) >= 0 on [0, 1], hence p, q >= 0.

        (The hybrid simulator accepts negative q and clamps eta at zero;
        the closed-form analysis does not.)
        """
        if self.kind in (Scenario.I3N, Scenario.COMBINED):
            if self.news.p < 0 or self.news.q < 0:
                raise ValueError(
                    f"analysis requires p, q >= 0, got p={self.news.p}, q={self.news.q}")


def eta_of_i(i: float, spec: ScenarioSpec) -> float:
    """Attractiveness of epidemic-related posts at infection level i."""
    if spec.kind is Scenario.SIRS_ONLY:
        return 0.0
    if spec.kind is Scenario.IBIN:
        return 1.0
    return spec.news.eta_at(i)


def influence_weight(i: float, spec: ScenarioSpec) -> float:
    """Integrated influence w(i) of the viral posts at infection level i."""
    if spec.kind is Scenario.SIRS_ONLY:
        return 0.0
    return spec.w_bar + spec.u * i


def beta_of_i(i: float, beta_bar: float, spec: ScenarioSpec,
              w_override: float | None = None) -> float:
    """Effective infection rate beta(i) = beta_bar + w(i)*eta/(a*eta + 1).

    `w_override` replaces the constant part w_bar (used for
    piecewise-constant influence schedules).
    """
    if spec.kind is Scenario.SIRS_ONLY:
        return beta_bar
    w = (spec.w_bar if w_override is None else w_override) + spec.u * i
    eta = eta_of_i(i, spec)
    a = spec.news.a
    return beta_bar + w * (eta / (a * eta + 1.0))


def coupled_rhs(state: EpiState, params: SirsParams, spec: ScenarioSpec):
    """Derivative (di/dt, dr/dt) of the consolidated dynamics."""
    beta = beta_of_i(state.i, params.beta_bar, spec)
    di = state.i * (beta * (1.0 - state.i - state.r) - params.alpha)
    dr = state.i * params.alpha * params.p_r - state.r * params.l_i
    return (di, dr)


def coupled_field(params: SirsParams, spec: ScenarioSpec,
                  w_override: float | None = None):
    """Array-valued consolidated field for the integrator."""

    def rhs(t, y):
        i, r = y[0], y[1]
        beta = beta_of_i(i, params.beta_bar, spec, w_override=w_override)
        return np.array([
            i * (beta * (1.0 - i - r) - params.alpha),
            i * params.alpha * params.p_r - r * params.l_i,
        ])

    return rhs


class RegimeClass(Enum):
    GPA = "GPA"          # every start settles to a point equilibrium
    COP = "CoP"          # point limits (interior one attracting) or closed orbit
    PCO = "PCo"          # interior point unstable: predominantly closed orbits
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class EquilibriumReport:
    """Asymptotic classification of the consolidated dynamics."""

    disease_free_is_la: bool
    interior: EpiState | None
    regime: RegimeClass
    jacobian_eigen_realparts: tuple
    conditions: dict = field(default_factory=dict)


def _stable_quadratic_roots(a: float, b: float, c: float):
    """Real roots of a*x^2 + b*x + c, computed without cancellation."""
    if a == 0.0:
        if b == 0.0:
            return []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    s = math.sqrt(disc)
    if b >= 0.0:
        qq = -0.5 * (b + s)
    else:
        qq = -0.5 * (b - s)
    roots = []
    roots.append(qq / a)
    if qq != 0.0:
        roots.append(c / qq)
    else:
        roots.append(0.0)
    return sorted(set(roots))


def _interior_jacobian(params: SirsParams, spec: ScenarioSpec,
                       state: EpiState) -> np.ndarray:
    """Analytic Jacobian of the consolidated field at an equilibrium."""
    i, r = state.i, state.r
    beta = beta_of_i(i, params.beta_bar, spec)
    eta = eta_of_i(i, spec)
    if spec.kind is Scenario.SIRS_ONLY:
        dbeta = 0.0
    elif spec.kind is Scenario.IBIN:
        dbeta = spec.u
    else:
        a = spec.news.a
        g = eta / (a * eta + 1.0)
        dg = spec.news.eta_bar * spec.news.p / (a * eta + 1.0) ** 2
        dbeta = (spec.w_bar + spec.u * i) * dg + spec.u * g
    # At an equilibrium beta(i)(1-i-r) = alpha, so the i-partial reduces to:
    j11 = i * (dbeta * (1.0 - i - r) - beta)
    return np.array([[j11, -i * beta],
                     [params.alpha * params.p_r, -params.l_i]])


def _eig_realparts(jac: np.ndarray) -> tuple:
    re = sorted(np.linalg.eigvals(jac).real, reverse=True)
    return (float(re[0]), float(re[1]))


def _check_equilibrium(state: EpiState, params: SirsParams, spec: ScenarioSpec):
    res = coupled_rhs(state, params, spec)
    scale = max(1.0, params.beta_bar, abs(spec.w_bar) + abs(spec.u))
    if max(abs(res[0]), abs(res[1])) > 1e-9 * scale:
        raise RuntimeError(f"computed equilibrium {state} has residual {res}")


def analyze_sirs_only(params: SirsParams) -> EquilibriumReport:
    """Classification of the uncoupled dynamics: a global point attractor."""
    bb, al = params.beta_bar, params.alpha
    conditions = {"beta0": bb, "alpha": al}
    if bb == al:
        return EquilibriumReport(False, None, RegimeClass.DEGENERATE,
                                 (0.0, -params.l_i), conditions)
    if bb < al:
        jac = np.array([[bb - al, 0.0], [al * params.p_r, -params.l_i]])
        return EquilibriumReport(True, None, RegimeClass.GPA,
                                 _eig_realparts(jac), conditions)
    i_star = (bb - al) / (bb * params.c_ir)
    interior = EpiState(i_star, (al * params.p_r / params.l_i) * i_star)
    spec = ScenarioSpec.sirs_only()
    _check_equilibrium(interior, params, spec)
    jac = _interior_jacobian(params, spec, interior)
    return EquilibriumReport(False, interior, RegimeClass.GPA,
                             _eig_realparts(jac), conditions)


def analyze_i3n(params: SirsParams, spec: ScenarioSpec) -> EquilibriumReport:
    """Equilibria of the rising-interest scenario.

    With eta(i) = eta_bar*(p*i + q) and constant weight w_bar, interior
    equilibria are roots of the quadratic c_a*i^2 + c_b*i + c_c obtained
    by clearing the denominator of beta(i)*(1 - c_ir*i) - alpha. The
    classification hinges on beta0 = beta(0): below alpha the
    disease-free state attracts locally (globally when w_bar < 0 or
    beta_bar*a + w_bar - alpha*a < 0); above alpha the unique interior
    root in (0, 1/c_ir] is a local attractor and the regime is CoP.
    """
    if spec.kind is not Scenario.I3N:
        raise ValueError(f"expected an i3n spec, got {spec.kind.value}")
    spec.validate_for_analysis()
    bb, al, cir = params.beta_bar, params.alpha, params.c_ir
    eb, p, q, a = spec.news.eta_bar, spec.news.p, spec.news.q, spec.news.a
    w = spec.w_bar
    eta0 = eb * q
    beta0 = bb + w * (eta0 / (a * eta0 + 1.0))
    c_a = -cir * (bb * a + w) * eb * p
    c_b = (bb * a + w - al * a) * eb * p - cir * (bb * a + w) * eb * q - cir * bb
    c_c = (bb * a + w - al * a) * eb * q + bb - al
    conditions = {"beta0": beta0, "alpha": al, "c_a": c_a, "c_b": c_b,
                  "c_c": c_c, "discriminant": c_b * c_b - 4.0 * c_a * c_c}

    if beta0 == al:
        return EquilibriumReport(False, None, RegimeClass.DEGENERATE,
                                 (0.0, -params.l_i), conditions)

    roots = [x for x in _stable_quadratic_roots(c_a, c_b, c_c)
             if 0.0 < x <= 1.0 / cir]
    df_jac = np.array([[beta0 - al, 0.0], [al * params.p_r, -params.l_i]])

    if beta0 < al:
        gpa_certified = (w < 0.0) or (bb * a + w - al * a < 0.0)
        conditions["gpa_certified"] = gpa_certified
        if gpa_certified or not roots:
            return EquilibriumReport(True, None, RegimeClass.GPA,
                                     _eig_realparts(df_jac), conditions)
        # Uncertified corner: interior roots coexist with the locally
        # attracting disease-free state; report the attracting one.
        interior, jac = _pick_stable_root(roots, params, spec)
        return EquilibriumReport(True, interior, RegimeClass.COP,
                                 _eig_realparts(jac), conditions)

    if len(roots) != 1:
        raise RuntimeError(
            f"expected one interior root in (0, {1.0 / cir:.6g}], found {roots}")
    i_star = roots[0]
    interior = EpiState(i_star, (al * params.p_r / params.l_i) * i_star)
    _check_equilibrium(interior, params, spec)
    jac = _interior_jacobian(params, spec, interior)
    return EquilibriumReport(False, interior, RegimeClass.COP,
                             _eig_realparts(jac), conditions)


def ibin_interior_infection(params: SirsParams, u: float) -> float:
    """Interior equilibrium infection level of the linear-influence model.

    Root of (beta_bar + u*i)*(1 - c_ir*i) - alpha in (0, 1/c_ir],
    written in a form that is exact in the u -> 0 limit (where it
    reduces to the uncoupled equilibrium (beta_bar - alpha)/(beta_bar*c_ir)).
    """
    bb, al, cir = params.beta_bar, params.alpha, params.c_ir
    disc = (bb * cir - u) ** 2 + 4.0 * u * cir * (bb - al)
    return 2.0 * (bb - al) / ((bb * cir - u) + math.sqrt(disc))


def analyze_ibin(params: SirsParams, spec: ScenarioSpec) -> EquilibriumReport:
    """Equilibria of the linear behavioural-influence scenario.

    beta(i) = beta_bar + u*i. For beta_bar > alpha the interior point
    exists; it attracts (CoP) when u*(1 - i* - c_ir*i*) <= beta_bar +
    l_i/i*, and repels (PCo, sustained reinfection waves around it)
    otherwise. The report also carries the sufficient no-cycle bound
    max(u/2, alpha) < beta_bar < alpha + l_i.
    """
    if spec.kind is not Scenario.IBIN:
        raise ValueError(f"expected an ibin spec, got {spec.kind.value}")
    bb, al, cir, li = params.beta_bar, params.alpha, params.c_ir, params.l_i
    u = spec.u
    conditions = {"beta0": bb, "alpha": al,
                  "bendixson_no_cycle": max(u / 2.0, al) < bb < al + li}

    if bb == al:
        return EquilibriumReport(False, None, RegimeClass.DEGENERATE,
                                 (0.0, -li), conditions)

    df_jac = np.array([[bb - al, 0.0], [al * params.p_r, -li]])
    if bb < al:
        gpa_certified = u < al * cir
        conditions["gpa_certified"] = gpa_certified
        roots = [x for x in _stable_quadratic_roots(-u * cir, u - bb * cir, bb - al)
                 if 0.0 < x <= 1.0 / cir]
        if gpa_certified or not roots:
            return EquilibriumReport(True, None, RegimeClass.GPA,
                                     _eig_realparts(df_jac), conditions)
        interior, jac = _pick_stable_root(roots, params, spec)
        return EquilibriumReport(True, interior, RegimeClass.COP,
                                 _eig_realparts(jac), conditions)

    i_star = ibin_interior_infection(params, u)
    interior = EpiState(i_star, (al * params.p_r / li) * i_star)
    _check_equilibrium(interior, params, spec)
    lhs = u * (1.0 - i_star - cir * i_star)
    rhs = bb + li / i_star
    conditions["instability_lhs"] = lhs
    conditions["instability_rhs"] = rhs
    regime = RegimeClass.COP if lhs <= rhs else RegimeClass.PCO
    jac = _interior_jacobian(params, spec, interior)
    return EquilibriumReport(False, interior, regime,
                             _eig_realparts(jac), conditions)


def _pick_stable_root(roots, params: SirsParams, spec: ScenarioSpec):
    candidates = []
    for x in roots:
        st = EpiState(x, (params.alpha * params.p_r / params.l_i) * x)
        jac = _interior_jacobian(params, spec, st)
        candidates.append((st, jac, max(np.linalg.eigvals(jac).real)))
    stable = [c for c in candidates if c[2] < 0.0]
    chosen = stable[0] if stable else candidates[-1]
    return chosen[0], chosen[1]


def analyze_combined(params: SirsParams, spec: ScenarioSpec) -> EquilibriumReport:
    """Numerical equilibrium analysis of the combined scenario.

    Interior equilibria are located as sign changes of
    g(i) = beta(i)*(1 - c_ir*i) - alpha on (0, 1/c_ir) (grid scan plus
    bisection); stability comes from a finite-difference Jacobian
    (relative step 1e-7), and the regime label follows the sign of its
    trace at the interior point (positive trace: source, hence PCo).
    """
    if spec.kind is not Scenario.COMBINED:
        raise ValueError(f"expected a combined spec, got {spec.kind.value}")
    spec.validate_for_analysis()
    bb, al, cir, li = params.beta_bar, params.alpha, params.c_ir, params.l_i
    beta0 = beta_of_i(0.0, bb, spec)
    conditions = {"beta0": beta0, "alpha": al}

    if beta0 == al:
        return EquilibriumReport(False, None, RegimeClass.DEGENERATE,
                                 (0.0, -li), conditions)

    def g(i):
        return beta_of_i(i, bb, spec) * (1.0 - cir * i) - al

    hi = 1.0 / cir
    grid = np.linspace(0.0, hi, 4097)
    vals = np.array([g(x) for x in grid])
    roots = []
    for k in range(len(grid) - 1):
        if vals[k] == 0.0 and grid[k] > 0.0:
            roots.append(grid[k])
        elif vals[k] * vals[k + 1] < 0.0:
            roots.append(find_root_bracketed(g, grid[k], grid[k + 1],
                                             tol=1e-15 * hi))
    roots = [x for x in roots if 0.0 < x <= hi]
    conditions["n_interior_roots"] = len(roots)

    df_jac = np.array([[beta0 - al, 0.0], [al * params.p_r, -li]])
    disease_free_la = beta0 < al
    if not roots:
        return EquilibriumReport(disease_free_la, None, RegimeClass.GPA,
                                 _eig_realparts(df_jac), conditions)

    field = coupled_field(params, spec)
    reports = []
    for x in roots:
        st = np.array([x, (al * params.p_r / li) * x])
        jac = finite_difference_jacobian(lambda y: field(0.0, y), st,
                                         rel_step=1e-7)
        reports.append((x, st, jac, float(np.trace(jac)),
                        max(np.linalg.eigvals(jac).real)))
    stable = [rp for rp in reports if rp[4] < 0.0]
    x, st, jac, trace, _ = stable[0] if stable else reports[-1]
    conditions["interior_residual"] = abs(g(x))
    conditions["jacobian_trace"] = trace
    interior = EpiState(st[0], st[1])
    _check_equilibrium(interior, params, spec)
    regime = RegimeClass.COP if trace < 0.0 else RegimeClass.PCO
    return EquilibriumReport(disease_free_la, interior, regime,
                             _eig_realparts(jac), conditions)


def analyze(params: SirsParams, spec: ScenarioSpec) -> EquilibriumReport:
    """Dispatch to the scenario-specific equilibrium analysis."""
    if spec.kind is Scenario.SIRS_ONLY:
        return analyze_sirs_only(params)
    if spec.kind is Scenario.I3N:
        return analyze_i3n(params, spec)
    if spec.kind is Scenario.IBIN:
        return analyze_ibin(params, spec)
    return analyze_combined(params, spec)


def simulate_coupled(params: SirsParams, spec: ScenarioSpec, init: EpiState,
                     cfg: IntegratorConfig) -> Trajectory:
    """Integrate the consolidated dynamics; samples carry beta(i(t))."""
    traj = integrate(coupled_field(params, spec),
                     np.array([init.i, init.r]), cfg)
    traj.labels["beta"] = np.array(
        [beta_of_i(i, params.beta_bar, spec) for i in traj.states[:, 0]])
    return traj


@dataclass(frozen=True)
class CycleReport:
    """Outcome of periodicity detection on an epidemic trajectory."""

    is_periodic: bool
    period: float
    amplitude_i: float
    n_cycles_observed: int
    status: str  # "periodic" | "converged" | "undecided"


def detect_cycle(trajectory: Trajectory, window_fraction: float = 0.5,
                 rel_tol: float = 0.02, min_cycles: int = 3,
                 deriv_tol: float = 1e-8) -> CycleReport:
    """Detect sustained oscillation of the infected fraction.

    Upward crossings of i(t) through the median of its trailing window
    mark cycle boundaries; the trajectory is periodic when at least
    `min_cycles` successive inter-crossing intervals and successive
    peak-to-trough amplitudes each agree within `rel_tol`. A trajectory
    whose terminal finite-difference derivative norm is below
    `deriv_tol` is reported as converged; anything else is undecided.
    """
    if len(trajectory) < 1000:
        raise ValueError(f"need >= 1000 samples, got {len(trajectory)}")
    dt = trajectory.dt
    states = trajectory.states
    term_deriv = float(np.abs(states[-1] - states[-2]).max() / dt)
    if term_deriv < deriv_tol:
        return CycleReport(False, 0.0, 0.0, 0, "converged")

    start = int(len(trajectory) * (1.0 - window_fraction))
    i_sig = states[start:, 0]
    times = trajectory.times[start:]
    level = float(np.median(i_sig))
    below = i_sig[:-1] < level
    above = i_sig[1:] >= level
    ks = np.flatnonzero(below & above)
    if len(ks) < min_cycles + 1:
        return CycleReport(False, 0.0, 0.0, max(0, len(ks) - 1), "undecided")
    frac = (level - i_sig[ks]) / (i_sig[ks + 1] - i_sig[ks])
    crossings = times[ks] + frac * dt
    intervals = np.diff(crossings)
    amplitudes = np.array([i_sig[a:b + 1].max() - i_sig[a:b + 1].min()
                           for a, b in zip(ks[:-1], ks[1:])])
    last_int = intervals[-min_cycles:]
    last_amp = amplitudes[-min_cycles:]
    periodic = (last_int.max() / last_int.min() - 1.0 <= rel_tol
                and last_amp.min() > 0.0
                and last_amp.max() / last_amp.min() - 1.0 <= rel_tol)
    if periodic:
        return CycleReport(True, float(last_int.mean()), float(last_amp[-1]),
                           int(len(intervals)), "periodic")
    return CycleReport(False, 0.0, 0.0, int(len(intervals)), "undecided")


@dataclass
class HybridResult:
    """Two-timescale run: slow epidemic samples plus news-side summaries.

    The epidemic trajectory carries per-sample labels: "beta" (rate used
    to advance into that sample), "theta_influence" (peak total-copy
    fraction driving that beta) and "theta_window_max" (largest theta
    observed among the fast iterates of the window ending at the
    sample). Index 0 holds the pre-step fallback values.
    """

    epidemic: Trajectory
    news_final: NewsState
    n_cycles_completed: int


def simulate_hybrid(params: SirsParams, spec: ScenarioSpec, init: EpiState,
                    fast_dt: float, slow_dt: float, horizon: float,
                    seed: int, eps: float = 0.01,
                    news_init: NewsState = NewsState(0.0, 0.0)) -> HybridResult:
    """Explicit two-timescale simulation.

    Between epidemic updates, slow_dt/fast_dt stochastic news iterates
    (tracking step size `eps`) run with attractiveness eta(i) clamped at
    zero, evaluated at the current infection level. At each slow step
    the infection rate is set to

        beta = beta_bar + w(i) * max theta over the last completed news
               cycle (theta_star(eta(i)) before any cycle completes)

    and (i, r) advances by one explicit Euler step. A news cycle
    completes at a regular-to-replacement switch whose regular span rose
    above delta_psi (boundary chatter is not counted).
    """
    if not fast_dt < slow_dt:
        raise ValueError("fast_dt must be smaller than slow_dt")
    ratio = slow_dt / fast_dt
    n_inner = int(round(ratio))
    if abs(ratio - n_inner) > 1e-9 * ratio or n_inner < 1:
        raise ValueError(f"slow_dt/fast_dt = {ratio} is not a positive integer")
    law = spec.news if spec.news is not None else _DEFAULT_IBIN_LAW
    n_slow = int(round(horizon / slow_dt))
    rng = np.random.default_rng(seed)

    i_cur, r_cur = init.i, init.r
    news = news_init
    in_replacement = classify_regime(news, law) is Regime.REPLACEMENT
    escaped = news.psi > law.delta_psi
    cur_max = news.theta
    last_cycle_max = None
    n_cycles = 0

    states = np.empty((n_slow + 1, 2))
    betas = np.empty(n_slow + 1)
    influences = np.empty(n_slow + 1)
    window_maxes = np.empty(n_slow + 1)
    states[0] = i_cur, r_cur
    eta0 = max(0.0, eta_of_i(i_cur, spec))
    influences[0] = theta_star(eta0, law.a)
    betas[0] = params.beta_bar + influence_weight(i_cur, spec) * influences[0]
    window_maxes[0] = news.theta

    for k in range(n_slow):
        eta = max(0.0, eta_of_i(i_cur, spec))
        window_max = news.theta
        for _ in range(n_inner):
            xi = sample_offspring(news.theta, eta, law, rng)
            news = step_tracking(news, xi, eps, law)
            window_max = max(window_max, news.theta)
            cur_max = max(cur_max, news.theta)
            if news.psi > law.delta_psi:
                escaped = True
            repl = classify_regime(news, law) is Regime.REPLACEMENT
            if repl and not in_replacement and escaped:
                last_cycle_max = cur_max
                cur_max = news.theta
                escaped = False
                n_cycles += 1
            in_replacement = repl

        influence = last_cycle_max if last_cycle_max is not None \
            else theta_star(eta, law.a)
        beta = params.beta_bar + influence_weight(i_cur, spec) * influence
        di = i_cur * (beta * (1.0 - i_cur - r_cur) - params.alpha)
        dr = i_cur * params.alpha * params.p_r - r_cur * params.l_i
        i_cur = i_cur + slow_dt * di
        r_cur = r_cur + slow_dt * dr
        states[k + 1] = i_cur, r_cur
        betas[k + 1] = beta
        influences[k + 1] = influence
        window_maxes[k + 1] = window_max

    times = slow_dt * np.arange(n_slow + 1)
    traj = Trajectory(times=times, states=states,
                      labels={"beta": betas, "theta_influence": influences,
                              "theta_window_max": window_maxes})
    return HybridResult(epidemic=traj, news_final=news,
                        n_cycles_completed=n_cycles)
