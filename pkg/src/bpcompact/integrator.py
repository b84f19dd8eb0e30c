"""Forward Euler and SSPRK(3,3) time stepping for the vorticity equation.

Each forward-Euler stage solves the Poisson problem for the stream
function, rebuilds the divergence-free velocity, advances the weighted
average (optionally with TVB-limited fluxes), recovers point values and
applies the bound-preserving limiter.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .compact import W1, W2, solve_along
from .convection import TvbParams, convective_update, ns_averaged_update, recover_point_values
from .elliptic import ConfigurationError, solve_poisson_periodic
from .grid import Field2D
from .limiter import BpStats, bp_limit_2d_euler, bp_limit_2d_ns
from .velocity import VelocityPair, divergence_residual, reconstruct_velocity

EQUATIONS = ("euler", "navier_stokes")

# largest CFL numbers with a bound-preserving guarantee
EULER_CFL = 1 / 3
NS_CFL = 1 / 6
NS_DIFFUSION = 5 / 24
TVB_CFL = 1 / 24
DEFAULT_CFL_FRACTION = 1 / 24

# invariant checks applied during runs
BOUND_TOL = 1e-10
SUM_RTOL = 1e-10
SUM_ATOL = 1e-12
DIV_RTOL = 1e-11


class InvariantViolation(RuntimeError):
    """Raised when a run breaks bounds, conservation or discrete incompressibility."""


@dataclass(frozen=True)
class LimiterConfig:
    """``bounds`` of None means the range of the initial vorticity."""

    bp: bool = True
    tvb: TvbParams = TvbParams()
    bounds: tuple[float, float] | None = None


@dataclass(frozen=True)
class StepConfig:
    cfl_fraction: float | None = None
    fixed_dt: float | None = None
    equation: str = "euler"
    re: float | None = None
    limiters: LimiterConfig = LimiterConfig()

    def __post_init__(self):
        if self.cfl_fraction is None and self.fixed_dt is None:
            object.__setattr__(self, "cfl_fraction", DEFAULT_CFL_FRACTION)
        if self.cfl_fraction is not None and self.fixed_dt is not None:
            raise ConfigurationError("set exactly one of cfl_fraction and fixed_dt")
        if self.cfl_fraction is not None and not self.cfl_fraction > 0:
            raise ConfigurationError("cfl_fraction must be positive")
        if self.fixed_dt is not None and not self.fixed_dt > 0:
            raise ConfigurationError("fixed_dt must be positive")
        if self.equation not in EQUATIONS:
            raise ConfigurationError(f"unknown equation {self.equation!r}")
        if self.equation == "navier_stokes" and not (self.re is not None and self.re > 0):
            raise ConfigurationError("Navier-Stokes needs a positive Reynolds number")

    @property
    def viscous(self) -> bool:
        return self.equation == "navier_stokes"


@dataclass(frozen=True)
class FlowState:
    t: float
    omega: Field2D
    psi: Field2D
    vel: VelocityPair

    @classmethod
    def from_omega(cls, omega: Field2D, t: float = 0.0) -> "FlowState":
        psi = solve_poisson_periodic(omega)
        return cls(t, omega, psi, reconstruct_velocity(psi))


def _velocity(omega: np.ndarray, grid) -> VelocityPair:
    # the periodic solve drops the (conserved) mean of omega
    return reconstruct_velocity(solve_poisson_periodic(Field2D(grid, omega)))


def _split_max(a: np.ndarray) -> float:
    alpha = float(np.max(np.abs(a)))
    return max(0.5 * (float(a.max()) + alpha), 0.5 * (alpha - float(a.min())))


def bound_preserving_dt(vel: VelocityPair, config: StepConfig) -> float:
    """Largest step satisfying the bound-preserving CFL conditions for ``vel``.

    Returns ``inf`` when nothing constrains the step (zero velocity, no diffusion).
    """
    g = vel.grid
    umax = float(np.max(np.abs(vel.u.values)))
    vmax = float(np.max(np.abs(vel.v.values)))
    rate = umax / g.dx + vmax / g.dy
    cfl = NS_CFL if config.viscous else EULER_CFL
    dt = cfl / rate if rate > 0 else math.inf
    if config.limiters.tvb.active:
        sx, sy = _split_max(vel.u.values), _split_max(vel.v.values)
        if sx > 0:
            dt = min(dt, TVB_CFL * g.dx / sx)
        if sy > 0:
            dt = min(dt, TVB_CFL * g.dy / sy)
    if config.viscous:
        dt = min(dt, NS_DIFFUSION * config.re / (1 / g.dx**2 + 1 / g.dy**2))
    return dt


def frozen_speed_dt(cfl_fraction: float, dx: float, u0_max: float) -> float:
    """``dt = cfl_fraction * dx / max|u0|`` with ``max|u0|`` frozen from the initial state."""
    if not u0_max > 0:
        raise ConfigurationError("frozen-speed step rule needs a nonzero initial velocity")
    return cfl_fraction * dx / u0_max


def max_speed(vel: VelocityPair) -> float:
    """Grid maximum of the velocity magnitude."""
    return float(np.sqrt(np.max(vel.u.values**2 + vel.v.values**2)))


def compute_dt(state: FlowState, config: StepConfig, u0_max: float | None = None) -> float:
    """Step size for the next step.

    With ``fixed_dt`` that value is returned.  With ``u0_max`` the frozen-speed
    rule ``cfl_fraction * dx / u0_max`` is used, capped by the bound-preserving limit
    for the current velocity.  Without it that limit itself is
    returned (adaptive mode).
    """
    if config.fixed_dt is not None:
        return config.fixed_dt
    cap = bound_preserving_dt(state.vel, config)
    if u0_max is not None and u0_max > 0:
        return min(frozen_speed_dt(config.cfl_fraction, state.omega.grid.dx, u0_max), cap)
    if math.isinf(cap):
        raise ConfigurationError("zero velocity without diffusion: supply fixed_dt")
    return cap


@dataclass
class StageLog:
    """Diagnostics gathered over the stages of one step."""

    bp: BpStats = field(default_factory=BpStats)
    div_max: float = 0.0
    div_rel: float = 0.0

    def record_velocity(self, vel: VelocityPair):
        r = float(np.max(np.abs(divergence_residual(vel).values)))
        self.div_max = max(self.div_max, r)
        scale = max(float(np.max(np.abs(vel.u.values))), float(np.max(np.abs(vel.v.values))))
        if scale > 0:
            self.div_rel = max(self.div_rel, r / scale)


def _bounds(config: StepConfig, omega: Field2D):
    b = config.limiters.bounds
    return b if b is not None else (omega.min(), omega.max())


def _fe_omega(omega: np.ndarray, vel: VelocityPair, dt: float, config: StepConfig,
              bounds, log: StageLog) -> np.ndarray:
    g = vel.grid
    w = Field2D(g, omega)
    lim = config.limiters
    if config.viscous:
        avg = ns_averaged_update(w, vel, dt, config.re, lim.tvb).values
        if lim.bp:
            return bp_limit_2d_ns(avg, bounds[0], bounds[1], log.bp)
        return solve_along(W2, solve_along(W2, recover_point_values(avg), 0), 1)
    avg = convective_update(w, vel, dt, lim.tvb).values
    if lim.bp:
        return bp_limit_2d_euler(avg, bounds[0], bounds[1], log.bp)
    return recover_point_values(avg)


def forward_euler_step(state: FlowState, dt: float, config: StepConfig,
                       bounds=None, log: StageLog | None = None) -> FlowState:
    bounds = bounds if bounds is not None else _bounds(config, state.omega)
    log = log if log is not None else StageLog()
    w = _fe_omega(state.omega.values, state.vel, dt, config, bounds, log)
    new = FlowState.from_omega(state.omega.like(w), state.t + dt)
    log.record_velocity(new.vel)
    return new


def ssprk3_step(state: FlowState, dt: float, config: StepConfig,
                bounds=None, log: StageLog | None = None) -> FlowState:
    """Shu-Osher SSPRK(3,3): every stage is a full limited forward-Euler step."""
    bounds = bounds if bounds is not None else _bounds(config, state.omega)
    log = log if log is not None else StageLog()
    g = state.omega.grid
    w0 = state.omega.values
    w1 = _fe_omega(w0, state.vel, dt, config, bounds, log)
    v1 = _velocity(w1, g)
    log.record_velocity(v1)
    w2 = 0.75 * w0 + 0.25 * _fe_omega(w1, v1, dt, config, bounds, log)
    v2 = _velocity(w2, g)
    log.record_velocity(v2)
    w3 = w0 / 3 + 2 / 3 * _fe_omega(w2, v2, dt, config, bounds, log)
    new = FlowState.from_omega(state.omega.like(w3), state.t + dt)
    log.record_velocity(new.vel)
    return new


def ssprk3_scalar(z: complex) -> complex:
    """Amplification factor of the three stages applied to ``u' = lam u`` with ``z = lam dt``."""
    u0 = 1.0
    u1 = u0 + z * u0
    u2 = 0.75 * u0 + 0.25 * (u1 + z * u1)
    return u0 / 3 + 2 / 3 * (u2 + z * u2)


STEP_COLUMNS = ("step", "t", "dt", "min_omega", "max_omega", "sum_omega", "div_residual_max", "bp_violations")


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    min_omega: float
    max_omega: float
    sum_omega: float
    div_residual_max: float
    bp_violations: int
    div_residual_rel: float = 0.0
    limited_points: int = 0

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in STEP_COLUMNS)


@dataclass
class RunResult:
    state: FlowState
    records: list
    snapshots: dict
    bounds: tuple
    initial_sum: float
    initial_abs_sum: float

    @property
    def max_div_rel(self) -> float:
        return max((r.div_residual_rel for r in self.records), default=0.0)


def run(omega0: Field2D, config: StepConfig, t_final: float, snapshot_times=(),
        u0_max: float | None = None, check_invariants: bool = True,
        on_step: Callable[[StepRecord], None] | None = None,
        stepper=ssprk3_step) -> RunResult:
    """Advance ``omega0`` to ``t_final`` and collect the per-step log.

    The frozen-speed step rule is used when ``u0_max`` is given (pass the initial
    maximum speed); steps are shortened to land on snapshot times and
    ``t_final``.  With ``check_invariants`` a breach of the bound,
    conservation or divergence tolerances raises :class:`InvariantViolation`.
    """
    state = FlowState.from_omega(omega0)
    bounds = _bounds(config, omega0)
    targets = sorted({float(t) for t in snapshot_times if 0 < t <= t_final} | {float(t_final)})
    snapshots = {}
    if any(t == 0 for t in snapshot_times):
        snapshots[0.0] = omega0
    s0 = omega0.sum()
    a0 = float(np.sum(np.abs(omega0.values)))
    records = []
    log0 = StageLog()
    log0.record_velocity(state.vel)
    _check(state, log0, bounds, s0, a0, config, check_invariants)
    step = 0
    for target in targets:
        while state.t < target * (1 - 1e-14) and target - state.t > 1e-14:
            dt = compute_dt(state, config, u0_max)
            if state.t + dt > target or target - (state.t + dt) < 1e-9 * dt:
                dt = target - state.t
            log = StageLog()
            new = stepper(state, dt, config, bounds, log)
            state = FlowState(target if dt == target - state.t else new.t, new.omega, new.psi, new.vel)
            step += 1
            rec = StepRecord(step, state.t, dt, state.omega.min(), state.omega.max(), state.omega.sum(),
                             log.div_max, log.bp.violations, log.div_rel, log.bp.limited_points)
            records.append(rec)
            if on_step is not None:
                on_step(rec)
            _check(state, log, bounds, s0, a0, config, check_invariants)
        snapshots[target] = state.omega
    return RunResult(state, records, snapshots, bounds, s0, a0)


def _check(state, log, bounds, s0, a0, config, enabled):
    if not enabled:
        return
    w = state.omega
    if config.limiters.bp and (w.min() < bounds[0] - BOUND_TOL or w.max() > bounds[1] + BOUND_TOL):
        raise InvariantViolation(f"t={state.t:.6g}: vorticity left [{bounds[0]}, {bounds[1]}]")
    if abs(w.sum() - s0) > SUM_RTOL * a0 + SUM_ATOL:
        raise InvariantViolation(f"t={state.t:.6g}: sum of vorticity drifted by {w.sum() - s0:.3e}")
    if log.div_rel > DIV_RTOL:
        raise InvariantViolation(f"t={state.t:.6g}: divergence residual {log.div_rel:.3e} (relative)")
