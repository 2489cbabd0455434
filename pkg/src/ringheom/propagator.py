"""Adaptive Runge-Kutta-Fehlberg 4(5) integration of the hierarchy.

One step evaluates six stages shared by the embedded fourth- and
fifth-order solutions (classical Fehlberg tableau).  The local error is
estimated from the system field alone, at theta = 0:

    eps = max_n |W4_root(p_n, 0) - W5_root(p_n, 0)|

and the step is accepted when eps <= TOL.  Accepted or not, the next
step size follows

    dt_new = (C * TOL / eps)**0.2 * dt

clamped to [dt_min, min(dt_max, growth_cap * dt)].  The state advances
with the fifth-order solution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NoConvergence, StepUnderflow
from .grid import PhaseSpaceGrid, load_block, save_block

__all__ = [
    "HeomState",
    "StepControl",
    "rkf_step",
    "estimate_error",
    "adapt_step",
    "propagate",
    "relax_to_equilibrium",
    "save_checkpoint",
    "load_checkpoint",
]

# Fehlberg 4(5) tableau
_C = (0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0)
_A = (
    (),
    (1.0 / 4.0,),
    (3.0 / 32.0, 9.0 / 32.0),
    (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0),
    (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0),
    (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0),
)
_B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0)
_B5 = (16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0)


@dataclass
class HeomState:
    """Time, current step size and the stacked auxiliary fields."""

    t: float
    dt: float
    ados: np.ndarray  # (count, rows, M)

    def copy(self) -> "HeomState":
        return HeomState(t=self.t, dt=self.dt, ados=self.ados.copy())


@dataclass(frozen=True)
class StepControl:
    """Adaptive stepping knobs; C is the safety factor of the update rule."""

    tol: float = 1e-10
    safety: float = 0.99
    growth_cap: float = 5.0
    dt_min: float = 1e-12
    dt_max: float = 0.1
    dt_init: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.safety < 1.0:
            raise ValueError("safety must lie in (0, 1)")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if not 0.0 < self.dt_min < self.dt_max:
            raise ValueError("need 0 < dt_min < dt_max")
        if self.growth_cap <= 1.0:
            raise ValueError("growth_cap must be > 1")


class _RkfWorkspace:
    """Preallocated stage and solution buffers for repeated stepping."""

    def __init__(self, y: np.ndarray):
        self.ks = [np.empty_like(y) for _ in range(6)]
        self.stage = np.empty_like(y)
        self.tmp = np.empty_like(y)
        self.y4 = np.empty_like(y)
        self.y5 = np.empty_like(y)

    def matches(self, y: np.ndarray) -> bool:
        return self.stage.shape == y.shape


def _rhs_into(rhs, stage, out):
    # engines advertising accepts_out write in place; plain callables copy
    if getattr(rhs, "accepts_out", False):
        return rhs(stage, out=out)
    out[...] = rhs(stage)
    return out


def rkf_step(y: np.ndarray, dt: float, rhs, work: _RkfWorkspace | None = None):
    """One embedded step; returns (fourth order, fifth order) solutions.

    With a workspace the returned arrays are its reusable buffers; the
    caller must copy what it keeps.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if work is None or not work.matches(y):
        work = _RkfWorkspace(y)
    ks, stage, tmp = work.ks, work.stage, work.tmp
    _rhs_into(rhs, y, ks[0])
    for i in range(1, 6):
        np.multiply(ks[0], dt * _A[i][0], out=stage)
        stage += y
        for a, k in zip(_A[i][1:], ks[1:]):
            if a != 0.0:
                np.multiply(k, dt * a, out=tmp)
                stage += tmp
        _rhs_into(rhs, stage, ks[i])
    for out, weights in ((work.y4, _B4), (work.y5, _B5)):
        np.multiply(ks[0], dt * weights[0], out=out)
        out += y
        for b, k in zip(weights[1:], ks[1:]):
            if b != 0.0:
                np.multiply(k, dt * b, out=tmp)
                out += tmp
    return work.y4, work.y5


def estimate_error(y4: np.ndarray, y5: np.ndarray) -> float:
    """Max deviation over momentum rows of the root field at theta = 0."""
    if y4.shape != y5.shape:
        raise ValueError("mismatched shapes")
    return float(np.max(np.abs(y4[0, :, 0] - y5[0, :, 0])))


def adapt_step(dt: float, eps: float, control: StepControl) -> tuple[bool, float]:
    """Accept/reject decision and next step size.

    eps = 0 (e.g. a stationary state) maps to the growth-capped step.

    Raises
    ------
    StepUnderflow
        If the update calls for a step below dt_min while rejecting.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    accept = eps <= control.tol
    if eps == 0.0:
        dt_new = control.growth_cap * dt
    else:
        dt_new = (control.safety * control.tol / eps) ** 0.2 * dt
    if not accept and dt_new < control.dt_min:
        raise StepUnderflow(
            f"step update {dt_new:.3e} fell below dt_min={control.dt_min:.3e} "
            f"with eps={eps:.3e}; the configuration is not integrable at this tolerance"
        )
    dt_new = min(dt_new, control.growth_cap * dt, control.dt_max)
    dt_new = max(dt_new, control.dt_min)
    return accept, dt_new


def propagate(
    state: HeomState,
    t_end: float,
    control: StepControl,
    rhs,
    observers: tuple = (),
    step_log=None,
) -> HeomState:
    """Advance the state to exactly t_end.

    Observers are callables observer(state) invoked after every accepted
    step; step_log, when given, receives (t_attempt, dt, eps, accepted)
    for every attempt.  The final step is shortened to land on t_end.
    """
    if t_end < state.t:
        raise ValueError("t_end must be >= state.t")
    work = _RkfWorkspace(state.ados)
    while state.t < t_end:
        remaining = t_end - state.t
        dt = min(state.dt, remaining)
        final = dt >= remaining
        y4, y5 = rkf_step(state.ados, dt, rhs, work=work)
        eps = estimate_error(y4, y5)
        accept, dt_new = adapt_step(dt, eps, control)
        if step_log is not None:
            step_log(state.t, dt, eps, accept)
        state.dt = dt_new
        if accept:
            state.ados[...] = y5
            state.t = t_end if final else state.t + dt
            for obs in observers:
                obs(state)
    return state


def relax_to_equilibrium(
    state: HeomState,
    control: StepControl,
    rhs,
    grid: PhaseSpaceGrid,
    window: float = 1.0,
    eps_ss: float = 1e-9,
    max_time: float = 500.0,
    on_window=None,
    step_log=None,
) -> HeomState:
    """Propagate in windows until the system field stops moving.

    Convergence requires both the field residual
    max|W_root(t+window) - W_root(t)| / window and the drift of the
    cos(theta) expectation per unit time to fall below eps_ss.  The check
    runs after each window, so a stationary input returns after one.

    Raises
    ------
    NoConvergence
        If the residuals are still above eps_ss after max_time.
    """
    from .observables import expect_costheta  # local import, avoids a cycle

    t_start = state.t
    while True:
        prev_root = state.ados[0].copy()
        prev_cos = expect_costheta(state, grid)
        propagate(state, state.t + window, control, rhs, step_log=step_log)
        res_field = float(np.max(np.abs(state.ados[0] - prev_root))) / window
        res_obs = abs(expect_costheta(state, grid) - prev_cos) / window
        if on_window is not None:
            on_window(state.t, res_field, res_obs)
        if res_field < eps_ss and res_obs < eps_ss:
            return state
        if state.t - t_start >= max_time:
            raise NoConvergence(
                f"no steady state after t={max_time}: field residual {res_field:.3e}, "
                f"observable drift {res_obs:.3e} (target {eps_ss:.1e})",
                residual_field=res_field,
                residual_obs=res_obs,
            )


def save_checkpoint(path, state: HeomState, grid: PhaseSpaceGrid) -> None:
    """Write the full state in the raw field-block format."""
    save_block(path, state.ados, grid, t=state.t, dt=state.dt)


def load_checkpoint(path, grid: PhaseSpaceGrid | None = None) -> HeomState:
    """Read a state; validates grid dimensions when a grid is given."""
    ados, np_cut, m, t, dt = load_block(path)
    if grid is not None and (np_cut, m) != (grid.Np, grid.M):
        raise ValueError(
            f"checkpoint grid ({np_cut}, {m}) does not match configured ({grid.Np}, {grid.M})"
        )
    return HeomState(t=t, dt=dt, ados=ados)
