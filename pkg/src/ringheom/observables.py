"""Physical readouts: position distribution, expectations, linear response.

The response recipe is kick -> propagate -> read: apply the commutator
stencil sin(theta) d/dp of the cos(theta) dipole to every auxiliary
field of the equilibrium state, evolve, and record <cos(theta)>.  The
rotational spectrum is the imaginary part of the half-range Fourier
transform of that record, evaluated by direct trapezoidal summation so
the frequency grid is arbitrary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grid import PhaseSpaceGrid
from .propagator import HeomState, StepControl, propagate

__all__ = [
    "ResponseSeries",
    "Spectrum",
    "pdf",
    "expect_costheta",
    "expect_momentum",
    "apply_dipole_commutator",
    "response_function",
    "spectrum",
    "write_columns_csv",
]


@dataclass(frozen=True)
class ResponseSeries:
    """Uniformly sampled response record."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal length")
        if len(self.times) >= 2:
            steps = np.diff(self.times)
            dt = steps[0]
            if dt <= 0 or np.any(np.abs(steps - dt) > 1e-12 * max(1.0, abs(dt))):
                raise ValueError("times must be strictly increasing and uniform")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class Spectrum:
    """Frequency grid and spectral values."""

    omegas: np.ndarray
    sigma: np.ndarray


def pdf(state: HeomState, grid: PhaseSpaceGrid) -> np.ndarray:
    """Position distribution P(theta) = (hbar/2) sum_n W_root(p_n, theta)."""
    return (grid.hbar / 2.0) * state.ados[0].sum(axis=0)


def expect_costheta(state: HeomState, grid: PhaseSpaceGrid) -> float:
    """<cos theta> of the system field."""
    return grid.integrate_weighted(state.ados[0], np.cos(grid.theta))


def expect_momentum(state: HeomState, grid: PhaseSpaceGrid) -> float:
    """<p> of the system field."""
    return grid.integrate_weighted(state.ados[0], grid.p[:, None])


def apply_dipole_commutator(state: HeomState, grid: PhaseSpaceGrid) -> HeomState:
    """Kick every auxiliary field with sin(theta) d/dp; resets t to 0.

    The resulting root field is traceless (odd stencil), as required for
    a response run.
    """
    kicked = np.sin(grid.theta) * grid.dpn(state.ados)
    return HeomState(t=0.0, dt=state.dt, ados=kicked)


class _UniformSampler:
    """Observer that linearly interpolates an observable onto sample times."""

    def __init__(self, times, func, state):
        self.times = times
        self.func = func
        self.values = np.empty(len(times))
        self.pos = 0
        self.prev_t = state.t
        self.prev_val = func(state)

    def __call__(self, state):
        t_new = state.t
        val_new = self.func(state)
        while self.pos < len(self.times) and self.times[self.pos] <= t_new + 1e-12:
            ts = self.times[self.pos]
            if t_new == self.prev_t:
                v = val_new
            else:
                w = (ts - self.prev_t) / (t_new - self.prev_t)
                v = (1.0 - w) * self.prev_val + w * val_new
            self.values[self.pos] = v
            self.pos += 1
        self.prev_t = t_new
        self.prev_val = val_new


def response_function(
    eq_state: HeomState,
    grid: PhaseSpaceGrid,
    control: StepControl,
    rhs,
    t_max: float,
    dt_sample: float,
    step_log=None,
) -> ResponseSeries:
    """Kick the equilibrium state and record <cos theta> on a uniform grid.

    Sample times falling inside an accepted step are filled by linear
    interpolation of the observable between the step endpoints.
    """
    if t_max <= 0 or dt_sample <= 0:
        raise ValueError("t_max and dt_sample must be > 0")
    nsamples = int(round(t_max / dt_sample))
    times = dt_sample * np.arange(nsamples + 1)
    state = apply_dipole_commutator(eq_state, grid)
    sampler = _UniformSampler(times, lambda s: expect_costheta(s, grid), state)
    sampler(state)  # emits the t = 0 sample
    propagate(state, float(times[-1]), control, rhs, observers=(sampler,), step_log=step_log)
    if sampler.pos < len(times):  # guard: final sample at exactly t_max
        sampler(state)
    return ResponseSeries(times=times, values=sampler.values)


def spectrum(series: ResponseSeries, omegas: np.ndarray, damping: float = 0.0) -> Spectrum:
    """sigma(omega) = Im sum_k w_k exp(i w t_k - damping t_k) R_k dt.

    Trapezoidal end weights; the optional exponential damping compensates
    a finite record length (default off).
    """
    if damping < 0:
        raise ValueError("damping must be >= 0")
    omegas = np.asarray(omegas, dtype=float)
    t = series.times
    weights = np.ones_like(t)
    weights[0] = 0.5
    weights[-1] = 0.5
    damped = weights * series.values * np.exp(-damping * t)
    sigma = np.empty_like(omegas)
    chunk = 256
    for i in range(0, len(omegas), chunk):
        phase = np.exp(1j * np.outer(omegas[i : i + chunk], t))
        sigma[i : i + chunk] = (phase * damped).sum(axis=1).imag * series.dt
    return Spectrum(omegas=omegas, sigma=sigma)


def write_columns_csv(path, columns: dict, params: dict | None = None) -> None:
    """CSV with a parameter comment line, a column-name line, then rows.

    Floats are rendered with repr (shortest round-trip), so identical
    inputs give byte-identical files.
    """
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("all columns must have equal length")
    with open(path, "w", newline="") as fh:
        if params:
            items = " ".join(f"{k}={v}" for k, v in params.items())
            fh.write(f"# {items}\n")
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(length):
            writer.writerow([repr(float(a[i])) for a in arrays])
