"""Experiment drivers: build, run, write outputs.

Every run writes into the configured output directory:
  - CSV products with the config hash in the header comment,
  - a binary state checkpoint where applicable,
  - run.json with parameters, output list and timing counters.

Timing never goes into CSVs, so identical configs reproduce identical
CSV bytes; the manifest carries the benchmark numbers instead.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import time

import numpy as np

from .config import RunConfig
from .errors import ConfigValidationError, NonFiniteState
from .generator import Generator, GeneratorTables, build_tables
from .grid import PhaseSpaceGrid
from .hierarchy import HierarchyIndexSet, enumerate_indices
from .observables import (
    ResponseSeries,
    expect_costheta,
    expect_momentum,
    pdf,
    response_function,
    spectrum,
    write_columns_csv,
)
from .propagator import (
    HeomState,
    load_checkpoint,
    relax_to_equilibrium,
    save_checkpoint,
)

__all__ = [
    "Problem",
    "build_problem",
    "initial_state",
    "run_equilibrium",
    "run_response",
    "run_flux_scan",
    "pade_report",
]

EDGE_TAIL_RATIO = 1e-10


@dataclasses.dataclass
class Problem:
    """Everything needed to propagate one parameter set."""

    config: RunConfig
    grid: PhaseSpaceGrid
    idxset: HierarchyIndexSet
    tables: GeneratorTables
    generator: Generator


def build_problem(config: RunConfig, fluxbar: float | None = None) -> Problem:
    ring = config.ring
    if fluxbar is not None:
        ring = dataclasses.replace(ring, fluxbar=fluxbar)
    grid = config.grid
    idxset = enumerate_indices(
        config.bath.k_x,
        config.bath.k_y,
        config.nmax,
        cells_per_ado=grid.rows * grid.M,
        max_bytes=config.budget_bytes,
    )
    tables = build_tables(ring, config.bath, grid, strict_paper_form=config.strict_paper_form)
    gen = Generator(idxset, tables, workers=config.workers)
    return Problem(config=config, grid=grid, idxset=idxset, tables=tables, generator=gen)


def initial_state(problem: Problem) -> HeomState:
    """Free-rotor thermal start: even momentum rows carry a discrete
    Gaussian centered at the flux-shifted momentum, uniform in theta,
    normalized to unit trace; deeper fields start at zero."""
    grid = problem.grid
    ring = problem.tables.ring
    beta = problem.tables.bath.beta
    weights = np.where(
        grid.n % 2 == 0,
        np.exp(-beta * (grid.p - ring.hbar * ring.fluxbar) ** 2 / (2.0 * ring.inertia)),
        0.0,
    )
    weights /= np.pi * grid.hbar * weights.sum()
    ados = grid.zeros(len(problem.idxset))
    ados[0] = weights[:, None]
    state = HeomState(t=0.0, dt=problem.config.control.dt_init, ados=ados)
    return state


def check_momentum_window(state: HeomState, grid: PhaseSpaceGrid, tol: float = 0.0) -> float:
    """Edge-row occupancy of the root field relative to its peak.

    Local truncation noise of order the step tolerance settles on empty
    momentum rows, so occupancy below ~10x tol says nothing about the
    window; the threshold is floored there.  Raises when the physical
    tail genuinely reaches the cutoff.
    """
    root = state.ados[0]
    peak = float(np.max(np.abs(root)))
    if peak == 0.0:
        return 0.0
    edge = max(float(np.max(np.abs(root[0]))), float(np.max(np.abs(root[-1]))))
    if edge > max(EDGE_TAIL_RATIO * peak, 10.0 * tol):
        raise ConfigValidationError(
            f"momentum window too small: edge-row occupancy {edge / peak:.2e} of the "
            f"peak exceeds {EDGE_TAIL_RATIO:.0e}; increase momentum_cutoff"
        )
    return edge / peak


class StepLogger:
    """Collects (t, dt, eps, accepted) rows plus aggregate counters."""

    def __init__(self):
        self.rows = []
        self.accepted = 0
        self.rejected = 0

    def __call__(self, t, dt, eps, accepted):
        self.rows.append((t, dt, eps, accepted))
        if accepted:
            self.accepted += 1
        else:
            self.rejected += 1

    def write_csv(self, path, params):
        with open(path, "w", newline="") as fh:
            if params:
                fh.write("# " + " ".join(f"{k}={v}" for k, v in params.items()) + "\n")
            writer = csv.writer(fh)
            writer.writerow(["t", "dt", "eps_err", "accepted"])
            for t, dt, eps, acc in self.rows:
                writer.writerow([repr(float(t)), repr(float(dt)), repr(float(eps)), int(acc)])


def _common_params(config: RunConfig, **extra):
    params = {
        "experiment": config.experiment,
        "eta_x": config.bath.eta_x,
        "eta_y": config.bath.eta_y,
        "gamma_x": config.bath.gamma_x,
        "gamma_y": config.bath.gamma_y,
        "beta": config.bath.beta,
        "k_x": config.bath.k_x,
        "k_y": config.bath.k_y,
        "nmax": config.nmax,
        "fluxbar": config.ring.fluxbar,
        "Np": config.grid.Np,
        "M": config.grid.M,
        "tol": config.control.tol,
        "config": config.config_hash,
    }
    params.update(extra)
    return params


def _write_manifest(config: RunConfig, outdir, outputs, bench):
    manifest = {
        "config_hash": config.config_hash,
        "experiment": config.experiment,
        "outputs": sorted(outputs),
        "benchmark": bench,
        "canonical_config": config.canonical().splitlines(),
    }
    path = os.path.join(outdir, "run.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def _relax(problem: Problem, logger: StepLogger, history: list) -> HeomState:
    state = initial_state(problem)
    relax_to_equilibrium(
        state,
        problem.config.control,
        problem.generator,
        problem.grid,
        window=problem.config.relax.window,
        eps_ss=problem.config.relax.eps_ss,
        max_time=problem.config.relax.max_time,
        on_window=lambda t, rf, ro: history.append((t, rf, ro)),
        step_log=logger,
    )
    check_momentum_window(state, problem.grid, tol=problem.config.control.tol)
    trace = problem.grid.integrate(state.ados[0])
    if abs(trace - 1.0) > 1e-6:
        raise NonFiniteState(f"normalization drifted to {trace!r} during relaxation")
    return state


def run_equilibrium(config: RunConfig, outdir: str | None = None) -> dict:
    """Relax to the steady state; write PDF, checkpoint and logs."""
    outdir = _ensure_outdir(config, outdir)
    problem = build_problem(config)
    logger = StepLogger()
    history: list = []
    t0 = time.perf_counter()
    state = _relax(problem, logger, history)
    wall = time.perf_counter() - t0

    params = _common_params(config)
    paths = {}
    paths["pdf"] = os.path.join(outdir, "pdf.csv")
    write_columns_csv(paths["pdf"], {"theta": problem.grid.theta, "P": pdf(state, problem.grid)}, params)
    paths["checkpoint"] = os.path.join(outdir, "equilibrium.state")
    save_checkpoint(paths["checkpoint"], state, problem.grid)
    paths["convergence"] = os.path.join(outdir, "convergence.csv")
    write_columns_csv(
        paths["convergence"],
        {
            "t": [h[0] for h in history],
            "residual_field": [h[1] for h in history],
            "residual_obs": [h[2] for h in history],
        },
        params,
    )
    paths["steps"] = os.path.join(outdir, "steps.csv")
    logger.write_csv(paths["steps"], params)
    paths["manifest"] = _write_manifest(
        config, outdir, list(paths.values()), _bench(wall, logger, problem)
    )
    return paths


def run_response(config: RunConfig, outdir: str | None = None) -> dict:
    """Equilibrate (or load), kick, record the response, transform.

    With experiment = spectrum and an existing response.csv in the output
    directory, only the transform is recomputed on the configured grid.
    """
    outdir = _ensure_outdir(config, outdir)
    resp = config.response
    response_path = os.path.join(outdir, "response.csv")
    if config.experiment == "spectrum" and os.path.exists(response_path):
        times, values = _read_two_column_csv(response_path)
        series = ResponseSeries(times=times, values=values)
        paths = {"response": response_path}
        paths["spectrum"] = _write_spectrum(config, outdir, series)
        paths["manifest"] = _write_manifest(config, outdir, list(paths.values()), {})
        return paths

    problem = build_problem(config)
    logger = StepLogger()
    history: list = []
    t0 = time.perf_counter()
    if resp.equilibrium_checkpoint:
        eq_state = load_checkpoint(resp.equilibrium_checkpoint, problem.grid)
        if eq_state.ados.shape[0] != len(problem.idxset):
            raise ConfigValidationError(
                "equilibrium checkpoint hierarchy size does not match the config"
            )
    else:
        eq_state = _relax(problem, logger, history)
    series = response_function(
        eq_state,
        problem.grid,
        config.control,
        problem.generator,
        t_max=resp.t_max,
        dt_sample=resp.dt_sample,
        step_log=logger,
    )
    wall = time.perf_counter() - t0

    params = _common_params(config, t_max=resp.t_max, dt_sample=resp.dt_sample)
    paths = {"response": response_path}
    write_columns_csv(response_path, {"t": series.times, "R": series.values}, params)
    paths["spectrum"] = _write_spectrum(config, outdir, series)
    paths["steps"] = os.path.join(outdir, "steps.csv")
    logger.write_csv(paths["steps"], params)
    paths["manifest"] = _write_manifest(
        config, outdir, list(paths.values()), _bench(wall, logger, problem)
    )
    return paths


def _write_spectrum(config: RunConfig, outdir, series: ResponseSeries) -> str:
    resp = config.response
    n_lo = int(np.floor(resp.omega_min / resp.omega_step))
    n_hi = int(np.floor(resp.omega_max / resp.omega_step + 1e-9))
    omegas = resp.omega_step * np.arange(n_lo, n_hi + 1)
    spec = spectrum(series, omegas, damping=resp.damping)
    path = os.path.join(outdir, "spectrum.csv")
    params = _common_params(config, damping=resp.damping)
    write_columns_csv(path, {"omega": spec.omegas, "sigma": spec.sigma}, params)
    return path


def run_flux_scan(config: RunConfig, outdir: str | None = None) -> dict:
    """Equilibrium observables for each flux value, one CSV table."""
    outdir = _ensure_outdir(config, outdir)
    logger = StepLogger()
    rows = {"fluxbar": [], "cos_theta": [], "momentum": [], "pdf_amplitude": []}
    t0 = time.perf_counter()
    problem = None
    for fluxbar in config.fluxes:
        problem = build_problem(config, fluxbar=fluxbar)
        history: list = []
        state = _relax(problem, logger, history)
        dist = pdf(state, problem.grid)
        rows["fluxbar"].append(fluxbar)
        rows["cos_theta"].append(expect_costheta(state, problem.grid))
        rows["momentum"].append(expect_momentum(state, problem.grid))
        rows["pdf_amplitude"].append(float(dist.max() - dist.min()))
    wall = time.perf_counter() - t0

    params = _common_params(config, fluxes=",".join(repr(f) for f in config.fluxes))
    del params["fluxbar"]
    paths = {"fluxscan": os.path.join(outdir, "fluxscan.csv")}
    write_columns_csv(paths["fluxscan"], rows, params)
    paths["manifest"] = _write_manifest(
        config, outdir, list(paths.values()), _bench(wall, logger, problem)
    )
    return paths


def pade_report(config: RunConfig, xmax: float = 10.0) -> str:
    """Human-readable decomposition summary for both axes."""
    from .pade import coth_surrogate_error, hierarchy_coefficients

    lines = []
    for axis in ("x", "y"):
        pset = hierarchy_coefficients(config.bath, axis, config.ring.radius, config.ring.hbar)
        lines.append(f"axis {axis}: K={pset.k}")
        lines.append(f"  nu     = {np.array2string(pset.nu, precision=8)}")
        lines.append(f"  etabar = {np.array2string(pset.etabar, precision=8)}")
        lines.append(f"  a0={pset.a0!r}  b0={pset.b0!r}")
        lines.append(f"  aj={np.array2string(pset.aj, precision=8)}")
        lines.append(f"  max |coth surrogate error| on (0, {xmax}] = {coth_surrogate_error(pset, xmax):.3e}")
    return "\n".join(lines)


def _bench(wall, logger: StepLogger, problem: Problem | None):
    bench = {
        "wall_seconds": wall,
        "steps_accepted": logger.accepted,
        "steps_rejected": logger.rejected,
    }
    if problem is not None:
        bench["rhs_evals"] = problem.generator.rhs_evals
        bench["hierarchy_size"] = len(problem.idxset)
        bench["workers"] = problem.generator.workers
        if logger.accepted:
            bench["wall_per_step"] = wall / (logger.accepted + logger.rejected)
    return bench


def _ensure_outdir(config: RunConfig, outdir: str | None) -> str:
    outdir = outdir or config.outdir
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _read_two_column_csv(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    next(reader)  # column names
    data = np.array([[float(a), float(b)] for a, b in reader])
    return data[:, 0], data[:, 1]
