"""Run configuration: parsing, validation and defaults.

The config grammar is a small INI subset, documented in the README:

    # comment (also ;)
    [section]
    key = value

Values are scalars, comma- or space-separated lists, or `k:coef` pairs
for the potential series.  Unknown sections or keys are hard errors, as
are violations of any downstream physical precondition; diagnostics
carry the offending line number.

Zero-config defaults reproduce the reference parameter set: m = 0.5,
r0 = 1.0, charge = -1.0, beta = 1.0, gamma = 1.0 per axis, TOL = 1e-10,
fluxbar = 0, zero potential.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

from .errors import ConfigParseError, ConfigValidationError
from .grid import PhaseSpaceGrid
from .pade import BathSpec
from .generator import RingSpec
from .propagator import StepControl

__all__ = ["RunConfig", "parse_config", "load_config", "EXPERIMENTS", "WORKERS_ENV"]

EXPERIMENTS = ("equilibrium", "response", "spectrum", "flux-scan")
WORKERS_ENV = "RINGHEOM_WORKERS"

DEFAULT_BUDGET_BYTES = 2 * 1024**3


@dataclass(frozen=True)
class RelaxParams:
    window: float = 1.0
    eps_ss: float = 1e-9
    max_time: float = 500.0

    def __post_init__(self):
        if self.window <= 0 or self.eps_ss <= 0 or self.max_time <= 0:
            raise ValueError("window, eps_ss and max_time must be > 0")


@dataclass(frozen=True)
class ResponseParams:
    t_max: float = 50.0
    dt_sample: float = 0.1
    omega_min: float = 0.0
    omega_max: float = 8.0
    omega_step: float = 0.02
    damping: float = 0.0
    equilibrium_checkpoint: str = ""

    def __post_init__(self):
        if self.t_max <= 0 or self.dt_sample <= 0:
            raise ValueError("t_max and dt_sample must be > 0")
        if self.omega_step <= 0 or self.omega_max <= self.omega_min:
            raise ValueError("need omega_step > 0 and omega_max > omega_min")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    ring: RingSpec
    bath: BathSpec
    grid: PhaseSpaceGrid
    nmax: int
    control: StepControl
    relax: RelaxParams
    response: ResponseParams
    fluxes: tuple[float, ...]
    outdir: str
    workers: int
    strict_paper_form: bool
    budget_bytes: int
    text: str = field(repr=False, default="")

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]

    def canonical(self) -> str:
        """Normalized key=value dump used for hashing."""
        parts = [f"experiment={self.experiment}"]
        for name in (
            "mass radius charge fluxbar hbar".split()
        ):
            parts.append(f"ring.{name}={getattr(self.ring, name)!r}")
        parts.append(f"ring.u_coef={sorted(self.ring.u_coef.items())!r}")
        for name in "eta_x eta_y gamma_x gamma_y k_x k_y beta".split():
            parts.append(f"bath.{name}={getattr(self.bath, name)!r}")
        parts.append(f"grid=({self.grid.Np},{self.grid.M},{self.grid.hbar!r})")
        parts.append(f"nmax={self.nmax}")
        for name in "tol safety growth_cap dt_min dt_max dt_init".split():
            parts.append(f"step.{name}={getattr(self.control, name)!r}")
        for name in "window eps_ss max_time".split():
            parts.append(f"relax.{name}={getattr(self.relax, name)!r}")
        for name in (
            "t_max dt_sample omega_min omega_max omega_step damping "
            "equilibrium_checkpoint".split()
        ):
            parts.append(f"response.{name}={getattr(self.response, name)!r}")
        parts.append(f"fluxes={list(self.fluxes)!r}")
        parts.append(f"strict_paper_form={self.strict_paper_form}")
        return "\n".join(parts)


# (section, key) -> parser; organized per section for the unknown-key check
_SCHEMA: dict[str, set[str]] = {
    "ring": {"mass", "radius", "charge", "flux", "potential", "hbar"},
    "bath": {"eta_x", "eta_y", "gamma_x", "gamma_y", "k_x", "k_y", "beta"},
    "grid": {"momentum_cutoff", "theta_points"},
    "hierarchy": {"nmax"},
    "stepping": {"tol", "safety", "growth_cap", "dt_min", "dt_max", "dt_init"},
    "run": {"experiment", "output_dir", "workers", "strict_paper_form", "budget_bytes"},
    "equilibrium": {"window", "eps_ss", "max_time"},
    "response": {
        "t_max",
        "dt_sample",
        "omega_min",
        "omega_max",
        "omega_step",
        "damping",
        "equilibrium_checkpoint",
    },
    "flux-scan": {"fluxes"},
}

_REQUIRED = (("run", "experiment"),)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config document."""
    entries = _tokenize(text)

    def get(section, key, conv, default):
        item = entries.pop((section, key), None)
        if item is None:
            return default
        value, lineno = item
        try:
            return conv(value)
        except ConfigValidationError:
            raise
        except Exception as exc:
            raise ConfigValidationError(f"[{section}] {key}: {exc}", lineno) from exc

    for section, key in _REQUIRED:
        if (section, key) not in entries:
            raise ConfigParseError(f"missing required key '{key}' in section [{section}]")

    experiment = get("run", "experiment", _experiment, None)

    lines = {sk: item[1] for sk, item in entries.items()}

    def build(cls, section, kwargs):
        try:
            return cls(**kwargs)
        except ValueError as exc:
            lineno = min((lines[sk] for sk in lines if sk[0] == section), default=None)
            raise ConfigValidationError(f"[{section}] {exc}", lineno) from exc

    ring = build(RingSpec, "ring", dict(
        mass=get("ring", "mass", float, 0.5),
        radius=get("ring", "radius", float, 1.0),
        charge=get("ring", "charge", float, -1.0),
        fluxbar=get("ring", "flux", float, 0.0),
        u_coef=get("ring", "potential", _potential, {}),
        hbar=get("ring", "hbar", float, 1.0),
    ))
    bath = build(BathSpec, "bath", dict(
        eta_x=get("bath", "eta_x", float, 0.2),
        eta_y=get("bath", "eta_y", float, 0.1),
        gamma_x=get("bath", "gamma_x", float, 1.0),
        gamma_y=get("bath", "gamma_y", float, 1.0),
        k_x=get("bath", "k_x", _nonneg_int, 2),
        k_y=get("bath", "k_y", _nonneg_int, 2),
        beta=get("bath", "beta", float, 1.0),
    ))
    grid = build(PhaseSpaceGrid, "grid", dict(
        Np=get("grid", "momentum_cutoff", _nonneg_int, 64),
        M=get("grid", "theta_points", _nonneg_int, 64),
        hbar=ring.hbar,
    ))
    nmax = get("hierarchy", "nmax", _nonneg_int, 6)
    control = build(StepControl, "stepping", dict(
        tol=get("stepping", "tol", float, 1e-10),
        safety=get("stepping", "safety", float, 0.99),
        growth_cap=get("stepping", "growth_cap", float, 5.0),
        dt_min=get("stepping", "dt_min", float, 1e-12),
        dt_max=get("stepping", "dt_max", float, 0.1),
        dt_init=get("stepping", "dt_init", float, 1e-4),
    ))
    relax = build(RelaxParams, "equilibrium", dict(
        window=get("equilibrium", "window", float, 1.0),
        eps_ss=get("equilibrium", "eps_ss", float, 1e-9),
        max_time=get("equilibrium", "max_time", float, 500.0),
    ))
    response = build(ResponseParams, "response", dict(
        t_max=get("response", "t_max", float, 50.0),
        dt_sample=get("response", "dt_sample", float, 0.1),
        omega_min=get("response", "omega_min", float, 0.0),
        omega_max=get("response", "omega_max", float, 8.0),
        omega_step=get("response", "omega_step", float, 0.02),
        damping=get("response", "damping", float, 0.0),
        equilibrium_checkpoint=get("response", "equilibrium_checkpoint", str, ""),
    ))
    fluxes = get("flux-scan", "fluxes", _float_list, (ring.fluxbar,))
    if experiment == "flux-scan" and len(fluxes) == 0:
        raise ConfigValidationError("[flux-scan] fluxes must be a non-empty list")
    outdir = get("run", "output_dir", str, "out")
    workers = get("run", "workers", _pos_int, os.cpu_count() or 1)
    strict = get("run", "strict_paper_form", _boolean, False)
    budget = get("run", "budget_bytes", _pos_int, DEFAULT_BUDGET_BYTES)

    if entries:
        (section, key), (_, lineno) = next(iter(entries.items()))
        raise ConfigValidationError(f"unexpected key '{key}' in section [{section}]", lineno)

    return RunConfig(
        experiment=experiment,
        ring=ring,
        bath=bath,
        grid=grid,
        nmax=nmax,
        control=control,
        relax=relax,
        response=response,
        fluxes=tuple(fluxes),
        outdir=outdir,
        workers=workers,
        strict_paper_form=strict,
        budget_bytes=budget,
        text=text,
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _tokenize(text: str) -> dict[tuple[str, str], tuple[str, int]]:
    entries: dict[tuple[str, str], tuple[str, int]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError("unterminated section header", lineno)
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigParseError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigParseError("expected 'key = value'", lineno)
        if section is None:
            raise ConfigParseError("key outside any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].split(";", 1)[0].strip()
        if key not in _SCHEMA[section]:
            raise ConfigParseError(f"unknown key '{key}' in section [{section}]", lineno)
        if (section, key) in entries:
            raise ConfigParseError(f"duplicate key '{key}' in section [{section}]", lineno)
        if not value:
            raise ConfigParseError(f"empty value for '{key}'", lineno)
        entries[(section, key)] = (value, lineno)
    return entries


def _experiment(value: str) -> str:
    if value not in EXPERIMENTS:
        raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {value!r}")
    return value


def _nonneg_int(value: str) -> int:
    out = int(value)
    if out < 0:
        raise ValueError("must be >= 0")
    return out


def _pos_int(value: str) -> int:
    out = int(value)
    if out < 1:
        raise ValueError("must be >= 1")
    return out


def _boolean(value: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _float_list(value: str):
    items = value.replace(",", " ").split()
    return tuple(float(x) for x in items)


def _potential(value: str) -> dict[int, float]:
    out: dict[int, float] = {}
    for item in value.replace(",", " ").split():
        k_str, sep, coef_str = item.partition(":")
        if not sep:
            raise ValueError(f"potential entries are k:coef, got {item!r}")
        k = int(k_str)
        if k < 0:
            raise ValueError("potential indices must be >= 0")
        out[k] = float(coef_str)
    return out
