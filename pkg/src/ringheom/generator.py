"""Right-hand side of the hierarchical equations of motion on the ring.

Each auxiliary field W_i obeys

    dW_i/dt = -(L_qm + decay_i) W_i
              + sum_{a,j} Phi_a W_{i + e_a^j}
              + sum_{a,j} n_a^j(i) Theta_j^a W_{i - e_a^j}

where -L_qm is the drift -((p_n - hbar*fluxbar)/I_S) dW/dtheta plus the
anisotropy counterterm and the optional periodic-potential stencil,
Phi_a = r0 f_a(theta) d/dp raises to deeper fields, and Theta_j^a lowers
with the bath amplitudes from the Pade decomposition.  The theta profiles
are f_x = -sin, f_y = cos (commutator symbols of the coupling operators
r0*cos, r0*sin) and g_x = cos, g_y = sin (anticommutator symbols).

Every output field depends only on its own input field and its +/-
neighbors, all read-only, so the assembly is an embarrassingly parallel
map over hierarchy indices.  The worker splitting is over contiguous
index blocks with disjoint output slices; all per-cell arithmetic runs in
the same order regardless of the block layout, so results are identical
for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NonFiniteState
from .grid import PhaseSpaceGrid
from .hierarchy import HierarchyIndexSet, decay_table
from .pade import BathSpec, PadeSet, hierarchy_coefficients

__all__ = [
    "RingSpec",
    "GeneratorTables",
    "build_tables",
    "liouvillian",
    "potential_kernel",
    "phi",
    "theta0",
    "thetaj",
    "rhs",
    "Generator",
]


@dataclass(frozen=True)
class RingSpec:
    """Geometry, charge and flux of the ring system.

    The gauge enters only through the dimensionless flux: the kinetic
    momentum shift is charge*radius*A_theta = hbar*fluxbar, so the drift
    velocity of row n is (p_n - hbar*fluxbar)/inertia.

    u_coef maps Fourier index k >= 0 to the real coefficient U_k of
    U(theta) = sum_k U_k exp(i k theta) with U_{-k} = U_k, i.e. a cosine
    series U_0 + sum_{k>0} 2 U_k cos(k theta).
    """

    mass: float = 0.5
    radius: float = 1.0
    charge: float = -1.0
    fluxbar: float = 0.0
    u_coef: dict[int, float] = field(default_factory=dict)
    hbar: float = 1.0

    def __post_init__(self):
        if self.mass <= 0 or self.radius <= 0:
            raise ValueError("mass and radius must be > 0")
        if self.hbar <= 0:
            raise ValueError("hbar must be > 0")
        for k in self.u_coef:
            if not isinstance(k, (int, np.integer)) or k < 0:
                raise ValueError("potential indices must be integers >= 0")

    @property
    def inertia(self) -> float:
        return self.mass * self.radius**2


@dataclass(frozen=True)
class GeneratorTables:
    """Precomputed profiles and coefficients for one parameter set."""

    ring: RingSpec
    bath: BathSpec
    grid: PhaseSpaceGrid
    pade_x: PadeSet
    pade_y: PadeSet
    f_x: np.ndarray
    f_y: np.ndarray
    g_x: np.ndarray
    g_y: np.ndarray
    sin2theta: np.ndarray
    ct_amp: float
    drift_v: np.ndarray
    u_stencils: tuple[tuple[int, np.ndarray], ...]
    strict_paper_form: bool

    def pade(self, axis: str) -> PadeSet:
        return self.pade_x if axis == "x" else self.pade_y

    def f(self, axis: str) -> np.ndarray:
        return self.f_x if axis == "x" else self.f_y

    def g(self, axis: str) -> np.ndarray:
        return self.g_x if axis == "x" else self.g_y


def build_tables(
    ring: RingSpec,
    bath: BathSpec,
    grid: PhaseSpaceGrid,
    strict_paper_form: bool = False,
) -> GeneratorTables:
    """Assemble all static per-run tables."""
    theta = grid.theta
    pade_x = hierarchy_coefficients(bath, "x", ring.radius, ring.hbar)
    pade_y = hierarchy_coefficients(bath, "y", ring.radius, ring.hbar)
    ct_amp = (
        ring.radius**2
        * (bath.eta_y * bath.gamma_y - bath.eta_x * bath.gamma_x)
        / (4.0 * ring.hbar)
    )
    drift_v = (grid.p - ring.hbar * ring.fluxbar) / ring.inertia
    return GeneratorTables(
        ring=ring,
        bath=bath,
        grid=grid,
        pade_x=pade_x,
        pade_y=pade_y,
        f_x=-np.sin(theta),
        f_y=np.cos(theta),
        g_x=np.cos(theta),
        g_y=np.sin(theta),
        sin2theta=np.sin(2.0 * theta),
        ct_amp=ct_amp,
        drift_v=drift_v,
        u_stencils=_potential_stencils(ring.u_coef, grid),
        strict_paper_form=strict_paper_form,
    )


def _potential_stencils(u_coef, grid) -> tuple[tuple[int, np.ndarray], ...]:
    # the commutator of U_k exp(ik theta) + c.c. couples rows n -/+ k with a
    # (2 U_k / hbar) sin(k theta) profile; k = 0 commutes and drops out
    stencils = []
    for k in sorted(u_coef):
        if k == 0 or u_coef[k] == 0.0:
            continue
        profile = (2.0 * u_coef[k] / grid.hbar) * np.sin(k * grid.theta)
        stencils.append((k, profile))
    return tuple(stencils)


def potential_kernel(f: np.ndarray, u_coef: dict[int, float], grid: PhaseSpaceGrid) -> np.ndarray:
    """Commutator stencil of the periodic potential.

    For each cosine component, (2 U_k/hbar) sin(k theta) multiplies
    W(p_{n-k}) - W(p_{n+k}).  Returns a zero field for an empty series.
    """
    out = np.zeros_like(f)
    for k, profile in _potential_stencils(u_coef, grid):
        out += profile * (grid.pshift(f, -k) - grid.pshift(f, k))
    return out


def liouvillian(f: np.ndarray, tables: GeneratorTables) -> np.ndarray:
    """-L_qm applied to one field: drift + counterterm + potential."""
    grid = tables.grid
    v = tables.drift_v.reshape((-1, 1))
    out = -v * grid.dtheta(f)
    if tables.ct_amp != 0.0:
        out += tables.ct_amp * tables.sin2theta * (grid.pshift(f, 2) - grid.pshift(f, -2))
    for k, profile in tables.u_stencils:
        out += profile * (grid.pshift(f, -k) - grid.pshift(f, k))
    return out


def phi(f: np.ndarray, axis: str, tables: GeneratorTables) -> np.ndarray:
    """Raising operator r0 * f_axis(theta) * d/dp."""
    return tables.ring.radius * tables.f(axis) * tables.grid.dpn(f)


def theta0(
    f: np.ndarray,
    axis: str,
    tables: GeneratorTables,
    strict_paper_form: bool | None = None,
) -> np.ndarray:
    """j = 0 lowering operator: thermal fluctuation plus dissipation.

    The default form carries the commutator profile f_axis(theta) on the
    fluctuation term, pairing it with the raising operator; the strict
    variant omits that profile.
    """
    if strict_paper_form is None:
        strict_paper_form = tables.strict_paper_form
    pset = tables.pade(axis)
    grid = tables.grid
    fluct = pset.a0 * grid.dpn(f)
    if not strict_paper_form:
        fluct *= tables.f(axis)
    diss = (pset.b0 * tables.g(axis)) * (grid.pshift(f, 1) + grid.pshift(f, -1))
    return fluct - diss


def thetaj(f: np.ndarray, axis: str, j: int, tables: GeneratorTables) -> np.ndarray:
    """j >= 1 lowering operator: aj * f_axis(theta) * d/dp."""
    pset = tables.pade(axis)
    if not 1 <= j <= pset.k:
        raise ValueError(f"j must be in 1..{pset.k}, got {j}")
    return pset.aj[j - 1] * tables.f(axis) * tables.grid.dpn(f)


def rhs(
    state: np.ndarray,
    idxset: HierarchyIndexSet,
    tables: GeneratorTables,
    workers: int = 1,
) -> np.ndarray:
    """Full hierarchy derivative; convenience wrapper over Generator."""
    return Generator(idxset, tables, workers=workers)(state)


class Generator:
    """Reusable assembly engine.

    Calling the instance evaluates the derivative of a stacked state of
    shape (count, rows, M).  Neighbor coupling is applied as sparse
    matrices acting on flattened per-index fields:

        out += A_x @ P_x + A_y @ P_y - (B_x @ (g_x*S) + B_y @ (g_y*S))

    with P_a = r0 f_a dW/dp, S = W(p+1) + W(p-1).  A_a combines the
    raising neighbors (weight 1) with the j >= 1 and the fluctuation
    part of the j = 0 lowering neighbors (weights n_a^j aj/r0 and
    n_a^0 a0/r0); B_a carries n_a^0 b0 on the j = 0 lowering neighbors.
    In the strict variant the fluctuation part acts on dW/dp without the
    f_a profile and is applied as a separate matrix on that field.

    The sparse products run row by row in fixed order, so the result is
    bit-identical for any worker count; workers > 1 splits the index
    range into contiguous blocks with disjoint output slices.

    Instances hold workspace arrays: share one per propagation loop, do
    not call the same instance concurrently.
    """

    accepts_out = True

    def __init__(self, idxset: HierarchyIndexSet, tables: GeneratorTables, workers: int = 1):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.idxset = idxset
        self.tables = tables
        self.workers = int(workers)
        self.grid = tables.grid
        self.count = len(idxset)
        self.decay = decay_table(idxset, tables.pade_x, tables.pade_y)
        self.rhs_evals = 0
        self._lowering = {a: tables.bath.axis(a)[0] != 0.0 for a in ("x", "y")}
        self._build_coupling()
        self._executor = None
        self._bounds = self._chunk_bounds()

        # shared stacked source buffer, one (count, rows, M) page block
        # per slot, and presliced matrix row blocks per worker chunk
        nslots = len(self._slots)
        self._need_s = any(kind == "g" for kind, _, _ in self._slots)
        self._need_d = any(kind == "d" for kind, _, _ in self._slots)
        self._src = np.empty((nslots * self.count, self.grid.rows, self.grid.M))
        if self._kmat is None:
            self._kblk = None
        elif len(self._bounds) == 1:
            self._kblk = [self._kmat]
        else:
            self._kblk = [self._kmat[lo:hi] for lo, hi in self._bounds]

    def _slot_view(self, i, lo, hi):
        base = i * self.count
        return self._src[base + lo : base + hi]

    def _build_coupling(self):
        idx = self.idxset
        tb = self.tables
        r0 = tb.ring.radius
        n = self.count
        nvals = idx.indices.astype(np.float64)
        rows_all = np.arange(n, dtype=np.int64)

        def _csr(triplets):
            rr, cc, vv = zip(*triplets) if triplets else ((), (), ())
            if not rr:
                return None
            mat = sp.coo_matrix(
                (np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))),
                shape=(n, n),
            ).tocsr()
            mat.sum_duplicates()
            return mat if mat.nnz else None

        # per source field: the matrix that maps it into the output
        amat = {"x": [], "y": []}  # acts on P_a = r0 f_a dW/dp
        bmat = {"x": [], "y": []}  # acts on g_a * (W(p+1)+W(p-1)), entered negatively
        smat = []  # strict form: a0-weighted lowering acting on dW/dp
        for c in range(idx.ncomp):
            axis, j = idx.component_axis_j(c)
            pset = tb.pade(axis)
            plus = idx.plus_nbr[:, c]
            ok = plus >= 0
            amat[axis].append((rows_all[ok], plus[ok], np.ones(int(ok.sum()))))
            if not self._lowering[axis]:
                continue
            minus = idx.minus_nbr[:, c]
            ok = minus >= 0
            weight = nvals[ok, c]
            if j == 0:
                bmat[axis].append((rows_all[ok], minus[ok], -pset.b0 * weight))
                if tb.strict_paper_form:
                    smat.append((rows_all[ok], minus[ok], pset.a0 * weight))
                else:
                    amat[axis].append((rows_all[ok], minus[ok], (pset.a0 / r0) * weight))
            else:
                amat[axis].append((rows_all[ok], minus[ok], (pset.aj[j - 1] / r0) * weight))

        # stack all source fields into one block so the coupling is a
        # single sparse product per evaluation
        slots = []
        for axis in ("x", "y"):
            mat = _csr(amat[axis])
            if mat is not None:
                slots.append((mat, "p", axis))
        for axis in ("x", "y"):
            mat = _csr(bmat[axis])
            if mat is not None:
                slots.append((mat, "g", axis))
        mat = _csr(smat)
        if mat is not None:
            slots.append((mat, "d", ""))
        self._slots = [(kind, axis, i) for i, (m, kind, axis) in enumerate(slots)]
        self._kmat = sp.hstack([m for m, _, _ in slots], format="csr") if slots else None

    def __call__(self, state: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if state.shape != (self.count, self.grid.rows, self.grid.M):
            raise ValueError(
                f"state shape {state.shape} does not match "
                f"({self.count}, {self.grid.rows}, {self.grid.M})"
            )
        if out is None:
            out = np.empty_like(state)
        if len(self._bounds) == 1:
            self._phase_local(state, out, 0, self.count)
            self._phase_couple(out, 0, self.count, 0)
        else:
            pool = self._pool()
            list(pool.map(lambda b: self._phase_local(state, out, b[0], b[1]), self._bounds))
            list(
                pool.map(
                    lambda ib: self._phase_couple(out, ib[1][0], ib[1][1], ib[0]),
                    enumerate(self._bounds),
                )
            )
        self.rhs_evals += 1
        if not np.isfinite(out.sum()):
            raise NonFiniteState("rhs produced a non-finite field; reduce the step or deepen the hierarchy")
        return out

    def _pool(self):
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=len(self._bounds))
        return self._executor

    def _chunk_bounds(self):
        w = min(self.workers, self.count)
        if w == 1:
            return [(0, self.count)]
        edges = [self.count * i // w for i in range(w + 1)]
        return [(edges[i], edges[i + 1]) for i in range(w) if edges[i] < edges[i + 1]]

    # phase 1: local stencils into out[lo:hi] and source fields for the
    # coupling phase; touches only rows lo:hi of the shared slot buffer
    def _phase_local(self, state, out, lo, hi):
        tb = self.tables
        grid = self.grid
        y = state[lo:hi]
        o = out[lo:hi]

        np.multiply(grid.dtheta(y), -tb.drift_v[:, None], out=o)
        tmp = np.empty_like(y)
        if tb.ct_amp != 0.0:
            tmp[...] = grid.pshift(y, 2)
            tmp -= grid.pshift(y, -2)
            tmp *= tb.ct_amp * tb.sin2theta
            o += tmp
        for k, profile in tb.u_stencils:
            tmp[...] = grid.pshift(y, -k)
            tmp -= grid.pshift(y, k)
            tmp *= profile
            o += tmp
        np.multiply(y, self.decay[lo:hi, None, None], out=tmp)
        o -= tmp

        if not self._slots:
            return
        d = grid.dpn(y)
        s = grid.psum(y) if self._need_s else None
        r0 = tb.ring.radius
        for kind, axis, i in self._slots:
            view = self._slot_view(i, lo, hi)
            if kind == "p":
                np.multiply(d, r0 * tb.f(axis), out=view)
            elif kind == "g":
                np.multiply(s, tb.g(axis), out=view)
            else:
                view[...] = d

    # phase 2: sparse neighbor coupling; reads the finished slot buffer,
    # writes only out[lo:hi]
    def _phase_couple(self, out, lo, hi, block):
        if self._kmat is None:
            return
        o_flat = out[lo:hi].reshape(hi - lo, -1)
        src_flat = self._src.reshape(self._src.shape[0], -1)
        o_flat += self._kblk[block] @ src_flat
