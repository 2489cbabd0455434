"""Discrete phase-space grid and the operators the generator is built from.

The momentum lattice is half-integer, p_n = n*hbar/2 for n = -Np..Np, and
the angle grid is uniform with M points on [0, 2*pi), theta_m = 2*pi*m/M.
theta = 0 is always column 0 (the step-size error estimator reads it) and
theta = pi is column M/2 (M must be even).

Rows outside the momentum window read as zero in every shift or
difference operator: the physical fields decay Gaussian-fast in p, so
truncating the tail this way keeps all operators linear.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["PhaseSpaceGrid", "save_block", "load_block", "field_to_csv"]

BLOCK_MAGIC = b"WDF1"
_HEADER = struct.Struct("<4sIIIdd")  # magic, Np, M, count, t, dt  (32 bytes)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Half-integer momentum lattice times uniform periodic angle grid.

    Attributes
    ----------
    Np : int
        Momentum cutoff; rows are n = -Np..Np, i.e. 2*Np+1 of them.
    M : int
        Number of theta points; even and >= 8.
    hbar : float
        Action scale (default 1).
    """

    Np: int
    M: int
    hbar: float = 1.0

    def __post_init__(self):
        if self.Np < 1:
            raise ValueError("Np must be >= 1")
        if self.M < 8 or self.M % 2:
            raise ValueError("M must be even and >= 8")
        if self.hbar <= 0:
            raise ValueError("hbar must be > 0")

    @property
    def rows(self) -> int:
        return 2 * self.Np + 1

    @cached_property
    def n(self) -> np.ndarray:
        return np.arange(-self.Np, self.Np + 1)

    @cached_property
    def p(self) -> np.ndarray:
        """Momentum values p_n = n*hbar/2."""
        return self.n * (self.hbar / 2.0)

    @cached_property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.M) / self.M

    @cached_property
    def _ik(self) -> np.ndarray:
        # rfft wavenumbers times 1j, Nyquist zeroed so the derivative of
        # the sawtooth mode is 0 (odd differentiation matrix)
        k = np.arange(self.M // 2 + 1, dtype=float)
        k[-1] = 0.0
        return 1j * k

    def zeros(self, count: int | None = None) -> np.ndarray:
        """Fresh field (rows, M) or stacked fields (count, rows, M)."""
        if count is None:
            return np.zeros((self.rows, self.M))
        return np.zeros((count, self.rows, self.M))

    # -- discrete operators; all act on the trailing (rows, M) axes and
    #    broadcast over any leading stack dimensions --

    def pshift(self, f: np.ndarray, k: int) -> np.ndarray:
        """g(p_n) = f(p_{n+k}); rows shifted past the cutoff read zero."""
        if abs(k) > 2 * self.Np:
            raise ValueError("|k| must be <= 2*Np")
        out = np.empty_like(f)
        if k == 0:
            out[...] = f
        elif k > 0:
            out[..., :-k, :] = f[..., k:, :]
            out[..., -k:, :] = 0.0
        else:
            out[..., -k:, :] = f[..., :k, :]
            out[..., :-k, :] = 0.0
        return out

    def dpn(self, f: np.ndarray) -> np.ndarray:
        """Symmetric momentum difference (f(p_{n+1}) - f(p_{n-1}))/hbar."""
        out = np.empty_like(f)
        out[..., 1:-1, :] = f[..., 2:, :]
        out[..., 1:-1, :] -= f[..., :-2, :]
        out[..., 0, :] = f[..., 1, :]
        out[..., -1, :] = f[..., -2, :]
        out[..., -1, :] *= -1.0
        out /= self.hbar
        return out

    def psum(self, f: np.ndarray) -> np.ndarray:
        """Two-sided shift sum f(p_{n+1}) + f(p_{n-1})."""
        out = np.empty_like(f)
        out[..., 1:-1, :] = f[..., 2:, :]
        out[..., 1:-1, :] += f[..., :-2, :]
        out[..., 0, :] = f[..., 1, :]
        out[..., -1, :] = f[..., -2, :]
        return out

    def dtheta(self, f: np.ndarray) -> np.ndarray:
        """Spectral d/dtheta, exact for Fourier modes |k| < M/2."""
        fk = np.fft.rfft(f, axis=-1)
        fk *= self._ik
        return np.fft.irfft(fk, n=self.M, axis=-1)

    def integrate(self, f: np.ndarray) -> float:
        """(hbar/2) * sum_n (2*pi/M) * sum_m f; sums the trailing two axes."""
        return float(f.sum(axis=(-2, -1)) * (self.hbar / 2.0) * (2.0 * np.pi / self.M))

    def integrate_weighted(self, f: np.ndarray, weight: np.ndarray) -> float:
        """Same quadrature with a broadcastable weight profile."""
        return float((f * weight).sum(axis=(-2, -1)) * (self.hbar / 2.0) * (2.0 * np.pi / self.M))


def save_block(path, ados: np.ndarray, grid: PhaseSpaceGrid, t: float = 0.0, dt: float = 0.0) -> None:
    """Write fields as little-endian float64 after a 32-byte header.

    The header packs (magic, Np, M, count, t, dt); the payload is the
    C-order (count, rows, M) array.  A single field may be passed as a
    2-d array and is stored with count = 1.
    """
    if ados.ndim == 2:
        ados = ados[None]
    count, rows, m = ados.shape
    if rows != grid.rows or m != grid.M:
        raise ValueError("field shape does not match the grid")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BLOCK_MAGIC, grid.Np, grid.M, count, t, dt))
        fh.write(np.ascontiguousarray(ados, dtype="<f8").tobytes())


def load_block(path) -> tuple[np.ndarray, int, int, float, float]:
    """Read a field block; returns (ados, Np, M, t, dt)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, np_cut, m, count, t, dt = _HEADER.unpack(header)
        if magic != BLOCK_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {BLOCK_MAGIC!r}")
        payload = fh.read()
    rows = 2 * np_cut + 1
    expected = count * rows * m * 8
    if len(payload) != expected:
        raise ValueError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    ados = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(count, rows, m)
    return ados, np_cut, m, t, dt


def field_to_csv(path, f: np.ndarray, grid: PhaseSpaceGrid) -> None:
    """Snapshot of one field as (n, theta, value) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "theta", "value"])
        for i, n in enumerate(grid.n):
            for m, th in enumerate(grid.theta):
                writer.writerow([n, repr(float(th)), repr(float(f[i, m]))])
