"""Pade spectral decomposition of the Drude bath correlation function.

The thermal part of the bath correlation function involves coth(x) with
x = beta*hbar*omega/2.  We replace it by the [N-1/N] Pade surrogate

    coth(x) ~ 1/x + sum_j 2*etabar_j * x / (x**2 + (xi_j/2)**2),

whose poles xi_j and weights etabar_j come from eigenvalues of two small
symmetric tridiagonal matrices.  The surrogate converges to coth far
faster than the plain Matsubara expansion (whose poles are xi_j = 2*pi*j),
so a handful of terms covers low temperatures.

From the surrogate we build the per-axis coupling coefficients of the
hierarchy: the correlation function becomes a short sum of decaying
exponentials, one per pole,

    C(t) ~ (a0/r0) * exp(-gamma*t) + sum_j (aj/r0) * exp(-nu_j*t),

with nu_j = xi_j/(beta*hbar).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PoleCollision

__all__ = [
    "BathSpec",
    "PadeSet",
    "pade_frequencies",
    "hierarchy_coefficients",
    "coth_surrogate_error",
]

#: relative threshold on |gamma^2 - nu_j^2| below which the coefficients
#: are considered singular
POLE_COLLISION_RTOL = 1e-12


@dataclass(frozen=True)
class BathSpec:
    """Per-axis Drude bath parameters plus the inverse temperature.

    Attributes
    ----------
    eta_x, eta_y : float
        System-bath coupling strengths, >= 0.
    gamma_x, gamma_y : float
        Inverse noise correlation times (Drude cutoffs), > 0.
    k_x, k_y : int
        Number of Pade poles kept per axis, >= 0.
    beta : float
        Inverse temperature, > 0.
    """

    eta_x: float
    eta_y: float
    gamma_x: float
    gamma_y: float
    k_x: int
    k_y: int
    beta: float

    def __post_init__(self):
        for name in ("eta_x", "eta_y"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("gamma_x", "gamma_y", "beta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("k_x", "k_y"):
            k = getattr(self, name)
            if not isinstance(k, (int, np.integer)) or k < 0:
                raise ValueError(f"{name} must be a non-negative integer")

    def axis(self, axis: str) -> tuple[float, float, int]:
        """Return (eta, gamma, K) for axis 'x' or 'y'."""
        if axis == "x":
            return self.eta_x, self.gamma_x, self.k_x
        if axis == "y":
            return self.eta_y, self.gamma_y, self.k_y
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


@dataclass(frozen=True)
class PadeSet:
    """Decay frequencies and hierarchy coupling prefactors for one axis.

    Attributes
    ----------
    axis : str
        'x' or 'y'.
    nu : ndarray, shape (K+1,)
        Decay frequencies; nu[0] = gamma, nu[1:] are the Pade poles
        divided by beta*hbar, strictly increasing.
    xi : ndarray, shape (K,)
        Dimensionless Pade poles.
    etabar : ndarray, shape (K,)
        Pade weights.
    a0 : float
        Fluctuation prefactor of the j=0 lowering operator.
    b0 : float
        Dissipation prefactor of the j=0 lowering operator.
    aj : ndarray, shape (K,)
        Prefactors of the j >= 1 lowering operators.
    """

    axis: str
    nu: np.ndarray
    xi: np.ndarray
    etabar: np.ndarray
    a0: float
    b0: float
    aj: np.ndarray
    k: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "k", len(self.etabar))


def pade_frequencies(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Poles and weights of the [N-1/N] Pade surrogate of coth.

    The poles are xi_j = -2/lam_j for the K negative eigenvalues lam_j of
    the (2K x 2K) symmetric tridiagonal matrix with off-diagonal entries
    1/sqrt((2m+1)(2m+3)), m = 1..2K-1; the weights follow from a second,
    (2K-1)-dimensional matrix of the same family.

    Parameters
    ----------
    k : int
        Number of poles, >= 0.

    Returns
    -------
    xi : ndarray, shape (k,)
        Dimensionless poles, ascending.  xi_j ~ 2*pi*j for small j.
    etabar : ndarray, shape (k,)
        Weights; etabar_j -> 1 for small j at large k.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return np.empty(0), np.empty(0)

    xi = _tridiag_poles(2 * k, offset=3)[:k]
    if k == 1:
        chi2 = np.empty(0)
    else:
        chi2 = _tridiag_poles(2 * k - 1, offset=5)[: k - 1] ** 2

    xi2 = xi**2
    prefactor = 0.5 * k * (2 * k + 3)
    etabar = np.empty(k)
    for j in range(k):
        num = np.prod(chi2 - xi2[j])
        den = np.prod(np.where(np.arange(k) == j, 1.0, xi2 - xi2[j]))
        etabar[j] = prefactor * num / den
    return xi, etabar


def _tridiag_poles(dim: int, offset: int) -> np.ndarray:
    """Ascending values -2/lam over the negative eigenvalues lam of the
    symmetric tridiagonal matrix with off-diagonal 1/sqrt((2m+offset-2)(2m+offset)).
    """
    m = np.arange(1, dim)
    off = 1.0 / np.sqrt((2.0 * m + offset - 2.0) * (2.0 * m + offset))
    mat = np.diag(off, 1)
    mat += mat.T
    lam = np.linalg.eigvalsh(mat)
    # eigenvalues come in +/- pairs (plus a zero for odd dim); the
    # negative half maps to positive poles in ascending order
    neg = lam[lam < 0.0]
    return np.sort(-2.0 / neg)


def hierarchy_coefficients(
    bath: BathSpec, axis: str, r0: float, hbar: float = 1.0
) -> PadeSet:
    """Build the lowering-operator prefactors for one bath axis.

    a0 carries the thermal (fluctuation) amplitude of the Drude pole,
    b0 the temperature-independent dissipation amplitude, and aj the
    amplitudes of the Pade poles:

        a0 = (eta*r0*gamma/beta) * (1 + sum_j 2*etabar_j*gamma^2/(gamma^2 - nu_j^2))
        b0 = eta*r0*gamma^2/2
        aj = -(eta*r0*gamma^2/beta) * 2*etabar_j*nu_j/(gamma^2 - nu_j^2)

    Raises
    ------
    PoleCollision
        If any nu_j comes within a relative 1e-12 of gamma (in squares).
    """
    eta, gamma, k = bath.axis(axis)
    xi, etabar = pade_frequencies(k)
    nu_pade = xi / (bath.beta * hbar)
    nu = np.concatenate(([gamma], nu_pade))

    g2 = gamma * gamma
    denom = g2 - nu_pade**2
    if np.any(np.abs(denom) < POLE_COLLISION_RTOL * g2):
        j = int(np.argmin(np.abs(denom)))
        raise PoleCollision(
            f"axis {axis}: gamma={gamma!r} collides with pole nu_{j + 1}="
            f"{nu_pade[j]!r}; adjust beta, gamma or K"
        )

    bracket = 1.0 + float(np.sum(2.0 * etabar * g2 / denom))
    a0 = eta * r0 * gamma / bath.beta * bracket
    b0 = eta * r0 * g2 / 2.0
    aj = -(eta * r0 * g2 / bath.beta) * 2.0 * etabar * nu_pade / denom
    return PadeSet(axis=axis, nu=nu, xi=xi, etabar=etabar, a0=a0, b0=b0, aj=aj)


def coth_surrogate(padeset: PadeSet, x: np.ndarray) -> np.ndarray:
    """Evaluate the rational coth surrogate at dimensionless x."""
    x = np.asarray(x, dtype=float)
    out = 1.0 / x
    for xi_j, eb in zip(padeset.xi, padeset.etabar):
        out = out + 2.0 * eb * x / (x * x + 0.25 * xi_j * xi_j)
    return out


def coth_surrogate_error(padeset: PadeSet, xmax: float) -> float:
    """Max abs deviation of the surrogate from coth on 1000 points in (0, xmax]."""
    if xmax <= 0:
        raise ValueError("xmax must be > 0")
    x = xmax * np.arange(1, 1001) / 1000.0
    return float(np.max(np.abs(coth_surrogate(padeset, x) - 1.0 / np.tanh(x))))
