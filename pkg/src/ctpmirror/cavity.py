"""Mode basis of the 1D cavity at its equilibrium length.

A scalar field in a cavity of length d with Dirichlet walls has the
instantaneous eigenmodes

    phi_k(z; q) = sqrt(2/q) sin(k pi z / q),        k = 1, 2, ...

evaluated here at the equilibrium length q = d, with frequencies
omega_k = k pi / d.  Displacing the movable wall hybridizes the modes; the
mixing is quantified by the dimensionless overlap coefficients

    g[j][k] = (-1)^(k+j) * 2 k j / (k^2 - j^2)      (k != j),   g[k][k] = 0,

which are exactly antisymmetric.  The index convention (second index squared
minus first in the denominator) is fixed here once and for all; only g^2 and
antisymmetric combinations enter any physical kernel, so the choice is
observationally irrelevant but must be consistent.

Completeness of the instantaneous basis ties partial sums of g to an overlap
integral of the length-derivatives of the mode profiles,

    sum_s g[k][s] g[j][s]  ->  d^2 * int_0^d dz  (dphi_k/dq)(dphi_j/dq),

which this module exposes as a convergence diagnostic: the truncated sum
approaches the quadrature value with a ~1/S_max tail.

Mode sums are truncated at K_max.  The physically motivated default ties
K_max to the plasma frequency of the mirror material, K_max =
floor(omega_pl d / pi): modes above omega_pl do not couple to the mirror.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, NumericalError


@dataclass(frozen=True)
class CavitySpec:
    """Geometry and cutoff of the equilibrium cavity (natural units, c = hbar = 1).

    d        : equilibrium length.
    K_max    : number of retained field modes.
    omega_pl : plasma cutoff frequency of the mirror material.
    """

    d: float
    K_max: int
    omega_pl: float

    def __post_init__(self) -> None:
        if not (self.d > 0.0):
            raise DomainError(f"cavity length must be > 0, got d={self.d}")
        if not (isinstance(self.K_max, (int, np.integer)) and self.K_max >= 1):
            raise DomainError(f"K_max must be an integer >= 1, got {self.K_max!r}")
        if not (self.omega_pl > 0.0):
            raise DomainError(f"plasma frequency must be > 0, got {self.omega_pl}")

    @classmethod
    def with_auto_cutoff(cls, d: float, omega_pl: float) -> "CavitySpec":
        """Derive K_max from the plasma frequency: K_max = floor(omega_pl d / pi)."""
        k = math.floor(omega_pl * d / math.pi)
        if k < 1:
            raise DomainError(
                f"omega_pl={omega_pl} admits no cavity mode below cutoff "
                f"(need omega_pl >= pi/d = {math.pi / d})"
            )
        return cls(d=d, K_max=k, omega_pl=omega_pl)

    def mode_frequencies(self) -> np.ndarray:
        """omega_k = k pi / d for k = 1..K_max."""
        return np.arange(1, self.K_max + 1) * (math.pi / self.d)


def mode_frequency(spec: CavitySpec, k: int) -> float:
    """Equilibrium frequency omega_k = k pi / d of mode k, 1 <= k <= K_max."""
    if not (1 <= k <= spec.K_max):
        raise DomainError(f"mode index k={k} outside 1 <= k <= K_max={spec.K_max}")
    return k * math.pi / spec.d


def coupling_coefficient(j: int, k: int) -> float:
    """Closed-form overlap coefficient g[j][k]; zero on the diagonal."""
    if j < 1 or k < 1:
        raise DomainError(f"mode labels must be >= 1, got j={j}, k={k}")
    if j == k:
        return 0.0
    return ((-1.0) ** (k + j)) * (2.0 * k * j) / (k * k - j * j)


@dataclass(frozen=True)
class CouplingMatrix:
    """Dense K_max x K_max overlap matrix; g[j][k] in 0-based storage g[j-1, k-1]."""

    g: np.ndarray

    def __post_init__(self) -> None:
        if self.g.ndim != 2 or self.g.shape[0] != self.g.shape[1]:
            raise DomainError(f"coupling matrix must be square, got shape {self.g.shape}")


def coupling_matrix(spec: CavitySpec) -> CouplingMatrix:
    """Fill the overlap matrix from the closed form.

    Each entry is computed independently (no reductions), so the fill is
    trivially parallel and the result does not depend on evaluation order.
    Antisymmetry is exact: swapping indices negates the denominator, and IEEE
    division by a negated denominator negates the quotient bit-for-bit.
    """
    idx = np.arange(1, spec.K_max + 1, dtype=float)
    jj, kk = np.meshgrid(idx, idx, indexing="ij")
    sign = np.where(((jj + kk) % 2) == 0, 1.0, -1.0)
    denom = kk * kk - jj * jj
    with np.errstate(divide="ignore", invalid="ignore"):
        g = sign * (2.0 * kk * jj) / denom
    np.fill_diagonal(g, 0.0)
    return CouplingMatrix(g=g)


def _profile_length_derivative(k: int, z: np.ndarray, d: float) -> np.ndarray:
    """d phi_k / dq at q = d:  -(1/d) [ phi_k/2 + (k pi z / d) sqrt(2/d) cos(k pi z/d) ]."""
    arg = k * math.pi * z / d
    phi = math.sqrt(2.0 / d) * np.sin(arg)
    return -(0.5 * phi + math.sqrt(2.0 / d) * arg * np.cos(arg)) / d


def mode_overlap_integral(spec: CavitySpec, k: int, j: int, rel_tol: float = 1e-10) -> float:
    """d^2 * int_0^d (dphi_k/dq)(dphi_j/dq) dz by adaptive Gauss-Kronrod quadrature.

    The integrand is a smooth trigonometric polynomial; the quadrature is cheap
    and controlled.  Raises NumericalError if the reported error estimate
    exceeds the requested tolerance.
    """

    def integrand(z: float) -> float:
        return float(
            _profile_length_derivative(k, np.asarray(z), spec.d)
            * _profile_length_derivative(j, np.asarray(z), spec.d)
        )

    val, err = quad(integrand, 0.0, spec.d, epsabs=0.0, epsrel=rel_tol,
                    limit=200 + 20 * max(k, j))
    val *= spec.d ** 2
    err *= spec.d ** 2
    scale = max(abs(val), 1.0)
    if err > 10.0 * rel_tol * scale:
        raise NumericalError(
            f"overlap quadrature for (k={k}, j={j}) did not converge: "
            f"estimated error {err:.3e} exceeds tolerance {rel_tol:.1e} * {scale:.3e}"
        )
    return val


def completeness_residual(spec: CavitySpec, k: int, j: int, S_max: int,
                          rel_tol: float = 1e-10) -> float:
    """| sum_{s=1..S_max} g[k][s] g[j][s]  -  overlap integral |.

    The sum uses the closed-form coefficients directly, so S_max may exceed
    K_max.  The residual decays like ~1/S_max (the summand tail is
    ~ 4 k j / s^2 with a fixed sign).
    """
    if not (1 <= k <= spec.K_max and 1 <= j <= spec.K_max):
        raise DomainError(f"(k={k}, j={j}) outside 1..K_max={spec.K_max}")
    if S_max < max(k, j):
        raise DomainError(f"S_max={S_max} must be >= max(k, j)={max(k, j)}")
    s = np.arange(1, S_max + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        gks = ((-1.0) ** (k + s)) * (2.0 * k * s) / (s * s - k * k)
        gjs = ((-1.0) ** (j + s)) * (2.0 * j * s) / (s * s - j * j)
    gks[int(k) - 1] = 0.0
    gjs[int(j) - 1] = 0.0
    partial = float(np.sum(gks * gjs))
    return abs(partial - mode_overlap_integral(spec, k, j, rel_tol=rel_tol))
