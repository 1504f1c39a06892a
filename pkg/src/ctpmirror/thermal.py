"""Thermal occupation factors for the cavity field modes.

Everything downstream (kernels, Casimir energetics, transition probabilities)
consumes the field's initial thermal state through a single function

    z(omega) = 2 n(omega) + 1 = coth(omega / 2T),        omega > 0,

where n(omega) = 1/(exp(omega/T) - 1) is the Bose occupation and the +1 is the
zero-point contribution.  Natural units are used throughout: c = hbar = k_B = 1,
so temperatures are frequencies.

The two-sided spectral sums over signed mode indices require z extended to
negative frequencies.  coth is odd, so the unique consistent extension is

    z(-omega) = -z(omega),

and at T = 0 the factor degenerates to sign(omega).  This odd extension is what
makes the signed-index spectral decomposition reproduce the one-sided +/-
channel kernels (verified by a property test, not assumed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Below |omega|/(2T) = _COTH_SMALL the direct 1/tanh evaluation loses digits;
# switch to the Laurent expansion coth(x) = 1/x + x/3 + O(x^3).
_COTH_SMALL = 1e-8


@dataclass(frozen=True)
class ThermalSpectrum:
    """Thermal state of the field at temperature ``T`` (energy units, k_B = 1)."""

    T: float

    def __post_init__(self) -> None:
        if not (self.T >= 0.0):
            raise DomainError(f"temperature must be >= 0, got T={self.T}")

    def occupation(self, omega):
        """Bose occupation n(omega) for omega > 0; zero at T = 0."""
        w = np.asarray(omega, dtype=float)
        if np.any(w <= 0.0):
            raise DomainError("occupation n(omega) is defined for omega > 0")
        if self.T == 0.0:
            out = np.zeros_like(w)
        else:
            out = 1.0 / np.expm1(w / self.T)
        return out if np.ndim(omega) else float(out)

    def z(self, omega):
        """Fluctuation factor z(omega) = coth(omega/2T), odd in omega.

        T = 0 gives sign(omega).  omega = 0 is the pole of coth and is
        rejected; callers that need the singular k = -j channel must go
        through the regularized weights instead.
        """
        w = np.asarray(omega, dtype=float)
        if np.any(w == 0.0):
            raise DomainError("z(omega) has a pole at omega = 0")
        if self.T == 0.0:
            out = np.sign(w)
        else:
            x = w / (2.0 * self.T)
            out = np.empty_like(x)
            small = np.abs(x) < _COTH_SMALL
            xs = x[small]
            out[small] = 1.0 / xs + xs / 3.0
            xb = x[~small]
            out[~small] = 1.0 / np.tanh(xb)
        return out if np.ndim(omega) else float(out)
