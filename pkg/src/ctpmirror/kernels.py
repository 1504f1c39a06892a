"""Fluctuation and dissipation kernels of the field-dressed mirror.

Tracing the cavity field out of the mirror-field problem leaves the mirror
subject to colored noise and nonlocal dissipation.  Both are built from two
layers of kernels, all finite sums of sinusoids at the equilibrium mode
frequencies omega_k = k pi / d:

single-mode kernels (one per field mode)

    nu_k(t)  =  z_k / (2 omega_k) * cos(omega_k t)          (noise)
    mu_k(t)  = -1   / (2 omega_k) * sin(omega_k t)          (dissipation)

pair kernels (mirror couples to photon *pairs*; two channels, frequencies add
or subtract)

    nu_pm(t; k, j)  =  (z_k z_j +- 1)/8 * cos[(omega_k +- omega_j) t]
    mu_pm(t; k, j)  = -+ (z_k +- z_j)/8 * sin[(omega_k +- omega_j) t]

mirror-level kernels

    N_pm_00(t) = sum_k omega_k^2 nu_pm(t; k, k)             intra-mode pairs
    M_p_00(t)  = sum_k omega_k^2 mu_p(t; k, k)
    N_pm_11(t) = sum_{k,j} g_kj^2 (omega_k -+ omega_j)^2/(omega_k omega_j)
                   * nu_pm(t; k, j)                          inter-mode pairs
    M_pm_11(t) = ...  same weights with mu_pm.

In the two-sided convention (signed indices, omega_{-k} = -omega_k,
z_{-k} = -z_k) every mirror kernel collapses onto the discrete spectral
coefficients

    nu_kj = omega_k omega_j (z_k z_j + 1) / (4 (omega_k + omega_j)^2)
    mu_kj = i omega_k omega_j (z_k + z_j) / (4 (omega_k + omega_j)^2)

supported on the pair frequencies omega_k + omega_j, and the two obey the
fluctuation-dissipation relation nu_kj = -i z(omega_k + omega_j) mu_kj.
The k = -j channel is a removable 0/0; it is only ever consumed through the
regularized weights (omega_k + omega_j)^2 * {nu, mu}_kj, which are finite
everywhere and vanish identically there.

All mode sums here are grouped by integer pair frequency with deterministic
(pairwise / fixed-order) reductions, so sampled kernels are reproducible
bit-for-bit and cost O(K) per time sample rather than O(K^2).
"""

from __future__ import annotations

import math

import numpy as np

from .cavity import CavitySpec, coupling_matrix
from .errors import DomainError
from .thermal import ThermalSpectrum


def _trig_sum(t, freqs: np.ndarray, coefs: np.ndarray, trig) -> np.ndarray | float:
    """sum_i coefs[i] * trig(freqs[i] * t), vectorized over t in bounded blocks."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(tt.shape, dtype=float)
    if freqs.size == 0:
        out[...] = 0.0
    else:
        block = max(1, 4_000_000 // freqs.size)
        for i in range(0, tt.size, block):
            out[i:i + block] = trig(np.multiply.outer(tt[i:i + block], freqs)) @ coefs
    return out if np.ndim(t) else float(out[0])


class MirrorKernels:
    """Time-domain kernel evaluators plus the signed-index spectral tables.

    Construction precomputes the grouped harmonic-line tables; evaluation and
    table lookups afterwards are pure and safe for concurrent reads.
    """

    def __init__(self, cavity: CavitySpec, thermal: ThermalSpectrum):
        self.cavity = cavity
        self.thermal = thermal
        K = cavity.K_max
        d = cavity.d
        w = cavity.mode_frequencies()                      # (K,)
        zk = np.asarray(thermal.z(w), dtype=float)         # (K,)
        self._w = w
        self._zk = zk

        # --- 00 kernels: lines at 2 omega_k -------------------------------
        self._freqs_00 = 2.0 * w
        self._n00_plus_coefs = w ** 2 * (zk ** 2 + 1.0) / 8.0
        self._n00_minus_const = float(np.sum(w ** 2 * (zk ** 2 - 1.0) / 8.0))
        self._m00_coefs = -(w ** 2) * zk / 4.0

        # --- 11 kernels: double sums grouped by integer pair frequency ----
        g2 = coupling_matrix(cavity).g ** 2                # (K,K), zero diagonal
        kk = np.arange(1, K + 1)
        ki, kj = np.meshgrid(kk, kk, indexing="ij")
        wi, wj = ki * math.pi / d, kj * math.pi / d
        zi, zj = zk[ki - 1], zk[kj - 1]
        off = ki != kj
        pref_plus = np.zeros_like(g2)
        pref_minus = np.zeros_like(g2)
        pref_plus[off] = g2[off] * (wi[off] - wj[off]) ** 2 / (wi[off] * wj[off])
        pref_minus[off] = g2[off] * (wi[off] + wj[off]) ** 2 / (wi[off] * wj[off])

        # plus channel lives on m = k + j, minus channel on m = k - j; sin is
        # odd so the sign of (k - j) folds into the coefficient, cos is even.
        m_plus = (ki + kj).ravel()
        m_minus_abs = np.abs(ki - kj).ravel()
        sgn_minus = np.sign(ki - kj).astype(float)

        def grouped(m_idx, values, length):
            return np.bincount(m_idx, weights=values.ravel(), minlength=length)[1:]

        nline = 2 * K
        base = math.pi / d
        self._freqs_11 = base * np.arange(1, nline + 1)
        self._n11_coefs = (
            grouped(m_plus, pref_plus * (zi * zj + 1.0) / 8.0, nline + 1)
            + grouped(m_minus_abs, pref_minus * (zi * zj - 1.0) / 8.0, nline + 1)
        )
        self._m11_plus_coefs = grouped(m_plus, -pref_plus * (zi + zj) / 8.0, nline + 1)
        self._m11_minus_coefs = grouped(
            m_minus_abs, sgn_minus * pref_minus * (zi - zj) / 8.0, nline + 1
        )
        self._m11_coefs = self._m11_plus_coefs + self._m11_minus_coefs

        # --- signed-index spectral tables ----------------------------------
        # Index order [-K..-1, 1..K]; z at negative frequencies is -z(|omega|)
        # *by construction*, so odd-symmetry cancellations are exact in
        # floating point, not at the mercy of libm sign symmetry.
        self._ks = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
        self._w_signed = self._ks * (math.pi / d)
        self._z_signed = np.concatenate([-zk[::-1], zk])

    # ------------------------------------------------------------------ #
    # single-mode and pair kernels                                        #
    # ------------------------------------------------------------------ #

    def _check_mode(self, k: int) -> int:
        if not (1 <= k <= self.cavity.K_max):
            raise DomainError(f"mode index k={k} outside 1..K_max={self.cavity.K_max}")
        return int(k)

    def micro_nu(self, k: int, t):
        """Single-mode noise kernel nu_k(t) = z_k/(2 omega_k) cos(omega_k t)."""
        k = self._check_mode(k)
        w = self._w[k - 1]
        return self._zk[k - 1] / (2.0 * w) * np.cos(w * np.asarray(t, dtype=float))

    def micro_mu(self, k: int, t):
        """Single-mode dissipation kernel mu_k(t) = -sin(omega_k t)/(2 omega_k)."""
        k = self._check_mode(k)
        w = self._w[k - 1]
        return -np.sin(w * np.asarray(t, dtype=float)) / (2.0 * w)

    def pair_kernels(self, k: int, j: int, t):
        """(nu_plus, nu_minus, mu_plus, mu_minus) for the mode pair (k, j)."""
        k, j = self._check_mode(k), self._check_mode(j)
        t = np.asarray(t, dtype=float)
        wk, wj = self._w[k - 1], self._w[j - 1]
        zkk, zjj = self._zk[k - 1], self._zk[j - 1]
        nu_p = (zkk * zjj + 1.0) / 8.0 * np.cos((wk + wj) * t)
        nu_m = (zkk * zjj - 1.0) / 8.0 * np.cos((wk - wj) * t)
        mu_p = -(zkk + zjj) / 8.0 * np.sin((wk + wj) * t)
        mu_m = (zkk - zjj) / 8.0 * np.sin((wk - wj) * t)
        return nu_p, nu_m, mu_p, mu_m

    # ------------------------------------------------------------------ #
    # mirror-level kernels (truncated at K_max)                           #
    # ------------------------------------------------------------------ #

    def kernel_00(self, t):
        """(N_plus_00(t), N_minus_00(t), M_plus_00(t)).

        N_minus_00 is time independent (a zero-frequency term with no
        dissipative counterpart); it vanishes at T = 0 and is reported as a
        diagnostic only.
        """
        n_plus = _trig_sum(t, self._freqs_00, self._n00_plus_coefs, np.cos)
        m_plus = _trig_sum(t, self._freqs_00, self._m00_coefs, np.sin)
        n_minus = np.broadcast_to(self._n00_minus_const, np.shape(t)).copy() \
            if np.ndim(t) else self._n00_minus_const
        return n_plus, n_minus, m_plus

    def kernel_11(self, t):
        """(N_plus_11 + N_minus_11, M_plus_11 + M_minus_11) at time(s) t."""
        n = _trig_sum(t, self._freqs_11, self._n11_coefs, np.cos)
        m = _trig_sum(t, self._freqs_11, self._m11_coefs, np.sin)
        return n, m

    def kernel_11_rate(self, t):
        """d/dt [M_plus_11 + M_minus_11], differentiated line by line.

        The kernels are finite sinusoid sums, so the derivative is exact
        (coefficients multiplied by their line frequencies), never a finite
        difference.
        """
        return _trig_sum(t, self._freqs_11, self._m11_coefs * self._freqs_11, np.cos)

    # sampled-line access for the memory-force machinery
    @property
    def dissipation_00_lines(self):
        """(freqs, coefs) with M_plus_00(t) = sum coefs * sin(freqs t)."""
        return self._freqs_00, self._m00_coefs

    @property
    def dissipation_11_rate_lines(self):
        """(freqs, coefs) with d/dt[M_11 sum](t) = sum coefs * cos(freqs t)."""
        return self._freqs_11, self._m11_coefs * self._freqs_11

    # ------------------------------------------------------------------ #
    # signed-index spectral side                                          #
    # ------------------------------------------------------------------ #

    def signed_indices(self) -> np.ndarray:
        """All signed mode labels [-K..-1, 1..K]."""
        return self._ks.copy()

    def _signed_lookup(self, k):
        k = np.asarray(k)
        K = self.cavity.K_max
        if np.any(k == 0) or np.any(np.abs(k) > K):
            raise DomainError(f"signed mode index must satisfy 1 <= |k| <= {K}")
        idx = np.where(k > 0, k + K - 1, k + K)
        return self._w_signed[idx], self._z_signed[idx]

    def _pair_factors(self, k, j):
        """Cancellation-free (z_k z_j + 1, z_k + z_j) for signed index arrays.

        Written in terms of t_k = z_|k| - 1 = 2/expm1(omega_|k| / T): products
        and sums of the t's only, never differences of nearly equal coths, so
        mixed-sign pairs keep full relative precision (the fluctuation-
        dissipation identity then holds to a few ulp across the whole table).
        The argument differences entering the mixed-sign channel are formed
        from integer index differences, which are exact.
        """
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        j = np.atleast_1d(np.asarray(j, dtype=np.int64))
        k, j = np.broadcast_arrays(k, j)
        sk = np.sign(k).astype(float)
        sj = np.sign(j).astype(float)
        T = self.thermal.T
        if T == 0.0:
            return sk * sj + 1.0, sk + sj
        a = math.pi / (self.cavity.d * T)            # 2 u_1, with u = omega/(2T)
        ak = np.abs(k).astype(float) * a             # 2 u_k
        aj = np.abs(j).astype(float) * a
        with np.errstate(over="ignore"):
            tk = 2.0 / np.expm1(ak)
            tj = 2.0 / np.expm1(aj)
        same = sk == sj
        P = np.where(same, 2.0 + tk + tj + tk * tj, -(tk + tj + tk * tj))
        S = np.empty_like(P)
        S[same] = (sk * (2.0 + tk + tj))[same]
        mixed = ~same
        if np.any(mixed):
            akm, ajm = ak[mixed], aj[mixed]
            da = (np.abs(j) - np.abs(k))[mixed].astype(float) * a   # exact
            # t_k - t_j = 2 expm1(2(u_j - u_k)) / [(1 - e^{-2u_k}) expm1(2u_j)]
            with np.errstate(over="ignore", invalid="ignore"):
                dt = 2.0 * np.expm1(da) / (-np.expm1(-akm) * np.expm1(ajm))
            # where t_j has underflowed, the difference is just t_k (and vice versa)
            big_j = ajm > 700.0
            dt[big_j] = tk[mixed][big_j]
            big_k = (akm > 700.0) & ~big_j
            dt[big_k] = -tj[mixed][big_k]
            S[mixed] = sk[mixed] * dt
        return P, S

    def signed_frequency(self, k):
        """omega_k for signed k (omega_{-k} = -omega_k)."""
        w, _ = self._signed_lookup(k)
        return w

    def signed_values(self, k):
        """(omega_k, z_k) for signed indices, with the odd z extension."""
        return self._signed_lookup(k)

    def spectral_coefficients(self, k, j):
        """(nu_kj, mu_kj) for signed indices; mu is purely imaginary.

        Raises on the singular channel omega_k + omega_j = 0; use
        :meth:`regularized_weight` there.
        """
        if np.any(np.asarray(k) + np.asarray(j) == 0):
            raise DomainError(
                "singular channel k = -j (omega_k + omega_j = 0); "
                "use regularized_weight instead"
            )
        wk, _ = self._signed_lookup(k)
        wj, _ = self._signed_lookup(j)
        P, S = self._pair_factors(k, j)
        denom = 4.0 * (wk + wj) ** 2
        nu = wk * wj * P.reshape(np.shape(wk)) / denom
        mu = 1j * wk * wj * S.reshape(np.shape(wk)) / denom
        if np.ndim(k) or np.ndim(j):
            return nu, mu
        return float(nu), complex(mu)

    def regularized_weight(self, k, j):
        """((omega_k+omega_j)^2 nu_kj, (omega_k+omega_j)^2 mu_kj) from the
        cancelled closed form; finite for all signed (k, j) including k = -j,
        where both weights vanish by the oddness of z (exactly at T = 0 for
        the noise weight, at every T for the dissipation weight)."""
        wk, _ = self._signed_lookup(k)
        wj, _ = self._signed_lookup(j)
        P, S = self._pair_factors(k, j)
        w_nu = wk * wj * P.reshape(np.shape(wk)) / 4.0
        w_mu = 1j * wk * wj * S.reshape(np.shape(wk)) / 4.0
        if np.ndim(k) or np.ndim(j):
            return w_nu, w_mu
        return float(w_nu), complex(w_mu)

    def fdt_max_relative_deviation(self) -> float:
        """max over the table of |nu_kj - z(omega_k+omega_j) Im(mu_kj)| / |nu_kj|.

        The fluctuation-dissipation relation nu_kj = -i z_{k+j} mu_kj is the
        coth addition identity; this diagnostic evaluates both sides
        independently (z at the sum frequency comes from the thermal module,
        not from the pair factors).
        """
        ks = self._ks
        ka, ja = np.meshgrid(ks, ks, indexing="ij")
        live = (ka + ja) != 0
        ka, ja = ka[live], ja[live]
        wk, _ = self._signed_lookup(ka)
        wj, _ = self._signed_lookup(ja)
        w_sum = wk + wj
        nu, mu = self.spectral_coefficients(ka, ja)
        rhs = np.asarray(self.thermal.z(w_sum)) * mu.imag
        scale = np.maximum(np.abs(nu), 1e-300)
        return float(np.max(np.abs(nu - rhs) / scale))

    # ------------------------------------------------------------------ #
    # mass renormalization diagnostic                                     #
    # ------------------------------------------------------------------ #

    def mass_shift(self, sigma: float) -> float:
        """sum_{k,j} g_kj^2 nu_k(0) e^{-sigma omega_k}, a regulator-dependent
        inertia renormalization.

        Diagnostic only: the assembled effective dynamics must *exclude* this
        term (the velocity-squared pieces of the first- and second-order
        back-action cancel it exactly), so nothing downstream consumes it.
        """
        if not (sigma > 0.0):
            raise DomainError(f"regulator time must be > 0, got sigma={sigma}")
        g2 = coupling_matrix(self.cavity).g ** 2
        nu0 = self._zk / (2.0 * self._w)
        return float(np.sum(g2.sum(axis=1) * nu0 * np.exp(-sigma * self._w)))
