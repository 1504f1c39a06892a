"""Mirror trajectories on uniform time grids and their spectra.

The Fourier convention used everywhere in this package is

    xt(omega) = (1/2pi) int dt x(t) e^{-i omega t},
    x(t)      =        int domega xt(omega) e^{+i omega t},

so Parseval reads  int |x|^2 dt = 2pi int |xt|^2 domega.  For a sampled pulse
that decays inside the window the discrete transform  (dt/2pi) sum_n x_n
e^{-i omega t_n}  approximates the integral with spectrally small error, and
evaluating that sum directly at an arbitrary frequency *is* the exact
band-limited (Dirichlet-kernel) interpolation of the DFT grid values.  The
energy formulas sample spectra at mode-pair sum frequencies that are not
grid-aligned, so :meth:`Spectrum.at` exposes exactly this evaluation.

Velocities, when not supplied analytically or by the solver, come from
4th-order centered finite differences (one-sided at the edges).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError

#: relative displacement |x|/d above which the small-displacement expansion
#: of the interaction is suspect
DISPLACEMENT_RATIO_DEFAULT = 0.05


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_n = t0 + n dt, n = 0..n-1."""

    t0: float
    dt: float
    n: int

    def __post_init__(self) -> None:
        if not (self.dt > 0.0):
            raise DomainError(f"grid step must be > 0, got dt={self.dt}")
        if self.n < 2:
            raise DomainError(f"grid needs at least 2 samples, got n={self.n}")

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def span(self) -> float:
        return self.dt * (self.n - 1)

    @property
    def midpoint(self) -> float:
        return self.t0 + 0.5 * self.span


def finite_difference_velocity(x: np.ndarray, dt: float) -> np.ndarray:
    """4th-order accurate first derivative on a uniform grid.

    Centered 5-point stencil in the interior, one-sided 5-point stencils for
    the two points at each edge.  Needs at least 5 samples.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 5:
        raise DomainError(f"need >= 5 samples for 4th-order differences, got {n}")
    v = np.empty_like(x)
    v[2:-2] = (8.0 * (x[3:-1] - x[1:-3]) - (x[4:] - x[:-4])) / (12.0 * dt)
    fwd = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * dt)
    v[0] = fwd @ x[:5]
    v[1] = fwd @ x[1:6]
    v[-1] = -(fwd @ x[-1:-6:-1])
    v[-2] = -(fwd @ x[-2:-7:-1])
    return v


@dataclass
class Trajectory:
    """Uniformly sampled mirror displacement, with optional velocities."""

    t0: float
    dt: float
    x: np.ndarray
    v: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        if self.dt <= 0.0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.x.ndim != 1 or self.x.size < 2:
            raise DomainError("trajectory needs a 1-D sample array with >= 2 entries")
        if self.v is not None:
            self.v = np.asarray(self.v, dtype=float)
            if self.v.shape != self.x.shape:
                raise DomainError("velocity samples must match displacement samples")

    @property
    def n(self) -> int:
        return self.x.size

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def velocities(self) -> np.ndarray:
        """Stored velocities if present, else 4th-order finite differences."""
        if self.v is not None:
            return self.v
        return finite_difference_velocity(self.x, self.dt)

    def check_displacement_ratio(self, d: float,
                                 threshold: float = DISPLACEMENT_RATIO_DEFAULT) -> float:
        """Warn when max|x|/d exceeds the small-displacement threshold."""
        ratio = float(np.max(np.abs(self.x)) / d)
        if ratio > threshold:
            warnings.warn(
                f"max|x|/d = {ratio:.3g} exceeds {threshold}; the quadratic "
                "small-displacement treatment is questionable", stacklevel=2)
        return ratio

    def reversed(self) -> "Trajectory":
        """Time-reversed copy on the same grid."""
        v = None if self.v is None else -self.v[::-1].copy()
        return Trajectory(t0=self.t0, dt=self.dt, x=self.x[::-1].copy(), v=v)


def gaussian_pulse(A: float, tau: float, grid: TimeGrid) -> Trajectory:
    """x(t) = A exp(-(t - t_mid)^2 / tau^2), centered on the grid midpoint.

    The grid must span at least +-6 tau about the midpoint so the pulse decays
    to below float precision at the endpoints.
    """
    if not (tau > 0.0):
        raise DomainError(f"pulse width must be > 0, got tau={tau}")
    if grid.span < 12.0 * tau:
        raise DomainError(
            f"grid span {grid.span:.4g} too short: need >= 12*tau = {12 * tau:.4g} "
            "(+-6 tau about the midpoint)")
    t = grid.times() - grid.midpoint
    return Trajectory(t0=grid.t0, dt=grid.dt, x=A * np.exp(-(t / tau) ** 2))


def windowed_sine(A: float, Omega_d: float, n_cycles: float, ramp: float,
                  grid: TimeGrid) -> Trajectory:
    """Monochromatic displacement at drive frequency Omega_d under a C^1
    raised-cosine (Tukey) envelope; exactly zero outside its support.

    ``n_cycles`` is the total drive duration in carrier cycles, ``ramp`` the
    length of each cosine ramp in cycles (>= 1, and n_cycles >= 2 ramp).
    """
    if not (Omega_d > 0.0):
        raise DomainError(f"drive frequency must be > 0, got {Omega_d}")
    if ramp < 1.0:
        raise DomainError(f"ramp must be >= 1 cycle, got {ramp}")
    if n_cycles < 2.0 * ramp:
        raise DomainError(f"n_cycles={n_cycles} must cover both ramps (>= {2 * ramp})")
    cycle = 2.0 * np.pi / Omega_d
    duration = n_cycles * cycle
    if grid.span < duration:
        raise DomainError(
            f"grid span {grid.span:.4g} shorter than drive duration {duration:.4g}")
    s = grid.times() - (grid.midpoint - 0.5 * duration)   # time since drive start
    r = ramp * cycle
    env = np.zeros(grid.n)
    inside = (s >= 0.0) & (s <= duration)
    si = s[inside]
    e = np.ones_like(si)
    up = si < r
    e[up] = 0.5 * (1.0 - np.cos(np.pi * si[up] / r))
    down = si > duration - r
    e[down] = 0.5 * (1.0 - np.cos(np.pi * (duration - si[down]) / r))
    env[inside] = e
    x = np.zeros(grid.n)
    x[inside] = A * env[inside] * np.sin(Omega_d * si)
    return Trajectory(t0=grid.t0, dt=grid.dt, x=x)


@dataclass
class Spectrum:
    """Discrete spectrum xt(omega) of a sampled trajectory.

    ``omega``/``xt`` hold the DFT-grid values (ascending frequency).  ``at``
    evaluates the same finite-window transform at arbitrary frequencies,
    which for a time-limited signal is the exact band-limited interpolation
    of the grid values.
    """

    omega: np.ndarray
    xt: np.ndarray
    _t: np.ndarray = field(repr=False)
    _x: np.ndarray = field(repr=False)

    @property
    def domega(self) -> float:
        return float(self.omega[1] - self.omega[0])

    def at(self, omegas):
        """xt(omega) = (dt/2pi) sum_n x_n e^{-i omega t_n} at arbitrary omega."""
        w = np.atleast_1d(np.asarray(omegas, dtype=float))
        dt = float(self._t[1] - self._t[0])
        out = np.empty(w.shape, dtype=complex)
        block = max(1, 2_000_000 // self._t.size)
        for i in range(0, w.size, block):
            phase = np.exp(-1j * np.multiply.outer(w[i:i + block], self._t))
            out[i:i + block] = phase @ self._x * (dt / (2.0 * np.pi))
        return out if np.ndim(omegas) else complex(out[0])

    def power_at(self, omegas):
        """|xt(omega)|^2 at arbitrary frequencies."""
        return np.abs(self.at(omegas)) ** 2


def spectrum_of(traj: Trajectory, endpoint_tol: float = 1e-12) -> Spectrum:
    """Discrete approximation of (1/2pi) int x(t) e^{-i omega t} dt.

    Requires the samples to have decayed at both window ends (below
    ``endpoint_tol`` of the peak); otherwise the finite-window transform is
    contaminated by truncation and the caller should window the data first.
    """
    x = traj.x
    peak = float(np.max(np.abs(x)))
    if peak > 0.0:
        edge = max(abs(x[0]), abs(x[-1]))
        if edge > endpoint_tol * peak:
            raise DomainError(
                f"trajectory endpoints have not decayed (|x_edge|/|x_peak| = "
                f"{edge / peak:.3e} > {endpoint_tol:.1e}); window the signal first")
    n, dt = traj.n, traj.dt
    t = traj.times()
    omega = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, d=dt))
    xt = np.fft.fftshift(np.fft.fft(x)) * (dt / (2.0 * np.pi))
    xt *= np.exp(-1j * omega * traj.t0)
    return Spectrum(omega=omega, xt=xt, _t=t, _x=x.copy())


def inverse_spectrum(spec: Spectrum) -> np.ndarray:
    """Reconstruct the time samples, x(t_n) = sum_m xt_m e^{i omega_m t_n} domega."""
    phases = np.exp(1j * np.multiply.outer(spec._t, spec.omega))
    return np.real(phases @ spec.xt) * spec.domega


def parseval_residual(traj: Trajectory, spec: Spectrum) -> float:
    """Relative mismatch of int |x|^2 dt against 2pi int |xt|^2 domega."""
    e_time = float(np.sum(traj.x ** 2) * traj.dt)
    e_freq = float(2.0 * np.pi * np.sum(np.abs(spec.xt) ** 2) * spec.domega)
    return abs(e_time - e_freq) / max(e_time, 1e-300)
