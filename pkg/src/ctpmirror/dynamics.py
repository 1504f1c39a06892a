"""Optical back-reaction forces and the semiclassical mirror dynamics.

The field exerts two memory forces on the mirror, both causal convolutions
against the dissipation kernels of :mod:`ctpmirror.kernels`:

    F_x(t)    = -(4/d^2) int_{t_i}^{t} ds  M_plus_00(t - s) x(s)
    F_xdot(t) = +(1/d^2) int_{t_i}^{t} ds  d/dt[M_11sum](t - s) xdot(s)

and the mean displacement obeys  m xddot + V'(x) = F_x + F_xdot.

Note on the prefactors: the quadratic effective action is naturally written in
the relative displacement y = x/d, so each force carries 1/d^2 when expressed
in x.  This normalization is also the one consistent with the spectral
dissipated-energy formulas in :mod:`ctpmirror.energetics` (prefactor
2 pi^2/d^2), which is what the energy-balance check exercises.

Memory integrals are discretized with trapezoidal weights on the trajectory
grid and start at the grid origin (no history before t_i); trajectories used
for quantitative energy checks must therefore vanish near the grid start.
The direct evaluation costs O(N^2) but each output sample is an independent
fixed-order dot product, so forces are causal bit-for-bit: perturbing x(s)
for s > t cannot change F(t).  An optional O(N K) sliding phasor recursion
(``accel``) exploits the kernels being finite sinusoid sums; it is validated
against the direct sums to 1e-10.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cavity import CavitySpec
from .errors import DomainError, NumericalError
from .kernels import MirrorKernels
from .trajectory import TimeGrid, Trajectory


@dataclass(frozen=True)
class MirrorSpec:
    """Mirror mass and confining potential.

    ``Omega`` > 0 selects the harmonic trap V = m Omega^2 x^2 / 2; ``Omega``
    None means a free mirror.  ``vprime`` overrides both with a user-supplied
    V'(x) (e.g. from tabulated data via :meth:`from_tabulated`).
    """

    m: float
    Omega: Optional[float] = None
    vprime: Optional[Callable[[float], float]] = None

    def __post_init__(self) -> None:
        if not (self.m > 0.0):
            raise DomainError(f"mirror mass must be > 0, got m={self.m}")
        if self.Omega is not None and self.Omega < 0.0:
            raise DomainError(f"trap frequency must be >= 0, got {self.Omega}")

    @classmethod
    def from_tabulated(cls, m: float, x_nodes, V_nodes) -> "MirrorSpec":
        from scipy.interpolate import CubicSpline
        dV = CubicSpline(np.asarray(x_nodes, float), np.asarray(V_nodes, float)).derivative()
        return cls(m=m, vprime=lambda x: float(dV(x)))

    def potential_gradient(self, x: float) -> float:
        """V'(x) for the configured potential."""
        if self.vprime is not None:
            return self.vprime(x)
        if self.Omega:
            return self.m * self.Omega ** 2 * x
        return 0.0

    @property
    def x_zpf(self) -> float:
        """Zero-point displacement amplitude (1/(2 m Omega))^{1/2}."""
        if not self.Omega:
            raise DomainError("x_zpf needs a harmonic trap (Omega > 0)")
        return 1.0 / math.sqrt(2.0 * self.m * self.Omega)


def coupling_parameter(mirror: MirrorSpec, cavity: CavitySpec) -> float:
    """Perturbative parameter lambda = (x_zpf / d) (omega_pl / Omega).

    Measures the single-photon radiation-pressure strength against the
    mechanical quantum; the quadratic treatment assumes lambda < 1.
    """
    if not mirror.Omega:
        raise DomainError("coupling parameter undefined for a free mirror (Omega = 0)")
    return (mirror.x_zpf / cavity.d) * (cavity.omega_pl / mirror.Omega)


# --------------------------------------------------------------------------- #
# forces on a prescribed trajectory                                            #
# --------------------------------------------------------------------------- #

def _memory_prefactors(kernels: MirrorKernels) -> tuple[float, float]:
    d = kernels.cavity.d
    return -4.0 / d ** 2, 1.0 / d ** 2


def force_histories(traj: Trajectory, kernels: MirrorKernels) -> tuple[np.ndarray, np.ndarray]:
    """(F_x, F_xdot) sampled on the whole trajectory grid.

    Uses direct (non-FFT) convolution so every output depends only on inputs
    at earlier or equal times, bit-for-bit.
    """
    traj.check_displacement_ratio(kernels.cavity.d)
    n, dt = traj.n, traj.dt
    u = dt * np.arange(n)
    _, _, m00 = kernels.kernel_00(u)
    md11 = kernels.kernel_11_rate(u)
    x = traj.x
    v = traj.velocities()
    pref_x, pref_v = _memory_prefactors(kernels)
    conv_x = np.convolve(x, m00)[:n]
    f_x = pref_x * dt * (conv_x - 0.5 * x[0] * m00)          # m00[0] = 0 exactly
    conv_v = np.convolve(v, md11)[:n]
    f_v = pref_v * dt * (conv_v - 0.5 * v[0] * md11 - 0.5 * v * md11[0])
    return f_x, f_v


def force_x(traj: Trajectory, kernels: MirrorKernels, t_index: int) -> float:
    """Position-coupled memory force at grid index ``t_index``."""
    n = traj.n
    if not (0 <= t_index < n):
        raise DomainError(f"t_index={t_index} outside grid 0..{n - 1}")
    dt = traj.dt
    u = dt * np.arange(t_index + 1)
    _, _, m00 = kernels.kernel_00(u)
    pref_x, _ = _memory_prefactors(kernels)
    xs = traj.x[:t_index + 1]
    acc = float(np.dot(xs, m00[::-1])) - 0.5 * xs[0] * m00[-1]
    return pref_x * dt * acc


def force_xdot(traj: Trajectory, kernels: MirrorKernels, t_index: int) -> float:
    """Velocity-coupled memory force at grid index ``t_index``."""
    n = traj.n
    if not (0 <= t_index < n):
        raise DomainError(f"t_index={t_index} outside grid 0..{n - 1}")
    dt = traj.dt
    u = dt * np.arange(t_index + 1)
    md11 = kernels.kernel_11_rate(u)
    _, pref_v = _memory_prefactors(kernels)
    vs = traj.velocities()[:t_index + 1]
    acc = float(np.dot(vs, md11[::-1])) - 0.5 * vs[0] * md11[-1] - 0.5 * vs[-1] * md11[0]
    return pref_v * dt * acc


# --------------------------------------------------------------------------- #
# self-consistent evolution                                                    #
# --------------------------------------------------------------------------- #

@dataclass
class EvolutionResult:
    """Solution of the back-reaction equation of motion plus force histories."""

    trajectory: Trajectory
    force_x: np.ndarray
    force_xdot: np.ndarray
    diagnostics: dict = field(default_factory=dict)


class _DirectMemory:
    """Trapezoid memory sums by explicit dot products over the history."""

    def __init__(self, m00: np.ndarray, md11: np.ndarray):
        self.m00 = m00
        self.md11 = md11

    def position_sum(self, x_hist: np.ndarray, n: int) -> float:
        # endpoint x_n multiplies m00[0] = 0, so the result is endpoint-free
        k = self.m00[:n + 1][::-1]
        return float(np.dot(x_hist[:n + 1], k)) - 0.5 * x_hist[0] * self.m00[n]

    def velocity_sum_partial(self, v_hist: np.ndarray, n: int) -> float:
        """All terms except the endpoint's own (trapezoid-weighted) term."""
        if n == 0:
            return -0.5 * v_hist[0] * self.md11[0]
        k = self.md11[1:n + 1][::-1]
        return float(np.dot(v_hist[:n], k)) - 0.5 * v_hist[0] * self.md11[n]

    def endpoint_weight(self) -> float:
        return 0.5 * self.md11[0]


class _RecursiveMemory:
    """Same sums via per-line complex phasor accumulators, O(K) per step.

    With M(u) = sum_i c_i sin(f_i u) and C_i(n) = sum_{m<=n} x_m e^{i f_i (t_n - t_m)},
    the history sum is sum_i c_i Im C_i(n); the accumulators update by one
    phasor rotation and one sample per step.
    """

    def __init__(self, kernels: MirrorKernels, dt: float):
        f00, c00 = kernels.dissipation_00_lines
        f11, c11 = kernels.dissipation_11_rate_lines
        self.c00, self.c11 = c00, c11
        self.rot00 = np.exp(1j * f00 * dt)
        self.rot11 = np.exp(1j * f11 * dt)
        self.md11_0 = float(np.sum(c11))       # cos lines at u = 0
        self.m00_n = 0.0                       # m00(t_n - t_0), tracked incrementally
        self.md11_n = 0.0
        self._ph00 = np.ones_like(self.rot00)  # e^{i f (t_n - t_0)}
        self._ph11 = np.ones_like(self.rot11)
        self.acc00 = None
        self.acc11 = None

    def start(self, x0: float, v0: float) -> None:
        self.acc00 = x0 * np.ones_like(self.rot00, dtype=complex)
        self.acc11 = v0 * np.ones_like(self.rot11, dtype=complex)

    def advance(self, x_new: float, v_new: float) -> None:
        self.acc00 = self.acc00 * self.rot00 + x_new
        self.acc11 = self.acc11 * self.rot11 + v_new
        self._ph00 = self._ph00 * self.rot00
        self._ph11 = self._ph11 * self.rot11
        self.m00_n = float(self.c00 @ self._ph00.imag)
        self.md11_n = float(self.c11 @ self._ph11.real)

    def amend_endpoint(self, dx: float, dv: float) -> None:
        self.acc00 = self.acc00 + dx
        self.acc11 = self.acc11 + dv

    def position_sum(self, x0: float) -> float:
        return float(self.c00 @ self.acc00.imag) - 0.5 * x0 * self.m00_n

    def velocity_sum_partial(self, v0: float, v_end: float) -> float:
        total = float(self.c11 @ self.acc11.real)
        return total - v_end * self.md11_0 - 0.5 * v0 * self.md11_n

    def endpoint_weight(self) -> float:
        return 0.5 * self.md11_0


def evolve(mirror: MirrorSpec, kernels: Optional[MirrorKernels], x0: float, v0: float,
           grid: TimeGrid, *, accel: bool = False, include_casimir_force: bool = False,
           blowup_factor: float = 1e9) -> EvolutionResult:
    """Integrate  m xddot + V'(x) = F_x + F_xdot  with a fixed-step
    predictor-corrector (explicit Heun: Euler predictor, one trapezoidal
    corrector pass that re-evaluates the memory forces with the predicted
    endpoint).  Second order in dt.

    ``kernels=None`` switches the back-action off (conservative dynamics).
    The solver is sequential in time; per-step force sums use fixed-order
    reductions, so repeated runs are bitwise identical.
    """
    n = grid.n
    dt = grid.dt
    lam = None
    if kernels is not None and mirror.Omega:
        lam = coupling_parameter(mirror, kernels.cavity)
        if lam >= 1.0:
            raise DomainError(
                f"coupling parameter lambda = {lam:.3g} >= 1: radiation pressure "
                "is non-perturbative for this mirror/cavity")
        if lam > 0.1:
            warnings.warn(f"coupling parameter lambda = {lam:.3g} > 0.1; "
                          "second-order back-action is marginal", stacklevel=2)

    f_cas = 0.0
    if include_casimir_force:
        if kernels is None:
            raise DomainError("Casimir force needs cavity kernels")
        from .casimir import renormalized_density
        f_cas = renormalized_density(kernels.cavity.d, kernels.thermal.T).renormalized

    x = np.zeros(n)
    v = np.zeros(n)
    fx = np.zeros(n)
    fv = np.zeros(n)
    x[0], v[0] = float(x0), float(v0)

    if kernels is None:
        pref_x = pref_v = 0.0
        mem = None
    else:
        pref_x, pref_v = _memory_prefactors(kernels)
        u = dt * np.arange(n)
        _, _, m00 = kernels.kernel_00(u)
        md11 = kernels.kernel_11_rate(u)
        if accel:
            mem = _RecursiveMemory(kernels, dt)
            mem.start(x[0], v[0])
        else:
            mem = _DirectMemory(m00, md11)

    m = mirror.m
    # reference displacement scale for blowup detection: initial conditions
    # plus the ballistic displacement a constant external force could produce
    scale = max(abs(x0) + abs(v0) * max(grid.span, dt),
                abs(f_cas) * grid.span ** 2 / (2.0 * m), 1e-300)

    def forces_at(step: int, x_hist, v_hist, v_end: float) -> tuple[float, float]:
        if kernels is None:
            return 0.0, 0.0
        if accel:
            fxs = pref_x * dt * mem.position_sum(x_hist[0])
            fvs = pref_v * dt * (mem.velocity_sum_partial(v_hist[0], v_end)
                                 + v_end * mem.endpoint_weight())
        else:
            fxs = pref_x * dt * mem.position_sum(x_hist, step)
            fvs = pref_v * dt * (mem.velocity_sum_partial(v_hist, step)
                                 + v_end * mem.endpoint_weight())
        return fxs, fvs

    # forces at t_0: single-point trapezoid memory integral vanishes
    fx[0] = 0.0
    fv[0] = 0.0
    a_n = (fx[0] + fv[0] + f_cas - mirror.potential_gradient(x[0])) / m
    work = 0.0                      # online trapezoid of xdot * (F_x + F_xdot)
    power_prev = v[0] * (fx[0] + fv[0])

    for i in range(n - 1):
        xp = x[i] + dt * v[i]
        vp = v[i] + dt * a_n
        x[i + 1], v[i + 1] = xp, vp
        if accel and mem is not None:
            mem.advance(xp, vp)
        fxp, fvp = forces_at(i + 1, x, v, vp)
        a_p = (fxp + fvp + f_cas - mirror.potential_gradient(xp)) / m
        x[i + 1] = x[i] + 0.5 * dt * (v[i] + vp)
        v[i + 1] = v[i] + 0.5 * dt * (a_n + a_p)
        if accel and mem is not None:
            mem.amend_endpoint(x[i + 1] - xp, v[i + 1] - vp)
        fx[i + 1], fv[i + 1] = forces_at(i + 1, x, v, v[i + 1])
        a_n = (fx[i + 1] + fv[i + 1] + f_cas - mirror.potential_gradient(x[i + 1])) / m
        power = v[i + 1] * (fx[i + 1] + fv[i + 1])
        work += 0.5 * dt * (power_prev + power)
        power_prev = power
        xi = x[i + 1]
        if not (math.isfinite(xi) and math.isfinite(v[i + 1])):
            raise NumericalError(f"non-finite state at step {i + 1} (t = {grid.t0 + (i + 1) * dt})")
        if abs(xi) > blowup_factor * scale:
            raise NumericalError(
                f"step-size instability: |x| = {abs(xi):.3e} exceeded "
                f"{blowup_factor:.1e} x initial scale at step {i + 1}")

    traj = Trajectory(t0=grid.t0, dt=dt, x=x, v=v)
    diag = {
        "steps": n - 1,
        "dt": dt,
        "coupling_parameter": lam,
        "max_abs_x": float(np.max(np.abs(x))),
        "accel": bool(accel),
        "casimir_force": f_cas,
        "work_done": work,
    }
    return EvolutionResult(trajectory=traj, force_x=fx, force_xdot=fv, diagnostics=diag)
