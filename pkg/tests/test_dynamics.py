import math

import numpy as np
import pytest
from scipy.integrate import quad

from ctpmirror import (CavitySpec, DomainError, MirrorKernels, MirrorSpec,
                       NumericalError, ThermalSpectrum, TimeGrid, Trajectory,
                       coupling_parameter, dissipated_energy_time, evolve,
                       force_histories, force_x, force_xdot, gaussian_pulse)


def build_kernels(K=8, d=1.0, T=0.0):
    return MirrorKernels(CavitySpec(d=d, K_max=K, omega_pl=(K + 1) * math.pi / d),
                         ThermalSpectrum(T))


def small_pulse(dt=5e-4, tau=0.4, A=0.002, span=7.0):
    n = int(round(2 * span * tau / dt)) + 1
    return gaussian_pulse(A, tau, TimeGrid(t0=-span * tau, dt=dt, n=n))


# --------------------------------------------------------------------------- #
# forces on prescribed trajectories                                            #
# --------------------------------------------------------------------------- #

def test_zero_trajectory_gives_zero_forces():
    kern = build_kernels()
    traj = Trajectory(t0=0.0, dt=1e-3, x=np.zeros(500))
    f_x, f_v = force_histories(traj, kern)
    assert np.all(f_x == 0.0) and np.all(f_v == 0.0)


def test_force_vanishes_at_grid_start():
    kern = build_kernels()
    traj = small_pulse()
    assert force_x(traj, kern, 0) == 0.0
    assert force_xdot(traj, kern, 0) == 0.0


def test_single_index_force_matches_history():
    kern = build_kernels(K=6)
    traj = small_pulse(dt=1e-3)
    f_x, f_v = force_histories(traj, kern)
    for idx in (0, 57, traj.n // 2, traj.n - 1):
        assert force_x(traj, kern, idx) == pytest.approx(f_x[idx], rel=1e-12, abs=1e-18)
        assert force_xdot(traj, kern, idx) == pytest.approx(f_v[idx], rel=1e-12, abs=1e-18)


def _gauss_segment_transform(f, a, b, mid, tau):
    """int_a^b e^{-i f s} e^{-(s-mid)^2/tau^2} ds via the complex error function."""
    from scipy.special import erf
    za = (a - mid) / tau + 1j * f * tau / 2.0
    zb = (b - mid) / tau + 1j * f * tau / 2.0
    pref = math.sqrt(math.pi) * tau / 2.0 * np.exp(-(f * tau / 2.0) ** 2 - 1j * f * mid)
    return pref * (erf(zb) - erf(za))


def test_force_x_against_continuum_oracle():
    # exact continuum memory integral, mode by mode; the sampled trapezoid
    # carries an O(dt^2) term ~ x(t) * (kernel slope at zero lag), so the
    # grid is strongly oversampled to let the comparison reach 1e-6
    K, d, A, tau = 32, 1.0, 0.01, 0.4
    kern = build_kernels(K=K, d=d)
    dt = 2.0 * math.pi / (2 * K * math.pi) / 2500.0
    traj = small_pulse(dt=dt, tau=tau, A=A, span=7.0)
    idx = int(0.62 * traj.n)
    t_eval = traj.times()[idx]
    mid = traj.t0 + 0.5 * traj.dt * (traj.n - 1)
    total = 0.0
    for k in range(1, K + 1):
        wk = k * math.pi / d
        coef = -wk ** 2 / 4.0                     # -omega_k^2 (z_k+z_k)/8 at T=0
        # int sin(2 wk (t-s)) x(s) ds = Im[ e^{2 i wk t} int e^{-2 i wk s} x(s) ds ]
        seg = A * _gauss_segment_transform(2 * wk, traj.t0, t_eval, mid, tau)
        total += coef * float(np.imag(np.exp(2j * wk * t_eval) * seg))
    oracle = -(4.0 / d ** 2) * total
    got = force_x(traj, kern, idx)
    assert got == pytest.approx(oracle, rel=1e-6)


def test_force_xdot_against_continuum_oracle():
    # exact continuum memory integral, line by line, via the complex error
    # function:  int_a^b e^{-i f s} e^{-s^2/tau^2} ds has a closed form, and
    # the velocity integrand reduces to it by parts.  The sampled trapezoid
    # force carries an O(dt^2) endpoint term (the rate kernel is nonzero at
    # zero lag), so the grid here is strongly oversampled.
    from scipy.special import erf

    K, d, tau, A = 6, 1.0, 0.4, 0.01
    kern = build_kernels(K=K, d=d)
    dt = 2.0 * math.pi / (2 * K * math.pi) / 1500.0
    traj = small_pulse(dt=dt, tau=tau, A=A, span=7.0)
    mid = traj.t0 + 0.5 * traj.dt * (traj.n - 1)
    traj.v = -2.0 * (traj.times() - mid) / tau ** 2 * traj.x
    idx = int(0.55 * traj.n)
    t_eval = traj.times()[idx]
    freqs, coefs = kern.dissipation_11_rate_lines

    def gauss_transform(f, a, b):
        # int_a^b e^{-i f s} e^{-s^2/tau^2} ds, shifted so the pulse peaks at mid
        za = (a - mid) / tau + 1j * f * tau / 2.0
        zb = (b - mid) / tau + 1j * f * tau / 2.0
        pref = math.sqrt(math.pi) * tau / 2.0 * np.exp(-(f * tau / 2.0) ** 2
                                                       - 1j * f * mid)
        return pref * (erf(zb) - erf(za))

    total = 0.0
    for f, c in zip(freqs, coefs):
        if c == 0.0:
            continue
        # int cos(f(t-s)) v(s) ds = Re[ e^{i f t} int e^{-i f s} x'(s) ds ]
        # and by parts: int e^{-ifs} x' ds = [e^{-ifs} x] + i f int e^{-ifs} x ds
        boundary = (np.exp(-1j * f * t_eval) * A * math.exp(-((t_eval - mid) / tau) ** 2)
                    - np.exp(-1j * f * traj.t0) * A * math.exp(-((traj.t0 - mid) / tau) ** 2))
        integral = boundary + 1j * f * A * gauss_transform(f, traj.t0, t_eval)
        total += c * float(np.real(np.exp(1j * f * t_eval) * integral))
    oracle = (1.0 / d ** 2) * total
    assert force_xdot(traj, kern, idx) == pytest.approx(oracle, rel=1e-6)


def test_forces_are_linear_in_trajectory():
    kern = build_kernels(K=6)
    t1 = small_pulse(dt=1e-3, tau=0.4, A=0.002)
    rng = np.random.default_rng(3)
    x2 = 0.001 * np.sin(3.0 * t1.times()) * np.exp(-(t1.times() / 0.8) ** 2)
    t2 = Trajectory(t0=t1.t0, dt=t1.dt, x=x2)
    a, b = 1.7, -0.4
    t3 = Trajectory(t0=t1.t0, dt=t1.dt, x=a * t1.x + b * t2.x)
    f1 = force_histories(t1, kern)
    f2 = force_histories(t2, kern)
    f3 = force_histories(t3, kern)
    for i in (0, 1):
        scale = np.max(np.abs(f3[i])) + 1e-300
        assert np.max(np.abs(f3[i] - (a * f1[i] + b * f2[i]))) < 2e-13 * scale


def test_causality_is_bitwise():
    kern = build_kernels(K=6)
    traj = small_pulse(dt=1e-3)
    cut = traj.n // 2
    v = traj.velocities()
    perturbed = Trajectory(t0=traj.t0, dt=traj.dt, x=traj.x.copy(), v=v.copy())
    perturbed.x[cut + 1:] += 5e-3
    perturbed.v[cut + 1:] -= 1e-2
    base = Trajectory(t0=traj.t0, dt=traj.dt, x=traj.x, v=v)
    f_x0, f_v0 = force_histories(base, kern)
    f_x1, f_v1 = force_histories(perturbed, kern)
    assert np.array_equal(f_x0[:cut + 1], f_x1[:cut + 1])
    assert np.array_equal(f_v0[:cut + 1], f_v1[:cut + 1])


def test_minus_channel_dead_at_zero_temperature():
    kern = build_kernels(K=10, T=0.0)
    assert np.all(kern._m11_minus_coefs == 0.0)
    assert np.any(build_kernels(K=10, T=1.0)._m11_minus_coefs != 0.0)


# --------------------------------------------------------------------------- #
# coupling parameter                                                           #
# --------------------------------------------------------------------------- #

def test_coupling_parameter_value():
    cav = CavitySpec(d=1.0, K_max=100, omega_pl=100 * math.pi)
    lam = coupling_parameter(MirrorSpec(m=1.0, Omega=1.0), cav)
    assert lam == pytest.approx(100 * math.pi / math.sqrt(2.0), rel=1e-12)


def test_coupling_parameter_scalings():
    cav1 = CavitySpec(d=1.0, K_max=10, omega_pl=40.0)
    cav2 = CavitySpec(d=2.0, K_max=10, omega_pl=40.0)
    lam_heavy = coupling_parameter(MirrorSpec(m=1e8, Omega=1.0), cav1)
    lam_light = coupling_parameter(MirrorSpec(m=1.0, Omega=1.0), cav1)
    assert lam_heavy < 1e-3 * lam_light
    l1 = coupling_parameter(MirrorSpec(m=1.0, Omega=1.0), cav1)
    l2 = coupling_parameter(MirrorSpec(m=1.0, Omega=1.0), cav2)
    assert l2 == pytest.approx(0.5 * l1, rel=1e-12)


def test_coupling_parameter_needs_trap():
    cav = CavitySpec(d=1.0, K_max=10, omega_pl=40.0)
    with pytest.raises(DomainError):
        coupling_parameter(MirrorSpec(m=1.0), cav)


# --------------------------------------------------------------------------- #
# solver                                                                       #
# --------------------------------------------------------------------------- #

def test_conservative_harmonic_solution():
    mirror = MirrorSpec(m=1.0, Omega=1.0)
    dt = 5e-5
    periods = 2
    n = int(round(periods * 2 * math.pi / dt)) + 1
    res = evolve(mirror, None, 1.0, 0.3, TimeGrid(0.0, dt, n))
    t = res.trajectory.times()
    exact = np.cos(t) + 0.3 * np.sin(t)
    assert np.max(np.abs(res.trajectory.x - exact)) < 1e-8


def test_conservative_energy_drift():
    mirror = MirrorSpec(m=1.0, Omega=1.0)
    dt = 1e-4
    n = int(round(3 * 2 * math.pi / dt)) + 1
    res = evolve(mirror, None, 1.0, 0.0, TimeGrid(0.0, dt, n))
    x, v = res.trajectory.x, res.trajectory.v
    E = 0.5 * (v ** 2 + x ** 2)
    drift_per_period = abs(E[-1] - E[0]) / E[0] / 3.0
    assert drift_per_period < 1e-8


def test_self_convergence_order():
    kern = build_kernels(K=6)
    mirror = MirrorSpec(m=2e4, Omega=math.pi)
    end = {}
    for dt in (2e-3, 1e-3, 5e-4):
        n = int(round(3.0 / dt)) + 1
        end[dt] = evolve(mirror, kern, 0.004, 0.0, TimeGrid(0.0, dt, n)).trajectory.x[-1]
    e_coarse = abs(end[2e-3] - end[5e-4])
    e_fine = abs(end[1e-3] - end[5e-4])
    order = math.log2(e_coarse / e_fine)
    assert order > 2.0


def test_accel_matches_direct():
    kern = build_kernels(K=8)
    mirror = MirrorSpec(m=2e4, Omega=math.pi)
    grid = TimeGrid(0.0, 1e-3, 3001)
    a = evolve(mirror, kern, 0.004, 0.0, grid)
    b = evolve(mirror, kern, 0.004, 0.0, grid, accel=True)
    scale_x = np.max(np.abs(a.trajectory.x))
    assert np.max(np.abs(a.trajectory.x - b.trajectory.x)) < 1e-10 * scale_x
    for f_a, f_b in ((a.force_x, b.force_x), (a.force_xdot, b.force_xdot)):
        scale = np.max(np.abs(f_a)) + 1e-300
        assert np.max(np.abs(f_a - f_b)) < 1e-10 * scale


def test_resonant_mirror_loses_energy():
    # trap at the first intra-mode pair frequency 2 omega_1: real dissipation,
    # well above the integrator's own amplitude error
    kern = build_kernels(K=6)
    m = 200.0
    mirror = MirrorSpec(m=m, Omega=2 * math.pi)
    res = evolve(mirror, kern, 0.002, 0.0, TimeGrid(0.0, 5e-4, 8001))
    x, v = res.trajectory.x, res.trajectory.v
    E = 0.5 * m * (v ** 2 + (2 * math.pi * x) ** 2)
    assert E[-1] < 0.99 * E[0]
    assert res.diagnostics["work_done"] < 0.0
    # energy bookkeeping: mechanical loss accounted for by the memory-force work
    assert (E[-1] - E[0]) == pytest.approx(res.diagnostics["work_done"], rel=5e-2)


def test_online_work_matches_energetics():
    kern = build_kernels(K=6)
    mirror = MirrorSpec(m=200.0, Omega=2 * math.pi)
    res = evolve(mirror, kern, 0.002, 0.0, TimeGrid(0.0, 5e-4, 6001))
    traj = res.trajectory
    power_scale = float(np.trapezoid(np.abs(traj.v * (res.force_x + res.force_xdot)),
                                     dx=traj.dt))
    e_x, e_xd = dissipated_energy_time(traj, kern)
    assert abs(res.diagnostics["work_done"] - (e_x + e_xd)) <= 1e-12 * power_scale


def test_nonperturbative_coupling_rejected():
    kern = build_kernels(K=8)
    with pytest.raises(DomainError, match="lambda"):
        evolve(MirrorSpec(m=1.0, Omega=1.0), kern, 0.001, 0.0, TimeGrid(0.0, 1e-3, 100))


def test_marginal_coupling_warns():
    kern = build_kernels(K=6)
    with pytest.warns(UserWarning, match="lambda"):
        evolve(MirrorSpec(m=50.0, Omega=2 * math.pi), kern, 0.0, 0.0,
               TimeGrid(0.0, 1e-3, 50))


def test_instability_detected():
    mirror = MirrorSpec(m=1.0, Omega=1.0)
    with pytest.raises(NumericalError):
        evolve(mirror, None, 1.0, 0.0, TimeGrid(0.0, 4.0, 4000), blowup_factor=1e3)


def test_tabulated_potential_matches_harmonic():
    xs = np.linspace(-0.1, 0.1, 2001)
    mirror_tab = MirrorSpec.from_tabulated(1.0, xs, 0.5 * 1.0 * (2.0 * xs) ** 2 / 4.0)
    # V = m Omega^2 x^2/2 with Omega = 1
    mirror_h = MirrorSpec(m=1.0, Omega=1.0)
    grid = TimeGrid(0.0, 1e-3, 2001)
    a = evolve(mirror_tab, None, 0.05, 0.0, grid)
    b = evolve(mirror_h, None, 0.05, 0.0, grid)
    assert np.max(np.abs(a.trajectory.x - b.trajectory.x)) < 1e-9


def test_casimir_force_offset():
    # constant attractive offset displaces the trap equilibrium by eps_ren/(m Omega^2)
    kern = build_kernels(K=4)
    mirror = MirrorSpec(m=1e6, Omega=2 * math.pi)
    grid = TimeGrid(0.0, 1e-3, 4001)
    res = evolve(mirror, kern, 0.0, 0.0, grid, include_casimir_force=True)
    eps_ren = -math.pi / 24.0
    x_eq = eps_ren / (1e6 * (2 * math.pi) ** 2)
    mean_x = float(np.mean(res.trajectory.x))
    assert mean_x == pytest.approx(x_eq, rel=0.05)
    off = evolve(mirror, kern, 0.0, 0.0, grid)
    assert np.max(np.abs(off.trajectory.x)) < abs(x_eq) * 1e-3
