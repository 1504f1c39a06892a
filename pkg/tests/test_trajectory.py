import math

import numpy as np
import pytest

from ctpmirror import (DomainError, Spectrum, TimeGrid, Trajectory,
                       finite_difference_velocity, gaussian_pulse,
                       inverse_spectrum, parseval_residual, spectrum_of,
                       windowed_sine)


def pulse(A=0.01, tau=0.5, dt=1e-3, span_factor=7.0):
    n = int(round(2 * span_factor * tau / dt)) + 1
    grid = TimeGrid(t0=-span_factor * tau, dt=dt, n=n)
    return gaussian_pulse(A, tau, grid)


def analytic_gaussian_spectrum(omega, A, tau):
    # (1/2pi) int A e^{-t^2/tau^2} e^{-i omega t} dt = (A tau / 2 sqrt(pi)) e^{-omega^2 tau^2/4}
    return A * tau / (2 * math.sqrt(math.pi)) * np.exp(-(omega * tau) ** 2 / 4.0)


def test_gaussian_peak_and_tails():
    A, tau = 0.02, 0.3
    traj = pulse(A, tau, dt=5e-4, span_factor=6.0)
    assert np.max(traj.x) == pytest.approx(A, rel=1e-12)
    assert abs(traj.x[0]) < 3e-16 * A and abs(traj.x[-1]) < 3e-16 * A


def test_gaussian_needs_wide_grid():
    with pytest.raises(DomainError, match="6"):
        gaussian_pulse(0.01, 1.0, TimeGrid(t0=-3.0, dt=0.01, n=601))


def test_gaussian_spectrum_matches_analytic():
    A, tau = 0.01, 0.5
    traj = pulse(A, tau)
    spec = spectrum_of(traj)
    w = np.linspace(-8.0, 8.0, 61)
    got = spec.at(w)
    want = analytic_gaussian_spectrum(w, A, tau)
    assert np.max(np.abs(got - want)) < 1e-8 * np.max(want)
    # pulse centered at t = 0: spectrum is real up to roundoff
    assert np.max(np.abs(got.imag)) < 1e-12 * np.max(want)


def test_spectrum_round_trip():
    traj = pulse()
    spec = spectrum_of(traj)
    rec = inverse_spectrum(spec)
    assert np.max(np.abs(rec - traj.x)) < 1e-10 * np.max(np.abs(traj.x))


def test_parseval():
    traj = pulse()
    assert parseval_residual(traj, spectrum_of(traj)) < 1e-8


def test_hermitian_symmetry():
    traj = pulse()
    spec = spectrum_of(traj)
    w = np.linspace(0.3, 12.0, 40)
    a = spec.at(w)
    b = spec.at(-w)
    assert np.max(np.abs(b - np.conj(a))) < 1e-15 * np.max(np.abs(a) + 1e-300)


def test_single_spike_has_flat_spectrum():
    x = np.zeros(101)
    x[37] = 2.5
    traj = Trajectory(t0=0.0, dt=0.01, x=x)
    spec = spectrum_of(traj, endpoint_tol=1.0)   # spike decays trivially at ends
    w = np.array([0.0, 1.0, 13.7])
    assert np.allclose(np.abs(spec.at(w)), 0.01 * 2.5 / (2 * math.pi), rtol=1e-12)


def test_non_decaying_endpoints_rejected():
    t = TimeGrid(t0=0.0, dt=0.01, n=200).times()
    traj = Trajectory(t0=0.0, dt=0.01, x=np.cos(0.3 * t))
    with pytest.raises(DomainError, match="window"):
        spectrum_of(traj)


def test_windowed_sine_support_and_mean():
    Om = 3 * math.pi
    grid = TimeGrid(t0=-6.0, dt=5e-4, n=24001)
    traj = windowed_sine(0.01, Om, n_cycles=12, ramp=3, grid=grid)
    t = traj.times()
    duration = 12 * 2 * math.pi / Om
    outside = np.abs(t) > duration / 2 + 1e-9
    assert np.all(traj.x[outside] == 0.0)
    # integer carrier cycles under a symmetric envelope: zero mean
    assert abs(np.sum(traj.x) * traj.dt) < 1e-13 * 0.01 * duration


def test_windowed_sine_is_c1():
    Om = 2 * math.pi
    dt = 1e-4
    grid = TimeGrid(t0=-5.0, dt=dt, n=100001)
    traj = windowed_sine(1.0, Om, n_cycles=8, ramp=2, grid=grid)
    # a C^1 signal sampled at dt has second differences O(dt^2 * max|xddot|),
    # with no O(dt) jumps at the window edges
    d2 = np.diff(traj.x, 2) / dt ** 2
    assert np.max(np.abs(d2)) < 1.2 * Om ** 2 * 1.0


def test_windowed_sine_spectrum_concentration():
    Om = 3 * math.pi
    grid = TimeGrid(t0=-6.0, dt=2.5e-4, n=48001)
    traj = windowed_sine(0.01, Om, n_cycles=12, ramp=3, grid=grid)
    spec = spectrum_of(traj)
    p = np.abs(spec.xt) ** 2
    near = np.abs(np.abs(spec.omega) - Om) < 2.0
    assert np.sum(p[near]) / np.sum(p) > 0.99
    # essentially nothing leaks out to the nearest competing pair frequencies
    far = np.abs(np.abs(spec.omega) - Om) >= math.pi
    assert np.sum(p[far]) / np.sum(p) < 1e-3


def test_windowed_sine_validation():
    grid = TimeGrid(t0=-6.0, dt=1e-3, n=12001)
    with pytest.raises(DomainError, match="ramp"):
        windowed_sine(0.01, math.pi, n_cycles=8, ramp=0.5, grid=grid)
    with pytest.raises(DomainError):
        windowed_sine(0.01, math.pi, n_cycles=3, ramp=2, grid=grid)
    with pytest.raises(DomainError, match="span"):
        windowed_sine(0.01, math.pi, n_cycles=200, ramp=2, grid=grid)


def test_finite_difference_velocity_accuracy():
    tau = 0.5
    for dt, bound in [(2e-3, None), (1e-3, None)]:
        traj = pulse(1.0, tau, dt=dt)
        t = traj.times()
        exact = -2.0 * t / tau ** 2 * traj.x
        err = np.max(np.abs(traj.velocities() - exact))
        if bound is None:
            bound = err
    # 4th order: halving dt gains ~16x
    traj1 = pulse(1.0, tau, dt=2e-3)
    traj2 = pulse(1.0, tau, dt=1e-3)
    e1 = np.max(np.abs(traj1.velocities() + 2 * traj1.times() / tau ** 2 * traj1.x))
    e2 = np.max(np.abs(traj2.velocities() + 2 * traj2.times() / tau ** 2 * traj2.x))
    assert e1 / e2 > 10.0
    assert e2 < 1e-9


def test_finite_difference_needs_five_samples():
    with pytest.raises(DomainError):
        finite_difference_velocity(np.ones(4), 0.1)


def test_displacement_ratio_warning():
    traj = pulse(A=0.2, tau=0.5)
    with pytest.warns(UserWarning, match="max|x|".replace("|", ".")):
        traj.check_displacement_ratio(1.0)


def test_grid_validation():
    with pytest.raises(DomainError):
        TimeGrid(t0=0.0, dt=0.0, n=10)
    with pytest.raises(DomainError):
        TimeGrid(t0=0.0, dt=0.1, n=1)
    with pytest.raises(DomainError):
        Trajectory(t0=0.0, dt=0.1, x=np.ones(5), v=np.ones(4))


def test_reversed_trajectory():
    traj = pulse()
    traj.v = traj.velocities()
    rev = traj.reversed()
    assert np.array_equal(rev.x, traj.x[::-1])
    assert np.array_equal(rev.v, -traj.v[::-1])
