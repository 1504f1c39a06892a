import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctpmirror import DomainError, ThermalSpectrum

# mpmath oracle (40 digits): coth(1)
COTH_1 = 1.3130352854993313


def test_zero_temperature_is_sign():
    th = ThermalSpectrum(0.0)
    assert th.z(np.pi) == 1.0
    assert th.z(-np.pi) == -1.0
    assert np.array_equal(th.z(np.array([0.5, -3.0])), [1.0, -1.0])


def test_coth_value_against_oracle():
    # z(omega=2, T=1) = coth(1)
    assert ThermalSpectrum(1.0).z(2.0) == pytest.approx(COTH_1, rel=1e-15)


def test_high_temperature_limit():
    # z -> 2T/omega for T >> omega
    th = ThermalSpectrum(1e6)
    assert th.z(1.0) == pytest.approx(2e6, rel=1e-12)


def test_near_pole_guard_small_argument():
    # |omega|/T tiny enough to hit the Laurent branch; leading term 2T/omega
    th = ThermalSpectrum(1.0)
    assert th.z(1e-12) == pytest.approx(2e12, rel=1e-14)
    assert th.z(-1e-12) == pytest.approx(-2e12, rel=1e-14)


def test_pole_rejected():
    with pytest.raises(DomainError):
        ThermalSpectrum(1.0).z(0.0)
    with pytest.raises(DomainError):
        ThermalSpectrum(0.0).z(np.array([1.0, 0.0]))


@given(st.floats(min_value=1e-6, max_value=1e3),
       st.floats(min_value=1e-3, max_value=1e3))
def test_oddness_is_exact(omega, T):
    th = ThermalSpectrum(T)
    assert th.z(-omega) == -th.z(omega)


def test_monotone_in_temperature():
    omega = 2.7
    zs = [ThermalSpectrum(T).z(omega) for T in (0.0, 0.5, 1.0, 5.0, 50.0)]
    assert all(b > a for a, b in zip(zs, zs[1:]))
    assert zs[0] >= 1.0


def test_coth_addition_identity():
    # (z_k z_j + 1)/(z_k + z_j) = z(omega_k + omega_j), the identity behind
    # the fluctuation-dissipation relation at the sum frequency
    rng = np.random.default_rng(7)
    for _ in range(200):
        T = 10.0 ** rng.uniform(-1, 2)
        th = ThermalSpectrum(T)
        wk, wj = 10.0 ** rng.uniform(-1, 2, size=2)
        lhs = (th.z(wk) * th.z(wj) + 1.0) / (th.z(wk) + th.z(wj))
        rhs = th.z(wk + wj)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_occupation():
    th = ThermalSpectrum(2.0)
    w = 3.0
    assert th.occupation(w) == pytest.approx(1.0 / np.expm1(w / 2.0), rel=1e-15)
    assert ThermalSpectrum(0.0).occupation(w) == 0.0
    with pytest.raises(DomainError):
        th.occupation(-1.0)
    # z = 2n + 1
    assert th.z(w) == pytest.approx(2.0 * th.occupation(w) + 1.0, rel=1e-14)


def test_negative_temperature_rejected():
    with pytest.raises(DomainError):
        ThermalSpectrum(-0.1)
