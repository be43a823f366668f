import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhtransport.errors import DomainError, NoFixedPointError, ParameterError
from nhtransport.rgflow import bare_flow, beta, exponents, fixed_points, integrate_flow, kd, z_at_coupling


def test_kd_values():
    assert kd(1) == pytest.approx(1 / math.pi)
    assert kd(2) == pytest.approx(1 / (2 * math.pi))
    assert kd(3) == pytest.approx(1 / (2 * math.pi ** 2))
    assert kd(3) == pytest.approx(0.05066, abs=1e-5)
    with pytest.raises(DomainError):
        kd(5)


def test_fixed_point_d3():
    fp = fixed_points(3)
    assert fp.g2 == pytest.approx(math.pi ** 2, abs=1e-12)
    assert fp.g2_physical and fp.g2_stable
    assert not fp.g1_stable
    assert fp.slope_at(fp.g2) < 0


def test_fixed_point_d2_unphysical():
    fp = fixed_points(2)
    assert fp.g2 == pytest.approx(-1 / kd(2))
    assert not fp.g2_physical and not fp.g2_stable


def test_fixed_point_d1_gaussian_unstable():
    fp = fixed_points(1)
    assert fp.g1 == 0 and not fp.g1_stable
    assert not fp.g2_physical


@pytest.mark.parametrize("d", [1, 2, 3])
def test_beta_vanishes_at_fixed_points(d):
    fp = fixed_points(d)
    assert beta(fp.g1, d) == 0
    assert abs(beta(fp.g2, d)) < 1e-12 * max(1.0, fp.g2 ** 2)


def test_flow_converges_d3():
    flow = integrate_flow(0.1, 3, 50.0)
    assert not flow.runaway
    assert abs(flow.final - math.pi ** 2) < 1e-6


def test_flow_runaway_d1():
    flow = integrate_flow(0.01, 1, 50.0)
    assert flow.runaway
    assert flow.g[-1] > 1e6


def test_zero_coupling_stays_zero():
    assert np.all(integrate_flow(0.0, 3, 10.0).g == 0)


def test_flow_argument_checks():
    with pytest.raises(ParameterError):
        integrate_flow(-1.0, 3, 1.0)
    with pytest.raises(ParameterError):
        integrate_flow(1.0, 3, 1.0, dl=0.1)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, math.pi ** 2 * 0.999))
def test_flow_increasing_below_fixed_point(g0):
    g = integrate_flow(g0, 3, 8.0).g
    assert np.all(np.diff(g) >= 0)
    assert g[-1] <= math.pi ** 2 + 1e-9


def test_dynamical_exponent():
    ex = exponents(3)
    assert ex["z"] == Fraction(5, 3)
    assert ex["inverse_z"] == Fraction(3, 5)
    with pytest.raises(NoFixedPointError):
        exponents(2)


def test_z_at_half_coupling():
    assert z_at_coupling(3, math.pi ** 2 / 2) == pytest.approx(11 / 6, abs=1e-14)
    assert z_at_coupling(3, math.pi ** 2) == pytest.approx(5 / 3, abs=1e-14)


@pytest.mark.parametrize("z,chi", [(2.0, 0.0), (5 / 3, -1 / 3), (1.5, 0.4)])
def test_bare_track_reproduces_coupling_flow(z, chi):
    D0, v0, eta0 = 1.3, 0.9, 1.0
    g0 = v0 * eta0 ** 2 / D0 ** 4
    bare = bare_flow(D0, v0, eta0, 3, 5.0, z=z, chi=chi)
    direct = integrate_flow(g0, 3, 5.0)
    assert np.max(np.abs(bare.g - direct.g)) < 1e-6


def test_bare_track_unit_coupling():
    bare = bare_flow(1.0, 1.0, 1.0, 3, 10.0)
    direct = integrate_flow(1.0, 3, 10.0)
    assert np.max(np.abs(bare.g - direct.g)) < 1e-6


def test_free_theory():
    bare = bare_flow(2.0, 0.0, 1.0, 3, 5.0)
    assert np.all(bare.v == 0) and np.all(bare.g == 0)
    assert np.allclose(bare.D, 2.0, rtol=0, atol=1e-14)


def test_bare_flow_checks():
    with pytest.raises(ParameterError):
        bare_flow(0.0, 1.0, 1.0, 3, 1.0)
    with pytest.raises(ParameterError):
        bare_flow(1.0, -1.0, 1.0, 3, 1.0)
