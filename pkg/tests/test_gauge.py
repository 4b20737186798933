import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csslab.errors import ContractViolation
from csslab.functionals import q_charge
from csslab.gauge import a_theta_of, gauge_from_density, gauge_from_field
from csslab.grid import RadialGrid, integrate_radial

Q_GAUSS = math.pi / 16 * math.log(4 / 3)


def test_atheta_closed_form(gaussian):
    r = gaussian.grid.nodes
    pot = gauge_from_field(gaussian)
    assert np.max(np.abs(pot.a_theta + (1 - np.exp(-r ** 2)) / 4)) < 1e-8


def test_charge_and_azero_closed_form(gaussian):
    pot = gauge_from_field(gaussian)
    assert q_charge(gaussian) == pytest.approx(Q_GAUSS, rel=1e-6)
    assert integrate_radial(pot.a_zero * gaussian.density, gaussian.grid) == pytest.approx(2 * Q_GAUSS, rel=1e-6)


def test_azero_identity_is_exact_on_grid():
    g = RadialGrid(300, 7.0)
    rng = np.random.default_rng(3)
    f = np.abs(rng.standard_normal(g.n)) * np.exp(-g.nodes)
    pot = gauge_from_density(f, g)
    lhs = integrate_radial(pot.a_zero * f, g)
    rhs = 2 * integrate_radial(pot.a_theta_over_r ** 2 * f, g)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_atheta_tail_is_mass(gaussian):
    # A_theta(r_max) = -M / (4 pi) exactly on the grid
    pot = gauge_from_field(gaussian)
    m = integrate_radial(gaussian.density, gaussian.grid)
    assert pot.a_theta[-1] == pytest.approx(-m / (4 * math.pi), rel=1e-13)


def test_density_contract():
    g = RadialGrid(10, 1.0)
    with pytest.raises(ContractViolation):
        a_theta_of(-np.ones(10), g)
    with pytest.raises(ContractViolation):
        a_theta_of(np.ones(9), g)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 2.0), st.floats(0.3, 2.0), st.floats(0.0, 3.0)),
                min_size=1, max_size=4))
def test_potentials_monotone_for_resolved_densities(components):
    g = RadialGrid(1024, 16.0)
    r = g.nodes
    f = sum(a * np.exp(-(r - c) ** 2 / (2 * w * w)) for a, w, c in components) ** 2
    pot = gauge_from_density(f, g)
    # A_theta <= 0 decreases from 0; A_0 >= 0 decreases to 0
    assert np.all(np.diff(pot.a_theta) <= 1e-12)
    assert np.all(pot.a_theta <= 0)
    assert np.all(np.diff(pot.a_zero) <= 1e-9 * np.max(pot.a_zero))
    assert np.all(pot.a_zero >= -1e-15)
