import math

import numpy as np
import pytest

from csslab.errors import ContractViolation, CorruptedStateError
from csslab.grid import (RadialField, RadialGrid, apply_compact_laplacian, boundary_mass_fraction,
                         flux_kinetic_energy, h1_norm, integrate_radial, kinetic_energy,
                         laplacian_radial, lq_norm, radial_derivative, strauss_ratio)


def test_grid_contract():
    with pytest.raises(ContractViolation):
        RadialGrid(2, 1.0)
    with pytest.raises(ContractViolation):
        RadialGrid(10, -1.0)
    g = RadialGrid(101, 10.0)
    assert g.dr == pytest.approx(0.1)
    assert g.nodes[-1] == 10.0


def test_field_rejects_bad_samples():
    g = RadialGrid(16, 1.0)
    with pytest.raises(ContractViolation):
        RadialField(g, np.zeros(15))
    bad = np.zeros(16)
    bad[3] = np.nan
    with pytest.raises(CorruptedStateError):
        RadialField(g, bad)


def test_gaussian_moments(gaussian):
    # int e^{-r^2} dx = pi, int e^{-2 r^2} dx = pi/2, int e^{-3r^2} dx = pi/3
    g = gaussian.grid
    r = g.nodes
    assert integrate_radial(np.exp(-r ** 2), g) == pytest.approx(math.pi, rel=1e-10)
    assert lq_norm(gaussian, 4) ** 4 == pytest.approx(math.pi / 2, rel=1e-10)
    assert lq_norm(gaussian, 6) ** 6 == pytest.approx(math.pi / 3, rel=1e-10)
    assert lq_norm(gaussian, math.inf) == 1.0


def test_kinetic_energy_gaussian(gaussian):
    # int |grad e^{-r^2/2}|^2 dx = int r^2 e^{-r^2} dx = pi
    assert kinetic_energy(gaussian) == pytest.approx(math.pi, rel=1e-9)
    assert flux_kinetic_energy(gaussian) == pytest.approx(math.pi, rel=1e-4)


def test_green_identity(gaussian):
    v = gaussian.values * np.exp(0.3j * gaussian.grid.nodes ** 2)
    w = gaussian.grid.weights
    lhs = -np.real(np.vdot(w * v, apply_compact_laplacian(v, gaussian.grid)))
    assert lhs == pytest.approx(kinetic_energy(gaussian.with_values(v)), rel=1e-12)


def test_laplacian_constants_and_quadratics():
    g = RadialGrid(513, 8.0)
    r = g.nodes
    ones = laplacian_radial(RadialField(g, np.ones(g.n))).values.real
    # the last nodes carry edge-corrected weights and see the Dirichlet ghost
    assert np.max(np.abs(ones[:-3])) < 1e-9
    quad = laplacian_radial(RadialField(g, r ** 2)).values.real
    assert np.max(np.abs(quad[:-3] - 4.0)) < 1e-8


def test_laplacian_origin_stencil():
    g = RadialGrid(65, 4.0)
    v = np.cos(g.nodes)
    lap = laplacian_radial(RadialField(g, v)).values.real
    assert lap[0] == pytest.approx(4 * (v[1] - v[0]) / g.dr ** 2, rel=1e-12)


def test_laplacian_second_order():
    errs = []
    for n in (513, 1025):
        g = RadialGrid(n, 16.0)
        r = g.nodes
        lap = laplacian_radial(RadialField(g, np.exp(-r ** 2 / 2))).values.real
        exact = (r ** 2 - 2) * np.exp(-r ** 2 / 2)
        errs.append(np.max(np.abs(lap - exact)))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_radial_derivative(gaussian):
    r = gaussian.grid.nodes
    d = radial_derivative(gaussian).values.real
    assert np.max(np.abs(d + r * np.exp(-r ** 2 / 2))) < 1e-5


def test_norms(gaussian):
    assert h1_norm(gaussian) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-9)
    # sup sqrt(r) e^{-r^2/2} = 2^{-1/4} e^{-1/4} at r^2 = 1/2; ||u||_2 = ||grad u||_2 = sqrt(pi)
    expected = 2 ** -0.25 * math.exp(-0.25) / math.sqrt(math.pi)
    assert strauss_ratio(gaussian) == pytest.approx(expected, rel=1e-5)
    assert strauss_ratio(gaussian) < 1 / math.sqrt(math.pi)


def test_strauss_dilation_invariant():
    g = RadialGrid(4096, 48.0)
    r = g.nodes
    vals = [strauss_ratio(RadialField(g, np.exp(-(r / lam) ** 2 / 2))) for lam in (0.5, 1, 2)]
    assert max(vals) / min(vals) - 1 < 1e-3


def test_boundary_mass_fraction():
    g = RadialGrid(1024, 10.0)
    u = RadialField(g, np.where(g.nodes > 9.5, 1.0, 0.0))
    assert boundary_mass_fraction(u) == pytest.approx(1.0)
    assert boundary_mass_fraction(RadialField.zeros(g)) == 0.0
