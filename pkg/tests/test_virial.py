import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from csslab.errors import ContractViolation
from csslab.grid import RadialField, RadialGrid
from csslab.virial import CutoffProfile, virial_value


@pytest.mark.parametrize("big_r", [8.0, 16.0, 32.0])
def test_cutoff_invariants(big_r):
    g = RadialGrid(8192, 400.0)
    c = CutoffProfile.build(g, big_r)
    r = g.nodes
    inner = r <= big_r
    assert np.max(np.abs(c.chi[inner] - r[inner] ** 2 / 2)) < 1e-9 * big_r ** 2
    outer = r >= 10 * big_r
    assert np.ptp(c.chi[outer]) < 1e-9 * big_r ** 2
    second = np.diff(c.chi, 2) / g.dr ** 2
    assert np.max(second) <= 1 + 1e-9
    assert np.max(c.chi_second) <= 1 + 1e-12
    assert np.min(c.chi_prime) >= 0


def test_cutoff_contract():
    with pytest.raises(ContractViolation):
        CutoffProfile.build(RadialGrid(10, 1.0), 0.0)


def test_real_field_has_zero_virial(gaussian):
    c = CutoffProfile.build(gaussian.grid, 4.0)
    assert abs(virial_value(gaussian, c)) < 1e-12


def test_chirped_gaussian_virial(gaussian):
    # Im(conj(u) u_r) = 2 beta r |u|^2, so V = 2 pi beta with chi' = r
    c = CutoffProfile.build(gaussian.grid, 1000.0)
    r = gaussian.grid.nodes
    vals = []
    for beta in (0.25, 0.5):
        u = gaussian.with_values(gaussian.values * np.exp(1j * beta * r ** 2))
        vals.append(virial_value(u, c))
    assert vals[0] == pytest.approx(math.pi / 2, abs=1e-4)
    assert vals[1] / vals[0] == pytest.approx(2.0, rel=1e-4)


def test_grid_mismatch(gaussian):
    with pytest.raises(ContractViolation):
        virial_value(gaussian, CutoffProfile.build(RadialGrid(64, 16.0), 4.0))


def test_planar_definition_agrees_with_radial_form(gaussian):
    # assemble A_1, A_2 and the covariant derivative on a Cartesian grid
    from csslab.gauge import gauge_from_field
    beta, big_r = 0.25, 1.0
    grid = gaussian.grid
    u = gaussian.with_values(gaussian.values * np.exp(1j * beta * grid.nodes ** 2))
    cut = CutoffProfile.build(grid, big_r)
    radial = virial_value(u, cut)

    x = np.linspace(-8, 8, 801)
    h = x[1] - x[0]
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    rr = np.hypot(x1, x2)
    val = CubicSpline(grid.nodes, u.values)(rr)
    a_th = CubicSpline(grid.nodes, gauge_from_field(u).a_theta)(rr)
    chi = CubicSpline(grid.nodes, cut.chi)(rr)
    with np.errstate(invalid="ignore", divide="ignore"):
        a1 = np.where(rr > 0, -x2 * a_th / rr ** 2, 0.0)
        a2 = np.where(rr > 0, x1 * a_th / rr ** 2, 0.0)
    d1 = np.gradient(val, h, axis=0) + 1j * a1 * val
    d2 = np.gradient(val, h, axis=1) + 1j * a2 * val
    c1, c2 = np.gradient(chi, h, axis=0), np.gradient(chi, h, axis=1)
    planar = float(np.sum(np.imag(np.conj(val) * (d1 * c1 + d2 * c2))) * h * h)
    assert planar == pytest.approx(radial, rel=1e-2)
