import json
import math

import numpy as np
import pytest

from csslab.errors import ContractViolation
from csslab.functionals import nehari_lambda_star, report, rescaled_report
from csslab.grid import RadialGrid
from csslab.groundstate import (DescentConfig, gaussian_mixture, minimize_d,
                                projected_action_and_gradient)

GAUSS_BOUND = 5.2333247


@pytest.fixture(scope="module")
def small_result():
    return minimize_d(5.0, RadialGrid(512, 20.0), DescentConfig(restarts=1))


def test_descent_config_contract():
    with pytest.raises(ContractViolation):
        DescentConfig(n_gaussians=2)
    with pytest.raises(ContractViolation):
        minimize_d(3.0, RadialGrid(64, 10.0))


def test_projected_gradient_matches_finite_differences():
    grid = RadialGrid(512, 20.0)
    v = gaussian_mixture(grid, [1.0, 0.4], [1.0, 2.5])
    _, g, _ = projected_action_and_gradient(v, grid, 5.0)
    rng = np.random.default_rng(3)
    for _ in range(5):
        h = rng.standard_normal(grid.n) * np.exp(-grid.nodes ** 2 / 8)
        eps = 1e-5
        fd = (projected_action_and_gradient(v + eps * h, grid, 5.0)[0]
              - projected_action_and_gradient(v - eps * h, grid, 5.0)[0]) / (2 * eps)
        an = float(grid.weights @ (g * h))
        assert fd == pytest.approx(an, rel=1e-6)


def test_minimizer_is_on_manifold_and_below_gaussian(small_result):
    res = small_result
    assert res.converged
    assert 0 < res.d_value < GAUSS_BOUND
    assert res.residual_k / report(res.profile, 5.0).covariant_kinetic < 1e-8
    assert res.gradient_residual < 1e-6
    assert res.d_by_l_characterization == pytest.approx(res.d_value, rel=1e-6)
    assert res.fd_check_error < 1e-5


def test_dilation_off_manifold_keeps_l_above_d(small_result):
    rep = report(small_result.profile, 5.0)
    moved = rescaled_report(rep, nehari_lambda_star(rep) * 1.01)
    assert moved.nehari < 0
    assert moved.l_value >= 0.99 * small_result.d_value
    assert moved.action < small_result.d_value


def test_serialization(small_result):
    d = json.loads(small_result.to_json())
    assert d["d_value"] == small_result.d_value
    lines = small_result.profile_csv().splitlines()
    assert lines[0] == "r,value" and len(lines) == 513


def test_deterministic_per_seed():
    grid = RadialGrid(256, 20.0)
    cfg = DescentConfig(restarts=1, max_iter=200)
    a, b = minimize_d(5.0, grid, cfg), minimize_d(5.0, grid, cfg)
    assert a.d_value == b.d_value
    assert not math.isnan(a.coarse_value)
