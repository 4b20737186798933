import json
import math

import numpy as np
import pytest

from csslab.errors import ContractViolation
from csslab.evolution import SimConfig, TrajectoryLog, free_propagate, propagate, step_strang
from csslab.grid import RadialField, RadialGrid, integrate_radial


def free_gaussian(r, t):
    # i u_t + lap u = 0 from e^{-r^2/2}
    z = 1 + 2j * t
    return np.exp(-r ** 2 / (2 * z)) / z


def test_config_contract():
    with pytest.raises(ContractViolation):
        SimConfig(p=3.0, dt=1e-3, t_end=1.0)
    with pytest.raises(ContractViolation):
        SimConfig(p=5.0, dt=0.02, t_end=1.0)
    with pytest.raises(ContractViolation):
        SimConfig(p=5.0, dt=0.003, t_end=1.0)
    with pytest.raises(ContractViolation):
        SimConfig(p=5.0, dt=0.01, t_end=1.0, snapshot_times=(0.005,))
    assert SimConfig(p=5.0, dt=1e-3, t_end=1.0).steps == 1000


def test_free_gaussian_closed_form():
    g = RadialGrid(2048, 64.0)
    u = RadialField(g, free_gaussian(g.nodes, 0.0))
    for t in (1.0, 2.0):
        v = free_propagate(u, t, 1e-3)
        err = math.sqrt(integrate_radial(np.abs(v.values - free_gaussian(g.nodes, t)) ** 2, g))
        assert err < 1e-4


def test_free_flow_time_reversal():
    g = RadialGrid(512, 32.0)
    u = RadialField(g, np.exp(-g.nodes ** 2 / 2 + 0.1j * g.nodes ** 2))
    back = free_propagate(free_propagate(u, 0.5, 1e-2), -0.5, 1e-2)
    assert np.max(np.abs(back.values - u.values)) < 1e-12


def test_strang_step_conserves_mass_and_reverses():
    g = RadialGrid(512, 32.0)
    u = RadialField(g, 1.2 * np.exp(-g.nodes ** 2 / 2))
    v = u
    for _ in range(20):
        v = step_strang(v, 1e-3, 5.0)
    m0 = integrate_radial(u.density, g)
    assert abs(integrate_radial(v.density, g) - m0) / m0 < 1e-13
    for _ in range(20):
        v = step_strang(v, -1e-3, 5.0)
    assert np.max(np.abs(v.values - u.values)) < 1e-10


def test_linear_run_conserves_kinetic_energy():
    cfg = SimConfig(p=5.0, dt=1e-2, t_end=1.0, n=512, r_max=32.0, nonlinear_on=False, log_stride=10)
    log = propagate(RadialField(cfg.grid, np.exp(-cfg.grid.nodes ** 2 / 2)), cfg)
    g = [r.grad_kinetic for r in log.reports]
    assert max(g) - min(g) < 1e-10 * g[0]


def test_blowup_trigger():
    cfg = SimConfig(p=5.0, dt=1e-4, t_end=1.0, n=2048, r_max=8.0, log_stride=100)
    log = propagate(RadialField(cfg.grid, 2.5 * np.exp(-cfg.grid.nodes ** 2 / 2)), cfg)
    assert log.termination == "blowup_detected"
    assert log.termination_time < 1.0
    assert log.grad_norm[-1] > 10 * log.grad_norm[0]


def test_boundary_trigger():
    cfg = SimConfig(p=5.0, dt=1e-2, t_end=5.0, n=256, r_max=8.0, log_stride=10)
    log = propagate(RadialField(cfg.grid, 0.3 * np.exp(-cfg.grid.nodes ** 2 / 2)), cfg)
    assert log.termination == "boundary_contaminated"


def test_log_serialization():
    cfg = SimConfig(p=5.0, dt=1e-2, t_end=0.1, n=256, r_max=32.0, log_stride=5,
                    snapshot_times=(0.0, 0.1))
    log = propagate(RadialField(cfg.grid, np.exp(-cfg.grid.nodes ** 2 / 2)), cfg)
    rows = log.to_csv().strip().splitlines()
    assert rows[0].split(",") == list(TrajectoryLog.CSV_HEADER)
    assert len(rows) == 1 + len(log) == 4
    manifest = json.loads(log.to_json())
    assert manifest["termination"] == "completed"
    assert manifest["config"]["snapshot_times"] == [0.0, 0.1]
    assert set(log.snapshots) == {0.0, 0.1}
    again = propagate(RadialField(cfg.grid, np.exp(-cfg.grid.nodes ** 2 / 2)), cfg)
    assert again.to_csv() == log.to_csv()


def test_morawetz_identity_along_run():
    cfg = SimConfig(p=5.0, dt=1e-2, t_end=0.5, n=512, r_max=32.0, log_stride=10)
    log = propagate(RadialField(cfg.grid, np.exp(-cfg.grid.nodes ** 2 / 2)), cfg)
    for _, q, a0 in log.morawetz_accumulators[1:]:
        assert a0 == pytest.approx(2 * q, rel=1e-10)
