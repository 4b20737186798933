"""Time integration of the reduced radial flow ``i u_t + lap u = Lambda(u)``.

``Lambda(u) = V u`` with the real potential ``V = A_0 + (A_theta/r)^2 - |u|^{p-1}``,
which depends on u only through ``|u|``.  The Strang step is

    half nonlinear  ->  full linear  ->  half nonlinear

The nonlinear substep ``i u_t = V u`` leaves ``|u|`` fixed, so it is solved exactly
by the phase rotation ``u * exp(-i V dt)``.  The linear substep is Crank-Nicolson
with the fourth order compact correction ``(1 + dr^2/12 lap)``; it needs a single
tridiagonal solve and conserves the discrete mass to round-off.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack

from .errors import ContractViolation, CorruptedStateError, DomainError
from .functionals import FunctionalReport, report
from .gauge import gauge_from_density
from .grid import (RadialField, RadialGrid, apply_laplacian, integrate_radial,
                   kinetic_energy)
from .virial import CutoffProfile, virial_from_values

TERMINATIONS = ("completed", "blowup_detected", "boundary_contaminated")


@dataclass(frozen=True)
class SimConfig:
    p: float
    dt: float
    t_end: float
    n: int = 2048
    r_max: float = 64.0
    nonlinear_on: bool = True
    blowup_gradient_factor: float = 10.0
    boundary_mass_tol: float = 1e-8
    log_stride: int = 100
    virial_radius: float | None = None
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.p > 3:
            raise ContractViolation(f"p must exceed 3, got {self.p}")
        if not 0 < self.dt <= 0.01:
            raise ContractViolation(f"dt must lie in (0, 0.01], got {self.dt}")
        if not self.t_end > 0:
            raise ContractViolation(f"t_end must be positive, got {self.t_end}")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ContractViolation("t_end must be an integer multiple of dt")
        if int(self.log_stride) < 1:
            raise ContractViolation("log_stride must be a positive integer")
        for t in self.snapshot_times:
            k = t / self.dt
            if not 0 <= t <= self.t_end or abs(k - round(k)) > 1e-6 * max(1.0, k):
                raise ContractViolation(f"snapshot time {t} is not a step time")
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def grid(self) -> RadialGrid:
        return RadialGrid(self.n, self.r_max)

    @property
    def cutoff_radius(self) -> float:
        return self.virial_radius if self.virial_radius else self.r_max / 10.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        return d


@dataclass
class TrajectoryLog:
    times: list[float] = field(default_factory=list)
    reports: list[FunctionalReport] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    sup_norm: list[float] = field(default_factory=list)
    virial: list[float] = field(default_factory=list)
    # running time integrals of int|u|^{p+1}, int (A_theta/r)^2|u|^2, int A_0|u|^2
    morawetz_accumulators: list[tuple[float, float, float]] = field(default_factory=list)
    termination: str = "completed"
    termination_time: float | None = None
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)
    final_state: RadialField | None = None
    config: SimConfig | None = None
    wall_time: float = 0.0

    CSV_HEADER = ("t", "M", "E", "S", "K", "grad_norm", "sup_norm", "virial",
                  "morawetz_p", "morawetz_q", "morawetz_a0")

    def __len__(self):
        return len(self.times)

    def rows(self):
        for i, t in enumerate(self.times):
            rep = self.reports[i]
            yield (t, rep.mass, rep.energy, rep.action, rep.nehari, self.grad_norm[i],
                   self.sup_norm[i], self.virial[i], *self.morawetz_accumulators[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for row in self.rows():
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def manifest(self) -> dict:
        return {
            "config": self.config.to_dict() if self.config else None,
            "termination": self.termination,
            "termination_time": self.termination_time,
            "logged_points": len(self),
        }

    def to_json(self) -> str:
        return json.dumps(self.manifest(), indent=2, sort_keys=True)


class LinearPropagator:
    """Compact Crank-Nicolson step for ``u_t = i lap u`` with a fixed (signed) dt."""

    def __init__(self, grid: RadialGrid, dt: float):
        self.grid = grid
        self.dt = dt
        a = 0.5j * dt
        b = grid.dr ** 2 / 12.0
        lower, diag, upper = grid.laplacian_bands
        self._rhs_coef = b + a
        dl = ((b - a) * lower).astype(complex)
        d = (1.0 + (b - a) * diag).astype(complex)
        du = ((b - a) * upper).astype(complex)
        dl, d, du, du2, ipiv, info = lapack.zgttrf(dl, d, du)
        if info != 0:
            raise RuntimeError(f"tridiagonal factorization failed (info={info})")
        self._lu = (dl, d, du, du2, ipiv)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        rhs = values + self._rhs_coef * apply_laplacian(values, self.grid)
        out, info = lapack.zgttrs(*self._lu, rhs)
        if info != 0:
            raise RuntimeError(f"tridiagonal solve failed (info={info})")
        return out


@lru_cache(maxsize=16)
def linear_propagator(grid: RadialGrid, dt: float) -> LinearPropagator:
    return LinearPropagator(grid, dt)


def nonlinear_potential(values: np.ndarray, grid: RadialGrid, p: float):
    """``V = A_0 + (A_theta/r)^2 - |u|^{p-1}`` and the gauge samples it came from."""
    rho = np.abs(values) ** 2
    pot = gauge_from_density(rho, grid)
    v = pot.a_zero + pot.a_theta_over_r ** 2 - rho ** ((p - 1) / 2)
    return v, rho, pot


def _rotate(values, potential, dt):
    return values * np.exp(-1j * potential * dt)


def step_strang(u: RadialField, dt: float, p: float, nonlinear_on: bool = True) -> RadialField:
    """One Strang step of size dt (negative dt runs backward)."""
    grid = u.grid
    lin = linear_propagator(grid, dt)
    v = u.values
    if nonlinear_on:
        v = _rotate(v, nonlinear_potential(v, grid, p)[0], dt / 2)
    v = lin(v)
    if nonlinear_on:
        v = _rotate(v, nonlinear_potential(v, grid, p)[0], dt / 2)
    if not np.all(np.isfinite(v)):
        raise CorruptedStateError("non-finite value after Strang step")
    return u.with_values(v)


def free_propagate(u: RadialField, t: float, dt: float) -> RadialField:
    """Apply the discrete free flow ``exp(i t lap)``; t may be negative."""
    if not dt > 0:
        raise ContractViolation("dt must be positive")
    k = abs(t) / dt
    steps = int(round(k))
    if abs(k - steps) > 1e-6 * max(1.0, k):
        raise ContractViolation("|t| must be an integer multiple of dt")
    if steps == 0:
        return u
    lin = linear_propagator(u.grid, math.copysign(dt, t))
    v = u.values
    for _ in range(steps):
        v = lin(v)
    return u.with_values(v)


def _morawetz_integrands(rho, pot, grid, p):
    return np.array([
        integrate_radial(rho ** ((p + 1) / 2), grid),
        integrate_radial(pot.a_theta_over_r ** 2 * rho, grid),
        integrate_radial(pot.a_zero * rho, grid),
    ])


def propagate(u0: RadialField, cfg: SimConfig) -> TrajectoryLog:
    """Run the Strang scheme to ``cfg.t_end`` or until a termination trigger fires."""
    grid = cfg.grid
    if u0.grid != grid:
        raise ContractViolation("initial field is not on the configured grid")
    started = time.perf_counter()
    p, dt = cfg.p, cfg.dt
    lin = linear_propagator(grid, dt)
    cutoff = CutoffProfile.build(grid, cfg.cutoff_radius)
    outer = grid.nodes > 0.9 * grid.r_max
    log = TrajectoryLog(config=cfg)
    snap_steps = {int(round(t / dt)): t for t in cfg.snapshot_times}

    v = u0.values.copy()
    pot_v, rho, pot = nonlinear_potential(v, grid, p)
    integrand = _morawetz_integrands(rho, pot, grid, p)
    acc = np.zeros(3)
    grad0 = math.sqrt(kinetic_energy(u0))
    mass0 = integrate_radial(rho, grid)

    def record(t):
        field_ = RadialField(grid, v)
        rep = report(field_, p)
        log.times.append(t)
        log.reports.append(rep)
        log.grad_norm.append(math.sqrt(rep.grad_kinetic))
        log.sup_norm.append(float(np.max(np.abs(v))))
        log.virial.append(virial_from_values(v, cutoff))
        log.morawetz_accumulators.append(tuple(float(x) for x in acc))

    record(0.0)
    if 0 in snap_steps:
        log.snapshots[snap_steps[0]] = v.copy()

    for k in range(1, cfg.steps + 1):
        t = k * dt
        if cfg.nonlinear_on:
            v = _rotate(v, pot_v, dt / 2)
        v = lin(v)
        if not np.all(np.isfinite(v)):
            log.termination, log.termination_time = "blowup_detected", t
            break
        pot_v, rho, pot = nonlinear_potential(v, grid, p)
        if cfg.nonlinear_on:
            v = _rotate(v, pot_v, dt / 2)
        new_integrand = _morawetz_integrands(rho, pot, grid, p)
        acc += 0.5 * dt * (integrand + new_integrand)
        integrand = new_integrand

        grad = math.sqrt(kinetic_energy(RadialField(grid, v))) if grad0 > 0 else 0.0
        if not np.isfinite(grad) or (grad0 > 0 and grad > cfg.blowup_gradient_factor * grad0):
            log.termination, log.termination_time = "blowup_detected", t
            record(t)
            break
        if mass0 > 0 and integrate_radial(np.where(outer, rho, 0.0), grid) > cfg.boundary_mass_tol * mass0:
            log.termination, log.termination_time = "boundary_contaminated", t
            record(t)
            break
        if k in snap_steps:
            log.snapshots[snap_steps[k]] = v.copy()
        if k % cfg.log_stride == 0 or k == cfg.steps:
            record(t)

    log.final_state = RadialField(grid, v)
    log.wall_time = time.perf_counter() - started
    return log


def require_completed(log: TrajectoryLog):
    if log.termination != "completed":
        raise DomainError(f"run terminated with {log.termination}")
