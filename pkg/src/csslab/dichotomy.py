"""Threshold classification and run diagnostics: virial rate, Morawetz growth, scattering."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractViolation, DomainError
from .evolution import SimConfig, TrajectoryLog, free_propagate, propagate
from .functionals import report
from .grid import RadialField, RadialGrid, h1_norm

LABELS = ("K_plus", "K_minus", "above_threshold", "on_boundary")
BOUNDARY_SCALE = 1e-10


@dataclass(frozen=True)
class ClassificationResult:
    s_value: float
    k_value: float
    d_reference: float
    set_label: str
    margin: float

    def to_dict(self):
        return asdict(self)


def classify(u0: RadialField, p: float, d_reference: float) -> ClassificationResult:
    """Place ``u0`` in K+, K-, above the threshold, or on the boundary between them."""
    if not d_reference > 0:
        raise ContractViolation("d_reference must be positive")
    if u0.is_zero():
        raise ContractViolation("the zero field is not classified")
    rep = report(u0, p)
    s, k = rep.action, rep.nehari
    gap = (d_reference - s) / d_reference
    k_rel = abs(k) / rep.covariant_kinetic
    if abs(gap) < BOUNDARY_SCALE or k_rel < BOUNDARY_SCALE:
        label = "on_boundary"
    elif gap < 0:
        label = "above_threshold"
    else:
        label = "K_plus" if k > 0 else "K_minus"
    return ClassificationResult(s, k, float(d_reference), label, float(min(gap, k_rel)))


@dataclass
class VirialRateReport:
    max_deviation: float
    relative_deviation: float
    sigma: float
    fitted_constant: float
    big_r: float
    late_rate_max: float
    eventually_negative: bool
    dvdt: list[float] = field(default_factory=list, repr=False)
    two_k: list[float] = field(default_factory=list, repr=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("dvdt")
        d.pop("two_k")
        return d


def _sigma(p: float) -> float:
    return min(2.0, (p - 1) / 2)


def virial_rate_check(log: TrajectoryLog, tol: float = 0.0) -> VirialRateReport:
    """Compare the finite-difference ``dV/dt`` with ``2K(u(t))`` along a logged run.

    The localization error of the cutoff is fitted as ``C R^{-sigma}``.
    """
    if len(log) < 5:
        raise DomainError("virial rate needs at least 5 logged points")
    t = np.asarray(log.times)
    if log.termination != "completed":
        # the last point was logged off-stride at the trigger
        t, keep = t[:-1], slice(0, -1)
    else:
        keep = slice(None)
    v = np.asarray(log.virial)[keep]
    two_k = 2.0 * np.array([r.nehari for r in log.reports])[keep]
    if len(t) < 5:
        raise DomainError("virial rate needs at least 5 regularly logged points")
    dvdt = np.gradient(v, t, edge_order=2)
    dev = np.abs(dvdt - two_k)
    big_r = log.config.cutoff_radius
    sigma = _sigma(log.config.p)
    max_dev = float(max(dev.max() - tol, 0.0))
    late = dvdt[len(dvdt) // 2:]
    return VirialRateReport(
        max_deviation=float(dev.max()),
        relative_deviation=float(dev.max() / max(np.abs(two_k).max(), 1e-300)),
        sigma=sigma,
        fitted_constant=max_dev * big_r ** sigma,
        big_r=big_r,
        late_rate_max=float(late.max()),
        eventually_negative=bool(late.max() < 0),
        dvdt=dvdt.tolist(),
        two_k=two_k.tolist(),
    )


@dataclass
class CoercivityReport:
    fitted_constant: float
    max_ratio: float
    spread: float
    positive: bool

    def to_dict(self):
        return asdict(self)


def coercivity_check(log: TrajectoryLog) -> CoercivityReport:
    """Fit ``c`` in ``K(u(t)) >= c (||grad u||^2 + Q(u))`` over the logged points.

    ``c`` is the smallest logged ratio; ``spread`` is max/min and measures how
    stable the ratio stays along the run.
    """
    ratios = np.array([r.nehari / r.covariant_kinetic for r in log.reports
                       if r.covariant_kinetic > 0])
    if ratios.size == 0:
        raise DomainError("coercivity needs a nonzero trajectory")
    c = float(ratios.min())
    spread = float(ratios.max() / c) if c > 0 else math.inf
    return CoercivityReport(c, float(ratios.max()), spread, bool(c > 0))


@dataclass
class MorawetzReport:
    alpha: float
    horizons: list[float]
    accumulators: list[tuple[float, float, float]]
    ratios: list[float]
    spread: float
    identity_error: float
    bounded: bool

    def to_dict(self):
        return asdict(self)

    def ladder_rows(self):
        for t, acc, ratio in zip(self.horizons, self.accumulators, self.ratios):
            yield (t, *acc, ratio)


def morawetz_check(log: TrajectoryLog, p: float, horizons=(5.0, 10.0, 15.0, 20.0, 25.0),
                   max_spread: float = 10.0) -> MorawetzReport:
    """``accumulator(T) / T^alpha`` on a ladder of horizons, ``alpha = 1/(1 + sigma)``.

    The accumulator is the sum of the three running space-time integrals.  The
    identity error compares the running ``A_0`` integral with twice the running
    ``(A_theta/r)^2`` integral.
    """
    if log.termination != "completed":
        raise DomainError("Morawetz check needs a completed run")
    alpha = 1.0 / (1.0 + _sigma(p))
    times = np.asarray(log.times)
    accs, ratios, ident = [], [], 0.0
    for big_t in horizons:
        idx = np.flatnonzero(np.isclose(times, big_t, rtol=0, atol=1e-9))
        if idx.size == 0:
            raise DomainError(f"horizon {big_t} is not a logged time")
        a = log.morawetz_accumulators[idx[0]]
        accs.append(tuple(a))
        ratios.append(sum(a) / big_t ** alpha)
        if a[1] > 0:
            ident = max(ident, abs(a[2] - 2 * a[1]) / (2 * a[1]))
    positive = [r for r in ratios if r > 0]
    if not positive:
        spread = 1.0
    elif len(positive) < len(ratios):
        spread = math.inf
    else:
        spread = max(positive) / min(positive)
    return MorawetzReport(alpha, list(map(float, horizons)), accs, ratios, spread, ident,
                          bool(spread < max_spread))


@dataclass
class ScatteringReport:
    times: list[float]
    increments: list[float]
    h1_initial: float
    decreasing: bool
    final_relative: float
    scattered: bool

    def to_dict(self):
        return asdict(self)


def scattering_monitor(log: TrajectoryLog, window: int = 5, threshold: float = 1e-3) -> ScatteringReport:
    """Cauchy test on ``w(t) = exp(-it lap) u(t)`` over the snapshots of a completed run.

    The discrete free flow is an isometry of the discrete H^1 norm, so
    ``||w(t_{k+1}) - w(t_k)|| = ||exp(-i(t_{k+1} - t_k) lap) u(t_{k+1}) - u(t_k)||``,
    which only needs the short backward flow between checkpoints.
    """
    if log.termination != "completed":
        raise DomainError(f"scattering monitor refuses a run ending in {log.termination}")
    cfg = log.config
    snaps = sorted(log.snapshots)
    if 0.0 not in log.snapshots:
        raise DomainError("scattering monitor needs the t = 0 snapshot")
    if len(snaps) < window + 1:
        raise DomainError(f"need at least {window + 1} snapshots")
    grid = cfg.grid
    u0 = RadialField(grid, log.snapshots[0.0])
    h0 = h1_norm(u0)
    incs = []
    for a, b in zip(snaps[:-1], snaps[1:]):
        ub = RadialField(grid, log.snapshots[b])
        back = free_propagate(ub, -(b - a), cfg.dt)
        incs.append(h1_norm(RadialField(grid, back.values - log.snapshots[a])))
    tail = incs[-window:]
    decreasing = len(tail) == window and all(x > y for x, y in zip(tail[:-1], tail[1:]))
    final_rel = incs[-1] / h0
    return ScatteringReport(snaps[1:], incs, h0, decreasing, final_rel,
                            bool(decreasing and final_rel < threshold))


def gaussian_datum(grid: RadialGrid, amplitude: float, width: float = 1.0,
                   chirp: float = 0.0) -> RadialField:
    """``amplitude * exp(-r^2 / (2 width^2)) * exp(i chirp r^2)``."""
    r = grid.nodes
    return RadialField(grid, amplitude * np.exp(-r ** 2 / (2 * width ** 2) + 1j * chirp * r ** 2),
                       label=f"gaussian a={amplitude} w={width}")


@dataclass
class SuiteRow:
    amplitude: float
    s_value: float
    k_value: float
    label: str
    outcome: str
    trigger_time: float | None
    scattered: bool | None
    consistent: bool | None

    def to_dict(self):
        return asdict(self)


def dichotomy_suite(p: float, amplitudes, d_reference: float, width: float = 1.0,
                    plus_config: SimConfig | None = None,
                    minus_config: SimConfig | None = None) -> list[SuiteRow]:
    """Classify and run Gaussian data of each amplitude.

    K+ data run on ``plus_config`` (wide domain, long horizon, with snapshots for
    the scattering monitor); everything else runs on ``minus_config`` (fine mesh).
    Boundary-labelled data are skipped.
    """
    plus_config = plus_config or SimConfig(p=p, dt=0.01, t_end=25.0, n=8192, r_max=256.0,
                                           log_stride=50,
                                           snapshot_times=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0))
    minus_config = minus_config or SimConfig(p=p, dt=1e-4, t_end=5.0, n=8192, r_max=16.0,
                                             log_stride=100)
    rows = []
    for amp in amplitudes:
        if amp == 0:
            raise ContractViolation("amplitude 0 gives the zero field")
        cfg = plus_config
        probe = classify(gaussian_datum(cfg.grid, amp, width), p, d_reference)
        if probe.set_label == "on_boundary":
            rows.append(SuiteRow(amp, probe.s_value, probe.k_value, probe.set_label,
                                 "skipped", None, None, None))
            continue
        if probe.set_label != "K_plus":
            cfg = minus_config
        u0 = gaussian_datum(cfg.grid, amp, width)
        cls = classify(u0, p, d_reference)
        log = propagate(u0, cfg)
        scattered = None
        if log.termination == "completed" and len(log.snapshots) >= 6:
            scattered = scattering_monitor(log).scattered
        consistent = None
        if cls.set_label == "K_plus":
            consistent = log.termination == "completed" and bool(scattered)
        elif cls.set_label == "K_minus":
            consistent = log.termination == "blowup_detected"
        rows.append(SuiteRow(amp, cls.s_value, cls.k_value, cls.set_label, log.termination,
                             log.termination_time, scattered, consistent))
    return rows
