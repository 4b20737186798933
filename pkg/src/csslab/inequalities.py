"""Empirical checks of the functional inequalities for radial fields.

Each case evaluates ``LHS / RHS`` on random test fields.  Where the sharp
constant follows in closed form it is recorded and any sampled ratio above it
(with a 1e-6 relative margin) counts as a violation; otherwise only finiteness,
seed stability and dilation invariance are checked.

Closed-form constants:

* ``|A_theta| <= M / (4 pi)``                               (b = 0, q = inf, s = 2)
* ``|A_theta| / r^2 <= ||u||_inf^2 / 4``                    (b = 2, q = inf, s = inf)
* ``r^2 |A_0| <= M^2 / (16 pi^2)``                          (q = inf, s1 = s2 = 2, b = 0, a = -2)
* ``sup r^{1/2}|u| <= (||u||_2 ||grad u||_2 / pi)^{1/2}``    (Strauss, homogeneous form)
* ``||grad |u| ||_2^2 <= ||D u||_2^2``                      (diamagnetic)
* ``||u||_4 <= 0.6430 (||grad u||_2 ||u||_2)^{1/2}``        (sharp planar GN at q = 4)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, DomainError
from .functionals import q_charge
from .gauge import gauge_from_field
from .grid import (RadialField, RadialGrid, flux_kinetic_energy, kinetic_energy,
                   lq_norm, strauss_ratio)

CASE_NAMES = ("GN", "MGN", "Strauss", "diamagnetic", "atheta_weighted", "azero_weighted", "cor_a01")
INF = math.inf
# (2 / ||Q||_2^2)^{1/4} with ||Q||_2^2 = 11.7009 for the planar cubic ground state
GN4_SHARP = (2.0 / 11.700896) ** 0.25
_EPS = 1e-12


def _lt(a, b):
    return a < b - _EPS


def _le(a, b):
    return a <= b + _EPS


def _eq(a, b):
    return abs(a - b) <= 1e-9


def _inv(x):
    return 0.0 if math.isinf(x) else 1.0 / x


def atheta_admissible(b, q, s) -> bool:
    """``2 < s <= inf, b in [0, 2], b/2 = 1 - 2/s + 1/q``, or the endpoint ``b = 0, q = inf, s = 2``."""
    if not (_le(1, q) and _le(2, s)):
        return False
    if _eq(b, 0) and math.isinf(q) and _eq(s, 2):
        return True
    return (_lt(2, s) and _le(0, b) and _le(b, 2)
            and _eq(b / 2, 1 - 2 * _inv(s) + _inv(q)))


def azero_regime(q, s1, s2, b, a) -> str | None:
    """Which admissible regime the tuple falls in ("bf2", "bf2mu1", "bf2mm1"), else None.

    Strict inequalities stay strict; edges of the regimes are not included.
    """
    if not (_le(1, q) and _le(2, s1) and _le(2, s2)):
        return None
    t = 2 * _inv(s1) + 2 * _inv(s2)
    iq = _inv(q)
    if not math.isinf(q):
        if (_lt(2, s1) and _le(iq, t) and _le(t, 1 + iq)
                and _eq(a / 2 + b, 1 - t + iq) and _lt(a, 2 * iq)):
            return "bf2"
        return None
    if _lt(2, s1) and _le(0, t) and _le(t, 1) and _eq(a / 2 + b, 1 - t) and _le(a, 0):
        return "bf2mu1"
    if _eq(s1, 2) and _eq(s2, 2) and _eq(b, 0) and _eq(a, -2):
        return "bf2mm1"
    return None


def cor_a01_admissible(q, a) -> bool:
    if math.isinf(q):
        return _le(-2, a) and _le(a, 0)
    return _le(1, q) and _lt(-2, a) and _lt(a, 2 / q)


@dataclass(frozen=True)
class InequalityCase:
    name: str
    exponents: dict = field(default_factory=dict)
    family: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in CASE_NAMES:
            raise ContractViolation(f"unknown inequality {self.name!r}")
        e = {k: float(v) for k, v in self.exponents.items()}
        object.__setattr__(self, "exponents", e)
        ok = {
            "GN": lambda: _le(2, e["q"]) and not math.isinf(e["q"]),
            "MGN": lambda: _le(2, e["q"]) and not math.isinf(e["q"]),
            "Strauss": lambda: True,
            "diamagnetic": lambda: True,
            "atheta_weighted": lambda: atheta_admissible(e["b"], e["q"], e["s"]),
            "azero_weighted": lambda: azero_regime(e["q"], e["s1"], e["s2"], e["b"], e["a"]) is not None,
            "cor_a01": lambda: cor_a01_admissible(e["q"], e["a"]),
        }[self.name]
        try:
            good = ok()
        except KeyError as exc:
            raise ContractViolation(f"{self.name} needs exponent {exc}") from None
        if not good:
            raise ContractViolation(f"exponents {e} are not admissible for {self.name}")

    @property
    def label(self) -> str:
        parts = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.exponents.items()))
        return f"{self.name}({parts})" if parts else self.name

    @property
    def recorded_constant(self) -> float | None:
        e = self.exponents
        if self.name in ("GN", "MGN") and _eq(e["q"], 4):
            return GN4_SHARP
        if self.name == "Strauss":
            return 1.0 / math.sqrt(math.pi)
        if self.name == "diamagnetic":
            return 1.0
        if self.name == "atheta_weighted" and math.isinf(e["q"]):
            if _eq(e["b"], 0) and _eq(e["s"], 2):
                return 1.0 / (4 * math.pi)
            if _eq(e["b"], 2) and math.isinf(e["s"]):
                return 0.25
        if self.name == "azero_weighted" and azero_regime(**_azero_args(e)) == "bf2mm1":
            return 1.0 / (16 * math.pi ** 2)
        return None

    @property
    def scaling_critical(self) -> bool:
        """Whether ``u(r) -> u(r / lam)`` leaves the ratio unchanged."""
        return self.name in ("GN", "Strauss", "atheta_weighted", "azero_weighted")


def _azero_args(e):
    return {"q": e["q"], "s1": e["s1"], "s2": e["s2"], "b": e["b"], "a": e["a"]}


def _fmt(v):
    return "inf" if math.isinf(v) else f"{v:g}"


def weighted_lq(values, grid: RadialGrid, c: float, q: float, origin_coef: float,
                origin_order: float, tail_value: float | None = None) -> float:
    """``|| g(r) r^{-c} ||_{L^q(R^2)}`` for samples of g.

    Near the origin ``g ~ origin_coef * r^origin_order``; the first half cell is
    integrated analytically with that behaviour, the rest by the trapezoid rule
    on nodes ``j >= 1``.  ``tail_value`` extends g as a constant past ``r_max``
    (the exact tail of ``A_theta`` for data supported inside the grid).
    """
    g = np.abs(np.asarray(values, dtype=float))
    r, h = grid.nodes, grid.dr
    m = origin_order - c
    if math.isinf(q):
        top = float(np.max(g[1:] * r[1:] ** (-c)))
        if m < 0 and origin_coef != 0:
            return INF
        if m == 0:
            top = max(top, abs(origin_coef))
        return top
    if m * q + 2 <= 0 and origin_coef != 0:
        return INF
    w = 2 * math.pi * r * h
    w[-1] *= 0.5
    body = float(np.sum(w[1:] * (g[1:] * r[1:] ** (-c)) ** q))
    body -= 2 * math.pi * (0.5 * h) * (h / 2) * (g[1] * h ** (-c)) ** q  # left half of cell 1
    cell = 2 * math.pi * abs(origin_coef) ** q * h ** (m * q + 2) / (m * q + 2)
    tail = 0.0
    if tail_value is not None and tail_value != 0:
        if c * q <= 2:
            return INF
        tail = 2 * math.pi * abs(tail_value) ** q * grid.r_max ** (2 - c * q) / (c * q - 2)
    return (body + cell + tail) ** (1.0 / q)


def _atheta_norm(u: RadialField, b: float, q: float) -> float:
    pot = gauge_from_field(u)
    f0 = float(u.density[0])
    return weighted_lq(pot.a_theta, u.grid, b, q, origin_coef=-f0 / 4, origin_order=2,
                       tail_value=float(pot.a_theta[-1]))


def _azero_norm(u: RadialField, a: float, q: float) -> float:
    pot = gauge_from_field(u)
    return weighted_lq(pot.a_zero, u.grid, a, q, origin_coef=float(pot.a_zero[0]), origin_order=0)


def _moment_norm(u: RadialField, b: float, s: float) -> float:
    return weighted_lq(np.abs(u.values), u.grid, -b, s, origin_coef=abs(u.values[0]),
                       origin_order=0)


def empirical_ratio(case: InequalityCase, u: RadialField) -> float:
    """``LHS / RHS`` of the inequality named by ``case`` on the field ``u``."""
    if u.is_zero():
        raise ContractViolation("inequality ratios of the zero field are undefined")
    e = case.exponents
    if case.name == "GN":
        q = e["q"]
        alpha = 1 - 2 / q
        den = kinetic_energy(u) ** (alpha / 2) * lq_norm(u, 2) ** (1 - alpha)
        num = lq_norm(u, q)
    elif case.name == "MGN":
        q = e["q"]
        d = kinetic_energy(u) + q_charge(u)
        den = d ** ((q - 2) / (2 * q)) * lq_norm(u, 2) ** (2 / q)
        num = lq_norm(u, q)
    elif case.name == "Strauss":
        return strauss_ratio(u)
    elif case.name == "diamagnetic":
        # flux form: |(|a| - |b|)| <= |a - b| holds edge by edge
        num = flux_kinetic_energy(u.with_values(np.abs(u.values)))
        den = flux_kinetic_energy(u) + q_charge(u)
    elif case.name == "atheta_weighted":
        num = _atheta_norm(u, e["b"], e["q"])
        den = lq_norm(u, e["s"]) ** 2
    elif case.name == "azero_weighted":
        num = _azero_norm(u, e["a"], e["q"])
        den = lq_norm(u, e["s1"]) ** 2 * _moment_norm(u, e["b"], e["s2"]) ** 2
    else:  # cor_a01
        num = _azero_norm(u, e["a"], e["q"])
        h1 = lq_norm(u, 2) + math.sqrt(kinetic_energy(u))
        den = h1 ** 4
    if not den > 0:
        raise DomainError(f"{case.label}: right-hand side vanishes")
    return float(num / den)


@dataclass(frozen=True)
class MixtureSpec:
    """Random radial test fields ``sum_k a_k exp(-(r - c_k)^2 / (2 w_k^2)) exp(i beta r^2)``."""

    components: tuple[int, int] = (1, 4)
    amplitude: tuple[float, float] = (0.2, 2.0)
    width: tuple[float, float] = (0.4, 2.0)
    center: tuple[float, float] = (0.0, 3.0)
    chirp: tuple[float, float] = (-0.5, 0.5)

    def draw(self, rng: np.random.Generator) -> dict:
        k = int(rng.integers(self.components[0], self.components[1] + 1))
        return {
            "amps": rng.uniform(*self.amplitude, size=k) * rng.choice([-1.0, 1.0], size=k),
            "widths": rng.uniform(*self.width, size=k),
            "centers": np.where(rng.random(k) < 0.5, 0.0, rng.uniform(*self.center, size=k)),
            "chirp": float(rng.uniform(*self.chirp)),
        }


def mixture_field(grid: RadialGrid, params: dict, lam: float = 1.0) -> RadialField:
    """Sample the mixture dilated as ``u(r / lam)`` (exact, not resampled)."""
    r = grid.nodes / lam
    v = np.zeros(grid.n)
    for a, w, c in zip(params["amps"], params["widths"], params["centers"]):
        v = v + a * np.exp(-(r - c) ** 2 / (2 * w * w))
    return RadialField(grid, v * np.exp(1j * params["chirp"] * r ** 2))


DILATIONS = (0.5, 1.0, 2.0)


@dataclass
class SweepReport:
    case: str
    exponents: dict
    n_fields: int
    max_ratio: float
    median_ratio: float
    recorded_constant: float | None
    violations: int
    all_finite: bool
    dilation_spread: float | None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["exponents"] = {k: ("inf" if math.isinf(v) else v) for k, v in self.exponents.items()}
        return d


def sweep_report(case: InequalityCase, n_fields: int, grid: RadialGrid | None = None,
                 seed: int = 0, spec: MixtureSpec | None = None,
                 dilations=DILATIONS) -> SweepReport:
    """Ratios over ``n_fields`` random mixtures plus the dilation spread for critical cases."""
    if n_fields < 1:
        raise ContractViolation("family size must be at least 1")
    grid = grid or RadialGrid(4096, 48.0)
    spec = spec or MixtureSpec()
    rng = np.random.default_rng(seed)
    ratios, spread = [], 0.0
    for _ in range(n_fields):
        params = spec.draw(rng)
        vals = [empirical_ratio(case, mixture_field(grid, params, lam))
                for lam in (dilations if case.scaling_critical else (1.0,))]
        ratios.append(vals[list(dilations).index(1.0)] if case.scaling_critical else vals[0])
        if case.scaling_critical and all(np.isfinite(vals)):
            spread = max(spread, max(vals) / min(vals) - 1.0)
    ratios = np.array(ratios)
    const = case.recorded_constant
    finite = bool(np.all(np.isfinite(ratios)))
    violations = int(np.sum(~np.isfinite(ratios)))
    if const is not None:
        violations += int(np.sum(ratios > const * (1 + 1e-6)))
    return SweepReport(
        case=case.name,
        exponents=dict(case.exponents),
        n_fields=n_fields,
        max_ratio=float(np.max(ratios)),
        median_ratio=float(np.median(ratios)),
        recorded_constant=const,
        violations=violations,
        all_finite=finite,
        dilation_spread=float(spread) if case.scaling_critical else None,
    )


def default_cases() -> list[InequalityCase]:
    """The case list used by the harness and the acceptance suite."""
    return [
        InequalityCase("GN", {"q": 4}),
        InequalityCase("GN", {"q": 6}),
        InequalityCase("MGN", {"q": 4}),
        InequalityCase("MGN", {"q": 6}),
        InequalityCase("Strauss"),
        InequalityCase("diamagnetic"),
        InequalityCase("atheta_weighted", {"b": 0, "q": INF, "s": 2}),
        InequalityCase("atheta_weighted", {"b": 2, "q": INF, "s": INF}),
        InequalityCase("atheta_weighted", {"b": 1, "q": 4, "s": 8 / 3}),
        InequalityCase("atheta_weighted", {"b": 1.5, "q": 2, "s": 8 / 3}),
        InequalityCase("atheta_weighted", {"b": 0.5, "q": INF, "s": 8 / 3}),
        InequalityCase("azero_weighted", {"q": 2, "s1": 4, "s2": 4, "b": 0.25, "a": 0.5}),
        InequalityCase("azero_weighted", {"q": INF, "s1": 4, "s2": 4, "b": 0, "a": 0}),
        InequalityCase("azero_weighted", {"q": INF, "s1": 4, "s2": 4, "b": 0.5, "a": -1}),
        InequalityCase("azero_weighted", {"q": INF, "s1": 2, "s2": 2, "b": 0, "a": -2}),
        InequalityCase("cor_a01", {"q": INF, "a": 0}),
        InequalityCase("cor_a01", {"q": 2, "a": 0.5}),
        InequalityCase("cor_a01", {"q": INF, "a": -2}),
    ]
