"""Conserved and variational functionals of a radial field.

Notation used throughout the package::

    M = int |u|^2                  mass
    D = int |grad u|^2 + Q         covariant kinetic energy, Q = int (A_theta/r)^2 |u|^2
    P = int |u|^{p+1}
    E = D/2 - P/(p+1)              energy
    S = E + M/2                    action
    K = D - (p-1)/(p+1) P          Nehari functional, dS(u_lam)/dlam at lam = 1
    L = S - K/2

The covariant kinetic energy is always assembled from the radial identity
``|(grad + iA) u|^2 = |grad u|^2 + (A_theta/r)^2 |u|^2``; no planar vector potential
is ever formed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ContractViolation, DomainError
from .gauge import gauge_from_field
from .grid import (RadialField, apply_compact_laplacian, integrate_radial, kinetic_energy)


def _check_p(p: float) -> float:
    if not p > 3:
        raise ContractViolation(f"exponent must satisfy p > 3, got {p}")
    return float(p)


@dataclass(frozen=True)
class FunctionalReport:
    mass: float
    energy: float
    action: float
    nehari: float
    l_value: float
    q_charge: float
    grad_kinetic: float
    p_norm: float
    p: float

    @property
    def covariant_kinetic(self) -> float:
        return self.grad_kinetic + self.q_charge

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_parts(cls, mass, grad_kinetic, q_charge, p_norm, p) -> "FunctionalReport":
        d = grad_kinetic + q_charge
        energy = 0.5 * d - p_norm / (p + 1)
        action = energy + 0.5 * mass
        nehari = d - (p - 1) / (p + 1) * p_norm
        return cls(mass=float(mass), energy=float(energy), action=float(action),
                   nehari=float(nehari), l_value=float(action - 0.5 * nehari),
                   q_charge=float(q_charge), grad_kinetic=float(grad_kinetic),
                   p_norm=float(p_norm), p=float(p))


def q_charge(u: RadialField) -> float:
    """``int (A_theta(|u|^2) / r)^2 |u|^2 dx``."""
    pot = gauge_from_field(u)
    return integrate_radial(pot.a_theta_over_r ** 2 * u.density, u.grid)


def report(u: RadialField, p: float) -> FunctionalReport:
    p = _check_p(p)
    rho = u.density
    pot = gauge_from_field(u)
    return FunctionalReport.from_parts(
        mass=integrate_radial(rho, u.grid),
        grad_kinetic=kinetic_energy(u),
        q_charge=integrate_radial(pot.a_theta_over_r ** 2 * rho, u.grid),
        p_norm=integrate_radial(rho ** ((p + 1) / 2), u.grid),
        p=p,
    )


def rescaled_report(rep: FunctionalReport, lam: float) -> FunctionalReport:
    """Functionals of ``u_lam(x) = lam u(lam x)`` from those of ``u``, by exact scaling.

    M is invariant, ``D`` scales as ``lam^2`` and ``P`` as ``lam^(p-1)``.
    """
    if not lam > 0:
        raise ContractViolation(f"scaling factor must be positive, got {lam}")
    return FunctionalReport.from_parts(
        mass=rep.mass,
        grad_kinetic=lam ** 2 * rep.grad_kinetic,
        q_charge=lam ** 2 * rep.q_charge,
        p_norm=lam ** (rep.p - 1) * rep.p_norm,
        p=rep.p,
    )


def scale_field(u: RadialField, lam: float) -> RadialField:
    """Resample ``lam * u(lam r)`` on the same grid.

    Cubic spline with zero slope at the origin, zero past ``r_max``.
    """
    if not lam > 0:
        raise ContractViolation(f"scaling factor must be positive, got {lam}")
    if lam == 1:
        return u
    r = u.grid.nodes
    x = lam * r
    v = u.values
    spline = CubicSpline(r, v, bc_type=((1, 0.0), "natural"))
    out = np.where(x <= r[-1], spline(np.minimum(x, r[-1])), 0.0)
    return u.with_values(lam * out)


def nehari_lambda_star(rep: FunctionalReport) -> float:
    """Dilation factor putting the field on the Nehari manifold.

    ``lam*^(p-3) = (p+1) D / ((p-1) P)``.
    """
    if rep.p_norm <= 0:
        raise DomainError("zero field has no Nehari projection")
    p = rep.p
    ratio = (p + 1) * rep.covariant_kinetic / ((p - 1) * rep.p_norm)
    return float(ratio ** (1.0 / (p - 3)))


def nehari_project(u: RadialField, p: float, rtol: float = 1e-13) -> tuple[RadialField, float]:
    """Dilate ``u`` so that the grid value of K vanishes.

    Starts from the closed-form ``lam*`` and polishes it with a bracketed root
    search on ``K(scale_field(u, lam))``, which absorbs the resampling error.
    """
    rep = report(u, p)
    lam0 = nehari_lambda_star(rep)

    def k_of(lam):
        return report(scale_field(u, lam), p).nehari

    lo, hi = lam0 * 0.99, lam0 * 1.01
    k_lo, k_hi = k_of(lo), k_of(hi)
    for _ in range(60):
        if k_lo > 0 > k_hi:
            break
        lo, hi = lo * 0.9, hi * 1.1
        k_lo, k_hi = k_of(lo), k_of(hi)
    else:
        raise DomainError("could not bracket the Nehari root")
    lam = brentq(k_of, lo, hi, xtol=1e-15, rtol=rtol)
    return scale_field(u, lam), lam


def action_gradient(u: RadialField, p: float) -> RadialField:
    """Weighted gradient of S: ``-lap_c u + u + ((A_theta/r)^2 + A_0) u - |u|^{p-1} u``.

    Exact for the discrete action: ``dS(u)[h] = Re int S'(u) conj(h) dx`` with the
    grid quadrature.
    """
    p = _check_p(p)
    pot = gauge_from_field(u)
    v = u.values
    rho = u.density
    grad = (-apply_compact_laplacian(v, u.grid) + v
            + (pot.a_theta_over_r ** 2 + pot.a_zero) * v
            - rho ** ((p - 1) / 2) * v)
    return u.with_values(grad)


def on_manifold_action(rep: FunctionalReport) -> float:
    """``S - K/(p-1) = (p-3)/(2(p-1)) D + M/2``; equals S when K = 0."""
    p = rep.p
    return (p - 3) / (2 * (p - 1)) * rep.covariant_kinetic + 0.5 * rep.mass


def projected_action(rep: FunctionalReport) -> float:
    """``S(u_lam*)``, the action after Nehari projection, in closed form."""
    return on_manifold_action(rescaled_report(rep, nehari_lambda_star(rep)))
