"""Localized virial weight and the radial virial functional."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ContractViolation
from .grid import RadialField, RadialGrid, integrate_radial

# chi'(s) on [1, 10] as a quintic in t = (s - 1)/9 with chi'(1) = 1, chi''(1) = 1,
# chi'''(1) = 0 and chi', chi'', chi''' all zero at s = 10.
_SLOPE = Polynomial([1.0, 9.0, 0.0, -64.0, 87.0, -33.0])
_SLOPE_INT = _SLOPE.integ()
_SLOPE_DER = _SLOPE.deriv()


def _chi_unit(s: np.ndarray):
    s = np.asarray(s, dtype=float)
    t = np.clip((s - 1.0) / 9.0, 0.0, 1.0)
    inner = s <= 1.0
    chi = np.where(inner, 0.5 * s * s, 0.5 + 9.0 * _SLOPE_INT(t))
    d1 = np.where(inner, s, np.where(s >= 10.0, 0.0, _SLOPE(t)))
    d2 = np.where(inner, 1.0, np.where(s >= 10.0, 0.0, _SLOPE_DER(t) / 9.0))
    return chi, d1, d2


@dataclass(frozen=True)
class CutoffProfile:
    """``chi_R(r) = R^2 chi(r/R)``: ``r^2/2`` up to R, constant past 10R, ``chi'' <= 1``."""

    big_r: float
    chi: np.ndarray
    chi_prime: np.ndarray
    chi_second: np.ndarray
    grid: RadialGrid

    @classmethod
    def build(cls, grid: RadialGrid, big_r: float) -> "CutoffProfile":
        if not big_r > 0:
            raise ContractViolation(f"cutoff radius must be positive, got {big_r}")
        chi, d1, d2 = _chi_unit(grid.nodes / big_r)
        return cls(float(big_r), big_r ** 2 * chi, big_r * d1, d2, grid)


def virial_value(u: RadialField, cutoff: CutoffProfile) -> float:
    """``Im int conj(u) (D_1 u d_1 chi_R + D_2 u d_2 chi_R) dx``.

    Under the radial ansatz ``x . A = 0``, so the gauge terms drop and the
    quantity is ``Im int conj(u) u_r chi_R'(r) dx``.
    """
    if u.grid != cutoff.grid:
        raise ContractViolation("field and cutoff live on different grids")
    return virial_from_values(u.values, cutoff)


def virial_from_values(values: np.ndarray, cutoff: CutoffProfile) -> float:
    du = np.gradient(values, cutoff.grid.dr, edge_order=2)
    return integrate_radial(np.imag(np.conj(values) * du) * cutoff.chi_prime, cutoff.grid)
