"""Numerical laboratory for the radial Chern-Simons-Schrodinger equation."""

from .errors import ContractViolation, CorruptedStateError, CSSError, DomainError
from .functionals import FunctionalReport, report
from .grid import RadialField, RadialGrid

__all__ = ["CSSError", "ContractViolation", "CorruptedStateError", "DomainError",
           "FunctionalReport", "RadialField", "RadialGrid", "report"]
