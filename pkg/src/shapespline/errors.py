"""Exception types raised by shapespline."""


class ShapeSplineError(Exception):
    """Base class for all package errors."""


class DomainError(ShapeSplineError, ValueError):
    """An evaluation point lies outside [0, 1]."""


class MeshError(ShapeSplineError, ValueError):
    """Knots or design points violate their mesh-class constants."""


class ConditioningError(ShapeSplineError, ArithmeticError):
    """A matrix that must be invertible is numerically singular."""


class CyclingError(ShapeSplineError, RuntimeError):
    """The active-set solver hit its iteration cap."""


class InconsistencyError(ShapeSplineError, RuntimeError):
    """Brute-force enumeration found no candidate satisfying KKT."""
