# cprsutils/hydro/errors.py
from __future__ import annotations


class HydroError(RuntimeError):
    """Base class for simulation, solver and harness failures."""


class SpecValidationError(HydroError, ValueError):
    """An experiment spec or parameter set failed validation."""


class NotBoundarySiteError(HydroError, ValueError):
    """Boundary dynamics requested at a site outside the reservoir edge."""


class StateSpaceTooLargeError(HydroError):
    """The exact generator oracle was asked for more than its site cap."""


class NonFiniteRateError(HydroError):
    """A rate or rate bound came out NaN or infinite."""


class InconsistentEventError(HydroError):
    """An event record does not match the configuration it was applied to."""


class CflViolationError(HydroError):
    """Explicit time step exceeds the stability bound h^2 / (4d)."""


class SimplexViolationError(HydroError):
    """Densities left the invariant region beyond tolerance."""


class BoundaryVanishingError(HydroError):
    """A test function that must vanish on the reservoir edge does not."""


class NonConvergenceError(HydroError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class AssertionFailure(HydroError):
    """An in-run acceptance check failed (CLI exit code 1)."""
