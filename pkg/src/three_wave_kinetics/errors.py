"""Exception taxonomy.

Plain precondition violations (bad shapes, out-of-range parameters) raise
``ValueError`` as usual.  Everything that can go wrong *numerically* while a
computation is otherwise well posed derives from :class:`NumericsError`, so
callers (notably the command line driver) can map failures onto a small set
of exit codes without pattern matching on messages.
"""

from __future__ import annotations

__all__ = [
    "KineticsError",
    "ConfigError",
    "NumericsError",
    "PoleError",
    "BranchTrackingError",
    "ContourTruncationError",
    "DivergenceError",
    "FitConditionError",
    "StabilityError",
    "NonmonotoneError",
    "ToleranceError",
]


class KineticsError(Exception):
    """Base class for everything raised deliberately by this package."""


class ConfigError(KineticsError):
    """A scenario configuration is malformed or inconsistent."""


class NumericsError(KineticsError):
    """A numerical evaluation failed in a detectable way."""


class PoleError(NumericsError):
    """An evaluation point sits on (or numerically too close to) a pole."""


class BranchTrackingError(NumericsError):
    """A logarithm branch could not be followed continuously along a contour."""


class ContourTruncationError(NumericsError):
    """A truncated contour integral has an estimated tail above tolerance."""


class DivergenceError(NumericsError):
    """An integral or moment diverges for the supplied data/tail model."""


class FitConditionError(NumericsError):
    """A least-squares fit is too ill conditioned to be meaningful."""


class StabilityError(NumericsError):
    """A time step produced symptoms of numerical instability."""


class NonmonotoneError(NumericsError):
    """A quantity that must be strictly monotone failed to be so."""


class ToleranceError(KineticsError):
    """A scenario-level acceptance tolerance was not met."""
