#!/usr/bin/env python
"""
Exception hierarchy shared by the geometry, numerics and verification packages.
"""


class RegularityError(Exception):
    """Base class for all errors raised by this package."""


class PolytopeParseError(RegularityError, ValueError):
    """The polytope file or vertex/face arrays do not describe a valid polyhedron."""


class OpenBoundaryError(PolytopeParseError):
    """Some edge is not shared by exactly two faces."""


class DegenerateFaceError(PolytopeParseError):
    """A face has (numerically) zero area."""


class DomainError(RegularityError, ValueError):
    """A point or stencil lies outside the domain where an operation is defined."""


class SingularPointError(DomainError):
    """A relative distance was requested exactly on the feature it is relative to."""


class ConfigurationError(RegularityError, ValueError):
    """Parameters are outside their admissible range."""

    def __init__(self, message: str, key: str = None):
        super().__init__(message)
        self.key = key


class NonConvergenceError(RegularityError, RuntimeError):
    """An extrapolation ladder or iterative estimate failed to settle."""


class AssemblyError(RegularityError, RuntimeError):
    """The Galerkin system could not be assembled or solved."""
