import logging
from typing import Optional, Sequence

import numpy as np

from errors import ConfigurationError
from geometry.polytope import Polytope
from numerics.extension import ball_solution
from numerics.fields import Field, constant, corner_singular, face_power, gaussian, polynomial_bump, power_cap

logger = logging.getLogger(__name__)

FIELD_NAMES = ("one", "bump", "cap", "ball", "gauss", "face", "corner")
# Width of the smooth factor multiplying the singular model fields
SMOOTH_WIDTH = 0.3


class FieldFactory:
    """
    Factory class for creating the named fields used as data and traces.
    """
    @staticmethod
    def create_field(name: str, dim: int = 3, s: float = 0.5, polytope: Optional[Polytope] = None,
                     center: Optional[Sequence[float]] = None, radius: float = 0.5) -> Field:
        """
        Args:
            name: One of FIELD_NAMES
            dim: Number of variables
            s: Exponent of the singular and cap fields
            polytope: Needed by "face" and "corner", which sit at face 0 and vertex 0
            center: Center of "bump" and "gauss"; the origin by default
            radius: Radius of "bump"

        Raises:
            ValueError: unknown name
            ConfigurationError: a polytope field without a polytope
        """
        center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        if name == "one":
            return constant(1.0, dim)
        elif name == "bump":
            return polynomial_bump(center, radius)
        elif name == "cap":
            return power_cap(s, dim)
        elif name == "ball":
            return ball_solution(dim, s)
        elif name == "gauss":
            return gaussian(center, SMOOTH_WIDTH)
        elif name in ("face", "corner"):
            if polytope is None:
                raise ConfigurationError(f"field '{name}' needs a polytope", key="polytope")
            return FieldFactory._polytope_field(name, polytope, s)
        else:
            raise ValueError(f"Unsupported field: {name}")

    @staticmethod
    def _polytope_field(name: str, P: Polytope, s: float) -> Field:
        if name == "face":
            corner = P.vertices[P.faces[0][0]]
            centroid = P.vertices[list(P.faces[0])].mean(axis=0)
            logger.debug(f"face field on face 0 of {P.name}, smooth factor centered at {centroid.tolist()}")
            return face_power(s, P.inward_normal(0), corner, gaussian(centroid, SMOOTH_WIDTH))
        e = P.E_v[0][0]
        f = P.F_e[e][0]
        return corner_singular(P.vertices[0], P.edge_direction_from(e, 0), P.inward_normal(f), s, s, s,
                               gaussian(P.vertices[0], SMOOTH_WIDTH))
