"""
Numerics package.
Provides fields, quadrature and weighted norms, integration regions, the
extension and Dirichlet-to-Neumann map, and the Galerkin solver.
"""

from .fields import CallableField, Field, SymbolicField, Support
from .quadrature import MultiIndex, WeightSpec, dir_derivative, integrate_shells, jacobi_rule, slobodeckij, weighted_norm
from .regions import BallRegion, BoxRegion, CylinderRegion, NeighborhoodRegion, global_weighted_norm
from .extension import ExtensionField, ExtensionParams, dtn, extend, frac_laplacian_direct
from .mesh import Mesh, cube_mesh, interval_mesh, named_mesh
from .fracsolve import Solution, analytic_rhs_check, assemble, solve

__all__ = [
    'CallableField',
    'Field',
    'SymbolicField',
    'Support',
    'MultiIndex',
    'WeightSpec',
    'dir_derivative',
    'integrate_shells',
    'jacobi_rule',
    'slobodeckij',
    'weighted_norm',
    'BallRegion',
    'BoxRegion',
    'CylinderRegion',
    'NeighborhoodRegion',
    'global_weighted_norm',
    'ExtensionField',
    'ExtensionParams',
    'dtn',
    'extend',
    'frac_laplacian_direct',
    'Mesh',
    'cube_mesh',
    'interval_mesh',
    'named_mesh',
    'Solution',
    'analytic_rhs_check',
    'assemble',
    'solve'
]
