"""
Verification package.
Provides manufactured triples, local norms, ratio ladders for the local estimates and growth profiles.
"""

from .manufactured import ManufacturedTriple, symbolic_triple, polynomial_triple, extension_triple, check_triple
from .norms import DataNormBundle, data_norm, data_norm_resummed, n_squared
from .ratios import (caccioppoli_ratio, high_order_caccioppoli, shift_ratio, trace_ratio, localization_ratio,
                     hardy_ratio, fit_gamma, CutoffProfile, STANDARD_MOLLIFIER)
from .growth import growth_profile
from .verdict import ratio_verdict, make_report

__all__ = [
    'ManufacturedTriple',
    'symbolic_triple',
    'polynomial_triple',
    'extension_triple',
    'check_triple',
    'DataNormBundle',
    'data_norm',
    'data_norm_resummed',
    'n_squared',
    'caccioppoli_ratio',
    'high_order_caccioppoli',
    'shift_ratio',
    'trace_ratio',
    'localization_ratio',
    'hardy_ratio',
    'fit_gamma',
    'CutoffProfile',
    'STANDARD_MOLLIFIER',
    'growth_profile',
    'ratio_verdict',
    'make_report'
]
