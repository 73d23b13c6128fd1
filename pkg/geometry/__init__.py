"""
Polytope geometry package.
Provides polytopes, their neighborhood partition and the coverings of each neighborhood.
"""

from .polytope import Polytope, load_polytope, polytope_from_dict
from .partition import (NeighborhoodSpec, Frame, classify, frame_for, region_mask, classification_histogram,
                        feature_equivalence_constants)
from .covering import Covering, CoveringElement, cover, certify_overlap, refine_toward_feature

__all__ = [
    'Polytope',
    'load_polytope',
    'polytope_from_dict',
    'NeighborhoodSpec',
    'Frame',
    'classify',
    'frame_for',
    'region_mask',
    'classification_histogram',
    'feature_equivalence_constants',
    'Covering',
    'CoveringElement',
    'cover',
    'certify_overlap',
    'refine_toward_feature'
]
