"""Small multi-object tracking toolkit: association, tiling, SO-HOTA evaluation, dataset statistics."""

from .geometry import BBox, SimilarityConfig
from .motion import MotionConfig
from .association import AssociationConfig, ConfidenceBands, Detection, Tracker, run_sequence

__all__ = [
    "BBox",
    "SimilarityConfig",
    "MotionConfig",
    "AssociationConfig",
    "ConfidenceBands",
    "Detection",
    "Tracker",
    "run_sequence",
]
__version__ = "0.1.0"
