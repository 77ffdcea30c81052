"""Depth-adaptive gaze thumbnails for scanpath comparison in mixed reality."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    CameraIntrinsics, PatchMode, PatchSpec, PRESETS, actual_length,
    adaptive_patch_size, classic_patch_size,
)
from .recording import Fixation, GazeRecording, detect_fixations, fixation_depth, load_recording  # noqa: E402
from .patches import Patch, extract_patch, extract_scanpath_patches  # noqa: E402
from .features import FeatureVector, PatchEmbedder, cosine_similarity  # noqa: E402
from .alignment import ScoringScheme, levenshtein_distance, pairwise_matrix, smith_waterman_score  # noqa: E402
from .projection import gridify, reduce_2d  # noqa: E402
from .stats import paired_t_test, shapiro_wilk, wilcoxon_signed_rank  # noqa: E402

__all__ = [
    "CameraIntrinsics", "PatchMode", "PatchSpec", "PRESETS", "actual_length", "adaptive_patch_size",
    "classic_patch_size", "Fixation", "GazeRecording", "detect_fixations", "fixation_depth",
    "load_recording", "Patch", "extract_patch", "extract_scanpath_patches", "FeatureVector",
    "PatchEmbedder", "cosine_similarity", "ScoringScheme", "levenshtein_distance", "pairwise_matrix",
    "smith_waterman_score", "gridify", "reduce_2d", "paired_t_test", "shapiro_wilk",
    "wilcoxon_signed_rank",
]
