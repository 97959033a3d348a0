"""Vector-transform boundary representation: forward transform, zero-pixel
inverse, evaluation metrics and derived tasks."""

from .derived import AngleGrid, SuperpixelMap, angle_rmse, direction_angles, line_proposals, superpixels
from .errors import FormatError, ValidationError, VTError
from .field_core import (
    boundary_from_labels,
    brute_force_nearest,
    dt_from_mask,
    nearest_boundary_map,
    nearest_other_label_map,
    vt_from_labels,
    vt_from_mask,
)
from .grids import ArgminMap, BoundaryImage, VectorField
from .inverse import binarize, collapse_to_original, divergence, extract_boundary, invert_field, upsample_support
from .metrics import (
    MatchResult,
    MetricReport,
    ProfileCurve,
    field_mse,
    match_boundaries,
    ods_ois,
    prediction_profile,
    surface_distances,
    thickness_sensitivity,
)

__version__ = "0.1.0"
