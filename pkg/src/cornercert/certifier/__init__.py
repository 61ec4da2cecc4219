from .certify import (
    CertResult,
    UnsupportedArchitectureError,
    activation_hyperplanes,
    certify_global,
    certify_global_batch,
    certify_local,
    certify_region,
)
from .contour import Grid, contours_of, extract_level_set, field_level_set
from .masks import (
    BOTH,
    CERTIFIED,
    NEITHER,
    ROBUST,
    RegionMask,
    certified_frontier,
    corner_frontiers,
    decision_boundary,
    frontier_gap,
    net_oracle,
    region_masks,
    robust_frontier,
    vra,
)
from .oracle import BoundaryOracle, boundary_distance, corner_oracle, polyline_oracle, robust_oracle
from .polyline import DegenerateBoundaryError, Polyline, polyline_distance, ray_crossings
