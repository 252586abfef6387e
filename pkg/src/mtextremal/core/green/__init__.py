"""n-Green functions, their level sets and the weighted isoperimetric checks built on them."""

from .domains import (
    DomainError,
    DomainSpec,
    GreenFunction,
    GreenVariant,
    SingularPointError,
    conformal_incenter,
    green_eval,
    green_function,
    green_gradient,
    regular_part,
)
from .isoperimetry import (
    DegenerateShapeError,
    PolygonShape,
    alvino_check,
    boundary_isoperimetric_check,
    shifted_ball_reduced_check,
    volume_lower_bound_check,
    weighted_volume_monotonicity,
)
from .level_sets import (
    CriticalPointError,
    LevelSetError,
    LevelSetGeometry,
    green_level_set,
    verify_green_properties,
)
from .planar import PlacementError, TopologyError

__all__ = [
    "CriticalPointError",
    "DegenerateShapeError",
    "DomainError",
    "DomainSpec",
    "GreenFunction",
    "GreenVariant",
    "LevelSetError",
    "LevelSetGeometry",
    "PlacementError",
    "PolygonShape",
    "SingularPointError",
    "TopologyError",
    "alvino_check",
    "boundary_isoperimetric_check",
    "conformal_incenter",
    "green_eval",
    "green_function",
    "green_gradient",
    "green_level_set",
    "regular_part",
    "shifted_ball_reduced_check",
    "verify_green_properties",
    "volume_lower_bound_check",
    "weighted_volume_monotonicity",
]
