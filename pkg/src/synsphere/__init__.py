"""Synergistic hybrid feedback on the n-sphere and thrust-vector tracking."""

from .errors import SynsphereError
from .geometry import (
    geodesic_distance,
    geodesic_point,
    integrate_rotation_step,
    path_length,
    project_tangent,
    skew,
)
from .hybrid import HybridArc, HybridSystem, SolverConfig, event_locate, solve
from .potential import (
    ExpConstants,
    PotentialConfig,
    argmin_over_y,
    exp_constants,
    grad_potential,
    height,
    min_over_y,
    synergy_gap,
    tangent_grad_norm_sq,
    verify_potential_properties,
)
from .riccati import PositionGains, care_solve, synthesize_gains

__version__ = "0.1.0"

__all__ = [
    "ExpConstants", "HybridArc", "HybridSystem", "PositionGains", "PotentialConfig",
    "SolverConfig", "SynsphereError", "argmin_over_y", "care_solve", "event_locate",
    "exp_constants", "geodesic_distance", "geodesic_point", "grad_potential", "height",
    "integrate_rotation_step", "min_over_y", "path_length", "project_tangent",
    "skew", "solve", "synergy_gap", "synthesize_gains", "tangent_grad_norm_sq",
    "verify_potential_properties",
]
