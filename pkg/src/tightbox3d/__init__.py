"""Monocular 3D box localization from 2D detections via tight-fit
projection constraints, viewpoint-based search reduction, and KITTI-style
evaluation."""

__version__ = "0.1.0"

from .geometry import (
    Box2D,
    ConstraintConfig,
    DegenerateSystem,
    Dimensions,
    Intrinsics,
    NoFeasibleConfig,
    NonPositiveDepth,
    Pose,
    SolveResult,
    all_configs,
    argmax_vertices,
    build_system,
    exhaustive_search,
    project,
    solve_translation,
    tight_box,
    vertex_offset,
)
from .viewpoint import (
    ConfigTable,
    Faces,
    Vertical,
    ViewpointClass,
    candidates_for,
    classify_viewpoint,
    derive_table,
    load_default_table,
    reduced_search,
)

__all__ = [
    "Box2D",
    "ConfigTable",
    "ConstraintConfig",
    "DegenerateSystem",
    "Dimensions",
    "Faces",
    "Intrinsics",
    "NoFeasibleConfig",
    "NonPositiveDepth",
    "Pose",
    "SolveResult",
    "Vertical",
    "ViewpointClass",
    "all_configs",
    "argmax_vertices",
    "build_system",
    "candidates_for",
    "classify_viewpoint",
    "derive_table",
    "exhaustive_search",
    "load_default_table",
    "project",
    "reduced_search",
    "solve_translation",
    "tight_box",
    "vertex_offset",
]
