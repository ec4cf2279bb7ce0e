"""Tight-fit 2D/3D bounding box constraint geometry.

An upright 3D cuboid seen by a calibrated camera must project so that it
touches all four edges of its 2D detection window. Assigning one cuboid
vertex to each window edge turns the four touch conditions into a linear
least-squares system in the unknown camera-frame translation. This module
provides the vertex/projection primitives, system assembly, the solver,
and the search over the 64 physically possible edge/vertex assignments.

Conventions (KITTI-style camera frame): x right, y down, z forward. The
object frame has its origin at the center of the cuboid's bottom face,
y pointing down, so vertices sit at (+-l/2, {0, -h}, +-w/2). Global yaw
``theta`` rotates about the vertical (y) axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .angles import wrap_to_pi

MIN_DEPTH = 1e-9
# smallest/largest singular value at or below this ratio: system is degenerate
SV_RATIO_MIN = 1e-10

N_VERTICES = 8


class NonPositiveDepth(ValueError):
    """A point to be projected lies at or behind the camera plane."""


class DegenerateSystem(ValueError):
    """The 4x3 constraint system is numerically rank-deficient."""


class NoFeasibleConfig(RuntimeError):
    """No candidate configuration produced a solution in front of the camera."""


@dataclass(frozen=True)
class Intrinsics:
    """3x4 camera projection matrix in pixels (the KITTI P2 role)."""

    p: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.p, dtype=float)
        if p.shape != (3, 4):
            raise ValueError(f"projection matrix must be 3x4, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("projection matrix must be finite")
        if p[2, 2] == 0.0:
            raise ValueError("principal ray must have nonzero z component")
        if p[0, 0] <= 0.0 or p[1, 1] <= 0.0:
            raise ValueError("focal entries must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_k(cls, k) -> "Intrinsics":
        """Build from a pure 3x3 calibration matrix (zero translation column)."""
        k = np.asarray(k, dtype=float)
        if k.shape != (3, 3):
            raise ValueError(f"calibration matrix must be 3x3, got {k.shape}")
        return cls(np.hstack([k, np.zeros((3, 1))]))

    @property
    def fx(self) -> float:
        return float(self.p[0, 0])

    @property
    def fy(self) -> float:
        return float(self.p[1, 1])

    @property
    def cx(self) -> float:
        return float(self.p[0, 2])

    @property
    def cy(self) -> float:
        return float(self.p[1, 2])


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned 2D box in pixels, edges (u_min, v_min, u_max, v_max)."""

    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError(
                f"box edges must satisfy u_min < u_max and v_min < v_max, got "
                f"({self.u_min}, {self.v_min}, {self.u_max}, {self.v_max})"
            )

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def height(self) -> float:
        return self.v_max - self.v_min

    def as_array(self) -> np.ndarray:
        return np.array([self.u_min, self.v_min, self.u_max, self.v_max])


@dataclass(frozen=True)
class Dimensions:
    """Object extents in meters: length (x), height (y), width (z)."""

    l: float
    h: float
    w: float

    def __post_init__(self):
        if not (self.l > 0 and self.h > 0 and self.w > 0):
            raise ValueError(f"dimensions must be positive, got {(self.l, self.h, self.w)}")

    def as_array(self) -> np.ndarray:
        return np.array([self.l, self.h, self.w])


@dataclass(frozen=True)
class Pose:
    """Global yaw (normalized to (-pi, pi]) plus camera-frame translation of
    the bottom-face center."""

    theta: float
    t: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=float)
        if t.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got shape {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "theta", wrap_to_pi(float(self.theta)))


class ConstraintConfig(NamedTuple):
    """Vertex ids (0..7) assigned to the left, right, top, bottom box edges."""

    v_umin: int
    v_umax: int
    v_vmin: int
    v_vmax: int


@dataclass(frozen=True)
class SolveResult:
    t: np.ndarray
    residual: float
    config: ConstraintConfig


# Vertex id bit layout: (sx << 2) | (sy << 1) | sz with
#   sx = 0 -> x = +l/2, 1 -> x = -l/2
#   sy = 0 -> y = 0 (bottom), 1 -> y = -h (top)
#   sz = 0 -> z = +w/2, 1 -> z = -w/2
_UNIT_OFFSETS = np.array(
    [
        [+0.5 if not (v >> 2) & 1 else -0.5, -float((v >> 1) & 1), +0.5 if not v & 1 else -0.5]
        for v in range(N_VERTICES)
    ]
)
_UNIT_OFFSETS.setflags(write=False)


def vertex_offset(dims: Dimensions, v: int) -> np.ndarray:
    """Object-frame position of cuboid vertex ``v`` (see bit layout above)."""
    if not 0 <= v < N_VERTICES:
        raise ValueError(f"vertex id must be in 0..7, got {v}")
    return _UNIT_OFFSETS[v] * dims.as_array()


def vertex_offsets(dims: Dimensions) -> np.ndarray:
    """All 8 object-frame vertex positions, shape (8, 3), indexed by vertex id."""
    return _UNIT_OFFSETS * dims.as_array()


def yaw_matrix(theta: float) -> np.ndarray:
    """Rotation about the vertical (y-down) axis, KITTI rotation_y convention."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _project_all(intr: Intrinsics, pose: Pose, dims: Dimensions):
    """Project the 8 vertices; returns (u, v, depth) arrays of shape (8,)."""
    cam = vertex_offsets(dims) @ yaw_matrix(pose.theta).T + pose.t
    q = cam @ intr.p[:, :3].T + intr.p[:, 3]
    return q[:, 0] / q[:, 2], q[:, 1] / q[:, 2], q[:, 2]


def project(intr: Intrinsics, pose: Pose, dims: Dimensions, v: int) -> tuple:
    """Pixel coordinates of vertex ``v`` under the given pose.

    Raises NonPositiveDepth when the point is at or behind the camera.
    """
    cam = yaw_matrix(pose.theta) @ vertex_offset(dims, v) + pose.t
    q = intr.p[:, :3] @ cam + intr.p[:, 3]
    if q[2] <= MIN_DEPTH:
        raise NonPositiveDepth(f"projected depth {q[2]:.3g} <= {MIN_DEPTH}")
    return float(q[0] / q[2]), float(q[1] / q[2])


def tight_box(intr: Intrinsics, pose: Pose, dims: Dimensions) -> Box2D:
    """Smallest 2D box enclosing all 8 projected vertices."""
    u, v, depth = _project_all(intr, pose, dims)
    if np.any(depth <= MIN_DEPTH):
        raise NonPositiveDepth(f"minimum projected depth {depth.min():.3g} <= {MIN_DEPTH}")
    return Box2D(float(u.min()), float(v.min()), float(u.max()), float(v.max()))


def argmax_vertices(intr: Intrinsics, pose: Pose, dims: Dimensions) -> ConstraintConfig:
    """Vertex ids attaining the four extrema of the projected cuboid.

    Ties resolve to the lowest vertex id; with zero skew the two vertices of
    a vertical cuboid edge project to the same u, so the u slots always carry
    the bottom (lower-id) vertex of the winning edge.
    """
    u, v, depth = _project_all(intr, pose, dims)
    if np.any(depth <= MIN_DEPTH):
        raise NonPositiveDepth(f"minimum projected depth {depth.min():.3g} <= {MIN_DEPTH}")
    return ConstraintConfig(
        int(np.argmin(u)), int(np.argmax(u)), int(np.argmin(v)), int(np.argmax(v))
    )


def build_system(
    intr: Intrinsics, box: Box2D, dims: Dimensions, theta: float, config: ConstraintConfig
) -> tuple:
    """Assemble the 4x3 linear system A @ t = b for the translation.

    Row r of the touch condition c = (P @ [R x + t; 1])_i / (...)_2 linearizes,
    with K_t the left 3x3 block of P and W = K_t @ R @ x + P[:, 3], to
    A_row = K_t[i] - c * K_t[2] and b_row = c * W[2] - W[i]. Rows are ordered
    (u_min, u_max, v_min, v_max); A depends on the box and intrinsics only,
    the vertex assignment enters through b.
    """
    kt = intr.p[:, :3]
    w = vertex_offsets(dims) @ (kt @ yaw_matrix(theta)).T + intr.p[:, 3]
    edges = (
        (box.u_min, config.v_umin, 0),
        (box.u_max, config.v_umax, 0),
        (box.v_min, config.v_vmin, 1),
        (box.v_max, config.v_vmax, 1),
    )
    a = np.empty((4, 3))
    b = np.empty(4)
    for row, (c, vid, i) in enumerate(edges):
        a[row] = kt[i] - c * kt[2]
        b[row] = c * w[vid, 2] - w[vid, i]
    return a, b


def solve_translation(a, b) -> tuple:
    """Least-squares solve for the translation; returns (t, residual).

    Solved through the SVD; the residual is the RMS pixel error over the
    constraint equations (norm / 2 for the standard 4-row system). Raises
    DegenerateSystem when the singular value ratio falls at or below 1e-10.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= SV_RATIO_MIN * s[0]:
        raise DegenerateSystem(f"singular values {s} below ratio {SV_RATIO_MIN}")
    t = vt.T @ ((u.T @ b) / s)
    residual = float(np.linalg.norm(a @ t - b)) / np.sqrt(a.shape[0])
    return t, residual


def exhaustive_search(
    intr: Intrinsics,
    box: Box2D,
    dims: Dimensions,
    theta: float,
    candidates: Sequence[ConstraintConfig] | None = None,
) -> SolveResult:
    """Solve every candidate configuration and keep the best feasible one.

    Solutions behind the camera (t_z <= 0) and degenerate systems are
    discarded; the remaining lowest-residual result wins, ties resolving to
    the earliest candidate. ``candidates`` defaults to all 64 configurations.
    """
    from . import kernels

    if candidates is None:
        candidates = all_configs()
    if len(candidates) == 0:
        raise NoFeasibleConfig("empty candidate list")
    t, residual, best = kernels.solve_batch(
        intr.p,
        box.as_array()[None, :],
        dims.as_array()[None, :],
        np.array([theta]),
        configs_to_array(candidates),
    )
    if best[0] < 0:
        raise NoFeasibleConfig("every candidate was degenerate or behind the camera")
    return SolveResult(t=t[0], residual=float(residual[0]), config=candidates[int(best[0])])


def configs_to_array(configs: Sequence[ConstraintConfig]) -> np.ndarray:
    """Pack configurations into an (M, 4) int64 array for the solve kernels."""
    return np.asarray([tuple(c) for c in configs], dtype=np.int64).reshape(-1, 4)


# Horizontal cuboid edges ("pillars") indexed by (sx << 1) | sz. Seen from
# any camera position outside the footprint, the image-left/right extremes
# are attained either by the two pillars of one visible side face (the
# successor pairs below, ordered by the counterclockwise footprint cycle
# (-,-) -> (+,-) -> (+,+) -> (-,+)) or by a diagonally opposite pair. The
# top/bottom extremes are attained by the nearest/farthest pillars, which
# are always equal or diagonal. The cross product of both pair families
# gives the 64 assignments that can physically occur.
_PILLAR_SUCC = {3: 1, 1: 0, 0: 2, 2: 3}


def _pillar_vertex(pillar: int, top: bool) -> int:
    return ((pillar >> 1) << 2) | (2 if top else 0) | (pillar & 1)


def _enumerate_configs() -> tuple:
    u_pairs = [(p, _PILLAR_SUCC[p]) for p in range(4)] + [(p, p ^ 3) for p in range(4)]
    v_pairs = [(p, p) for p in range(4)] + [(p, p ^ 3) for p in range(4)]
    configs = [
        ConstraintConfig(
            _pillar_vertex(a, top=False),
            _pillar_vertex(b, top=False),
            _pillar_vertex(r, top=True),
            _pillar_vertex(s, top=False),
        )
        for a, b in u_pairs
        for r, s in v_pairs
    ]
    return tuple(sorted(configs))


_ALL_CONFIGS = _enumerate_configs()


def all_configs() -> list:
    """The 64 constraint configurations, lexicographically ordered."""
    return list(_ALL_CONFIGS)
