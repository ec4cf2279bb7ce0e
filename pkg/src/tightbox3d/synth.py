"""Synthetic scene oracle: forward-generated ground truth for verification.

Samples poses and dimensions, projects the cuboids through a known camera,
and emits the tight 2D box, the true constraint configuration, and the
viewpoint class for every object. All verification of the solver and the
viewpoint reduction runs against scenes produced here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import viewpoint as vp_mod
from .angles import TAU
from .geometry import (
    _UNIT_OFFSETS,
    Box2D,
    ConstraintConfig,
    Dimensions,
    Intrinsics,
    Pose,
)

MAX_CONSECUTIVE_REJECTS = 100_000


class GenerationExhausted(RuntimeError):
    """Rejection sampling failed to produce a feasible object."""


def default_intrinsics() -> Intrinsics:
    """KITTI-like pinhole camera (f = 721.5377, 1242x375 image)."""
    return Intrinsics.from_k(
        [[721.5377, 0.0, 621.0], [0.0, 721.5377, 187.5], [0.0, 0.0, 1.0]]
    )


@dataclass(frozen=True)
class SceneSpec:
    """Sampling ranges and camera for synthetic scene generation.

    Objects are drawn uniformly from the ranges and kept only when the full
    cuboid projects inside the image with positive depth. Default ranges
    keep all 16 viewpoint classes reachable: the vertical range covers both
    camera-above-roof and roof-above-camera geometry, while the bottom face
    stays below the camera as for ground vehicles.
    """

    seed: int = 0
    n_objects: int = 6
    x_range: tuple = (-6.0, 6.0)
    y_range: tuple = (0.0, 3.3)
    z_range: tuple = (8.0, 45.0)
    theta_range: tuple = (-np.pi, np.pi)
    dims_mean: tuple = (3.9, 1.5, 1.6)
    dims_spread: float = 0.2
    image_size: tuple = (1242, 375)
    intrinsics: Intrinsics = field(default_factory=default_intrinsics)


class SceneObject(NamedTuple):
    pose: Pose
    dims: Dimensions
    box: Box2D
    viewpoint: vp_mod.ViewpointClass
    config: ConstraintConfig


def _project_batch(p: np.ndarray, t: np.ndarray, theta: np.ndarray, dims: np.ndarray):
    """Project all 8 vertices of each object; returns (u, v, depth) (n, 8)."""
    n = t.shape[0]
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    rot = np.zeros((n, 3, 3))
    rot[:, 0, 0] = cos_t
    rot[:, 0, 2] = sin_t
    rot[:, 1, 1] = 1.0
    rot[:, 2, 0] = -sin_t
    rot[:, 2, 2] = cos_t
    offsets = _UNIT_OFFSETS[None, :, :] * dims[:, None, :]
    cam = np.einsum("nij,nvj->nvi", rot, offsets) + t[:, None, :]
    q = np.einsum("ij,nvj->nvi", p[:, :3], cam) + p[:, 3]
    return q[:, :, 0] / q[:, :, 2], q[:, :, 1] / q[:, :, 2], q[:, :, 2]


def sample_objects(spec: SceneSpec, n: int, rng: np.random.Generator) -> dict:
    """Draw ``n`` feasible objects; returns arrays keyed t, theta, dims,
    boxes (u_min, v_min, u_max, v_max), and configs (the true vertex
    assignment per object).

    Raises GenerationExhausted after 10^5 consecutive rejections.
    """
    p = spec.intrinsics.p
    width, height = spec.image_size
    mean = np.asarray(spec.dims_mean)
    lo = np.array([spec.x_range[0], spec.y_range[0], spec.z_range[0]])
    hi = np.array([spec.x_range[1], spec.y_range[1], spec.z_range[1]])

    out_t = np.empty((n, 3))
    out_theta = np.empty(n)
    out_dims = np.empty((n, 3))
    out_boxes = np.empty((n, 4))
    out_configs = np.empty((n, 4), dtype=np.int64)

    filled = 0
    consecutive_rejects = 0
    batch = max(2 * n, 1024)
    while filled < n:
        t = rng.uniform(lo, hi, size=(batch, 3))
        theta = rng.uniform(spec.theta_range[0], spec.theta_range[1], size=batch)
        dims = mean * rng.uniform(1.0 - spec.dims_spread, 1.0 + spec.dims_spread, size=(batch, 3))
        u, v, depth = _project_batch(p, t, theta, dims)
        ok = (
            (depth > 0.0).all(axis=1)
            & (u >= 0.0).all(axis=1)
            & (u <= width).all(axis=1)
            & (v >= 0.0).all(axis=1)
            & (v <= height).all(axis=1)
        )
        idx = np.nonzero(ok)[0]
        if idx.size == 0:
            consecutive_rejects += batch
            if consecutive_rejects >= MAX_CONSECUTIVE_REJECTS:
                raise GenerationExhausted(
                    f"{consecutive_rejects} consecutive rejections; check SceneSpec ranges"
                )
            continue
        consecutive_rejects = 0
        take = idx[: n - filled]
        sel = slice(filled, filled + take.size)
        out_t[sel] = t[take]
        out_theta[sel] = theta[take]
        out_dims[sel] = dims[take]
        out_boxes[sel, 0] = u[take].min(axis=1)
        out_boxes[sel, 1] = v[take].min(axis=1)
        out_boxes[sel, 2] = u[take].max(axis=1)
        out_boxes[sel, 3] = v[take].max(axis=1)
        out_configs[sel, 0] = np.argmin(u[take], axis=1)
        out_configs[sel, 1] = np.argmax(u[take], axis=1)
        out_configs[sel, 2] = np.argmin(v[take], axis=1)
        out_configs[sel, 3] = np.argmax(v[take], axis=1)
        filled += take.size
    return {
        "t": out_t,
        "theta": out_theta,
        "dims": out_dims,
        "boxes": out_boxes,
        "configs": out_configs,
    }


def perturb_boxes(boxes: np.ndarray, magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Add independent uniform(-magnitude, magnitude) noise to every box edge."""
    noisy = boxes + rng.uniform(-magnitude, magnitude, size=boxes.shape)
    # keep boxes valid; only triggers for boxes thinner than 2*magnitude
    bad_u = noisy[:, 0] >= noisy[:, 2]
    bad_v = noisy[:, 1] >= noisy[:, 3]
    noisy[bad_u, 0::2] = boxes[bad_u, 0::2]
    noisy[bad_v, 1::2] = boxes[bad_v, 1::2]
    return noisy


def generate_scene(spec: SceneSpec) -> list:
    """Generate one scene's objects with oracle boxes, configs, and classes."""
    rng = np.random.default_rng(spec.seed)
    raw = sample_objects(spec, spec.n_objects, rng)
    vert, oneside, quad = vp_mod.classify_arrays(
        raw["t"], raw["theta"], raw["dims"][:, 1], vp_mod.DEFAULT_FACE_BAND
    )
    objects = []
    for i in range(spec.n_objects):
        objects.append(
            SceneObject(
                pose=Pose(theta=raw["theta"][i], t=raw["t"][i]),
                dims=Dimensions(*raw["dims"][i]),
                box=Box2D(*raw["boxes"][i]),
                viewpoint=vp_mod.class_from_flags(vert[i], oneside[i], int(quad[i])),
                config=ConstraintConfig(*(int(c) for c in raw["configs"][i])),
            )
        )
    return objects
