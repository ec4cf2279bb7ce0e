"""Pure-numpy constraint-solve kernel.

Vectorized over objects and candidate configurations; used when the
compiled kernel is unavailable or explicitly disabled. Must stay
semantically identical to ``_native.solve_batch``.
"""

import numpy as np

from .geometry import SV_RATIO_MIN, _UNIT_OFFSETS


def solve_batch(p, boxes, dims, thetas, configs):
    """Solve the tight-fit system for a batch of objects.

    Args:
        p: (3, 4) projection matrix.
        boxes: (N, 4) box edges as (u_min, v_min, u_max, v_max) pixels.
        dims: (N, 3) object extents as (l, h, w) meters.
        thetas: (N,) global yaw angles.
        configs: (M, 4) candidate vertex-id assignments, each row
            (v_umin, v_umax, v_vmin, v_vmax).

    Returns:
        (t, residual, best): (N, 3) translations, (N,) RMS pixel residuals,
        and (N,) indices into ``configs`` of the winning candidate. Objects
        with no feasible candidate (every solution degenerate or behind the
        camera) get best = -1 and NaN outputs.
    """
    p = np.ascontiguousarray(p, dtype=float)
    boxes = np.ascontiguousarray(boxes, dtype=float)
    dims = np.ascontiguousarray(dims, dtype=float)
    thetas = np.ascontiguousarray(thetas, dtype=float)
    configs = np.ascontiguousarray(configs, dtype=np.int64)
    n = boxes.shape[0]

    kt = p[:, :3]
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    rot = np.zeros((n, 3, 3))
    rot[:, 0, 0] = cos_t
    rot[:, 0, 2] = sin_t
    rot[:, 1, 1] = 1.0
    rot[:, 2, 0] = -sin_t
    rot[:, 2, 2] = cos_t

    # W[n, v] = K_t @ R_n @ x_v + p4 for each of the 8 vertices
    offsets = _UNIT_OFFSETS[None, :, :] * dims[:, None, :]
    m3 = np.einsum("ij,njk->nik", kt, rot)
    w = np.einsum("nik,nvk->nvi", m3, offsets) + p[:, 3]

    # A is shared by all configurations of one object
    c = boxes[:, [0, 2, 1, 3]]  # (u_min, u_max, v_min, v_max)
    row_coord = np.array([0, 0, 1, 1])
    a = kt[row_coord][None, :, :] - c[:, :, None] * kt[2][None, None, :]

    b = np.empty((n, configs.shape[0], 4))
    for k in range(4):
        wk = w[:, configs[:, k], :]  # (N, M, 3)
        b[:, :, k] = c[:, None, k] * wk[:, :, 2] - wk[:, :, row_coord[k]]

    u, s, vt = np.linalg.svd(a, full_matrices=False)
    degenerate = (s[:, 0] == 0.0) | (s[:, -1] <= SV_RATIO_MIN * s[:, 0])

    # guard the division for degenerate objects; their results are masked out
    s_safe = np.where(s > 0.0, s, 1.0)
    y = np.einsum("nki,nmk->nmi", u, b) / s_safe[:, None, :]
    t_cand = np.einsum("nji,nmj->nmi", vt, y)
    resid = np.linalg.norm(np.einsum("nkj,nmj->nmk", a, t_cand) - b, axis=2) / 2.0

    feasible = (t_cand[:, :, 2] > 0.0) & ~degenerate[:, None]
    resid_masked = np.where(feasible, resid, np.inf)
    best = np.argmin(resid_masked, axis=1)
    any_feasible = feasible[np.arange(n), best]
    best = np.where(any_feasible, best, -1)

    t_out = np.full((n, 3), np.nan)
    resid_out = np.full(n, np.nan)
    idx = np.nonzero(any_feasible)[0]
    t_out[idx] = t_cand[idx, best[idx]]
    resid_out[idx] = resid[idx, best[idx]]
    return t_out, resid_out, best
