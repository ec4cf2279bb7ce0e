# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled constraint-solve kernel.

Per object the 4x3 system matrix is shared by every candidate
configuration, so all candidates are solved with a single LAPACK dgelss
call (SVD least squares, multiple right-hand sides). Semantics must stay
identical to ``tightbox3d._pure.solve_batch``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt
from scipy.linalg.cython_lapack cimport dgelss

cnp.import_array()

DEF RCOND = 1e-10


def solve_batch(p, boxes, dims, thetas, configs):
    """See ``tightbox3d._pure.solve_batch`` for the contract."""
    cdef const double[:, ::1] p_v = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[:, ::1] boxes_v = np.ascontiguousarray(boxes, dtype=np.float64)
    cdef const double[:, ::1] dims_v = np.ascontiguousarray(dims, dtype=np.float64)
    cdef const double[::1] thetas_v = np.ascontiguousarray(thetas, dtype=np.float64)
    cdef const long long[:, ::1] cfg_v = np.ascontiguousarray(configs, dtype=np.int64)

    if p_v.shape[0] != 3 or p_v.shape[1] != 4:
        raise ValueError("projection matrix must be 3x4")
    cdef Py_ssize_t n = boxes_v.shape[0]
    cdef int m_cfg = <int> cfg_v.shape[0]
    if boxes_v.shape[1] != 4 or dims_v.shape[1] != 3 or cfg_v.shape[1] != 4:
        raise ValueError("bad batch array shapes")
    if thetas_v.shape[0] != n or dims_v.shape[0] != n:
        raise ValueError("batch arrays must share the leading dimension")

    t_out = np.full((n, 3), np.nan)
    resid_out = np.full(n, np.nan)
    best_out = np.full(n, -1, dtype=np.int64)
    cdef double[:, ::1] t_v = t_out
    cdef double[::1] resid_v = resid_out
    cdef long long[::1] best_v = best_out

    if n == 0 or m_cfg == 0:
        return t_out, resid_out, best_out

    # LAPACK workspace query for m=4, n=3, nrhs=m_cfg
    cdef int lm = 4, ln = 3, nrhs = m_cfg, lda = 4, ldb = 4
    cdef int rank = 0, info = 0, lwork = -1
    cdef double rcond = RCOND
    cdef double wk_query = 0.0
    cdef double af_query[12]
    cdef double s_query[3]
    dgelss(&lm, &ln, &nrhs, af_query, &lda, af_query, &ldb, s_query,
           &rcond, &rank, &wk_query, &lwork, &info)
    lwork = <int> wk_query
    if lwork < 64:
        lwork = 64

    work_arr = np.empty(lwork)
    bf_arr = np.empty(4 * m_cfg)
    b0_arr = np.empty(4 * m_cfg)
    cdef double[::1] work = work_arr
    cdef double[::1] bf = bf_arr
    cdef double[::1] b0 = b0_arr

    cdef double af[12]
    cdef double a0[12]
    cdef double m3[9]
    cdef double w[24]
    cdef double s[3]
    cdef double c_edge[4]
    cdef double off_x, off_y, off_z
    cdef double ct, st, l, h, wid, cval, tx, ty, tz, rk_val, rss, res, best_res
    cdef Py_ssize_t i, j, k, v, m, best_m
    cdef int row_i
    cdef long long vid

    with nogil:
        for i in range(n):
            ct = cos(thetas_v[i])
            st = sin(thetas_v[i])
            l = dims_v[i, 0]
            h = dims_v[i, 1]
            wid = dims_v[i, 2]

            # m3 = K_t @ R(theta)
            for j in range(3):
                m3[j * 3 + 0] = p_v[j, 0] * ct - p_v[j, 2] * st
                m3[j * 3 + 1] = p_v[j, 1]
                m3[j * 3 + 2] = p_v[j, 0] * st + p_v[j, 2] * ct

            # w[v] = m3 @ offset(v) + p4
            for v in range(8):
                off_x = 0.5 * l if not (v >> 2) & 1 else -0.5 * l
                off_y = -h if (v >> 1) & 1 else 0.0
                off_z = 0.5 * wid if not v & 1 else -0.5 * wid
                for j in range(3):
                    w[v * 3 + j] = (m3[j * 3 + 0] * off_x + m3[j * 3 + 1] * off_y
                                    + m3[j * 3 + 2] * off_z + p_v[j, 3])

            c_edge[0] = boxes_v[i, 0]  # u_min
            c_edge[1] = boxes_v[i, 2]  # u_max
            c_edge[2] = boxes_v[i, 1]  # v_min
            c_edge[3] = boxes_v[i, 3]  # v_max

            for k in range(4):
                row_i = 0 if k < 2 else 1
                cval = c_edge[k]
                for j in range(3):
                    a0[k * 3 + j] = p_v[row_i, j] - cval * p_v[2, j]
                    af[j * 4 + k] = a0[k * 3 + j]

            for m in range(m_cfg):
                for k in range(4):
                    vid = cfg_v[m, k]
                    row_i = 0 if k < 2 else 1
                    b0[m * 4 + k] = c_edge[k] * w[vid * 3 + 2] - w[vid * 3 + row_i]
                    bf[m * 4 + k] = b0[m * 4 + k]

            rank = 0
            info = 0
            dgelss(&lm, &ln, &nrhs, af, &lda, &bf[0], &ldb, s,
                   &rcond, &rank, &work[0], &lwork, &info)
            if info != 0 or rank < 3:
                continue

            best_m = -1
            best_res = 0.0
            for m in range(m_cfg):
                tx = bf[m * 4 + 0]
                ty = bf[m * 4 + 1]
                tz = bf[m * 4 + 2]
                if tz <= 0.0:
                    continue
                rss = 0.0
                for k in range(4):
                    rk_val = (a0[k * 3 + 0] * tx + a0[k * 3 + 1] * ty
                              + a0[k * 3 + 2] * tz - b0[m * 4 + k])
                    rss += rk_val * rk_val
                res = sqrt(rss) / 2.0
                if best_m < 0 or res < best_res:
                    best_m = m
                    best_res = res

            if best_m >= 0:
                best_v[i] = best_m
                resid_v[i] = best_res
                t_v[i, 0] = bf[best_m * 4 + 0]
                t_v[i, 1] = bf[best_m * 4 + 1]
                t_v[i, 2] = bf[best_m * 4 + 2]

    return t_out, resid_out, best_out
