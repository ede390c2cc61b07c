# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled segment walk through a tet mesh.

Mirrors ``_walk_py`` operation by operation so both backends produce the same
breakpoints.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

from libc.math cimport sqrt

OK = 0
NO_START = 1
DEAD_END = 2


cdef inline bint _clip(const double[:, ::1] nodes, const cnp.int64_t[:, ::1] tets,
                       cnp.int64_t c, double* p0, double* t, double length,
                       double tol, double* lo_out, double* hi_out) noexcept nogil:
    cdef double v0[3]
    cdef double e1[3]
    cdef double e2[3]
    cdef double e3[3]
    cdef double c23[3]
    cdef double c31[3]
    cdef double c12[3]
    cdef double d[3]
    cdef double a[4]
    cdef double b[4]
    cdef double det, m1, m2, m3, n1, n2, n3, lo, hi, bound
    cdef int i, j
    for i in range(3):
        v0[i] = nodes[tets[c, 0], i]
        e1[i] = nodes[tets[c, 1], i] - v0[i]
        e2[i] = nodes[tets[c, 2], i] - v0[i]
        e3[i] = nodes[tets[c, 3], i] - v0[i]
        d[i] = p0[i] - v0[i]
    c23[0] = e2[1] * e3[2] - e2[2] * e3[1]
    c23[1] = e2[2] * e3[0] - e2[0] * e3[2]
    c23[2] = e2[0] * e3[1] - e2[1] * e3[0]
    c31[0] = e3[1] * e1[2] - e3[2] * e1[1]
    c31[1] = e3[2] * e1[0] - e3[0] * e1[2]
    c31[2] = e3[0] * e1[1] - e3[1] * e1[0]
    c12[0] = e1[1] * e2[2] - e1[2] * e2[1]
    c12[1] = e1[2] * e2[0] - e1[0] * e2[2]
    c12[2] = e1[0] * e2[1] - e1[1] * e2[0]
    det = e1[0] * c23[0] + e1[1] * c23[1] + e1[2] * c23[2]
    m1 = (d[0] * c23[0] + d[1] * c23[1] + d[2] * c23[2]) / det
    m2 = (d[0] * c31[0] + d[1] * c31[1] + d[2] * c31[2]) / det
    m3 = (d[0] * c12[0] + d[1] * c12[1] + d[2] * c12[2]) / det
    n1 = (t[0] * c23[0] + t[1] * c23[1] + t[2] * c23[2]) / det
    n2 = (t[0] * c31[0] + t[1] * c31[1] + t[2] * c31[2]) / det
    n3 = (t[0] * c12[0] + t[1] * c12[1] + t[2] * c12[2]) / det
    a[0] = 1.0 - m1 - m2 - m3
    a[1] = m1
    a[2] = m2
    a[3] = m3
    b[0] = -(n1 + n2 + n3)
    b[1] = n1
    b[2] = n2
    b[3] = n3
    lo = 0.0
    hi = length
    for j in range(4):
        if b[j] > 0.0:
            bound = (-tol - a[j]) / b[j]
            if bound > lo:
                lo = bound
        elif b[j] < 0.0:
            bound = (-tol - a[j]) / b[j]
            if bound < hi:
                hi = bound
        elif a[j] < -tol:
            return False
    lo_out[0] = lo
    hi_out[0] = hi
    return lo <= hi


cdef cnp.int64_t _pick(const double[:, ::1] nodes, const cnp.int64_t[:, ::1] tets,
                       cnp.int64_t[::1] cand, Py_ssize_t ncand,
                       double[::1] his, unsigned char[::1] valid,
                       double* p0, double* t, double length, double tol,
                       double s_cur, double merge_tol, double* reach) noexcept nogil:
    cdef Py_ssize_t k
    cdef double lo, hi, best_hi = -1.0
    cdef bint any_valid = False
    cdef cnp.int64_t best = -1
    for k in range(ncand):
        valid[k] = 0
        if _clip(nodes, tets, cand[k], p0, t, length, tol, &lo, &hi):
            if lo <= s_cur + merge_tol and hi > s_cur + merge_tol:
                valid[k] = 1
                his[k] = hi
                if not any_valid or hi > best_hi:
                    best_hi = hi
                any_valid = True
    if not any_valid:
        return -1
    for k in range(ncand):
        if valid[k] and his[k] >= best_hi - merge_tol:
            if best < 0 or cand[k] < best:
                best = cand[k]
                reach[0] = his[k]
    return best


def walk_segment(const double[:, ::1] nodes, const cnp.int64_t[:, ::1] tets,
                 const cnp.int64_t[::1] star_ptr, const cnp.int64_t[::1] star_idx,
                 start_cand, p0, p1, double bary_tol, double merge_tol):
    """Walk from ``p0`` to ``p1``; same contract as ``_walk_py.walk_segment``."""
    cdef double P0[3]
    cdef double T[3]
    cdef double length, s_cur, reach = 0.0
    cdef int i
    cdef Py_ssize_t q
    cdef bint dup
    cdef Py_ssize_t ncand, k, cap
    cdef cnp.int64_t cur, nxt, tet, v
    for i in range(3):
        P0[i] = float(p0[i])
        T[i] = float(p1[i]) - P0[i]
    length = sqrt(T[0] * T[0] + T[1] * T[1] + T[2] * T[2])
    for i in range(3):
        T[i] = T[i] / length

    cdef cnp.int64_t[::1] start = np.ascontiguousarray(start_cand, dtype=np.int64)
    cap = max(start.shape[0], 256)
    cdef cnp.int64_t[::1] cand = np.empty(cap, dtype=np.int64)
    cdef double[::1] his = np.empty(cap, dtype=np.float64)
    cdef unsigned char[::1] valid = np.empty(cap, dtype=np.uint8)

    for k in range(start.shape[0]):
        cand[k] = start[k]
    with nogil:
        cur = _pick(nodes, tets, cand, start.shape[0], his, valid, P0, T, length,
                    bary_tol, 0.0, merge_tol, &reach)
    if cur < 0:
        return NO_START, np.empty(0, np.int64), np.zeros(1), -1

    ids = [cur]
    breaks = [0.0]
    s_cur = reach
    while s_cur < length - merge_tol:
        breaks.append(s_cur)
        ncand = 0
        for i in range(4):
            v = tets[cur, i]
            for k in range(star_ptr[v], star_ptr[v + 1]):
                tet = star_idx[k]
                dup = False
                for q in range(ncand):
                    if cand[q] == tet:
                        dup = True
                        break
                if not dup:
                    if ncand == cap:
                        cap *= 2
                        cand = np.resize(np.asarray(cand), cap)
                        his = np.empty(cap, dtype=np.float64)
                        valid = np.empty(cap, dtype=np.uint8)
                    cand[ncand] = tet
                    ncand += 1
        with nogil:
            nxt = _pick(nodes, tets, cand, ncand, his, valid, P0, T, length,
                        bary_tol, s_cur, merge_tol, &reach)
        if nxt < 0:
            return DEAD_END, np.asarray(ids, np.int64), np.asarray(breaks), cur
        ids.append(nxt)
        cur = nxt
        s_cur = reach
    breaks.append(length)
    return OK, np.asarray(ids, np.int64), np.asarray(breaks), cur
