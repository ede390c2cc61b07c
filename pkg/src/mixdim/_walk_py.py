"""Pure numpy segment walk through a tet mesh (fallback for the compiled kernel)."""
import numpy as np

# status codes shared with the compiled kernel
OK = 0
NO_START = 1
DEAD_END = 2


def line_coefficients(nodes, tets, cand, p0, t):
    """Affine barycentric coefficients ``lam_j(s) = a_j + b_j s`` of each candidate tet."""
    v = nodes[tets[cand]]
    v0 = v[:, 0]
    e1 = v[:, 1] - v0
    e2 = v[:, 2] - v0
    e3 = v[:, 3] - v0
    # rows of the inverse edge matrix are the cross products over the determinant
    c23 = np.column_stack([e2[:, 1] * e3[:, 2] - e2[:, 2] * e3[:, 1],
                           e2[:, 2] * e3[:, 0] - e2[:, 0] * e3[:, 2],
                           e2[:, 0] * e3[:, 1] - e2[:, 1] * e3[:, 0]])
    c31 = np.column_stack([e3[:, 1] * e1[:, 2] - e3[:, 2] * e1[:, 1],
                           e3[:, 2] * e1[:, 0] - e3[:, 0] * e1[:, 2],
                           e3[:, 0] * e1[:, 1] - e3[:, 1] * e1[:, 0]])
    c12 = np.column_stack([e1[:, 1] * e2[:, 2] - e1[:, 2] * e2[:, 1],
                           e1[:, 2] * e2[:, 0] - e1[:, 0] * e2[:, 2],
                           e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]])
    det = e1[:, 0] * c23[:, 0] + e1[:, 1] * c23[:, 1] + e1[:, 2] * c23[:, 2]
    d = p0[None, :] - v0

    def dot(x, y):
        return x[:, 0] * y[:, 0] + x[:, 1] * y[:, 1] + x[:, 2] * y[:, 2]

    tt = np.broadcast_to(t, d.shape)
    m1, m2, m3 = dot(d, c23) / det, dot(d, c31) / det, dot(d, c12) / det
    n1, n2, n3 = dot(tt, c23) / det, dot(tt, c31) / det, dot(tt, c12) / det
    a = np.column_stack([1.0 - m1 - m2 - m3, m1, m2, m3])
    b = np.column_stack([-(n1 + n2 + n3), n1, n2, n3])
    return a, b


def clip(nodes, tets, cand, p0, t, length, bary_tol):
    """Parameter interval ``[lo, hi]`` of the segment inside each closed candidate tet."""
    a, b = line_coefficients(nodes, tets, cand, p0, t)
    lo = np.zeros(len(cand))
    hi = np.full(len(cand), length)
    ok = np.ones(len(cand), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = (-bary_tol - a) / b
    for j in range(4):
        pos = b[:, j] > 0.0
        neg = b[:, j] < 0.0
        lo = np.where(pos, np.maximum(lo, bound[:, j]), lo)
        hi = np.where(neg, np.minimum(hi, bound[:, j]), hi)
        ok &= ~((b[:, j] == 0.0) & (a[:, j] < -bary_tol))
    return lo, hi, ok & (lo <= hi)


def _pick(cand, lo, hi, ok, s_cur, merge_tol):
    valid = ok & (lo <= s_cur + merge_tol) & (hi > s_cur + merge_tol)
    if not valid.any():
        return -1, 0.0
    best_hi = hi[valid].max()
    # lowest tet index among those reaching (nearly) as far as the best one
    pick = valid & (hi >= best_hi - merge_tol)
    k = np.flatnonzero(pick)
    k = k[np.argmin(cand[k])]
    return int(cand[k]), float(hi[k])


def walk_segment(nodes, tets, star_ptr, star_idx, start_cand, p0, p1, bary_tol, merge_tol):
    """Walk from ``p0`` to ``p1`` tet by tet.

    Returns ``(status, tet_ids, breaks, last_tet)``; ``breaks`` has one more
    entry than ``tet_ids`` and runs from 0 to the segment length.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    length = float(np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]))
    t = d / length

    cand = np.asarray(start_cand, dtype=np.int64)
    lo, hi, ok = clip(nodes, tets, cand, p0, t, length, bary_tol)
    cur, reach = _pick(cand, lo, hi, ok, 0.0, merge_tol)
    if cur < 0:
        return NO_START, np.empty(0, np.int64), np.zeros(1), -1

    ids = [cur]
    breaks = [0.0]
    s_cur = reach
    while s_cur < length - merge_tol:
        breaks.append(s_cur)
        verts = tets[cur]
        cand = np.unique(np.concatenate([star_idx[star_ptr[v]:star_ptr[v + 1]] for v in verts]))
        lo, hi, ok = clip(nodes, tets, cand, p0, t, length, bary_tol)
        nxt, reach = _pick(cand, lo, hi, ok, s_cur, merge_tol)
        if nxt < 0:
            return DEAD_END, np.asarray(ids, np.int64), np.asarray(breaks), cur
        ids.append(nxt)
        cur = nxt
        s_cur = reach
    breaks.append(length)
    return OK, np.asarray(ids, np.int64), np.asarray(breaks), cur
