"""Exact closest-point queries against triangle soups.

Small meshes are scanned directly; larger ones go through a static AABB tree
whose traversal is batched over queries, so the per-node Python overhead is
shared by many points.  Results are identical to the exhaustive scan,
including the lowest-face-id tie break, because candidates are compared
lexicographically on (squared distance, face id).
"""

from __future__ import annotations

import numpy as np

_LEAF_SIZE = 8
_BRUTE_LIMIT = 512          # below this many faces the tree is not worth building
_NO_FACE = np.iinfo(np.int64).max


def closest_on_triangles(p: np.ndarray, tri: np.ndarray):
    """Closest points on triangles for every (query, triangle) pair.

    p: (Q, 3), tri: (T, 3, 3).  Returns (d2 (Q, T), bary (Q, T, 3)).
    Standard region-based closest-point classification, vectorized.
    """
    a = tri[None, :, 0, :]
    b = tri[None, :, 1, :]
    c = tri[None, :, 2, :]
    q = p[:, None, :]

    ab = b - a
    ac = c - a
    ap = q - a
    d1 = (ab * ap).sum(-1)
    d2_ = (ac * ap).sum(-1)
    bp = q - b
    d3 = (ab * bp).sum(-1)
    d4 = (ac * bp).sum(-1)
    cp = q - c
    d5 = (ab * cp).sum(-1)
    d6 = (ac * cp).sum(-1)

    vc = d1 * d4 - d3 * d2_
    vb = d5 * d2_ - d1 * d6
    va = d3 * d6 - d5 * d4

    Q, T = d1.shape
    u = np.empty((Q, T))
    v = np.empty((Q, T))
    w = np.empty((Q, T))

    with np.errstate(divide="ignore", invalid="ignore"):
        # interior (default)
        denom = va + vb + vc
        denom = np.where(denom != 0.0, denom, 1.0)
        v_in = vb / denom
        w_in = vc / denom
        u[:] = 1.0 - v_in - w_in
        v[:] = v_in
        w[:] = w_in

        # edge BC
        t_bc = (d4 - d3) / np.where((d4 - d3) + (d5 - d6) != 0.0, (d4 - d3) + (d5 - d6), 1.0)
        m = (va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0)
        u[m] = 0.0
        v[m] = (1.0 - t_bc)[m]
        w[m] = t_bc[m]

        # edge AC
        t_ac = d2_ / np.where(d2_ - d6 != 0.0, d2_ - d6, 1.0)
        m = (vb <= 0.0) & (d2_ >= 0.0) & (d6 <= 0.0)
        u[m] = (1.0 - t_ac)[m]
        v[m] = 0.0
        w[m] = t_ac[m]

        # edge AB
        t_ab = d1 / np.where(d1 - d3 != 0.0, d1 - d3, 1.0)
        m = (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0)
        u[m] = (1.0 - t_ab)[m]
        v[m] = t_ab[m]
        w[m] = 0.0

    # vertex regions last so they win over the edge fallbacks
    m = (d6 >= 0.0) & (d5 <= d6)
    u[m] = 0.0
    v[m] = 0.0
    w[m] = 1.0
    m = (d3 >= 0.0) & (d4 <= d3)
    u[m] = 0.0
    v[m] = 1.0
    w[m] = 0.0
    m = (d1 <= 0.0) & (d2_ <= 0.0)
    u[m] = 1.0
    v[m] = 0.0
    w[m] = 0.0

    closest = u[:, :, None] * a + v[:, :, None] * b + w[:, :, None] * c
    diff = q - closest
    d2 = (diff * diff).sum(-1)
    bary = np.stack([u, v, w], axis=-1)
    return d2, bary


def _box_dist2(p: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    d = np.maximum(np.maximum(lo[None, :] - p, p - hi[None, :]), 0.0)
    return (d * d).sum(-1)


class TriangleIndex:
    """Static AABB tree over a triangle array with batched nearest queries."""

    def __init__(self, tri: np.ndarray, face_ids: np.ndarray, leaf_size: int = _LEAF_SIZE):
        self.tri = np.asarray(tri, dtype=float)
        self.face_ids = np.asarray(face_ids, dtype=np.int64)
        n = len(self.tri)
        self.brute = n <= _BRUTE_LIMIT
        if self.brute or n == 0:
            return
        cent = self.tri.mean(axis=1)
        lo_all = self.tri.min(axis=1)
        hi_all = self.tri.max(axis=1)

        perm = np.arange(n)
        nodes_lo, nodes_hi, nodes_a, nodes_b, nodes_leaf = [], [], [], [], []
        # (start, end, node_slot); children appended after parents
        stack = [(0, n, 0)]
        nodes_lo.append(None); nodes_hi.append(None)
        nodes_a.append(-1); nodes_b.append(-1); nodes_leaf.append(False)
        while stack:
            s, e, slot = stack.pop()
            idx = perm[s:e]
            nodes_lo[slot] = lo_all[idx].min(axis=0)
            nodes_hi[slot] = hi_all[idx].max(axis=0)
            if e - s <= leaf_size:
                nodes_leaf[slot] = True
                nodes_a[slot] = s
                nodes_b[slot] = e
                continue
            cc = cent[idx]
            axis = int(np.argmax(cc.max(axis=0) - cc.min(axis=0)))
            half = (e - s) // 2
            order = np.argpartition(cc[:, axis], half)
            perm[s:e] = idx[order]
            left = len(nodes_lo)
            right = left + 1
            for _ in range(2):
                nodes_lo.append(None); nodes_hi.append(None)
                nodes_a.append(-1); nodes_b.append(-1); nodes_leaf.append(False)
            nodes_a[slot] = left
            nodes_b[slot] = right
            stack.append((s, s + half, left))
            stack.append((s + half, e, right))
        self.perm = perm
        self.node_lo = np.array(nodes_lo)
        self.node_hi = np.array(nodes_hi)
        self.node_a = np.array(nodes_a)
        self.node_b = np.array(nodes_b)
        self.node_leaf = np.array(nodes_leaf)

    def query(self, points: np.ndarray):
        """Nearest triangle per query point.

        Returns (d2, face_id, bary, closest_point) arrays.  Ties on exact
        squared distance resolve to the lowest face id.
        """
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        nq = len(p)
        best_d2 = np.full(nq, np.inf)
        best_fid = np.full(nq, _NO_FACE, dtype=np.int64)
        best_bary = np.zeros((nq, 3))
        best_pt = np.zeros((nq, 3))
        if len(self.tri) == 0:
            return best_d2, best_fid, best_bary, best_pt
        if self.brute:
            self._leaf_update(p, np.arange(nq), np.arange(len(self.tri)),
                              best_d2, best_fid, best_bary, best_pt)
            return best_d2, best_fid, best_bary, best_pt

        stack = [(0, np.arange(nq))]
        while stack:
            node, idx = stack.pop()
            lb = _box_dist2(p[idx], self.node_lo[node], self.node_hi[node])
            keep = lb <= best_d2[idx]
            idx = idx[keep]
            if len(idx) == 0:
                continue
            if self.node_leaf[node]:
                tris = self.perm[self.node_a[node]:self.node_b[node]]
                self._leaf_update(p, idx, tris, best_d2, best_fid, best_bary, best_pt)
                continue
            a, b = self.node_a[node], self.node_b[node]
            la = _box_dist2(p[idx], self.node_lo[a], self.node_hi[a])
            lbx = _box_dist2(p[idx], self.node_lo[b], self.node_hi[b])
            # Visit the nearer child first (pushed last).
            if np.median(la) <= np.median(lbx):
                stack.append((b, idx))
                stack.append((a, idx))
            else:
                stack.append((a, idx))
                stack.append((b, idx))
        return best_d2, best_fid, best_bary, best_pt

    def _leaf_update(self, p, idx, tri_rows, best_d2, best_fid, best_bary, best_pt):
        d2, bary = closest_on_triangles(p[idx], self.tri[tri_rows])
        fids = self.face_ids[tri_rows]
        dmin = d2.min(axis=1)
        tie = d2 == dmin[:, None]
        fid_m = np.where(tie, fids[None, :], _NO_FACE)
        col = fid_m.argmin(axis=1)
        rows = np.arange(len(idx))
        cand_fid = fids[col]
        better = (dmin < best_d2[idx]) | ((dmin == best_d2[idx]) & (cand_fid < best_fid[idx]))
        upd = idx[better]
        best_d2[upd] = dmin[better]
        best_fid[upd] = cand_fid[better]
        best_bary[upd] = bary[rows[better], col[better]]
        tri_sel = self.tri[tri_rows[col[better]]]
        best_pt[upd] = (bary[rows[better], col[better]][:, :, None] * tri_sel).sum(axis=1)
