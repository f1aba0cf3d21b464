import numpy as np

from dass.trisearch import TriangleIndex, closest_on_triangles


def oracle_triangle_d2(p, tri):
    """Independent point-triangle distance: plane clip plus edge clamping."""
    a, b, c = tri

    def seg_d2(p, a, b):
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        q = a + t * ab
        return np.dot(p - q, p - q)

    best = min(seg_d2(p, a, b), seg_d2(p, b, c), seg_d2(p, c, a))
    n = np.cross(b - a, c - a)
    nn = np.dot(n, n)
    if nn > 0:
        q = p - n * np.dot(p - a, n) / nn
        v0, v1, v2 = b - a, c - a, q - a
        d00, d01, d11 = np.dot(v0, v0), np.dot(v0, v1), np.dot(v1, v1)
        d20, d21 = np.dot(v2, v0), np.dot(v2, v1)
        den = d00 * d11 - d01 * d01
        if den != 0:
            v = (d11 * d20 - d01 * d21) / den
            w = (d00 * d21 - d01 * d20) / den
            if v >= 0 and w >= 0 and v + w <= 1:
                best = min(best, np.dot(p - q, p - q))
    return best


def test_matches_oracle_distances():
    rng = np.random.default_rng(42)
    tri = rng.normal(size=(800, 3, 3))
    idx = TriangleIndex(tri, np.arange(800, dtype=np.int64))
    pts = rng.normal(size=(200, 3)) * 1.5
    d2, fid, bary, cp = idx.query(pts)
    for i in range(len(pts)):
        want = min(oracle_triangle_d2(pts[i], tri[k]) for k in range(len(tri)))
        assert abs(np.sqrt(want) - np.sqrt(d2[i])) <= 1e-12


def test_tree_equals_full_scan_bitwise():
    rng = np.random.default_rng(7)
    tri = rng.normal(size=(3000, 3, 3))
    idx = TriangleIndex(tri, np.arange(3000, dtype=np.int64))
    assert not idx.brute
    pts = rng.normal(size=(300, 3))
    d2, fid, _, _ = idx.query(pts)
    full_d2, _ = closest_on_triangles(pts, tri)
    assert np.array_equal(full_d2.min(axis=1), d2)


def test_tie_break_lowest_face_id():
    rng = np.random.default_rng(9)
    tri = rng.normal(size=(20, 3, 3))
    doubled = np.concatenate([tri, tri])
    ids = np.concatenate([np.arange(20, 40), np.arange(0, 20)]).astype(np.int64)
    idx = TriangleIndex(doubled, ids)
    _, fid, _, _ = idx.query(rng.normal(size=(50, 3)))
    assert (fid < 20).all()


def test_barycentric_weights_sum_to_one():
    rng = np.random.default_rng(3)
    tri = rng.normal(size=(100, 3, 3))
    idx = TriangleIndex(tri, np.arange(100, dtype=np.int64))
    _, _, bary, _ = idx.query(rng.normal(size=(100, 3)))
    assert np.abs(bary.sum(axis=1) - 1.0).max() <= 1e-12
    assert bary.min() >= -1e-12
