import numpy as np
import pytest

from dass import hrbf
from dass.errors import NoConvergence, SingularSystem, TooFewSamples, ZeroGradient

from conftest import sphere_samples


def cube_corner_samples(radius=2.0):
    out = []
    for sx in (-1, 1):
        for sy in (-1, 1):
            for sz in (-1, 1):
                d = np.array([sx, sy, sz], dtype=float) / np.sqrt(3.0)
                out.append(hrbf.OrientedSample(radius * d, d))
    return out


class TestFit:
    def test_center_is_inside(self, sphere6):
        assert hrbf.eval(sphere6, (0.0, 0.0, 0.0)) < 0.0

    def test_interpolation_residuals(self, sphere6):
        for s in sphere_samples(6):
            assert abs(hrbf.eval(sphere6, s.position)) <= 1e-6
            assert np.linalg.norm(hrbf.grad(sphere6, s.position) - s.normal) <= 1e-4

    def test_cube_corner_fit_outside_point(self):
        surf = hrbf.fit(cube_corner_samples(2.0))
        # Oracle: dense evaluation along +x confirms a single sign change
        # (inside -> outside) before x = 3.
        ts = np.linspace(0.0, 3.0, 2000)
        fs = hrbf.eval_many(surf, np.stack([ts, np.zeros_like(ts), np.zeros_like(ts)], axis=1))
        changes = np.nonzero(np.sign(fs[:-1]) != np.sign(fs[1:]))[0]
        assert len(changes) == 1
        assert hrbf.eval(surf, (3.0, 0.0, 0.0)) > 0.0

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            hrbf.fit(sphere_samples(6)[:3])

    def test_duplicate_positions(self):
        s = sphere_samples(6)
        dup = s + [hrbf.OrientedSample(s[0].position, s[0].normal)]
        with pytest.raises(SingularSystem):
            hrbf.fit(dup)

    def test_non_unit_normal_rejected(self):
        with pytest.raises(ValueError):
            hrbf.OrientedSample((1.0, 0.0, 0.0), (0.0, 0.0, 2.0))

    def test_deterministic_coefficients(self):
        a = hrbf.fit(sphere_samples(26))
        b = hrbf.fit(sphere_samples(26))
        assert np.array_equal(a.alpha, b.alpha)
        assert np.array_equal(a.beta, b.beta)


class TestEval:
    def test_zero_at_samples(self, sphere6):
        for s in sphere_samples(6):
            assert abs(hrbf.eval(sphere6, s.position)) <= 1e-6

    def test_symmetry(self, sphere6):
        p = np.array([0.3, 0.5, -0.2])
        q = p * np.array([1.0, 1.0, -1.0])  # sample set symmetric under z-flip
        assert abs(hrbf.eval(sphere6, p) - hrbf.eval(sphere6, q)) <= 1e-9

    def test_zero_set_close_to_unit_sphere(self, sphere6):
        # Oracle: brute-force root bracketing along rays from the center.
        rng = np.random.default_rng(11)
        dirs = rng.normal(size=(100, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        ts = np.linspace(0.3, 2.0, 4000)
        for d in dirs:
            fs = hrbf.eval_many(sphere6, ts[:, None] * d[None, :])
            k = int(np.nonzero(np.sign(fs[:-1]) != np.sign(fs[1:]))[0][0])
            assert abs(ts[k] - 1.0) <= 0.06


class TestGrad:
    def test_matches_normals(self, sphere6):
        for s in sphere_samples(6):
            assert np.linalg.norm(hrbf.grad(sphere6, s.position) - s.normal) <= 1e-4

    def test_finite_difference_oracle(self, sphere6):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(100, 3)) * 0.8
        g = hrbf.grad_many(sphere6, pts)
        h = 1e-5
        fd = np.zeros_like(g)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd[:, k] = (hrbf.eval_many(sphere6, pts + e)
                        - hrbf.eval_many(sphere6, pts - e)) / (2 * h)
        rel = np.linalg.norm(g - fd, axis=1) / np.maximum(np.linalg.norm(g, axis=1), 1e-12)
        assert rel.max() <= 1e-5

    def test_symmetry_mirrors_gradient(self, sphere6):
        p = np.array([0.4, -0.1, 0.7])
        gp = hrbf.grad(sphere6, p)
        gq = hrbf.grad(sphere6, p * np.array([-1.0, 1.0, 1.0]))
        assert np.allclose(gq, gp * np.array([-1.0, 1.0, 1.0]), atol=1e-9)


class TestProjection:
    def test_fixed_point(self, sphere6):
        q = hrbf.project_surface(sphere6, (2.0, 0.0, 0.0))
        q2 = hrbf.project_surface(sphere6, q)
        assert np.array_equal(q, q2)  # converged input returns unchanged

    def test_on_axis_projection(self, sphere6):
        q = hrbf.project_surface(sphere6, (2.0, 0.0, 0.0))
        assert abs(q[1]) < 1e-9 and abs(q[2]) < 1e-9
        assert abs(hrbf.eval(sphere6, q)) <= sphere6.projection_tol

    def test_idempotence_displacement(self, sphere6):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(50, 3))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * 1.2
        q, ok = hrbf.project_many(sphere6, pts)
        assert ok.all()
        q2, ok2 = hrbf.project_many(sphere6, q)
        assert ok2.all()
        assert np.linalg.norm(q2 - q, axis=1).max() <= 1e-7

    def test_near_surface_batch(self, sphere6):
        # Start points chosen within 0.3 of the zero set; the fitted sphere
        # radius (verified against the bracketing oracle above) selects them.
        rng = np.random.default_rng(42)
        dirs = rng.normal(size=(1000, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = rng.uniform(0.7, 1.3, size=1000)
        pts = dirs * radii[:, None]
        q, ok = hrbf.project_many(sphere6, pts)
        assert ok.all()
        assert np.abs(hrbf.eval_many(sphere6, q)).max() <= sphere6.projection_tol

    def test_zero_gradient_raises(self, sphere6):
        # The center is a symmetry point: the gradient vanishes there.
        g = hrbf.grad(sphere6, (0.0, 0.0, 0.0))
        assert np.linalg.norm(g) < 1e-12
        with pytest.raises(ZeroGradient):
            hrbf.project_surface(sphere6, (0.0, 0.0, 0.0))


class TestRayRoot:
    def test_root_near_bottom_pole(self, sphere6):
        root = hrbf.ray_root(sphere6, (0.0, 0.0, -3.0), (0.0, 0.0, 1.0), (0.0, 6.0))
        assert root is not None
        # Oracle: dense 1D sampling brackets the first root.
        ts = np.linspace(0.0, 6.0, 20000)
        fs = hrbf.eval_many(sphere6, np.array([0.0, 0.0, -3.0]) + ts[:, None] * np.array([0.0, 0.0, 1.0]))
        k = int(np.nonzero(np.sign(fs[:-1]) != np.sign(fs[1:]))[0][0])
        assert abs((root[2] + 3.0) - ts[k]) <= 6.0 / 256
        assert abs(root[2] - (-1.0)) <= 0.01
        assert abs(hrbf.eval(sphere6, root)) <= 1e-10

    def test_miss_returns_none(self, sphere6):
        assert hrbf.ray_root(sphere6, (5.0, 5.0, 5.0), (0.0, 0.0, 1.0), (0.0, 6.0)) is None

    def test_grazing_within_probe_resolution_is_none(self, sphere6):
        # A ray that nicks the sphere across a chord far thinner than the
        # probe spacing (and away from any probe point).
        offset = 1.0 - 1e-9
        root = hrbf.ray_root(sphere6, (offset, 0.0, -3.001), (0.0, 0.0, 1.0), (0.0, 6.0))
        assert root is None


class TestDeterminism:
    def test_eval_batch_independent(self, sphere26):
        pts = np.random.default_rng(1).normal(size=(100, 3))
        full = hrbf.eval_many(sphere26, pts)
        singles = np.array([hrbf.eval(sphere26, p) for p in pts])
        assert np.array_equal(full, singles)

    def test_projection_batch_independent(self, sphere26):
        pts = np.random.default_rng(2).normal(size=(20, 3))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * 1.1
        batch, _ = hrbf.project_many(sphere26, pts)
        singles = np.array([hrbf.project_surface(sphere26, p) for p in pts])
        assert np.array_equal(batch, singles)
