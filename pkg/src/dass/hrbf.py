"""Hermite RBF implicit surface: fitting, evaluation, gradients, projection.

The coarse shape is the zero set of

    f(p) = sum_j [ alpha_j * phi(|p - x_j|) - dot(beta_j, grad phi(p - x_j)) ]

with the triharmonic kernel phi(r) = r^3.  Fitting enforces first-order
Hermite conditions f(x_j) = 0 and grad f(x_j) = n_j, so f is negative inside
and positive outside when the sample normals point outward.

A fitted surface is immutable; evaluation, gradients and projection are pure
and safe to call concurrently.  All batched entry points take (N, 3) arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, SingularSystem, TooFewSamples, ZeroGradient

# Points per evaluation slab; fixed so reduction order (and hence bit-level
# results) never depends on caller batch sizes.
_CHUNK = 4096

_UNIT_TOL = 1e-9
_MIN_SEPARATION = 1e-9


@dataclass(frozen=True)
class OrientedSample:
    """A surface point with its outward unit normal."""

    position: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        n = np.asarray(self.normal, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > _UNIT_TOL:
            raise ValueError(f"normal must be unit length, got |n|={np.linalg.norm(n)}")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class HrbfSurface:
    """Fitted implicit surface. Immutable."""

    centers: np.ndarray          # (n, 3)
    alpha: np.ndarray            # (n,)
    beta: np.ndarray             # (n, 3)
    kernel: str = "triharmonic"
    bbox_diag: float = 1.0
    normals: np.ndarray = field(default=None, repr=False)  # fitted normals, kept for edits

    @property
    def projection_tol(self) -> float:
        return 1e-8 * self.bbox_diag


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    single = p.ndim == 1
    return p.reshape(-1, 3), single


def fit(samples: list[OrientedSample]) -> HrbfSurface:
    """Fit an HRBF to oriented samples.

    Raises TooFewSamples for fewer than 4 samples and SingularSystem when
    duplicate or degenerate samples make the dense system unsolvable.
    """
    if len(samples) < 4:
        raise TooFewSamples(f"need at least 4 samples, got {len(samples)}")
    x = np.array([s.position for s in samples], dtype=float)
    nrm = np.array([s.normal for s in samples], dtype=float)
    n = len(samples)

    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    if d2.min() <= _MIN_SEPARATION ** 2:
        raise SingularSystem("duplicate sample positions")

    u = x[:, None, :] - x[None, :, :]          # (n, n, 3)
    r = np.sqrt((u * u).sum(-1))               # (n, n)
    g = 3.0 * r[:, :, None] * u                # grad phi at offsets
    inv_r = np.where(r > 0.0, 1.0 / np.maximum(r, 1e-300), 0.0)
    # Hessian blocks 3(r I + u u^T / r); zero at coincident points.
    h = 3.0 * (r[:, :, None, None] * np.eye(3)
               + u[:, :, :, None] * u[:, :, None, :] * inv_r[:, :, None, None])

    m = np.zeros((4 * n, 4 * n))
    rhs = np.zeros(4 * n)
    # Block (i, j): rows = [value_i; grad_i], cols = [alpha_j; beta_j].
    m[0::4, 0::4] = r ** 3
    for k in range(3):
        m[0::4, 1 + k::4] = -g[:, :, k]
        m[1 + k::4, 0::4] = g[:, :, k]
        for l in range(3):
            m[1 + k::4, 1 + l::4] = -h[:, :, k, l]
    rhs[1::4] = nrm[:, 0]
    rhs[2::4] = nrm[:, 1]
    rhs[3::4] = nrm[:, 2]

    try:
        sol = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("non-finite solution")

    alpha = sol[0::4].copy()
    beta = np.stack([sol[1::4], sol[2::4], sol[3::4]], axis=1)
    lo, hi = x.min(axis=0), x.max(axis=0)
    diag = float(np.linalg.norm(hi - lo)) or 1.0
    surf = HrbfSurface(centers=x, alpha=alpha, beta=beta, bbox_diag=diag, normals=nrm)

    # Interpolation residual check doubles as a rank-deficiency detector.
    fv = eval_many(surf, x)
    gv = grad_many(surf, x)
    if np.abs(fv).max() > 1e-6 or np.linalg.norm(gv - nrm, axis=1).max() > 1e-4:
        raise SingularSystem("interpolation residuals exceed tolerance; system ill-conditioned")
    return surf


def eval_many(s: HrbfSurface, points) -> np.ndarray:
    """f at each point, shape (N,)."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.empty(len(p))
    for i in range(0, len(p), _CHUNK):
        q = p[i:i + _CHUNK]
        u = q[:, None, :] - s.centers[None, :, :]
        r = np.sqrt((u * u).sum(-1))
        ub = (u * s.beta[None, :, :]).sum(-1)
        out[i:i + _CHUNK] = (s.alpha[None, :] * r ** 3).sum(-1) - 3.0 * (r * ub).sum(-1)
    return out


def grad_many(s: HrbfSurface, points) -> np.ndarray:
    """grad f at each point, shape (N, 3)."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.empty((len(p), 3))
    for i in range(0, len(p), _CHUNK):
        q = p[i:i + _CHUNK]
        u = q[:, None, :] - s.centers[None, :, :]
        r = np.sqrt((u * u).sum(-1))
        inv_r = np.where(r > 0.0, 1.0 / np.maximum(r, 1e-300), 0.0)
        ub = (u * s.beta[None, :, :]).sum(-1)
        term = (s.alpha[None, :] * r)[:, :, None] * u \
            - r[:, :, None] * s.beta[None, :, :] \
            - u * (ub * inv_r)[:, :, None]
        out[i:i + _CHUNK] = 3.0 * term.sum(axis=1)
    return out


def eval(s: HrbfSurface, p) -> float:  # noqa: A001 - spec operation name
    return float(eval_many(s, np.asarray(p, dtype=float).reshape(1, 3))[0])


def grad(s: HrbfSurface, p) -> np.ndarray:
    return grad_many(s, np.asarray(p, dtype=float).reshape(1, 3))[0]


def project_many(s: HrbfSurface, points, tol: float = None, max_iter: int = 50):
    """Damped Newton projection along grad f for a batch of points.

    Returns (projected, converged_mask).  Points whose gradient collapses are
    reported unconverged rather than raising; single-point callers translate
    flags into exceptions.
    """
    if tol is None:
        tol = s.projection_tol
    q = np.array(points, dtype=float).reshape(-1, 3).copy()
    n = len(q)
    converged = np.zeros(n, dtype=bool)
    zero_grad = np.zeros(n, dtype=bool)
    active = np.arange(n)
    for _ in range(max_iter):
        if len(active) == 0:
            break
        f = eval_many(s, q[active])
        done = np.abs(f) <= tol
        converged[active[done]] = True
        active = active[~done]
        f = f[~done]
        if len(active) == 0:
            break
        g = grad_many(s, q[active])
        gn2 = (g * g).sum(-1)
        dead = gn2 < 1e-24
        if dead.any():
            zero_grad[active[dead]] = True
            active = active[~dead]
            f = f[~dead]
            g = g[~dead]
            gn2 = gn2[~dead]
            if len(active) == 0:
                break
        step = (f / gn2)[:, None] * g
        nxt = q[active] - step
        # Step halving keeps the iteration inside the basin on stiff fits.
        fa = np.abs(f)
        for _half in range(6):
            bad = np.abs(eval_many(s, nxt)) > fa
            if not bad.any():
                break
            step[bad] *= 0.5
            nxt[bad] = q[active[bad]] - step[bad]
        q[active] = nxt
    # Final residual check for points that used all iterations.
    if len(active):
        f = eval_many(s, q[active])
        converged[active[np.abs(f) <= tol]] = True
    converged[zero_grad] = False
    return q, converged


def project_surface(s: HrbfSurface, p) -> np.ndarray:
    """Project a point onto the zero set (Newton along the gradient).

    Raises ZeroGradient if the gradient collapses at an iterate and
    NoConvergence (carrying the last iterate) if 50 steps do not reach
    |f| <= 1e-8 * bbox diagonal.
    """
    pt = np.asarray(p, dtype=float).reshape(1, 3)
    g0 = grad_many(s, pt)[0]
    if (g0 * g0).sum() < 1e-24:
        raise ZeroGradient(f"|grad f| < 1e-12 at {pt[0]}")
    q, ok = project_many(s, pt)
    if not ok[0]:
        gq = grad_many(s, q)[0]
        if (gq * gq).sum() < 1e-24:
            raise ZeroGradient(f"|grad f| < 1e-12 at iterate {q[0]}")
        raise NoConvergence("projection did not converge", last_point=q[0])
    return q[0]


def ray_root(s: HrbfSurface, origin, direction, t_range, probes: int = 256):
    """First zero of f along origin + t*dir for t in t_range, or None.

    Brackets the first sign change among uniform probes, then bisects to
    |f| <= 1e-10.  A grazing contact narrower than the probe spacing is
    reported as None (documented limitation).
    """
    o = np.asarray(origin, dtype=float).reshape(3)
    d = np.asarray(direction, dtype=float).reshape(3)
    t0, t1 = float(t_range[0]), float(t_range[1])
    ts = np.linspace(t0, t1, probes + 1)
    fs = eval_many(s, o[None, :] + ts[:, None] * d[None, :])
    if fs[0] == 0.0:
        return o + ts[0] * d
    sign_change = np.nonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) <= 0.0)[0]
    if len(sign_change) == 0:
        return None
    k = int(sign_change[0])
    lo, hi = ts[k], ts[k + 1]
    flo = fs[k]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = eval_many(s, (o + mid * d)[None, :])[0]
        if abs(fm) <= 1e-10:
            return o + mid * d
        if np.sign(fm) == np.sign(flo):
            lo = mid
            flo = fm
        else:
            hi = mid
    return o + 0.5 * (lo + hi) * d
