"""Detail layer: height curves, raster layers, displacement and local error.

Strokes drawn over the surface are transported into chart coordinates and
become height curves.  A curve of amplitude h and influence radius r raises
the surface by

    h * exp(-25 d^4 / (4 r^4))

where d is the chart-space distance to the curve.  Values below 1e-30 are
truncated to exactly zero, so each curve has compact support in practice.
Curves of one stroke combine through a single distance field (the stroke's
polyline carried into every chart it touches, using the exact seam
transitions), so the composed height is continuous across chart boundaries;
distinct strokes and raster layers superpose additively.

The displaced surface offsets points of the coarse surface along its unit
gradient by the composed height.  Mesh adaptation is driven by the distance
of displaced-face samples to the displaced surface, optionally scaled by the
detail factor max(2 |grad h|, 1), which concentrates refinement where the
height field varies.

All evaluations are pure over an immutable (surface, atlas, mesh snapshot)
triple and may run concurrently during error sweeps.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import hrbf
from .errors import EmptyStroke, ZeroGradient
from .mesh48 import Mesh48, edge_key

_TRUNCATE = 1e-30
_GRAD_STEP = 1e-4       # chart-units step for height gradients
# 2D low-discrepancy (R2) sequence increments.
_R2_A = 0.7548776662466927
_R2_B = 0.5698402909980532

DEFAULT_SAMPLES_PER_FACE = 6


# ----------------------------------------------------------------- distance


def polyline_distance_many(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Exact distance from each point to a 2D polyline."""
    poly = np.asarray(poly, dtype=float)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    a = poly[:-1]
    d = poly[1:] - a
    dd = (d * d).sum(-1)
    dd = np.where(dd > 0.0, dd, 1.0)
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip((ap * d[None, :, :]).sum(-1) / dd[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
    diff = pts[:, None, :] - closest
    return np.sqrt((diff * diff).sum(-1).min(axis=1))


def curve_distance(curves, p_uv) -> float:
    """Minimum chart-space distance from a point to any curve polyline."""
    p = np.asarray(p_uv, dtype=float).reshape(1, 2)
    best = np.inf
    for c in curves:
        best = min(best, float(polyline_distance_many(c.points, p)[0]))
    return best


def falloff(d, h: float, r: float):
    """Height contribution at distance d; truncated to 0 below 1e-30."""
    d = np.asarray(d, dtype=float)
    val = h * np.exp(-25.0 * d ** 4 / (4.0 * r ** 4))
    return np.where(np.abs(val) < _TRUNCATE, 0.0, val)


# ------------------------------------------------------------------- layers


@dataclass
class HeightCurve:
    """One stroke's presence in one chart.

    points holds the chart-owned polyline (with inserted boundary points);
    context, when set, is the whole stroke rewritten in this chart's
    coordinates and is what the distance field uses, so the field matches
    its neighbours along seams exactly.
    """

    points: np.ndarray
    h: float
    r: float
    context: np.ndarray = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.r <= 0:
            raise ValueError("influence radius must be positive")
        if len(self.points) < 2:
            raise ValueError("height curve needs at least 2 points")
        if (np.linalg.norm(np.diff(self.points, axis=0), axis=1) == 0.0).any():
            raise ValueError("consecutive curve points must be distinct")
        if self.context is not None:
            self.context = np.asarray(self.context, dtype=float).reshape(-1, 2)

    def field_polyline(self) -> np.ndarray:
        return self.context if self.context is not None else self.points


@dataclass
class SketchedLayer:
    curves: list
    kind: str = "sketched"

    def height_many(self, uv: np.ndarray) -> np.ndarray:
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        total = np.zeros(len(uv))
        for c in self.curves:
            total += falloff(polyline_distance_many(c.field_polyline(), uv), c.h, c.r)
        return total

    def polylines(self):
        return [c.points for c in self.curves]


@dataclass
class RasterLayer:
    """Gray image sampled bilinearly; image row 0 maps to the chart's v = 1."""

    grid: np.ndarray
    scale: float
    kind: str = "raster"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 2 or min(self.grid.shape) < 2:
            raise ValueError("raster grid must be at least 2x2")

    def height_many(self, uv: np.ndarray) -> np.ndarray:
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        rows, cols = self.grid.shape
        x = np.clip(uv[:, 0], 0.0, 1.0) * (cols - 1)
        y = (1.0 - np.clip(uv[:, 1], 0.0, 1.0)) * (rows - 1)
        x0 = np.minimum(x.astype(int), cols - 2)
        y0 = np.minimum(y.astype(int), rows - 2)
        fx = x - x0
        fy = y - y0
        g = self.grid
        val = (g[y0, x0] * (1 - fx) * (1 - fy) + g[y0, x0 + 1] * fx * (1 - fy)
               + g[y0 + 1, x0] * (1 - fx) * fy + g[y0 + 1, x0 + 1] * fx * fy)
        return self.scale * val

    def polylines(self):
        return []


def height_at(layer, p_uv) -> float:
    """Height of one layer at chart coordinates."""
    return float(layer.height_many(np.asarray(p_uv, dtype=float).reshape(1, 2))[0])


def composed_height(atlas, chart_id: int, p_uv) -> float:
    """Sum of all the chart's layers at chart coordinates."""
    return float(composed_height_many(atlas, chart_id,
                                      np.asarray(p_uv, dtype=float).reshape(1, 2))[0])


def composed_height_many(atlas, chart_id: int, uv: np.ndarray) -> np.ndarray:
    uv = np.asarray(uv, dtype=float).reshape(-1, 2)
    total = np.zeros(len(uv))
    chart = atlas.charts.get(int(chart_id))
    if chart is None:
        return total
    for layer in chart.layers:
        total += layer.height_many(uv)
    return total


def height_gradient_many(atlas, chart_id: int, uv: np.ndarray) -> np.ndarray:
    """Central-difference gradient of the composed height in chart units."""
    uv = np.asarray(uv, dtype=float).reshape(-1, 2)
    out = np.empty((len(uv), 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = _GRAD_STEP
        out[:, k] = (composed_height_many(atlas, chart_id, uv + e)
                     - composed_height_many(atlas, chart_id, uv - e)) / (2 * _GRAD_STEP)
    return out


# --------------------------------------------------------------- transport


def transport_stroke(atlas, mesh: Mesh48, stroke_points):
    """Map a surface polyline into chart coordinates.

    Returns fragments as a list of (chart id, (k, 2) array).  A segment
    crossing a seam is split and the crossing point is appended to both
    fragments, so the transported curve stays continuous.
    """
    pts = np.asarray(stroke_points, dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        raise EmptyStroke("stroke needs at least 2 points")
    charts, uvs = atlas.to_chart_many(mesh, pts)
    frags = []
    cur_chart = int(charts[0])
    cur = [uvs[0]]

    def close():
        if len(cur) >= 2:
            frags.append((cur_chart, np.array(cur)))

    for i in range(1, len(pts)):
        ch = int(charts[i])
        if ch == cur_chart:
            if np.linalg.norm(uvs[i] - cur[-1]) > 0.0:
                cur.append(uvs[i])
            continue
        if (cur_chart, ch) in atlas.transitions:
            q_here = atlas.transfer(uvs[i], ch, cur_chart)
            b_here = _exit_point(cur[-1], q_here)
            if b_here is not None and np.linalg.norm(b_here - cur[-1]) > 0.0:
                cur.append(b_here)
            close()
            b_there = atlas.transfer(cur[-1], cur_chart, ch) if b_here is None \
                else atlas.transfer(b_here, cur_chart, ch)
            cur_chart = ch
            cur = [b_there]
            if np.linalg.norm(uvs[i] - cur[-1]) > 0.0:
                cur.append(uvs[i])
        else:
            # Hop across non-adjacent charts: refine the surface segment.
            mids = _bridge(atlas, mesh, pts[i - 1], pts[i], depth=6)
            if mids is None:
                close()
                cur_chart = ch
                cur = [uvs[i]]
            else:
                rest = transport_stroke(atlas, mesh, np.vstack([pts[i - 1], mids, pts[i]]))
                for fch, fpts in rest:
                    if fch == cur_chart and len(cur) >= 1:
                        for q in fpts:
                            if np.linalg.norm(q - cur[-1]) > 0.0:
                                cur.append(q)
                    else:
                        close()
                        cur_chart = fch
                        cur = list(fpts)
    close()
    return frags


def _exit_point(p, q):
    """Where segment p->q leaves the unit square (p assumed inside)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    t_exit = 1.0
    for k in range(2):
        for bound, sign in ((0.0, -1.0), (1.0, 1.0)):
            dk = q[k] - p[k]
            if sign * dk > 0.0 and sign * (q[k] - bound) > 0.0:
                t = (bound - p[k]) / dk
                if 0.0 <= t < t_exit:
                    t_exit = t
    if t_exit >= 1.0:
        return None
    return p + t_exit * (q - p)


def _bridge(atlas, mesh, p, q, depth):
    """Intermediate on-surface points between p and q, or None."""
    if depth == 0:
        return None
    mid = 0.5 * (np.asarray(p) + np.asarray(q))
    projected, ok = hrbf.project_many(atlas.surface, mid[None, :])
    if not ok[0]:
        return None
    return projected


def influence_cutoff(h: float, r: float) -> float:
    """Distance beyond which the falloff truncates to exactly zero."""
    if h == 0.0:
        return 0.0
    return r * (4.0 / 25.0 * max(np.log(abs(h) / _TRUNCATE), 1.0)) ** 0.25


def add_stroke(atlas, mesh: Mesh48, stroke_points, h: float, r: float):
    """Transport a stroke and attach it as one sketched layer per chart.

    Each touched chart receives the stroke's owned fragments plus the whole
    stroke rewritten in its coordinates (the distance-field context).  The
    polyline is then propagated through the chart transitions into every
    chart its falloff can still reach, so the composed height field is
    continuous across all seams, not only the ones the stroke crosses.
    """
    frags = transport_stroke(atlas, mesh, stroke_points)
    if not frags:
        raise EmptyStroke("stroke collapsed during transport")
    # Per touched chart: owned fragments plus the whole stroke rewritten in
    # that chart's coordinates by composing transitions along the path.
    curves_per_chart = {}
    for i, (ci, own) in enumerate(frags):
        full = [own]
        # extend leftwards
        rot, shift = np.eye(2), np.zeros(2)
        for j in range(i - 1, -1, -1):
            tr = atlas.transitions.get((frags[j][0], frags[j + 1][0]))
            if tr is None:
                break
            rot, shift = _compose(rot, shift, tr)
            full.insert(0, frags[j][1] @ rot.T + shift)
        # extend rightwards
        rot, shift = np.eye(2), np.zeros(2)
        for j in range(i + 1, len(frags)):
            tr = atlas.transitions.get((frags[j][0], frags[j - 1][0]))
            if tr is None:
                break
            rot, shift = _compose(rot, shift, tr)
            full.append(frags[j][1] @ rot.T + shift)
        context = _dedup(np.vstack(full))
        curves_per_chart.setdefault(ci, []).append(
            HeightCurve(own, h, r, context=context))
    for ci in sorted(curves_per_chart):
        own_pts = _dedup(np.vstack([c.points for c in curves_per_chart[ci]]))
        ctx = curves_per_chart[ci][0].context
        atlas.add_layer(ci, SketchedLayer([HeightCurve(own_pts, h, r, context=ctx)]))
    _propagate_influence(atlas, {ci: cs[0].context for ci, cs in curves_per_chart.items()},
                         h, r)
    return frags


def _propagate_influence(atlas, seeded: dict, h: float, r: float):
    """Carry the stroke polyline into passive charts its falloff reaches."""
    cutoff = influence_cutoff(h, r)
    if cutoff == 0.0:
        return
    visited = set(seeded)
    frontier = sorted(seeded.items())
    while frontier:
        nxt = []
        for ci, poly in frontier:
            for nb in atlas.neighbors(ci):
                if nb in visited:
                    continue
                tr = atlas.transitions[(ci, nb)]
                poly_nb = tr.apply(poly)
                if _square_polyline_distance(poly_nb) <= cutoff:
                    visited.add(nb)
                    atlas.add_layer(nb, SketchedLayer(
                        [HeightCurve(poly_nb, h, r, context=poly_nb)]))
                    nxt.append((nb, poly_nb))
        frontier = sorted(nxt)


def _square_polyline_distance(poly: np.ndarray) -> float:
    """Distance between the unit square and a polyline."""
    best = np.inf
    corners = [np.array([0.0, 0.0]), np.array([1.0, 0.0]),
               np.array([1.0, 1.0]), np.array([0.0, 1.0])]
    sides = [(corners[k], corners[(k + 1) % 4]) for k in range(4)]
    for k in range(len(poly) - 1):
        a, b = poly[k], poly[k + 1]
        for p in (a, b):
            d = np.maximum(np.maximum(-p, p - 1.0), 0.0)
            best = min(best, float(np.hypot(d[0], d[1])))
        for s0, s1 in sides:
            best = min(best, _segment_segment_distance(a, b, s0, s1))
        if best == 0.0:
            return 0.0
    return best


def _segment_segment_distance(a, b, c, d) -> float:
    """Distance between 2D segments ab and cd."""
    def orient(p, q, r_):
        return (q[0] - p[0]) * (r_[1] - p[1]) - (q[1] - p[1]) * (r_[0] - p[0])

    if (orient(a, b, c) * orient(a, b, d) <= 0) and (orient(c, d, a) * orient(c, d, b) <= 0):
        return 0.0
    out = np.inf
    for p, (s0, s1) in ((a, (c, d)), (b, (c, d)), (c, (a, b)), (d, (a, b))):
        e = s1 - s0
        t = float(np.clip(np.dot(p - s0, e) / max(np.dot(e, e), 1e-300), 0.0, 1.0))
        q = s0 + t * e
        out = min(out, float(np.hypot(*(p - q))))
    return out


def _compose(rot, shift, tr):
    """(rot, shift) followed by applying tr's frame first: x -> rot@(tr(x)) + shift."""
    return rot @ tr.rot, rot @ tr.shift + shift


def _dedup(poly: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(poly)):
        if np.linalg.norm(poly[i] - poly[keep[-1]]) > 0.0:
            keep.append(i)
    return poly[keep]


# ------------------------------------------------------------ displaced model


def _seed_floats(parts) -> tuple:
    dig = hashlib.blake2b(repr(parts).encode(), digest_size=16).digest()
    a = int.from_bytes(dig[:8], "little") / 2 ** 64
    b = int.from_bytes(dig[8:], "little") / 2 ** 64
    return a, b


def barycentric_samples(seed_parts, n: int) -> np.ndarray:
    """n deterministic low-discrepancy barycentric samples."""
    s1, s2 = _seed_floats(seed_parts)
    k = np.arange(n)
    u = (s1 + k * _R2_A) % 1.0
    v = (s2 + k * _R2_B) % 1.0
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    return np.stack([1.0 - u - v, u, v], axis=1)


class DisplacedSurface:
    """The composed model: coarse surface plus per-chart height displacement.

    Instances assume the positions and chart coordinates of existing mesh
    vertices stay fixed for their lifetime (true within one command); only
    vertex creation and removal are expected.
    """

    def __init__(self, surface, mesh: Mesh48, atlas, seed: int = 0,
                 samples_per_face: int = DEFAULT_SAMPLES_PER_FACE):
        self.surface = surface
        self.mesh = mesh
        self.atlas = atlas
        self.seed = seed
        self.samples_per_face = samples_per_face
        self._vdisp = {}
        self._vdisp_key = atlas.layers_version

    # ------------------------------------------------------------- heights

    def vertex_chart_uv(self, vid: int):
        v = self.mesh.vertices[vid]
        if v.label != 0 and v.label in v.chart_uv:
            return v.label, v.chart_uv[v.label]
        chart = sorted(v.chart_uv)[0]
        return chart, v.chart_uv[chart]

    def _displaced_for(self, vids) -> dict:
        """Displaced positions for the given vertex ids (cached per vertex)."""
        if self._vdisp_key != self.atlas.layers_version:
            self._vdisp = {}
            self._vdisp_key = self.atlas.layers_version
        missing = sorted({v for v in vids if v not in self._vdisp})
        if missing:
            pos = np.array([self.mesh.vertices[v].position for v in missing])
            if self.atlas.has_layers():
                heights = np.zeros(len(missing))
                by_chart = {}
                for row, vid in enumerate(missing):
                    chart, uv = self.vertex_chart_uv(vid)
                    by_chart.setdefault(chart, []).append((row, uv))
                for chart in sorted(by_chart):
                    rows = [r for r, _ in by_chart[chart]]
                    uvs = np.array([uv for _, uv in by_chart[chart]])
                    heights[rows] = composed_height_many(self.atlas, chart, uvs)
                out = pos + heights[:, None] * _unit_normals(self.surface, pos)
            else:
                out = pos
            for i, vid in enumerate(missing):
                self._vdisp[vid] = out[i]
        return self._vdisp

    def displaced_positions(self) -> dict:
        """vertex id -> displaced position for the whole mesh."""
        return dict(self._displaced_for(sorted(self.mesh.vertices)))

    # ------------------------------------------------------------ operations

    def displace(self, p) -> np.ndarray:
        """p on the coarse surface -> p + h * N (unit-gradient normal)."""
        p = np.asarray(p, dtype=float).reshape(3)
        chart, uv = self.atlas.to_chart(self.mesh, p)
        h = composed_height(self.atlas, chart, uv)
        g = hrbf.grad(self.surface, p)
        gn = np.linalg.norm(g)
        if gn < 1e-12:
            raise ZeroGradient(f"|grad f| < 1e-12 at {p}")
        return p + h * g / gn

    def project_final(self, p) -> np.ndarray:
        """Project onto the displaced surface: onto the coarse one, then offset."""
        q = hrbf.project_surface(self.surface, p)
        return self.displace(q)

    def distance_to_final(self, p) -> float:
        return float(np.linalg.norm(np.asarray(p, dtype=float) - self.project_final(p)))

    def detail_factor(self, p) -> float:
        """max(2 |grad h|, 1) at the chart coordinates of p."""
        chart, uv = self.atlas.to_chart(self.mesh, p)
        g = height_gradient_many(self.atlas, chart, uv[None, :])[0]
        return max(2.0 * float(np.linalg.norm(g)), 1.0)

    # ---------------------------------------------------------- face errors

    def face_error(self, fid: int, n: int = None, local: bool = True) -> float:
        f = self.mesh.faces[fid]
        return self.face_errors_for_verts([f.v], n=n, local=local)[0]

    def face_errors_for_verts(self, vert_tuples, n: int = None, local: bool = True):
        """Mean sample error for each vertex triple (real or prospective face).

        Samples are drawn on the displaced triangle; the error of a sample p
        is its distance to the displaced surface (coarse projection plus
        height offset), times the detail factor at p's chart coordinates when
        local is True.  The height is read at the sample's own barycentric
        chart coordinates, so errors are pure functions of the vertex tuple:
        deterministic, replayable, and stable across weld/resplit cycles.
        """
        if n is None:
            n = self.samples_per_face
        mesh = self.mesh
        has_layers = self.atlas.has_layers()
        disp = self._displaced_for([v for t in vert_tuples for v in t])

        m = len(vert_tuples)
        pts = np.empty((m * n, 3))
        uvs = np.empty((m * n, 2))
        chart_of = np.empty(m * n, dtype=np.int64)
        for i, verts in enumerate(vert_tuples):
            order = sorted(verts)
            bary = barycentric_samples((self.seed, tuple(order)), n)
            tri = np.array([disp[v] for v in order])
            pts[i * n:(i + 1) * n] = bary @ tri
            if has_layers:
                labels = {mesh.vertices[v].label for v in order}
                chart = min(l for l in labels if l != 0) if any(labels) else 0
                uvt = np.array([mesh.vertices[v].chart_uv[chart] for v in order])
                uvs[i * n:(i + 1) * n] = bary @ uvt
                chart_of[i * n:(i + 1) * n] = chart

        q, ok = hrbf.project_many(self.surface, pts)
        if has_layers:
            hq = np.zeros(m * n)
            for chart in sorted(set(chart_of.tolist())):
                sel = chart_of == chart
                hq[sel] = composed_height_many(self.atlas, chart, uvs[sel])
            tgt = q + hq[:, None] * _unit_normals(self.surface, q)
        else:
            tgt = q
        d = np.linalg.norm(pts - tgt, axis=1)
        d[~ok] = np.inf  # unprojectable samples force refinement review

        if local and has_layers:
            e = np.ones(m * n)
            for chart in sorted(set(chart_of.tolist())):
                sel = chart_of == chart
                g = height_gradient_many(self.atlas, chart, uvs[sel])
                e[sel] = np.maximum(2.0 * np.linalg.norm(g, axis=1), 1.0)
            d = d * e
        errs = d.reshape(m, n).mean(axis=1)
        return [float(x) for x in errs]


def _unit_normals(surface, points):
    g = hrbf.grad_many(surface, points)
    gn = np.linalg.norm(g, axis=1, keepdims=True)
    return g / np.maximum(gn, 1e-300)


class ErrorModel:
    """Cached face/edge/vertex errors driving mesh adaptation.

    Face errors are computed in batches against a chart view frozen at the
    start of each pass; a face keeps its first computed error for the whole
    adaptation, which keeps sweeps deterministic and cheap.
    """

    def __init__(self, ds: DisplacedSurface, local: bool = True):
        self.ds = ds
        self.local = local
        # Keyed by the face's sorted vertex ids: a face, its welded parent
        # and a later re-split all read the same number, so refine and
        # simplify can never disagree and oscillate.
        self._cache: dict[tuple, float] = {}

    def begin_pass(self, mesh: Mesh48):
        self._fill_missing(mesh)

    def _fill_missing(self, mesh: Mesh48):
        missing = []
        for fid in sorted(mesh.faces):
            key = tuple(sorted(mesh.faces[fid].v))
            if key not in self._cache:
                missing.append(key)
        self._eval_tuples(missing)

    def _eval_tuples(self, keys):
        if keys:
            errs = self.ds.face_errors_for_verts(keys, local=self.local)
            self._cache.update(zip(keys, errs))

    def face_error(self, fid: int) -> float:
        key = tuple(sorted(self.ds.mesh.faces[fid].v))
        err = self._cache.get(key)
        if err is None:
            # Batch every uncached face: misses arrive in bursts after splits.
            self._fill_missing(self.ds.mesh)
            err = self._cache[key]
        return err

    def edge_error(self, edge) -> float:
        fids = self.ds.mesh.edge_faces.get(edge_key(*edge), ())
        if not fids:
            return 0.0
        return sum(self.face_error(f) for f in fids) / len(fids)

    def vertex_error(self, vid: int) -> float:
        star = self.ds.mesh.vertex_faces.get(vid, ())
        if not star:
            return 0.0
        return sum(self.face_error(f) for f in star) / len(star)

    def weld_guard(self, mesh: Mesh48, vid: int, eps: float) -> bool:
        """Veto welds that would leave any affected edge above threshold.

        Welding replaces the star by the restored parent faces, which changes
        the flanking (and so the error) of every edge of those faces.  The
        weld is allowed only when all those edges stay within eps, so the
        next refine pass has no reason to undo it.
        """
        v = mesh.vertices[vid]
        if v.origin is None:
            return False
        if v.origin.kind == "face":
            restored = [tuple(v.origin.parents)]
        else:
            a, b = v.origin.parents
            ws = sorted({x for fid in mesh.vertex_faces[vid]
                         for x in mesh.faces[fid].v if x not in (vid, a, b)})
            restored = [(w, a, b) for w in ws]
        keys = [tuple(sorted(t)) for t in restored]
        missing = [k for k in keys if k not in self._cache]
        for t_edge in self._weld_neighbor_keys(mesh, vid, restored):
            if t_edge not in self._cache:
                missing.append(t_edge)
        self._eval_tuples(sorted(set(missing)))
        for t, k in zip(restored, keys):
            for i in range(3):
                g = edge_key(t[i], t[(i + 1) % 3])
                flank = [self._cache[k]]
                for t2, k2 in zip(restored, keys):
                    if k2 != k and g[0] in t2 and g[1] in t2:
                        flank.append(self._cache[k2])
                for fid in mesh.edge_faces.get(g, ()):
                    f = mesh.faces[fid]
                    if vid in f.v:
                        continue
                    flank.append(self._cache[tuple(sorted(f.v))])
                if sum(flank) / len(flank) > eps:
                    return False
        return True

    def _weld_neighbor_keys(self, mesh: Mesh48, vid: int, restored):
        out = []
        for t in restored:
            for i in range(3):
                g = edge_key(t[i], t[(i + 1) % 3])
                for fid in mesh.edge_faces.get(g, ()):
                    f = mesh.faces[fid]
                    if vid not in f.v:
                        out.append(tuple(sorted(f.v)))
        return out
