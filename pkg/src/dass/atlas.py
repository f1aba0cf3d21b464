"""Chart atlas over a labeled adaptive mesh.

Vertices carry labels: 0 marks a chart-boundary vertex, a nonzero label i
marks an inner vertex of chart i.  A mesh is regularly labeled when every
face has at least one nonzero label and all nonzero labels in a face agree;
that property induces a partition of the faces into charts and survives the
stellar operators (split vertices inherit the face/edge label).

Each chart is the unit square.  Mapping chart coordinates to the surface
interpolates the containing face's vertex positions and projects onto the
implicit surface; the inverse projects onto the mesh and reads barycentric
chart coordinates.  Neighbouring charts are glued by exact axis-aligned
transitions (rotation by a multiple of 90 degrees plus an integer
translation), recovered from the matched corner anchors of the shared base
edge.

All queries are pure given a mesh snapshot; the atlas itself mutates only at
init time and when charts gain height layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hrbf
from .errors import InvalidBaseMesh, NotAdjacent, NotRegular, UvOutsideChart
from .mesh48 import Mesh48, edge_key

_CORNER_UV = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
_ROTATIONS = (
    np.array([[1, 0], [0, 1]]),
    np.array([[0, -1], [1, 0]]),
    np.array([[-1, 0], [0, -1]]),
    np.array([[0, 1], [-1, 0]]),
)
_EDGE_TOL = 1e-12


@dataclass
class Chart:
    id: int
    corners: tuple                      # 4 base vertex ids at (0,0),(1,0),(1,1),(0,1)
    layers: list = field(default_factory=list)


@dataclass
class Transition:
    rot: np.ndarray                     # 2x2 integer rotation
    shift: np.ndarray                   # integer translation

    def apply(self, uv):
        uv = np.asarray(uv, dtype=float)
        return uv @ self.rot.T + self.shift


@dataclass
class ValidationReport:
    ok: bool
    face: int | None = None
    message: str = ""


class Atlas:
    def __init__(self, surface):
        self.surface = surface
        self.charts: dict[int, Chart] = {}
        self.transitions: dict[tuple, Transition] = {}
        self.layers_version = 0
        self._uv_cache = {}

    def add_layer(self, chart_id: int, layer):
        self.charts[chart_id].layers.append(layer)
        self.layers_version += 1

    def has_layers(self) -> bool:
        return any(c.layers for c in self.charts.values())

    def neighbors(self, chart_id: int):
        return sorted(j for (i, j) in self.transitions if i == chart_id)

    # ------------------------------------------------------------- transfers

    def transfer(self, uv, src: int, dst: int):
        """Rewrite chart-src coordinates in chart-dst coordinates."""
        if src == dst:
            return np.asarray(uv, dtype=float)
        tr = self.transitions.get((src, dst))
        if tr is None:
            raise NotAdjacent(f"charts {src} and {dst} share no base edge")
        return tr.apply(uv)

    # ---------------------------------------------------------- chart lookup

    def _chart_tables(self, mesh: Mesh48, chart_id: int):
        """Per-chart uv triangles and an exact vertex-coordinate table."""
        key = (mesh.version, chart_id)
        cached = self._uv_cache.get(key)
        if cached is not None:
            return cached
        self._uv_cache = {k: v for k, v in self._uv_cache.items() if k[0] == mesh.version}
        fids = np.array(sorted(mesh.chart_faces.get(chart_id, ())), dtype=np.int64)
        uvtri = np.zeros((len(fids), 3, 2))
        verts = np.zeros((len(fids), 3), dtype=np.int64)
        snap = {}
        for row, fid in enumerate(fids):
            f = mesh.faces[int(fid)]
            verts[row] = f.v
            for k, vid in enumerate(f.v):
                uv = mesh.vertices[vid].chart_uv[chart_id]
                uvtri[row, k] = uv
                snap.setdefault(uv, vid)
        tables = (fids, uvtri, verts, snap)
        self._uv_cache[key] = tables
        return tables

    def to_surface(self, mesh: Mesh48, chart_id: int, uv):
        """Map chart coordinates to a point on the implicit surface."""
        if chart_id not in self.charts:
            raise UvOutsideChart(f"unknown chart {chart_id}")
        uv = np.asarray(uv, dtype=float).reshape(2)
        if uv.min() < -_EDGE_TOL or uv.max() > 1.0 + _EDGE_TOL:
            raise UvOutsideChart(f"{tuple(uv)} outside the unit square")
        fids, uvtri, verts, snap = self._chart_tables(mesh, chart_id)
        vid = snap.get((uv[0], uv[1]))
        if vid is not None:
            # Exact vertex hit: same arithmetic path from every adjacent chart.
            return hrbf.project_surface(self.surface, mesh.vertices[vid].position)
        if len(fids) == 0:
            raise UvOutsideChart(f"chart {chart_id} has no faces")
        a = uvtri[:, 0]
        e1 = uvtri[:, 1] - a
        e2 = uvtri[:, 2] - a
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        det = np.where(det != 0.0, det, 1.0)
        d = uv[None, :] - a
        v = (d[:, 0] * e2[:, 1] - d[:, 1] * e2[:, 0]) / det
        w = (e1[:, 0] * d[:, 1] - e1[:, 1] * d[:, 0]) / det
        u = 1.0 - v - w
        lo = np.minimum(np.minimum(u, v), w)
        inside = np.nonzero(lo >= -_EDGE_TOL)[0]
        row = int(inside[0]) if len(inside) else int(np.argmax(lo))
        weights = np.array([u[row], v[row], w[row]])
        pts = np.array([mesh.vertices[int(x)].position for x in verts[row]])
        return hrbf.project_surface(self.surface, weights @ pts)

    def to_chart(self, mesh: Mesh48, p):
        """Inverse parameterization: project onto the mesh and read chart coords."""
        chart, uv = self.to_chart_many(mesh, np.asarray(p, dtype=float).reshape(1, 3))
        return int(chart[0]), uv[0]

    def to_chart_many(self, mesh: Mesh48, points):
        fid, bary, _ = mesh.project_many(points)
        charts = np.empty(len(fid), dtype=np.int64)
        uv = np.empty((len(fid), 2))
        for i, f in enumerate(fid):
            face = mesh.faces[int(f)]
            charts[i] = face.chart
            acc = np.zeros(2)
            for k, vid in enumerate(face.v):
                acc += bary[i, k] * np.asarray(mesh.vertices[vid].chart_uv[face.chart])
            uv[i] = acc
        return charts, uv


# ----------------------------------------------------------------- labeling


def face_label(mesh: Mesh48, fid: int) -> int:
    """The unique nonzero label among the face's vertices."""
    labels = {mesh.vertices[v].label for v in mesh.faces[fid].v}
    nonzero = sorted(l for l in labels if l != 0)
    if not nonzero:
        raise NotRegular(f"face {fid} has no nonzero label")
    if len(nonzero) > 1:
        raise NotRegular(f"face {fid} mixes chart labels {nonzero}")
    return nonzero[0]


def edge_label(mesh: Mesh48, edge: tuple) -> int:
    """Chart label of an edge; 0 when both endpoints are boundary vertices."""
    a, b = edge_key(*edge)
    la, lb = mesh.vertices[a].label, mesh.vertices[b].label
    if la != 0 and lb != 0 and la != lb:
        raise NotRegular(f"edge {edge} mixes chart labels {la},{lb}")
    return la if la != 0 else lb


def validate_rk(mesh: Mesh48) -> ValidationReport:
    """Check that every face has exactly one nonzero chart label."""
    for fid in sorted(mesh.faces):
        labels = [mesh.vertices[v].label for v in mesh.faces[fid].v]
        nonzero = {l for l in labels if l != 0}
        if not nonzero:
            return ValidationReport(False, fid, "face has only boundary labels")
        if len(nonzero) > 1:
            return ValidationReport(False, fid, f"face mixes labels {sorted(nonzero)}")
    return ValidationReport(True)


# ------------------------------------------------------------- construction


def _check_quad_mesh(vertices, quads):
    n = len(vertices)
    directed = set()
    edge_count = {}
    for q in quads:
        if len(q) != 4 or len(set(q)) != 4:
            raise InvalidBaseMesh(f"quad {q} is degenerate")
        for v in q:
            if not 0 <= v < n:
                raise InvalidBaseMesh(f"quad {q} references missing vertex {v}")
        for i in range(4):
            a, b = q[i], q[(i + 1) % 4]
            if (a, b) in directed:
                raise InvalidBaseMesh(f"edge ({a},{b}) traversed twice: inconsistent orientation")
            directed.add((a, b))
            k = (min(a, b), max(a, b))
            edge_count[k] = edge_count.get(k, 0) + 1
            if edge_count[k] > 2:
                raise InvalidBaseMesh(f"edge {k} bounds more than two quads")


def init_atlas(base, surface, debug: bool = False):
    """Build the initial labeled mesh and its atlas from a lifted quad base.

    Every base vertex is labeled 0; each quad is triangulated along its
    (v1, v3) diagonal and the diagonal is split at its projected midpoint,
    creating one inner vertex (and one chart) per base quad.
    """
    vertices = np.asarray(base.vertices, dtype=float)
    quads = [tuple(int(v) for v in q) for q in base.quads]
    if len(quads) == 0:
        raise InvalidBaseMesh("base mesh has no faces")
    _check_quad_mesh(vertices, quads)

    positions, ok = hrbf.project_many(surface, vertices)
    if not ok.all():
        bad = int(np.nonzero(~ok)[0][0])
        raise InvalidBaseMesh(f"base vertex {bad} does not project onto the surface")

    mesh = Mesh48(debug=debug)
    for p in positions:
        mesh.add_vertex(p, level=0, label=0)

    atlas = Atlas(surface)
    for k, q in enumerate(quads):
        chart_id = k + 1
        for corner, vid in enumerate(q):
            mesh.vertices[vid].chart_uv[chart_id] = _CORNER_UV[corner]
        mesh.add_face((q[0], q[1], q[2]), apex=1, level=0)
        mesh.add_face((q[0], q[2], q[3]), apex=2, level=0)
        atlas.charts[chart_id] = Chart(chart_id, tuple(q))

    sampler = _diag_sampler(surface)
    for k, q in enumerate(quads):
        seed = mesh.edge_split(edge_key(q[0], q[2]), sampler=sampler,
                               label_override=k + 1)
        # Chart seeds are permanent members of the initial mesh: welding one
        # would leave its chart without any inner vertex.
        mesh.vertices[seed].origin = None

    _build_transitions(atlas, quads)
    report = validate_rk(mesh)
    if not report.ok:
        raise InvalidBaseMesh(f"labeling failed: face {report.face}: {report.message}")
    return mesh, atlas


def _diag_sampler(surface):
    def sampler(points):
        q, ok = hrbf.project_many(surface, points)
        if not ok.all():
            raise InvalidBaseMesh("diagonal midpoint does not project onto the surface")
        return q
    return sampler


def _build_transitions(atlas: Atlas, quads):
    by_edge = {}
    for k, q in enumerate(quads):
        for i in range(4):
            a, b = q[i], q[(i + 1) % 4]
            by_edge.setdefault((min(a, b), max(a, b)), []).append(k + 1)
    corner_uv = {cid: {vid: np.array(_CORNER_UV[i]) for i, vid in enumerate(c.corners)}
                 for cid, c in atlas.charts.items()}
    for (a, b), charts in sorted(by_edge.items()):
        if len(charts) != 2:
            continue
        i, j = charts
        if (i, j) in atlas.transitions:
            continue  # keep the transition of the lowest shared edge
        ua_i, ub_i = corner_uv[i][a], corner_uv[i][b]
        ua_j, ub_j = corner_uv[j][a], corner_uv[j][b]
        d_i = (ub_i - ua_i).astype(int)
        d_j = (ub_j - ua_j).astype(int)
        rot = next(r for r in _ROTATIONS if np.array_equal(r @ d_i, d_j))
        shift = ua_j - rot @ ua_i
        atlas.transitions[(i, j)] = Transition(rot, shift)
        inv = rot.T
        atlas.transitions[(j, i)] = Transition(inv, ua_i - inv @ ua_j)


# ------------------------------------------------------------------- debug IO


def dump_chart_svg(atlas: Atlas, mesh: Mesh48, chart_id: int, path):
    """Write the chart's uv triangulation and its height curves as SVG."""
    fids, uvtri, _, _ = atlas._chart_tables(mesh, chart_id)
    s = 512.0
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {s} {s}">',
             f'<rect width="{s}" height="{s}" fill="white"/>']
    for row in range(len(fids)):
        pts = " ".join(f"{u * s:.2f},{(1 - v) * s:.2f}" for u, v in uvtri[row])
        lines.append(f'<polygon points="{pts}" fill="none" stroke="#888" stroke-width="0.5"/>')
    chart = atlas.charts[chart_id]
    for layer in chart.layers:
        for poly in getattr(layer, "polylines", lambda: [])():
            pts = " ".join(f"{u * s:.2f},{(1 - v) * s:.2f}" for u, v in poly)
            lines.append(f'<polyline points="{pts}" fill="none" stroke="#c00" stroke-width="1.5"/>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
