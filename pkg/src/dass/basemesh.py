"""Planar tesel editing and lifting to a 3D quad base mesh.

The user shapes a grid of quad cells (tesels) on a drawing plane.  Each cell
is a cube-topology unit by default; switching a cell to torus topology makes
its lift carry a through-hole.  Lifting casts a ray through every planar
node along the plane normal and places front/back copies at the first
surface roots on either side; wall quads close the mesh along the complex
boundary (and around holes), so the lifted base is a closed 2-manifold whose
genus equals the number of torus cells.

Cell subdivision propagates across the whole row or column so the complex
stays a pure quad grid (no T-junctions).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hrbf
from .errors import DegenerateBBox, InvalidBaseMesh, InvalidId, NoRootFound, WouldDegenerate

CUBE = "cube"
TORUS = "torus"
_INNER = (1.0 / 3.0, 2.0 / 3.0)   # bilinear extent of the hole ring in torus cells


@dataclass
class Plane:
    origin: np.ndarray
    ex: np.ndarray
    ey: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        self.ex = np.asarray(self.ex, dtype=float).reshape(3)
        self.ey = np.asarray(self.ey, dtype=float).reshape(3)

    @property
    def normal(self):
        return np.cross(self.ex, self.ey)

    def to_3d(self, uv):
        uv = np.asarray(uv, dtype=float)
        return self.origin + uv[..., 0, None] * self.ex + uv[..., 1, None] * self.ey

    def project(self, points):
        d = np.asarray(points, dtype=float) - self.origin
        return np.stack([d @ self.ex, d @ self.ey], axis=-1)

    def to_dict(self):
        return {"origin": list(self.origin), "ex": list(self.ex), "ey": list(self.ey)}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["origin"]), np.array(d["ex"]), np.array(d["ey"]))


def default_plane():
    return Plane(np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))


class TeselComplex:
    """Grid of quad cells on a drawing plane."""

    def __init__(self, plane: Plane, rows: int, cols: int, verts: np.ndarray, kinds: list):
        self.plane = plane
        self.rows = rows
        self.cols = cols
        self.verts = np.asarray(verts, dtype=float).reshape((rows + 1) * (cols + 1), 2)
        self.kinds = list(kinds)

    # ------------------------------------------------------------- indexing

    def vertex_id(self, r: int, c: int) -> int:
        return r * (self.cols + 1) + c

    def cell_corners(self, cell: int):
        """Corner vertex ids, counterclockwise in plane coordinates."""
        r, c = divmod(cell, self.cols)
        return (self.vertex_id(r, c), self.vertex_id(r, c + 1),
                self.vertex_id(r + 1, c + 1), self.vertex_id(r + 1, c))

    @property
    def cell_count(self) -> int:
        return self.rows * self.cols

    def declared_genus(self) -> int:
        return sum(1 for k in self.kinds if k == TORUS)

    # --------------------------------------------------------------- editing

    def _check_cell(self, corners_uv):
        p = np.asarray(corners_uv)
        for i in range(4):
            a = p[(i + 1) % 4] - p[i]
            b = p[(i + 2) % 4] - p[(i + 1) % 4]
            if a[0] * b[1] - a[1] * b[0] <= 1e-12:
                raise WouldDegenerate("tesel footprint is not strictly convex")

    def move_vertex(self, vid: int, pos):
        if not 0 <= vid < len(self.verts):
            raise InvalidId(f"vertex {vid}")
        old = self.verts[vid].copy()
        self.verts[vid] = np.asarray(pos, dtype=float).reshape(2)
        try:
            for cell in range(self.cell_count):
                self._check_cell([self.verts[v] for v in self.cell_corners(cell)])
        except WouldDegenerate:
            self.verts[vid] = old
            raise

    def set_kind(self, cell: int, kind: str):
        if not 0 <= cell < self.cell_count:
            raise InvalidId(f"tesel {cell}")
        if kind not in (CUBE, TORUS):
            raise InvalidId(f"kind {kind!r}")
        self.kinds[cell] = kind

    def subdivide(self, cell: int, axis: str):
        """Split the cell in two along the given axis.

        The cut propagates across the whole row/column so the complex stays
        a quad grid.  New vertices sit at the midpoints of their row/column
        neighbours; new cells inherit the kind of the cell they came from.
        """
        if not 0 <= cell < self.cell_count:
            raise InvalidId(f"tesel {cell}")
        if axis not in ("u", "v"):
            raise InvalidId(f"axis {axis!r}")
        r, c = divmod(cell, self.cols)
        grid = self.verts.reshape(self.rows + 1, self.cols + 1, 2)
        if axis == "u":
            mid = 0.5 * (grid[:, c] + grid[:, c + 1])
            newgrid = np.insert(grid, c + 1, mid, axis=1)
            newkinds = []
            for rr in range(self.rows):
                row = self.kinds[rr * self.cols:(rr + 1) * self.cols]
                newkinds.extend(row[:c + 1] + row[c:])
            self.cols += 1
        else:
            mid = 0.5 * (grid[r] + grid[r + 1])
            newgrid = np.insert(grid, r + 1, mid, axis=0)
            newkinds = list(self.kinds[:(r + 1) * self.cols])
            newkinds.extend(self.kinds[r * self.cols:])
            self.rows += 1
        self.verts = newgrid.reshape(-1, 2)
        self.kinds = newkinds

    # ------------------------------------------------------------------ io

    def to_dict(self):
        return {"plane": self.plane.to_dict(), "rows": self.rows, "cols": self.cols,
                "verts": [[float(x), float(y)] for x, y in self.verts],
                "kinds": list(self.kinds)}

    @classmethod
    def from_dict(cls, d):
        return cls(Plane.from_dict(d["plane"]), d["rows"], d["cols"],
                   np.array(d["verts"], dtype=float), d["kinds"])


def new_complex(bbox, plane: Plane = None) -> TeselComplex:
    """Single cube-kind tesel covering the sketch bounding box."""
    lo = np.asarray(bbox[0], dtype=float).reshape(2)
    hi = np.asarray(bbox[1], dtype=float).reshape(2)
    if (hi - lo).min() <= 1e-12:
        raise DegenerateBBox(f"bbox {bbox} has no area")
    plane = plane or default_plane()
    verts = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]])
    return TeselComplex(plane, 1, 1, verts, [CUBE])


# --------------------------------------------------------------------- lift


@dataclass
class BaseMeshPlan:
    """Closed quad mesh in 3D plus its topology summary."""

    vertices: np.ndarray                 # (N, 3)
    quads: list                          # tuples of 4 vertex ids, CCW from outside
    fallback_nodes: list = field(default_factory=list)

    def edge_count(self) -> int:
        edges = set()
        for q in self.quads:
            for i in range(4):
                a, b = q[i], q[(i + 1) % 4]
                edges.add((min(a, b), max(a, b)))
        return len(edges)

    def euler_characteristic(self) -> int:
        return len(self.vertices) - self.edge_count() + len(self.quads)

    def genus(self) -> int:
        return 1 - self.euler_characteristic() // 2


def validate_quad_mesh(vertices, quads):
    """2-manifold, consistently oriented quad mesh or InvalidBaseMesh."""
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


def _planar_cells(complex: TeselComplex):
    """Expand cells into planar quad faces; torus cells become a hole ring.

    Returns (nodes (M,2), faces list of 4-tuples into nodes).  Grid nodes
    keep their ids; ring nodes are appended.
    """
    nodes = [tuple(p) for p in complex.verts]
    faces = []
    for cell in range(complex.cell_count):
        c0, c1, c2, c3 = complex.cell_corners(cell)
        if complex.kinds[cell] == CUBE:
            faces.append((c0, c1, c2, c3))
            continue
        p = np.array([complex.verts[c0], complex.verts[c1],
                      complex.verts[c2], complex.verts[c3]])

        def bilerp(u, v):
            return tuple((1 - u) * (1 - v) * p[0] + u * (1 - v) * p[1]
                         + u * v * p[2] + (1 - u) * v * p[3])

        lo, hi = _INNER
        inner = [bilerp(lo, lo), bilerp(hi, lo), bilerp(hi, hi), bilerp(lo, hi)]
        base = len(nodes)
        nodes.extend(inner)
        i0, i1, i2, i3 = base, base + 1, base + 2, base + 3
        faces.append((c0, c1, i1, i0))
        faces.append((c1, c2, i2, i1))
        faces.append((c2, c3, i3, i2))
        faces.append((c3, c0, i0, i3))
    return np.array(nodes, dtype=float), faces


def lift(complex: TeselComplex, surface, t_range: float = None, strict: bool = True) -> BaseMeshPlan:
    """Lift the planar complex onto the implicit surface.

    Every planar node gets a front and a back copy at the first surface
    roots along +/- the plane normal; boundary edges (outer perimeter and
    hole rings) grow wall quads between the sheets.  Nodes whose rays miss
    the surface raise NoRootFound, or stay at plane height flagged when
    strict is False.
    """
    nodes, faces = _planar_cells(complex)
    if t_range is None:
        t_range = 2.0 * surface.bbox_diag
    n = complex.plane.normal
    n = n / np.linalg.norm(n)
    base_pts = complex.plane.to_3d(nodes)

    front = np.empty((len(nodes), 3))
    back = np.empty((len(nodes), 3))
    missing = []
    for i, p in enumerate(base_pts):
        rf = hrbf.ray_root(surface, p, n, (0.0, t_range))
        rb = hrbf.ray_root(surface, p, -n, (0.0, t_range))
        if rf is None or rb is None:
            missing.append(i)
            front[i] = p
            back[i] = p
        else:
            front[i] = rf
            back[i] = rb
    if missing and strict:
        raise NoRootFound(f"{len(missing)} node rays missed the surface", vertices=missing)

    m = len(nodes)
    vertices = np.concatenate([front, back])      # front ids [0, m), back ids [m, 2m)
    quads = []
    edge_use = {}
    for f in faces:
        quads.append(tuple(f))
        quads.append(tuple(reversed([v + m for v in f])))
        for i in range(4):
            a, b = f[i], f[(i + 1) % 4]
            edge_use.setdefault((min(a, b), max(a, b)), []).append((a, b))
    for (_, _), uses in sorted(edge_use.items()):
        if len(uses) == 1:
            a, b = uses[0]
            quads.append((b, a, a + m, b + m))
    plan = BaseMeshPlan(vertices, quads, fallback_nodes=missing)
    validate_quad_mesh(plan.vertices, plan.quads)
    return plan
