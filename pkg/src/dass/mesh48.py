"""Adaptive semi-regular 4-8 triangle mesh.

The mesh refines and simplifies through stellar operators: edge split, face
split, and their inverses edge weld and face weld.  Every face designates a
subdivision edge (the edge opposite its newest vertex); an edge may be split
only while it is the subdivision edge of each incident face.  This is the
standard legality rule for adaptive 4-8 meshes; splitting an arbitrary edge
first forces the blocking neighbours, which keeps the mesh conforming.

Vertices carry a refinement level, a chart label, and parameter coordinates
per chart.  Split vertices remember their parents so welds can restore the
exact pre-split connectivity, labels and subdivision edges.

Mutation is single-writer; read-only queries (projection, error evaluation)
may run concurrently between mutations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IllegalSplit, NotWeldable
from .trisearch import TriangleIndex


@dataclass
class WeldInfo:
    kind: str                 # 'edge' or 'face'
    parents: tuple            # edge: (a, b); face: (v0, v1, v2) in original cyclic order
    old_apex: int = -1        # face splits: vertex id that was the apex of the split face
    side_levels: tuple = ()   # edge splits: (opposite vertex id, face level) per side


@dataclass
class Vertex48:
    position: np.ndarray
    level: int = 0
    label: int = 0
    chart_uv: dict = field(default_factory=dict)   # chart id -> (u, v)
    origin: WeldInfo | None = None


@dataclass
class Face48:
    v: tuple                  # 3 vertex ids, cyclic order fixes orientation
    apex: int                 # index into v of the newest vertex; sub-edge = other two
    level: int = 0
    chart: int = 0            # cached face label


@dataclass
class MeshHit:
    face: int
    weights: np.ndarray       # barycentric, aligned with Face48.v order
    point: np.ndarray


def edge_key(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


class Mesh48:
    def __init__(self, debug: bool = False):
        self.vertices: dict[int, Vertex48] = {}
        self.faces: dict[int, Face48] = {}
        self.edge_faces: dict[tuple, list] = {}
        self.vertex_faces: dict[int, set] = {}
        self.chart_faces: dict[int, set] = {}
        self.next_vid = 0
        self.next_fid = 0
        self.version = 0
        self.debug = debug
        self._tri_cache = None
        self._index_cache = None

    # ------------------------------------------------------------------ build

    def add_vertex(self, position, level=0, label=0, chart_uv=None, origin=None) -> int:
        vid = self.next_vid
        self.next_vid += 1
        self.vertices[vid] = Vertex48(np.asarray(position, dtype=float).reshape(3),
                                      level, label, dict(chart_uv or {}), origin)
        self.vertex_faces[vid] = set()
        self.version += 1
        return vid

    def add_face(self, verts, apex: int, level: int = 0) -> int:
        fid = self.next_fid
        self.next_fid += 1
        verts = tuple(verts)
        labels = [self.vertices[v].label for v in verts]
        nonzero = sorted({l for l in labels if l != 0})
        chart = nonzero[0] if nonzero else 0
        self.faces[fid] = Face48(verts, apex, level, chart)
        for i in range(3):
            k = edge_key(verts[i], verts[(i + 1) % 3])
            self.edge_faces.setdefault(k, []).append(fid)
            if self.debug and len(self.edge_faces[k]) > 2:
                raise AssertionError(f"edge {k} bounded by >2 faces")
            self.vertex_faces[verts[i]].add(fid)
        self.chart_faces.setdefault(chart, set()).add(fid)
        self.version += 1
        return fid

    def remove_face(self, fid: int):
        f = self.faces.pop(fid)
        for i in range(3):
            k = edge_key(f.v[i], f.v[(i + 1) % 3])
            lst = self.edge_faces[k]
            lst.remove(fid)
            if not lst:
                del self.edge_faces[k]
            self.vertex_faces[f.v[i]].discard(fid)
        self.chart_faces[f.chart].discard(fid)
        self.version += 1

    def remove_vertex(self, vid: int):
        if self.vertex_faces[vid]:
            raise AssertionError("removing vertex with incident faces")
        del self.vertices[vid]
        del self.vertex_faces[vid]
        self.version += 1

    # ------------------------------------------------------------- structure

    def subdivision_edge(self, fid: int) -> tuple:
        f = self.faces[fid]
        return edge_key(f.v[(f.apex + 1) % 3], f.v[(f.apex + 2) % 3])

    def is_legal_split(self, edge: tuple) -> bool:
        fids = self.edge_faces.get(edge)
        if not fids:
            return False
        return all(self.subdivision_edge(fid) == edge for fid in fids)

    def edge_label(self, edge: tuple) -> int:
        la = self.vertices[edge[0]].label
        lb = self.vertices[edge[1]].label
        return la if la != 0 else lb

    def star_faces(self, vid: int) -> list:
        return sorted(self.vertex_faces[vid])

    def boundary_edges(self):
        return [k for k, fids in self.edge_faces.items() if len(fids) == 1]

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edge_faces) + len(self.faces)

    # ------------------------------------------------------------- operators

    def _common_chart_uv(self, vids, weights):
        common = set(self.vertices[vids[0]].chart_uv)
        for v in vids[1:]:
            common &= set(self.vertices[v].chart_uv)
        uv = {}
        for c in sorted(common):
            pts = [self.vertices[v].chart_uv[c] for v in vids]
            uv[c] = (sum(w * p[0] for w, p in zip(weights, pts)),
                     sum(w * p[1] for w, p in zip(weights, pts)))
        return uv

    def _debug_euler(self, before, dv, de, df):
        if self.debug:
            want = (before[0] + dv, before[1] + de, before[2] + df)
            got = (len(self.vertices), len(self.edge_faces), len(self.faces))
            if want != got:
                raise AssertionError(f"element counts {got}, expected {want}")

    def _counts(self):
        return (len(self.vertices), len(self.edge_faces), len(self.faces))

    def edge_split(self, edge: tuple, sampler=None, position=None,
                   label_override=None) -> int:
        """Insert a vertex on a legal edge; 4 new faces (2 on a boundary)."""
        edge = edge_key(*edge)
        fids = self.edge_faces.get(edge)
        if not fids:
            raise IllegalSplit(f"edge {edge} not in mesh")
        if not self.is_legal_split(edge):
            raise IllegalSplit(f"edge {edge} is not the subdivision edge of its faces")
        before = self._counts()
        interior = len(fids) == 2
        a, b = edge
        level = max(self.faces[fid].level for fid in fids) + 1
        if position is None:
            mid = 0.5 * (self.vertices[a].position + self.vertices[b].position)
            position = sampler(mid[None, :])[0] if sampler is not None else mid
        uv = self._common_chart_uv((a, b), (0.5, 0.5))
        if label_override is not None:
            label = label_override
            uv = {label: uv[label]} if label in uv else uv
        else:
            label = self.edge_label(edge)
        side_levels = tuple(sorted((self.faces[fid].v[self.faces[fid].apex],
                                    self.faces[fid].level) for fid in fids))
        n = self.add_vertex(position, level, label, uv,
                            WeldInfo("edge", (a, b), side_levels=side_levels))
        for fid in sorted(fids):
            f = self.faces[fid]
            w = f.v[f.apex]
            p = f.v[(f.apex + 1) % 3]
            q = f.v[(f.apex + 2) % 3]
            self.remove_face(fid)
            self.add_face((w, p, n), apex=2, level=level)
            self.add_face((w, n, q), apex=1, level=level)
        self._debug_euler(before, 1, 3 if interior else 2, 2 if interior else 1)
        return n

    def face_split(self, fid: int, sampler=None, position=None) -> int:
        """Insert a vertex inside a face; replaces it by 3 faces."""
        if fid not in self.faces:
            raise IllegalSplit(f"face {fid} not in mesh")
        before = self._counts()
        f = self.faces[fid]
        v0, v1, v2 = f.v
        if position is None:
            cen = (self.vertices[v0].position + self.vertices[v1].position
                   + self.vertices[v2].position) / 3.0
            position = sampler(cen[None, :])[0] if sampler is not None else cen
        uv = self._common_chart_uv(f.v, (1 / 3, 1 / 3, 1 / 3))
        level = f.level + 1
        n = self.add_vertex(position, level, f.chart, uv,
                            WeldInfo("face", f.v, old_apex=f.v[f.apex]))
        self.remove_face(fid)
        self.add_face((v0, v1, n), apex=2, level=level)
        self.add_face((v1, v2, n), apex=2, level=level)
        self.add_face((v2, v0, n), apex=2, level=level)
        self._debug_euler(before, 1, 3, 2)
        return n

    def weldable(self, vid: int) -> str | None:
        """'edge' / 'face' when the vertex can be welded right now, else None."""
        v = self.vertices.get(vid)
        if v is None or v.origin is None:
            return None
        star = self.vertex_faces[vid]
        for fid in star:
            f = self.faces[fid]
            if f.v[f.apex] != vid or f.level != v.level:
                return None
        if v.origin.kind == "face":
            if len(star) != 3:
                return None
            ring = set()
            for fid in star:
                ring.update(self.faces[fid].v)
            ring.discard(vid)
            return "face" if ring == set(v.origin.parents) else None
        a, b = v.origin.parents
        if len(star) not in (2, 4):
            return None
        if a not in self.vertices or b not in self.vertices:
            return None
        for fid in star:
            fv = set(self.faces[fid].v)
            if not (a in fv) ^ (b in fv):
                return None
        return "edge"

    def edge_weld(self, vid: int):
        """Exact inverse of edge_split; survivors keep connectivity and labels."""
        if self.weldable(vid) != "edge":
            raise NotWeldable(f"vertex {vid} is not edge-weldable")
        v = self.vertices[vid]
        a, b = v.origin.parents
        side_level = dict(v.origin.side_levels)
        # Group star faces by their opposite (pre-split apex) vertex.
        groups: dict[int, list] = {}
        for fid in self.star_faces(vid):
            f = self.faces[fid]
            w = next(x for x in f.v if x != vid and x not in (a, b))
            groups.setdefault(w, []).append(fid)
        rebuilt = []
        for w, fids in sorted(groups.items()):
            if len(fids) != 2:
                raise NotWeldable(f"vertex {vid} star is not a split pattern")
            # The split turned (w, p, q) into (w, p, n) + (w, n, q); recover
            # the p/q order from the cyclic order of the face containing a.
            fa = next(fid for fid in fids if a in self.faces[fid].v)
            fv = self.faces[fa].v
            iw = fv.index(w)
            tri = (w, a, b) if fv[(iw + 1) % 3] == a else (w, b, a)
            rebuilt.append((tri, side_level.get(w, v.level - 1)))
        for fid in self.star_faces(vid):
            self.remove_face(fid)
        for tri, level in rebuilt:
            self.add_face(tri, apex=0, level=level)
        self.remove_vertex(vid)

    def face_weld(self, vid: int):
        """Exact inverse of face_split."""
        if self.weldable(vid) != "face":
            raise NotWeldable(f"vertex {vid} is not face-weldable")
        v = self.vertices[vid]
        parents = v.origin.parents
        apex_vid = v.origin.old_apex
        for fid in self.star_faces(vid):
            self.remove_face(fid)
        self.add_face(parents, apex=parents.index(apex_vid), level=v.level - 1)
        self.remove_vertex(vid)

    # ------------------------------------------------------------ projection

    def tri_arrays(self):
        """(face ids ascending, (F,3,3) positions, (F,3) vertex ids)."""
        if self._tri_cache is not None and self._tri_cache[0] == self.version:
            return self._tri_cache[1]
        fids = np.array(sorted(self.faces), dtype=np.int64)
        fverts = np.array([self.faces[int(f)].v for f in fids], dtype=np.int64) \
            if len(fids) else np.zeros((0, 3), dtype=np.int64)
        pos = {vid: v.position for vid, v in self.vertices.items()}
        tri = np.array([[pos[int(v)] for v in fv] for fv in fverts]) \
            if len(fids) else np.zeros((0, 3, 3))
        self._tri_cache = (self.version, (fids, tri, fverts))
        return self._tri_cache[1]

    def _index(self) -> TriangleIndex:
        if self._index_cache is not None and self._index_cache[0] == self.version:
            return self._index_cache[1]
        fids, tri, _ = self.tri_arrays()
        idx = TriangleIndex(tri, fids)
        self._index_cache = (self.version, idx)
        return idx

    def project_many(self, points):
        """Closest mesh points for a batch; ties resolve to the lowest face id.

        Returns (face_ids, weights (N,3), points (N,3)).
        """
        _, fid, bary, cp = self._index().query(points)
        return fid, bary, cp

    def project(self, p) -> MeshHit:
        fid, bary, cp = self.project_many(np.asarray(p, dtype=float).reshape(1, 3))
        return MeshHit(int(fid[0]), bary[0], cp[0])

    # ----------------------------------------------------------------- sweeps

    def refine_sweep(self, sampler=None) -> int:
        """Split every edge that is currently legal (one uniform refinement)."""
        legal = sorted(e for e in self.edge_faces if self.is_legal_split(e))
        self._split_batch(legal, sampler)
        return len(legal)

    def _split_batch(self, edges, sampler, label_override=None):
        if not edges:
            return
        mids = np.array([0.5 * (self.vertices[a].position + self.vertices[b].position)
                         for a, b in edges])
        pos = sampler(mids) if sampler is not None else mids
        for e, p in zip(edges, pos):
            self.edge_split(e, position=p, label_override=label_override)

    def simplify_sweep(self) -> int:
        """Weld every weldable vertex at the current finest level."""
        levels = [v.level for v in self.vertices.values() if v.origin is not None]
        if not levels:
            return 0
        top = max(levels)
        count = 0
        for vid in sorted(v for v, vv in self.vertices.items()
                          if vv.level == top and vv.origin is not None):
            kind = self.weldable(vid)
            if kind == "edge":
                self.edge_weld(vid)
                count += 1
            elif kind == "face":
                self.face_weld(vid)
                count += 1
        return count

    # ------------------------------------------------------------------ adapt

    def adapt(self, refine_err, simplify_err, eps: float, max_passes: int = 20,
              sampler=None, weld_guard=None, begin_pass=None):
        """Error-driven refinement/simplification until a fixed point.

        refine_err(edge_key) and simplify_err(vid) score edges and vertices;
        edges scoring above eps are split (forcing blocked neighbours first),
        weldable vertices scoring below eps are welded.  weld_guard may veto
        a weld (used to stop weld/split oscillation).  Returns an AdaptReport.
        """
        if eps <= 0:
            raise ValueError("eps must be positive")
        report = AdaptReport()
        for _ in range(max_passes):
            if begin_pass is not None:
                begin_pass(self)
            splits = self._refine_pass(refine_err, eps, sampler)
            welds = self._simplify_pass(simplify_err, eps, weld_guard)
            report.passes.append((splits, welds))
            if splits == 0 and welds == 0:
                break
        return report

    def _refine_pass(self, refine_err, eps, sampler) -> int:
        queue = {e for e in sorted(self.edge_faces) if refine_err(e) > eps}
        total = 0
        while queue:
            queue = {e for e in queue if e in self.edge_faces}
            legal = sorted(e for e in queue if self.is_legal_split(e))
            if legal:
                self._split_batch(legal, sampler)
                queue.difference_update(legal)
                total += len(legal)
                continue
            # Unlock blocked edges by forcing their faces' subdivision edges.
            grew = False
            for e in sorted(queue):
                for fid in self.edge_faces.get(e, ()):
                    se = self.subdivision_edge(fid)
                    if se != e and se not in queue:
                        queue.add(se)
                        grew = True
            if not grew:
                break
        return total

    def _simplify_pass(self, simplify_err, eps, weld_guard) -> int:
        cands = [vid for vid in self.vertices
                 if self.weldable(vid) and simplify_err(vid) < eps]
        cands.sort(key=lambda v: (-self.vertices[v].level, v))
        count = 0
        for vid in cands:
            kind = self.weldable(vid)
            if kind is None:
                continue
            if weld_guard is not None and not weld_guard(self, vid, eps):
                continue
            if kind == "edge":
                self.edge_weld(vid)
            else:
                self.face_weld(vid)
            count += 1
        return count

    # ------------------------------------------------------------------ misc

    def connectivity_signature(self):
        """Hashable snapshot of connectivity, labels and levels (for tests)."""
        verts = tuple(sorted((vid, v.level, v.label) for vid, v in self.vertices.items()))
        faces = tuple(sorted(tuple(sorted(f.v)) for f in self.faces.values()))
        return verts, faces

    def validate_manifold(self, allow_boundary=True):
        """Raise AssertionError on non-manifold or inconsistently oriented meshes."""
        directed = {}
        for fid, f in self.faces.items():
            for i in range(3):
                he = (f.v[i], f.v[(i + 1) % 3])
                if he in directed:
                    raise AssertionError(f"duplicate halfedge {he}: orientation conflict")
                directed[he] = fid
        for k, fids in self.edge_faces.items():
            if len(fids) > 2:
                raise AssertionError(f"edge {k} has {len(fids)} faces")
            if len(fids) == 1 and not allow_boundary:
                raise AssertionError(f"boundary edge {k} in closed mesh")
        for vid in self.vertices:
            star = self.vertex_faces[vid]
            if not star:
                raise AssertionError(f"isolated vertex {vid}")
            # The star must form a single fan (one cycle or one open path).
            nxt = {}
            for fid in star:
                f = self.faces[fid]
                i = f.v.index(vid)
                a, b = f.v[(i + 1) % 3], f.v[(i + 2) % 3]
                if a in nxt:
                    raise AssertionError(f"non-manifold fan at vertex {vid}")
                nxt[a] = b
            tails = set(nxt.values())
            starts = [x for x in nxt if x not in tails]
            if len(starts) > 1:
                raise AssertionError(f"split fan at vertex {vid}")
            cur = starts[0] if starts else next(iter(nxt))
            visited = set()
            while cur in nxt and cur not in visited:
                visited.add(cur)
                cur = nxt[cur]
            if len(visited) != len(nxt):
                raise AssertionError(f"disconnected fan at vertex {vid}")


@dataclass
class AdaptReport:
    passes: list = field(default_factory=list)   # (splits, welds) per pass

    @property
    def pass_count(self) -> int:
        return len(self.passes)

    @property
    def operations(self) -> int:
        return sum(s + w for s, w in self.passes)


def sample_edge(mesh: Mesh48, edge: tuple, surface) -> np.ndarray:
    """Edge midpoint projected onto the implicit surface."""
    from . import hrbf
    a, b = edge
    mid = 0.5 * (mesh.vertices[a].position + mesh.vertices[b].position)
    return hrbf.project_surface(surface, mid)


def surface_sampler(surface):
    """Batched midpoint projector for split operations."""
    from . import hrbf

    def sampler(points):
        q, ok = hrbf.project_many(surface, points)
        if not ok.all():
            from .errors import NoConvergence
            bad = np.nonzero(~ok)[0]
            raise NoConvergence(f"projection failed for {len(bad)} sample points",
                                last_point=q[bad[0]])
        return q

    return sampler
