"""Modeling session: command protocol, work-flow orchestration, replay.

Three work-flows cover every command:

* startup/topology (SetSamples, EditTesels, Lift, InitAtlas): rebuilds all
  state downstream of the change; detail layers do not survive a rebuild and
  the mutation report says how many were dropped.
* surface edit (MoveImplicitSamples): refits the implicit surface and
  re-projects existing mesh vertices level by level (parents before
  children) without any adaptation, so detail layers ride along unchanged.
* resolution (SketchHeightCurve, LoadRasterLayer, SetEpsilon, Adapt):
  updates layers and/or the threshold, then adapts the mesh with the
  detail-aware error.

Commands are transactional: a failing command leaves the session exactly as
it was.  The scene file is a line-oriented UTF-8 log, one command per line,
with a version/seed header; replaying a log reproduces the session state
bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import atlas as atlas_mod
from . import basemesh, heightfield, hrbf, objio, pgmio
from .errors import DassError, PhaseError, ReplayError
from .mesh48 import Mesh48, surface_sampler

FORMAT_VERSION = 1


@dataclass
class SessionConfig:
    eps: float = 1e-3
    samples_per_face: int = heightfield.DEFAULT_SAMPLES_PER_FACE
    max_passes: int = 20
    trust_radius: float = None   # ray-probe range; defaults to 2x the fit bbox diagonal

    def copy(self):
        return SessionConfig(self.eps, self.samples_per_face, self.max_passes,
                             self.trust_radius)


# --------------------------------------------------------------------- floats


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return ",".join(_fmt(x) for x in np.asarray(v, dtype=float).ravel())


def _parse_floats(tok: str) -> list:
    return [float(x) for x in tok.split(",") if x != ""]


# ------------------------------------------------------------------- commands


@dataclass
class Command:
    op = "nop"

    def to_line(self) -> str:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


def _samples_to_tokens(samples):
    return " ".join(_fmt_vec(np.concatenate([p, n])) for p, n in samples)


def _samples_from_tokens(tokens):
    out = []
    for t in tokens:
        vals = _parse_floats(t)
        if len(vals) != 6:
            raise ValueError(f"sample token needs 6 floats, got {t!r}")
        out.append((np.array(vals[:3]), np.array(vals[3:])))
    return out


@dataclass
class SetSamples(Command):
    samples: list                      # (position, normal) pairs
    plane: basemesh.Plane = None
    op = "set_samples"

    def to_line(self):
        parts = [self.op]
        if self.plane is not None:
            parts.append("plane=" + _fmt_vec(np.concatenate(
                [self.plane.origin, self.plane.ex, self.plane.ey])))
        parts.append(_samples_to_tokens(self.samples))
        return " ".join(parts)

    def to_json(self):
        d = {"op": self.op,
             "samples": [[list(map(float, p)), list(map(float, n))] for p, n in self.samples]}
        if self.plane is not None:
            d["plane"] = self.plane.to_dict()
        return d


@dataclass
class MoveImplicitSamples(Command):
    samples: list
    op = "move_samples"

    def to_line(self):
        return f"{self.op} {_samples_to_tokens(self.samples)}"

    def to_json(self):
        return {"op": self.op,
                "samples": [[list(map(float, p)), list(map(float, n))] for p, n in self.samples]}


@dataclass
class EditTesels(Command):
    edits: list                        # ("subdivide", cell, axis) | ("move", vid, x, y) | ("kind", cell, kind)
    op = "edit_tesels"

    def to_line(self):
        toks = []
        for e in self.edits:
            if e[0] == "subdivide":
                toks.append(f"subdivide:{e[1]}:{e[2]}")
            elif e[0] == "move":
                toks.append(f"move:{e[1]}:{_fmt(e[2])},{_fmt(e[3])}")
            elif e[0] == "kind":
                toks.append(f"kind:{e[1]}:{e[2]}")
            else:
                raise ValueError(f"unknown tesel edit {e!r}")
        return " ".join([self.op] + toks)

    def to_json(self):
        return {"op": self.op, "edits": [list(e) for e in self.edits]}


@dataclass
class Lift(Command):
    op = "lift"

    def to_line(self):
        return self.op

    def to_json(self):
        return {"op": self.op}


@dataclass
class InitAtlas(Command):
    op = "init_atlas"

    def to_line(self):
        return self.op

    def to_json(self):
        return {"op": self.op}


@dataclass
class SketchHeightCurve(Command):
    points: np.ndarray                 # (k, 3) surface points
    h: float
    r: float
    op = "sketch_curve"

    def to_line(self):
        pts = " ".join(_fmt_vec(p) for p in np.asarray(self.points, dtype=float))
        return f"{self.op} h={_fmt(self.h)} r={_fmt(self.r)} {pts}"

    def to_json(self):
        return {"op": self.op, "h": float(self.h), "r": float(self.r),
                "points": [list(map(float, p)) for p in np.asarray(self.points, dtype=float)]}


@dataclass
class LoadRasterLayer(Command):
    chart: int
    file: str
    scale: float
    op = "load_raster"

    def to_line(self):
        return f"{self.op} chart={self.chart} scale={_fmt(self.scale)} file={self.file}"

    def to_json(self):
        return {"op": self.op, "chart": int(self.chart),
                "scale": float(self.scale), "file": self.file}


@dataclass
class SetEpsilon(Command):
    value: float
    op = "set_epsilon"

    def to_line(self):
        return f"{self.op} {_fmt(self.value)}"

    def to_json(self):
        return {"op": self.op, "value": float(self.value)}


@dataclass
class Adapt(Command):
    mode: str = "local"
    op = "adapt"

    def to_line(self):
        return self.op if self.mode == "local" else f"{self.op} mode={self.mode}"

    def to_json(self):
        return {"op": self.op, "mode": self.mode}


@dataclass
class ExportObj(Command):
    path: str
    op = "export_obj"

    def to_line(self):
        return f"{self.op} {self.path}"

    def to_json(self):
        return {"op": self.op, "path": self.path}


_OPS = {}
for _cls in (SetSamples, MoveImplicitSamples, EditTesels, Lift, InitAtlas,
             SketchHeightCurve, LoadRasterLayer, SetEpsilon, Adapt, ExportObj):
    _OPS[_cls.op] = _cls


def parse_line(line: str) -> Command:
    tokens = line.split()
    op = tokens[0]
    args = tokens[1:]
    kw = {}
    pos = []
    for t in args:
        if "=" in t and t.split("=", 1)[0] in ("plane", "h", "r", "chart", "scale",
                                               "file", "mode"):
            k, v = t.split("=", 1)
            kw[k] = v
        else:
            pos.append(t)
    if op == "set_samples":
        plane = None
        if "plane" in kw:
            vals = _parse_floats(kw["plane"])
            if len(vals) != 9:
                raise ValueError("plane needs 9 floats")
            plane = basemesh.Plane(np.array(vals[:3]), np.array(vals[3:6]), np.array(vals[6:9]))
        return SetSamples(_samples_from_tokens(pos), plane)
    if op == "move_samples":
        return MoveImplicitSamples(_samples_from_tokens(pos))
    if op == "edit_tesels":
        edits = []
        for t in pos:
            kind, ident, rest = t.split(":", 2)
            if kind == "subdivide":
                edits.append(("subdivide", int(ident), rest))
            elif kind == "move":
                x, y = _parse_floats(rest)
                edits.append(("move", int(ident), x, y))
            elif kind == "kind":
                edits.append(("kind", int(ident), rest))
            else:
                raise ValueError(f"unknown tesel edit {t!r}")
        return EditTesels(edits)
    if op == "lift":
        return Lift()
    if op == "init_atlas":
        return InitAtlas()
    if op == "sketch_curve":
        pts = np.array([_parse_floats(t) for t in pos])
        return SketchHeightCurve(pts, float(kw["h"]), float(kw["r"]))
    if op == "load_raster":
        return LoadRasterLayer(int(kw["chart"]), kw["file"], float(kw["scale"]))
    if op == "set_epsilon":
        return SetEpsilon(float(pos[0]))
    if op == "adapt":
        return Adapt(kw.get("mode", "local"))
    if op == "export_obj":
        return ExportObj(pos[0])
    raise ValueError(f"unknown command {op!r}")


def command_from_json(d: dict) -> Command:
    op = d["op"]
    if op == "set_samples":
        plane = basemesh.Plane.from_dict(d["plane"]) if d.get("plane") else None
        return SetSamples([(np.array(p), np.array(n)) for p, n in d["samples"]], plane)
    if op == "move_samples":
        return MoveImplicitSamples([(np.array(p), np.array(n)) for p, n in d["samples"]])
    if op == "edit_tesels":
        return EditTesels([tuple(e) for e in d["edits"]])
    if op == "lift":
        return Lift()
    if op == "init_atlas":
        return InitAtlas()
    if op == "sketch_curve":
        return SketchHeightCurve(np.array(d["points"], dtype=float), d["h"], d["r"])
    if op == "load_raster":
        return LoadRasterLayer(d["chart"], d["file"], d["scale"])
    if op == "set_epsilon":
        return SetEpsilon(d["value"])
    if op == "adapt":
        return Adapt(d.get("mode", "local"))
    if op == "export_obj":
        return ExportObj(d["path"])
    raise ValueError(f"unknown command {op!r}")


# -------------------------------------------------------------------- session


class Session:
    def __init__(self, seed: int = 0, config: SessionConfig = None, base_dir=None):
        self.seed = seed
        self.config = config or SessionConfig()
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        self.samples = None
        self.surface = None
        self.tesels = None
        self.base = None
        self.mesh: Mesh48 | None = None
        self.atlas = None
        self.generation = 0
        self.log_lines = [f"version {FORMAT_VERSION}", f"seed {seed}"]
        self.command_reports = []

    # ------------------------------------------------------------ inspection

    @property
    def phase(self) -> str:
        if self.atlas is not None:
            return "detailing"
        if self.base is not None:
            return "lifted"
        if self.tesels is not None:
            return "tesels"
        if self.surface is not None:
            return "samples"
        return "empty"

    def displaced_surface(self) -> heightfield.DisplacedSurface:
        self._require(self.atlas is not None, "no atlas yet")
        return heightfield.DisplacedSurface(self.surface, self.mesh, self.atlas,
                                            seed=self.seed,
                                            samples_per_face=self.config.samples_per_face)

    def log_text(self) -> str:
        return "\n".join(self.log_lines) + "\n"

    # ----------------------------------------------------------- transactions

    def _snapshot(self):
        return (self.samples, self.surface,
                self.tesels.to_dict() if self.tesels is not None else None,
                self.base, self._clone_mesh(), self._clone_atlas(),
                self.config.copy(), self.generation)

    def _restore(self, snap):
        (self.samples, self.surface, tesels, self.base, self.mesh,
         self.atlas, self.config, self.generation) = snap
        self.tesels = basemesh.TeselComplex.from_dict(tesels) if tesels else None
        if self.atlas is not None:
            self.atlas.surface = self.surface

    def _clone_mesh(self):
        if self.mesh is None:
            return None
        src = self.mesh
        m = Mesh48(debug=src.debug)
        for vid, v in src.vertices.items():
            m.vertices[vid] = type(v)(v.position.copy(), v.level, v.label,
                                      dict(v.chart_uv), v.origin)
            m.vertex_faces[vid] = set(src.vertex_faces[vid])
        for fid, f in src.faces.items():
            m.faces[fid] = type(f)(f.v, f.apex, f.level, f.chart)
        m.edge_faces = {k: list(v) for k, v in src.edge_faces.items()}
        m.chart_faces = {k: set(v) for k, v in src.chart_faces.items()}
        m.next_vid = src.next_vid
        m.next_fid = src.next_fid
        m.version = src.version
        return m

    def _clone_atlas(self):
        if self.atlas is None:
            return None
        src = self.atlas
        a = atlas_mod.Atlas(src.surface)
        for cid, c in src.charts.items():
            a.charts[cid] = atlas_mod.Chart(c.id, c.corners, list(c.layers))
        a.transitions = dict(src.transitions)
        a.layers_version = src.layers_version
        return a

    # ----------------------------------------------------------------- apply

    def apply(self, cmd: Command) -> dict:
        snap = self._snapshot()
        try:
            report = self._dispatch(cmd)
            self._check_invariants()
        except Exception:
            self._restore(snap)
            raise
        if cmd.op != "export_obj":
            self.generation += 1
        self.log_lines.append(cmd.to_line())
        report = {"op": cmd.op, "generation": self.generation,
                  "vertices": len(self.mesh.vertices) if self.mesh else 0,
                  "faces": len(self.mesh.faces) if self.mesh else 0,
                  **report}
        self.command_reports.append(report)
        return report

    def _require(self, cond: bool, msg: str):
        if not cond:
            raise PhaseError(msg)

    def _check_invariants(self):
        if self.atlas is None or self.mesh is None:
            return
        check = atlas_mod.validate_rk(self.mesh)
        if not check.ok:
            raise DassError(f"chart labels broken at face {check.face}: {check.message}")
        for vid, v in self.mesh.vertices.items():
            if not v.chart_uv:
                raise DassError(f"vertex {vid} lost its chart coordinates")

    def _dispatch(self, cmd: Command) -> dict:
        if isinstance(cmd, SetSamples):
            return self._set_samples(cmd)
        if isinstance(cmd, EditTesels):
            return self._edit_tesels(cmd)
        if isinstance(cmd, Lift):
            return self._lift()
        if isinstance(cmd, InitAtlas):
            return self._init_atlas()
        if isinstance(cmd, MoveImplicitSamples):
            return self._move_samples(cmd)
        if isinstance(cmd, SketchHeightCurve):
            return self._sketch(cmd)
        if isinstance(cmd, LoadRasterLayer):
            return self._raster(cmd)
        if isinstance(cmd, SetEpsilon):
            return self._set_epsilon(cmd)
        if isinstance(cmd, Adapt):
            self._require(self.atlas is not None, "adapt needs an initialized atlas")
            return self._adapt(cmd.mode)
        if isinstance(cmd, ExportObj):
            return self._export(cmd)
        raise PhaseError(f"unknown command {cmd!r}")

    # ------------------------------------------------------------ green flow

    def _fit(self, sample_pairs):
        return hrbf.fit([hrbf.OrientedSample(p, n) for p, n in sample_pairs])

    def _drop_downstream(self, keep_tesels=True) -> dict:
        dropped = 0
        if self.atlas is not None:
            dropped = sum(len(c.layers) for c in self.atlas.charts.values())
        self.base = None
        self.mesh = None
        self.atlas = None
        if not keep_tesels:
            self.tesels = None
        return {"dropped_layers": dropped}

    def _set_samples(self, cmd: SetSamples) -> dict:
        surface = self._fit(cmd.samples)
        info = self._drop_downstream(keep_tesels=self.tesels is not None)
        self.samples = [(np.array(p), np.array(n)) for p, n in cmd.samples]
        self.surface = surface
        if self.tesels is None:
            plane = cmd.plane or basemesh.default_plane()
            pts2 = plane.project(np.array([p for p, _ in self.samples]))
            self.tesels = basemesh.new_complex((pts2.min(axis=0), pts2.max(axis=0)), plane)
            info["new_complex"] = True
        return info

    def _edit_tesels(self, cmd: EditTesels) -> dict:
        self._require(self.tesels is not None, "no tesel complex; set samples first")
        for e in cmd.edits:
            if e[0] == "subdivide":
                self.tesels.subdivide(int(e[1]), e[2])
            elif e[0] == "move":
                self.tesels.move_vertex(int(e[1]), (float(e[2]), float(e[3])))
            elif e[0] == "kind":
                self.tesels.set_kind(int(e[1]), e[2])
            else:
                raise PhaseError(f"unknown tesel edit {e!r}")
        info = self._drop_downstream()
        info["tesels"] = self.tesels.cell_count
        return info

    def _lift(self) -> dict:
        self._require(self.surface is not None, "no surface; set samples first")
        self._require(self.tesels is not None, "no tesel complex; set samples first")
        info = self._drop_downstream()
        self.base = basemesh.lift(self.tesels, self.surface,
                                  t_range=self.config.trust_radius)
        info["base_vertices"] = len(self.base.vertices)
        info["genus"] = self.base.genus()
        return info

    def _init_atlas(self) -> dict:
        self._require(self.base is not None, "no base mesh; lift first")
        self.mesh, self.atlas = atlas_mod.init_atlas(self.base, self.surface)
        return {"charts": len(self.atlas.charts)}

    # ------------------------------------------------------------- blue flow

    def _move_samples(self, cmd: MoveImplicitSamples) -> dict:
        self._require(self.surface is not None, "no surface to edit")
        old_centroid = np.mean([p for p, _ in self.samples], axis=0)
        self.surface = self._fit(cmd.samples)
        self.samples = [(np.array(p), np.array(n)) for p, n in cmd.samples]
        shift = np.mean([p for p, _ in self.samples], axis=0) - old_centroid
        moved = 0
        if self.mesh is not None:
            moved = self._reproject_vertices(shift)
        if self.atlas is not None:
            self.atlas.surface = self.surface
        if self.base is not None and self.mesh is None:
            # base exists but atlas not built yet: re-lift cheaply by projection
            pos, ok = hrbf.project_many(self.surface, self.base.vertices)
            self.base = basemesh.BaseMeshPlan(pos, self.base.quads,
                                              self.base.fallback_nodes)
        return {"reprojected": moved}

    def _reproject_vertices(self, shift) -> int:
        """Move mesh vertices onto the refit surface, parents before children.

        Projections are seeded from the old position carried along by the
        sample-centroid shift, so a rigid translation of the samples moves
        every vertex by exactly that translation and details ride along.
        """
        mesh = self.mesh
        by_level = {}
        for vid, v in mesh.vertices.items():
            by_level.setdefault(v.level, []).append(vid)
        moved = 0
        for level in sorted(by_level):
            vids = sorted(by_level[level])
            pts = np.array([mesh.vertices[v].position for v in vids]) + shift
            q, ok = hrbf.project_many(self.surface, pts)
            for i, vid in enumerate(vids):
                if not ok[i]:
                    origin = mesh.vertices[vid].origin
                    if origin is not None:
                        par = np.array([mesh.vertices[p].position
                                        for p in origin.parents])
                        retry, rok = hrbf.project_many(self.surface,
                                                       par.mean(axis=0)[None, :])
                        q[i] = retry[0] if rok[0] else par.mean(axis=0)
                    else:
                        continue  # keep the old position
                mesh.vertices[vid].position = q[i]
                moved += 1
        mesh.version += 1
        mesh._tri_cache = None
        mesh._index_cache = None
        return moved

    # -------------------------------------------------------------- red flow

    def _sketch(self, cmd: SketchHeightCurve) -> dict:
        self._require(self.atlas is not None, "sketching needs an initialized atlas")
        frags = heightfield.add_stroke(self.atlas, self.mesh,
                                       np.asarray(cmd.points, dtype=float),
                                       cmd.h, cmd.r)
        info = self._adapt("local")
        info["fragments"] = [[int(c), len(f)] for c, f in frags]
        return info

    def _raster(self, cmd: LoadRasterLayer) -> dict:
        self._require(self.atlas is not None, "raster layers need an initialized atlas")
        self._require(cmd.chart in self.atlas.charts, f"unknown chart {cmd.chart}")
        grid = pgmio.read_pgm(self.base_dir / cmd.file)
        self.atlas.add_layer(cmd.chart, heightfield.RasterLayer(grid, cmd.scale))
        info = self._adapt("local")
        info["raster_shape"] = list(grid.shape)
        return info

    def _set_epsilon(self, cmd: SetEpsilon) -> dict:
        if cmd.value <= 0:
            raise PhaseError("epsilon must be positive")
        self.config.eps = cmd.value
        if self.atlas is not None:
            return self._adapt("local")
        return {}

    def _adapt(self, mode: str) -> dict:
        ds = self.displaced_surface()
        model = heightfield.ErrorModel(ds, local=(mode == "local"))
        report = self.mesh.adapt(model.edge_error, model.vertex_error,
                                 self.config.eps, self.config.max_passes,
                                 sampler=surface_sampler(self.surface),
                                 weld_guard=model.weld_guard,
                                 begin_pass=model.begin_pass)
        check = atlas_mod.validate_rk(self.mesh)
        if not check.ok:
            raise DassError(f"adapt broke chart labels at face {check.face}")
        return {"adapt": {"mode": mode, "passes": [list(p) for p in report.passes]}}

    # ---------------------------------------------------------------- export

    def export_arrays(self):
        self._require(self.mesh is not None, "nothing to export")
        displaced = None
        if self.atlas is not None and self.atlas.has_layers():
            displaced = self.displaced_surface().displaced_positions()
        return objio.mesh_obj_arrays(self.mesh, displaced)

    def _export(self, cmd: ExportObj) -> dict:
        pos, faces, labels = self.export_arrays()
        path = self.base_dir / cmd.path
        objio.export_obj(path, pos, faces, labels)
        return {"path": str(path)}

    # ----------------------------------------------------------------- stats

    def stats_dict(self) -> dict:
        entry = {
            "version": FORMAT_VERSION,
            "seed": self.seed,
            "eps": self.config.eps,
            "commands": self.command_reports,
            "final": {
                "generation": self.generation,
                "vertices": len(self.mesh.vertices) if self.mesh else 0,
                "faces": len(self.mesh.faces) if self.mesh else 0,
            },
        }
        if self.atlas is not None and self.mesh is not None and self.mesh.faces:
            ds = self.displaced_surface()
            model = heightfield.ErrorModel(ds, local=True)
            model.begin_pass(self.mesh)
            entry["final"]["max_face_error"] = max(model._cache.values())
        return entry

    def stats_json(self) -> str:
        return json.dumps(self.stats_dict(), sort_keys=True, indent=2) + "\n"


# --------------------------------------------------------------------- replay


def parse_scene(text: str):
    """(seed, [(line_no, Command)]) from scene text."""
    seed = 0
    commands = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split()[0]
        if head == "version":
            v = int(line.split()[1])
            if v != FORMAT_VERSION:
                raise ReplayError(i, f"unsupported scene version {v}")
            continue
        if head == "seed":
            seed = int(line.split()[1])
            continue
        try:
            commands.append((i, parse_line(line)))
        except Exception as exc:
            raise ReplayError(i, f"cannot parse {line!r}: {exc}", cause=exc) from exc
    return seed, commands


def replay(text: str, base_dir=None, seed_override: int = None,
           eps_override: float = None) -> Session:
    """Run a scene log into a fresh session; stops at the first failing line."""
    seed, commands = parse_scene(text)
    if seed_override is not None:
        seed = seed_override
    session = Session(seed=seed, base_dir=base_dir)
    if eps_override is not None:
        session.config.eps = eps_override
    for line_no, cmd in commands:
        try:
            session.apply(cmd)
        except DassError as exc:
            raise ReplayError(line_no, f"{cmd.op}: {exc}", cause=exc) from exc
    return session


def validate_scene(text: str) -> list:
    """Static checks: syntax plus phase ordering.  Returns diagnostics."""
    diagnostics = []
    try:
        _, commands = parse_scene(text)
    except ReplayError as exc:
        return [str(exc)]
    stage = "empty"
    order = {"empty": 0, "samples": 1, "lifted": 2, "detailing": 3}
    for line_no, cmd in commands:
        need = {"set_samples": "empty", "move_samples": "samples",
                "edit_tesels": "samples", "lift": "samples", "init_atlas": "lifted",
                "sketch_curve": "detailing", "load_raster": "detailing",
                "adapt": "detailing", "set_epsilon": "empty", "export_obj": "detailing"}[cmd.op]
        if order[stage] < order[need]:
            diagnostics.append(f"line {line_no}: {cmd.op} requires stage {need!r}, "
                               f"but session is only at {stage!r}")
        if cmd.op == "set_samples":
            stage = "samples" if order[stage] < 1 else stage
        elif cmd.op == "lift":
            stage = "lifted" if order[stage] < 2 else stage
        elif cmd.op == "init_atlas":
            stage = "detailing"
        elif cmd.op == "edit_tesels" and order[stage] > 1:
            stage = "samples"
    return diagnostics
