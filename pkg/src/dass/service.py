"""HTTP session service exposing the command protocol to the companion UI.

Endpoints:

* POST /sessions                     -> {id, generation}
* POST /sessions/{id}/commands      JSON command -> mutation report
* GET  /sessions/{id}/mesh?since=g  -> binary mesh payload (304 if unchanged)
* GET  /sessions/{id}/charts/{c}    -> chart curves and raster extents
* POST /sessions/{id}/pick          {origin, dir} -> surface hit or miss
* GET  /sessions/{id}/log           -> command log as text

The mesh payload is little-endian: magic "D48M", u32 version, u32
generation, u32 vertex count, u32 triangle count, f32 positions (3 per
vertex, displaced by the height layers), i32 per-vertex chart labels, u32
triangle indices.  Commands mirror the scene-log text format 1:1, so any
UI-reachable state replays headlessly from the downloaded log.

Sessions live in process memory; commands within a session are serialized
FIFO under a lock, and concurrent sessions are independent.
"""

from __future__ import annotations

import struct
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from . import hrbf, session as session_mod
from .errors import DassError, PhaseError

MESH_MAGIC = b"D48M"
PAYLOAD_VERSION = 1


class SessionBox:
    def __init__(self):
        self.session = session_mod.Session(seed=0)
        self.lock = threading.Lock()
        self.last_error = ""


def mesh_payload(sess: session_mod.Session) -> bytes:
    if sess.mesh is None:
        pos = np.zeros((0, 3))
        faces = []
        labels = []
    else:
        pos, faces, labels = sess.export_arrays()
    head = MESH_MAGIC + struct.pack("<IIII", PAYLOAD_VERSION, sess.generation,
                                    len(pos), len(faces))
    body = (np.asarray(pos, dtype="<f4").tobytes()
            + np.asarray(labels, dtype="<i4").tobytes()
            + np.asarray(faces, dtype="<u4").tobytes())
    return head + body


def create_app(static_dir=None) -> FastAPI:
    app = FastAPI(title="dass session service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    boxes: dict[str, SessionBox] = {}

    def box_of(sid: str) -> SessionBox:
        box = boxes.get(sid)
        if box is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return box

    @app.post("/sessions")
    def create_session():
        sid = uuid.uuid4().hex[:12]
        boxes[sid] = SessionBox()
        return {"id": sid, "generation": 0}

    @app.post("/sessions/{sid}/commands")
    def post_command(sid: str, payload: dict):
        box = box_of(sid)
        try:
            cmd = session_mod.command_from_json(payload)
        except (KeyError, ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"bad command: {exc}") from exc
        with box.lock:
            try:
                report = box.session.apply(cmd)
            except PhaseError as exc:
                box.last_error = str(exc)
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            except DassError as exc:
                box.last_error = str(exc)
                raise HTTPException(status_code=409, detail=str(exc)) from exc
        return _jsonable(report)

    @app.get("/sessions/{sid}/mesh")
    def get_mesh(sid: str, since: int = -1):
        box = box_of(sid)
        with box.lock:
            if since == box.session.generation:
                return Response(status_code=304)
            payload = mesh_payload(box.session)
        return Response(content=payload, media_type="application/octet-stream")

    @app.get("/sessions/{sid}/charts/{chart}")
    def get_chart(sid: str, chart: int):
        box = box_of(sid)
        with box.lock:
            sess = box.session
            if sess.atlas is None or chart not in sess.atlas.charts:
                raise HTTPException(status_code=404, detail=f"unknown chart {chart}")
            out = {"id": chart, "curves": [], "rasters": [],
                   "neighbors": sess.atlas.neighbors(chart)}
            for layer in sess.atlas.charts[chart].layers:
                if layer.kind == "sketched":
                    for c in layer.curves:
                        out["curves"].append({
                            "h": c.h, "r": c.r,
                            "points": [[float(u), float(v)] for u, v in c.points]})
                else:
                    out["rasters"].append({"shape": list(layer.grid.shape),
                                           "scale": layer.scale})
        return out

    @app.post("/sessions/{sid}/pick")
    def pick(sid: str, payload: dict):
        box = box_of(sid)
        try:
            origin = np.asarray(payload["origin"], dtype=float).reshape(3)
            direction = np.asarray(payload["dir"], dtype=float).reshape(3)
        except (KeyError, ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"bad ray: {exc}") from exc
        with box.lock:
            hit = surface_hit(box.session, origin, direction)
        if hit is None:
            return {"hit": False}
        return {"hit": True, "point": [float(x) for x in hit]}

    @app.get("/sessions/{sid}/log")
    def get_log(sid: str):
        box = box_of(sid)
        with box.lock:
            text = box.session.log_text()
        return Response(content=text, media_type="text/plain; charset=utf-8")

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def surface_hit(sess: session_mod.Session, origin, direction):
    """Ray pick: intersect the mesh, then refine onto the implicit surface."""
    if sess.mesh is None or sess.surface is None:
        return None
    n = np.linalg.norm(direction)
    if n == 0:
        return None
    d = direction / n
    fids, tri, _ = sess.mesh.tri_arrays()
    if len(fids) == 0:
        return None
    t = _ray_triangles(origin, d, tri)
    if not np.isfinite(t).any():
        return None
    p = origin + np.nanmin(t[np.isfinite(t)]) * d
    try:
        return hrbf.project_surface(sess.surface, p)
    except DassError:
        return None


def _ray_triangles(origin, d, tri):
    """Smallest positive hit parameter per triangle (inf when missed)."""
    a = tri[:, 0]
    e1 = tri[:, 1] - a
    e2 = tri[:, 2] - a
    pvec = np.cross(d[None, :], e2)
    det = (e1 * pvec).sum(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(np.abs(det) > 1e-14, 1.0 / det, np.nan)
        tvec = origin[None, :] - a
        u = (tvec * pvec).sum(-1) * inv
        qvec = np.cross(tvec, e1)
        v = (d[None, :] * qvec).sum(-1) * inv
        t = (e2 * qvec).sum(-1) * inv
    ok = (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12) & (t > 1e-9)
    return np.where(ok, t, np.inf)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
