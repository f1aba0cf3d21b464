"""OBJ export with byte-deterministic formatting."""

from __future__ import annotations

import numpy as np


def obj_text(positions, faces, labels=None) -> str:
    """OBJ content: positions, 1-based triangle indices, optional labels.

    Floats are written with repr (shortest round-trip form) so identical
    geometry always yields identical bytes.
    """
    out = []
    for p in np.asarray(positions, dtype=float):
        out.append(f"v {p[0]!r} {p[1]!r} {p[2]!r}")
    if labels is not None:
        for i, lab in enumerate(labels):
            out.append(f"# label {i + 1} {int(lab)}")
    for f in faces:
        out.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(out) + "\n"


def export_obj(path, positions, faces, labels=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(obj_text(positions, faces, labels))


def mesh_obj_arrays(mesh, displaced=None):
    """Dense position/index arrays for export; vertex ids are compacted.

    displaced optionally maps vertex id -> position override.
    """
    vids = sorted(mesh.vertices)
    row = {vid: i for i, vid in enumerate(vids)}
    if displaced is None:
        pos = np.array([mesh.vertices[v].position for v in vids])
    else:
        pos = np.array([displaced[v] for v in vids])
    faces = [(row[f.v[0]], row[f.v[1]], row[f.v[2]]) for _, f in sorted(mesh.faces.items())]
    labels = [mesh.vertices[v].label for v in vids]
    return pos, faces, labels
