"""Binary PGM (P5) reading and writing for raster height layers.

Values are maxval-normalized to [0, 1]; 16-bit files use the big-endian
byte order mandated by the format.
"""

from __future__ import annotations

import numpy as np


def read_pgm(source) -> np.ndarray:
    """Read a P5 file (path or bytes) into a float array in [0, 1]."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    # Header: magic, width, height, maxval; '#' starts a comment.
    fields = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        fields.append(int(data[i:j]))
        i = j
    i += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"bad maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=i)
    if len(raw) != count:
        raise ValueError("truncated pixel data")
    return raw.reshape(height, width).astype(float) / float(maxval)


def write_pgm(path, values: np.ndarray, maxval: int = 255):
    """Write an array of [0, 1] values as binary PGM."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    q = np.rint(v * maxval)
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{v.shape[1]} {v.shape[0]}\n{maxval}\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(q.astype(dtype).tobytes())
