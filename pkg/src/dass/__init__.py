"""Sketch-based surface modeling kernel.

A coarse implicit surface (Hermite RBF) carries the overall shape; an
adaptive 4-8 mesh with a chart atlas carries per-chart height-map details.
Global edits move details coherently; local edits leave the global shape
untouched.
"""

from . import atlas, basemesh, errors, heightfield, hrbf, mesh48, objio, pgmio, session

__all__ = ["atlas", "basemesh", "errors", "heightfield", "hrbf", "mesh48",
           "objio", "pgmio", "session"]
__version__ = "0.1.0"
