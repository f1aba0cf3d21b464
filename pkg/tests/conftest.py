import numpy as np
import pytest

from dass import atlas as atlas_mod
from dass import basemesh, hrbf
from dass.mesh48 import surface_sampler


def sphere_samples(n=6, radius=1.0):
    if n == 6:
        dirs = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    else:
        dirs = []
        for th in np.linspace(0, np.pi, 5)[1:-1]:
            for ph in np.linspace(0, 2 * np.pi, 8, endpoint=False):
                dirs.append((np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)))
        dirs += [(0, 0, 1), (0, 0, -1)]
    out = []
    for d in dirs:
        d = np.asarray(d, dtype=float)
        d = d / np.linalg.norm(d)
        out.append(hrbf.OrientedSample(radius * d, d))
    return out


@pytest.fixture(scope="session")
def sphere6():
    return hrbf.fit(sphere_samples(6))


@pytest.fixture(scope="session")
def sphere26():
    return hrbf.fit(sphere_samples(26))


@pytest.fixture(scope="session")
def plane_fit():
    # Flat-ish implicit surface: grid samples on z=0 with +z normals.
    samples = []
    for x in np.linspace(-1.5, 2.5, 5):
        for y in np.linspace(-1.5, 1.5, 4):
            samples.append(hrbf.OrientedSample((x, y, 0.0), (0.0, 0.0, 1.0)))
    return hrbf.fit(samples)


def strip_base():
    """Two quads side by side in the z=0 plane (the two-chart strip)."""
    verts = np.array([
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0],
        [2.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
    ])
    quads = [(0, 1, 4, 5), (1, 2, 3, 4)]
    return basemesh.BaseMeshPlan(verts, quads)


@pytest.fixture()
def strip(plane_fit):
    mesh, atl = atlas_mod.init_atlas(strip_base(), plane_fit)
    return mesh, atl, plane_fit


@pytest.fixture()
def refined_strip(plane_fit):
    mesh, atl = atlas_mod.init_atlas(strip_base(), plane_fit)
    smp = surface_sampler(plane_fit)
    for _ in range(3):
        mesh.refine_sweep(sampler=smp)
    return mesh, atl, plane_fit


def cube_plan(surface, half=0.55):
    c = basemesh.new_complex(((-half, -half), (half, half)))
    return basemesh.lift(c, surface)


@pytest.fixture()
def cube_atlas(sphere6):
    mesh, atl = atlas_mod.init_atlas(cube_plan(sphere6), sphere6)
    return mesh, atl, sphere6


@pytest.fixture()
def refined_cube(sphere6):
    mesh, atl = atlas_mod.init_atlas(cube_plan(sphere6), sphere6)
    smp = surface_sampler(sphere6)
    for _ in range(4):
        mesh.refine_sweep(sampler=smp)
    return mesh, atl, sphere6
