import numpy as np
import pytest

from ovoxel import TriangleMesh


def make_cube(side: float = 1.0, center=(0.5, 0.5, 0.5)) -> TriangleMesh:
    """Axis-aligned cube with outward-facing triangles."""
    h = side / 2.0
    c = np.asarray(center, dtype=np.float64)
    verts = (
        np.array(
            [[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)],
            dtype=np.float64,
        )
        + c
    )
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    faces = []
    for a, b, cc, d in quads:
        faces += [[a, b, cc], [a, cc, d]]
    return TriangleMesh(verts, np.array(faces, dtype=np.int64))


def make_sphere(nu: int, nv: int, radius: float = 0.4, center=(0.5, 0.5, 0.5)):
    """UV sphere with outward-facing triangles."""
    th = np.linspace(0.0, np.pi, nv + 1)
    ph = np.linspace(0.0, 2.0 * np.pi, nu, endpoint=False)
    t, p = np.meshgrid(th, ph, indexing="ij")
    pts = np.stack(
        [
            radius * np.sin(t) * np.cos(p),
            radius * np.sin(t) * np.sin(p),
            radius * np.cos(t),
        ],
        axis=-1,
    ).reshape(-1, 3) + np.asarray(center)
    faces = []
    for i in range(nv):
        for j in range(nu):
            a = i * nu + j
            b = i * nu + (j + 1) % nu
            c = (i + 1) * nu + j
            d = (i + 1) * nu + (j + 1) % nu
            if i > 0:
                faces.append([a, c, b])
            if i < nv - 1:
                faces.append([b, c, d])
    return TriangleMesh(pts, np.array(faces, dtype=np.int64))


def make_quad(x: float = 0.45, lo: float = 0.1, hi: float = 0.9) -> TriangleMesh:
    """Open planar quad at constant x, spanning [lo, hi]^2 in y, z."""
    verts = np.array(
        [[x, lo, lo], [x, hi, lo], [x, hi, hi], [x, lo, hi]], dtype=np.float64
    )
    return TriangleMesh(verts, np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64))


def merge_meshes(a: TriangleMesh, b: TriangleMesh) -> TriangleMesh:
    return TriangleMesh(
        np.concatenate([a.vertices, b.vertices]),
        np.concatenate([a.faces, b.faces + len(a.vertices)]),
    )


@pytest.fixture
def cube_mesh():
    return make_cube(side=0.8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
