"""Shared mesh builders for the demo scripts."""

import numpy as np

from ovoxel import TriangleMesh


def make_demo_sphere(nu=48, nv=48, radius=0.4, center=(0.5, 0.5, 0.5)):
    """A UV sphere with outward-facing triangles."""
    theta = np.linspace(0.0, np.pi, nv + 1)
    phi = np.linspace(0.0, 2.0 * np.pi, nu, endpoint=False)
    t, p = np.meshgrid(theta, phi, indexing="ij")
    verts = np.stack(
        [
            np.sin(t) * np.cos(p),
            np.sin(t) * np.sin(p),
            np.cos(t),
        ],
        axis=-1,
    ).reshape(-1, 3) * radius + np.asarray(center)
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
    return TriangleMesh(verts, np.array(faces))
