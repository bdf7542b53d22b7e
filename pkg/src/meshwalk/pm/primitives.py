"""Small procedural meshes for tests, benchmarks and the CLI demo."""
from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from meshwalk.pm.mesh import TriangleMesh


def _orient_outward(points, faces):
    centre = points.mean(axis=0)
    p0, p1, p2 = points[faces[:, 0]], points[faces[:, 1]], points[faces[:, 2]]
    normal = np.cross(p1 - p0, p2 - p0)
    inward = np.einsum("ij,ij->i", normal, p0 - centre) < 0
    faces = faces.copy()
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return faces


def random_sphere(n_vertices: int, seed: int = 0, object_id: int = 0) -> TriangleMesh:
    """Closed genus-0 mesh: convex hull of ``n_vertices`` random unit vectors."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n_vertices, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    hull = ConvexHull(pts)
    return TriangleMesh(pts, _orient_outward(pts, hull.simplices.astype(np.int64)), object_id)


def icosphere(subdivisions: int = 2, object_id: int = 0) -> TriangleMesh:
    """Subdivided icosahedron (12, 42, 162, 642, ... vertices)."""
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64), object_id)


def torus(n_major: int = 16, n_minor: int = 8, radius: float = 1.0, tube: float = 0.35,
          jitter: float = 0.0, seed: int = 0, object_id: int = 0) -> TriangleMesh:
    """Closed genus-1 mesh on an ``n_major`` x ``n_minor`` grid."""
    rng = np.random.default_rng(seed)
    u = 2 * np.pi * np.arange(n_major) / n_major
    v = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    pts = np.stack([(radius + tube * np.cos(vv)) * np.cos(uu),
                    (radius + tube * np.cos(vv)) * np.sin(uu),
                    tube * np.sin(vv)], axis=-1).reshape(-1, 3)
    if jitter:
        pts = pts + rng.normal(scale=jitter, size=pts.shape)
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            faces += [(a, b, c), (a, c, d)]
    return TriangleMesh(pts, np.array(faces, dtype=np.int64), object_id)


def grid(nx: int = 8, ny: int = 8, jitter: float = 0.0, seed: int = 0, object_id: int = 0) -> TriangleMesh:
    """Open height-field patch with boundary (``nx`` x ``ny`` vertices)."""
    rng = np.random.default_rng(seed)
    xs, ys = np.meshgrid(np.arange(nx, dtype=float), np.arange(ny, dtype=float), indexing="ij")
    zs = 0.3 * np.sin(xs * 0.7) * np.cos(ys * 0.5)
    pts = np.stack([xs, ys, zs], axis=-1).reshape(-1, 3)
    if jitter:
        pts = pts + rng.normal(scale=jitter, size=pts.shape)
    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            c = (i + 1) * ny + j + 1
            d = i * ny + j + 1
            faces += [(a, b, c), (a, c, d)]
    return TriangleMesh(pts, np.array(faces, dtype=np.int64), object_id)
