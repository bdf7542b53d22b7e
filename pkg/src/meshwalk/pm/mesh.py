"""Indexed triangle meshes: validation, canonical form and ASCII I/O."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from meshwalk.errors import MeshFormatError, NonManifoldMesh


@dataclass(eq=False)
class TriangleMesh:
    """Vertex positions ``(n, 3)`` and faces ``(m, 3)`` of 0-based indices."""

    vertices: np.ndarray
    faces: np.ndarray
    object_id: int = 0

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices.copy(), self.faces.copy(), self.object_id)

    def canonical(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertex/face arrays independent of vertex and face ordering.

        Vertices are sorted lexicographically by position; each face is
        rotated (orientation preserved) to start at its smallest index and
        the face list is sorted.
        """
        order = np.lexsort(self.vertices.T[::-1])
        remap = np.empty(self.n_vertices, dtype=np.int64)
        remap[order] = np.arange(self.n_vertices)
        faces = remap[self.faces]
        if faces.size:
            shift = np.argmin(faces, axis=1)
            idx = (shift[:, None] + np.arange(3)[None, :]) % 3
            faces = np.take_along_axis(faces, idx, axis=1)
            faces = faces[np.lexsort(faces.T[::-1])]
        return self.vertices[order], faces

    def same_as(self, other: "TriangleMesh") -> bool:
        """Equality under canonical ordering with bit-exact positions."""
        if self.n_vertices != other.n_vertices or self.n_faces != other.n_faces:
            return False
        va, fa = self.canonical()
        vb, fb = other.canonical()
        return bool(np.array_equal(va.view(np.uint64), vb.view(np.uint64)) and np.array_equal(fa, fb))


def directed_edges(faces: np.ndarray) -> np.ndarray:
    """All ``(u, v)`` half-edges of the faces, face-major."""
    return np.stack([faces, np.roll(faces, -1, axis=1)], axis=2).reshape(-1, 2)


def undirected_edges(faces: np.ndarray) -> np.ndarray:
    """Sorted unique undirected edges as ``(k, 2)`` with ``e[:, 0] < e[:, 1]``."""
    he = directed_edges(faces)
    he = np.sort(he, axis=1)
    return np.unique(he, axis=0)


def validate(mesh: TriangleMesh) -> None:
    """Raise :class:`NonManifoldMesh` unless ``mesh`` is an oriented manifold.

    Accepted meshes are closed 2-manifolds or manifolds with boundary whose
    faces are consistently oriented, with no degenerate faces and no
    unreferenced vertices.
    """
    n = mesh.n_vertices
    f = mesh.faces
    if n == 0 or f.shape[0] == 0:
        raise NonManifoldMesh("mesh has no vertices or no faces")
    if not np.all(np.isfinite(mesh.vertices)):
        raise NonManifoldMesh("non-finite vertex coordinate")
    if f.min() < 0 or f.max() >= n:
        bad = int(np.flatnonzero((f < 0).any(1) | (f >= n).any(1))[0])
        raise NonManifoldMesh(f"face {bad} references a vertex outside 0..{n - 1}")
    degenerate = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
    if degenerate.any():
        raise NonManifoldMesh(f"face {int(np.flatnonzero(degenerate)[0])} is degenerate")
    used = np.zeros(n, dtype=bool)
    used[f.ravel()] = True
    if not used.all():
        raise NonManifoldMesh(f"vertex {int(np.flatnonzero(~used)[0])} is not referenced by any face")

    he = directed_edges(f)
    key = he[:, 0] * n + he[:, 1]
    uniq, counts = np.unique(key, return_counts=True)
    if (counts > 1).any():
        k = int(uniq[counts > 1][0])
        raise NonManifoldMesh(
            f"half-edge ({k // n}, {k % n}) used twice: non-manifold edge or inconsistent orientation"
        )

    # Vertex manifoldness: the link of each vertex is one path or one cycle.
    # For face (v, a, b) the link gets the arc a -> b.
    centre = f.ravel()
    a = np.roll(f, -1, axis=1).ravel()
    b = np.roll(f, -2, axis=1).ravel()
    order = np.argsort(centre, kind="stable")
    centre, a, b = centre[order], a[order], b[order]
    bounds = np.searchsorted(centre, np.arange(n + 1))
    for v in range(n):
        lo, hi = bounds[v], bounds[v + 1]
        nxt = dict(zip(a[lo:hi].tolist(), b[lo:hi].tolist()))
        starts = set(nxt) - set(nxt.values())
        if len(starts) > 1:
            raise NonManifoldMesh(f"vertex {v} has a non-manifold fan")
        cur = next(iter(starts)) if starts else int(a[lo])
        first = cur
        seen = 0
        while cur in nxt and seen <= hi - lo:
            cur = nxt[cur]
            seen += 1
            if cur == first:
                break
        if seen != hi - lo:
            raise NonManifoldMesh(f"vertex {v} has a non-manifold fan")


def read_mesh(path, object_id: int = 0) -> TriangleMesh:
    """Read the ASCII ``v x y z`` / ``f i j k`` (1-based) format."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshFormatError(f"cannot read mesh: {exc.strerror}", path=path) from exc
    return parse_mesh(text, object_id=object_id, path=path)


def parse_mesh(text: str, object_id: int = 0, path=None) -> TriangleMesh:
    verts = []
    faces = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) != 4:
                raise MeshFormatError("vertex line needs exactly 3 coordinates", lineno, path)
            try:
                verts.append([float(p) for p in parts[1:]])
            except ValueError:
                raise MeshFormatError(f"bad coordinate in {line!r}", lineno, path) from None
        elif tag == "f":
            if len(parts) != 4:
                raise MeshFormatError("face line needs exactly 3 indices", lineno, path)
            try:
                idx = [int(p) for p in parts[1:]]
            except ValueError:
                raise MeshFormatError(f"bad index in {line!r}", lineno, path) from None
            if min(idx) < 1:
                raise MeshFormatError("face indices are 1-based", lineno, path)
            faces.append([i - 1 for i in idx])
        else:
            raise MeshFormatError(f"unknown record type {tag!r}", lineno, path)
    for i, fc in enumerate(faces):
        if max(fc) >= len(verts):
            raise MeshFormatError(f"face {i + 1} references vertex {max(fc) + 1} of {len(verts)}", path=path)
    return TriangleMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                        np.array(faces, dtype=np.int64).reshape(-1, 3), object_id)


def format_mesh(mesh: TriangleMesh) -> str:
    # repr() round-trips doubles exactly
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    return "\n".join(lines) + "\n"


def write_mesh(mesh: TriangleMesh, path) -> None:
    Path(path).write_text(format_mesh(mesh))
