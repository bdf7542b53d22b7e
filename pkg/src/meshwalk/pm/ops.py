"""Edge collapse and vertex split on an incremental mesh representation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from meshwalk import kernels
from meshwalk.errors import InvalidSplit, NonExistentEdge, TopologyViolation
from meshwalk.pm.mesh import TriangleMesh


@dataclass(frozen=True)
class VertexSplit:
    """Refinement adding vertex ``vt`` next to ``vs``.

    The new vertex takes the next free index. Faces ``(vs, vt, vl)`` and
    ``(vs, vr, vt)`` are created and the faces of ``vs`` lying between
    ``vr`` and ``vl`` (counter-clockwise) move to ``vt``.
    """

    vs: int
    vl: int
    vr: int
    vt_position: tuple[float, float, float]
    vs_position_after: tuple[float, float, float]


class MeshBuilder:
    """Mutable half-edge-indexed triangle soup used by collapse and split.

    Faces are never reindexed while editing; removed faces become ``None``
    and removed vertices are flagged dead. :meth:`to_mesh` compacts.
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray, capacity: int | None = None):
        n = vertices.shape[0]
        cap = max(capacity or n, n)
        self.pos = np.empty((cap, 3))
        self.pos[:n] = vertices
        self.n = n
        self.alive = [True] * n
        self.faces: list[list[int] | None] = [list(f) for f in faces.tolist()]
        self.vfaces: list[set[int]] = [set() for _ in range(n)]
        self.half: dict[tuple[int, int], int] = {}
        for fid, (a, b, c) in enumerate(self.faces):
            self.vfaces[a].add(fid)
            self.vfaces[b].add(fid)
            self.vfaces[c].add(fid)
            self.half[(a, b)] = fid
            self.half[(b, c)] = fid
            self.half[(c, a)] = fid

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh, capacity: int | None = None) -> "MeshBuilder":
        return cls(mesh.vertices, mesh.faces, capacity)

    # -- queries ---------------------------------------------------------
    def neighbors(self, v: int) -> set[int]:
        out = set()
        for fid in self.vfaces[v]:
            out.update(self.faces[fid])
        out.discard(v)
        return out

    def is_interior(self, v: int) -> bool:
        half = self.half
        for fid in self.vfaces[v]:
            f = self.faces[fid]
            i = f.index(v)
            nxt = f[(i + 1) % 3]
            if (nxt, v) not in half:
                return False
        return True

    @staticmethod
    def _third(face: list[int], u: int, v: int) -> int:
        for x in face:
            if x != u and x != v:
                return x
        raise AssertionError("degenerate face")

    def check_collapse(self, vs: int, vt: int, strict: bool = False) -> tuple[int, int]:
        """Validate collapsing ``vt`` into ``vs``; returns ``(vl, vr)``."""
        if vs == vt or not (0 <= vs < self.n and 0 <= vt < self.n) or not (self.alive[vs] and self.alive[vt]):
            raise NonExistentEdge(f"({vs}, {vt}) is not an edge")
        fl = self.half.get((vs, vt))
        fr = self.half.get((vt, vs))
        if fl is None and fr is None:
            raise NonExistentEdge(f"({vs}, {vt}) is not an edge")
        if fl is None or fr is None:
            raise TopologyViolation(f"({vs}, {vt}) is a boundary edge")
        vl = self._third(self.faces[fl], vs, vt)
        vr = self._third(self.faces[fr], vs, vt)
        if vl == vr:
            raise TopologyViolation("edge faces share all three vertices")
        if not self.is_interior(vt):
            raise TopologyViolation(f"vertex {vt} lies on the boundary")
        common = self.neighbors(vs) & self.neighbors(vt)
        if common != {vl, vr}:
            raise TopologyViolation(f"link condition fails for ({vs}, {vt})")
        if strict:
            own = {frozenset(self.faces[fid]) for fid in self.vfaces[vs] if fid != fl and fid != fr}
            for fid in self.vfaces[vt]:
                if fid == fl or fid == fr:
                    continue
                moved = frozenset(vs if x == vt else x for x in self.faces[fid])
                if moved in own:
                    raise TopologyViolation("collapse would duplicate a face")
        return vl, vr

    def flips(self, vs: int, vt: int, target) -> bool:
        """True if moving ``vs``/``vt`` to ``target`` inverts a surviving face."""
        tris = []
        moved = []
        for fid in self.vfaces[vs] | self.vfaces[vt]:
            f = self.faces[fid]
            if vs in f and vt in f:
                continue
            tris.append(f)
            moved.append([x == vs or x == vt for x in f])
        return kernels.fold_over(self.pos, np.array(tris, dtype=np.int64).reshape(-1, 3),
                                 np.array(moved, dtype=bool).reshape(-1, 3), np.asarray(target, dtype=np.float64))

    # -- edits -----------------------------------------------------------
    def _drop_face(self, fid: int) -> None:
        a, b, c = self.faces[fid]
        for x in (a, b, c):
            self.vfaces[x].discard(fid)
        for e in ((a, b), (b, c), (c, a)):
            del self.half[e]
        self.faces[fid] = None

    def _add_face(self, face: list[int]) -> int:
        fid = len(self.faces)
        self.faces.append(face)
        a, b, c = face
        for x in face:
            self.vfaces[x].add(fid)
        for e in ((a, b), (b, c), (c, a)):
            self.half[e] = fid
        return fid

    def _rewire(self, fid: int, old: int, new: int) -> None:
        f = self.faces[fid]
        a, b, c = f
        for e in ((a, b), (b, c), (c, a)):
            del self.half[e]
        f[f.index(old)] = new
        a, b, c = f
        for e in ((a, b), (b, c), (c, a)):
            self.half[e] = fid
        self.vfaces[old].discard(fid)
        self.vfaces[new].add(fid)

    def collapse(self, vs: int, vt: int, target=None, strict: bool = False) -> VertexSplit:
        """Merge ``vt`` into ``vs``, placing ``vs`` at ``target`` (default: unchanged)."""
        vl, vr = self.check_collapse(vs, vt, strict=strict)
        vs_before = tuple(float(x) for x in self.pos[vs])
        vt_pos = tuple(float(x) for x in self.pos[vt])
        self._drop_face(self.half[(vs, vt)])
        self._drop_face(self.half[(vt, vs)])
        for fid in sorted(self.vfaces[vt]):
            self._rewire(fid, vt, vs)
        self.alive[vt] = False
        if target is not None:
            self.pos[vs] = target
        return VertexSplit(vs, vl, vr, vt_pos, vs_before)

    def split(self, s: VertexSplit) -> int:
        """Apply ``s``; returns the index of the new vertex."""
        vs, vl, vr = s.vs, s.vl, s.vr
        n = self.n
        for v in (vs, vl, vr):
            if not (0 <= v < n) or not self.alive[v]:
                raise InvalidSplit(f"vertex {v} is not in the mesh")
        if len({vs, vl, vr}) != 3:
            raise InvalidSplit("vs, vl, vr must be distinct")
        start = self.half.get((vs, vr))
        if start is None or vl not in self.neighbors(vs):
            raise InvalidSplit(f"{vl} and {vr} must both be neighbours of {vs}")
        chain = []
        fid = start
        limit = len(self.vfaces[vs])
        while True:
            f = self.faces[fid]
            i = f.index(vs)
            nxt = f[(i + 2) % 3]
            chain.append(fid)
            if nxt == vl:
                break
            fid = self.half.get((vs, nxt))
            if fid is None or len(chain) >= limit:
                raise InvalidSplit(f"no face fan from {vr} to {vl} around {vs}")
        if len(chain) == limit and self.is_interior(vs):
            # consuming the whole closed fan would leave vs with only the two new faces
            raise InvalidSplit(f"fan from {vr} to {vl} covers all faces of {vs}")

        vt = n
        if vt >= self.pos.shape[0]:
            grown = np.empty((max(2 * self.pos.shape[0], 8), 3))
            grown[:n] = self.pos[:n]
            self.pos = grown
        self.pos[vt] = s.vt_position
        self.pos[vs] = s.vs_position_after
        self.n += 1
        self.alive.append(True)
        self.vfaces.append(set())
        for fid in chain:
            self._rewire(fid, vs, vt)
        self._add_face([vs, vt, vl])
        self._add_face([vs, vr, vt])
        return vt

    def to_mesh(self, object_id: int = 0) -> tuple[TriangleMesh, np.ndarray]:
        """Compact into a :class:`TriangleMesh`; also returns old->new vertex ids."""
        alive = np.array(self.alive[: self.n], dtype=bool)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[alive] = np.arange(int(alive.sum()))
        faces = np.array([f for f in self.faces if f is not None], dtype=np.int64).reshape(-1, 3)
        return TriangleMesh(self.pos[: self.n][alive].copy(), remap[faces], object_id), remap


def edge_collapse(mesh: TriangleMesh, vs: int, vt: int) -> tuple[TriangleMesh, VertexSplit]:
    """Collapse edge ``(vs, vt)`` into ``vs``; ``vs`` keeps its position.

    The returned mesh drops ``vt`` (higher indices shift down by one) and the
    returned :class:`VertexSplit` is expressed in that mesh's numbering, so
    ``vertex_split(*edge_collapse(m, vs, vt))`` restores ``m`` up to moving
    ``vt`` to the last index.
    """
    b = MeshBuilder.from_mesh(mesh)
    s = b.collapse(int(vs), int(vt))
    out, remap = b.to_mesh(mesh.object_id)
    s = VertexSplit(int(remap[s.vs]), int(remap[s.vl]), int(remap[s.vr]), s.vt_position, s.vs_position_after)
    return out, s


def vertex_split(mesh: TriangleMesh, split: VertexSplit) -> TriangleMesh:
    """Apply one vertex split; the new vertex is appended last."""
    b = MeshBuilder.from_mesh(mesh, capacity=mesh.n_vertices + 1)
    b.split(split)
    out, _ = b.to_mesh(mesh.object_id)
    return out
