"""Quadric-error simplification into a progressive mesh."""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from meshwalk import kernels
from meshwalk.errors import MeshTooSmall, SimplificationStalled, TopologyViolation
from meshwalk.pm.mesh import TriangleMesh, undirected_edges, validate
from meshwalk.pm.ops import MeshBuilder, VertexSplit

MIN_INPUT_VERTICES = 20
MIN_BASE_VERTICES = 4


@dataclass
class PMStream:
    """Base mesh plus ordered vertex splits cut into resolution levels.

    ``level_boundaries[k]`` is the number of splits applied to reach level
    ``k + 1``; the last entry equals ``len(splits)``.
    """

    base_mesh: TriangleMesh
    splits: list[VertexSplit]
    level_boundaries: tuple[int, ...]
    n_vertices: int
    n_faces: int
    stalled: bool = False

    @property
    def levels(self) -> int:
        return len(self.level_boundaries)

    @property
    def object_id(self) -> int:
        return self.base_mesh.object_id

    def level_splits(self, level: int) -> list[VertexSplit]:
        """The split batch carried by ``level`` (empty for level 1)."""
        if not 1 <= level <= self.levels:
            raise ValueError(f"level must be in 1..{self.levels}, got {level}")
        lo = 0 if level == 1 else self.level_boundaries[level - 2]
        return self.splits[lo:self.level_boundaries[level - 1]]

    def reconstruct(self, level: int | None = None) -> TriangleMesh:
        """Mesh obtained by applying every split up to ``level`` (default: all)."""
        level = self.levels if level is None else level
        if not 1 <= level <= self.levels:
            raise ValueError(f"level must be in 1..{self.levels}, got {level}")
        count = self.level_boundaries[level - 1]
        return apply_splits(self.base_mesh, self.splits[:count])


def apply_splits(base: TriangleMesh, splits) -> TriangleMesh:
    splits = list(splits)
    b = MeshBuilder.from_mesh(base, capacity=base.n_vertices + len(splits))
    for s in splits:
        b.split(s)
    mesh, _ = b.to_mesh(base.object_id)
    return mesh


def level_targets(n_vertices: int, levels: int) -> list[int]:
    """Vertex count wanted at each level: ceil(k * n / levels)."""
    return [-(-k * n_vertices // levels) for k in range(1, levels + 1)]


def simplify(mesh: TriangleMesh, levels: int = 10) -> PMStream:
    """Build a progressive mesh of ``mesh`` with ``levels`` resolution levels.

    Edges are collapsed in order of quadric error, ties broken by the smaller
    then larger endpoint index. The base mesh targets ``ceil(n / levels)``
    vertices (at least 4). If no legal collapse remains earlier the stream is
    returned with a larger base mesh, ``stalled=True`` and a
    :class:`SimplificationStalled` warning.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    validate(mesh)
    n = mesh.n_vertices
    if n < MIN_INPUT_VERTICES:
        raise MeshTooSmall(f"need at least {MIN_INPUT_VERTICES} vertices, got {n}")
    targets = level_targets(n, levels)
    base_target = max(targets[0], MIN_BASE_VERTICES)

    builder = MeshBuilder.from_mesh(mesh)
    quadrics = kernels.vertex_quadrics(kernels.face_quadrics(mesh.vertices, mesh.faces), mesh.faces, n)
    version = [0] * n
    heap: list = []

    def push(a_idx, b_idx):
        if len(a_idx) == 0:
            return
        a_arr = np.asarray(a_idx, dtype=np.int64)
        b_arr = np.asarray(b_idx, dtype=np.int64)
        costs, tgts = kernels.edge_costs(quadrics, builder.pos, a_arr, b_arr)
        for a, b, c, t in zip(a_idx, b_idx, costs.tolist(), tgts.tolist()):
            heapq.heappush(heap, (c, a, b, version[a], version[b], t))

    def push_all():
        heap.clear()
        alive_faces = np.array([f for f in builder.faces if f is not None], dtype=np.int64)
        e = undirected_edges(alive_faces)
        push(e[:, 0].tolist(), e[:, 1].tolist())

    push_all()
    alive = n
    collapses = []
    stalled = False
    # The second sweep drops the fold-over guard before giving up.
    guard_flips = True
    swept = False
    while alive > base_target:
        if not heap:
            if swept and not guard_flips:
                stalled = True
                break
            if swept:
                guard_flips = False
            swept = True
            push_all()
            continue
        cost, a, b, va, vb, target = heapq.heappop(heap)
        if not (builder.alive[a] and builder.alive[b]) or version[a] != va or version[b] != vb:
            continue
        done = None
        # Prefer keeping the smaller index; the removed vertex must be interior.
        for vs, vt in ((a, b), (b, a)):
            try:
                builder.check_collapse(vs, vt, strict=True)
            except TopologyViolation:
                continue
            if guard_flips and builder.flips(vs, vt, target):
                continue
            done = builder.collapse(vs, vt, target, strict=True)
            break
        if done is None:
            continue
        swept = False
        guard_flips = True
        alive -= 1
        collapses.append((vt, done))
        quadrics[vs] += quadrics[vt]
        version[vs] += 1
        nb = sorted(builder.neighbors(vs))
        push([min(vs, x) for x in nb], [max(vs, x) for x in nb])

    if stalled:
        warnings.warn(
            f"simplification stalled at {alive} vertices (target {base_target})",
            SimplificationStalled,
            stacklevel=2,
        )

    # Renumber: survivors keep their relative order, then removed vertices in
    # the order their splits are applied (reverse collapse order).
    new_id = np.full(n, -1, dtype=np.int64)
    survivors = [v for v in range(n) if builder.alive[v]]
    new_id[survivors] = np.arange(len(survivors))
    for k, (vt, _) in enumerate(reversed(collapses)):
        new_id[vt] = len(survivors) + k
    base_faces = np.array([f for f in builder.faces if f is not None], dtype=np.int64)
    base = TriangleMesh(builder.pos[survivors].copy(), new_id[base_faces], mesh.object_id)
    splits = [
        VertexSplit(int(new_id[s.vs]), int(new_id[s.vl]), int(new_id[s.vr]), s.vt_position, s.vs_position_after)
        for _, s in reversed(collapses)
    ]
    n0 = len(survivors)
    total = len(splits)
    boundaries = tuple(min(max(t - n0, 0), total) for t in targets)
    boundaries = boundaries[:-1] + (total,)
    return PMStream(base, splits, boundaries, n, mesh.n_faces, stalled)
