"""Progressive-record server: object store, device clamp and request handling.

Real-geometry objects live in three tables (base vertices, vertex-split
positions, faces) and records are assembled from rows on demand. Synthetic
objects only carry per-level byte sizes.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from meshwalk.errors import ConfigError, EmptyRange, UnknownClient, UnknownObject
from meshwalk.pm.mesh import TriangleMesh, read_mesh
from meshwalk.pm.ops import VertexSplit
from meshwalk.pm.records import (
    MAX_LEVELS,
    ResolutionRecord,
    encode_base_mesh,
    encode_splits,
    synthetic_object_sizes,
    synthetic_record,
)


class DeviceType(str, Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"


DEVICE_MAX_LEVEL = {DeviceType.TYPE_I: 8, DeviceType.TYPE_II: 1}


@dataclass(frozen=True)
class DeviceProfile:
    client_id: int
    device_type: DeviceType = DeviceType.TYPE_I
    max_level: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "device_type", DeviceType(self.device_type))
        if self.max_level is None:
            object.__setattr__(self, "max_level", DEVICE_MAX_LEVEL[self.device_type])
        if not 1 <= self.max_level <= MAX_LEVELS:
            raise ValueError(f"max_level must be in 1..{MAX_LEVELS}")


@dataclass(frozen=True)
class ResolutionRequest:
    """One level asked for by a client.

    ``refetch`` tells the server the client lost a level it was sent before
    (cache eviction), so delivered-level bookkeeping is rolled back.
    """

    request_id: int
    client_id: int
    object_id: int
    level: int
    issued_at: float
    refetch: bool = False

    def __post_init__(self):
        if not 1 <= self.level <= MAX_LEVELS:
            raise ValueError(f"level must be in 1..{MAX_LEVELS}, got {self.level}")


def clamp_resolution(level: int, profile: DeviceProfile) -> int:
    if not 1 <= level <= MAX_LEVELS:
        raise ValueError(f"level must be in 1..{MAX_LEVELS}, got {level}")
    return min(level, profile.max_level)


class ObjectStore:
    """Three relational tables plus a catalogue of synthetic objects.

    ``base_table`` rows are ``(x, y, z, object_id)``; ``vsplit_table`` rows
    ``(x, y, z, object_id, resolution)`` come in pairs per split (new vertex,
    then the split vertex's position after the split); ``face_table`` rows
    ``(i1, i2, i3, object_id, resolution)`` hold the base faces at
    resolution 1 and ``(vs, vl, vr)`` of each split above.
    """

    def __init__(self):
        self.base_table = np.empty((0, 4))
        self.vsplit_table = np.empty((0, 5))
        self.face_table = np.empty((0, 5), dtype=np.int64)
        self.synthetic: dict[int, list[int]] = {}
        self.levels: dict[int, int] = {}
        self._memo: dict[tuple[int, int], ResolutionRecord] = {}

    def __contains__(self, object_id) -> bool:
        return object_id in self.levels

    @property
    def object_ids(self) -> list[int]:
        return sorted(self.levels)

    def add_synthetic(self, object_id: int, sizes) -> None:
        sizes = [int(s) for s in sizes]
        if not 1 <= len(sizes) <= MAX_LEVELS:
            raise ValueError(f"need 1..{MAX_LEVELS} level sizes")
        self._check_new(object_id)
        self.synthetic[object_id] = sizes
        self.levels[object_id] = len(sizes)

    def add_pm(self, object_id: int, pm) -> None:
        """Load a :class:`~meshwalk.pm.simplify.PMStream` into the tables."""
        self._check_new(object_id)
        base = pm.base_mesh
        oid = float(object_id)
        brows = np.column_stack([base.vertices, np.full(base.n_vertices, oid)])
        frows = [np.column_stack([base.faces, np.full((base.n_faces, 2), (object_id, 1))])]
        vrows = []
        for level in range(2, pm.levels + 1):
            for s in pm.level_splits(level):
                vrows.append((*s.vt_position, oid, level))
                vrows.append((*s.vs_position_after, oid, level))
                frows.append(np.array([[s.vs, s.vl, s.vr, object_id, level]], dtype=np.int64))
        self.base_table = np.vstack([self.base_table, brows])
        if vrows:
            self.vsplit_table = np.vstack([self.vsplit_table, np.array(vrows)])
        self.face_table = np.vstack([self.face_table, *frows]).astype(np.int64)
        self.levels[object_id] = pm.levels

    def _check_new(self, object_id):
        if object_id in self.levels:
            raise ValueError(f"object {object_id} already stored")

    def level_sizes(self, object_id) -> list[int]:
        """On-the-wire size of each level's record."""
        if object_id in self.synthetic:
            return list(self.synthetic[object_id])
        return [self.record(object_id, lv).byte_size for lv in range(1, self.n_levels(object_id) + 1)]

    def n_levels(self, object_id) -> int:
        try:
            return self.levels[object_id]
        except KeyError:
            raise UnknownObject(f"unknown object {object_id}") from None

    def record(self, object_id, level) -> ResolutionRecord:
        key = (object_id, level)
        rec = self._memo.get(key)
        if rec is None:
            n = self.n_levels(object_id)
            if not 1 <= level <= n:
                raise EmptyRange(f"object {object_id} has levels 1..{n}, asked for {level}")
            rec = self._assemble(object_id, level)
            self._memo[key] = rec
        return rec

    def _assemble(self, object_id, level) -> ResolutionRecord:
        if object_id in self.synthetic:
            return synthetic_record(object_id, level, self.synthetic[object_id][level - 1])
        f = self.face_table
        fsel = f[(f[:, 3] == object_id) & (f[:, 4] == level)][:, :3]
        if level == 1:
            b = self.base_table
            verts = b[b[:, 3] == object_id][:, :3]
            mesh = TriangleMesh(np.ascontiguousarray(verts), np.ascontiguousarray(fsel), object_id)
            return ResolutionRecord(object_id, 1, encode_base_mesh(mesh))
        v = self.vsplit_table
        pos = v[(v[:, 3] == object_id) & (v[:, 4] == level)][:, :3]
        splits = [VertexSplit(int(a), int(b), int(c), tuple(pos[2 * i].tolist()), tuple(pos[2 * i + 1].tolist()))
                  for i, (a, b, c) in enumerate(fsel.tolist())]
        return ResolutionRecord(object_id, level, encode_splits(splits))


def fetch_records(store: ObjectStore, object_id, from_level: int, to_level: int) -> list[ResolutionRecord]:
    """Records for ``from_level..to_level`` in ascending order."""
    n = store.n_levels(object_id)
    if from_level > to_level:
        raise EmptyRange(f"from_level {from_level} > to_level {to_level}")
    if from_level < 1 or to_level > n:
        raise EmptyRange(f"object {object_id} has levels 1..{n}, asked for {from_level}..{to_level}")
    return [store.record(object_id, lv) for lv in range(from_level, to_level + 1)]


@dataclass
class DeliveryPlan:
    request: ResolutionRequest
    level: int
    records: list = field(default_factory=list)


class Server:
    """Answers level requests; ``enqueue(client_id, record)`` hands records to the downlink.

    ``sent`` is the per-(client, object) high-water mark of levels already
    delivered, so duplicate requests never produce duplicate bytes.
    """

    def __init__(self, store: ObjectStore, enqueue=None, constrained: bool = True):
        self.store = store
        self.enqueue = enqueue
        self.constrained = constrained
        self.profiles: dict[int, DeviceProfile] = {}
        self.sent: dict[tuple[int, int], int] = {}
        self.requests_handled = 0
        self.bytes_enqueued = 0

    def register(self, profile: DeviceProfile) -> None:
        self.profiles[profile.client_id] = profile

    def handle_request(self, req: ResolutionRequest) -> DeliveryPlan:
        profile = self.profiles.get(req.client_id)
        if profile is None:
            raise UnknownClient(f"client {req.client_id} is not registered")
        n = self.store.n_levels(req.object_id)
        level = clamp_resolution(req.level, profile) if self.constrained else req.level
        level = min(level, n)
        key = (req.client_id, req.object_id)
        hwm = self.sent.get(key, 0)
        if req.refetch:
            hwm = min(hwm, req.level - 1)
        plan = DeliveryPlan(req, level)
        if level > hwm:
            plan.records = fetch_records(self.store, req.object_id, hwm + 1, level)
            hwm = level
        self.sent[key] = hwm
        self.requests_handled += 1
        for rec in plan.records:
            self.bytes_enqueued += rec.byte_size
            if self.enqueue is not None:
                self.enqueue(req.client_id, rec)
        return plan


# -- manifest --------------------------------------------------------------

def load_manifest(path) -> ObjectStore:
    """Build a store from an INI manifest.

    Each ``[object.<id>]`` section has either ``mesh = <file>`` (a mesh to
    simplify, or a ``.pm`` stream) with optional ``levels``, or
    ``synthetic = <records_above_base>`` / ``sizes = <b1>, <b2>, ...``.
    Relative paths are resolved against the manifest's directory.
    """
    from meshwalk.pm.pmfile import read_pm
    from meshwalk.pm.simplify import simplify

    path = Path(path)
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}", "scene.manifest") from exc
    store = ObjectStore()
    for sec in cp.sections():
        if not sec.startswith("object."):
            raise ConfigError(f"unexpected section [{sec}] in {path}", sec)
        try:
            oid = int(sec.split(".", 1)[1])
        except ValueError:
            raise ConfigError(f"object id must be an integer in [{sec}]", sec) from None
        s = cp[sec]
        if "mesh" in s:
            mpath = path.parent / s["mesh"]
            if mpath.suffix == ".pm":
                pm = read_pm(mpath)
            else:
                pm = simplify(read_mesh(mpath, oid), levels=s.getint("levels", MAX_LEVELS))
            store.add_pm(oid, pm)
        elif "sizes" in s:
            store.add_synthetic(oid, [int(x) for x in s["sizes"].split(",")])
        else:
            store.add_synthetic(oid, synthetic_object_sizes(s.getint("synthetic", 9)))
    if not store.levels:
        raise ConfigError(f"manifest {path} lists no objects", "scene.manifest")
    return store
