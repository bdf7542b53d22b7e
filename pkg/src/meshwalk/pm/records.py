"""Resolution records and their byte-exact wire format.

Wire layout (little-endian)::

    offset  size  field
    0       4     object_id       u32
    4       1     level           u8   (1 = base mesh)
    5       4     payload_length  u32
    9       n     payload

The payload starts with a one-byte kind tag:

* ``0`` base mesh: ``u32 nv, u32 nf``, ``nv`` x 3 f64 positions, ``nf`` x 3 u32 indices
* ``1`` split batch: ``u32 count`` then per split ``u32 vs, u32 vl, u32 vr``,
  3 f64 new-vertex position, 3 f64 position of ``vs`` after the split (60 bytes)
* ``2`` synthetic filler: zero bytes, used when only the size matters

``byte_size`` is the full emitted length, header included.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from meshwalk.errors import MalformedRecord
from meshwalk.pm.mesh import TriangleMesh
from meshwalk.pm.ops import VertexSplit

HEADER = struct.Struct("<IBI")
HEADER_SIZE = HEADER.size  # 9

KIND_BASE = 0
KIND_SPLITS = 1
KIND_SYNTHETIC = 2

_SPLIT = struct.Struct("<III3d3d")
_COUNTS = struct.Struct("<II")
_U32 = struct.Struct("<I")

# Sizes of the synthetic benchmark object: an 8 KB base mesh and 5.2 KB levels.
BASE_RECORD_BYTES = 8192
LEVEL_RECORD_BYTES = 5325
MAX_LEVELS = 10


@dataclass(frozen=True)
class ResolutionRecord:
    object_id: int
    level: int
    payload: bytes

    def __post_init__(self):
        if not 1 <= self.level <= 255:
            raise MalformedRecord(f"level {self.level} out of range")
        if not 0 <= self.object_id < 2**32:
            raise MalformedRecord(f"object id {self.object_id} does not fit in u32")
        if not self.payload:
            raise MalformedRecord("empty payload")
        kind = self.payload[0]
        if kind not in (KIND_BASE, KIND_SPLITS, KIND_SYNTHETIC):
            raise MalformedRecord(f"unknown payload kind {kind}")
        if self.level == 1 and kind == KIND_SPLITS:
            raise MalformedRecord("level 1 must carry a base mesh")
        if self.level > 1 and kind == KIND_BASE:
            raise MalformedRecord(f"level {self.level} must carry a split batch")

    @property
    def byte_size(self) -> int:
        return HEADER_SIZE + len(self.payload)

    @property
    def kind(self) -> int:
        return self.payload[0]


def encode_base_mesh(mesh: TriangleMesh) -> bytes:
    v = np.ascontiguousarray(mesh.vertices, dtype="<f8")
    f = np.ascontiguousarray(mesh.faces, dtype="<u4")
    return bytes([KIND_BASE]) + _COUNTS.pack(mesh.n_vertices, mesh.n_faces) + v.tobytes() + f.tobytes()


def decode_base_mesh(payload: bytes, object_id: int = 0) -> TriangleMesh:
    if len(payload) < 1 + _COUNTS.size or payload[0] != KIND_BASE:
        raise MalformedRecord("not a base-mesh payload")
    nv, nf = _COUNTS.unpack_from(payload, 1)
    off = 1 + _COUNTS.size
    expect = off + nv * 24 + nf * 12
    if len(payload) != expect:
        raise MalformedRecord(f"base-mesh payload is {len(payload)} bytes, expected {expect}")
    v = np.frombuffer(payload, dtype="<f8", count=nv * 3, offset=off).reshape(nv, 3).astype(np.float64)
    f = np.frombuffer(payload, dtype="<u4", count=nf * 3, offset=off + nv * 24).reshape(nf, 3).astype(np.int64)
    if nf and f.max() >= nv:
        raise MalformedRecord("face index out of range")
    return TriangleMesh(v, f, object_id)


def encode_splits(splits) -> bytes:
    splits = list(splits)
    parts = [bytes([KIND_SPLITS]), _U32.pack(len(splits))]
    for s in splits:
        parts.append(_SPLIT.pack(s.vs, s.vl, s.vr, *s.vt_position, *s.vs_position_after))
    return b"".join(parts)


def decode_splits(payload: bytes) -> list[VertexSplit]:
    if len(payload) < 5 or payload[0] != KIND_SPLITS:
        raise MalformedRecord("not a split-batch payload")
    (count,) = _U32.unpack_from(payload, 1)
    if len(payload) != 5 + count * _SPLIT.size:
        raise MalformedRecord(f"split batch declares {count} splits but has {len(payload) - 5} body bytes")
    out = []
    for i in range(count):
        vs, vl, vr, tx, ty, tz, sx, sy, sz = _SPLIT.unpack_from(payload, 5 + i * _SPLIT.size)
        out.append(VertexSplit(vs, vl, vr, (tx, ty, tz), (sx, sy, sz)))
    return out


def synthetic_record(object_id: int, level: int, byte_size: int) -> ResolutionRecord:
    """Record of exactly ``byte_size`` bytes on the wire with a filler payload."""
    if byte_size < HEADER_SIZE + 1:
        raise ValueError(f"byte_size must be >= {HEADER_SIZE + 1}")
    return ResolutionRecord(object_id, level, bytes([KIND_SYNTHETIC]) + bytes(byte_size - HEADER_SIZE - 1))


def serialize_record(record: ResolutionRecord) -> bytes:
    return HEADER.pack(record.object_id, record.level, len(record.payload)) + record.payload


def deserialize_record(data: bytes) -> ResolutionRecord:
    record, end = read_record(data, 0)
    if end != len(data):
        raise MalformedRecord(f"{len(data) - end} trailing bytes after record")
    return record


def read_record(data: bytes, offset: int) -> tuple[ResolutionRecord, int]:
    """Parse one record at ``offset``; returns it and the offset past it."""
    if len(data) - offset < HEADER_SIZE:
        raise MalformedRecord(f"truncated header at offset {offset}")
    object_id, level, length = HEADER.unpack_from(data, offset)
    start = offset + HEADER_SIZE
    end = start + length
    if end > len(data):
        raise MalformedRecord(f"payload at offset {start} truncated: need {length} bytes, have {len(data) - start}")
    payload = bytes(data[start:end])
    record = ResolutionRecord(object_id, level, payload)
    if record.kind == KIND_BASE:
        decode_base_mesh(payload)
    elif record.kind == KIND_SPLITS:
        decode_splits(payload)
    return record, end


def pm_records(pm, object_id: int | None = None) -> list[ResolutionRecord]:
    """One record per level of a :class:`~meshwalk.pm.simplify.PMStream`."""
    oid = pm.object_id if object_id is None else object_id
    out = [ResolutionRecord(oid, 1, encode_base_mesh(pm.base_mesh))]
    for level in range(2, pm.levels + 1):
        out.append(ResolutionRecord(oid, level, encode_splits(pm.level_splits(level))))
    return out


def synthetic_object_sizes(records_above_base: int = 9, levels: int = MAX_LEVELS) -> list[int]:
    """Per-level byte sizes of the synthetic benchmark object.

    With the default nine refinement records the object is 8192 + 9 * 5325
    bytes. ``records_above_base=10`` folds the tenth refinement record into the
    top level so the level range stays 1..10 while the total matches the
    larger object-size reading.
    """
    if records_above_base < levels - 1:
        raise ValueError("records_above_base must be at least levels - 1")
    sizes = [BASE_RECORD_BYTES] + [LEVEL_RECORD_BYTES] * (levels - 1)
    sizes[-1] += LEVEL_RECORD_BYTES * (records_above_base - (levels - 1))
    return sizes


def records_to_mesh(records) -> TriangleMesh:
    """Reassemble a mesh from a level-1 record followed by split batches."""
    # local import: simplify depends on this module's sibling, not vice versa
    from meshwalk.pm.simplify import apply_splits

    records = sorted(records, key=lambda r: r.level)
    if not records or records[0].level != 1 or records[0].kind != KIND_BASE:
        raise MalformedRecord("record list must start with a level-1 base mesh")
    for prev, cur in zip(records, records[1:]):
        if cur.level != prev.level + 1:
            raise MalformedRecord(f"missing level {prev.level + 1}")
    base = decode_base_mesh(records[0].payload, records[0].object_id)
    splits = [s for r in records[1:] for s in decode_splits(r.payload)]
    return apply_splits(base, splits)
