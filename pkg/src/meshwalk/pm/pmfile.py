"""On-disk progressive-mesh file: a fixed header followed by wire records.

Header (little-endian)::

    b"MWPM"  magic
    u8       format version (1)
    u32      object_id
    u32      original vertex count
    u32      original face count
    u8       level count L
    L x u32  level boundaries
    u8       stalled flag

Then L records in level order, each in the wire format of
:mod:`meshwalk.pm.records`.
"""
from __future__ import annotations

import struct
from pathlib import Path

from meshwalk.errors import MalformedRecord
from meshwalk.pm.records import decode_base_mesh, decode_splits, pm_records, read_record, serialize_record
from meshwalk.pm.simplify import PMStream

MAGIC = b"MWPM"
VERSION = 1
_HEAD = struct.Struct("<4sBIIIB")


def dump_pm(pm: PMStream) -> bytes:
    head = _HEAD.pack(MAGIC, VERSION, pm.object_id, pm.n_vertices, pm.n_faces, pm.levels)
    bounds = struct.pack(f"<{pm.levels}I", *pm.level_boundaries) + bytes([int(pm.stalled)])
    return head + bounds + b"".join(serialize_record(r) for r in pm_records(pm))


def load_pm(data: bytes) -> PMStream:
    if len(data) < _HEAD.size:
        raise MalformedRecord("truncated PM header")
    magic, version, oid, nv, nf, levels = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise MalformedRecord("not a PM file (bad magic)")
    if version != VERSION:
        raise MalformedRecord(f"unsupported PM version {version}")
    off = _HEAD.size
    if len(data) < off + 4 * levels + 1:
        raise MalformedRecord("truncated level table")
    bounds = struct.unpack_from(f"<{levels}I", data, off)
    off += 4 * levels
    stalled = bool(data[off])
    off += 1
    records = []
    for _ in range(levels):
        rec, off = read_record(data, off)
        records.append(rec)
    if off != len(data):
        raise MalformedRecord(f"{len(data) - off} trailing bytes at offset {off}")
    for lvl, rec in enumerate(records, start=1):
        if rec.level != lvl:
            raise MalformedRecord(f"record {lvl} carries level {rec.level}")
    base = decode_base_mesh(records[0].payload, oid)
    splits = [s for r in records[1:] for s in decode_splits(r.payload)]
    if list(bounds) != sorted(bounds) or (bounds and bounds[-1] != len(splits)):
        raise MalformedRecord("level boundaries inconsistent with split count")
    return PMStream(base, splits, tuple(bounds), nv, nf, stalled)


def read_pm(path) -> PMStream:
    return load_pm(Path(path).read_bytes())


def write_pm(pm: PMStream, path) -> None:
    Path(path).write_bytes(dump_pm(pm))
