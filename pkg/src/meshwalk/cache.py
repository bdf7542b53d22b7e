"""Client-side record cache with most-required-movement (MRM) replacement.

Records of an object are only useful as a prefix (base mesh, then level 2,
...), so the cache holds, per object, levels ``1..top``. When space is
needed the farthest object loses its highest level first, one level at a
time down to its base mesh, then the next farthest, and so on. Base meshes
are dropped (farthest first) only once every other object is down to
level 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from meshwalk.errors import DomainError, EmptyCache, NoAccesses, PrefixViolation, RecordTooLarge
from meshwalk.scene import distance

DEFAULT_BUDGET = 2 * 1024 * 1024


@dataclass(frozen=True)
class VictimScore:
    object_id: int
    distance: float
    angle: float

    @property
    def sort_key(self):
        return (-self.distance, -self.angle, self.object_id)


def victim_score(viewer, object_id, position) -> VictimScore:
    """Distance from the viewer and angle off its line of sight."""
    vx, vy, vz = viewer.position
    dx, dy, dz = position[0] - vx, position[1] - vy, position[2] - vz
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d == 0.0:
        return VictimScore(object_id, 0.0, 0.0)
    hx, hy, hz = viewer.heading
    cos = (hx * dx + hy * dy + hz * dz) / d
    return VictimScore(object_id, d, math.acos(min(1.0, max(-1.0, cos))))


class ClientCache:
    """Byte-budgeted map ``(object_id, level) -> record``.

    ``hit_bytes``/``miss_bytes`` accumulate over :meth:`lookup` calls.
    """

    def __init__(self, budget_bytes: int = DEFAULT_BUDGET):
        if budget_bytes < 0:
            raise ValueError("budget_bytes must be >= 0")
        self.budget_bytes = int(budget_bytes)
        self.entries: dict[tuple[int, int], object] = {}
        self.top: dict[int, int] = {}
        self.used_bytes = 0
        self.hit_bytes = 0
        self.miss_bytes = 0

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __len__(self):
        return len(self.entries)

    def level_of(self, object_id) -> int:
        """Highest cached level of ``object_id`` (0 if absent)."""
        return self.top.get(object_id, 0)

    def object_bytes(self, object_id) -> int:
        top = self.top.get(object_id, 0)
        return sum(self.entries[(object_id, lv)].byte_size for lv in range(1, top + 1))

    def lookup(self, object_id, level: int, nominal_bytes: int = 0) -> bool:
        """Hit test with byte accounting; a miss is charged ``nominal_bytes``."""
        rec = self.entries.get((object_id, level))
        if rec is not None:
            self.hit_bytes += rec.byte_size
            return True
        self.miss_bytes += nominal_bytes
        return False

    def hit_ratio(self) -> float:
        return cache_hit_ratio(self)

    def select_victims(self, viewer, positions, exclude=None) -> list[VictimScore]:
        """Cached objects in eviction order: farthest, then widest angle, then id."""
        if not self.top:
            raise EmptyCache("cache is empty")
        scores = [victim_score(viewer, oid, positions[oid]) for oid in self.top if oid != exclude]
        scores.sort(key=lambda s: s.sort_key)
        return scores

    def _remove(self, object_id, level):
        rec = self.entries.pop((object_id, level))
        self.used_bytes -= rec.byte_size
        if level == 1:
            del self.top[object_id]
        else:
            self.top[object_id] = level - 1

    def insert(self, record, viewer, positions) -> list[tuple[int, int]]:
        """Store ``record``, evicting as needed; returns the evicted keys in order.

        ``positions`` maps object id to position. The object being inserted is never a victim, so inserting
        level ``k`` needs room for that object's levels ``1..k`` overall.
        """
        oid, level, size = record.object_id, record.level, record.byte_size
        if size > self.budget_bytes:
            raise RecordTooLarge(f"record of {size} bytes exceeds budget {self.budget_bytes}")
        key = (oid, level)
        if key in self.entries:
            return []
        if level != self.top.get(oid, 0) + 1:
            raise PrefixViolation(f"object {oid}: level {level} needs levels 1..{level - 1} cached first")
        own = self.object_bytes(oid)
        if own + size > self.budget_bytes:
            raise RecordTooLarge(
                f"object {oid} would need {own + size} bytes, budget is {self.budget_bytes}")

        evicted = []
        need = self.used_bytes + size - self.budget_bytes
        if need > 0:
            order = self.select_victims(viewer, positions, exclude=oid)
            for s in order:
                while need > 0 and self.top[s.object_id] > 1:
                    lv = self.top[s.object_id]
                    freed = self.entries[(s.object_id, lv)].byte_size
                    self._remove(s.object_id, lv)
                    evicted.append((s.object_id, lv))
                    need -= freed
                if need <= 0:
                    break
            if need > 0:
                for s in order:
                    freed = self.entries[(s.object_id, 1)].byte_size
                    self._remove(s.object_id, 1)
                    evicted.append((s.object_id, 1))
                    need -= freed
                    if need <= 0:
                        break
        self.entries[key] = record
        self.top[oid] = level
        self.used_bytes += size
        return evicted


def virtual_perception(optimal_bytes: float, cached_bytes: float) -> float:
    """Perceived quality ``1 - ((B_o - B_o*) / B_o) ** 3`` of a partially held object."""
    if optimal_bytes <= 0:
        raise DomainError("optimal size must be positive")
    if cached_bytes < 0 or cached_bytes > optimal_bytes:
        raise DomainError(f"cached bytes {cached_bytes} outside [0, {optimal_bytes}]")
    missing = (optimal_bytes - cached_bytes) / optimal_bytes
    return 1.0 - missing * missing * missing


def cache_hit_ratio(cache: ClientCache) -> float:
    """Percentage of looked-up bytes served from the cache."""
    total = cache.hit_bytes + cache.miss_bytes
    if total <= 0:
        raise NoAccesses("no lookups recorded")
    return 100.0 * cache.hit_bytes / total
