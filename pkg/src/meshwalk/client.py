"""Simulated mobile client: visibility, cache lookups, requests and timing.

Besides the cache, a client keeps what is on screen: for every object in
its area of interest, the number of contiguous levels it has received. That
is what gets rendered, even when the cache is too small to keep a copy.
On-screen state is dropped when the object leaves the area of interest; on
re-entry it starts from whatever the cache still holds.

Metric conventions
------------------
* A demand chain opens when an object enters the area of interest. Its
  response time runs until the level needed at entry is on screen, its
  latency until the base mesh is. Entries served wholly from the cache
  yield zero samples. Refinements requested later in the same visit add
  traffic but no samples.
* Each move looks up levels ``1..need`` of every visible object. A level
  that is missing at the move but arrives before the next one is credited
  as a hit for the remainder of that interval.
* Perception is averaged over the interval following each move, so a
  record that lands 30 ms after the move counts for the rest of the tick.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from meshwalk.cache import ClientCache, virtual_perception
from meshwalk.errors import PrefixViolation, RecordTooLarge
from meshwalk.scene import Viewer, step_movement
from meshwalk.server import DeviceProfile, ResolutionRequest


@dataclass
class PendingRequest:
    """Demand chain for one AOI entry of one object."""

    request_id: int
    object_id: int
    target_level: int
    issued_at: float
    base_received_at: float | None = None
    completed_at: float | None = None
    stale: bool = False

    def __post_init__(self):
        if self.target_level < 1:
            raise ValueError("target_level must be >= 1")

    @property
    def response_time(self):
        return None if self.completed_at is None else self.completed_at - self.issued_at

    @property
    def latency_time(self):
        return None if self.base_received_at is None else self.base_received_at - self.issued_at


@dataclass
class ClientStats:
    requests: int = 0
    dropped: int = 0
    orphans: int = 0
    stale_chains: int = 0
    duplicates: int = 0
    uncached: int = 0
    bytes_received: int = 0
    response: list = field(default_factory=list)    # (time, seconds)
    latency: list = field(default_factory=list)     # (time, seconds)
    perception: list = field(default_factory=list)  # (move time, interval mean)


class _Segment:
    """Piecewise-constant perception of one object since the last move."""

    __slots__ = ("best", "value", "start", "last", "acc")

    def __init__(self, best, value, now):
        self.best = best
        self.value = value
        self.start = self.last = now
        self.acc = 0.0

    def update(self, value, now):
        self.acc += self.value * (now - self.last)
        self.value = value
        self.last = now

    def close(self, now):
        span = now - self.start
        if span <= 0:
            return self.value
        return (self.acc + self.value * (now - self.last)) / span


class ClientAgent:
    """One simulated device.

    ``catalog`` maps object id to the sizes of the records this client
    streams (one record per level, or a single record in static mode).
    ``optimal`` maps object id to the progressive per-level sizes used to
    price the ideal representation at a given distance; it defaults to
    ``catalog``. ``positions`` maps object id to position (for eviction).
    """

    def __init__(self, viewer: Viewer, cache: ClientCache, profile: DeviceProfile, catalog, positions,
                 constrained: bool = True, static: bool = False, optimal=None, tick: float = 0.5):
        self.viewer = viewer
        self.cache = cache
        self.profile = profile
        self.catalog = catalog
        self.cumulative = {oid: np.cumsum([0, *sizes]).tolist() for oid, sizes in catalog.items()}
        optimal = catalog if optimal is None else optimal
        self.optimal = {oid: np.cumsum([0, *sizes]).tolist() for oid, sizes in optimal.items()}
        self.positions = positions
        self.constrained = constrained
        self.static = static
        self.tick = tick
        self.onscreen: dict[int, int] = {}
        self.pending_levels: dict[int, set] = {}
        self.chains: dict[int, PendingRequest] = {}
        self.received: dict[int, set] = {}
        self.send_queue: list[ResolutionRequest] = []
        self.stats = ClientStats()
        self._segments: dict[int, _Segment] = {}
        self._open_misses: dict[tuple[int, int], int] = {}
        self._tick_start = 0.0
        self._next_id = 0

    @property
    def client_id(self) -> int:
        return self.viewer.client_id

    @property
    def cap(self) -> int:
        return self.profile.max_level if self.constrained else 10

    def move(self, dt: float) -> None:
        self.viewer = step_movement(self.viewer, dt)

    def needed_level(self, distance_level: int) -> int:
        """Level of this client's record stream that covers ``distance_level``."""
        return 1 if self.static else distance_level

    def _perception(self, oid, best):
        return virtual_perception(best, min(self.cumulative[oid][self.onscreen[oid]], best))

    def _new_id(self) -> int:
        self._next_id += 1
        return self.client_id * 1_000_000_000 + self._next_id

    def close_interval(self, now: float) -> None:
        """Finish the perception samples of the interval that ends at ``now``."""
        for seg in self._segments.values():
            self.stats.perception.append((seg.start, seg.close(now)))
        self._segments = {}
        self._open_misses = {}

    def on_move_tick(self, visible: dict, now: float) -> list[ResolutionRequest]:
        """Handle the visible set ``{object_id: distance level}`` after a move.

        Returns one request per level that is neither on screen nor pending.
        """
        self.close_interval(now)
        self._tick_start = now
        for oid in [o for o in self.onscreen if o not in visible]:
            del self.onscreen[oid]
            ch = self.chains.pop(oid, None)
            if ch is not None:
                ch.stale = True
                self.stats.stale_chains += 1

        out = []
        for oid, dlevel in visible.items():
            entered = oid not in self.onscreen
            if entered:
                self.onscreen[oid] = self.cache.level_of(oid)
            shown = self.onscreen[oid]
            need = self.needed_level(dlevel)

            best = self.optimal[oid][dlevel]
            self._segments[oid] = _Segment(best, self._perception(oid, best), now)

            sizes = self.catalog[oid]
            for lv in range(1, need + 1):
                if not self.cache.lookup(oid, lv, sizes[lv - 1]):
                    self._open_misses[(oid, lv)] = sizes[lv - 1]

            if entered:
                ch = PendingRequest(self._new_id(), oid, need, now)
                if shown >= 1:
                    ch.base_received_at = now
                    self.stats.latency.append((now, 0.0))
                if shown >= need:
                    ch.completed_at = now
                    self.stats.response.append((now, 0.0))
                else:
                    self.chains[oid] = ch
            if need <= shown:
                continue
            pend = self.pending_levels.setdefault(oid, set())
            got = self.received.get(oid, ())
            for lv in range(shown + 1, need + 1):
                if lv in pend:
                    continue
                pend.add(lv)
                out.append(ResolutionRequest(self._new_id(), self.client_id, oid, lv, now, refetch=lv in got))
        self.stats.requests += len(out)
        self.send_queue.extend(out)
        return out

    def on_request_dropped(self, req: ResolutionRequest) -> None:
        """The uplink gave up on ``req``; the level may be asked for again."""
        self.stats.dropped += 1
        self.pending_levels.get(req.object_id, set()).discard(req.level)

    def on_record_received(self, record, now: float) -> None:
        oid, level = record.object_id, record.level
        self.stats.bytes_received += record.byte_size
        self.pending_levels.get(oid, set()).discard(level)
        self.received.setdefault(oid, set()).add(level)

        cached = False
        if self.cache.level_of(oid) + 1 == level:
            try:
                self.cache.insert(record, self.viewer, self.positions)
                cached = True
            except (RecordTooLarge, PrefixViolation):
                pass
        if cached:
            size = self._open_misses.pop((oid, level), None)
            if size is not None:
                frac = max(0.0, 1.0 - (now - self._tick_start) / self.tick)
                self.cache.hit_bytes += size * frac
                self.cache.miss_bytes -= size * frac
        else:
            self.stats.uncached += 1

        shown = self.onscreen.get(oid)
        if shown is None:
            self.stats.orphans += 1
            return
        if level != shown + 1:
            self.stats.duplicates += 1
            return
        self.onscreen[oid] = level
        seg = self._segments.get(oid)
        if seg is not None:
            seg.update(self._perception(oid, seg.best), now)
        ch = self.chains.get(oid)
        if ch is None:
            return
        if level == 1:
            ch.base_received_at = now
            self.stats.latency.append((now, now - ch.issued_at))
        if level >= ch.target_level:
            ch.completed_at = now
            self.stats.response.append((now, now - ch.issued_at))
            del self.chains[oid]
