"""Shared wireless channel: slotted CSMA/CA plus a scheduled downlink.

Times are seconds. Contention is resolved per slot: all senders whose
attempt falls in the same slot on a free channel collide. A collision
occupies the channel for the longest colliding frame; every collider backs
off with a doubled contention window.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from meshwalk import kernels

FREE = "free"
BUSY = "busy"


@dataclass
class Transmission:
    sender_id: object
    payload_bytes: int
    duration: float
    attempt: int = 1
    start: float | None = None
    tag: object = None

    def __post_init__(self):
        if self.attempt < 1:
            raise ValueError("attempt must be >= 1")


@dataclass(frozen=True)
class Granted:
    start: float
    end: float


@dataclass(frozen=True)
class Deferred:
    retry_time: float
    attempt: int


@dataclass(frozen=True)
class Collided:
    retry_time: float
    attempt: int


@dataclass(frozen=True)
class Dropped:
    attempt: int


class Channel:
    """One direction of the medium with busy-time accounting and an event log.

    ``log`` rows are ``(time, sender, event, duration)`` with events ``tx``,
    ``collision``, ``defer`` and ``drop``. A collision row carries the time
    the channel was occupied, which is the longest colliding frame.
    """

    def __init__(self, direction="uplink", bandwidth_bps=2_000_000, slot_time=20e-6, cw_min=16, cw_max=1024,
                 retry_limit=7, log_defers=False):
        if bandwidth_bps <= 0:
            raise ValueError("bandwidth_bps must be positive")
        if not 1 <= cw_min <= cw_max:
            raise ValueError("need 1 <= cw_min <= cw_max")
        if slot_time <= 0:
            raise ValueError("slot_time must be positive")
        self.direction = direction
        self.bandwidth_bps = bandwidth_bps
        self.slot_time = slot_time
        self.cw_min = cw_min
        self.cw_max = cw_max
        self.retry_limit = retry_limit
        self.log_defers = log_defers
        self.busy_start = 0.0
        self.busy_until = 0.0
        self.starts: list[float] = []
        self.ends: list[float] = []
        self.collided: list[bool] = []
        self.log: list[tuple] = []

    # -- timing helpers ----------------------------------------------------
    def duration(self, payload_bytes: int) -> float:
        return payload_bytes * 8 / self.bandwidth_bps

    def transmission(self, sender_id, payload_bytes, attempt=1, tag=None) -> Transmission:
        return Transmission(sender_id, payload_bytes, self.duration(payload_bytes), attempt, tag=tag)

    def slot_of(self, t: float) -> int:
        """Index of the first slot boundary at or after ``t``."""
        return math.ceil(t / self.slot_time - 1e-9)

    def slot_start(self, slot: int) -> float:
        return slot * self.slot_time

    def contention_window(self, attempt: int) -> int:
        return min(self.cw_min * 2 ** (attempt - 1), self.cw_max)

    def backoff_slots(self, attempt: int, rng: np.random.Generator) -> int:
        return int(rng.integers(0, self.contention_window(attempt)))

    # -- state -----------------------------------------------------------
    def sense(self, now: float) -> str:
        """Busy iff an occupation interval covers ``now`` (end-exclusive)."""
        return BUSY if self.busy_start <= now < self.busy_until else FREE

    def _occupy(self, start, end, collided):
        self.busy_start = start
        self.busy_until = end
        self.starts.append(start)
        self.ends.append(end)
        self.collided.append(collided)

    def contend(self, now: float, txs, rngs) -> list:
        """Resolve every transmission attempted at ``now`` (one slot)."""
        if self.sense(now) == BUSY:
            base = self.slot_of(self.busy_until)
            out = []
            for tx, rng in zip(txs, rngs):
                retry = self.slot_start(base + self.backoff_slots(tx.attempt, rng))
                if self.log_defers:
                    self.log.append((now, tx.sender_id, "defer", retry - now))
                out.append(Deferred(retry, tx.attempt))
            return out
        if len(txs) == 1:
            tx = txs[0]
            tx.start = now
            self._occupy(now, now + tx.duration, False)
            self.log.append((now, tx.sender_id, "tx", tx.duration))
            return [Granted(now, now + tx.duration)]
        span = max(tx.duration for tx in txs)
        self._occupy(now, now + span, True)
        base = self.slot_of(now + span)
        out = []
        for tx, rng in zip(txs, rngs):
            self.log.append((now, tx.sender_id, "collision", span))
            attempt = tx.attempt + 1
            if attempt > self.retry_limit:
                self.log.append((now + span, tx.sender_id, "drop", 0.0))
                out.append(Dropped(attempt))
            else:
                out.append(Collided(self.slot_start(base + self.backoff_slots(attempt, rng)), attempt))
        return out

    def try_transmit(self, tx: Transmission, now: float, rng: np.random.Generator):
        """Single-sender form of :meth:`contend`."""
        return self.contend(now, [tx], [rng])[0]

    # -- accounting ------------------------------------------------------
    def busy_time(self, until: float | None = None) -> float:
        """Occupied seconds (successful and collided), clipped to ``until``."""
        if not self.starts:
            return 0.0
        s = np.asarray(self.starts)
        e = np.asarray(self.ends)
        if until is not None:
            e = np.minimum(e, until)
        return float(np.sum(np.maximum(e - s, 0.0)))

    def busy_per_bin(self, width: float, n_bins: int) -> np.ndarray:
        return kernels.bin_overlap(np.asarray(self.starts), np.asarray(self.ends), width, n_bins)

    def successful_intervals(self) -> list[tuple[float, float]]:
        return [(s, e) for s, e, c in zip(self.starts, self.ends, self.collided) if not c]


def utilization(channel, elapsed: float) -> float:
    """Busy time as a percentage of ``elapsed``."""
    if elapsed <= 0:
        raise ValueError("elapsed must be positive")
    return 100.0 * channel.busy_time(elapsed) / elapsed


class ScheduledDownlink:
    """Server-driven downlink: one FIFO per client, served round-robin.

    One record is on the air at a time at full bandwidth, so active clients
    share the channel equally at record granularity and transmissions never
    overlap.
    """

    def __init__(self, bandwidth_bps=2_000_000):
        if bandwidth_bps <= 0:
            raise ValueError("bandwidth_bps must be positive")
        self.direction = "downlink"
        self.bandwidth_bps = bandwidth_bps
        self.queues: dict[object, deque] = {}
        self.ready: deque = deque()
        self.current = None
        self.busy_start = 0.0
        self.busy_until = 0.0
        self.starts: list[float] = []
        self.ends: list[float] = []
        self.collided: list[bool] = []
        self.log: list[tuple] = []

    def duration(self, payload_bytes: int) -> float:
        return payload_bytes * 8 / self.bandwidth_bps

    def sense(self, now: float) -> str:
        return BUSY if self.busy_start <= now < self.busy_until else FREE

    def enqueue(self, client_id, item, size: int) -> None:
        q = self.queues.setdefault(client_id, deque())
        if not q and client_id != (self.current[0] if self.current else None):
            self.ready.append(client_id)
        q.append((item, size))

    def pending(self, client_id=None) -> int:
        if client_id is None:
            return sum(len(q) for q in self.queues.values())
        return len(self.queues.get(client_id, ()))

    def start_next(self, now: float):
        """Begin the next transmission if idle; returns ``(client, item, end)`` or None."""
        if self.current is not None or not self.ready:
            return None
        client = self.ready.popleft()
        item, size = self.queues[client].popleft()
        dur = self.duration(size)
        self.current = (client, item)
        self.busy_start = now
        self.busy_until = now + dur
        self.starts.append(now)
        self.ends.append(now + dur)
        self.collided.append(False)
        self.log.append((now, client, "tx", dur))
        return client, item, now + dur

    def finish(self):
        """Mark the current transmission done; returns ``(client, item)``."""
        client, item = self.current
        self.current = None
        if self.queues[client]:
            self.ready.append(client)
        return client, item

    busy_time = Channel.busy_time
    busy_per_bin = Channel.busy_per_bin
    successful_intervals = Channel.successful_intervals


def overlapping_pairs(intervals) -> int:
    """Number of adjacent overlaps among intervals sorted by start (audit helper)."""
    iv = sorted(intervals)
    return sum(1 for (s0, e0), (s1, e1) in zip(iv, iv[1:]) if s1 < e0)
