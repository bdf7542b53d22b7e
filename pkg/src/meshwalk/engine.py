"""Discrete-event simulation of clients streaming progressive records.

One run is a single-threaded event loop. Events are ordered by
``(time, sequence)``; the sequence number is assigned at push time, so ties
resolve in scheduling order and reruns are bit-identical.
"""
from __future__ import annotations

import csv
import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from meshwalk import kernels
from meshwalk.cache import ClientCache
from meshwalk.client import ClientAgent
from meshwalk.config import RunConfig
from meshwalk.errors import ConfigError
from meshwalk.medium import Channel, Collided, Deferred, Dropped, Granted, ScheduledDownlink
from meshwalk.pm.records import synthetic_object_sizes
from meshwalk.scene import MovementPattern, make_viewer, random_scene
from meshwalk.server import DeviceProfile, ObjectStore, Server, load_manifest

# RNG stream tags: every stream is default_rng([seed, tag, index])
TAG_PLACEMENT = 0
TAG_VIEWER = 1
TAG_PATTERN = 2
TAG_UPLINK = 3
TAG_DOWNLINK = 4

METRICS = ("response_time", "latency_time", "cache_hit_ratio", "virtual_perception",
           "uplink_utilization", "downlink_utilization", "requests_per_minute",
           "dropped_requests", "bytes_delivered")


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, tag, index])


class EventKind(IntEnum):
    MOVE_TICK = 0
    UPLINK_ATTEMPT = 1
    TX_COMPLETE = 2
    RECORD_DELIVERED = 3
    METRIC_FLUSH = 4


@dataclass(order=True)
class SimEvent:
    time: float
    sequence: int
    kind: EventKind = field(compare=False)
    payload: object = field(default=None, compare=False)


class EventQueue:
    def __init__(self):
        self._heap: list[SimEvent] = []
        self._seq = 0
        self.now = 0.0

    def __len__(self):
        return len(self._heap)

    def push(self, time: float, kind: EventKind, payload=None) -> SimEvent:
        if time < self.now:
            raise RuntimeError(f"event at {time} scheduled in the past (now {self.now})")
        ev = SimEvent(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def peek(self) -> SimEvent:
        return self._heap[0]

    def pop(self) -> SimEvent:
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev


class _Sender:
    __slots__ = ("key", "queue", "rng", "attempt", "active")

    def __init__(self, key, rng):
        self.key = key
        self.queue = deque()
        self.rng = rng
        self.attempt = 1
        self.active = False


class CsmaLink:
    """A CSMA channel plus its FIFO senders.

    Attempts are bucketed by slot index; one UPLINK_ATTEMPT event resolves
    every sender that picked that slot, which is where collisions come from.
    """

    def __init__(self, name, channel: Channel, events: EventQueue, on_sent, on_drop=None):
        self.name = name
        self.channel = channel
        self.events = events
        self.on_sent = on_sent
        self.on_drop = on_drop
        self.senders: dict[object, _Sender] = {}
        self.attempts_by_slot: dict[int, list] = {}

    def add_sender(self, key, rng):
        self.senders[key] = _Sender(key, rng)

    def submit(self, key, item, size: int, now: float):
        s = self.senders[key]
        s.queue.append((item, size))
        if not s.active:
            s.active = True
            self._schedule(s, now)

    def pending(self) -> int:
        return sum(len(s.queue) for s in self.senders.values())

    def _schedule(self, s, t):
        slot = self.channel.slot_of(t)
        bucket = self.attempts_by_slot.get(slot)
        if bucket is None:
            bucket = self.attempts_by_slot[slot] = []
            # a slot boundary within float noise of now may sit a few ulps behind it
            at = max(self.channel.slot_start(slot), self.events.now)
            self.events.push(at, EventKind.UPLINK_ATTEMPT, (self.name, slot))
        bucket.append(s)

    def on_attempt(self, slot, now):
        group = self.attempts_by_slot.pop(slot)
        txs = [self.channel.transmission(s.key, s.queue[0][1], s.attempt) for s in group]
        outcomes = self.channel.contend(now, txs, [s.rng for s in group])
        for s, out in zip(group, outcomes):
            if isinstance(out, Granted):
                self.events.push(out.end, EventKind.TX_COMPLETE, (self.name, s.key))
            elif isinstance(out, (Deferred, Collided)):
                s.attempt = out.attempt
                self._schedule(s, out.retry_time)
            elif isinstance(out, Dropped):
                item, _ = s.queue.popleft()
                s.attempt = 1
                if self.on_drop is not None:
                    self.on_drop(s.key, item, now)
                self._next(s, self.channel.busy_until)

    def on_complete(self, key, now):
        s = self.senders[key]
        item, _ = s.queue.popleft()
        s.attempt = 1
        self.on_sent(key, item, now)
        self._next(s, now)

    def _next(self, s, t):
        if s.queue:
            self._schedule(s, t)
        else:
            s.active = False


@dataclass
class MetricsReport:
    """Per-minute series plus full-run and post-warm-up summaries."""

    config: RunConfig
    seed: int
    series: dict
    summary: dict
    summary_post: dict
    counters: dict
    channels: dict = field(default_factory=dict, repr=False)

    @property
    def minutes(self) -> int:
        return len(next(iter(self.series.values())))

    def metrics_rows(self):
        for m in METRICS:
            for i, v in enumerate(self.series[m]):
                yield i + 1, m, _fmt(v)

    def write(self, out_dir, trace: bool = False) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["minute", "metric", "value"])
            w.writerows(self.metrics_rows())
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "full", "post_warmup"])
            for m in METRICS:
                w.writerow([m, _fmt(self.summary[m]), _fmt(self.summary_post[m])])
            for k, v in self.counters.items():
                w.writerow([k, _fmt(v), ""])
            w.writerow(["seed", self.seed, ""])
        with open(out / "config.ini", "w") as fh:
            fh.write(self.config.to_ini())
        if trace:
            with open(out / "events.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["channel", "time", "sender", "event", "duration"])
                for name, ch in self.channels.items():
                    for t, sender, ev, dur in ch.log:
                        w.writerow([name, _fmt(t), sender, ev, _fmt(dur)])
        return out


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _catalogs(cfg: RunConfig, store: ObjectStore, ids):
    """(records streamed per object, progressive sizes per object)."""
    progressive = {oid: store.level_sizes(oid) for oid in ids}
    mode = cfg.run.mode
    if mode == "progressive":
        return progressive, progressive
    upto = 5 if mode == "static_50" else 10
    static = {oid: [sum(sizes[:upto])] for oid, sizes in progressive.items()}
    return static, progressive


class Simulation:
    def __init__(self, config: RunConfig, trace: bool = False):
        self.config = cfg = config.validate()
        self.trace = trace
        seed = cfg.scene.seed
        sc, cl, md = cfg.scene, cfg.clients, cfg.medium
        self.events = EventQueue()

        if sc.manifest:
            pstore = load_manifest(sc.manifest)
            ids = pstore.object_ids
        else:
            pstore = ObjectStore()
            ids = list(range(sc.object_count))
            sizes = synthetic_object_sizes(sc.records_above_base)
            for oid in ids:
                pstore.add_synthetic(oid, sizes)
        self.scene = random_scene(len(ids), sc.world_size, stream(seed, TAG_PLACEMENT), sc.object_scope)
        # scene ids are 0..n-1; map them onto store ids in order
        self.object_ids = ids
        self.catalog, progressive = _catalogs(cfg, pstore, ids)
        if cfg.run.mode == "progressive":
            self.store = pstore
        else:
            self.store = ObjectStore()
            for oid in ids:
                self.store.add_synthetic(oid, self.catalog[oid])
        self.positions = {ids[j]: tuple(self.scene.positions[j]) for j in range(len(ids))}

        self.uplink = Channel("uplink", md.bandwidth_bps, md.slot_time, md.cw_min, md.cw_max, md.retry_limit)
        self.up = CsmaLink("uplink", self.uplink, self.events, self._request_arrived, self._request_dropped)
        if md.downlink_mode == "scheduled":
            self.downlink = ScheduledDownlink(md.bandwidth_bps)
            self.down = None
        else:
            self.downlink = Channel("downlink", md.bandwidth_bps, md.slot_time, md.cw_min, md.cw_max,
                                    md.retry_limit)
            self.down = CsmaLink("downlink", self.downlink, self.events, self._record_sent, self._record_lost)
        self.server = Server(self.store, self._enqueue_record, constrained=cfg.run.constrained)

        static = cfg.run.mode != "progressive"
        n_type_i = cl.count if cl.device_type == "TypeI" else 0 if cl.device_type == "TypeII" else \
            int(round(cl.type_i_fraction * cl.count))
        self.agents: list[ClientAgent] = []
        for i in range(cl.count):
            rng = stream(seed, TAG_VIEWER, i)
            pos = (float(rng.uniform(0, sc.world_size)), 0.0, float(rng.uniform(0, sc.world_size)))
            pattern = MovementPattern(cl.pattern, cl.turn_angle, cl.turn_interval,
                                      int(stream(seed, TAG_PATTERN, i).integers(2**62)))
            viewer = make_viewer(i, pos, pattern, viewer_scope_radius=sc.viewer_scope, speed=cl.speed,
                                 world_size=sc.world_size)
            profile = DeviceProfile(i, "TypeI" if i < n_type_i else "TypeII")
            self.server.register(profile)
            agent = ClientAgent(viewer, ClientCache(cl.cache_bytes), profile, self.catalog, self.positions,
                                constrained=cfg.run.constrained, static=static, optimal=progressive,
                                tick=cfg.sim.move_tick_s)
            self.agents.append(agent)
            self.up.add_sender(i, stream(seed, TAG_UPLINK, i))
            if self.down is not None:
                self.down.add_sender(i, stream(seed, TAG_DOWNLINK, i))

        sm = cfg.sim
        self.n_bins = math.ceil(sm.duration_s / sm.flush_s - 1e-9)
        self.hits = np.zeros(self.n_bins)
        self.misses = np.zeros(self.n_bins)
        self.requests = np.zeros(self.n_bins, dtype=np.int64)
        self.dropped = np.zeros(self.n_bins, dtype=np.int64)
        self.delivered = np.zeros(self.n_bins, dtype=np.int64)
        self._last_hits = 0
        self._last_misses = 0
        self.bytes_delivered = 0
        self.bytes_lost = 0
        self.request_log: list[tuple] = []
        self.delivery_log: list[tuple] = []
        self.clock_violations = 0

    # -- wiring --------------------------------------------------------------
    def _bin(self, t):
        return min(int(t // self.config.sim.flush_s), self.n_bins - 1)

    def _request_arrived(self, client_id, req, now):
        self.server.handle_request(req)

    def _request_dropped(self, client_id, req, now):
        self.dropped[self._bin(now)] += 1
        self.agents[client_id].on_request_dropped(req)

    def _enqueue_record(self, client_id, record):
        now = self.events.now
        if self.down is None:
            self.downlink.enqueue(client_id, record, record.byte_size)
            self._start_downlink(now)
        else:
            self.down.submit(client_id, record, record.byte_size, now)

    def _start_downlink(self, now):
        started = self.downlink.start_next(now)
        if started is not None:
            self.events.push(started[2], EventKind.TX_COMPLETE, ("downlink", None))

    def _record_sent(self, client_id, record, now):
        self.events.push(now, EventKind.RECORD_DELIVERED, (client_id, record))

    def _record_lost(self, client_id, record, now):
        self.bytes_lost += record.byte_size

    # -- loop ----------------------------------------------------------------
    def _tick(self, now):
        sm = self.config.sim
        if now > 0:
            for a in self.agents:
                a.move(sm.move_tick_s)
        caps = [a.cap for a in self.agents]
        _, level = self.scene.visible([a.viewer for a in self.agents], caps)
        ids = self.object_ids
        b = self._bin(now)
        req_bytes = self.config.clients.request_bytes
        for i, a in enumerate(self.agents):
            row = level[i]
            cols = np.flatnonzero(row)
            visible = {ids[j]: int(row[j]) for j in cols}
            reqs = a.on_move_tick(visible, now)
            self.requests[b] += len(reqs)
            for r in reqs:
                if self.trace:
                    self.request_log.append((now, r.client_id, r.object_id, r.level))
                self.up.submit(i, r, req_bytes, now)
        nxt = now + sm.move_tick_s
        if nxt < sm.duration_s:
            self.events.push(nxt, EventKind.MOVE_TICK)

    def _flush(self, now):
        hits = sum(a.cache.hit_bytes for a in self.agents)
        misses = sum(a.cache.miss_bytes for a in self.agents)
        b = min(max(math.ceil(now / self.config.sim.flush_s - 1e-9) - 1, 0), self.n_bins - 1)
        self.hits[b] += hits - self._last_hits
        self.misses[b] += misses - self._last_misses
        self._last_hits, self._last_misses = hits, misses

    def run(self) -> MetricsReport:
        sm = self.config.sim
        ev = self.events
        for k in range(1, self.n_bins + 1):
            ev.push(min(k * sm.flush_s, sm.duration_s), EventKind.METRIC_FLUSH)
        ev.push(0.0, EventKind.MOVE_TICK)
        last = 0.0
        while ev:
            nxt = ev.peek()
            if nxt.time > sm.duration_s or (nxt.time == sm.duration_s and nxt.kind != EventKind.METRIC_FLUSH):
                break
            e = ev.pop()
            if e.time < last:
                self.clock_violations += 1
            last = e.time
            kind = e.kind
            if kind == EventKind.MOVE_TICK:
                self._tick(e.time)
            elif kind == EventKind.UPLINK_ATTEMPT:
                name, slot = e.payload
                (self.up if name == "uplink" else self.down).on_attempt(slot, e.time)
            elif kind == EventKind.TX_COMPLETE:
                name, key = e.payload
                if name == "uplink":
                    self.up.on_complete(key, e.time)
                elif self.down is None:
                    client_id, record = self.downlink.finish()
                    self._deliver(client_id, record, e.time)
                    self._start_downlink(e.time)
                else:
                    self.down.on_complete(key, e.time)
            elif kind == EventKind.RECORD_DELIVERED:
                client_id, record = e.payload
                self._deliver(client_id, record, e.time)
            elif kind == EventKind.METRIC_FLUSH:
                self._flush(e.time)
        for a in self.agents:
            a.close_interval(sm.duration_s)
        return self._report()

    def _deliver(self, client_id, record, now):
        self.bytes_delivered += record.byte_size
        self.delivered[self._bin(now)] += record.byte_size
        if self.trace:
            self.delivery_log.append((now, client_id, record.object_id, record.level))
        self.agents[client_id].on_record_received(record, now)

    # -- metrics ---------------------------------------------------------------
    def _report(self) -> MetricsReport:
        cfg = self.config
        sm = cfg.sim
        n, width = self.n_bins, sm.flush_s
        widths = np.minimum(width, sm.duration_s - width * np.arange(n))
        warm = sm.warmup_s

        def samples(attr):
            pts = [p for a in self.agents for p in getattr(a.stats, attr)]
            t = np.array([p[0] for p in pts], dtype=float)
            v = np.array([p[1] for p in pts], dtype=float)
            return t, v

        def per_bin_mean(t, v):
            idx = np.minimum((t // width).astype(np.int64), n - 1)
            s = np.bincount(idx, weights=v, minlength=n)
            c = np.bincount(idx, minlength=n)
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.where(c > 0, s / np.maximum(c, 1), np.nan)

        def pooled(t, v, lo):
            sel = v[t >= lo]
            return float(sel.mean()) if sel.size else math.nan

        series, full, post = {}, {}, {}
        for name, attr in (("response_time", "response"), ("latency_time", "latency"),
                           ("virtual_perception", "perception")):
            t, v = samples(attr)
            series[name] = per_bin_mean(t, v)
            full[name] = pooled(t, v, 0.0)
            post[name] = pooled(t, v, warm)

        looked = self.hits + self.misses
        with np.errstate(invalid="ignore", divide="ignore"):
            series["cache_hit_ratio"] = np.where(looked > 0, 100.0 * self.hits / np.maximum(looked, 1), np.nan)
        pb = self._post_bins()

        def ratio(h, m):
            return 100.0 * h / (h + m) if h + m > 0 else math.nan

        full["cache_hit_ratio"] = ratio(self.hits.sum(), self.misses.sum())
        post["cache_hit_ratio"] = ratio(self.hits[pb].sum(), self.misses[pb].sum())

        for name, ch in (("uplink_utilization", self.uplink), ("downlink_utilization", self.downlink)):
            ends = np.minimum(np.asarray(ch.ends, dtype=float), sm.duration_s)
            busy = kernels.bin_overlap(np.asarray(ch.starts, dtype=float), ends, width, n)
            series[name] = 100.0 * busy / widths
            full[name] = 100.0 * busy.sum() / sm.duration_s
            post[name] = 100.0 * busy[pb].sum() / widths[pb].sum()

        for name, arr in (("requests_per_minute", self.requests), ("dropped_requests", self.dropped),
                          ("bytes_delivered", self.delivered)):
            series[name] = arr.astype(np.int64)
            full[name] = float(arr.sum() * 60.0 / sm.duration_s) if name == "requests_per_minute" \
                else float(arr.sum())
            post[name] = float(arr[pb].sum() * 60.0 / widths[pb].sum()) if name == "requests_per_minute" \
                else float(arr[pb].sum())

        st = [a.stats for a in self.agents]
        pending_down = (self.downlink.pending() + (self.downlink.current is not None)) if self.down is None \
            else self.down.pending()
        in_queue = self._queued_bytes()
        counters = {
            "requests_total": int(self.requests.sum()),
            "requests_dropped": int(self.dropped.sum()),
            "requests_handled": self.server.requests_handled,
            "orphan_records": sum(s.orphans for s in st),
            "stale_chains": sum(s.stale_chains for s in st),
            "bytes_enqueued": self.server.bytes_enqueued,
            "bytes_delivered": self.bytes_delivered,
            "bytes_in_flight": in_queue,
            "bytes_lost": self.bytes_lost,
            "records_pending": pending_down,
            "clock_violations": self.clock_violations,
        }
        return MetricsReport(cfg, cfg.scene.seed, series, full, post, counters,
                             {"uplink": self.uplink, "downlink": self.downlink})

    def _post_bins(self):
        sm = self.config.sim
        starts = sm.flush_s * np.arange(self.n_bins)
        sel = starts >= sm.warmup_s - 1e-9
        if not sel.any():
            sel[-1] = True
        return sel

    def _queued_bytes(self) -> int:
        if self.down is None:
            q = sum(size for dq in self.downlink.queues.values() for _, size in dq)
            if self.downlink.current is not None:
                q += self.downlink.current[1].byte_size
            return q
        return sum(size for s in self.down.senders.values() for _, size in s.queue)


def run(config: RunConfig, trace: bool = False) -> MetricsReport:
    """Simulate one configuration; identical config and seed give identical reports."""
    if config.clients.count < 1:
        raise ConfigError("need at least one client", "clients.count")
    return Simulation(config, trace=trace).run()
