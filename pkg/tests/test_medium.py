import numpy as np
import pytest

from meshwalk.engine import CsmaLink, EventKind, EventQueue
from meshwalk.medium import (BUSY, FREE, Channel, Collided, Deferred, Dropped, Granted, ScheduledDownlink,
                             overlapping_pairs, utilization)


def rngs(n, seed=0):
    return [np.random.default_rng([seed, i]) for i in range(n)]


def test_duration_and_grant():
    ch = Channel(bandwidth_bps=2_000_000)
    tx = ch.transmission("a", 1000)
    assert tx.duration == 0.004
    out = ch.try_transmit(tx, 0.0, rngs(1)[0])
    assert out == Granted(0.0, 0.004)
    assert ch.sense(0.002) == BUSY


def test_sense_end_exclusive():
    ch = Channel()
    assert ch.sense(0.0) == FREE
    ch.try_transmit(ch.transmission("a", 1000), 1.0, rngs(1)[0])
    assert ch.sense(1.0) == BUSY
    assert ch.sense(1.004) == FREE


def test_two_senders_collide():
    ch = Channel()
    out = ch.contend(0.0, [ch.transmission("a", 100), ch.transmission("b", 200)], rngs(2))
    assert all(isinstance(o, Collided) and o.attempt == 2 for o in out)
    assert ch.busy_until == pytest.approx(ch.duration(200))
    for o in out:
        assert o.retry_time >= ch.busy_until


def test_busy_channel_defers_with_window():
    ch = Channel(cw_min=4, cw_max=16)
    ch.try_transmit(ch.transmission("a", 1000), 0.0, rngs(1)[0])
    rng = np.random.default_rng(3)
    for attempt in (1, 2, 3, 4, 5):
        out = ch.try_transmit(ch.transmission("b", 10, attempt=attempt), 0.001, rng)
        assert isinstance(out, Deferred)
        slots = round(out.retry_time / ch.slot_time) - ch.slot_of(ch.busy_until)
        assert 0 <= slots < min(4 * 2 ** (attempt - 1), 16)


def test_retry_limit_drops():
    ch = Channel(retry_limit=3)
    out = ch.contend(0.0, [ch.transmission("a", 10, attempt=3), ch.transmission("b", 10, attempt=1)], rngs(2))
    assert isinstance(out[0], Dropped)
    assert isinstance(out[1], Collided)
    assert any(row[2] == "drop" for row in ch.log)


def drive(n_senders, rate, seconds, seed=0, size=64):
    """Poisson request traffic from ``n_senders`` through a CsmaLink."""
    events = EventQueue()
    ch = Channel("uplink")
    sent = []
    link = CsmaLink("uplink", ch, events, lambda k, item, now: sent.append((k, now)))
    for i in range(n_senders):
        link.add_sender(i, np.random.default_rng([seed, 3, i]))
    arrivals = np.random.default_rng([seed, 9])
    for i in range(n_senders):
        t = 0.0
        while True:
            t += arrivals.exponential(1.0 / rate)
            if t >= seconds:
                break
            events.push(t, EventKind.MOVE_TICK, i)
    while events:
        ev = events.pop()
        if ev.kind == EventKind.MOVE_TICK:
            link.submit(ev.payload, ev.time, size, ev.time)
        elif ev.kind == EventKind.UPLINK_ATTEMPT:
            link.on_attempt(ev.payload[1], ev.time)
        elif ev.kind == EventKind.TX_COMPLETE:
            link.on_complete(ev.payload[1], ev.time)
    return ch, sent, events.now


def test_twenty_senders_never_overlap():
    ch, sent, _ = drive(20, 20.0, 60.0, seed=4)
    assert len(sent) > 10_000
    ok = ch.successful_intervals()
    assert overlapping_pairs(ok) == 0
    # collisions included, occupation intervals are disjoint too
    assert overlapping_pairs(list(zip(ch.starts, ch.ends))) == 0


def test_busy_time_is_sum_of_occupations():
    ch, _, end = drive(10, 50.0, 20.0, seed=1)
    tx = sum(d for _, _, ev, d in ch.log if ev == "tx")
    coll = {}
    for t, _, ev, d in ch.log:
        if ev == "collision":
            coll[t] = d
    assert ch.busy_time() == pytest.approx(tx + sum(coll.values()), rel=1e-12)
    assert ch.busy_time(end) <= end


def test_utilization_monotone_in_load():
    u = [utilization(drive(10, rate, 30.0, seed=2)[0], 30.0) for rate in (5.0, 40.0, 200.0)]
    assert u[0] <= u[1] <= u[2]
    assert 0.0 < u[0] and u[2] < 100.0


def test_utilization_idle_and_saturated():
    ch = Channel()
    assert utilization(ch, 10.0) == 0.0
    ch, _, end = drive(5, 5000.0, 2.0, seed=3, size=1500)
    assert utilization(ch, end) > 80.0


def test_deterministic_log():
    a = drive(8, 30.0, 10.0, seed=6)[0].log
    b = drive(8, 30.0, 10.0, seed=6)[0].log
    assert a == b


def test_scheduled_downlink_round_robin():
    dl = ScheduledDownlink(8000)  # 1 byte per ms
    for item in ("a1", "a2", "a3"):
        dl.enqueue("A", item, 1000)
    dl.enqueue("B", "b1", 1000)
    order = []
    now = 0.0
    while (started := dl.start_next(now)) is not None:
        now = started[2]
        order.append(dl.finish()[1])
    assert order == ["a1", "b1", "a2", "a3"]
    assert now == pytest.approx(4.0)
    assert overlapping_pairs(dl.successful_intervals()) == 0
    assert dl.busy_time() == pytest.approx(4.0)


def test_channel_validation():
    with pytest.raises(ValueError):
        Channel(bandwidth_bps=0)
    with pytest.raises(ValueError):
        Channel(cw_min=32, cw_max=16)
