import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshwalk.cache import ClientCache, cache_hit_ratio, victim_score, virtual_perception
from meshwalk.errors import DomainError, EmptyCache, NoAccesses, PrefixViolation, RecordTooLarge
from meshwalk.pm.records import synthetic_record
from meshwalk.scene import Viewer

from oracles import perception_reference, replay, victim_order

ORIGIN = Viewer(0, (0.0, 0.0, 0.0), 0.0)


def rec(oid, level, size):
    return synthetic_record(oid, level, size)


def test_lookup_basics():
    c = ClientCache(10_000)
    assert not c.lookup(1, 1, 100)
    c.insert(rec(1, 1, 100), ORIGIN, {1: (5.0, 0.0, 0.0)})
    assert c.lookup(1, 1)
    assert (c.hit_bytes, c.miss_bytes) == (100, 100)
    assert cache_hit_ratio(c) == 50.0


def test_hit_ratio_all_hits_and_no_accesses():
    c = ClientCache(1000)
    with pytest.raises(NoAccesses):
        cache_hit_ratio(c)
    c.insert(rec(1, 1, 100), ORIGIN, {1: (1.0, 0.0, 0.0)})
    c.lookup(1, 1)
    assert cache_hit_ratio(c) == 100.0


def test_insert_into_empty_cache_evicts_nothing():
    assert ClientCache(100).insert(rec(1, 1, 50), ORIGIN, {1: (1.0, 0.0, 0.0)}) == []


def test_far_object_loses_top_level_first():
    size = 50
    c = ClientCache(10 * size)
    pos = {1: (100.0, 0.0, 0.0), 2: (5.0, 0.0, 0.0)}
    for lv in range(1, 11):
        c.insert(rec(1, lv, size), ORIGIN, pos)
    assert c.insert(rec(2, 1, size), ORIGIN, pos) == [(1, 10)]


def test_base_meshes_go_farthest_first():
    c = ClientCache(30)
    pos = {1: (10.0, 0.0, 0.0), 2: (20.0, 0.0, 0.0), 3: (1.0, 0.0, 0.0)}
    c.insert(rec(1, 1, 10), ORIGIN, pos)
    c.insert(rec(2, 1, 10), ORIGIN, pos)
    c.insert(rec(3, 1, 10), ORIGIN, pos)
    assert c.insert(rec(3, 2, 15), ORIGIN, pos) == [(2, 1), (1, 1)]


def test_victim_order_examples():
    c = ClientCache(1000)
    pos = {1: (50.0, 0.0, 0.0), 2: (80.0, 0.0, 0.0)}
    for oid in pos:
        c.insert(rec(oid, 1, 10), ORIGIN, pos)
    assert [s.object_id for s in c.select_victims(ORIGIN, pos)] == [2, 1]

    # equal distance 10, angles 0.3 and 2.9 rad off the +x heading
    pos = {3: (10 * math.cos(0.3), 0.0, 10 * math.sin(0.3)), 4: (10 * math.cos(2.9), 0.0, 10 * math.sin(2.9))}
    assert math.isclose(victim_score(ORIGIN, 3, pos[3]).distance, victim_score(ORIGIN, 4, pos[4]).distance)
    c = ClientCache(1000)
    for oid in pos:
        c.insert(rec(oid, 1, 10), ORIGIN, pos)
    assert [s.object_id for s in c.select_victims(ORIGIN, pos)] == [4, 3]


def test_victim_order_matches_sort_oracle():
    rng = np.random.default_rng(8)
    for _ in range(50):
        pos = {o: tuple(rng.uniform(-50, 50, 3)) for o in range(10)}
        viewer = Viewer(0, tuple(rng.uniform(-10, 10, 3)), float(rng.uniform(0, 6.28)))
        c = ClientCache(10_000)
        for o in pos:
            c.insert(rec(o, 1, 10), viewer, pos)
        got = [s.object_id for s in c.select_victims(viewer, pos)]
        assert got == victim_order(viewer.position, viewer.heading, pos)


def test_victim_angle_in_range():
    rng = np.random.default_rng(1)
    for _ in range(100):
        s = victim_score(ORIGIN, 0, tuple(rng.normal(size=3)))
        assert 0.0 <= s.angle <= math.pi


def test_empty_cache_has_no_victims():
    with pytest.raises(EmptyCache):
        ClientCache(10).select_victims(ORIGIN, {})


def test_insert_errors():
    c = ClientCache(100)
    with pytest.raises(RecordTooLarge):
        c.insert(rec(1, 1, 101), ORIGIN, {1: (0.0, 0.0, 0.0)})
    with pytest.raises(PrefixViolation):
        c.insert(rec(1, 2, 10), ORIGIN, {1: (0.0, 0.0, 0.0)})
    assert c.used_bytes == 0 and len(c) == 0


def test_eviction_matches_brute_force():
    bad = [(s, r) for s in range(2000) if (r := replay(ClientCache, s)) is not None]
    assert bad == []


@settings(max_examples=100, deadline=None)
@given(st.integers(20, 400), st.lists(st.tuples(st.integers(0, 7), st.integers(10, 120),
                                                st.floats(-100, 100), st.floats(-100, 100)), max_size=60))
def test_budget_and_prefix_hold(budget, ops):
    c = ClientCache(budget)
    pos = {o: (float(o * 7), 0.0, float(-o * 3)) for o in range(8)}
    for oid, size, vx, vz in ops:
        viewer = Viewer(0, (vx, 0.0, vz), 0.0)
        level = c.level_of(oid) + 1
        if level > 10:
            continue
        try:
            c.insert(rec(oid, level, size), viewer, pos)
        except RecordTooLarge:
            pass
        assert c.used_bytes == sum(r.byte_size for r in c.entries.values()) <= budget
        for o, lv in c.entries:
            assert all((o, k) in c.entries for k in range(1, lv))


def test_perception_examples():
    assert virtual_perception(100, 100) == 1.0
    assert virtual_perception(100, 0) == 0.0
    assert virtual_perception(100, 50) == 0.875
    for args in ((0, 0), (-1, 0), (10, 11), (10, -1)):
        with pytest.raises(DomainError):
            virtual_perception(*args)


def test_perception_high_precision():
    b_o = 56117.0
    for i in range(1001):
        b = b_o * i / 1000
        assert abs(virtual_perception(b_o, b) - float(perception_reference(b_o, b))) <= 1e-12


@given(st.floats(1e-3, 1e9), st.floats(0, 1), st.floats(0, 1))
def test_perception_monotone(b_o, u, v):
    lo, hi = sorted((u, v))
    assert virtual_perception(b_o, b_o * lo) <= virtual_perception(b_o, b_o * hi)
