import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshwalk.errors import NotVisible
from meshwalk.scene import (MovementPattern, PatternKind, SceneObject, Viewer, aoi_overlap, level_for_distance,
                            make_viewer, random_scene, required_resolution, step_movement, turn_heading)


def viewer_at(pos, scope=10.0, **kw):
    return Viewer(0, pos, 0.0, viewer_scope_radius=scope, **kw)


def test_aoi_examples():
    v = viewer_at((0.0, 0.0, 0.0))
    assert not aoi_overlap(v, SceneObject(1, (25.0, 0.0, 0.0), 5.0))
    assert aoi_overlap(v, SceneObject(1, (15.0, 0.0, 0.0), 5.0))


def test_aoi_symmetric_in_radii():
    rng = np.random.default_rng(0)
    for _ in range(200):
        r1, r2, d = rng.uniform(1, 50, 3) * [1, 1, 3]
        a = aoi_overlap(viewer_at((0.0, 0.0, 0.0), r1), SceneObject(1, (d, 0.0, 0.0), r2))
        b = aoi_overlap(viewer_at((0.0, 0.0, 0.0), r2), SceneObject(1, (0.0, 0.0, d), r1))
        assert a == b


def _level_oracle(d_in: Fraction, scope: Fraction, cap: int) -> int:
    x = 10 * (1 - d_in / scope)
    raw = math.ceil(x)
    return min(max(raw, 1), 10, cap)


@pytest.mark.parametrize("cap", [1, 8, 10])
def test_level_table(cap):
    scope = 100
    for k in range(21):
        d_in = Fraction(5 * k * scope, 100)  # 0, 0.05, ..., 1.0 of the scope
        got = level_for_distance(float(d_in) + 10.0, float(scope), 10.0, cap)
        assert got == _level_oracle(d_in, Fraction(scope), cap), k


def test_level_examples():
    obj = SceneObject(1, (110.0, 0.0, 0.0), 10.0)
    assert required_resolution(viewer_at((100.0, 0.0, 0.0), 100.0), obj, 8) == 8
    assert level_for_distance(10.0 + 45.0, 100.0, 10.0, 10) == 6
    assert level_for_distance(10.0 + 99.999, 100.0, 10.0, 10) == 1
    with pytest.raises(NotVisible):
        required_resolution(viewer_at((0.0, 0.0, 0.0), 100.0), SceneObject(1, (111.0, 0.0, 0.0), 10.0))


@given(st.floats(0, 110), st.floats(0, 110), st.integers(1, 10))
def test_level_monotone_and_bounded(d1, d2, cap):
    lo, hi = sorted((d1, d2))
    a = level_for_distance(lo, 100.0, 10.0, cap)
    b = level_for_distance(hi, 100.0, 10.0, cap)
    assert 1 <= b <= a <= cap


def test_visible_matches_all_pairs():
    rng = np.random.default_rng(3)
    scene = random_scene(100, 500.0, rng, 10.0)
    v = make_viewer(0, (250.0, 0.0, 250.0), MovementPattern("RW", rng_seed=4), viewer_scope_radius=80.0,
                    world_size=500.0)
    for _ in range(300):
        v = step_movement(v, 0.5)
        _, level = scene.visible([v], [8])
        want = {o.object_id for o in scene.objects if aoi_overlap(v, o)}
        assert set(np.flatnonzero(level[0]).tolist()) == want
        for oid in want:
            assert level[0][oid] == required_resolution(v, scene[oid], 8)


def test_cp_closes_circle():
    pat = MovementPattern("CP", turn_angle=2 * math.pi, turn_interval=10.0)
    v = Viewer(0, (500.0, 0.0, 500.0), 0.3, pattern=pat, speed=10.0)
    r = pat.circle_radius(10.0)
    period = 2 * math.pi * r / 10.0
    start = v.position
    steps = 40
    for _ in range(steps):
        v = step_movement(v, period / steps)
    assert math.dist(v.position, start) < 1e-9


def _angle_oracle(a0, rate, T, t):
    """Scalar accumulator for CCP: +rate on even intervals, -rate on odd ones."""
    acc, s, k = a0, 0.0, 0
    while s < t:
        e = min(t, (k + 1) * T)
        acc += (rate if k % 2 == 0 else -rate) * (e - s)
        s, k = e, k + 1
    return acc


def test_ccp_heading_against_accumulator():
    pat = MovementPattern("CCP", turn_angle=math.pi / 2, turn_interval=4.0)
    v = Viewer(0, (500.0, 0.0, 500.0), 1.0, pattern=pat, speed=5.0)
    t = 0.0
    for _ in range(100):
        v = step_movement(v, 0.7)
        t += 0.7
        want = _angle_oracle(1.0, pat.angular_rate, 4.0, t)
        diff = (v.angle - want + math.pi) % (2 * math.pi) - math.pi
        assert abs(diff) < 1e-9


@pytest.mark.parametrize("kind", ["RW", "CCP"])
def test_same_seed_same_trajectory(kind):
    def path():
        v = make_viewer(0, (100.0, 0.0, 100.0), MovementPattern(kind, turn_angle=1.0, rng_seed=77),
                        world_size=200.0, speed=30.0)
        out = []
        for _ in range(100):
            v = step_movement(v, 0.5)
            out.append((v.position, v.angle))
        return out

    assert path() == path()


def test_turn_heading_pure():
    assert turn_heading(5, 3) == turn_heading(5, 3)
    assert turn_heading(5, 3) != turn_heading(5, 4)


@pytest.mark.parametrize("kind", list(PatternKind))
def test_million_steps_stay_in_world(kind):
    w = 50.0
    v = make_viewer(0, (25.0, 0.0, 25.0), MovementPattern(kind, turn_angle=0.5, turn_interval=3.0, rng_seed=1),
                    world_size=w, speed=40.0)
    xs = np.empty(1_000_000)
    zs = np.empty(1_000_000)
    for i in range(1_000_000):
        v = step_movement(v, 0.25)
        xs[i], zs[i] = v.position[0], v.position[2]
    assert xs.min() >= 0.0 and xs.max() <= w
    assert zs.min() >= 0.0 and zs.max() <= w


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(list(PatternKind)), st.floats(0, 1000), st.floats(0, 1000), st.floats(0.05, 3.0),
       st.floats(1.0, 90.0), st.integers(0, 2**31))
def test_bounds_property(kind, x, z, dt, speed, seed):
    v = make_viewer(0, (x, 0.0, z), MovementPattern(kind, turn_angle=2.0, rng_seed=seed), speed=speed)
    for _ in range(200):
        v = step_movement(v, dt)
        assert 0.0 <= v.position[0] <= 1000.0 and 0.0 <= v.position[2] <= 1000.0
        assert abs(math.hypot(*v.heading) - 1.0) < 1e-12


def test_pattern_validation():
    with pytest.raises(ValueError):
        MovementPattern("CP", turn_angle=0.0)
    with pytest.raises(ValueError):
        MovementPattern("XX")
    with pytest.raises(ValueError):
        SceneObject(1, (0.0, 0.0, 0.0), 0.0)
