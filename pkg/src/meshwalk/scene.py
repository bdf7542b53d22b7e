"""Virtual world: objects, viewers, area-of-interest and movement patterns.

Viewers move on the y = 0 plane inside the square ``[0, world_size]^2``
(x and z axes) and bounce off its edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from meshwalk import kernels
from meshwalk.errors import NotVisible

TWO_PI = 2.0 * math.pi


class PatternKind(str, Enum):
    CP = "CP"    # circular
    CCP = "CCP"  # circular, rotation direction flips every turn interval
    RW = "RW"    # random walk, heading redrawn every turn interval


@dataclass(frozen=True)
class MovementPattern:
    """How a viewer steers.

    For CP and CCP the heading turns by ``turn_angle`` every
    ``turn_interval`` seconds at a constant rate, so the circle radius is
    ``speed * turn_interval / turn_angle``. RW ignores ``turn_angle`` and
    draws a fresh uniform heading from ``rng_seed`` at each interval.
    """

    kind: PatternKind = PatternKind.RW
    turn_angle: float = TWO_PI
    turn_interval: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind(self.kind))
        if self.turn_interval <= 0:
            raise ValueError("turn_interval must be positive")
        if self.kind is not PatternKind.RW and self.turn_angle == 0:
            raise ValueError("circular patterns need a non-zero turn_angle")

    @property
    def angular_rate(self) -> float:
        return self.turn_angle / self.turn_interval

    def circle_radius(self, speed: float) -> float:
        return speed / self.angular_rate


def turn_heading(seed: int, k: int) -> float:
    """Heading angle drawn at turn ``k``; a pure function of ``(seed, k)``."""
    return float(np.random.default_rng([seed, k]).uniform(0.0, TWO_PI))


@dataclass(frozen=True)
class SceneObject:
    object_id: int
    position: tuple[float, float, float]
    object_scope_radius: float = 10.0
    optimal_bytes: int = 1

    def __post_init__(self):
        if self.object_scope_radius <= 0:
            raise ValueError("object_scope_radius must be positive")
        if self.optimal_bytes <= 0:
            raise ValueError("optimal_bytes must be positive")


@dataclass(frozen=True)
class Viewer:
    """Viewer state. ``angle`` is the heading in the x-z plane; ``elapsed``
    is time since the pattern started and fixes the turn phase."""

    client_id: int
    position: tuple[float, float, float]
    angle: float
    viewer_scope_radius: float = 100.0
    pattern: MovementPattern = field(default_factory=MovementPattern)
    speed: float = 10.0
    world_size: float = 1000.0
    elapsed: float = 0.0

    def __post_init__(self):
        if self.viewer_scope_radius <= 0:
            raise ValueError("viewer_scope_radius must be positive")

    @property
    def heading(self) -> tuple[float, float, float]:
        return (math.cos(self.angle), 0.0, math.sin(self.angle))


def make_viewer(client_id, position, pattern: MovementPattern, **kw) -> Viewer:
    """Viewer whose initial heading is turn 0 of its pattern seed."""
    return Viewer(client_id, tuple(float(x) for x in position), turn_heading(pattern.rng_seed, 0),
                  pattern=pattern, **kw)


def distance(p, q) -> float:
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    dz = q[2] - p[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def aoi_overlap(viewer: Viewer, obj: SceneObject) -> bool:
    """Scopes overlap; tangency counts."""
    return distance(viewer.position, obj.position) <= viewer.viewer_scope_radius + obj.object_scope_radius


def level_for_distance(dist: float, viewer_scope: float, object_scope: float, device_cap: int = 10) -> int:
    """Distance-banded level, assuming the scopes overlap."""
    d_in = max(dist - object_scope, 0.0)
    raw = math.ceil(10.0 * (1.0 - d_in / viewer_scope) - kernels.LEVEL_EPS)
    raw = min(max(raw, 1), 10)
    return min(raw, device_cap)


def required_resolution(viewer: Viewer, obj: SceneObject, device_cap: int = 10) -> int:
    """Level 1..10 the viewer needs for ``obj``, never above ``device_cap``.

    Raises :class:`NotVisible` when the scopes do not overlap.
    """
    d = distance(viewer.position, obj.position)
    if d > viewer.viewer_scope_radius + obj.object_scope_radius:
        raise NotVisible(f"object {obj.object_id} is outside the viewer's scope")
    return level_for_distance(d, viewer.viewer_scope_radius, obj.object_scope_radius, device_cap)


def _reflect(x, z, angle, w):
    # fold back into [0, w]; a step never exceeds the world size
    if x < 0.0:
        x = -x
        angle = math.pi - angle
    elif x > w:
        x = 2.0 * w - x
        angle = math.pi - angle
    if z < 0.0:
        z = -z
        angle = -angle
    elif z > w:
        z = 2.0 * w - z
        angle = -angle
    return x, z, math.fmod(angle, TWO_PI)


def step_movement(viewer: Viewer, dt: float) -> Viewer:
    """Advance ``viewer`` by ``dt`` seconds along its pattern."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pat = viewer.pattern
    T = pat.turn_interval
    x, _, z = viewer.position
    angle = viewer.angle
    speed = viewer.speed
    t = viewer.elapsed
    end = t + dt
    while t < end:
        k = math.floor(t / T)
        seg_end = min(end, (k + 1) * T)
        length = seg_end - t
        if pat.kind is PatternKind.RW:
            x += speed * math.cos(angle) * length
            z += speed * math.sin(angle) * length
        else:
            rate = pat.angular_rate
            if pat.kind is PatternKind.CCP and k % 2 == 1:
                rate = -rate
            a1 = angle + rate * length
            r = speed / rate
            x += r * (math.sin(a1) - math.sin(angle))
            z -= r * (math.cos(a1) - math.cos(angle))
            angle = a1
        x, z, angle = _reflect(x, z, angle, viewer.world_size)
        t = seg_end
        if pat.kind is PatternKind.RW and seg_end == (k + 1) * T:
            angle = turn_heading(pat.rng_seed, k + 1)
    return replace(viewer, position=(x, 0.0, z), angle=angle, elapsed=end)


class Scene:
    """Static object layout plus array views used by the visibility kernel."""

    def __init__(self, objects, world_size: float = 1000.0):
        self.objects = list(objects)
        self.world_size = float(world_size)
        self.by_id = {o.object_id: o for o in self.objects}
        if len(self.by_id) != len(self.objects):
            raise ValueError("duplicate object ids")
        self.positions = np.array([o.position for o in self.objects], dtype=np.float64).reshape(-1, 3)
        self.scopes = np.array([o.object_scope_radius for o in self.objects], dtype=np.float64)
        self.ids = [o.object_id for o in self.objects]

    def __len__(self):
        return len(self.objects)

    def __getitem__(self, object_id) -> SceneObject:
        return self.by_id[object_id]

    def visible(self, viewers, caps):
        """``(dist, level)`` matrices for a batch of viewers (see kernels.visibility)."""
        vpos = np.array([v.position for v in viewers], dtype=np.float64).reshape(-1, 3)
        vscope = np.array([v.viewer_scope_radius for v in viewers], dtype=np.float64)
        return kernels.visibility(vpos, vscope, self.positions, self.scopes, np.asarray(caps, dtype=np.int64))


def random_scene(count: int, world_size: float, rng: np.random.Generator, object_scope_radius: float = 10.0,
                 optimal_bytes=1) -> Scene:
    """Objects at uniform random positions on the ground plane."""
    xy = rng.uniform(0.0, world_size, size=(count, 2))
    sizes = optimal_bytes if callable(optimal_bytes) else (lambda _i: optimal_bytes)
    objs = [SceneObject(i, (float(x), 0.0, float(z)), object_scope_radius, int(sizes(i)))
            for i, (x, z) in enumerate(xy.tolist())]
    return Scene(objs, world_size)
