"""Run configuration: INI sections, ``section.key=value`` overrides, validation."""
import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from meshwalk.errors import ConfigError, InvalidStaticPercent

MODES = ("progressive", "static_50", "static_100")
PATTERNS = ("CP", "CCP", "RW")
DEVICE_TYPES = ("TypeI", "TypeII", "mixed")
DOWNLINK_MODES = ("scheduled", "contended")


@dataclass(frozen=True)
class SceneConfig:
    world_size: float = 1000.0
    object_count: int = 100
    viewer_scope: float = 100.0
    object_scope: float = 10.0
    seed: int = 1
    records_above_base: int = 9
    manifest: str = ""


@dataclass(frozen=True)
class ClientsConfig:
    count: int = 20
    device_type: str = "TypeI"
    type_i_fraction: float = 0.5  # only used when device_type = mixed
    pattern: str = "RW"
    speed: float = 10.0
    turn_angle: float = 2 * math.pi
    turn_interval: float = 10.0
    cache_bytes: int = 2 * 1024 * 1024
    request_bytes: int = 64


@dataclass(frozen=True)
class MediumConfig:
    bandwidth_bps: int = 2_000_000
    slot_time: float = 20e-6
    cw_min: int = 16
    cw_max: int = 1024
    retry_limit: int = 7
    downlink_mode: str = "scheduled"


@dataclass(frozen=True)
class SimConfig:
    duration_s: float = 900.0
    move_tick_s: float = 0.5
    warmup_s: float = 120.0
    flush_s: float = 60.0


@dataclass(frozen=True)
class RunSection:
    mode: str = "progressive"
    constrained: bool = True


@dataclass(frozen=True)
class RunConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    clients: ClientsConfig = field(default_factory=ClientsConfig)
    medium: MediumConfig = field(default_factory=MediumConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    run: RunSection = field(default_factory=RunSection)

    @property
    def seed(self) -> int:
        return self.scene.seed

    def set(self, path: str, value) -> "RunConfig":
        """Copy with ``section.key`` replaced; strings are coerced to the field type."""
        section, key = _split_path(path)
        sec = getattr(self, section)
        kinds = {f.name: f.type for f in fields(sec)}
        if key not in kinds:
            raise ConfigError(f"unknown setting (valid: {', '.join(kinds)})", path)
        if isinstance(value, str):
            value = _coerce(value, kinds[key], path)
        return replace(self, **{section: replace(sec, **{key: value})})

    def with_overrides(self, items) -> "RunConfig":
        cfg = self
        for item in items:
            if "=" not in item:
                raise ConfigError(f"override {item!r} must look like section.key=value", item)
            k, v = item.split("=", 1)
            cfg = cfg.set(k.strip(), v.strip())
        return cfg

    def items(self):
        """``(section, key, value)`` for every setting, in declaration order."""
        for sf in fields(self):
            sec = getattr(self, sf.name)
            for f in fields(sec):
                yield sf.name, f.name, getattr(sec, f.name)

    def to_ini(self) -> str:
        out, last = [], None
        for section, key, value in self.items():
            if section != last:
                if last is not None:
                    out.append("")
                out.append(f"[{section}]")
                last = section
            out.append(f"{key} = {_format(value)}")
        return "\n".join(out) + "\n"

    def validate(self) -> "RunConfig":
        sc, cl, md, sm, rn = self.scene, self.clients, self.medium, self.sim, self.run
        checks = [
            ("scene.world_size", sc.world_size > 0, "must be positive"),
            ("scene.object_count", sc.object_count >= 1, "need at least one object"),
            ("scene.viewer_scope", sc.viewer_scope > 0, "must be positive"),
            ("scene.object_scope", sc.object_scope > 0, "must be positive"),
            ("scene.records_above_base", sc.records_above_base >= 9, "must be >= 9"),
            ("clients.count", cl.count >= 1, "need at least one client"),
            ("clients.device_type", cl.device_type in DEVICE_TYPES, f"must be one of {DEVICE_TYPES}"),
            ("clients.type_i_fraction", 0.0 <= cl.type_i_fraction <= 1.0, "must be in [0, 1]"),
            ("clients.pattern", cl.pattern in PATTERNS, f"must be one of {PATTERNS}"),
            ("clients.speed", cl.speed > 0, "must be positive"),
            ("clients.turn_interval", cl.turn_interval > 0, "must be positive"),
            ("clients.turn_angle", cl.turn_angle != 0, "must be non-zero"),
            ("clients.cache_bytes", cl.cache_bytes >= 0, "must be >= 0"),
            ("clients.request_bytes", cl.request_bytes >= 1, "must be >= 1"),
            ("medium.bandwidth_bps", md.bandwidth_bps > 0, "must be positive"),
            ("medium.slot_time", md.slot_time > 0, "must be positive"),
            ("medium.cw_min", 1 <= md.cw_min <= md.cw_max, "need 1 <= cw_min <= cw_max"),
            ("medium.retry_limit", md.retry_limit >= 1, "must be >= 1"),
            ("medium.downlink_mode", md.downlink_mode in DOWNLINK_MODES, f"must be one of {DOWNLINK_MODES}"),
            ("sim.duration_s", sm.duration_s > 0, "must be positive"),
            ("sim.move_tick_s", sm.move_tick_s > 0, "must be positive"),
            ("sim.warmup_s", 0 <= sm.warmup_s < sm.duration_s, "must be in [0, duration_s)"),
            ("sim.flush_s", sm.flush_s > 0, "must be positive"),
            ("run.mode", rn.mode in MODES, f"must be one of {MODES}"),
        ]
        for path, ok, msg in checks:
            if not ok:
                raise ConfigError(msg, path)
        return self


def static_lod_mode(config: RunConfig, percent: int) -> RunConfig:
    """Switch ``config`` to whole-object delivery at a fixed resolution."""
    if percent not in (50, 100):
        raise InvalidStaticPercent(f"static resolution must be 50 or 100, got {percent}", "run.mode")
    return config.set("run.mode", f"static_{percent}")


def load_config(path=None, overrides=()) -> RunConfig:
    """Defaults, then the INI file at ``path`` (if any), then overrides."""
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in cp.sections():
            if section not in {f.name for f in fields(RunConfig)}:
                raise ConfigError(f"unknown section in {path}", section)
            for key, value in cp[section].items():
                cfg = cfg.set(f"{section}.{key}", value)
    return cfg.with_overrides(overrides).validate()


def _split_path(path):
    parts = path.split(".")
    if len(parts) != 2 or parts[0] not in {f.name for f in fields(RunConfig)}:
        raise ConfigError("setting must be written section.key with a known section", path)
    return parts


def _coerce(text, kind, path):
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(float(text)) if float(text).is_integer() else int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {kind.__name__}", path) from None


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)



__all__ = ["RunConfig", "SceneConfig", "ClientsConfig", "MediumConfig", "SimConfig", "RunSection",
           "load_config", "static_lod_mode", "MODES", "PATTERNS"]
