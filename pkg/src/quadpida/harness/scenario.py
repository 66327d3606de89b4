"""Scenario files: YAML documents with a fixed schema.

Every mapping is checked against its allowed keys and unknown keys raise
:class:`ConfigError`. Angles are written in degrees in the file and held in
radians in memory. A minimal step scenario::

    kind: step
    seed: 0
    dt: 0.001
    duration: 7.0
    gains: tune            # or a mapping channel -> {k_p, k_i, k_d, k_a, T_f}
    step:
      initial_altitude: 50.0
      step_time: 2.0
      roll_deg: -5.0
      pitch_deg: 10.0
      yaw_deg: 30.0
      altitude: 20.0

Sections ``quad``, ``noise``, ``sdsa``, ``mission``, ``guidance`` and
``camera`` are optional and default to the package defaults.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..dynamics import QuadParams
from ..errors import ConfigError
from ..guidance import GuidanceConfig
from ..perception import CameraRig
from ..pida import CHANNELS, PidaGains
from ..sdsa import SdsaConfig

KINDS = ("step", "mission")


@dataclass(frozen=True)
class NoiseConfig:
    measurement_sigma: tuple[float, float, float, float] = (1e-3, 1e-3, 1e-3, 1e-2)
    roll_disturbance: bool = False
    disturbance_start: float = 1.0
    disturbance_sigma: float = 1.0
    pixel_sigma: float = 0.5


@dataclass(frozen=True)
class StepConfig:
    initial_altitude: float = 50.0
    step_time: float = 2.0
    roll: float = math.radians(-5.0)
    pitch: float = math.radians(10.0)
    yaw: float = math.radians(30.0)
    altitude: float = 20.0
    control: bool = True
    settle_hold: float = 0.5


@dataclass(frozen=True)
class MissionConfig:
    initial_position: tuple[float, float, float] = (0.0, 0.0, -5.0)
    target: tuple[float, float, float] = (5.0, 5.0, 0.0)
    target_height: float = 1.8
    perception_every: int = 10
    acquisition_timeout: float = 1.0


@dataclass(frozen=True)
class TuneConfig:
    channels: tuple[str, ...] = ("yaw", "pitch", "roll", "altitude")
    rounds: int = 6
    desired_overshoot: float = 5.0
    desired_settling: float = 2.0


@dataclass(frozen=True)
class Scenario:
    kind: str
    seed: int
    dt: float = 0.001
    duration: float = 7.0
    name: str = ""
    gains: Mapping[str, PidaGains] | None = None
    quad: QuadParams = field(default_factory=QuadParams)
    gyro_kf: float = 0.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    step: StepConfig = field(default_factory=StepConfig)
    mission: MissionConfig = field(default_factory=MissionConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    camera: CameraRig = field(default_factory=CameraRig)
    sdsa: SdsaConfig = field(default_factory=SdsaConfig)
    tune: TuneConfig = field(default_factory=TuneConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not (self.dt > 0 and self.duration > 0):
            raise ConfigError("dt and duration must be positive")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @property
    def needs_tuning(self) -> bool:
        return self.gains is None

    def with_gains(self, gains: Mapping[str, PidaGains]) -> "Scenario":
        return replace(self, gains=dict(gains))


# --- parsing -----------------------------------------------------------------

_DEG_KEYS = {"roll_deg": "roll", "pitch_deg": "pitch", "yaw_deg": "yaw", "max_tilt_deg": "max_tilt"}


def _check_keys(section: str, data: Any, allowed) -> dict:
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"section {section!r} must be a mapping")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(map(str, unknown))}")
    return dict(data)


def _build(section: str, cls, data: Any, degrees=()):
    names = {f.name for f in fields(cls)}
    allowed = {k for k in names if k not in degrees.values()} if degrees else names
    allowed |= set(degrees)
    raw = _check_keys(section, data, allowed)
    kwargs = {}
    for key, value in raw.items():
        if key in degrees:
            kwargs[degrees[key]] = math.radians(float(value))
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section!r} section: {exc}") from None


def _parse_gains(data: Any) -> dict[str, PidaGains] | None:
    if data == "tune":
        return None
    raw = _check_keys("gains", data, CHANNELS)
    missing = [ch for ch in CHANNELS if ch not in raw]
    if missing:
        raise ConfigError(f"gains missing channel(s): {', '.join(missing)}")
    out = {}
    for ch in CHANNELS:
        g = _check_keys(f"gains.{ch}", raw[ch], ("k_p", "k_i", "k_d", "k_a", "T_f"))
        try:
            out[ch] = PidaGains(
                float(g["k_p"]), float(g["k_i"]), float(g["k_d"]), float(g["k_a"]), float(g["T_f"]), ch
            )
        except KeyError as exc:
            raise ConfigError(f"gains.{ch} missing {exc.args[0]}") from None
        except ValueError as exc:
            raise ConfigError(f"gains.{ch}: {exc}") from None
    return out


_TOP_KEYS = (
    "kind",
    "name",
    "seed",
    "dt",
    "duration",
    "gains",
    "quad",
    "gyro_kf",
    "noise",
    "step",
    "mission",
    "guidance",
    "camera",
    "sdsa",
    "tune",
)


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    top = _check_keys("scenario", data, _TOP_KEYS)
    for key in ("kind", "seed"):
        if key not in top:
            raise ConfigError(f"scenario needs a {key!r} entry")
    step_deg = {k: v for k, v in _DEG_KEYS.items() if v != "max_tilt"}
    try:
        return Scenario(
            kind=top["kind"],
            seed=top["seed"],
            dt=float(top.get("dt", 0.001)),
            duration=float(top.get("duration", 7.0)),
            name=str(top.get("name", "")),
            gains=_parse_gains(top.get("gains", "tune")),
            quad=_build("quad", QuadParams, top.get("quad")),
            gyro_kf=float(top.get("gyro_kf", 0.0)),
            noise=_build("noise", NoiseConfig, top.get("noise")),
            step=_build("step", StepConfig, top.get("step"), step_deg),
            mission=_build("mission", MissionConfig, top.get("mission")),
            guidance=_build("guidance", GuidanceConfig, top.get("guidance"), {"max_tilt_deg": "max_tilt"}),
            camera=_build("camera", CameraRig, top.get("camera")),
            sdsa=_build("sdsa", SdsaConfig, top.get("sdsa")),
            tune=_build("tune", TuneConfig, top.get("tune")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML: {exc}") from None
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return scenario_from_dict(data)


# --- serialization -----------------------------------------------------------


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, float):
        return float(value)
    return value


def _section(obj, degrees: Mapping[str, str] | None = None) -> dict:
    inverse = {v: k for k, v in (degrees or {}).items()}
    out = {}
    for key, value in asdict(obj).items():
        if key in inverse:
            out[inverse[key]] = math.degrees(value)
        else:
            out[key] = _plain(value)
    return out


def scenario_to_dict(scn: Scenario) -> dict:
    step_deg = {k: v for k, v in _DEG_KEYS.items() if v != "max_tilt"}
    gains: Any = "tune"
    if scn.gains is not None:
        gains = {
            ch: dict(zip(("k_p", "k_i", "k_d", "k_a", "T_f"), map(float, scn.gains[ch].as_array())))
            for ch in CHANNELS
        }
    return {
        "kind": scn.kind,
        "name": scn.name,
        "seed": scn.seed,
        "dt": scn.dt,
        "duration": scn.duration,
        "gains": gains,
        "quad": _section(scn.quad),
        "gyro_kf": scn.gyro_kf,
        "noise": _section(scn.noise),
        "step": _section(scn.step, step_deg),
        "mission": _section(scn.mission),
        "guidance": _section(scn.guidance, {"max_tilt_deg": "max_tilt"}),
        "camera": _section(scn.camera),
        "sdsa": _section(scn.sdsa),
        "tune": _section(scn.tune),
    }


def dump_scenario(scn: Scenario, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(yaml.safe_dump(scenario_to_dict(scn), sort_keys=False))
    except OSError as exc:
        raise ConfigError(f"cannot write scenario {path}: {exc}") from None
    return path


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (``step``, ``mission``, ``disturbance``)."""
    from importlib.resources import files

    path = Path(str(files("quadpida") / "scenarios" / f"{name}.yaml"))
    if not path.is_file():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return path
