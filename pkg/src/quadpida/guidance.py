"""Proportional navigation and the mapping from accelerations to references.

Pure PPN commands an acceleration normal to the relative velocity, so it
produces nothing while the drone is at rest. The mission guidance therefore
adds an approach term that drives the horizontal relative velocity toward a
closing speed along the line of sight, and switches to a latched position
hold once the drone is within the safe distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import dynamics as dyn
from .errors import TargetReached
from .pida import ControllerCommand

R_MIN = 0.1


@dataclass(frozen=True)
class RelativeKinematics:
    """Target minus drone position ``R`` and the two velocities, all earth frame."""

    R: NDArray[np.float64]
    V_M: NDArray[np.float64]
    V_T: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("R", "V_M", "V_T"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, arr)

    @property
    def v_rel(self) -> NDArray[np.float64]:
        return self.V_M - self.V_T


@dataclass(frozen=True)
class GuidanceCommand:
    a_c: NDArray[np.float64]
    phi: float
    theta: float
    psi: float
    altitude: float
    hold: bool = False

    def references(self) -> ControllerCommand:
        return ControllerCommand(self.phi, self.theta, self.psi, self.altitude)


def los_rate(rel: RelativeKinematics, r_min: float = R_MIN) -> NDArray[np.float64]:
    """Line-of-sight angular velocity ``(V_rel x R) / |R|^2``."""
    r2 = float(rel.R @ rel.R)
    if r2 < r_min * r_min:
        raise TargetReached(f"|R| = {math.sqrt(r2):.4g} m below {r_min} m")
    return np.cross(rel.v_rel, rel.R) / r2


def ppn_acceleration(
    rel: RelativeKinematics, N: float = 1.0, r_min: float = R_MIN
) -> NDArray[np.float64]:
    """Pure proportional navigation command ``N * Omega_LOS x V_rel``."""
    return N * np.cross(los_rate(rel, r_min), rel.v_rel)


def acceleration_to_references(
    a_c: ArrayLike,
    psi: float = 0.0,
    gravity: float = 9.81,
    max_tilt: float = math.radians(30.0),
) -> tuple[float, float]:
    """Roll and pitch references that tilt the hover thrust to produce ``a_c``.

    The horizontal part of ``a_c`` is rotated into the heading frame given by
    ``psi`` and inverted about hover: ``theta = -atan(a_fwd / g)`` and
    ``phi = atan(a_right / g)``, each clamped to ``max_tilt``. The vertical
    component is left to the altitude channel.
    """
    a = np.asarray(a_c, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("a_c must be finite")
    c, s = math.cos(psi), math.sin(psi)
    a_fwd = c * a[0] + s * a[1]
    a_right = -s * a[0] + c * a[1]
    theta = -math.atan(a_fwd / gravity)
    phi = math.atan(a_right / gravity)
    return (
        float(np.clip(phi, -max_tilt, max_tilt)),
        float(np.clip(theta, -max_tilt, max_tilt)),
    )


def unwrap_near(angle: float, reference: float) -> float:
    """Shift ``angle`` by multiples of 2 pi to lie within pi of ``reference``."""
    return reference + (angle - reference + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class GuidanceConfig:
    navigation_constant: float = 1.0
    safe_distance: float = 2.0
    hysteresis: float = 0.2
    # approach: closing-speed schedule and velocity-loop gain
    standoff_margin: float = 0.1
    speed_gain: float = 2.0
    max_speed: float = 3.0
    braking: float = 0.6
    velocity_gain: float = 5.0
    # hold: PD on the latched horizontal point
    hold_kp: float = 1.0
    hold_kd: float = 1.8
    max_tilt: float = math.radians(30.0)
    # altitude reference slews toward the target height at this rate (m/s)
    max_climb_rate: float = 1.5

    def __post_init__(self):
        if self.safe_distance <= 0 or self.hysteresis < 0:
            raise ValueError("safe_distance must be positive and hysteresis non-negative")
        if not 0 <= self.standoff_margin < self.safe_distance:
            raise ValueError("standoff_margin must lie in [0, safe_distance)")
        gains = (self.speed_gain, self.max_speed, self.braking, self.velocity_gain, self.max_climb_rate)
        if min(gains) <= 0:
            raise ValueError("approach gains must be positive")
        if not 0 < self.max_tilt < math.pi / 2:
            raise ValueError("max_tilt must lie in (0, pi/2)")


@dataclass
class HoldState:
    engaged: bool = False
    point: NDArray[np.float64] | None = None
    psi: float = 0.0

    def update(self, distance: float, position: ArrayLike, psi: float, cfg: GuidanceConfig) -> bool:
        """Latch at ``distance <= safe_distance``, release above it plus the band."""
        if not self.engaged and distance <= cfg.safe_distance:
            self.engaged = True
            self.point = np.array(position[:2], dtype=float)
            self.psi = psi
        elif self.engaged and distance > cfg.safe_distance + cfg.hysteresis:
            self.engaged = False
            self.point = None
        return self.engaged


def approach_acceleration(rel: RelativeKinematics, cfg: GuidanceConfig) -> NDArray[np.float64]:
    """Horizontal velocity-tracking acceleration toward a stand-off on the LOS."""
    r_h = np.array([rel.R[0], rel.R[1], 0.0])
    dist = float(np.hypot(r_h[0], r_h[1]))
    if dist < 1e-9:
        return np.zeros(3)
    los = r_h / dist
    gap = dist - (cfg.safe_distance - cfg.standoff_margin)
    # constant-deceleration braking profile, linear near the stand-off point
    speed = min(cfg.max_speed, cfg.speed_gain * abs(gap), math.sqrt(2.0 * cfg.braking * abs(gap)))
    speed = math.copysign(speed, gap)
    v_h = np.array([rel.v_rel[0], rel.v_rel[1], 0.0])
    return cfg.velocity_gain * (speed * los - v_h)


class Guidance:
    """Stateful mission guidance: PPN plus approach, then latched hold."""

    def __init__(self, cfg: GuidanceConfig, target_altitude: float, gravity: float = 9.81):
        self.cfg = cfg
        self.target_altitude = float(target_altitude)
        self.gravity = gravity
        self.hold = HoldState()
        self.altitude_ref: float | None = None

    def _slew_altitude(self, altitude: float, elapsed: float) -> float:
        if self.altitude_ref is None:
            self.altitude_ref = altitude
        step = self.cfg.max_climb_rate * elapsed
        self.altitude_ref += float(np.clip(self.target_altitude - self.altitude_ref, -step, step))
        return self.altitude_ref

    def command(
        self,
        R_est: ArrayLike,
        state: ArrayLike,
        elapsed: float = 0.0,
        V_T: ArrayLike = (0.0, 0.0, 0.0),
    ) -> GuidanceCommand:
        """References from an estimated relative position and the drone state.

        ``elapsed`` is the time since the previous call; it drives the slew of
        the altitude reference (the first call starts from the current height).
        """
        s = np.asarray(state, dtype=float)
        R_est = np.asarray(R_est, dtype=float)
        position = s[dyn.X : dyn.Z + 1]
        v_earth = dyn.direction_cosine(s[: dyn.PSI + 1]) @ s[dyn.U : dyn.W + 1]
        rel = RelativeKinematics(R_est, v_earth, np.asarray(V_T, dtype=float))
        cfg = self.cfg
        dist = float(np.hypot(R_est[0], R_est[1]))
        psi_los = unwrap_near(math.atan2(R_est[1], R_est[0]), s[dyn.PSI])

        if self.hold.update(dist, position, psi_los, cfg):
            err = position[:2] - self.hold.point
            a_c = np.zeros(3)
            a_c[:2] = -cfg.hold_kp * err - cfg.hold_kd * v_earth[:2]
            psi_c = self.hold.psi
        else:
            try:
                a_ppn = ppn_acceleration(rel, cfg.navigation_constant)
            except TargetReached:
                a_ppn = np.zeros(3)
            a_c = a_ppn + approach_acceleration(rel, cfg)
            psi_c = psi_los

        phi, theta = acceleration_to_references(
            a_c, psi_c, self.gravity, cfg.max_tilt
        )
        altitude_c = self._slew_altitude(-s[dyn.Z], elapsed)
        return GuidanceCommand(a_c, phi, theta, psi_c, altitude_c, self.hold.engaged)
