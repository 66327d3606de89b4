"""Closed-loop target approach: perception, guidance, PIDA control and dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.typing import NDArray

from . import dynamics as dyn
from . import kernels
from .dynamics import QuadParams
from .errors import BehindCamera, DegenerateDisparity, Diverged, SingularAttitude, TargetNeverAcquired
from .guidance import Guidance, GuidanceConfig
from .perception import CameraRig, camera_to_earth_offset, observe, reconstruct
from .pida import PidaGains
from .simulate import gain_matrix


@dataclass(frozen=True)
class MissionSetup:
    gains: Mapping[str, PidaGains]
    params: QuadParams = field(default_factory=QuadParams)
    x0: tuple[float, ...] = tuple(dyn.hover_state((0.0, 0.0, -5.0)))
    target: tuple[float, float, float] = (5.0, 5.0, 0.0)
    target_height: float = 1.8
    rig: CameraRig = field(default_factory=CameraRig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    dt: float = 0.001
    duration: float = 10.0
    perception_every: int = 10
    pixel_sigma: float = 0.5
    noise_sigma: tuple[float, float, float, float] = (1e-3, 1e-3, 1e-3, 1e-2)
    gyro_kf: float = 0.0
    acquisition_timeout: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (self.dt > 0 and self.duration > 0):
            raise ValueError("dt and duration must be positive")
        if self.perception_every < 1:
            raise ValueError("perception_every must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def head_point(self) -> NDArray[np.float64]:
        """Observed point of the target: its top, ``target_height`` above its base."""
        x, y, z = self.target
        return np.array([x, y, z - self.target_height])


@dataclass
class MissionResult:
    t: NDArray[np.float64]
    states: NDArray[np.float64]
    controls: NDArray[np.float64]
    refs: NDArray[np.float64]
    hold: NDArray[np.bool_]
    observations: NDArray[np.float64]
    steps: int
    status: int
    safe_distance: float

    @property
    def ok(self) -> bool:
        return self.status == kernels.OK

    def horizontal_distance(self, target) -> NDArray[np.float64]:
        d = self.states[:, dyn.X : dyn.Y + 1] - np.asarray(target, dtype=float)[:2]
        return np.hypot(d[:, 0], d[:, 1])


def run_mission(setup: MissionSetup) -> MissionResult:
    """Simulate the approach; raises :class:`Diverged` or :class:`TargetNeverAcquired`.

    Perception and guidance run every ``perception_every`` physics steps and
    their references are held in between. ``observations`` rows hold
    ``(t, u, v, Y, x, y, z)`` of the reconstructed camera-frame target (NaN
    when the detection is unusable).
    """
    n = setup.n_steps
    dt = setup.dt
    rng = np.random.default_rng(setup.seed)
    meas_noise = rng.standard_normal((n, 4)) * np.asarray(setup.noise_sigma)
    params = setup.params
    pvec = params.as_array()
    gains = gain_matrix(setup.gains)
    guidance = Guidance(setup.guidance, setup.target_height, params.gravity)
    head = setup.head_point

    states = np.zeros((n + 1, dyn.STATE_SIZE))
    controls = np.zeros((n, 4))
    refs = np.zeros((n, 4))
    hold = np.zeros(n, dtype=bool)
    obs_log = []
    ctrl = np.zeros((4, 5))
    x = np.array(setup.x0, dtype=float)
    states[0] = x
    ref = np.array([0.0, 0.0, x[dyn.PSI], -x[dyn.Z]])
    holding = False
    last_valid_t = 0.0
    last_cmd_t = 0.0
    zero_dist = np.zeros(n)

    k = 0
    status = kernels.OK
    while k < n:
        t = k * dt
        usable = False
        try:
            obs = observe(head, x, setup.rig, setup.pixel_sigma, rng)
            if obs.valid:
                p_cam = reconstruct(obs, setup.rig)
                usable = True
        except (BehindCamera, DegenerateDisparity):
            obs = None
        if usable:
            R_est = camera_to_earth_offset(p_cam, x)
            cmd = guidance.command(R_est, x, t - last_cmd_t)
            last_cmd_t = t
            ref = np.array([cmd.phi, cmd.theta, cmd.psi, cmd.altitude])
            holding = cmd.hold
            last_valid_t = t
            obs_log.append((t, obs.u, obs.v, obs.disparity, *p_cam))
        else:
            if t - last_valid_t > setup.acquisition_timeout:
                raise TargetNeverAcquired(
                    f"no usable detection between t={last_valid_t:.3f} s and t={t:.3f} s"
                )
            nan = float("nan")
            obs_log.append((t, nan, nan, nan, nan, nan, nan))

        m = min(setup.perception_every, n - k)
        refs[k : k + m] = ref
        hold[k : k + m] = holding
        steps, status = kernels.run_closed_loop(
            x,
            ctrl,
            gains,
            pvec,
            np.ascontiguousarray(refs[k : k + m]),
            np.ascontiguousarray(meas_noise[k : k + m]),
            zero_dist[:m],
            float(setup.gyro_kf),
            True,
            dt,
            states[k : k + m + 1],
            controls[k : k + m],
        )
        k += steps
        x = states[k].copy()
        if status == kernels.DIVERGED:
            raise Diverged(f"mission diverged at t={k * dt:.3f} s", k * dt)
        if status == kernels.SINGULAR:
            raise SingularAttitude(f"pitch reached +/-90 deg at t={k * dt:.3f} s")

    return MissionResult(
        dt * np.arange(n + 1),
        states,
        controls,
        refs,
        hold,
        np.array(obs_log),
        n,
        status,
        setup.guidance.safe_distance,
    )


@dataclass(frozen=True)
class MissionMetrics:
    time_to_arrive: float
    hold_time: float
    final_height: float
    min_distance_after_hold: float
    max_distance_after_hold: float
    max_tilt_after_hold: float
    final_tilt: float
    final_yaw_error: float

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.__dict__.items()}


def mission_metrics(
    t: NDArray[np.float64],
    states: NDArray[np.float64],
    refs: NDArray[np.float64],
    distance: NDArray[np.float64],
    safe_distance: float = 2.0,
    band: float = 0.2,
    window: float = 1.0,
) -> MissionMetrics:
    """Arrival and hold quality from a logged trajectory (one row per sample).

    ``distance`` is the true horizontal distance to the target. The hold
    phase starts at the first sample with ``distance <= safe_distance``.
    ``time_to_arrive`` is the start of the final uninterrupted stretch inside
    ``safe_distance +/- band`` (``inf`` when the run does not end inside it).
    ``final_tilt`` and ``final_yaw_error`` are maxima over the last
    ``window`` seconds. Angles are in degrees; hold statistics are ``nan``
    when the distance never drops to ``safe_distance``.
    """
    t = np.asarray(t, dtype=float)
    states = np.asarray(states, dtype=float)
    refs = np.asarray(refs, dtype=float)
    d = np.asarray(distance, dtype=float)
    inside = np.abs(d - safe_distance) <= band
    if inside[-1]:
        out = np.flatnonzero(~inside)
        arrive = float(t[0 if out.size == 0 else int(out[-1]) + 1])
    else:
        arrive = math.inf
    tail = t >= t[-1] - window
    final_tilt = float(np.degrees(np.max(np.abs(states[tail, dyn.PHI : dyn.THETA + 1]))))
    yaw_err = float(np.degrees(np.max(np.abs(states[tail, dyn.PSI] - refs[tail, 2]))))
    final_height = float(-states[-1, dyn.Z])
    reached = np.flatnonzero(d <= safe_distance)
    if reached.size == 0:
        nan = float("nan")
        return MissionMetrics(arrive, nan, final_height, nan, nan, nan, final_tilt, yaw_err)
    k0 = int(reached[0])
    tilt = float(np.degrees(np.max(np.abs(states[k0:, dyn.PHI : dyn.THETA + 1]))))
    return MissionMetrics(
        arrive,
        float(t[k0]),
        final_height,
        float(d[k0:].min()),
        float(d[k0:].max()),
        tilt,
        final_tilt,
        yaw_err,
    )
