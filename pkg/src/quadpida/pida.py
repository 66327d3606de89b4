"""Discrete PIDA controller with filtered derivative and acceleration terms.

Each channel realizes::

    U(s) = [kp + ki/s + kd*s*L(s) + ka*(s*L(s))**2] E(s),   L(s) = 1/(1 + Tf*s)

discretized with the bilinear (Tustin) transform. The squared filtered
differentiator is a cascade of two identical first-order stages: ``f1`` is the
filtered derivative of the error and ``f2`` the filtered derivative of ``f1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike

from .dynamics import ControlVector, QuadParams
from .errors import NonPositiveDt, NotSettled

CHANNELS = ("roll", "pitch", "yaw", "altitude")

SETTLING_BAND = 0.02


@dataclass(frozen=True)
class PidaGains:
    k_p: float
    k_i: float
    k_d: float
    k_a: float
    T_f: float
    channel: str = "roll"

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        vals = (self.k_p, self.k_i, self.k_d, self.k_a, self.T_f)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("gains must be finite")
        if self.T_f <= 0:
            raise ValueError("T_f must be positive")
        if self.k_i < 0:
            raise ValueError("k_i must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.k_p, self.k_i, self.k_d, self.k_a, self.T_f])

    @classmethod
    def from_array(cls, values: ArrayLike, channel: str) -> "PidaGains":
        kp, ki, kd, ka, tf = (float(v) for v in values)
        return cls(kp, ki, kd, ka, tf, channel)


# Reference integral, derivative, acceleration and filter values per channel.
# They come without a proportional gain; k_p = 1 on every channel keeps the
# hover closed loop stable (max Re(lambda) ~ -0.0165).
REFERENCE_GAINS = {
    "roll": PidaGains(1.0, 0.1436, 6.5097, 0.5772, 0.0437, "roll"),
    "pitch": PidaGains(1.0, 3.6869, 21.2743, 0.3429, 0.0331, "pitch"),
    "yaw": PidaGains(1.0, 0.0437, 29.9872, 23.5238, 0.0117, "yaw"),
    "altitude": PidaGains(1.0, 1.00, 11.4676, 7.5114, 0.3752, "altitude"),
}


@dataclass
class ChannelState:
    integrator: float = 0.0
    prev_error: float = 0.0
    filter_state_1: float = 0.0
    filter_state_2: float = 0.0
    primed: bool = False

    def reset(self) -> None:
        self.integrator = 0.0
        self.prev_error = 0.0
        self.filter_state_1 = 0.0
        self.filter_state_2 = 0.0
        self.primed = False

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.integrator,
                self.prev_error,
                self.filter_state_1,
                self.filter_state_2,
                1.0 if self.primed else 0.0,
            ]
        )

    @classmethod
    def from_array(cls, values: ArrayLike) -> "ChannelState":
        i, e, f1, f2, primed = (float(v) for v in values)
        return cls(i, e, f1, f2, primed != 0.0)


@dataclass(frozen=True)
class ControllerCommand:
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    altitude: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi, self.altitude])


def tustin_coefficients(T_f: float, dt: float) -> tuple[float, float]:
    """Pole and gain of the Tustin-discretized filtered differentiator s/(1+Tf s)."""
    return (2.0 * T_f - dt) / (2.0 * T_f + dt), 2.0 / (2.0 * T_f + dt)


def _advance(gains: PidaGains, state: ChannelState, e: float, dt: float):
    if not dt > 0:
        raise NonPositiveDt(f"dt must be positive, got {dt!r}")
    a, b = tustin_coefficients(gains.T_f, dt)
    # bumpless start: the first sample defines the previous error
    e_prev = state.prev_error if state.primed else e
    f1 = a * state.filter_state_1 + b * (e - e_prev)
    f2 = a * state.filter_state_2 + b * (f1 - state.filter_state_1)
    integ = state.integrator + 0.5 * dt * (e + e_prev)
    u = gains.k_p * e + gains.k_i * integ + gains.k_d * f1 + gains.k_a * f2
    return u, ChannelState(integ, e, f1, f2, True)


def update(
    gains: PidaGains, state: ChannelState, r: float, y: float, dt: float
) -> tuple[float, ChannelState]:
    """One controller sample; returns the channel output and the new state."""
    return _advance(gains, state, r - y, dt)


@dataclass
class MimoController:
    """Four decoupled PIDA channels driving (u_phi, u_theta, u_psi, u_T)."""

    gains: dict[str, PidaGains]
    params: QuadParams = field(default_factory=QuadParams)
    states: dict[str, ChannelState] = field(default_factory=dict)

    def __post_init__(self):
        missing = set(CHANNELS) - set(self.gains)
        if missing:
            raise ValueError(f"missing gains for channels {sorted(missing)}")
        for ch in CHANNELS:
            self.states.setdefault(ch, ChannelState())

    def reset(self) -> None:
        for s in self.states.values():
            s.reset()

    def gain_matrix(self) -> np.ndarray:
        return np.array([self.gains[ch].as_array() for ch in CHANNELS])

    def state_matrix(self) -> np.ndarray:
        return np.array([self.states[ch].as_array() for ch in CHANNELS])

    def load_state_matrix(self, values: np.ndarray) -> None:
        for ch, row in zip(CHANNELS, values):
            self.states[ch] = ChannelState.from_array(row)

    def update(self, command: ControllerCommand, measured: ArrayLike, dt: float) -> ControlVector:
        return mimo_update(self.gains, self.states, command, measured, dt, self.params)


def mimo_update(
    gains: dict[str, PidaGains],
    states: dict[str, ChannelState],
    command: ControllerCommand,
    measured: ArrayLike,
    dt: float,
    params: QuadParams,
) -> ControlVector:
    """Update all four channels in place and return the control vector.

    ``measured`` is ``(phi, theta, psi, altitude)`` with altitude = -z_E, so a
    positive altitude error asks for more thrust. Thrust is the hover
    feed-forward ``m*g`` plus the altitude channel output, clamped at zero; the
    altitude integrator is frozen while the clamp is active.
    """
    refs = command.as_array()
    y = np.asarray(measured, dtype=float)
    out = {}
    for ch, r, yi in zip(CHANNELS, refs, y):
        u, new_state = update(gains[ch], states[ch], float(r), float(yi), dt)
        if ch == "altitude" and params.hover_thrust + u < 0.0:
            new_state = replace(new_state, integrator=states[ch].integrator)
            u = -params.hover_thrust
        states[ch] = new_state
        out[ch] = u
    return ControlVector(
        out["roll"], out["pitch"], out["yaw"], params.hover_thrust + out["altitude"]
    )


@dataclass(frozen=True)
class StepMetrics:
    overshoot: float
    settling_time: float
    steady_state_error: float

    def as_dict(self) -> dict[str, float]:
        return {
            "overshoot_pct": self.overshoot,
            "settling_time_s": self.settling_time,
            "steady_state_error": self.steady_state_error,
        }


def step_response_metrics(
    t: ArrayLike,
    y: ArrayLike,
    reference: float,
    step_time: float = 0.0,
    initial: float | None = None,
    band: float = SETTLING_BAND,
    min_hold: float = 0.0,
) -> StepMetrics:
    """Overshoot (% of step), 2 % settling time and final error of a step response.

    The settling band is ``band * |reference - initial|`` around the reference;
    settling time is measured from ``step_time`` to the last sample outside the
    band. ``initial`` defaults to the last sample before the step. The response
    counts as settled only if it then stays in band for at least ``min_hold``
    seconds before the record ends.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    after = t >= step_time
    if not np.any(after):
        raise ValueError("no samples at or after the step time")
    if initial is None:
        before = np.flatnonzero(~after)
        initial = float(y[before[-1]]) if before.size else float(y[after][0])
    step = reference - initial
    ta, ya = t[after], y[after]
    if step == 0.0:
        err = ya - reference
        return StepMetrics(0.0, 0.0, float(abs(err[-1])))

    direction = math.copysign(1.0, step)
    excursion = np.max(direction * (ya - reference))
    overshoot = max(0.0, float(excursion)) / abs(step) * 100.0

    tol = band * abs(step)
    outside = np.flatnonzero(np.abs(ya - reference) > tol)
    if outside.size and outside[-1] == ya.size - 1:
        raise NotSettled(f"response still outside the {band:.0%} band at t={ta[-1]:.3f}")
    settling = 0.0 if outside.size == 0 else float(ta[outside[-1] + 1] - step_time)
    if ta[-1] - (step_time + settling) < min_hold:
        raise NotSettled(f"response entered the band too late to confirm settling ({settling:.3f} s)")
    return StepMetrics(overshoot, settling, float(abs(ya[-1] - reference)))
