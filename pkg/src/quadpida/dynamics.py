"""Nonlinear 6-DOF quadcopter model.

State vectors are flat float arrays of length 12, ordered::

    [phi, theta, psi, p, q, r, u, v, w, x_E, y_E, z_E]

Euler angles are ZYX (yaw-pitch-roll), body rates and velocities are in the
body frame, and the earth frame is north-east-down, so altitude is ``-z_E``.
The time derivative returned by :func:`state_derivative` uses the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import Diverged, SingularAttitude

PHI, THETA, PSI, P, Q, R, U, V, W, X, Y, Z = range(12)
STATE_SIZE = 12

EPS_SINGULAR = 1e-6
DIVERGENCE_LIMIT = 1e6
MAX_DT = 0.05

STATE_NAMES = ("phi", "theta", "psi", "p", "q", "r", "u", "v", "w", "x_E", "y_E", "z_E")


@dataclass(frozen=True)
class QuadParams:
    """Physical constants of the airframe (defaults: 0.8 kg research quad)."""

    mass: float = 0.8
    arm_length: float = 0.2
    gravity: float = 9.81
    force_to_torque: float = 3e-5
    inertia_xx: float = 2.28e-2
    inertia_yy: float = 3.10e-2
    inertia_zz: float = 4.40e-2
    rotor_inertia: float = 8.3e-5

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"QuadParams.{name} must be finite and > 0, got {value!r}")
        ixx, iyy, izz = self.inertia_xx, self.inertia_yy, self.inertia_zz
        if ixx + iyy < izz or iyy + izz < ixx or izz + ixx < iyy:
            raise ValueError("inertia diagonal violates the triangle inequality")

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.gravity

    def as_array(self) -> NDArray[np.float64]:
        """Pack into the fixed layout consumed by the simulation kernels."""
        return np.array(
            [
                self.mass,
                self.arm_length,
                self.gravity,
                self.force_to_torque,
                self.inertia_xx,
                self.inertia_yy,
                self.inertia_zz,
                self.rotor_inertia,
            ]
        )


@dataclass
class RigidBodyState:
    euler: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    body_rates: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    body_velocity: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    position: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("euler", "body_rates", "body_velocity", "position"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(3)
            setattr(self, name, arr)

    def to_array(self) -> NDArray[np.float64]:
        return np.concatenate([self.euler, self.body_rates, self.body_velocity, self.position])

    @classmethod
    def from_array(cls, x: ArrayLike) -> "RigidBodyState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    @property
    def altitude(self) -> float:
        return -float(self.position[2])


@dataclass(frozen=True)
class ControlVector:
    """Channel inputs: roll/pitch/yaw torques (N m) and total thrust (N)."""

    u_phi: float = 0.0
    u_theta: float = 0.0
    u_psi: float = 0.0
    u_T: float = 0.0

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.u_phi, self.u_theta, self.u_psi, self.u_T])


@dataclass(frozen=True)
class RotorForces:
    F1: float
    F2: float
    F3: float
    F4: float
    saturated: bool = False

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.F1, self.F2, self.F3, self.F4])


@dataclass(frozen=True)
class Disturbance:
    d_phi: float = 0.0
    d_theta: float = 0.0
    d_psi: float = 0.0
    residual_speed: float = 0.0

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.d_phi, self.d_theta, self.d_psi])


StateLike = Union[RigidBodyState, ArrayLike]


def _state_array(state: StateLike) -> NDArray[np.float64]:
    if isinstance(state, RigidBodyState):
        return state.to_array()
    x = np.asarray(state, dtype=float)
    if x.shape != (STATE_SIZE,):
        raise ValueError(f"state must have shape (12,), got {x.shape}")
    return x


def _vec(value, size: int) -> NDArray[np.float64]:
    if hasattr(value, "as_array"):
        return value.as_array()
    if value is None:
        return np.zeros(size)
    return np.asarray(value, dtype=float).reshape(size)


def hover_state(position: ArrayLike = (0.0, 0.0, 0.0)) -> NDArray[np.float64]:
    x = np.zeros(STATE_SIZE)
    x[X:] = position
    return x


def _check_pitch(theta: float) -> None:
    if abs(theta) >= math.pi / 2 - EPS_SINGULAR:
        raise SingularAttitude(f"pitch {theta!r} rad is at the Euler-angle singularity")


def euler_rate_matrix(euler: ArrayLike) -> NDArray[np.float64]:
    """Matrix M such that body rates = M @ Euler-angle rates."""
    phi, theta, _ = np.asarray(euler, dtype=float)
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    return np.array(
        [
            [1.0, 0.0, -sth],
            [0.0, cphi, cth * sphi],
            [0.0, -sphi, cth * cphi],
        ]
    )


def euler_rates_to_body_rates(euler: ArrayLike, euler_rates: ArrayLike) -> NDArray[np.float64]:
    euler = np.asarray(euler, dtype=float)
    _check_pitch(euler[1])
    return euler_rate_matrix(euler) @ np.asarray(euler_rates, dtype=float)


def body_rates_to_euler_rates(euler: ArrayLike, body_rates: ArrayLike) -> NDArray[np.float64]:
    phi, theta, _ = np.asarray(euler, dtype=float)
    _check_pitch(theta)
    p, q, r = np.asarray(body_rates, dtype=float)
    sphi, cphi = math.sin(phi), math.cos(phi)
    cth, tth = math.cos(theta), math.tan(theta)
    return np.array(
        [
            p + sphi * tth * q + cphi * tth * r,
            cphi * q - sphi * r,
            (sphi * q + cphi * r) / cth,
        ]
    )


def direction_cosine(euler: ArrayLike) -> NDArray[np.float64]:
    """Body-to-earth rotation for ZYX Euler angles (``R_z(psi) R_y(theta) R_x(phi)``)."""
    phi, theta, psi = np.asarray(euler, dtype=float)
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    spsi, cpsi = math.sin(psi), math.cos(psi)
    return np.array(
        [
            [cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi],
            [cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi],
            [-sth, sphi * cth, cphi * cth],
        ]
    )


def mixing_matrix(params: QuadParams) -> NDArray[np.float64]:
    l, c = params.arm_length, params.force_to_torque
    return np.array(
        [
            [0.0, l, 0.0, -l],
            [-l, 0.0, l, 0.0],
            [-c, c, -c, c],
            [1.0, 1.0, 1.0, 1.0],
        ]
    )


def mix_forces_to_controls(forces: RotorForces | ArrayLike, params: QuadParams) -> ControlVector:
    F1, F2, F3, F4 = _vec(forces, 4)
    l, c = params.arm_length, params.force_to_torque
    return ControlVector(
        u_phi=l * (F2 - F4),
        u_theta=l * (F3 - F1),
        u_psi=c * (-F1 + F2 - F3 + F4),
        u_T=F1 + F2 + F3 + F4,
    )


def controls_to_forces(u: ControlVector | ArrayLike, params: QuadParams) -> RotorForces:
    """Invert the mixing matrix; negative rotor forces are clamped to zero.

    The returned forces carry ``saturated=True`` whenever clamping happened,
    in which case they no longer reproduce ``u`` exactly.
    """
    u_phi, u_theta, u_psi, u_T = _vec(u, 4)
    l, c = params.arm_length, params.force_to_torque
    # closed-form inverse of the mixing matrix
    F = np.array(
        [
            u_T / 4 - u_theta / (2 * l) - u_psi / (4 * c),
            u_T / 4 + u_phi / (2 * l) + u_psi / (4 * c),
            u_T / 4 + u_theta / (2 * l) - u_psi / (4 * c),
            u_T / 4 - u_phi / (2 * l) + u_psi / (4 * c),
        ]
    )
    # round-off below zero is not saturation
    tol = 1e-12 * max(1.0, float(np.max(np.abs(F))))
    saturated = bool(np.any(F < -tol))
    F = np.maximum(F, 0.0)
    return RotorForces(*map(float, F), saturated=saturated)


def residual_rotor_speed(rotor_speeds: ArrayLike) -> float:
    """Alternating sum over rotor speeds with sign ``(-1)**i`` for ``i = 1..4``."""
    w1, w2, w3, w4 = np.asarray(rotor_speeds, dtype=float)
    return -w1 + w2 - w3 + w4


def gyroscopic_disturbance(
    body_rates: ArrayLike, rotor_speeds: ArrayLike, params: QuadParams
) -> Disturbance:
    p, q, _ = np.asarray(body_rates, dtype=float)
    omega_r = residual_rotor_speed(rotor_speeds)
    im = params.rotor_inertia
    return Disturbance(q * im * omega_r, -p * im * omega_r, 0.0, omega_r)


def state_derivative(
    state: StateLike,
    u: ControlVector | ArrayLike,
    d: Disturbance | ArrayLike | None,
    params: QuadParams,
) -> NDArray[np.float64]:
    x = _state_array(state)
    u_phi, u_theta, u_psi, u_T = _vec(u, 4)
    d_phi, d_theta, d_psi = _vec(d, 3)

    phi, theta, psi = x[PHI], x[THETA], x[PSI]
    p, q, r = x[P], x[Q], x[R]
    uu, vv, ww = x[U], x[V], x[W]
    _check_pitch(theta)

    g, m = params.gravity, params.mass
    ixx, iyy, izz = params.inertia_xx, params.inertia_yy, params.inertia_zz
    sphi, cphi = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)

    dx = np.empty(STATE_SIZE)
    dx[PHI:P] = body_rates_to_euler_rates((phi, theta, psi), (p, q, r))
    dx[P] = ((iyy - izz) * q * r + u_phi + d_phi) / ixx
    dx[Q] = ((izz - ixx) * p * r + u_theta + d_theta) / iyy
    dx[R] = ((ixx - iyy) * p * q + u_psi + d_psi) / izz
    dx[U] = r * vv - q * ww - g * sth
    dx[V] = p * ww - r * uu + g * sphi * cth
    dx[W] = q * uu - p * vv + g * cth * cphi - u_T / m
    dx[X:] = direction_cosine((phi, theta, psi)) @ x[U:X]
    return dx


def step(
    state: StateLike,
    u: ControlVector | ArrayLike,
    d: Disturbance | ArrayLike | None,
    params: QuadParams,
    dt: float,
) -> NDArray[np.float64]:
    """Advance one classical RK4 step with ``u`` and ``d`` held over ``dt``."""
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}], got {dt!r}")
    x = _state_array(state)
    u = _vec(u, 4)
    d = _vec(d, 3)
    k1 = state_derivative(x, u, d, params)
    k2 = state_derivative(x + 0.5 * dt * k1, u, d, params)
    k3 = state_derivative(x + 0.5 * dt * k2, u, d, params)
    k4 = state_derivative(x + dt * k3, u, d, params)
    nxt = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > DIVERGENCE_LIMIT:
        raise Diverged("state magnitude exceeded 1e6")
    return nxt


def mechanical_energy(state: StateLike, params: QuadParams) -> float:
    """Translational kinetic plus gravitational potential energy of the point mass."""
    x = _state_array(state)
    v_earth = direction_cosine(x[PHI:P]) @ x[U:X]
    return 0.5 * params.mass * float(v_earth @ v_earth) - params.mass * params.gravity * x[Z]
