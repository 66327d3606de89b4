"""Thin wrapper that feeds reference/noise schedules through a simulation kernel."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import kernels
from .dynamics import QuadParams
from .pida import CHANNELS, PidaGains


@dataclass
class SimResult:
    t: NDArray[np.float64]
    states: NDArray[np.float64]
    controls: NDArray[np.float64]
    refs: NDArray[np.float64]
    steps: int
    status: int
    ctrl_state: NDArray[np.float64]

    @property
    def ok(self) -> bool:
        return self.status == kernels.OK

    @property
    def outputs(self) -> NDArray[np.float64]:
        """True (noise-free) roll, pitch, yaw and altitude per sample."""
        s = self.states
        return np.column_stack([s[:, 0], s[:, 1], s[:, 2], -s[:, 11]])


def gain_matrix(gains: Mapping[str, PidaGains]) -> NDArray[np.float64]:
    return np.ascontiguousarray([gains[ch].as_array() for ch in CHANNELS], dtype=float)


def simulate(
    x0: ArrayLike,
    gains: Mapping[str, PidaGains] | NDArray[np.float64],
    params: QuadParams,
    refs: ArrayLike,
    dt: float,
    meas_noise: ArrayLike | None = None,
    roll_dist: ArrayLike | None = None,
    gyro_kf: float = 0.0,
    control: bool = True,
    ctrl_state: ArrayLike | None = None,
    t0: float = 0.0,
    backend=None,
) -> SimResult:
    """Run ``len(refs)`` control periods.

    ``refs`` rows are ``(phi, theta, psi, altitude)`` references applied over
    each period; ``meas_noise`` rows are added to the measured outputs and
    ``roll_dist`` is an additive roll-torque disturbance per period.
    ``ctrl_state`` (4, 5) carries controller memory across calls.
    """
    run = backend or kernels.run_closed_loop
    refs = np.ascontiguousarray(refs, dtype=float)
    n = refs.shape[0]
    if meas_noise is None:
        meas_noise = np.zeros((n, 4))
    if roll_dist is None:
        roll_dist = np.zeros(n)
    ctrl = np.zeros((4, 5)) if ctrl_state is None else np.array(ctrl_state, dtype=float)
    g = gains if isinstance(gains, np.ndarray) else gain_matrix(gains)
    traj = np.zeros((n + 1, 12))
    u = np.zeros((n, 4))
    steps, status = run(
        np.ascontiguousarray(x0, dtype=float),
        ctrl,
        np.ascontiguousarray(g, dtype=float),
        params.as_array(),
        refs,
        np.ascontiguousarray(meas_noise, dtype=float),
        np.ascontiguousarray(roll_dist, dtype=float),
        float(gyro_kf),
        bool(control),
        float(dt),
        traj,
        u,
    )
    t = t0 + dt * np.arange(n + 1)
    return SimResult(t, traj, u, refs, steps, status, ctrl)
