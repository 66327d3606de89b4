"""Trajectory container and its CSV form.

Values are written with ``repr`` so that reading a file back yields the
exact same floats, which keeps metrics recomputed from disk bit-identical to
the in-memory ones.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .. import dynamics as dyn
from ..errors import NotSettled
from ..mission import MissionMetrics, mission_metrics
from ..pida import CHANNELS, SETTLING_BAND, StepMetrics, step_response_metrics

HEADER = (
    "t",
    "x_E",
    "y_E",
    "z_E",
    "phi",
    "theta",
    "psi",
    "p",
    "q",
    "r",
    "u",
    "v",
    "w",
    "u_phi",
    "u_theta",
    "u_psi",
    "u_T",
    "ref_phi",
    "ref_theta",
    "ref_psi",
    "ref_alt",
    "safe_distance",
)

# CSV column order of the state block
_STATE_COLS = (dyn.X, dyn.Y, dyn.Z, dyn.PHI, dyn.THETA, dyn.PSI, dyn.P, dyn.Q, dyn.R, dyn.U, dyn.V, dyn.W)


@dataclass
class Trajectory:
    """One row per sample; controls and references of the last row repeat the final period."""

    t: NDArray[np.float64]
    states: NDArray[np.float64]
    controls: NDArray[np.float64]
    refs: NDArray[np.float64]
    safe_distance: NDArray[np.float64]

    def __post_init__(self):
        n = len(self.t)
        shapes = (self.states.shape, self.controls.shape, self.refs.shape, self.safe_distance.shape)
        if shapes != ((n, 12), (n, 4), (n, 4), (n,)):
            raise ValueError(f"inconsistent trajectory shapes {shapes} for {n} samples")

    @classmethod
    def from_run(cls, t, states, controls, refs, safe_distance=None, steps=None) -> "Trajectory":
        """Build from ``n + 1`` states and ``n`` per-period controls/references."""
        k = len(controls) if steps is None else int(steps)
        t = np.asarray(t[: k + 1], dtype=float)
        states = np.asarray(states[: k + 1], dtype=float)

        def pad(a):
            a = np.asarray(a[:k], dtype=float)
            last = a[-1:] if k > 0 else np.zeros((1, a.shape[1]))
            return np.vstack([a, last])

        if safe_distance is None:
            dist = np.full(k + 1, math.nan)
        else:
            dist = np.asarray(safe_distance[: k + 1], dtype=float)
        return cls(t, states, pad(controls), pad(refs), dist)

    def outputs(self) -> NDArray[np.float64]:
        s = self.states
        return np.column_stack([s[:, dyn.PHI], s[:, dyn.THETA], s[:, dyn.PSI], -s[:, dyn.Z]])

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        rows = np.column_stack(
            [self.t, self.states[:, _STATE_COLS], self.controls, self.refs, self.safe_distance]
        )
        try:
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(HEADER)
                for row in rows:
                    writer.writerow([repr(float(v)) for v in row])
        except OSError as exc:
            raise OSError(f"cannot write trajectory {path}: {exc}") from exc
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> "Trajectory":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != HEADER:
                raise ValueError(f"{path}: unexpected header {header}")
            data = np.array([[float(v) for v in row] for row in reader], dtype=float)
        states = np.zeros((len(data), 12))
        states[:, _STATE_COLS] = data[:, 1:13]
        return cls(data[:, 0], states, data[:, 13:17], data[:, 17:21], data[:, 21])


def step_metrics(
    traj: Trajectory, band: float = SETTLING_BAND, min_hold: float = 0.0
) -> dict[str, StepMetrics | None]:
    """Per-channel step metrics with the step located from the reference columns.

    Channels whose reference never changes get zero overshoot and settling
    time. A channel that has not settled maps to ``None``.
    """
    y = traj.outputs()
    out: dict[str, StepMetrics | None] = {}
    for i, ch in enumerate(CHANNELS):
        ref = traj.refs[:, i]
        moved = np.flatnonzero(ref != ref[0])
        if moved.size == 0:
            out[ch] = StepMetrics(0.0, 0.0, float(abs(y[-1, i] - ref[-1])))
            continue
        k = int(moved[0])
        try:
            out[ch] = step_response_metrics(
                traj.t,
                y[:, i],
                float(ref[-1]),
                step_time=float(traj.t[k]),
                initial=float(ref[0]),
                band=band,
                min_hold=min_hold,
            )
        except NotSettled:
            out[ch] = None
    return out


def trajectory_mission_metrics(traj: Trajectory, safe_distance: float = 2.0, band: float = 0.2) -> MissionMetrics:
    return mission_metrics(traj.t, traj.states, traj.refs, traj.safe_distance, safe_distance, band)
