"""Static plots of trajectory CSVs."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .trajectory import Trajectory


def plot_trajectory(csv_path: str | Path, png_path: str | Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    traj = Trajectory.from_csv(csv_path)
    y = traj.outputs()
    fig, axes = plt.subplots(3, 2, figsize=(10, 8), sharex=True)
    labels = ("roll [deg]", "pitch [deg]", "yaw [deg]", "altitude [m]")
    for i, ax in enumerate(axes.flat[:4]):
        scale = 1.0 if i == 3 else 180.0 / np.pi
        ax.plot(traj.t, y[:, i] * scale, label="response")
        ax.plot(traj.t, traj.refs[:, i] * scale, "--", label="reference")
        ax.set_ylabel(labels[i])
    axes[0, 0].legend(loc="best")
    ax = axes[2, 0]
    ax.plot(traj.t, traj.controls[:, :3])
    ax.set_ylabel("torques [N m]")
    ax.set_xlabel("t [s]")
    ax = axes[2, 1]
    if np.all(np.isnan(traj.safe_distance)):
        ax.plot(traj.t, traj.controls[:, 3])
        ax.set_ylabel("thrust [N]")
    else:
        ax.plot(traj.t, traj.safe_distance)
        ax.set_ylabel("horizontal distance [m]")
    ax.set_xlabel("t [s]")
    fig.tight_layout()
    png_path = Path(png_path)
    fig.savefig(png_path, dpi=100)
    plt.close(fig)
    return png_path
