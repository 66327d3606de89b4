"""Scenario-level runs: step response, mission, tuning and stability analysis."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .. import dynamics as dyn
from ..errors import ConfigError, Diverged, SingularAttitude
from ..kernels import DIVERGED, SINGULAR
from ..linear import certify_closed_loop, linearize
from ..mission import MissionSetup
from ..mission import run_mission as _run_mission
from ..pida import PidaGains
from ..simulate import simulate
from ..tuning import ChannelTuning, StepSetup, pole_placement_gains, tune_gains
from .report import RunReport
from .scenario import Scenario
from .trajectory import Trajectory, step_metrics, trajectory_mission_metrics


@dataclass
class RunOutput:
    trajectory: Trajectory
    report: RunReport


def _gains(scn: Scenario) -> Mapping[str, PidaGains]:
    if scn.gains is None:
        raise ConfigError("scenario has no gains; run `tune` first")
    return scn.gains


def step_setup(scn: Scenario) -> StepSetup:
    st = scn.step
    return StepSetup(
        params=scn.quad,
        x0=tuple(dyn.hover_state((0.0, 0.0, -st.initial_altitude))),
        initial_refs=(0.0, 0.0, 0.0, st.initial_altitude),
        step_refs=(st.roll, st.pitch, st.yaw, st.altitude),
        step_time=st.step_time,
        duration=scn.duration,
        dt=scn.dt,
        noise_sigma=tuple(scn.noise.measurement_sigma),
        gyro_kf=scn.gyro_kf,
        seed=scn.seed,
        settle_hold=st.settle_hold,
    )


def roll_disturbance(scn: Scenario, n: int) -> np.ndarray:
    """White roll torque from ``disturbance_start`` on, held over each dt.

    Drawn from its own stream (seed + 1) so enabling it leaves the
    measurement noise untouched.
    """
    out = np.zeros(n)
    if scn.noise.roll_disturbance:
        k0 = int(round(scn.noise.disturbance_start / scn.dt))
        rng = np.random.default_rng(scn.seed + 1)
        draws = rng.standard_normal(n) * scn.noise.disturbance_sigma
        out[k0:] = draws[k0:]
    return out


def _raise_for_status(status: int, steps: int, dt: float) -> None:
    t = steps * dt
    if status == DIVERGED:
        raise Diverged(f"state left the admissible envelope at t={t:.3f} s", t)
    if status == SINGULAR:
        raise SingularAttitude(f"pitch reached +/-90 deg at t={t:.3f} s")


def run_step_response(scn: Scenario, out_dir: str | Path | None = None) -> RunOutput:
    """Four-channel step experiment; writes ``step_trajectory.csv`` when ``out_dir`` is given."""
    setup = step_setup(scn)
    gains = _gains(scn) if scn.step.control else pole_placement_gains(scn.quad)
    refs = setup.references()
    res = simulate(
        setup.x0,
        gains,
        setup.params,
        refs,
        setup.dt,
        meas_noise=setup.noise(),
        roll_dist=roll_disturbance(scn, setup.n_steps),
        gyro_kf=setup.gyro_kf,
        control=scn.step.control,
    )
    _raise_for_status(res.status, res.steps, scn.dt)
    traj = Trajectory.from_run(res.t, res.states, res.controls, refs)
    report = RunReport("step", scn.seed, step=step_metrics(traj, min_hold=scn.step.settle_hold))
    if scn.step.control:
        report.stability = analyze(scn).as_dict()
    else:
        report.notes.append("open loop: controller disabled")
    if out_dir is not None:
        report.trajectory = str(traj.to_csv(Path(out_dir) / "step_trajectory.csv"))
    return RunOutput(traj, report)


def mission_setup(scn: Scenario) -> MissionSetup:
    m = scn.mission
    return MissionSetup(
        gains=_gains(scn),
        params=scn.quad,
        x0=tuple(dyn.hover_state(m.initial_position)),
        target=tuple(m.target),
        target_height=m.target_height,
        rig=scn.camera,
        guidance=scn.guidance,
        dt=scn.dt,
        duration=scn.duration,
        perception_every=m.perception_every,
        pixel_sigma=scn.noise.pixel_sigma,
        noise_sigma=tuple(scn.noise.measurement_sigma),
        gyro_kf=scn.gyro_kf,
        acquisition_timeout=m.acquisition_timeout,
        seed=scn.seed,
    )


def run_mission(scn: Scenario, out_dir: str | Path | None = None) -> RunOutput:
    """Target approach; writes ``mission_trajectory.csv`` when ``out_dir`` is given."""
    setup = mission_setup(scn)
    res = _run_mission(setup)
    dist = res.horizontal_distance(setup.target)
    traj = Trajectory.from_run(res.t, res.states, res.controls, res.refs, dist)
    metrics = trajectory_mission_metrics(traj, scn.guidance.safe_distance, scn.guidance.hysteresis)
    report = RunReport("mission", scn.seed, mission=metrics)
    if out_dir is not None:
        report.trajectory = str(traj.to_csv(Path(out_dir) / "mission_trajectory.csv"))
    return RunOutput(traj, report)


def tune(
    scn: Scenario,
    progress: Callable[[str, ChannelTuning], None] | None = None,
) -> tuple[Scenario, dict[str, ChannelTuning]]:
    """Tune the configured channels on the scenario's step experiment.

    Starts from the scenario gains when present, otherwise from the
    pole-placement seed. Returns the scenario with the tuned gains.
    """
    if scn.kind != "step":
        scn_step = replace(scn, kind="step", duration=7.0)
    else:
        scn_step = scn
    cfg = replace(scn.sdsa, seed=scn.seed)
    gains, runs = tune_gains(
        step_setup(scn_step),
        scn.tune.channels,
        cfg,
        initial=scn.gains,
        max_rounds=scn.tune.rounds,
        desired_overshoot=scn.tune.desired_overshoot,
        desired_settling=scn.tune.desired_settling,
        progress=progress,
    )
    return scn.with_gains(gains), runs


def analyze(scn: Scenario):
    """Hover linearization and closed-loop certificate for the scenario gains."""
    return certify_closed_loop(linearize(scn.quad), _gains(scn))


def write_history(runs: Mapping[str, ChannelTuning], path: str | Path) -> Path:
    path = Path(path)
    lines = ["channel,iteration,best_cost"]
    for ch, run in runs.items():
        lines.extend(f"{ch},{it},{cost!r}" for it, cost in run.history)
    path.write_text("\n".join(lines) + "\n")
    return path
