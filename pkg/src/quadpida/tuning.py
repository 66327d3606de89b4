"""Step-response tuning objective for one PIDA channel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
from numpy.typing import NDArray

from . import dynamics as dyn
from .dynamics import QuadParams
from .errors import NotSettled
from .pida import CHANNELS, PidaGains, StepMetrics, step_response_metrics
from .sdsa import SdsaConfig, minimize
from .simulate import SimResult, gain_matrix, simulate

PENALTY = 1e6

# k_p, k_i, k_d, k_a, T_f. A strictly positive k_i floor keeps the integrator
# mode off the imaginary axis so tuned loops remain certifiable.
GAIN_BOUNDS = ((0.0, 100.0), (0.01, 100.0), (0.0, 50.0), (0.0, 10.0), (0.005, 0.5))
TUNING_ORDER = ("yaw", "pitch", "roll", "altitude")


def pole_placement_gains(
    params: QuadParams,
    wn_attitude: float = 5.0,
    wn_altitude: float = 4.0,
    zeta: float = 1.0,
    T_f: float = 0.02,
) -> dict[str, PidaGains]:
    """PID seed gains for each channel treated as a double integrator.

    The plant ``J s^2`` with ``u = kp e + ki/s e + kd s e`` gets the
    characteristic polynomial ``(s^2 + 2 zeta wn s + wn^2)(s + wn)``; the
    acceleration gain starts at zero.
    """

    def design(channel: str, J: float, wn: float) -> PidaGains:
        kp = J * wn**2 * (1.0 + 2.0 * zeta)
        ki = J * wn**3
        kd = J * wn * (1.0 + 2.0 * zeta)
        return PidaGains(kp, ki, kd, 0.0, T_f, channel)

    return {
        "roll": design("roll", params.inertia_xx, wn_attitude),
        "pitch": design("pitch", params.inertia_yy, wn_attitude),
        "yaw": design("yaw", params.inertia_zz, wn_attitude),
        "altitude": design("altitude", params.mass, wn_altitude),
    }


@dataclass(frozen=True)
class StepSetup:
    """Everything needed to simulate one step experiment deterministically."""

    params: QuadParams = field(default_factory=QuadParams)
    x0: tuple[float, ...] = tuple(dyn.hover_state((0.0, 0.0, -50.0)))
    initial_refs: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 50.0)
    step_refs: tuple[float, float, float, float] = (
        math.radians(-5.0),
        math.radians(10.0),
        math.radians(30.0),
        20.0,
    )
    step_time: float = 2.0
    duration: float = 7.0
    dt: float = 0.001
    noise_sigma: tuple[float, float, float, float] = (1e-3, 1e-3, 1e-3, 1e-2)
    gyro_kf: float = 0.0
    seed: int = 0
    settle_hold: float = 0.5

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def references(self, channels=CHANNELS) -> NDArray[np.float64]:
        """Reference schedule where only ``channels`` take their step."""
        n = self.n_steps
        refs = np.tile(np.asarray(self.initial_refs, dtype=float), (n, 1))
        k0 = int(round(self.step_time / self.dt))
        for ch in channels:
            i = CHANNELS.index(ch)
            refs[k0:, i] = self.step_refs[i]
        return refs

    def noise(self) -> NDArray[np.float64]:
        rng = np.random.default_rng(self.seed)
        return rng.standard_normal((self.n_steps, 4)) * np.asarray(self.noise_sigma)

    def run(self, gains: Mapping[str, PidaGains], channels=CHANNELS) -> SimResult:
        return simulate(
            self.x0,
            gains,
            self.params,
            self.references(channels),
            self.dt,
            meas_noise=self.noise(),
            gyro_kf=self.gyro_kf,
        )

    def metrics(self, result: SimResult, channel: str) -> StepMetrics:
        i = CHANNELS.index(channel)
        y = result.outputs[: result.steps + 1, i]
        t = result.t[: result.steps + 1]
        return step_response_metrics(
            t,
            y,
            self.step_refs[i],
            step_time=self.step_time,
            initial=self.initial_refs[i],
            min_hold=self.settle_hold,
        )


@dataclass(frozen=True)
class TuningObjective:
    channel: str
    desired_overshoot: float = 5.0
    desired_settling: float = 2.0
    setup: StepSetup = field(default_factory=StepSetup)
    base_gains: Mapping[str, PidaGains] = field(
        default_factory=lambda: pole_placement_gains(QuadParams())
    )

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        if not (self.desired_overshoot > 0 and self.desired_settling > 0):
            raise ValueError("desired overshoot and settling time must be positive")

    def gains_with(self, vector) -> dict[str, PidaGains]:
        gains = dict(self.base_gains)
        gains[self.channel] = PidaGains.from_array(vector, self.channel)
        return gains


def metric_cost(overshoot: float, settling: float, objective: TuningObjective) -> float:
    """Sum of squared deviations from the desired overshoot (%) and settling time (s)."""
    return (objective.desired_overshoot - overshoot) ** 2 + (
        objective.desired_settling - settling
    ) ** 2


def tuning_cost(vector, objective: TuningObjective) -> float:
    """Closed-loop step-response cost of one channel's gain vector.

    Failure modes are mapped to finite penalties so the optimizer never sees
    an exception: unsettled responses cost ``1e6 + |final error|`` and
    diverged simulations ``2e6``.
    """
    vector = np.asarray(vector, dtype=float)
    if vector[4] <= 0 or vector[1] < 0 or not np.all(np.isfinite(vector)):
        return 2 * PENALTY
    setup = objective.setup
    result = simulate(
        setup.x0,
        gain_matrix(objective.gains_with(vector)),
        setup.params,
        setup.references(),
        setup.dt,
        meas_noise=setup.noise(),
        gyro_kf=setup.gyro_kf,
    )
    if not result.ok:
        return 2 * PENALTY
    i = CHANNELS.index(objective.channel)
    try:
        m = setup.metrics(result, objective.channel)
    except NotSettled:
        final = abs(result.outputs[-1, i] - setup.step_refs[i])
        return PENALTY + float(final)
    return metric_cost(m.overshoot, m.settling_time, objective)


@dataclass
class ChannelTuning:
    channel: str
    gains: PidaGains
    cost: float
    history: list[tuple[int, float]]
    nfev: int


def tune_channel(
    objective: TuningObjective,
    config: SdsaConfig = SdsaConfig(),
    max_rounds: int = 6,
    patience: int = 3,
    min_gain: float = 1e-3,
) -> ChannelTuning:
    """SDSA on one channel, restarted from the incumbent.

    Round ``k`` uses seed ``config.seed + k``. Restarting stops after
    ``max_rounds`` rounds or once ``patience`` consecutive rounds improved the
    cost by less than ``min_gain``. The history is concatenated across rounds
    with a running iteration count.
    """
    x = objective.base_gains[objective.channel].as_array()
    cost = tuning_cost(x, objective)
    history: list[tuple[int, float]] = [(0, cost)]
    nfev = 1
    offset = 0
    stale = 0
    for k in range(max_rounds):
        cfg = replace(config, seed=config.seed + k)
        res = minimize(lambda v: tuning_cost(v, objective), GAIN_BOUNDS, cfg, x0=x)
        nfev += res.nfev
        history.extend((offset + it, min(f, cost)) for it, f in res.history[1:])
        offset += res.nit
        gain = cost - res.fun
        if res.fun < cost:
            x, cost = res.x, res.fun
        stale = stale + 1 if gain < min_gain else 0
        if stale >= patience:
            break
    return ChannelTuning(
        objective.channel, PidaGains.from_array(x, objective.channel), float(cost), history, nfev
    )


def tune_gains(
    setup: StepSetup = StepSetup(),
    channels=TUNING_ORDER,
    config: SdsaConfig = SdsaConfig(),
    initial: Mapping[str, PidaGains] | None = None,
    max_rounds: int = 6,
    desired_overshoot: float = 5.0,
    desired_settling: float = 2.0,
    progress=None,
) -> tuple[dict[str, PidaGains], dict[str, ChannelTuning]]:
    """Tune ``channels`` one after another on the full step scenario.

    Each channel is tuned with the others frozen at their latest values.
    ``progress(channel, run)`` is called after each channel.
    """
    gains = dict(initial or pole_placement_gains(setup.params))
    runs: dict[str, ChannelTuning] = {}
    for ch in channels:
        objective = TuningObjective(
            ch, desired_overshoot, desired_settling, setup=setup, base_gains=dict(gains)
        )
        run = tune_channel(objective, config, max_rounds)
        gains[ch] = run.gains
        runs[ch] = run
        if progress is not None:
            progress(ch, run)
    return gains, runs
