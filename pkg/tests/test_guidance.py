from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadpida import dynamics as dyn
from quadpida.errors import TargetReached
from quadpida.guidance import (
    Guidance,
    GuidanceConfig,
    HoldState,
    RelativeKinematics,
    acceleration_to_references,
    approach_acceleration,
    los_rate,
    ppn_acceleration,
    unwrap_near,
)

vec3 = st.lists(st.floats(-50, 50), min_size=3, max_size=3).map(np.array)


def rel(R, V_M, V_T=(0, 0, 0)):
    return RelativeKinematics(np.array(R, float), np.array(V_M, float), np.array(V_T, float))


def test_los_rate_spot_values():
    assert np.allclose(los_rate(rel((0, 2, 0), (1, 0, 0))), (0, 0, 0.5))
    assert np.allclose(los_rate(rel((3, 4, 0), (0.6, 0.8, 0))), 0)
    assert np.allclose(los_rate(rel((0, 4, 0), (1, 0, 0))), 0.5 * los_rate(rel((0, 2, 0), (1, 0, 0))))


def test_ppn_spot_values():
    assert np.allclose(ppn_acceleration(rel((0, 2, 0), (1, 0, 0)), N=1), (0, 0.5, 0))
    assert np.allclose(ppn_acceleration(rel((0, 2, 0), (0, 1, 0))), 0)


def test_target_reached_guard():
    with pytest.raises(TargetReached):
        los_rate(rel((0.05, 0, 0), (1, 0, 0)))
    with pytest.raises(TargetReached):
        ppn_acceleration(rel((0, 0.05, 0), (1, 0, 0)))


def test_relative_kinematics_validation():
    with pytest.raises(ValueError):
        rel((0, 0), (1, 0, 0))
    with pytest.raises(ValueError):
        rel((0, math.inf, 0), (1, 0, 0))


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, vec3)
def test_cross_product_orthogonality(R, V_M, V_T):
    if np.linalg.norm(R) < 0.2:
        return
    r = RelativeKinematics(R, V_M, V_T)
    w = los_rate(r)
    a = ppn_acceleration(r, N=3.0)
    scale = 1 + np.linalg.norm(R) * np.linalg.norm(r.v_rel) ** 2
    assert abs(w @ R) <= 1e-9 * scale
    assert abs(a @ r.v_rel) <= 1e-9 * scale * (1 + np.linalg.norm(r.v_rel))


def test_acceleration_to_references():
    assert acceleration_to_references((0, 0, 0)) == (0.0, 0.0)
    phi, theta = acceleration_to_references((9.81 * math.tan(math.radians(10)), 0, 0))
    assert theta == pytest.approx(-math.radians(10), abs=1e-12) and phi == 0.0
    phi, theta = acceleration_to_references((0, 9.81 * math.tan(math.radians(5)), 0))
    assert phi == pytest.approx(math.radians(5), abs=1e-12)
    # heading rotates the request into the body frame
    phi, theta = acceleration_to_references((0, 1.0, 0), psi=math.pi / 2)
    assert theta == pytest.approx(-math.atan(1 / 9.81)) and phi == pytest.approx(0.0, abs=1e-12)
    phi, theta = acceleration_to_references((1e3, -1e3, 0))
    assert theta == -math.radians(30) and phi == -math.radians(30)


def test_unwrap_near():
    assert unwrap_near(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(-math.pi - 0.1)
    assert unwrap_near(0.3, 4 * math.pi) == pytest.approx(4 * math.pi + 0.3)


def test_config_validation():
    with pytest.raises(ValueError):
        GuidanceConfig(safe_distance=0)
    with pytest.raises(ValueError):
        GuidanceConfig(standoff_margin=3.0)
    with pytest.raises(ValueError):
        GuidanceConfig(max_tilt=2.0)


def test_hold_hysteresis():
    cfg = GuidanceConfig()
    h = HoldState()
    seq = [2.5, 2.0, 2.1, 2.19, 1.9, 2.2, 2.21, 2.1]
    out = [h.update(d, (d, 0.0, 0.0), 0.0, cfg) for d in seq]
    assert out == [False, True, True, True, True, True, False, False]


def test_hold_engaged_inside_safe_distance():
    g = Guidance(GuidanceConfig(), target_altitude=1.8)
    state = dyn.hover_state((0, 0, -1.8))
    cmd = g.command((1.5, 0.0, 0.0), state)
    assert cmd.hold and cmd.phi == 0.0 and cmd.theta == 0.0
    assert cmd.altitude == pytest.approx(1.8)


def test_hover_command_on_target_height():
    g = Guidance(GuidanceConfig(), target_altitude=1.8)
    cmd = g.command((2.0, 0.0, 0.0), dyn.hover_state((0, 0, -1.8)))
    ref = cmd.references()
    assert (ref.phi, ref.theta, ref.psi, ref.altitude) == (0.0, 0.0, 0.0, pytest.approx(1.8))


def test_approach_points_along_line_of_sight():
    cfg = GuidanceConfig()
    g = Guidance(cfg, target_altitude=1.8)
    cmd = g.command((5.0, 5.0, 3.2), dyn.hover_state((0, 0, -5)))
    assert not cmd.hold
    assert cmd.psi == pytest.approx(math.pi / 4)
    assert cmd.theta < 0 and abs(cmd.phi) < 1e-12
    a = approach_acceleration(rel((5, 5, 0), (0, 0, 0)), cfg)
    assert np.allclose(a[:2] / np.linalg.norm(a[:2]), [math.sqrt(0.5)] * 2)


def test_altitude_reference_slews():
    cfg = GuidanceConfig(max_climb_rate=1.5)
    g = Guidance(cfg, target_altitude=1.8)
    state = dyn.hover_state((0, 0, -5))
    alts = [g.command((5, 5, 3.2), state, elapsed=0.1).altitude for _ in range(30)]
    assert alts[0] == pytest.approx(5 - 0.15)
    assert np.all(np.diff(alts) <= 1e-12)
    assert alts[-1] == pytest.approx(1.8)


def test_planar_ppn_pursuit_reaches_safe_distance():
    # constant-speed pursuer, stationary target, N = 1: the heading offset to the
    # line of sight stays constant so the range closes at V cos(offset)
    pos, target = np.zeros(3), np.array([5.0, 5.0, 0.0])
    speed, offset = 2.0, math.radians(40)
    heading = math.pi / 4 + offset
    vel = speed * np.array([math.cos(heading), math.sin(heading), 0.0])
    dt, t = 1e-3, 0.0
    while np.linalg.norm(target - pos) >= 2.0 and t < 30.0:
        a = ppn_acceleration(RelativeKinematics(target - pos, vel), N=1.0)
        vel = vel + dt * a
        vel *= speed / np.linalg.norm(vel)
        pos = pos + dt * vel
        t += dt
    assert np.linalg.norm(target - pos) < 2.0
    assert t == pytest.approx((math.hypot(5, 5) - 2.0) / (speed * math.cos(offset)), rel=0.02)
