from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadpida import dynamics as dyn
from quadpida.dynamics import ControlVector, QuadParams, RotorForces
from quadpida.errors import Diverged, SingularAttitude

from . import oracles

P = QuadParams()
angles = st.floats(-1.4, 1.4)


def test_defaults_match_airframe_table():
    assert (P.mass, P.arm_length, P.gravity, P.force_to_torque) == (0.8, 0.2, 9.81, 3e-5)
    assert (P.inertia_xx, P.inertia_yy, P.inertia_zz, P.rotor_inertia) == (2.28e-2, 3.10e-2, 4.40e-2, 8.3e-5)


@pytest.mark.parametrize("field", ["mass", "arm_length", "inertia_zz"])
def test_params_reject_non_positive(field):
    with pytest.raises(ValueError):
        QuadParams(**{field: 0.0})


def test_params_reject_inertia_triangle_violation():
    with pytest.raises(ValueError):
        QuadParams(inertia_xx=0.01, inertia_yy=0.01, inertia_zz=0.05)


def test_euler_map_identity_at_level():
    assert np.array_equal(dyn.euler_rates_to_body_rates((0, 0, 0), (0.3, -0.2, 0.7)), [0.3, -0.2, 0.7])
    assert np.allclose(dyn.body_rates_to_euler_rates((0, 0, 0), (0.3, -0.2, 0.7)), [0.3, -0.2, 0.7])


def test_euler_map_hand_value():
    euler, rates = (0.1, 0.2, 0.3), np.array([0.5, -0.2, 0.1])
    expected = oracles.euler_to_body_matrix(0.1, 0.2) @ rates
    assert np.allclose(dyn.euler_rates_to_body_rates(euler, rates), expected, atol=1e-15)


def test_inverse_euler_map_matches_matrix_inverse():
    euler, w = (0.3, 0.5, -1.0), np.array([0.1, 0.1, 0.1])
    expected = np.linalg.inv(oracles.euler_to_body_matrix(0.3, 0.5)) @ w
    assert np.allclose(dyn.body_rates_to_euler_rates(euler, w), expected, rtol=1e-13)


def test_singular_pitch_raises():
    with pytest.raises(SingularAttitude):
        dyn.euler_rates_to_body_rates((0, math.pi / 2 - 1e-9, 0), (1, 2, 3))
    with pytest.raises(SingularAttitude):
        dyn.state_derivative(np.r_[0, -math.pi / 2, np.zeros(10)], (0, 0, 0, 0), None, P)


def test_euler_round_trip_random():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        euler = rng.uniform([-np.pi, -1.4, -np.pi], [np.pi, 1.4, np.pi])
        w = rng.normal(size=3)
        back = dyn.euler_rates_to_body_rates(euler, dyn.body_rates_to_euler_rates(euler, w))
        worst = max(worst, float(np.max(np.abs(back - w))))
    assert worst < 1e-10


def test_direction_cosine_matches_elementary_rotations():
    rng = np.random.default_rng(2)
    for _ in range(50):
        phi, th, psi = rng.uniform(-1.4, 1.4, 3)
        assert np.allclose(dyn.direction_cosine((phi, th, psi)), oracles.body_to_earth(phi, th, psi), atol=1e-15)


def test_mixing_hover_and_single_rotor():
    u = dyn.mix_forces_to_controls(RotorForces(*(4 * [P.hover_thrust / 4])), P)
    assert (u.u_phi, u.u_theta, u.u_psi) == (0.0, 0.0, 0.0)
    assert u.u_T == pytest.approx(7.848, abs=1e-12)
    u = dyn.mix_forces_to_controls((0, 1, 0, 0), P)
    assert np.allclose(u.as_array(), [0.2, 0.0, 3e-5, 1.0], atol=1e-18)


def test_mixing_matches_matrix_and_is_linear():
    F = np.array([1.0, 2.0, 3.0, 4.0])
    u = dyn.mix_forces_to_controls(F, P).as_array()
    assert np.allclose(u, dyn.mixing_matrix(P) @ F)
    assert np.allclose(dyn.mix_forces_to_controls(3.5 * F, P).as_array(), 3.5 * u)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 20.0), min_size=4, max_size=4))
def test_mixing_round_trip(forces):
    u = dyn.mix_forces_to_controls(forces, P)
    F = dyn.controls_to_forces(u, P)
    assert not F.saturated
    assert np.allclose(F.as_array(), forces, atol=1e-10)


def test_hover_forces_and_saturation_flag():
    F = dyn.controls_to_forces((0, 0, 0, P.hover_thrust), P)
    assert np.allclose(F.as_array(), P.hover_thrust / 4) and not F.saturated
    F = dyn.controls_to_forces(ControlVector(1.0, 0.0, 0.0, 0.0), P)
    assert F.saturated and np.all(F.as_array() >= 0)


def test_gyroscopic_disturbance():
    d = dyn.gyroscopic_disturbance((1.0, 2.0, 0.5), (100, 200, 100, 200), P)
    assert d.residual_speed == 200
    assert np.allclose(d.as_array(), [0.0332, -0.0166, 0.0], atol=1e-15)
    assert np.all(dyn.gyroscopic_disturbance((1, 2, 3), (50, 50, 50, 50), P).as_array() == 0)
    assert np.all(dyn.gyroscopic_disturbance((0, 0, 3), (1, 9, 2, 7), P).as_array() == 0)


def test_hover_is_exact_fixed_point():
    dx = dyn.state_derivative(dyn.hover_state((1.0, -2.0, -50.0)), (0, 0, 0, P.hover_thrust), None, P)
    assert np.linalg.norm(dx) == 0.0


def test_free_fall_acceleration():
    dx = dyn.state_derivative(dyn.hover_state(), (0, 0, 0, 0), None, P)
    assert dx[dyn.W] == 9.81
    assert np.count_nonzero(dx) == 1


def test_yaw_rate_reduction():
    x = np.zeros(12)
    x[dyn.R] = 0.4
    dx = dyn.state_derivative(x, (0, 0, 0.02, P.hover_thrust), None, P)
    assert dx[dyn.R] == pytest.approx(0.02 / P.inertia_zz, rel=1e-15)


def test_matches_oracle_on_random_states():
    rng = np.random.default_rng(3)
    for _ in range(500):
        x = rng.normal(size=12)
        x[1] = rng.uniform(-1.4, 1.4)
        u = rng.normal(size=4) * [0.1, 0.1, 0.1, 5.0]
        d = rng.normal(size=3) * 0.01
        got = dyn.state_derivative(x, u, d, P)
        want = oracles.derivative(x, u, d)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_rk4_hover_and_free_fall():
    x = dyn.hover_state((0, 0, -5))
    assert np.array_equal(dyn.step(x, (0, 0, 0, P.hover_thrust), None, P, 0.01), x)
    for _ in range(100):
        x = dyn.step(x, (0, 0, 0, 0), None, P, 0.01)
    assert x[dyn.W] == pytest.approx(9.81, abs=1e-6)
    assert x[dyn.Z] == pytest.approx(-5 + 0.5 * 9.81, abs=1e-6)


def test_step_rejects_bad_dt_and_diverges():
    with pytest.raises(ValueError):
        dyn.step(dyn.hover_state(), (0, 0, 0, 0), None, P, 0.0)
    with pytest.raises(ValueError):
        dyn.step(dyn.hover_state(), (0, 0, 0, 0), None, P, 0.06)
    x = dyn.hover_state()
    x[dyn.U] = 2e6
    with pytest.raises(Diverged):
        dyn.step(x, (0, 0, 0, 0), None, P, 0.001)


def _integrate(x0, u, dt, t_end):
    x = np.array(x0, dtype=float)
    for _ in range(int(round(t_end / dt))):
        x = dyn.step(x, u, None, P, dt)
    return x


def test_rk4_observed_order():
    x0 = np.array([0.2, -0.3, 0.1, 0.5, -0.4, 0.3, 1.0, -0.5, 0.2, 0, 0, -10])
    u = (0.01, -0.02, 0.005, 7.0)
    ref = _integrate(x0, u, 0.0025, 1.0)
    e1 = np.linalg.norm(_integrate(x0, u, 0.05, 1.0) - ref)
    e2 = np.linalg.norm(_integrate(x0, u, 0.025, 1.0) - ref)
    assert math.log2(e1 / e2) >= 3.8


def test_rk4_deterministic():
    x0 = np.array([0.2, -0.3, 0.1, 0.5, -0.4, 0.3, 1.0, -0.5, 0.2, 0, 0, -10])
    assert np.array_equal(_integrate(x0, (0, 0, 0, 5), 0.01, 0.2), _integrate(x0, (0, 0, 0, 5), 0.01, 0.2))


def test_energy_conserved_in_free_flight():
    x = np.array([0.1, 0.2, 0.3, 0.4, -0.2, 0.1, 1.0, 2.0, -1.0, 0.0, 0.0, -100.0])
    e0 = dyn.mechanical_energy(x, P)
    for _ in range(5000):
        x = dyn.step(x, (0, 0, 0, 0), None, P, 0.001)
    assert abs(dyn.mechanical_energy(x, P) - e0) / abs(e0) < 1e-6


@settings(max_examples=100, deadline=None)
@given(angles, angles, st.floats(-3.0, 3.0))
def test_direction_cosine_is_rotation(phi, theta, psi):
    R = dyn.direction_cosine((phi, theta, psi))
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
