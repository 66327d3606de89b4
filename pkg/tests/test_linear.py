from __future__ import annotations

import numpy as np
import pytest

from quadpida import dynamics as dyn
from quadpida.dynamics import QuadParams
from quadpida.errors import NotEquilibrium, SingularPencil, Unstable
from quadpida.linear import (
    LinearModel,
    augment_for_tracking,
    certify_closed_loop,
    closed_loop_matrix,
    linearize,
    solve_lyapunov,
    stability_report,
)
from quadpida.pida import CHANNELS, REFERENCE_GAINS, PidaGains
from quadpida.tuning import pole_placement_gains

from . import oracles

P = QuadParams()


@pytest.fixture(scope="module")
def hover():
    return linearize(P)


def test_hover_jacobian_matches_hand_derivation(hover):
    A, B = oracles.hover_jacobians()
    assert np.allclose(hover.A, A, atol=1e-6)
    assert np.allclose(hover.B, B, atol=1e-6)
    assert hover.B[dyn.W, 3] == pytest.approx(-1.25, abs=1e-6)
    assert hover.B[dyn.P, 0] == pytest.approx(43.86, abs=5e-3)
    assert hover.A[dyn.PHI, dyn.P] == pytest.approx(1.0, abs=1e-9)


def test_output_matrix_selects_altitude_with_sign(hover):
    x = np.arange(12, dtype=float)
    assert np.array_equal(hover.C @ x, [0, 1, 2, -11])


def test_linearize_rejects_non_equilibrium():
    with pytest.raises(NotEquilibrium):
        linearize(P, u_eq=np.zeros(4))


def test_augmented_block_structure(hover):
    sub = hover.subsystem((0, 1, 2, 3, 4, 5, 11))
    aug = augment_for_tracking(sub)
    assert aug.A_aug.shape == (11, 11)
    assert np.all(aug.A_aug[:7, 7:] == 0)
    assert np.array_equal(aug.A_aug[7:, :7], -sub.C)
    assert np.all(aug.B_aug[7:] == 0)
    assert np.array_equal(aug.B_ref[7:], np.eye(4))


def test_augmented_identity_output():
    A = np.diag([-1.0, -2.0, 3.0])
    m = LinearModel(A, np.ones((3, 1)), np.eye(3), np.zeros(3), np.zeros(1))
    aug = augment_for_tracking(m)
    assert np.array_equal(aug.A_aug[3:, :3], -np.eye(3))


def test_augmented_spectrum(hover):
    aug = augment_for_tracking(hover)
    lam = np.sort_complex(np.linalg.eigvals(aug.A_aug))
    want = np.sort_complex(np.r_[np.linalg.eigvals(hover.A), np.zeros(4)])
    assert np.allclose(lam, want, atol=1e-6)


def test_lyapunov_scalar_case():
    assert np.allclose(solve_lyapunov(-np.eye(3), np.eye(3)), 0.5 * np.eye(3))


def test_lyapunov_oscillator_is_rejected():
    with pytest.raises((SingularPencil, Unstable)):
        solve_lyapunov(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(2))


def test_lyapunov_rejects_indefinite_q():
    with pytest.raises(ValueError):
        solve_lyapunov(-np.eye(2), np.diag([1.0, -1.0]))


def test_lyapunov_matches_library_solver():
    rng = np.random.default_rng(4)
    for _ in range(30):
        A = rng.normal(size=(6, 6))
        A -= (np.max(np.linalg.eigvals(A).real) + 0.5) * np.eye(6)
        Q = np.eye(6)
        Pm = solve_lyapunov(A, Q)
        assert np.allclose(Pm, oracles.lyapunov(A, Q), rtol=1e-8, atol=1e-10)
        assert np.linalg.norm(A.T @ Pm + Pm @ A + Q) < 1e-8 * np.linalg.norm(Q)


def test_lyapunov_unstable_matrix():
    with pytest.raises(Unstable):
        solve_lyapunov(np.diag([-1.0, 2.0]), np.eye(2))


def test_closed_loop_matches_transfer_function_on_scalar_plant():
    # double integrator y'' = u with PIDA: characteristic polynomial from the loop
    m = LinearModel(
        np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]), np.array([[1.0, 0.0]]),
        np.zeros(2), np.zeros(1),
    )
    g = PidaGains(3.0, 1.0, 2.0, 0.1, 0.05, "roll")
    # embed as a four-channel model where only the roll channel exists
    A = np.zeros((8, 8))
    A[:2, :2] = m.A
    B = np.zeros((8, 4))
    B[1, 0] = 1.0
    for k in range(1, 4):
        A[2 * k, 2 * k] = -1.0
        B[2 * k + 1, k] = 0.0
    C = np.zeros((4, 8))
    C[0, 0] = 1.0
    C[1, 2], C[2, 4], C[3, 6] = 1.0, 1.0, 1.0
    big = LinearModel(A, B, C, np.zeros(8), np.zeros(4), state_index=tuple(range(8)))
    gains = {ch: (g if ch == "roll" else PidaGains(0, 0, 0, 0, 0.05, ch)) for ch in CHANNELS}
    lam = np.linalg.eigvals(closed_loop_matrix(big, gains))
    # loop: s^2 Y = -(kp + ki/s + kd s/(Tf s+1) + ka s^2/(Tf s+1)^2) Y
    Tf = g.T_f
    s_poly = np.poly1d([1.0, 0.0])
    den = np.poly1d([Tf, 1.0]) ** 2
    char = (s_poly**3) * den + g.k_p * s_poly * den + g.k_i * den \
        + g.k_d * s_poly**2 * np.poly1d([Tf, 1.0]) + g.k_a * s_poly**3
    roots = np.roots(char.coeffs)
    for r in roots:
        assert np.min(np.abs(lam - r)) < 1e-6 * max(1.0, abs(r))


def test_zero_gains_are_not_certified(hover):
    gains = {ch: PidaGains(0, 0, 0, 0, 0.05, ch) for ch in CHANNELS}
    rep = certify_closed_loop(hover, gains)
    assert not rep.is_stable and rep.lyapunov_P is None


def test_reference_gains_with_pole_placement_kp_are_stable(hover):
    pp = pole_placement_gains(P)
    gains = {
        ch: PidaGains(pp[ch].k_p, *REFERENCE_GAINS[ch].as_array()[1:], channel=ch) for ch in CHANNELS
    }
    rep = certify_closed_loop(hover, gains)
    assert rep.is_stable and rep.max_real_part < 0
    np.linalg.cholesky(rep.lyapunov_P)


def test_pole_placement_seed_is_stable(hover):
    rep = certify_closed_loop(hover, pole_placement_gains(P))
    assert rep.is_stable
    assert rep.as_dict()["lyapunov_P_min_eig"] > 0


def test_report_consistency_over_random_matrices():
    rng = np.random.default_rng(5)
    for _ in range(100):
        A = rng.normal(size=(6, 6)) - rng.uniform(0, 3) * np.eye(6)
        rep = stability_report(A)
        assert rep.is_stable == (rep.max_real_part < 0)
        if rep.is_stable:
            assert np.all(np.linalg.eigvalsh(rep.lyapunov_P) > 0)


def test_nonfinite_gains_rejected(hover):
    gains = pole_placement_gains(P)
    gains = dict(gains)
    bad = PidaGains.__new__(PidaGains)
    object.__setattr__(bad, "k_p", float("nan"))
    for name in ("k_i", "k_d", "k_a", "T_f"):
        object.__setattr__(bad, name, 1.0)
    object.__setattr__(bad, "channel", "roll")
    gains["roll"] = bad
    with pytest.raises(ValueError):
        certify_closed_loop(hover, gains)
