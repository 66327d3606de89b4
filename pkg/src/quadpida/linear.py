"""Hover linearization, tracking augmentation and Lyapunov stability checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import dynamics as dyn
from .dynamics import QuadParams
from .errors import NotEquilibrium, SingularPencil, Unstable
from .pida import CHANNELS, PidaGains

# attitude/altitude subsystem that the four PIDA channels close around
CONTROLLED_STATES = (dyn.PHI, dyn.THETA, dyn.PSI, dyn.P, dyn.Q, dyn.R, dyn.W, dyn.Z)


@dataclass
class LinearModel:
    A: NDArray[np.float64]
    B: NDArray[np.float64]
    C: NDArray[np.float64]
    x_eq: NDArray[np.float64]
    u_eq: NDArray[np.float64]
    state_index: tuple[int, ...] = tuple(range(dyn.STATE_SIZE))

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape[0] != n or self.C.shape[1] != n:
            raise ValueError("inconsistent LinearModel dimensions")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.B))):
            raise ValueError("A and B must be finite")

    def subsystem(self, states: Sequence[int]) -> "LinearModel":
        """Restrict to a subset of full-state indices (must be closed under A)."""
        pos = [self.state_index.index(s) for s in states]
        return LinearModel(
            self.A[np.ix_(pos, pos)],
            self.B[pos, :],
            self.C[:, pos],
            self.x_eq,
            self.u_eq,
            tuple(states),
        )


@dataclass
class AugmentedModel:
    A_aug: NDArray[np.float64]
    B_aug: NDArray[np.float64]
    C_aug: NDArray[np.float64]
    B_ref: NDArray[np.float64]


@dataclass
class StabilityReport:
    eigenvalues: NDArray[np.complex128]
    max_real_part: float
    is_stable: bool
    lyapunov_P: NDArray[np.float64] | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "is_stable": bool(self.is_stable),
            "max_real_part": float(self.max_real_part),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "lyapunov_P_min_eig": (
                None if self.lyapunov_P is None else float(np.linalg.eigvalsh(self.lyapunov_P)[0])
            ),
            "notes": list(self.notes),
        }


def output_matrix(state_index: Sequence[int] = tuple(range(dyn.STATE_SIZE))) -> NDArray[np.float64]:
    """Rows select roll, pitch, yaw and altitude (= -z_E)."""
    C = np.zeros((4, len(state_index)))
    for row, (s, sign) in enumerate(((dyn.PHI, 1.0), (dyn.THETA, 1.0), (dyn.PSI, 1.0), (dyn.Z, -1.0))):
        C[row, state_index.index(s)] = sign
    return C


def hover_equilibrium(params: QuadParams) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    return dyn.hover_state(), np.array([0.0, 0.0, 0.0, params.hover_thrust])


def linearize(
    params: QuadParams,
    x_eq: ArrayLike | None = None,
    u_eq: ArrayLike | None = None,
    h: float = 1e-6,
) -> LinearModel:
    """Central-difference Jacobians of the nonlinear model about an equilibrium.

    ``h`` is a relative step: each coordinate is perturbed by
    ``h * max(1, |value|)``.
    """
    x0_default, u0_default = hover_equilibrium(params)
    x_eq = x0_default if x_eq is None else np.asarray(x_eq, dtype=float)
    u_eq = u0_default if u_eq is None else np.asarray(u_eq, dtype=float)

    f0 = dyn.state_derivative(x_eq, u_eq, None, params)
    if np.linalg.norm(f0) >= 1e-6:
        raise NotEquilibrium(f"|f(x_eq, u_eq)| = {np.linalg.norm(f0):.3e} is not an equilibrium")

    def jac(fun, z0):
        cols = []
        for i in range(z0.size):
            step = h * max(1.0, abs(z0[i]))
            zp, zm = z0.copy(), z0.copy()
            zp[i] += step
            zm[i] -= step
            cols.append((fun(zp) - fun(zm)) / (2.0 * step))
        return np.column_stack(cols)

    A = jac(lambda x: dyn.state_derivative(x, u_eq, None, params), x_eq)
    B = jac(lambda u: dyn.state_derivative(x_eq, u, None, params), u_eq)
    return LinearModel(A, B, output_matrix(), x_eq, u_eq)


def augment_for_tracking(model: LinearModel) -> AugmentedModel:
    """Append integral-of-error states: d/dt x_N = r - C x."""
    A, B, C = model.A, model.B, model.C
    n, m = B.shape
    p = C.shape[0]
    if A.shape != (n, n) or C.shape != (p, n):
        raise ValueError("dimension mismatch between A, B and C")
    A_aug = np.block([[A, np.zeros((n, p))], [-C, np.zeros((p, p))]])
    B_aug = np.vstack([B, np.zeros((p, m))])
    C_aug = np.hstack([C, np.zeros((p, p))])
    B_ref = np.vstack([np.zeros((n, p)), np.eye(p)])
    return AugmentedModel(A_aug, B_aug, C_aug, B_ref)


def solve_lyapunov(A: ArrayLike, Q: ArrayLike, rtol: float = 1e-8) -> NDArray[np.float64]:
    """Solve ``A.T @ P + P @ A = -Q`` through the Kronecker-product linear system.

    Returns the symmetric positive definite ``P``. Raises :class:`SingularPencil`
    when two eigenvalues of ``A`` sum to zero (no unique solution) and
    :class:`Unstable` when the unique solution is not positive definite.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    if not np.allclose(Q, Q.T):
        raise ValueError("Q must be symmetric")
    if np.linalg.eigvalsh(Q)[0] <= 0:
        raise ValueError("Q must be positive definite")

    lam = np.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(lam))))
    pair_sums = np.abs(lam[:, None] + lam[None, :])
    if np.min(pair_sums) <= 1e-10 * scale:
        raise SingularPencil("A has eigenvalues with lambda_i + lambda_j = 0")

    eye = np.eye(n)
    # row-major vec: vec(A.T P) = kron(A.T, I) vec(P), vec(P A) = kron(I, A.T) vec(P)
    K = np.kron(A.T, eye) + np.kron(eye, A.T)
    P = np.linalg.solve(K, -Q.reshape(-1)).reshape(n, n)
    P = 0.5 * (P + P.T)

    resid = np.linalg.norm(A.T @ P + P @ A + Q)
    if resid >= rtol * np.linalg.norm(Q):
        # one refinement sweep on the residual before giving up
        P = P + np.linalg.solve(K, -(A.T @ P + P @ A + Q).reshape(-1)).reshape(n, n)
        P = 0.5 * (P + P.T)
        resid = np.linalg.norm(A.T @ P + P @ A + Q)
        if resid >= rtol * np.linalg.norm(Q):
            raise SingularPencil(f"Lyapunov residual {resid:.3e} above tolerance")

    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise Unstable("Lyapunov solution is not positive definite") from None
    return P


def closed_loop_matrix(
    model: LinearModel, gains: Mapping[str, PidaGains]
) -> NDArray[np.float64]:
    """State matrix of plant + four continuous PIDA channels (reference = 0).

    Per channel the controller carries three states: the error integral ``xi``
    and the two first-order filter states ``z1``, ``z2`` with::

        f1 = (e - z1)/Tf,  z1' = f1
        f2 = (f1 - z2)/Tf, z2' = f2
        u  = kp e + ki xi + kd f1 + ka f2

    The four channel outputs drive the four plant inputs in order.
    """
    A, B, C = model.A, model.B, model.C
    n = A.shape[0]
    nc = 3 * len(CHANNELS)
    # express e, f1, f2, u as linear maps of the closed-loop state [x; xc]
    Acl = np.zeros((n + nc, n + nc))
    Bu = np.zeros((len(CHANNELS), n + nc))
    for k, ch in enumerate(CHANNELS):
        g = gains[ch]
        i_xi, i_z1, i_z2 = n + 3 * k, n + 3 * k + 1, n + 3 * k + 2
        e = np.zeros(n + nc)
        e[:n] = -C[k]
        z1 = np.zeros(n + nc)
        z1[i_z1] = 1.0
        z2 = np.zeros(n + nc)
        z2[i_z2] = 1.0
        xi = np.zeros(n + nc)
        xi[i_xi] = 1.0
        f1 = (e - z1) / g.T_f
        f2 = (f1 - z2) / g.T_f
        Acl[i_xi] = e
        Acl[i_z1] = f1
        Acl[i_z2] = f2
        Bu[k] = g.k_p * e + g.k_i * xi + g.k_d * f1 + g.k_a * f2
    Acl[:n, :n] = A
    Acl[:n] += B @ Bu
    return Acl


def stability_report(A_cl: ArrayLike, notes: Sequence[str] = ()) -> StabilityReport:
    A_cl = np.asarray(A_cl, dtype=float)
    lam = np.linalg.eigvals(A_cl)
    max_re = float(np.max(lam.real))
    notes = list(notes)
    try:
        P = solve_lyapunov(A_cl, np.eye(A_cl.shape[0]))
    except Unstable as exc:
        P = None
        notes.append(f"{type(exc).__name__}: {exc}")
    return StabilityReport(lam, max_re, P is not None, P, notes)


def certify_closed_loop(
    model: LinearModel, gains: Mapping[str, PidaGains]
) -> StabilityReport:
    """Spectrum and Lyapunov certificate (Q = I) of the PIDA closed loop.

    Full 12-state models are first reduced to the attitude/altitude subsystem:
    horizontal velocity and position are not fed back by the four channels and
    would contribute uncontrollable zero eigenvalues.
    """
    for ch in CHANNELS:
        g = gains[ch]
        if not np.all(np.isfinite(g.as_array())):
            raise ValueError(f"non-finite gains for {ch}")
    if model.state_index == tuple(range(dyn.STATE_SIZE)):
        model = model.subsystem(CONTROLLED_STATES)
    return stability_report(closed_loop_matrix(model, gains))
