"""Attitude regulation on SO(3): kinematic law, rigid-body backstepping and
the equilibrium / linearization analysis of the closed loop.

Vectors are 3-vectors, ``skew`` is the cross-product matrix.  Measurements are
body-frame directions ``y_i = R^T R_d y0_i``; the reference directions are
``y_r_i = X_r y0_i`` and the errors ``e_i = y_r_i - y_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .exosystem import ExoParams
from .lie import GroupTag, LieContractError, rotation_angle, skew
from .regulator import MeasurementSet, internal_model_step

SO3 = GroupTag.SO3
BACKSTEP_LAWS = ("standard", "consistent")


@dataclass(frozen=True)
class RigidBody:
    """Inertia ``J`` (body frame, kg m^2), attitude ``R`` and body rate ``Omega``."""

    J: np.ndarray
    R: np.ndarray = None
    Omega: np.ndarray = None

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if J.shape != (3, 3) or not np.allclose(J, J.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(J).max())):
            raise LieContractError("inertia matrix must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(J)[0] <= 0.0:
            raise LieContractError("inertia matrix must be positive definite")
        R = np.eye(3) if self.R is None else np.array(self.R, dtype=float)
        Om = np.zeros(3) if self.Omega is None else np.array(self.Omega, dtype=float).reshape(3)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Omega", Om)


@dataclass(frozen=True)
class BackstepGains:
    kp: float
    kI: float
    kD: float

    def __post_init__(self):
        if not (self.kp > 0 and self.kI > 0 and self.kD > 0):
            raise LieContractError(f"gains must be positive, got {self}")


def _cross_sum(e, y_r) -> np.ndarray:
    """``sum_i e_i x y_r_i``."""
    return np.cross(np.asarray(e, dtype=float), y_r).sum(axis=0)


def so3_kinematic_control(R, y, ms: MeasurementSet, gains, delta, exo: ExoParams):
    """Angular-velocity command ``Omega_c`` and innovation ``beta`` (as a matrix).

    ``Omega_c = R^T C delta + kp/2 sum e_i x y_r_i`` and
    ``beta = hat(kI/2 R sum e_i x y_r_i)``.
    """
    R = np.asarray(R, dtype=float)
    s = _cross_sum(ms.y_r - np.asarray(y, dtype=float), ms.y_r)
    Omega_c = R.T @ (exo.C @ np.asarray(delta, dtype=float)) + 0.5 * gains.kp * s
    return Omega_c, skew(0.5 * gains.kI * (R @ s))


def rigid_body_rhs(body: RigidBody, Gamma) -> tuple[np.ndarray, np.ndarray]:
    """``(dR/dt, dOmega/dt)`` for ``dR/dt = R hat(Omega)``, ``J dOmega/dt = -Omega x J Omega + Gamma``."""
    Om = body.Omega
    Omega_dot = np.linalg.solve(body.J, -np.cross(Om, body.J @ Om) + np.asarray(Gamma, dtype=float))
    return body.R @ skew(Om), Omega_dot


@dataclass(frozen=True)
class BackstepOutput:
    Gamma: np.ndarray
    beta: np.ndarray
    Omega_tilde: np.ndarray
    Omega_c: np.ndarray
    delta_dot: np.ndarray


def backstep_torque(body: RigidBody, y, ms: MeasurementSet, gains: BackstepGains, delta, exo: ExoParams,
                    law: str = "standard") -> BackstepOutput:
    """Torque law backstepping the kinematic command through the rigid body.

    ``body`` carries the controller's inertia model (possibly different from
    the plant's).  Evaluation order: e -> Omega_c -> Omega~ -> beta ->
    d delta/dt -> d Delta/dt -> Gamma, so no implicit solve is needed.

    ``law="standard"`` uses coupling term
    ``2 sum e_i x y_r_i`` and ``kp`` on the ``Omega_c`` feed-forward.
    ``law="consistent"`` uses ``1 x`` and ``kp/2`` respectively, the values
    for which ``L + 1/2 Omega~^T J Omega~`` has derivative
    ``-kp/2 |sum e_i x y_r_i|^2 - kD |Omega~|^2`` exactly.
    """
    if law not in BACKSTEP_LAWS:
        raise ValueError(f"unknown backstepping law {law!r}; expected one of {BACKSTEP_LAWS}")
    R, Om, J = body.R, body.Omega, body.J
    delta = np.asarray(delta, dtype=float)
    e = ms.y_r - np.asarray(y, dtype=float)
    s = _cross_sum(e, ms.y_r)
    Delta = exo.C @ delta
    alpha = 0.5 * gains.kp * s
    Omega_c = R.T @ Delta + alpha
    Omega_tilde = Om - Omega_c
    M = sum(skew(yr) @ skew(yr - ei) for ei, yr in zip(e, ms.y_r))
    if law == "standard":
        ff_gain, coupling = gains.kp, 2.0
    else:
        ff_gain, coupling = 0.5 * gains.kp, 1.0
    beta = skew(0.5 * gains.kI * (R @ s + ff_gain * R @ M.T @ J.T @ Omega_tilde))
    delta_dot = internal_model_step(SO3, delta, beta, exo)
    Gamma = (np.cross(Om, J @ Om) - J @ skew(Om) @ R.T @ Delta + J @ R.T @ (exo.C @ delta_dot)
             + coupling * s + ff_gain * J @ M @ (Omega_tilde + alpha) - gains.kD * Omega_tilde)
    return BackstepOutput(Gamma, beta, Omega_tilde, Omega_c, delta_dot)


def backstep_energy(L: float, Omega_tilde, J) -> float:
    """``L_bs = L + 1/2 Omega~^T J Omega~``."""
    Ot = np.asarray(Omega_tilde, dtype=float)
    return L + 0.5 * float(Ot @ np.asarray(J, dtype=float) @ Ot)


def backstep_rate_bound(R_e, ms: MeasurementSet, gains: BackstepGains, Omega_tilde) -> float:
    """Termwise form ``-kp/4 sum_i ||hat(R_e y_r_i x y_r_i)||^2 - kD |Omega~|^2``."""
    c = np.cross(ms.y_r @ np.asarray(R_e, dtype=float).T, ms.y_r)
    Ot = np.asarray(Omega_tilde, dtype=float)
    # ||hat(v)||_F^2 = 2 |v|^2
    return -0.25 * gains.kp * 2.0 * float(np.sum(c * c)) - gains.kD * float(Ot @ Ot)


def backstep_rate(R_e, ms: MeasurementSet, gains: BackstepGains, Omega_tilde) -> float:
    """Exact derivative of ``L_bs`` under ``law="consistent"``:
    ``-kp/4 ||sum_i hat(R_e y_r_i x y_r_i)||^2 - kD |Omega~|^2``."""
    c = np.cross(ms.y_r @ np.asarray(R_e, dtype=float).T, ms.y_r).sum(axis=0)
    Ot = np.asarray(Omega_tilde, dtype=float)
    return -0.5 * gains.kp * float(c @ c) - gains.kD * float(Ot @ Ot)


# -- equilibria --------------------------------------------------------------

_SIGNS = {2: (1.0, -1.0, -1.0), 3: (-1.0, 1.0, -1.0), 4: (-1.0, -1.0, 1.0)}


@dataclass(frozen=True)
class EquilibriumReport:
    """Equilibria of the attitude error and the spectra governing their stability.

    ``equilibria[j]`` for j = 1..4; ``upsilon[j]`` and ``spectra[j]`` (closed
    form) for j = 2..4.  ``assumption3`` is False when fewer than two
    independent measurements are available or the eigenvalues of ``Y`` are
    not distinct.
    """

    Y: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    equilibria: dict
    upsilon: dict
    spectra: dict
    assumption3: bool
    residuals: dict = field(default_factory=dict)


def classify_equilibria(ms: MeasurementSet, kp: float, gap_tol: float = 1e-9) -> EquilibriumReport:
    if ms.tag is not SO3:
        raise LieContractError("equilibrium classification is specific to SO3")
    y_r = ms.y_r
    Y = 0.5 * kp * y_r.T @ y_r
    lam, U = np.linalg.eigh(Y)
    distinct = bool(np.min(np.diff(lam)) > gap_tol)
    independent = np.linalg.matrix_rank(y_r, tol=1e-9) >= 2
    equilibria = {1: np.eye(3)}
    for j, sg in _SIGNS.items():
        equilibria[j] = sum(s * np.outer(u, u) for s, u in zip(sg, U.T))
    hats = [skew(y) for y in y_r]
    upsilon = {j: 0.5 * kp * sum(equilibria[j] @ h @ equilibria[j] @ h for h in hats) for j in _SIGNS}
    l1, l2, l3 = lam
    spectra = {
        2: np.array([l2 + l3, l3 - l1, l2 - l1]),
        3: np.array([l3 - l2, l3 + l1, l1 - l2]),
        4: np.array([l2 - l3, l1 - l3, l1 + l2]),
    }
    residuals = {j: float(np.linalg.norm(Rs @ Y - Y @ Rs.T)) for j, Rs in equilibria.items()}
    return EquilibriumReport(Y, lam, U, equilibria, upsilon, spectra, distinct and independent, residuals)


def chetaev_direction(report: EquilibriumReport, j: int) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of ``Upsilon_j`` and a unit eigenvector for it."""
    lam, V = np.linalg.eigh(0.5 * (report.upsilon[j] + report.upsilon[j].T))
    return float(lam[-1]), V[:, -1]


def chetaev_value(x, theta, j: int, report: EquilibriumReport, gains) -> tuple[float, float]:
    """``V_j = kI/(2 kp) x^T Ups_j^T x - |theta|^2 / 4`` and ``dV_j/dt = kI/kp x^T Ups_j^T Ups_j x``."""
    if not report.assumption3:
        raise LieContractError("eigenvalues of Y are not distinct; Upsilon_j may be singular")
    if j not in _SIGNS:
        raise ValueError("Chetaev functions are defined for the spurious equilibria j = 2, 3, 4")
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    Ups = report.upsilon[j]
    V = gains.kI / (2.0 * gains.kp) * float(x @ Ups.T @ x) - 0.25 * float(theta @ theta)
    Vdot = gains.kI / gains.kp * float(x @ Ups.T @ Ups @ x)
    return V, Vdot


def chetaev_linear_rhs(x, theta, j: int, report: EquilibriumReport, gains, B) -> tuple[np.ndarray, np.ndarray]:
    """Linearized error dynamics around the spurious equilibrium ``j``.

    ``dx/dt = Ups_j x + B^T theta``, ``dtheta/dt = 2 kI/kp B Ups_j x`` with
    ``B = R_bar R_d``.
    """
    Ups = report.upsilon[j]
    B = np.asarray(B, dtype=float)
    x = np.asarray(x, dtype=float)
    return Ups @ x + B.T @ np.asarray(theta, dtype=float), 2.0 * gains.kI / gains.kp * B @ Ups @ x


# -- linearization at the identity --------------------------------------------

@dataclass(frozen=True)
class LinearizedLoop:
    """Linear time-varying model ``[dx; dtheta] = [[A, B^T], [-C, 0]] [x; theta]``
    with the constant certificate pair ``(P, Q)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    @property
    def system_matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B.T], [-self.C, np.zeros((3, 3))]])

    def certificate_residuals(self) -> tuple[float, float]:
        """``(||P B^T - C^T||, ||A^T P + P A + Q||)``; ``dP/dt = 0``."""
        r1 = np.linalg.norm(self.P @ self.B.T - self.C.T)
        r2 = np.linalg.norm(self.A.T @ self.P + self.P @ self.A + self.Q)
        return float(r1), float(r2)


def linearize_closed_loop(R_bar, R_d, ms: MeasurementSet, gains) -> LinearizedLoop:
    N = sum(skew(y) @ skew(y) for y in ms.y_r)
    B = np.asarray(R_bar, dtype=float) @ np.asarray(R_d, dtype=float)
    P = gains.kI * sum(skew(y) @ skew(y).T for y in ms.y_r)
    return LinearizedLoop(
        A=0.5 * gains.kp * N,
        B=B,
        C=-gains.kI * B @ N,
        P=P,
        Q=gains.kp / gains.kI * P @ P,
    )


def excitation_gramian(B_of_t, t0: float, T: float) -> np.ndarray:
    """``int_{t0}^{t0+T} B(tau) B(tau)^T dtau`` by adaptive quadrature."""
    val, _ = quad_vec(lambda tau: B_of_t(tau) @ B_of_t(tau).T, t0, t0 + T, epsabs=1e-13, epsrel=1e-13)
    return val


def geodesic_distance(R1, R2) -> float:
    return rotation_angle(SO3, np.asarray(R1, dtype=float).T @ np.asarray(R2, dtype=float))
