"""Internal-model output regulator for left-invariant kinematics on a matrix group.

Plant ``dX/dt = X U`` (body velocity), reference from :mod:`.exosystem`.  The
controller sees only the plant pose ``X`` and the relative measurements
``y_i = X^-1 X_d y0_i``; the exosystem state is used for logging only.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .exosystem import ExoParams
from .lie import (
    GroupTag,
    LieContractError,
    adjoint,
    check_group,
    duplication_Q,
    exp_map,
    hat,
    inverse,
    proj_algebra,
    vee,
)


@functools.lru_cache(maxsize=None)
def _q_form(tag: GroupTag) -> np.ndarray:
    Q = duplication_Q(tag)[1]
    Q.flags.writeable = False
    return Q


@dataclass(frozen=True)
class MeasurementSet:
    """Known reference vectors ``y0_i`` (rows) and the constant offset ``X_r``."""

    tag: GroupTag
    ring_y: np.ndarray
    X_r: np.ndarray = None
    y_r: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        tag = GroupTag.parse(self.tag)
        ring_y = np.array(self.ring_y, dtype=float, ndmin=2)
        if ring_y.ndim != 2 or ring_y.shape[0] < 1 or ring_y.shape[1] != tag.n:
            raise LieContractError(f"need at least one reference vector of length {tag.n}, got shape {ring_y.shape}")
        X_r = np.eye(tag.n) if self.X_r is None else check_group(tag, self.X_r).copy()
        y_r = ring_y @ X_r.T
        for a in (ring_y, X_r, y_r):
            a.flags.writeable = False
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "ring_y", ring_y)
        object.__setattr__(self, "X_r", X_r)
        object.__setattr__(self, "y_r", y_r)

    @property
    def nu(self) -> int:
        return self.ring_y.shape[0]

    def cost(self, E_r) -> float:
        """``1/2 sum |y_r_i - E_r y_r_i|^2``."""
        d = self.y_r - self.y_r @ np.asarray(E_r, dtype=float).T
        return 0.5 * float(np.sum(d * d))

    def cost_hessian(self) -> np.ndarray:
        """Hessian of ``cost(exp(hat(v)))`` at ``v = 0``.

        For linear actions a null direction of this matrix is a whole
        one-parameter subgroup on which the cost vanishes identically.
        """
        G = [np.column_stack([hat(self.tag, b) @ y for b in np.eye(self.tag.k)]) for y in self.y_r]
        return sum(g.T @ g for g in G)

    def check_local_positivity(self, samples: int = 1000, radius: float = 0.5, seed: int = 0) -> list[str]:
        """Numerical check that the cost is locally positive definite around ``I``.

        Returns a list of problems (empty when the check passes).
        """
        problems = []
        eig = np.linalg.eigvalsh(self.cost_hessian())
        if eig[0] <= 1e-12 * max(1.0, eig[-1]):
            problems.append(
                f"measurement cost is degenerate at the identity (smallest Hessian eigenvalue {eig[0]:.3e}); "
                "add independent reference vectors"
            )
        rng = np.random.default_rng(seed)
        k = self.tag.k
        dirs = rng.standard_normal((samples, k))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = radius * rng.uniform(size=samples) ** (1.0 / k)
        for v in dirs * radii[:, None]:
            if np.linalg.norm(v) <= 1e-6:
                continue
            c = self.cost(exp_map(self.tag, hat(self.tag, v), check=False))
            if c <= 1e-12:
                problems.append(f"measurement cost vanishes at sampled error exp(hat({np.round(v, 6).tolist()}))")
                break
        return problems


@dataclass(frozen=True)
class RegulatorGains:
    kp: float
    kI: float

    def __post_init__(self):
        if not (self.kp > 0 and self.kI > 0):
            raise LieContractError(f"gains must be positive, got kp={self.kp}, kI={self.kI}")


@dataclass(frozen=True)
class ErrorSnapshot:
    """Ground-truth error quantities at one instant (never fed to the controller)."""

    E: np.ndarray
    E_r: np.ndarray
    e: np.ndarray
    w_tilde: np.ndarray | None = None
    Delta_tilde: np.ndarray | None = None


def measure(tag: GroupTag, X, X_d, ms: MeasurementSet) -> np.ndarray:
    """Relative measurements ``y_i = X^-1 X_d y0_i`` stacked as rows."""
    E = inverse(tag, X) @ np.asarray(X_d, dtype=float)
    return ms.ring_y @ E.T


def error_vectors(ms: MeasurementSet, y) -> np.ndarray:
    return ms.y_r - np.asarray(y, dtype=float)


def control(tag: GroupTag, X, y, ms: MeasurementSet, gains: RegulatorGains, delta, exo: ExoParams):
    """Regulator output for the current pose and measurements.

    Returns ``(U, beta, Delta)``: the body velocity input, the innovation
    driving the internal model and the internal-model velocity estimate.
    """
    X = np.asarray(X, dtype=float)
    e = error_vectors(ms, y)
    Xinv = inverse(tag, X)
    Delta = hat(tag, exo.C @ np.asarray(delta, dtype=float))
    A = sum(np.outer(ei, yi_r - ei) for ei, yi_r in zip(e, ms.y_r))
    U = Xinv @ Delta @ X - gains.kp * proj_algebra(tag, A)
    beta = -gains.kI * proj_algebra(tag, Xinv.T @ A @ X.T)
    return U, beta, Delta


def internal_model_step(tag: GroupTag, delta, beta, exo: ExoParams) -> np.ndarray:
    """``d delta/dt = S delta + C^T Q vee(beta)``."""
    return exo.S @ np.asarray(delta, dtype=float) + exo.C.T @ (_q_form(tag) @ vee(tag, beta, check=False))


def lyapunov(e, w_tilde, kI: float) -> tuple[float, float, float]:
    """``(L, L1, L2)`` with ``L1 = 1/2 sum |e_i|^2`` and ``L2 = |w~|^2 / (2 kI)``."""
    e = np.asarray(e, dtype=float)
    w_tilde = np.asarray(w_tilde, dtype=float)
    L1 = 0.5 * float(np.sum(e * e))
    L2 = float(w_tilde @ w_tilde) / (2.0 * kI)
    return L1 + L2, L1, L2


def _projected_terms(tag, E_r, e, ms):
    E_r = np.asarray(E_r, dtype=float)
    return [proj_algebra(tag, np.outer(E_r @ yr, ei).T) for ei, yr in zip(np.asarray(e, dtype=float), ms.y_r)]


def lyapunov_rate_bound(tag: GroupTag, E_r, e, gains: RegulatorGains, ms: MeasurementSet) -> float:
    """Termwise form ``-kp sum_i ||P((E_r y_r_i e_i^T)^T)||_F^2``.

    This coincides with the closed-loop derivative of ``L`` only for a single
    measurement; with several measurements the cross terms are missing, see
    :func:`lyapunov_rate`.  Always ``<= 0``.
    """
    return -gains.kp * sum(float(np.sum(P * P)) for P in _projected_terms(tag, E_r, e, ms))


def lyapunov_rate(tag: GroupTag, E_r, e, gains: RegulatorGains, ms: MeasurementSet) -> float:
    """Exact closed-loop derivative ``-kp ||sum_i P((E_r y_r_i e_i^T)^T)||_F^2``."""
    P = sum(_projected_terms(tag, E_r, e, ms))
    return -gains.kp * float(np.sum(P * P))


def error_dynamics_rhs(tag: GroupTag, E_r, U, X, U_d) -> np.ndarray:
    """``dE_r/dt = -(U - Ad_{X^-1} U_d) E_r``."""
    Xinv = inverse(tag, X)
    return -(np.asarray(U, dtype=float) - adjoint(tag, Xinv, U_d, check=False)) @ np.asarray(E_r, dtype=float)


def error_snapshot(tag: GroupTag, X, X_d, ms: MeasurementSet, w=None, delta=None, exo: ExoParams | None = None):
    E = inverse(tag, X) @ np.asarray(X_d, dtype=float)
    E_r = E @ inverse(tag, ms.X_r)
    e = ms.y_r - ms.y_r @ E_r.T
    w_tilde = Delta_tilde = None
    if w is not None and delta is not None:
        w_tilde = np.asarray(w, dtype=float) - np.asarray(delta, dtype=float)
        if exo is not None:
            Delta_tilde = hat(tag, exo.C @ w_tilde)
    return ErrorSnapshot(E, E_r, e, w_tilde, Delta_tilde)
