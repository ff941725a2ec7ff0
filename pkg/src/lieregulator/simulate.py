"""Closed-loop assembly, trajectory logging and the two integration engines.

``ClosedLoop`` ties plant, exosystem, measurements and controller together.
It can be integrated by the generic numpy integrator (any group) or, for the
SO(3) modes, by the compiled kernel in :mod:`._kernels`; both produce the
same :class:`TrajectoryLog`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exosystem import ExoParams, exo_velocity
from .integrator import GroupSlot, HybridState, IntegrationError, Side, StepConfig, integrate, n_steps
from .lie import GroupTag, inverse, orthogonality_defect, skew, vee
from .regulator import (
    MeasurementSet,
    RegulatorGains,
    control,
    error_snapshot,
    internal_model_step,
    lyapunov,
    lyapunov_rate,
    lyapunov_rate_bound,
)
from .so3 import (
    BackstepGains,
    RigidBody,
    backstep_energy,
    backstep_rate,
    backstep_rate_bound,
    backstep_torque,
    so3_kinematic_control,
)

MODES = ("kinematic_general", "kinematic_so3", "dynamic_so3_backstep")
ENGINES = ("auto", "python", "compiled")


@dataclass(frozen=True)
class ClosedLoop:
    """Plant + exosystem + regulator with initial conditions.

    ``J_nom`` is the controller's inertia model, ``J_real`` the plant's
    (dynamic mode only).
    """

    mode: str
    ms: MeasurementSet
    exo: ExoParams
    gains: RegulatorGains | BackstepGains
    X0: np.ndarray
    Xd0: np.ndarray
    w0: np.ndarray
    delta0: np.ndarray
    Omega0: np.ndarray | None = None
    J_nom: np.ndarray | None = None
    J_real: np.ndarray | None = None
    law: str = "standard"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.mode != "kinematic_general" and self.tag is not GroupTag.SO3:
            raise ValueError(f"mode {self.mode} requires the SO3 group")
        if self.mode == "dynamic_so3_backstep":
            if self.J_nom is None:
                raise ValueError("dynamic mode needs J_nom")
            object.__setattr__(self, "J_real", self.J_nom if self.J_real is None else self.J_real)
            object.__setattr__(self, "Omega0", np.zeros(3) if self.Omega0 is None else self.Omega0)
            if not hasattr(self.gains, "kD"):
                raise ValueError("dynamic mode needs backstepping gains (kp, kI, kD)")

    @property
    def tag(self) -> GroupTag:
        return self.ms.tag

    @property
    def dynamic(self) -> bool:
        return self.mode == "dynamic_so3_backstep"

    @property
    def slots(self) -> tuple[GroupSlot, GroupSlot]:
        return GroupSlot(self.tag, Side.RIGHT), GroupSlot(self.tag, Side.LEFT)

    def initial_state(self) -> HybridState:
        vectors = [np.array(self.w0, dtype=float), np.array(self.delta0, dtype=float)]
        if self.dynamic:
            vectors.append(np.array(self.Omega0, dtype=float))
        return HybridState(0.0, (np.array(self.X0, dtype=float), np.array(self.Xd0, dtype=float)), tuple(vectors))

    def measurements(self, X, X_d) -> np.ndarray:
        return self.ms.ring_y @ (inverse(self.tag, X) @ X_d).T

    def controller(self, X, X_d, delta, Omega=None):
        """Controller outputs for the current state.

        Returns ``(velocity of X as algebra matrix or None, d delta/dt, extras)``.
        Only ``X``, the measurements and ``delta`` reach the control laws.
        """
        y = self.measurements(X, X_d)
        if self.mode == "kinematic_general":
            U, beta, _ = control(self.tag, X, y, self.ms, self.gains, delta, self.exo)
            return U, internal_model_step(self.tag, delta, beta, self.exo), {"U": U}
        if self.mode == "kinematic_so3":
            Omega_c, beta = so3_kinematic_control(X, y, self.ms, self.gains, delta, self.exo)
            U = skew(Omega_c)
            return U, internal_model_step(self.tag, delta, beta, self.exo), {"U": U}
        out = backstep_torque(RigidBody(self.J_nom, X, Omega), y, self.ms, self.gains, delta, self.exo, self.law)
        return None, out.delta_dot, {"bs": out}

    def rhs(self, t, groups, vectors):
        X, X_d = groups
        w, delta = vectors[0], vectors[1]
        U_d = exo_velocity(self.exo, w)
        if not self.dynamic:
            U, delta_dot, _ = self.controller(X, X_d, delta)
            return (U, U_d), (self.exo.S @ w, delta_dot)
        Omega = vectors[2]
        _, delta_dot, extra = self.controller(X, X_d, delta, Omega)
        J = self.J_real
        Omega_dot = np.linalg.solve(J, -np.cross(Omega, J @ Omega) + extra["bs"].Gamma)
        return (skew(Omega), U_d), (self.exo.S @ w, delta_dot, Omega_dot)

    # -- logging ------------------------------------------------------------

    def columns(self) -> list[str]:
        cols = ["t", "group_error"] + [f"e{i + 1}_norm" for i in range(self.ms.nu)]
        cols += ["e_sq_sum", "w_tilde_norm"]
        if self.dynamic:
            cols += ["omega_tilde_norm", "L", "L1", "L2", "L_bs", "gamma_norm", "dLbs_rate", "dLbs_rate_bound"]
        else:
            cols += ["L", "L1", "L2", "u_norm", "dL_rate", "dL_rate_bound"]
        cols += ["drift"]
        return cols

    def observe(self, state: HybridState) -> list[float]:
        X, X_d = state.groups
        w, delta = state.vectors[0], state.vectors[1]
        snap = error_snapshot(self.tag, X, X_d, self.ms, w, delta, self.exo)
        if self.tag is GroupTag.SO3:
            group_error = float(np.trace(np.eye(3) - snap.E_r))
        else:
            group_error = float(np.linalg.norm(snap.E_r - np.eye(self.tag.n)))
        e_norms = np.linalg.norm(snap.e, axis=1)
        L, L1, L2 = lyapunov(snap.e, snap.w_tilde, self.gains.kI)
        row = [state.t, group_error, *e_norms, float(np.sum(e_norms**2)), float(np.linalg.norm(snap.w_tilde))]
        if self.dynamic:
            Omega = state.vectors[2]
            _, _, extra = self.controller(X, X_d, delta, Omega)
            bs = extra["bs"]
            row += [
                float(np.linalg.norm(bs.Omega_tilde)), L, L1, L2,
                backstep_energy(L, bs.Omega_tilde, self.J_real),
                float(np.linalg.norm(bs.Gamma)),
                backstep_rate(snap.E_r, self.ms, self.gains, bs.Omega_tilde),
                backstep_rate_bound(snap.E_r, self.ms, self.gains, bs.Omega_tilde),
            ]
        else:
            U, _, _ = self.controller(X, X_d, delta)
            row += [
                L, L1, L2,
                float(np.linalg.norm(vee(self.tag, U, check=False))),
                lyapunov_rate(self.tag, snap.E_r, snap.e, self.gains, self.ms),
                lyapunov_rate_bound(self.tag, snap.E_r, snap.e, self.gains, self.ms),
            ]
        row.append(orthogonality_defect(self.tag, X))
        return row

    def observe_so3_batch(self, t, R, Rd, w, delta, Omega=None) -> np.ndarray:
        """Vectorized :meth:`observe` for stacked SO(3) states (one row per sample)."""
        yr, kp, kI = self.ms.y_r, self.gains.kp, self.gains.kI
        E_r = np.einsum("nji,njk,lk->nil", R, Rd, self.ms.X_r)
        e = yr[None] - np.einsum("nab,ib->nia", E_r, yr)
        e_sq = np.einsum("nia,nia->ni", e, e)
        w_tilde = w - delta
        L1 = 0.5 * e_sq.sum(axis=1)
        L2 = np.einsum("na,na->n", w_tilde, w_tilde) / (2.0 * kI)
        L = L1 + L2
        cr = np.cross(e, yr[None])
        s = cr.sum(axis=1)
        s_sq = np.einsum("na,na->n", s, s)
        cr_sq = np.einsum("nia,nia->n", cr, cr)
        Delta = delta @ self.exo.C.T
        alpha = 0.5 * kp * s
        Omega_c = np.einsum("nji,nj->ni", R, Delta) + alpha
        cols = [t, 3.0 - np.einsum("nii->n", E_r), *np.sqrt(e_sq).T, e_sq.sum(axis=1),
                np.linalg.norm(w_tilde, axis=1)]
        if self.dynamic:
            J, Jr, g = self.J_nom, self.J_real, self.gains
            ff, coupling = (kp, 2.0) if self.law == "standard" else (0.5 * kp, 1.0)
            Ot = Omega - Omega_c
            hy = np.array([skew(y) for y in yr])
            hb = np.array([[skew(v) for v in row] for row in (yr[None] - e)])
            M = np.einsum("iab,nibc->nac", hy, hb)
            beta = 0.5 * kI * (np.einsum("nab,nb->na", R, s)
                               + ff * np.einsum("nab,ncb,dc,nd->na", R, M, J, Ot))
            delta_dot = delta @ self.exo.S.T + (2.0 * beta) @ self.exo.C
            Gamma = (np.cross(Omega, Omega @ J.T)
                     - np.cross(Omega, np.einsum("nji,nj->ni", R, Delta)) @ J.T
                     + np.einsum("nji,nj->ni", R, delta_dot @ self.exo.C.T) @ J.T
                     + coupling * s + ff * np.einsum("nab,nb->na", M, Ot + alpha) @ J.T - g.kD * Ot)
            ot_sq = np.einsum("na,na->n", Ot, Ot)
            cols += [np.sqrt(ot_sq), L, L1, L2, L + 0.5 * np.einsum("na,ab,nb->n", Ot, Jr, Ot),
                     np.linalg.norm(Gamma, axis=1), -0.5 * kp * s_sq - g.kD * ot_sq, -0.5 * kp * cr_sq - g.kD * ot_sq]
        else:
            cols += [L, L1, L2, np.linalg.norm(Omega_c, axis=1), -0.5 * kp * s_sq, -0.5 * kp * cr_sq]
        D = np.einsum("nji,njk->nik", R, R) - np.eye(3)
        cols.append(np.sqrt(np.einsum("nij,nij->n", D, D)))
        return np.column_stack(cols)


@dataclass
class TrajectoryLog:
    """Time-indexed table of logged quantities (first column ``t``)."""

    columns: list[str]
    data: np.ndarray
    status: str = "ok"
    message: str = ""
    failed_at: float | None = None
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def __len__(self) -> int:
        return self.data.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.data:
                writer.writerow([format(float(v), ".17g") for v in row])

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            rows = [[float(v) for v in row] for row in reader]
        return cls(columns, np.array(rows, dtype=float).reshape(-1, len(columns)))


def _engine_for(loop: ClosedLoop, engine: str) -> str:
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    if engine == "auto":
        return "compiled" if loop.mode != "kinematic_general" else "python"
    if engine == "compiled" and loop.mode == "kinematic_general":
        raise ValueError("the compiled engine only covers the SO3 modes")
    return engine


def _run_python(loop: ClosedLoop, t_end, cfg, log_every):
    rows = []
    status, message, failed_at = "ok", "", None
    try:
        integrate(loop.rhs, loop.slots, loop.initial_state(), t_end, cfg, log_every,
                  sink=lambda s: rows.append(loop.observe(s)))
    except IntegrationError as exc:
        status, message, failed_at = "failed", str(exc), exc.t
    return rows, status, message, failed_at


def _kernel_run(loop: ClosedLoop, t_end, cfg, log_every):
    n = n_steps(t_end, cfg.h)
    dyn = loop.dynamic
    J_nom = np.array(loop.J_nom if dyn else np.eye(3), dtype=float)
    J_real = np.array(loop.J_real if dyn else np.eye(3), dtype=float)
    kD = float(loop.gains.kD) if dyn else 0.0
    out = _kernels.simulate(
        _kernels.MODE_DYNAMIC if dyn else _kernels.MODE_KINEMATIC,
        _kernels.LAW_CONSISTENT if loop.law == "consistent" else _kernels.LAW_STANDARD,
        cfg.method == "rkmk4", float(cfg.h), n, int(cfg.retract_every), int(log_every),
        np.array(loop.X0, dtype=float), np.array(loop.Xd0, dtype=float),
        np.array(loop.w0, dtype=float), np.array(loop.delta0, dtype=float),
        np.array(loop.Omega0 if dyn else np.zeros(3), dtype=float),
        np.ascontiguousarray(loop.ms.ring_y), np.ascontiguousarray(loop.ms.y_r),
        np.ascontiguousarray(loop.exo.C), np.ascontiguousarray(loop.exo.S),
        float(loop.gains.kp), float(loop.gains.kI), kD, J_nom, J_real,
    )
    return out


def _run_compiled(loop: ClosedLoop, t_end, cfg, log_every):
    R_log, Rd_log, w_log, d_log, Om_log, steps_log, code, stopped = _kernel_run(loop, t_end, cfg, log_every)
    rows = loop.observe_so3_batch(steps_log * cfg.h, R_log, Rd_log, w_log, d_log, Om_log)
    if code == _kernels.STATUS_OK:
        return rows, "ok", "", None
    t_fail = stopped * cfg.h
    reason = "non-finite state" if code == _kernels.STATUS_NONFINITE else "group drift beyond retraction limit"
    return rows, "failed", f"t={t_fail:.6g}: {reason}", t_fail


def simulate(loop: ClosedLoop, t_end: float, cfg: StepConfig = StepConfig(), log_every: int = 1,
             engine: str = "auto") -> TrajectoryLog:
    """Run the closed loop and return the decimated log.

    Integration failures do not raise; they are reported through
    ``status``/``message``/``failed_at`` with the rows logged so far.
    """
    eng = _engine_for(loop, engine)
    runner = _run_compiled if eng == "compiled" else _run_python
    rows, status, message, failed_at = runner(loop, t_end, cfg, log_every)
    cols = loop.columns()
    data = np.array(rows, dtype=float).reshape(-1, len(cols))
    return TrajectoryLog(cols, data, status, message, failed_at, meta={"engine": eng})


@dataclass
class StateHistory:
    """Raw logged states: ``X``, ``X_d`` stacked along the first axis, vectors as rows."""

    t: np.ndarray
    X: np.ndarray
    X_d: np.ndarray
    w: np.ndarray
    delta: np.ndarray
    Omega: np.ndarray | None
    status: str


def simulate_states(loop: ClosedLoop, t_end: float, cfg: StepConfig = StepConfig(), log_every: int = 1,
                    engine: str = "auto") -> StateHistory:
    """Like :func:`simulate` but returns the group and vector states themselves."""
    if _engine_for(loop, engine) == "compiled":
        R, Rd, w, d, Om, steps, code, _ = _kernel_run(loop, t_end, cfg, log_every)
        return StateHistory(steps * cfg.h, R, Rd, w, d, Om if loop.dynamic else None,
                            "ok" if code == _kernels.STATUS_OK else "failed")
    states = []
    status = "ok"
    try:
        integrate(loop.rhs, loop.slots, loop.initial_state(), t_end, cfg, log_every, sink=states.append)
    except IntegrationError:
        status = "failed"
    return StateHistory(
        np.array([s.t for s in states]),
        np.array([s.groups[0] for s in states]),
        np.array([s.groups[1] for s in states]),
        np.array([s.vectors[0] for s in states]),
        np.array([s.vectors[1] for s in states]),
        np.array([s.vectors[2] for s in states]) if loop.dynamic else None,
        status,
    )


def convergence_time(t, values, threshold: float) -> float | None:
    """First time after which ``values`` stays at or below ``threshold``."""
    above = np.nonzero(np.asarray(values) > threshold)[0]
    if len(above) == 0:
        return float(t[0])
    last = above[-1]
    if last == len(values) - 1:
        return None
    return float(t[last + 1])


def max_increase(values) -> float:
    """Largest increase between consecutive samples (0 if non-increasing)."""
    d = np.diff(np.asarray(values, dtype=float))
    return float(max(0.0, d.max())) if len(d) else 0.0


def rotation_error_angle(tr_err: float) -> float:
    """Rotation angle from ``tr(I - R)``."""
    return math.acos(max(-1.0, min(1.0, 1.0 - 0.5 * tr_err)))
