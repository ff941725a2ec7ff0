"""Right-invariant reference generator driven by a skew linear oscillator.

The reference pose moves with an *inertial* velocity, so the velocity
multiplies from the left::

    dX_d/dt = hat(C w) X_d,     dw/dt = S w,     S = -S^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .lie import GroupTag, LieContractError, hat


class ExosystemError(LieContractError):
    pass


@dataclass(frozen=True)
class ExoParams:
    """Output map ``C`` (kappa x m) and skew generator ``S`` (m x m)."""

    tag: GroupTag
    C: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        tag = GroupTag.parse(self.tag)
        C = np.array(self.C, dtype=float, ndmin=2)
        S = np.array(self.S, dtype=float, ndmin=2)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ExosystemError(f"S must be square, got shape {S.shape}")
        if not np.array_equal(S, -S.T):
            raise ExosystemError("skewness check failed: S must satisfy S = -S^T exactly")
        if C.shape[1] != S.shape[0]:
            raise ExosystemError(f"C has {C.shape[1]} columns but S is {S.shape[0]}x{S.shape[0]}")
        if C.shape[0] != tag.k:
            raise ExosystemError(f"C must have {tag.k} rows for {tag.value}, got {C.shape[0]}")
        if S.shape[0] < C.shape[0]:
            raise ExosystemError(f"oscillator dimension m={S.shape[0]} must be at least kappa={C.shape[0]}")
        C.flags.writeable = False
        S.flags.writeable = False
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "S", S)

    @property
    def m(self) -> int:
        return self.S.shape[0]

    @property
    def kappa(self) -> int:
        return self.C.shape[0]


def exo_velocity(p: ExoParams, w) -> np.ndarray:
    """Inertial reference velocity ``hat(C w)``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (p.m,):
        raise ExosystemError(f"w must have length {p.m}, got shape {w.shape}")
    return hat(p.tag, p.C @ w)


def exo_vector_field(p: ExoParams, X_d, w) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives ``(dX_d/dt, dw/dt)``."""
    return exo_velocity(p, w) @ np.asarray(X_d, dtype=float), p.S @ w


def harmonic_exo(amplitudes, frequencies, tag: GroupTag) -> tuple[ExoParams, np.ndarray]:
    """Exosystem whose velocity coordinates are ``a_j cos(omega_j t)``.

    One 2x2 rotation block per algebra axis; ``C`` reads the first state of
    each block.
    """
    tag = GroupTag.parse(tag)
    a = np.asarray(amplitudes, dtype=float).reshape(-1)
    om = np.asarray(frequencies, dtype=float).reshape(-1)
    if a.shape != (tag.k,) or om.shape != (tag.k,):
        raise ExosystemError(f"need one amplitude and one frequency per axis ({tag.k} each) for {tag.value}")
    if np.any(om <= 0.0):
        raise ExosystemError("harmonic frequencies must be positive; use constant_exo for constant velocity")
    m = 2 * tag.k
    S = np.zeros((m, m))
    C = np.zeros((tag.k, m))
    w0 = np.zeros(m)
    for j in range(tag.k):
        S[2 * j, 2 * j + 1] = -om[j]
        S[2 * j + 1, 2 * j] = om[j]
        C[j, 2 * j] = 1.0
        w0[2 * j] = a[j]
    return ExoParams(tag, C, S), w0


def constant_exo(velocity, tag: GroupTag) -> tuple[ExoParams, np.ndarray]:
    """Constant-velocity exosystem (``S = 0``, ``C = I``)."""
    tag = GroupTag.parse(tag)
    v = np.asarray(velocity, dtype=float).reshape(-1)
    if v.shape != (tag.k,):
        raise ExosystemError(f"velocity must have length {tag.k} for {tag.value}")
    return ExoParams(tag, np.eye(tag.k), np.zeros((tag.k, tag.k))), v.copy()


def oscillator_solution(S, w0, t: float) -> np.ndarray:
    """Exact ``w(t) = expm(S t) w0``."""
    return expm(np.asarray(S, dtype=float) * t) @ np.asarray(w0, dtype=float)
