"""Compiled closed-loop integrators for the SO(3) modes.

These mirror :func:`lieregulator.integrator.step` with the SO(3) controllers
of :mod:`lieregulator.so3` inlined, so that long runs (hundreds of seconds at
h = 1e-3) take seconds instead of minutes.  The test suite checks them
against the pure numpy path.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MODE_KINEMATIC = 0
MODE_DYNAMIC = 1
LAW_STANDARD = 0
LAW_CONSISTENT = 1

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_DRIFT = 2

_SMALL_ANGLE = 1e-8
_TAU_DRIFT = 1e-3


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _mv(A, v):
    out = np.zeros(A.shape[0])
    for i in range(A.shape[0]):
        acc = 0.0
        for j in range(A.shape[1]):
            acc += A[i, j] * v[j]
        out[i] = acc
    return out


@njit(cache=True)
def _mtv(A, v):
    out = np.zeros(A.shape[1])
    for j in range(A.shape[1]):
        acc = 0.0
        for i in range(A.shape[0]):
            acc += A[i, j] * v[i]
        out[j] = acc
    return out


@njit(cache=True)
def _mm(A, B):
    out = np.zeros((A.shape[0], B.shape[1]))
    for i in range(A.shape[0]):
        for k in range(A.shape[1]):
            a = A[i, k]
            for j in range(B.shape[1]):
                out[i, j] += a * B[k, j]
    return out


@njit(cache=True)
def _skew(w):
    W = np.zeros((3, 3))
    W[0, 1] = -w[2]
    W[0, 2] = w[1]
    W[1, 0] = w[2]
    W[1, 2] = -w[0]
    W[2, 0] = -w[1]
    W[2, 1] = w[0]
    return W


@njit(cache=True)
def _expm(w):
    theta = np.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / (theta * theta)
    W = _skew(w)
    W2 = _mm(W, W)
    R = np.eye(3)
    for i in range(3):
        for j in range(3):
            R[i, j] += a * W[i, j] + b * W2[i, j]
    return R


@njit(cache=True)
def _dexpinv(u, F, half):
    c = _cross(u, F)
    cc = _cross(u, c)
    return F + half * c + cc / 12.0


@njit(cache=True)
def _rhs(mode, law, R, Rd, w, d, Om, ring, yr, C, S, kp, kI, kD, Jn, Jr_inv, Jr):
    """Returns (body rate of R, inertial rate of R_d, dw, d delta, dOmega)."""
    nu = yr.shape[0]
    Dv = _mv(C, d)
    s = np.zeros(3)
    M = np.zeros((3, 3))
    for i in range(nu):
        yi = _mtv(R, _mv(Rd, ring[i]))
        ei = yr[i] - yi
        s += _cross(ei, yr[i])
        if mode == MODE_DYNAMIC:
            M += _mm(_skew(yr[i]), _skew(yr[i] - ei))
    alpha = 0.5 * kp * s
    Omega_c = _mtv(R, Dv) + alpha
    Rs = _mv(R, s)
    dw = _mv(S, w)
    dOm = np.zeros(3)
    if mode == MODE_KINEMATIC:
        bvec = 0.5 * kI * Rs
        dd = _mv(S, d) + _mtv(C, 2.0 * bvec)
        return Omega_c, _mv(C, w), dw, dd, dOm
    if law == LAW_STANDARD:
        ff = kp
        coup = 2.0
    else:
        ff = 0.5 * kp
        coup = 1.0
    Ot = Om - Omega_c
    bvec = 0.5 * kI * (Rs + ff * _mv(R, _mtv(M, _mtv(Jn, Ot))))
    dd = _mv(S, d) + _mtv(C, 2.0 * bvec)
    Ddot = _mv(C, dd)
    Gamma = (_cross(Om, _mv(Jn, Om)) - _mv(Jn, _cross(Om, _mtv(R, Dv))) + _mv(Jn, _mtv(R, Ddot))
             + coup * s + ff * _mv(Jn, _mv(M, Ot + alpha)) - kD * Ot)
    dOm = _mv(Jr_inv, -_cross(Om, _mv(Jr, Om)) + Gamma)
    return Om, _mv(C, w), dw, dd, dOm


@njit(cache=True)
def _polar(R):
    U, sv, Vt = np.linalg.svd(R)
    return _mm(U, Vt)


@njit(cache=True)
def _det3(R):
    return (R[0, 0] * (R[1, 1] * R[2, 2] - R[1, 2] * R[2, 1])
            - R[0, 1] * (R[1, 0] * R[2, 2] - R[1, 2] * R[2, 0])
            + R[0, 2] * (R[1, 0] * R[2, 1] - R[1, 1] * R[2, 0]))


@njit(cache=True)
def _drift(R):
    D = _mm(R.T.copy(), R) - np.eye(3)
    return np.sqrt(np.sum(D * D))


@njit(cache=True)
def _finite(R, Rd, w, d, Om):
    return (np.all(np.isfinite(R)) and np.all(np.isfinite(Rd)) and np.all(np.isfinite(w))
            and np.all(np.isfinite(d)) and np.all(np.isfinite(Om)))


@njit(cache=True)
def simulate(mode, law, rkmk4, h, n_steps, retract_every, log_every,
             R0, Rd0, w0, d0, Om0, ring, yr, C, S, kp, kI, kD, Jn, Jr):
    """Fixed-step closed-loop run.  Returns logged states, status and the
    step index at which the run stopped."""
    n_log = n_steps // log_every + 1
    if n_steps % log_every != 0:
        n_log += 1
    m = w0.shape[0]
    R_log = np.zeros((n_log, 3, 3))
    Rd_log = np.zeros((n_log, 3, 3))
    w_log = np.zeros((n_log, m))
    d_log = np.zeros((n_log, m))
    Om_log = np.zeros((n_log, 3))
    steps_log = np.zeros(n_log, dtype=np.int64)
    Jr_inv = np.linalg.inv(Jr)
    R = R0.copy()
    Rd = Rd0.copy()
    w = w0.copy()
    d = d0.copy()
    Om = Om0.copy()
    R_log[0] = R
    Rd_log[0] = Rd
    w_log[0] = w
    d_log[0] = d
    Om_log[0] = Om
    k = 1
    for n in range(1, n_steps + 1):
        if rkmk4:
            F1, G1, gw1, gd1, go1 = _rhs(mode, law, R, Rd, w, d, Om, ring, yr, C, S, kp, kI, kD, Jn, Jr_inv, Jr)
            u1 = 0.5 * h * F1
            v1 = 0.5 * h * G1
            F2, G2, gw2, gd2, go2 = _rhs(mode, law, _mm(R, _expm(u1)), _mm(_expm(v1), Rd),
                                         w + 0.5 * h * gw1, d + 0.5 * h * gd1, Om + 0.5 * h * go1,
                                         ring, yr, C, S, kp, kI, kD, Jn, Jr_inv, Jr)
            a2 = _dexpinv(u1, F2, 0.5)
            b2 = _dexpinv(v1, G2, -0.5)
            u2 = 0.5 * h * a2
            v2 = 0.5 * h * b2
            F3, G3, gw3, gd3, go3 = _rhs(mode, law, _mm(R, _expm(u2)), _mm(_expm(v2), Rd),
                                         w + 0.5 * h * gw2, d + 0.5 * h * gd2, Om + 0.5 * h * go2,
                                         ring, yr, C, S, kp, kI, kD, Jn, Jr_inv, Jr)
            a3 = _dexpinv(u2, F3, 0.5)
            b3 = _dexpinv(v2, G3, -0.5)
            u3 = h * a3
            v3 = h * b3
            F4, G4, gw4, gd4, go4 = _rhs(mode, law, _mm(R, _expm(u3)), _mm(_expm(v3), Rd),
                                         w + h * gw3, d + h * gd3, Om + h * go3,
                                         ring, yr, C, S, kp, kI, kD, Jn, Jr_inv, Jr)
            a4 = _dexpinv(u3, F4, 0.5)
            b4 = _dexpinv(v3, G4, -0.5)
            R = _mm(R, _expm(h / 6.0 * (F1 + 2.0 * a2 + 2.0 * a3 + a4)))
            Rd = _mm(_expm(h / 6.0 * (G1 + 2.0 * b2 + 2.0 * b3 + b4)), Rd)
            w = w + h / 6.0 * (gw1 + 2.0 * gw2 + 2.0 * gw3 + gw4)
            d = d + h / 6.0 * (gd1 + 2.0 * gd2 + 2.0 * gd3 + gd4)
            Om = Om + h / 6.0 * (go1 + 2.0 * go2 + 2.0 * go3 + go4)
        else:
            F1, G1, gw1, gd1, go1 = _rhs(mode, law, R, Rd, w, d, Om, ring, yr, C, S, kp, kI, kD, Jn, Jr_inv, Jr)
            R = _mm(R, _expm(h * F1))
            Rd = _mm(_expm(h * G1), Rd)
            w = w + h * gw1
            d = d + h * gd1
            Om = Om + h * go1
        if not _finite(R, Rd, w, d, Om):
            return R_log[:k], Rd_log[:k], w_log[:k], d_log[:k], Om_log[:k], steps_log[:k], STATUS_NONFINITE, n
        if n % retract_every == 0:
            for X in (R, Rd):
                if _det3(X) <= 0.0 or _drift(X) > _TAU_DRIFT:
                    return R_log[:k], Rd_log[:k], w_log[:k], d_log[:k], Om_log[:k], steps_log[:k], STATUS_DRIFT, n
            R = _polar(R)
            Rd = _polar(Rd)
        if n % log_every == 0 or n == n_steps:
            R_log[k] = R
            Rd_log[k] = Rd
            w_log[k] = w
            d_log[k] = d
            Om_log[k] = Om
            steps_log[k] = n
            k += 1
    return R_log[:k], Rd_log[:k], w_log[:k], d_log[:k], Om_log[:k], steps_log[:k], STATUS_OK, n_steps
