"""Matrix Lie-group toolkit for SO(3), SE(2) and SE(3).

Group and algebra elements are plain ``numpy`` arrays; the group they belong
to is always passed explicitly as a :class:`GroupTag`.  Conventions:

- SO(3): 3x3 rotation matrices, ``vee(hat(w)) = w`` with the usual
  cross-product matrix ``hat(w) @ x = w x x``.
- SE(2): 3x3 homogeneous matrices acting on ``[x, y, 1]``; the coordinate
  vector is ``(omega, rho_x, rho_y)``.
- SE(3): 4x4 homogeneous matrices; coordinates are rotation first,
  ``(omega; rho)``.

``vec`` is column-major (columns stacked), which fixes the layout of the
duplication matrix ``D`` returned by :func:`duplication_Q`.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy.spatial.transform import Rotation

# Frobenius tolerance on R^T R - I for group membership.
TAU_GROUP = 1e-9
# Tolerance on the algebra structure (skewness, zero bottom row).
TAU_ALG = 1e-9
# Largest orthogonality defect retract() will repair.
TAU_DRIFT = 1e-3
# Below this rotation angle the closed-form exponentials switch to Taylor series.
SMALL_ANGLE = 1e-8


class LieContractError(ValueError):
    """Raised when an input violates a group or algebra contract."""


class GroupTag(enum.Enum):
    SO3 = "SO3"
    SE2 = "SE2"
    SE3 = "SE3"

    @property
    def n(self) -> int:
        """Ambient matrix dimension."""
        return 4 if self is GroupTag.SE3 else 3

    @property
    def k(self) -> int:
        """Algebra dimension."""
        return 6 if self is GroupTag.SE3 else 3

    @property
    def rot_dim(self) -> int:
        """Dimension of the rotation block."""
        return 2 if self is GroupTag.SE2 else 3

    @property
    def homogeneous(self) -> bool:
        return self is not GroupTag.SO3

    @classmethod
    def parse(cls, value: "GroupTag | str") -> "GroupTag":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise LieContractError(f"unknown group tag {value!r}; expected one of SO3, SE2, SE3") from None


def skew(w) -> np.ndarray:
    """Cross-product matrix of a 3-vector."""
    w = np.asarray(w, dtype=float)
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def _as_square(tag: GroupTag, M, what: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (tag.n, tag.n):
        raise LieContractError(f"{what} for {tag.value} must be {tag.n}x{tag.n}, got shape {M.shape}")
    return M


def hat(tag: GroupTag, v) -> np.ndarray:
    """Coordinate vector -> algebra matrix."""
    v = np.asarray(v, dtype=float)
    if v.shape != (tag.k,):
        raise LieContractError(f"{tag.value} coordinate vector must have length {tag.k}, got shape {v.shape}")
    if tag is GroupTag.SO3:
        return skew(v)
    if tag is GroupTag.SE2:
        return np.array([
            [0.0, -v[0], v[1]],
            [v[0], 0.0, v[2]],
            [0.0, 0.0, 0.0],
        ])
    U = np.zeros((4, 4))
    U[:3, :3] = skew(v[:3])
    U[:3, 3] = v[3:]
    return U


def algebra_defect(tag: GroupTag, U) -> float:
    """Distance of ``U`` from the algebra (0 for exact algebra elements)."""
    U = _as_square(tag, U, "algebra element")
    r = tag.rot_dim
    W = U[:r, :r]
    defect = np.linalg.norm(W + W.T)
    if tag.homogeneous:
        defect += np.linalg.norm(U[-1, :])
    return float(defect)


def check_algebra(tag: GroupTag, U, tol: float = TAU_ALG) -> np.ndarray:
    U = _as_square(tag, U, "algebra element")
    defect = algebra_defect(tag, U)
    if not defect <= tol:
        raise LieContractError(f"matrix is not in the {tag.value} algebra (defect {defect:.3e} > {tol:.1e})")
    return U


def vee(tag: GroupTag, U, check: bool = True) -> np.ndarray:
    """Algebra matrix -> coordinate vector; exact inverse of :func:`hat`."""
    U = check_algebra(tag, U) if check else np.asarray(U, dtype=float)
    if tag is GroupTag.SO3:
        return np.array([U[2, 1], U[0, 2], U[1, 0]])
    if tag is GroupTag.SE2:
        return np.array([U[1, 0], U[0, 2], U[1, 2]])
    return np.array([U[2, 1], U[0, 2], U[1, 0], U[0, 3], U[1, 3], U[2, 3]])


def orthogonality_defect(tag: GroupTag, X) -> float:
    """Frobenius norm of R^T R - I for the rotation block of ``X``."""
    X = np.asarray(X, dtype=float)
    r = tag.rot_dim
    R = X[:r, :r]
    return float(np.linalg.norm(R.T @ R - np.eye(r)))


def is_group(tag: GroupTag, X, tol: float = TAU_GROUP) -> bool:
    X = np.asarray(X, dtype=float)
    if X.shape != (tag.n, tag.n) or not np.all(np.isfinite(X)):
        return False
    r = tag.rot_dim
    if orthogonality_defect(tag, X) > tol or np.linalg.det(X[:r, :r]) <= 0.0:
        return False
    if tag.homogeneous:
        bottom = np.zeros(tag.n)
        bottom[-1] = 1.0
        if not np.array_equal(X[-1, :], bottom):
            return False
    return True


def check_group(tag: GroupTag, X, tol: float = TAU_GROUP) -> np.ndarray:
    X = _as_square(tag, X, "group element")
    if not is_group(tag, X, tol):
        raise LieContractError(
            f"matrix is not in {tag.value} (orthogonality defect {orthogonality_defect(tag, X):.3e}, tol {tol:.1e})"
        )
    return X


def identity(tag: GroupTag) -> np.ndarray:
    return np.eye(tag.n)


def inverse(tag: GroupTag, X) -> np.ndarray:
    """Closed-form group inverse (transpose for rotations)."""
    X = np.asarray(X, dtype=float)
    if tag is GroupTag.SO3:
        return X.T.copy()
    r = tag.rot_dim
    R = X[:r, :r]
    Xi = np.eye(tag.n)
    Xi[:r, :r] = R.T
    Xi[:r, r] = -R.T @ X[:r, r]
    return Xi


def adjoint(tag: GroupTag, X, U, check: bool = True) -> np.ndarray:
    """``Ad_X U = X U X^-1``."""
    if check:
        X = check_group(tag, X)
        U = check_algebra(tag, U)
    out = X @ U @ inverse(tag, X)
    if check:
        check_algebra(tag, out, tol=TAU_ALG * max(1.0, float(np.linalg.norm(U))) * 10)
    return out


def proj_algebra(tag: GroupTag, A) -> np.ndarray:
    """Orthogonal projection onto the algebra under ``<A, B> = tr(A^T B)``."""
    A = _as_square(tag, A, "matrix")
    r = tag.rot_dim
    P = np.zeros_like(A)
    W = A[:r, :r]
    P[:r, :r] = 0.5 * (W - W.T)
    if tag.homogeneous:
        P[:r, r] = A[:r, r]
    return P


def duplication_Q(tag: GroupTag) -> tuple[np.ndarray, np.ndarray]:
    """Duplication matrix ``D`` (vec(hat(v)) = D v) and ``Q = D^T D``."""
    D = np.column_stack([hat(tag, e).reshape(-1, order="F") for e in np.eye(tag.k)])
    return D, D.T @ D


def _so3_coefficients(theta: float) -> tuple[float, float, float]:
    # sin(t)/t, (1 - cos t)/t^2, (t - sin t)/t^3
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    s, c = math.sin(theta), math.cos(theta)
    return s / theta, (1.0 - c) / theta**2, (theta - s) / theta**3


def exp_map(tag: GroupTag, U, check: bool = True) -> np.ndarray:
    """Closed-form exponential (Rodrigues / screw formulas)."""
    U = check_algebra(tag, U) if check else np.asarray(U, dtype=float)
    if tag is GroupTag.SE2:
        th = U[1, 0]
        if abs(th) < SMALL_ANGLE:
            a, b = 1.0 - th * th / 6.0, th / 2.0
        else:
            a, b = math.sin(th) / th, (1.0 - math.cos(th)) / th
        c, s = math.cos(th), math.sin(th)
        rho = U[:2, 2]
        X = np.eye(3)
        X[:2, :2] = [[c, -s], [s, c]]
        X[:2, 2] = [a * rho[0] - b * rho[1], b * rho[0] + a * rho[1]]
        return X
    W = U[:3, :3]
    w = np.array([W[2, 1], W[0, 2], W[1, 0]])
    theta = float(np.linalg.norm(w))
    A, B, C = _so3_coefficients(theta)
    W2 = W @ W
    R = np.eye(3) + A * W + B * W2
    if tag is GroupTag.SO3:
        return R
    X = np.eye(4)
    X[:3, :3] = R
    X[:3, 3] = (np.eye(3) + B * W + C * W2) @ U[:3, 3]
    return X


def retract(tag: GroupTag, X, max_drift: float = TAU_DRIFT) -> np.ndarray:
    """Project a slightly drifted matrix back onto the group.

    The rotation block is replaced by its orthogonal polar factor and, for
    SE(n), the bottom row is reset exactly.  Exact group elements come back
    unchanged up to rounding.
    """
    X = _as_square(tag, X, "group element")
    if not np.all(np.isfinite(X)):
        raise LieContractError("cannot retract a matrix with non-finite entries")
    r = tag.rot_dim
    Uu, sv, Vt = np.linalg.svd(X[:r, :r])
    if sv[-1] < 1e-12:
        raise LieContractError("rotation block is singular; cannot retract")
    if np.linalg.det(X[:r, :r]) <= 0.0:
        raise LieContractError("rotation block has negative determinant; not in the identity component")
    drift = orthogonality_defect(tag, X)
    if drift > max_drift:
        raise LieContractError(f"orthogonality defect {drift:.3e} exceeds retraction limit {max_drift:.1e}")
    out = X.copy()
    out[:r, :r] = Uu @ Vt
    if tag.homogeneous:
        out[-1, :] = 0.0
        out[-1, -1] = 1.0
    return out


def rotation_block(tag: GroupTag, X) -> np.ndarray:
    r = tag.rot_dim
    return np.asarray(X, dtype=float)[:r, :r]


def rotation_angle(tag: GroupTag, X) -> float:
    """Geodesic angle of the rotation part of ``X`` (radians, in [0, pi])."""
    R = rotation_block(tag, X)
    if tag is GroupTag.SE2:
        return abs(math.atan2(R[1, 0], R[0, 0]))
    c = 0.5 * (np.trace(R) - 1.0)
    return math.acos(min(1.0, max(-1.0, c)))


def euler_to_rotation(angles_deg, convention: str = "ZYX") -> np.ndarray:
    """Rotation matrix from Euler angles in degrees.

    Upper-case conventions are intrinsic (``"ZYX"`` = yaw, pitch, roll),
    lower-case extrinsic, following :mod:`scipy.spatial.transform`.
    """
    return Rotation.from_euler(convention, np.asarray(angles_deg, dtype=float), degrees=True).as_matrix()


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed (Haar) random rotation."""
    return Rotation.random(random_state=rng).as_matrix()


def random_element(tag: GroupTag, rng: np.random.Generator, translation_scale: float = 1.0) -> np.ndarray:
    if tag is GroupTag.SO3:
        return random_rotation(rng)
    if tag is GroupTag.SE2:
        v = np.concatenate([[rng.uniform(-math.pi, math.pi)], translation_scale * rng.standard_normal(2)])
        return exp_map(tag, hat(tag, v))
    X = np.eye(4)
    X[:3, :3] = random_rotation(rng)
    X[:3, 3] = translation_scale * rng.standard_normal(3)
    return X
