"""Hat/vee, the algebra projection and the exponential on SO(3), SE(2), SE(3).

Run with ``python demos/lie_basics.py``.
"""

import numpy as np
from scipy.linalg import expm

from lieregulator.lie import GroupTag, duplication_Q, exp_map, hat, proj_algebra, retract, vee

rng = np.random.default_rng(0)

## hat and vee are inverse to each other; the vector is ordered (omega; rho)
for tag in GroupTag:
    v = rng.standard_normal(tag.k)
    U = hat(tag, v)
    print(f"{tag.value}: k={tag.k}, vee(hat(v)) == v: {np.allclose(vee(tag, U), v)}")

## The projection onto the algebra is orthogonal under tr(A^T B)
tag = GroupTag.SE3
A = rng.standard_normal((4, 4))
P = proj_algebra(tag, A)
B = hat(tag, rng.standard_normal(6))
print("idempotent:", np.allclose(proj_algebra(tag, P), P))
print("residual orthogonal to the algebra:", abs(np.trace((A - P).T @ B)) < 1e-12)

## Q = D^T D turns the trace inner product into a weighted dot product
D, Q = duplication_Q(tag)
print("Q diagonal:", np.diag(Q))
u, w = rng.standard_normal(6), rng.standard_normal(6)
print("tr(hat(u)^T hat(w)) == u^T Q w:", np.isclose(np.trace(hat(tag, u).T @ hat(tag, w)), u @ Q @ w))

## Closed-form exponential against scipy's Pade expm
for tag in GroupTag:
    U = hat(tag, rng.standard_normal(tag.k))
    print(f"{tag.value}: |exp_map - expm| = {np.abs(exp_map(tag, U) - expm(U)).max():.1e}")

## A rotation perturbed by 1e-6 is pulled back by the polar retraction
R = exp_map(GroupTag.SO3, hat(GroupTag.SO3, [0.3, -0.2, 1.0]))
R_noisy = R + 1e-6 * rng.standard_normal((3, 3))
R_back = retract(GroupTag.SO3, R_noisy)
print("orthogonality defect before/after:", np.linalg.norm(R_noisy.T @ R_noisy - np.eye(3)),
      np.linalg.norm(R_back.T @ R_back - np.eye(3)))
