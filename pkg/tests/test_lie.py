import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lieregulator.lie import (
    GroupTag,
    LieContractError,
    adjoint,
    algebra_defect,
    check_group,
    duplication_Q,
    exp_map,
    hat,
    identity,
    inverse,
    is_group,
    proj_algebra,
    random_element,
    retract,
    skew,
    vee,
)

from conftest import TAGS, algebra_basis, finite_vectors, newton_polar, series_exp


def vec(M):
    return M.reshape(-1, order="F")


def normal_equations_projection(tag, A):
    """Least-squares fit of A by algebra basis elements under the trace inner product."""
    B = algebra_basis(tag)
    G = np.array([[np.trace(Bi.T @ Bj) for Bj in B] for Bi in B])
    rhs = np.array([np.trace(Bi.T @ A) for Bi in B])
    return sum(c * Bi for c, Bi in zip(np.linalg.solve(G, rhs), B))


def test_group_dimensions():
    assert [(t.n, t.k) for t in TAGS] == [(3, 3), (3, 3), (4, 6)]


def test_hat_so3_displayed_matrix():
    assert np.array_equal(hat(GroupTag.SO3, [1, 2, 3]), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]])
    assert np.array_equal(hat(GroupTag.SO3, np.zeros(3)), np.zeros((3, 3)))


def test_hat_se3_layout():
    U = hat(GroupTag.SE3, [0, 0, 1, 1, 0, 0])
    assert np.array_equal(U[:3, :3], skew([0, 0, 1]))
    assert np.array_equal(U[:3, 3], [1, 0, 0])
    assert np.array_equal(U[3], np.zeros(4))
    # pure rotation and pure translation exponentials agree with the series
    assert np.allclose(exp_map(GroupTag.SE3, U), series_exp(U), atol=1e-13)


def test_hat_dimension_mismatch():
    with pytest.raises(LieContractError):
        hat(GroupTag.SE3, [1, 2, 3])


@pytest.mark.parametrize("tag", TAGS)
def test_hat_vee_round_trip(tag, rng):
    for _ in range(100):
        v = rng.standard_normal(tag.k)
        assert np.array_equal(vee(tag, hat(tag, v)), v)


def test_vee_rejects_non_algebra():
    U = hat(GroupTag.SO3, [1, 2, 3])
    U[0, 1] += 1e-6
    with pytest.raises(LieContractError):
        vee(GroupTag.SO3, U)
    V = hat(GroupTag.SE2, [1, 2, 3])
    V[2, 0] = 1e-6
    with pytest.raises(LieContractError):
        vee(GroupTag.SE2, V)


@pytest.mark.parametrize("tag", TAGS)
def test_adjoint_properties(tag, rng):
    for _ in range(20):
        X = random_element(tag, rng)
        U = hat(tag, rng.standard_normal(tag.k))
        assert np.allclose(adjoint(tag, identity(tag), U), U)
        AU = adjoint(tag, X, U)
        assert algebra_defect(tag, AU) <= 1e-12
        assert np.allclose(adjoint(tag, inverse(tag, X), AU), U, atol=1e-12)


def test_adjoint_so3_rotates_vector(rng):
    R = random_element(GroupTag.SO3, rng)
    w = rng.standard_normal(3)
    assert np.allclose(vee(GroupTag.SO3, adjoint(GroupTag.SO3, R, skew(w))), R @ w, atol=1e-14)


@pytest.mark.parametrize("tag", TAGS)
def test_projection_matches_normal_equations(tag, rng):
    for _ in range(20):
        A = rng.standard_normal((tag.n, tag.n))
        P = proj_algebra(tag, A)
        assert np.allclose(P, normal_equations_projection(tag, A), atol=1e-13)
        for E in algebra_basis(tag):
            assert abs(np.trace(E.T @ (A - P))) <= 1e-12
        assert np.abs(proj_algebra(tag, P) - P).max() <= 1e-14


def test_projection_examples():
    S = np.array([[1.0, 2, 3], [2, 5, 6], [3, 6, 9]])
    assert np.array_equal(proj_algebra(GroupTag.SO3, S), np.zeros((3, 3)))
    A = np.outer([1, 0, 0], [0, 1, 0])
    assert np.allclose(proj_algebra(GroupTag.SO3, A), (A - A.T) / 2)
    B = np.arange(16.0).reshape(4, 4)
    P = proj_algebra(GroupTag.SE3, B)
    assert np.array_equal(P[3], np.zeros(4))
    assert np.array_equal(P[:3, 3], B[:3, 3])
    assert np.allclose(P[:3, :3], (B[:3, :3] - B[:3, :3].T) / 2)


@given(st.sampled_from(TAGS), st.data())
@settings(max_examples=60, deadline=None)
def test_projection_is_trace_orthogonal(tag, data):
    A = data.draw(finite_vectors(tag.n * tag.n, 10.0)).reshape(tag.n, tag.n)
    P = proj_algebra(tag, A)
    for E in algebra_basis(tag):
        assert abs(np.trace(E.T @ (A - P))) <= 1e-12 * max(1.0, np.abs(A).max())


def test_q_forms():
    assert np.array_equal(duplication_Q(GroupTag.SO3)[1], 2 * np.eye(3))
    assert np.array_equal(duplication_Q(GroupTag.SE2)[1], np.diag([2.0, 1, 1]))
    assert np.array_equal(duplication_Q(GroupTag.SE3)[1], np.diag([2.0, 2, 2, 1, 1, 1]))


@pytest.mark.parametrize("tag", TAGS)
def test_duplication_identities(tag, rng):
    D, Q = duplication_Q(tag)
    assert D.shape == (tag.n * tag.n, tag.k)
    assert np.array_equal(Q, Q.T) and np.linalg.eigvalsh(Q)[0] > 0
    for _ in range(100):
        u, v = rng.standard_normal(tag.k), rng.standard_normal(tag.k)
        assert np.allclose(vec(hat(tag, v)), D @ v, rtol=0, atol=1e-15)
        U, V = hat(tag, u), hat(tag, v)
        assert abs(np.trace(U.T @ V) - u @ Q @ v) <= 1e-12 * max(1.0, abs(u @ Q @ v))


@pytest.mark.parametrize("tag", TAGS)
def test_exp_against_series(tag, rng):
    assert np.array_equal(exp_map(tag, np.zeros((tag.n, tag.n))), np.eye(tag.n))
    for scale in (1e-10, 1e-3, 1.0, 3.0):
        for _ in range(10):
            U = hat(tag, scale * rng.standard_normal(tag.k))
            assert np.allclose(exp_map(tag, U), series_exp(U, 40), atol=1e-12)


def test_exp_quarter_turn():
    R = exp_map(GroupTag.SO3, skew([0, 0, math.pi / 2]))
    expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]])
    assert np.allclose(R, expected, atol=1e-15)
    assert np.allclose(series_exp(skew([0, 0, math.pi / 2])), expected, atol=1e-14)


@given(st.sampled_from(TAGS), st.data())
@settings(max_examples=60, deadline=None)
def test_exp_inverse_pairs(tag, data):
    v = data.draw(finite_vectors(tag.k, 1.0))
    if np.linalg.norm(v[:3] if tag is not GroupTag.SE2 else v[:1]) > math.pi:
        v = v / 2
    X = exp_map(tag, hat(tag, v))
    assert is_group(tag, X)
    assert np.allclose(X @ exp_map(tag, hat(tag, -v)), np.eye(tag.n), atol=1e-12)


@pytest.mark.parametrize("tag", TAGS)
def test_retract(tag, rng):
    X = random_element(tag, rng)
    assert np.allclose(retract(tag, X), X, atol=1e-15)
    Y = X.copy()
    r = tag.rot_dim
    Y[:r, :r] += 1e-6 * rng.standard_normal((r, r))
    Z = retract(tag, Y)
    assert np.linalg.norm(Z[:r, :r].T @ Z[:r, :r] - np.eye(r)) <= 1e-12
    assert np.allclose(Z[:r, :r], newton_polar(Y[:r, :r]), atol=1e-13)
    if tag.homogeneous:
        assert np.array_equal(Z[-1], np.eye(tag.n)[-1])
        assert np.array_equal(Z[:-1, -1], Y[:-1, -1])


def test_retract_errors(rng):
    R = random_element(GroupTag.SO3, rng)
    with pytest.raises(LieContractError):
        retract(GroupTag.SO3, R @ np.diag([1.0, 1, -1]))
    with pytest.raises(LieContractError):
        retract(GroupTag.SO3, np.zeros((3, 3)))
    with pytest.raises(LieContractError):
        retract(GroupTag.SO3, R + 0.1 * rng.standard_normal((3, 3)))
    with pytest.raises(LieContractError):
        check_group(GroupTag.SE3, np.ones((4, 4)))
