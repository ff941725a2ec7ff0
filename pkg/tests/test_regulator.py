import inspect

import numpy as np
import pytest

from lieregulator.exosystem import constant_exo, exo_velocity, harmonic_exo
from lieregulator.integrator import StepConfig
from lieregulator.lie import GroupTag, LieContractError, adjoint, exp_map, hat, inverse, random_element, skew
from lieregulator.regulator import (
    MeasurementSet,
    RegulatorGains,
    control,
    error_dynamics_rhs,
    error_snapshot,
    error_vectors,
    internal_model_step,
    lyapunov,
    lyapunov_rate,
    lyapunov_rate_bound,
    measure,
)
from lieregulator.simulate import ClosedLoop, simulate

from conftest import TAGS
from helpers import MEASUREMENTS, central_difference, near_identity_loop, random_kinematic_loop, random_measurements

SO3, SE2 = GroupTag.SO3, GroupTag.SE2


def test_measure_examples(rng):
    ms = MeasurementSet(SE2, [[1, 0, 1]])
    Xd = np.eye(3)
    Xd[0, 2] = 2.0
    assert np.array_equal(measure(SE2, np.eye(3), Xd, ms), [[3.0, 0, 1]])
    for tag in TAGS:
        ms = random_measurements(tag, rng)
        X = random_element(tag, rng)
        assert np.allclose(measure(tag, X, X, ms), ms.ring_y, atol=1e-14)
        Xd = random_element(tag, rng)
        y = measure(tag, X, Xd, ms)
        snap = error_snapshot(tag, X, Xd, ms)
        assert np.allclose(error_vectors(ms, y), snap.e, atol=1e-12)
        assert np.allclose(snap.E_r, snap.E @ inverse(tag, ms.X_r), atol=1e-14)


def test_measurement_set_validation():
    with pytest.raises(LieContractError):
        MeasurementSet(SO3, [[1.0, 0]])
    with pytest.raises(LieContractError):
        MeasurementSet(SO3, np.zeros((0, 3)))


def test_assumption1_check():
    assert MeasurementSet(SO3, MEASUREMENTS[SO3]).check_local_positivity() == []
    problems = MeasurementSet(SO3, [[1.0, 0, 0]]).check_local_positivity()
    assert problems and "degenerate" in problems[0]
    assert MeasurementSet(SE2, [[1.0, 0, 1]]).check_local_positivity()
    assert MeasurementSet(SE2, MEASUREMENTS[SE2]).check_local_positivity() == []
    assert MeasurementSet(GroupTag.SE3, MEASUREMENTS[GroupTag.SE3]).check_local_positivity() == []


def test_control_is_output_feedback():
    params = list(inspect.signature(control).parameters)
    assert params == ["tag", "X", "y", "ms", "gains", "delta", "exo"]


@pytest.mark.parametrize("tag", TAGS)
def test_control_zero_error(tag, rng):
    exo, w0 = harmonic_exo(np.ones(tag.k), np.arange(1, tag.k + 1), tag)
    ms = random_measurements(tag, rng)
    X = random_element(tag, rng)
    Xd = X @ ms.X_r
    y = measure(tag, X, Xd, ms)
    g = RegulatorGains(2.0, 0.4)
    U, beta, Delta = control(tag, X, y, ms, g, np.zeros(exo.m), exo)
    assert np.abs(U).max() <= 1e-12 and np.abs(beta).max() <= 1e-12 and not Delta.any()
    delta = rng.standard_normal(exo.m)
    U, beta, Delta = control(tag, X, y, ms, g, delta, exo)
    assert np.allclose(U, adjoint(tag, inverse(tag, X), hat(tag, exo.C @ delta)), atol=1e-12)
    assert np.abs(beta).max() <= 1e-12


def test_control_so3_matches_cross_product_form(rng):
    ms = MeasurementSet(SO3, MEASUREMENTS[SO3])
    exo, _ = constant_exo(np.zeros(3), SO3)
    g = RegulatorGains(1.7, 0.4)
    for _ in range(20):
        R, Rd = random_element(SO3, rng), random_element(SO3, rng)
        y = measure(SO3, R, Rd, ms)
        e = error_vectors(ms, y)
        U, _, _ = control(SO3, R, y, ms, g, np.zeros(3), exo)
        expected = 0.5 * g.kp * sum(skew(np.cross(ei, yr)) for ei, yr in zip(e, ms.y_r))
        assert np.allclose(U, expected, atol=1e-13)


def test_internal_model_step_examples(rng):
    exo, _ = constant_exo(np.zeros(3), SO3)
    assert not internal_model_step(SO3, np.ones(3), np.zeros((3, 3)), exo).any()
    hexo, w0 = harmonic_exo([1, 2, 3], [1, 5, 7], SO3)
    d = rng.standard_normal(6)
    assert np.allclose(internal_model_step(SO3, d, np.zeros((3, 3)), hexo), hexo.S @ d)
    assert np.allclose(internal_model_step(SO3, np.ones(3), skew([0, 0, 1]), exo), [0, 0, 2])


def test_lyapunov_examples():
    assert lyapunov(np.zeros((2, 3)), np.zeros(6), 0.4) == (0.0, 0.0, 0.0)
    assert lyapunov([[1.0, 0, 0]], np.zeros(6), 0.4)[0] == 0.5
    L, L1, L2 = lyapunov(np.zeros((1, 3)), [2.0, 0, 0], 0.4)
    assert L1 == 0 and L2 == pytest.approx(5.0) and L == L2


@pytest.mark.parametrize("tag", TAGS)
def test_lyapunov_rate_forms(tag, rng):
    ms = random_measurements(tag, rng)
    g = RegulatorGains(2.0, 0.4)
    assert lyapunov_rate_bound(tag, np.eye(tag.n), np.zeros((ms.nu, tag.n)), g, ms) == 0
    for _ in range(20):
        X, Xd = random_element(tag, rng), random_element(tag, rng)
        snap = error_snapshot(tag, X, Xd, ms)
        bound = lyapunov_rate_bound(tag, snap.E_r, snap.e, g, ms)
        exact = lyapunov_rate(tag, snap.E_r, snap.e, g, ms)
        assert bound <= 0 and exact <= 0
        # with one measurement the two forms coincide
        one = MeasurementSet(tag, ms.ring_y[:1], ms.X_r)
        e1 = snap.e[:1]
        assert lyapunov_rate(tag, snap.E_r, e1, g, one) == pytest.approx(lyapunov_rate_bound(tag, snap.E_r, e1, g, one))


@pytest.mark.parametrize("tag", TAGS)
def test_error_dynamics_rhs(tag, rng):
    X = random_element(tag, rng)
    Ud = hat(tag, rng.standard_normal(tag.k))
    E_r = random_element(tag, rng)
    assert np.abs(error_dynamics_rhs(tag, E_r, adjoint(tag, inverse(tag, X), Ud), X, Ud)).max() <= 1e-12
    u = hat(tag, rng.standard_normal(tag.k))
    assert np.allclose(error_dynamics_rhs(tag, E_r, u, X, np.zeros_like(u)), -u @ E_r)


@pytest.mark.parametrize("tag", TAGS)
def test_error_dynamics_matches_simulation(tag, rng):
    """Central differences of E_r(t) from a simulated run agree with the closed-form rate."""
    loop = random_kinematic_loop(tag, rng, mode="kinematic_general")
    h = 1e-3
    from lieregulator.integrator import integrate

    states = []
    integrate(loop.rhs, loop.slots, loop.initial_state(), 20 * h, StepConfig(h, "rkmk4"), sink=states.append)
    E_r = [error_snapshot(tag, *s.groups, loop.ms).E_r for s in states]
    for j in (1, 10, 19):
        X, Xd = states[j].groups
        w, delta = states[j].vectors
        U, _, _ = loop.controller(X, Xd, delta)
        rate = error_dynamics_rhs(tag, E_r[j], U, X, exo_velocity(loop.exo, w))
        fd = (E_r[j + 1] - E_r[j - 1]) / (2 * h)
        assert np.abs(fd - rate).max() <= 1e-5 * max(1.0, np.abs(rate).max())


@pytest.mark.parametrize("tag", TAGS)
def test_invariant_set(tag, rng):
    """Starting on the invariant set (X^-1 X_d = X_r, delta = w) keeps all errors at zero."""
    exo, w0 = harmonic_exo(rng.uniform(0.5, 1.5, tag.k), rng.uniform(0.5, 2.0, tag.k), tag)
    ms = random_measurements(tag, rng)
    X = random_element(tag, rng, 0.5)
    Xd = X @ ms.X_r
    y = measure(tag, X, Xd, ms)
    assert np.abs(error_vectors(ms, y)).max() <= 1e-12
    U, _, _ = control(tag, X, y, ms, RegulatorGains(2.0, 0.4), w0, exo)
    assert np.allclose(U, adjoint(tag, inverse(tag, X), exo_velocity(exo, w0)), atol=1e-12)
    loop = ClosedLoop("kinematic_general", ms, exo, RegulatorGains(2.0, 0.4), X, Xd, w0, w0)
    t_end = 10.0 if tag is SO3 else 2.0
    log = simulate(loop, t_end, StepConfig(1e-2), log_every=10)
    e_cols = [c for c in log.columns if c.startswith("e") and c.endswith("_norm")]
    assert max(log[c].max() for c in e_cols) <= 1e-9


def test_lyapunov_monotone_long_run(rng):
    loop = random_kinematic_loop(SO3, rng)
    log = simulate(loop, 300.0, StepConfig(1e-3), log_every=1)
    assert log.status == "ok"
    assert np.diff(log["L"]).max() <= 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_local_convergence(seed):
    loop = near_identity_loop(np.random.default_rng(100 + seed))
    log = simulate(loop, 300.0, StepConfig(1e-2), log_every=10)
    assert log.status == "ok"
    assert log["e_sq_sum"][-1] <= 1e-6


def test_rate_matches_finite_difference_single_measurement(rng):
    """With one measurement the closed form is exact (no cross terms)."""
    exo, w0 = harmonic_exo([1.0, 0.5, 0.2], [1, 2, 3], SE2)
    ms = MeasurementSet(SE2, [[1.0, 0.5, 1.0]])
    loop = ClosedLoop("kinematic_general", ms, exo, RegulatorGains(2.0, 0.4), random_element(SE2, rng),
                      random_element(SE2, rng), w0, w0 + 0.3)
    log = simulate(loop, 0.05, StepConfig(1e-4), log_every=1)
    fd = central_difference(log.t, log["L"])
    assert np.allclose(fd, log["dL_rate_bound"][1:-1], rtol=1e-5, atol=1e-9)
