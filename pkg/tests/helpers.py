"""Random closed-loop scenarios shared by the test modules."""

import numpy as np

from lieregulator.exosystem import harmonic_exo
from lieregulator.lie import GroupTag, exp_map, hat, random_element, random_rotation
from lieregulator.regulator import MeasurementSet, RegulatorGains
from lieregulator.simulate import ClosedLoop
from lieregulator.so3 import BackstepGains

SO3 = GroupTag.SO3

MEASUREMENTS = {
    GroupTag.SO3: [[1.0, 0, 0], [0, 1.0, 0]],
    GroupTag.SE2: [[1.0, 0, 1], [0, 1.0, 1]],
    GroupTag.SE3: [[1.0, 0, 0, 1], [0, 1.0, 0, 1], [0, 0, 1.0, 1]],
}


def random_exo(tag, rng):
    amps = rng.uniform(0.2, 1.5, tag.k)
    freqs = rng.uniform(0.5, 3.0, tag.k)
    return harmonic_exo(amps, freqs, tag)


def random_measurements(tag, rng, nu=None):
    if tag is SO3:
        nu = nu or int(rng.integers(2, 4))
        ring = rng.standard_normal((nu, 3))
    else:
        ring = np.array(MEASUREMENTS[tag]) + 0.2 * np.pad(rng.standard_normal((len(MEASUREMENTS[tag]), tag.n - 1)),
                                                          ((0, 0), (0, 1)))
    return MeasurementSet(tag, ring, random_element(tag, rng, 0.5))


def random_kinematic_loop(tag, rng, mode=None):
    exo, w0 = random_exo(tag, rng)
    ms = random_measurements(tag, rng)
    gains = RegulatorGains(rng.uniform(0.5, 3.0), rng.uniform(0.1, 1.0))
    X0, Xd0 = random_element(tag, rng, 0.5), random_element(tag, rng, 0.5)
    delta0 = w0 + 0.5 * rng.standard_normal(exo.m)
    mode = mode or ("kinematic_so3" if tag is SO3 else "kinematic_general")
    return ClosedLoop(mode, ms, exo, gains, X0, Xd0, w0, delta0)


def random_inertia(rng):
    Q = random_rotation(rng)
    return Q @ np.diag(rng.uniform(0.5, 2.5, 3)) @ Q.T


def random_dynamic_loop(rng, law="standard", mismatch=False):
    exo, w0 = random_exo(SO3, rng)
    ms = random_measurements(SO3, rng)
    gains = BackstepGains(rng.uniform(0.5, 3.0), rng.uniform(0.1, 1.0), rng.uniform(0.5, 3.0))
    J = random_inertia(rng)
    return ClosedLoop("dynamic_so3_backstep", ms, exo, gains, random_rotation(rng), random_rotation(rng), w0,
                      w0 + 0.5 * rng.standard_normal(exo.m), Omega0=rng.standard_normal(3), J_nom=J,
                      J_real=random_inertia(rng) if mismatch else J, law=law)


def near_identity_loop(rng, radius=0.3, delta_err=0.5):
    """SO3 kinematic loop starting within ``radius`` of the target and ``delta_err`` of w."""
    exo, w0 = random_exo(SO3, rng)
    ms = random_measurements(SO3, rng)
    Xd0 = random_rotation(rng)
    v = rng.standard_normal(3)
    E_r = exp_map(SO3, hat(SO3, radius * rng.uniform(0.2, 1.0) * v / np.linalg.norm(v)))
    X0 = Xd0 @ np.linalg.inv(E_r @ ms.X_r)
    d = rng.standard_normal(exo.m)
    delta0 = w0 + delta_err * rng.uniform(0.2, 1.0) * d / np.linalg.norm(d)
    return ClosedLoop("kinematic_so3", ms, exo, RegulatorGains(2.0, 0.4), X0, Xd0, w0, delta0)


def central_difference(t, values):
    """Central differences at the interior samples."""
    t = np.asarray(t)
    v = np.asarray(values)
    return (v[2:] - v[:-2]) / (t[2:] - t[:-2])


def relative_errors(approx, exact, floor=1e-10):
    approx, exact = np.asarray(approx), np.asarray(exact)
    mask = np.abs(exact) > floor
    return np.abs(approx[mask] - exact[mask]) / np.abs(exact[mask])

