import numpy as np
import pytest
from hypothesis import strategies as st

from lieregulator.lie import GroupTag, hat

TAGS = list(GroupTag)


def algebra_basis(tag):
    return [hat(tag, e) for e in np.eye(tag.k)]


def series_exp(A, terms=30):
    """Truncated power series of the matrix exponential."""
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for j in range(1, terms):
        term = term @ A / j
        out = out + term
    return out


def newton_polar(M, iters=60):
    """Orthogonal polar factor by the Newton iteration X <- (X + X^-T) / 2."""
    X = np.array(M, dtype=float)
    for _ in range(iters):
        X = 0.5 * (X + np.linalg.inv(X).T)
    return X


def finite_vectors(k, scale=3.0):
    return st.lists(st.floats(-scale, scale, allow_nan=False, allow_infinity=False), min_size=k, max_size=k).map(
        np.array)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    line = f"{'PASS' if rep.passed else 'FAIL'}  criterion {mark.args[0]}: {detail}"
    _CRITERIA.append(line)
    print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
