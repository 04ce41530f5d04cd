import itertools

import numpy as np
import pytest

_ACCEPTANCE_LINES = []


def brute_force_lap(C):
    """Minimum objective and its assignment by enumerating all n! permutations."""
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    perms = np.array(list(itertools.permutations(range(n))))
    totals = C[np.arange(n), perms].sum(axis=1)
    k = int(np.argmin(totals))
    return totals[k], perms[k]


def all_perm_matrices(n):
    perms = np.array(list(itertools.permutations(range(n))))
    mats = np.zeros((len(perms), n, n))
    mats[np.arange(len(perms))[:, None], np.arange(n)[None, :], perms] = 1.0
    return mats


def random_unit(rng, m, size=None):
    shape = (m,) if size is None else (size, m)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_log():
    def log(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
