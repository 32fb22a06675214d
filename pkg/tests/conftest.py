import itertools
import re

import numpy as np
import pytest

# Lines recorded by the acceptance module, echoed at the end of the session.
CRITERIA = {}


def record(key, passed, detail):
    CRITERIA[key] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        passed, detail = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")


def path_sum(P, left, right, weights, payload, n_steps):
    """Brute-force average over all N**(n+1) state paths of length ``n_steps``.

    Along a path ``s_0 .. s_n`` the payload picks up ``right[s_k] @ left[s_{k-1}]``
    at step ``k`` (``right`` is the identity when ``None``).
    """
    P = np.asarray(P)
    N, d = left.shape[0], left.shape[1]
    right = np.broadcast_to(np.eye(d), left.shape) if right is None else right
    total = np.zeros(d, dtype=complex)
    for path in itertools.product(range(N), repeat=n_steps + 1):
        prob = weights[path[0]]
        for a, b in zip(path, path[1:]):
            prob *= P[a, b]
        if prob == 0.0:
            continue
        x = np.asarray(payload, dtype=complex)
        for a, b in zip(path, path[1:]):
            x = right[b] @ (left[a] @ x)
        total += prob * x
    return total


def random_stochastic(rng, n):
    P = rng.random((n, n)) ** 2
    return P / P.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
