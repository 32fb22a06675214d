"""Discrete-time Markov kernels and the free (unperturbed) propagator.

Convention: entry ``(a, b)`` of a transition matrix is the probability of a
single step going from state ``a`` to state ``b`` (rows are origins), so the
free propagator over ``m`` steps is simply ``P**m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, InvalidParameter, NegativeEntry, NotSquare, RowSumViolation

NEGATIVE_SLACK = 1e-14
ROW_SUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Validated row-stochastic matrix. Build it with :func:`validate_transition`."""

    entries: np.ndarray

    @property
    def n_states(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"TransitionMatrix(n_states={self.n_states})"

    def to_csv(self) -> str:
        """Row-major CSV with round-trip precision."""
        return "".join(",".join(f"{x:.17g}" for x in row) + "\n" for row in self.entries)


def validate_transition(entries) -> TransitionMatrix:
    """Check that ``entries`` is a square row-stochastic matrix.

    The values are stored unchanged (no clipping or renormalization).

    Raises
    ------
    NotSquare, NegativeEntry, RowSumViolation
    """
    arr = np.array(entries, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise NotSquare(f"transition matrix must be square and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter("transition matrix has non-finite entries")
    if np.any(arr < -NEGATIVE_SLACK):
        a, b = np.argwhere(arr < -NEGATIVE_SLACK)[0]
        raise NegativeEntry(f"entry ({a}, {b}) = {arr[a, b]!r} is negative")
    dev = np.abs(arr.sum(axis=1) - 1.0)
    if np.any(dev > ROW_SUM_TOL):
        row = int(np.argmax(dev))
        raise RowSumViolation(f"row {row} sums to {arr[row].sum()!r}")
    arr.setflags(write=False)
    return TransitionMatrix(arr)


def uncorrelated_jump_matrix(n_states: int, nu: float, delta: float) -> TransitionMatrix:
    """One-step kernel for uncorrelated jumps among ``n_states`` at rate ``nu``.

    ``P = e^{-nu delta} I + (1 - e^{-nu delta}) J / N`` with ``J`` the all-ones
    matrix. ``nu = inf`` gives the memoryless uniform kernel.
    """
    if int(n_states) != n_states or n_states < 1:
        raise InvalidParameter(f"n_states must be a positive integer, got {n_states!r}")
    if not nu >= 0:
        raise InvalidParameter(f"jump frequency must be >= 0, got {nu!r}")
    if not (delta > 0 and np.isfinite(delta)):
        raise InvalidParameter(f"time step must be > 0, got {delta!r}")
    n = int(n_states)
    stay = float(np.exp(-nu * delta))
    move = -float(np.expm1(-nu * delta)) / n
    return validate_transition(stay * np.eye(n) + move * np.ones((n, n)))


def uniform_matrix(n_states: int) -> TransitionMatrix:
    """The ``nu -> inf`` limit: every entry ``1/N``."""
    return uncorrelated_jump_matrix(n_states, np.inf, 1.0)


def with_absorbing_state(P: TransitionMatrix, k: int) -> TransitionMatrix:
    """Copy of ``P`` where state ``k`` can no longer be left."""
    n = P.n_states
    if not 0 <= k < n:
        raise IndexOutOfRange(f"state index {k} out of range for {n} states")
    arr = np.array(P.entries)
    arr[k] = 0.0
    arr[k, k] = 1.0
    return validate_transition(arr)


def matrix_power(entries: np.ndarray, m: int) -> np.ndarray:
    """``entries**m`` by repeated squaring, with no renormalization of the result."""
    result = np.eye(entries.shape[0])
    base = np.array(entries, dtype=float)
    while m > 0:
        if m & 1:
            result = result @ base
        m >>= 1
        if m:
            base = base @ base
    return result


def free_propagator(P: TransitionMatrix, lag: int) -> np.ndarray:
    """Free Green's function block over ``lag`` steps.

    ``P**lag`` for ``lag >= 0`` and the zero matrix for negative lags
    (causality).
    """
    n = P.n_states
    if lag < 0:
        return np.zeros((n, n))
    return matrix_power(P.entries, int(lag))


def free_propagator_lags(P: TransitionMatrix, n_lags: int) -> np.ndarray:
    """Stack of ``P**0 ... P**n_lags``, shape ``(n_lags + 1, N, N)``.

    This is the stationary (lag-indexed) form of the free block sequence
    accepted by :func:`dysonmarkov.dyson.solve_dense`.
    """
    n = P.n_states
    out = np.empty((n_lags + 1, n, n))
    out[0] = np.eye(n)
    for m in range(1, n_lags + 1):
        out[m] = out[m - 1] @ P.entries
    return out
