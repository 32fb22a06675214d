"""Discretized Dyson-equation solvers for Markov-modulated evolution.

The ensemble-averaged propagator is kept as a grid over Markov states: block
``(a, c)`` of ``G_{0,j}`` is the operator carrying a payload that started in
state ``a`` at time 0 to state ``c`` at time ``j * delta``, summed over all
paths with their probabilities. Rows are origins, as for the transition
matrix, so one step composes on the right::

    G_{0,j}[a, c] = sum_b  Q_c P[b, c] R_b  G_{0,j-1}[a, b]

where ``R_b`` is the left (resolvent) factor of state ``b`` and ``Q_c`` the
right factor of state ``c`` (identity for the rectangle rule). For 1x1
generators this is the familiar ``(1 - i delta Omega)^-1 P (1 + ...)``
recursion; for matrices it applies the per-step factors in physical time
order, which is what a Monte Carlo trajectory does.

Only the contraction with the initial weights and payload is propagated by
:func:`evolve_markov`: an ``N x d`` state instead of the ``N x N x d x d`` grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AcausalInput, DimensionMismatch, InvalidParameter, SingularResolvent, SingularSystem
from .generators import GeneratorSet, StepPropagatorSet, step_propagators
from .markov import TransitionMatrix

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class InitialCondition:
    """Initial state distribution ``weights`` and the payload vector it carries."""

    weights: np.ndarray
    payload: np.ndarray

    def __post_init__(self):
        w, p = self.weights, self.payload
        if w.ndim != 1 or w.size < 1:
            raise DimensionMismatch("weights must be a non-empty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidParameter("initial weights must be nonnegative and sum to 1")
        if p.ndim != 1:
            raise DimensionMismatch("payload must be a vector")
        w.setflags(write=False)
        p.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.payload.size


def initial_condition(n_states: int, payload=None, weights=None) -> InitialCondition:
    """Initial condition with uniform weights unless ``weights`` is given.

    ``payload`` defaults to the scalar ``1``. A square matrix payload (a density
    matrix) is vectorized row-major.
    """
    if weights is None:
        weights = np.full(n_states, 1.0 / n_states)
    weights = np.array(weights, dtype=float)
    if weights.size != n_states:
        raise DimensionMismatch(f"{weights.size} weights given for {n_states} states")
    payload = np.array([1.0] if payload is None else payload)
    if payload.ndim == 2:
        payload = payload.reshape(-1)
    if not np.iscomplexobj(payload):
        payload = payload.astype(float)
    return InitialCondition(weights, payload)


@dataclass(frozen=True, eq=False)
class SignalSeries:
    """Averaged observable on the grid ``times[j] = j * delta``.

    ``values`` has shape ``(n+1,)`` (complex) for scalar problems, ``(n+1, 3)``
    for rotations, ``(n+1, dh, dh)`` density matrices for Liouvillian problems
    and ``(n+1, d)`` otherwise.
    """

    times: np.ndarray
    values: np.ndarray
    kind: str = "custom"

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def signal(self) -> np.ndarray:
        """The physical observable: real part for scalar problems, else ``values``."""
        if self.kind == "scalar":
            return self.values.real
        return self.values

    def columns(self):
        """Column names and a real 2-D table (without the time column)."""
        return _value_columns(self.values, self.kind)


def _value_columns(values, kind):
    n = values.shape[0]
    if kind == "scalar":
        v = values.astype(complex)
        return ["re", "im"], np.column_stack([v.real, v.imag])
    if kind == "rotation":
        return ["x", "y", "z"], np.asarray(values.real if np.iscomplexobj(values) else values)
    flat = values.reshape(n, -1).astype(complex)
    if kind == "liouvillian":
        side = values.shape[1]
        idx = [f"{r}{c}" for r in range(side) for c in range(side)]
    else:
        idx = [str(k) for k in range(flat.shape[1])]
    names = []
    for k in idx:
        names += [f"re_{k}", f"im_{k}"]
    table = np.empty((n, 2 * flat.shape[1]))
    table[:, 0::2] = flat.real
    table[:, 1::2] = flat.imag
    return names, table


def time_grid(n_steps: int, delta: float) -> np.ndarray:
    return np.arange(n_steps + 1) * float(delta)


def shape_values(raw: np.ndarray, kind: str) -> np.ndarray:
    """Reshape per-time payload vectors ``(n+1, d)`` to the kind's natural shape."""
    if kind == "scalar":
        return raw[:, 0]
    if kind == "liouvillian":
        side = int(round(np.sqrt(raw.shape[1])))
        return raw.reshape(raw.shape[0], side, side)
    return raw


def _check_dims(P: TransitionMatrix, props: StepPropagatorSet, init: InitialCondition):
    if props.n_states != P.n_states:
        raise DimensionMismatch(f"{props.n_states} generators but {P.n_states} Markov states")
    if init.n_states != P.n_states:
        raise DimensionMismatch(f"{init.n_states} initial weights but {P.n_states} Markov states")
    if init.dim != props.dim:
        raise DimensionMismatch(f"payload has length {init.dim}, generators are {props.dim}x{props.dim}")


def transfer_matrix(P: TransitionMatrix, props: StepPropagatorSet) -> np.ndarray:
    """Single-step map on the state-resolved payload, shape ``(N d, N d)``.

    Entry ``[(c, x), (b, y)] = P[b, c] (Q_c R_b)[x, y]``.
    """
    N, d = props.n_states, props.dim
    R = props.left
    Q = props.right if props.right is not None else np.broadcast_to(np.eye(d), R.shape)
    QR = np.einsum("cxz,bzy->cbxy", Q, R)
    T = P.entries.T[:, :, None, None] * QR
    return T.transpose(0, 2, 1, 3).reshape(N * d, N * d)


def evolve_markov(
    P: TransitionMatrix, props: StepPropagatorSet, init: InitialCondition, n_steps: int
) -> SignalSeries:
    """Iterate the Markov Dyson recursion for ``n_steps`` steps.

    Cost is linear in ``n_steps``; memory holds one ``N x d`` state plus the
    output.
    """
    _check_dims(P, props, init)
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidParameter(f"n_steps must be a positive integer, got {n_steps!r}")
    n_steps = int(n_steps)
    N, d = props.n_states, props.dim
    T = transfer_matrix(P, props)
    y = np.outer(init.weights, init.payload).reshape(-1)
    y = y.astype(np.result_type(T, y))
    states = np.empty((n_steps + 1, N * d), dtype=y.dtype)
    states[0] = y
    for j in range(1, n_steps + 1):
        y = T @ y
        states[j] = y
    raw = states.reshape(n_steps + 1, N, d).sum(axis=1)
    return SignalSeries(time_grid(n_steps, props.delta), shape_values(raw, props.kind), props.kind)


@dataclass(frozen=True, eq=False)
class GreenBlockSeries:
    """Full propagator grids ``blocks[j, a, c]`` (each ``d x d``) for ``j = 0..n``."""

    blocks: np.ndarray
    delta: float
    kind: str = "custom"

    @property
    def n_steps(self) -> int:
        return self.blocks.shape[0] - 1


def green_block_series(P: TransitionMatrix, props: StepPropagatorSet, n_steps: int) -> GreenBlockSeries:
    """Materialize every ``G_{0,j}`` grid. Memory is ``O(n N^2 d^2)``; use sparingly."""
    if props.n_states != P.n_states:
        raise DimensionMismatch(f"{props.n_states} generators but {P.n_states} Markov states")
    N, d = props.n_states, props.dim
    T = transfer_matrix(P, props)
    # lane a holds the operator-valued payload started in state a
    X = np.zeros((N, N, d, d), dtype=T.dtype)
    for a in range(N):
        X[a, a] = np.eye(d)
    X = X.transpose(1, 2, 0, 3).reshape(N * d, N * d)
    blocks = np.empty((n_steps + 1, N, N, d, d), dtype=T.dtype)
    for j in range(n_steps + 1):
        if j:
            X = T @ X
        blocks[j] = X.reshape(N, d, N, d).transpose(2, 0, 1, 3)
    return GreenBlockSeries(blocks, float(props.delta), props.kind)


def contract_observable(series: GreenBlockSeries, init: InitialCondition, kind: Optional[str] = None) -> SignalSeries:
    """``value(t_j) = sum_{a,c} p0[a] G_{0,j}[a, c] @ payload``."""
    kind = series.kind if kind is None else kind
    n1, N, N2, d, d2 = series.blocks.shape
    if N != init.n_states or d != init.dim:
        raise DimensionMismatch("block series and initial condition disagree in size")
    raw = np.einsum("a,jacxy,y->jx", init.weights, series.blocks, init.payload)
    if kind == "rotation" and np.iscomplexobj(raw):
        raw = raw.real
    return SignalSeries(time_grid(n1 - 1, series.delta), shape_values(raw, kind), kind)


def markov_free_blocks(P: TransitionMatrix, n_steps: int, stationary: bool = True) -> np.ndarray:
    """Free blocks ``P**(j-i)`` for :func:`solve_dense`.

    ``stationary=True`` returns the lag-indexed stack ``(n+1, N, N)``;
    otherwise the full causal array ``(n+1, n+1, N, N)`` indexed ``[i, j]``
    with zeros below the diagonal.
    """
    from .markov import free_propagator_lags

    lags = free_propagator_lags(P, n_steps)
    if stationary:
        return lags
    n1, N = n_steps + 1, P.n_states
    full = np.zeros((n1, n1, N, N))
    for i in range(n1):
        full[i, i:] = lags[: n1 - i]
    return full


def solve_dense(free_blocks, gens: GeneratorSet, delta: float, init: InitialCondition) -> SignalSeries:
    """Solve the discrete Dyson equation for an arbitrary causal free propagator.

    ``free_blocks`` is either the full array ``[i, j, a, c]`` (origin time ``i``,
    destination time ``j``) or, for time-translation invariant dynamics, the
    lag stack ``[j - i, a, c]``. Diagonal blocks must be the identity.

    With ``k_j`` the state-resolved payload at step ``j`` and
    ``m_i = (I - delta A)^-1 k_i`` its resolvent image, causality makes the
    system block triangular::

        k_j = G0_{0,j}^T (p0 x payload) + delta * sum_{i<j} G0_{i,j}^T A m_i

    which is solved by forward substitution in ``O(n^2)`` block products. For
    Markov blocks ``P**(j-i)`` this reproduces the rectangle rule of
    :func:`evolve_markov`.
    """
    K0 = np.asarray(free_blocks)
    N, d = gens.n_states, gens.dim
    if init.n_states != N or init.dim != d:
        raise DimensionMismatch("initial condition does not match the generator set")
    if K0.ndim == 3:
        stationary = True
        n_steps = K0.shape[0] - 1
    elif K0.ndim == 4:
        stationary = False
        n_steps = K0.shape[0] - 1
        if K0.shape[1] != K0.shape[0]:
            raise DimensionMismatch(f"full free block array must be (n+1, n+1, N, N), got {K0.shape}")
        below = np.tril_indices(n_steps + 1, k=-1)
        if np.any(K0[below] != 0):
            raise AcausalInput("free propagator has nonzero blocks with origin after destination")
    else:
        raise DimensionMismatch(f"free blocks must be 3-D or 4-D, got {K0.ndim}-D")
    if K0.shape[-2:] != (N, N):
        raise DimensionMismatch(f"free blocks are {K0.shape[-2:]}, expected ({N}, {N})")
    if n_steps < 1:
        raise InvalidParameter("need at least one time step")
    diag = K0[0] if stationary else K0[np.arange(n_steps + 1), np.arange(n_steps + 1)]
    if not np.allclose(diag, np.eye(N), rtol=0.0, atol=1e-12):
        raise InvalidParameter("diagonal free blocks must be the identity")

    try:
        R = step_propagators(gens, delta, "rectangle").left
    except SingularResolvent as exc:
        raise SingularSystem(str(exc)) from exc
    A = gens.generators

    y0 = np.outer(init.weights, init.payload)
    dtype = np.result_type(R, y0, K0)
    first = K0 if stationary else K0[0]  # [j, a, c]: from time 0 to time j
    base = np.einsum("jac,ax->jcx", first, y0).astype(dtype)
    k = np.empty((n_steps + 1, N, d), dtype=dtype)
    am = np.empty((n_steps + 1, N, d), dtype=dtype)
    for j in range(n_steps + 1):
        if j == 0:
            k[0] = base[0]
        else:
            blocks = K0[j:0:-1] if stationary else K0[:j, j]
            k[j] = base[j] + delta * np.einsum("ibc,ibx->cx", blocks, am[:j])
        m = np.einsum("bxy,by->bx", R, k[j])
        am[j] = np.einsum("bxy,by->bx", A, m)
    raw = k.sum(axis=1)
    return SignalSeries(time_grid(n_steps, delta), shape_values(raw, gens.kind), gens.kind)
