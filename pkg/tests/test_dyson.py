import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import path_sum, random_stochastic
from dysonmarkov.dyson import (
    contract_observable,
    evolve_markov,
    green_block_series,
    initial_condition,
    markov_free_blocks,
    solve_dense,
    transfer_matrix,
)
from dysonmarkov.errors import AcausalInput, DimensionMismatch, InvalidParameter
from dysonmarkov.generators import (
    custom_generators,
    rotation_generators,
    scalar_generators,
    step_propagators,
    tetrahedral_axes,
)
from dysonmarkov.markov import uncorrelated_jump_matrix, validate_transition


@pytest.mark.parametrize("scheme", ["rectangle", "trapezoid", "exact"])
def test_matrix_generators_match_path_sum(scheme, rng):
    for _ in range(5):
        N, d, n = 3, 2, int(rng.integers(1, 6))
        P = validate_transition(random_stochastic(rng, N))
        gens = custom_generators(rng.normal(size=(N, d, d)) + 1j * rng.normal(size=(N, d, d)))
        props = step_propagators(gens, 0.1, scheme)
        w = rng.dirichlet(np.ones(N))
        x0 = rng.normal(size=d) + 1j * rng.normal(size=d)
        series = evolve_markov(P, props, initial_condition(N, x0, w), n)
        ref = path_sum(P.entries, props.left, props.right, w, x0, n)
        assert np.allclose(series.values[-1], ref, atol=1e-12)


def test_time_ordering_follows_the_path():
    # A deterministic alternation 0 -> 1 -> 0 -> ... must apply state 0's step first.
    P = validate_transition([[0.0, 1.0], [1.0, 0.0]])
    axes = [[0, 0, 1.0], [1.0, 0, 0]]
    props = step_propagators(rotation_generators(axes), 0.5, "exact")
    x0 = np.array([1.0, 0.0, 0.0])
    out = evolve_markov(P, props, initial_condition(2, x0, [1.0, 0.0]), 2).values
    F = props.left
    assert np.allclose(out[1], F[0] @ x0)
    assert np.allclose(out[2], F[1] @ F[0] @ x0)
    assert not np.allclose(out[2], F[0] @ F[1] @ x0)


def test_green_blocks_contract_to_iterative_result(rng):
    P = uncorrelated_jump_matrix(4, 2.0, 0.05)
    props = step_propagators(rotation_generators(tetrahedral_axes()), 0.05, "trapezoid")
    init = initial_condition(4, [0.0, 1.0, 0.0])
    a = evolve_markov(P, props, init, 30)
    b = contract_observable(green_block_series(P, props, 30), init)
    assert np.allclose(a.values, b.values, atol=1e-13)
    assert b.kind == "rotation"


@pytest.mark.parametrize("stationary", [True, False])
def test_dense_matches_rectangle_recursion(stationary, rng):
    N, n, delta = 3, 40, 0.02
    P = validate_transition(random_stochastic(rng, N))
    gens = rotation_generators(rng.normal(size=(N, 3)) * 3)
    init = initial_condition(N, [1.0, 0.0, 0.0], rng.dirichlet(np.ones(N)))
    dense = solve_dense(markov_free_blocks(P, n, stationary), gens, delta, init)
    it = evolve_markov(P, step_propagators(gens, delta, "rectangle"), init, n)
    assert np.allclose(dense.values, it.values, atol=1e-12)


def test_dense_accepts_time_dependent_free_propagator(rng):
    # A non-stationary Markov chain: G0[i, j] = P_i P_{i+1} ... P_{j-1}.
    N, n, delta = 2, 6, 0.1
    Ps = [random_stochastic(rng, N) for _ in range(n)]
    full = np.zeros((n + 1, n + 1, N, N))
    for i in range(n + 1):
        acc = np.eye(N)
        full[i, i] = acc
        for j in range(i + 1, n + 1):
            acc = acc @ Ps[j - 1]
            full[i, j] = acc
    w = np.full(N, 1 / N)
    gens = scalar_generators([1.0, -2.0])
    out = solve_dense(full, gens, delta, initial_condition(N, None, w))
    # brute force with the time-dependent kernels
    R = step_propagators(gens, delta, "rectangle").left[:, 0, 0]
    y = w.astype(complex)
    for j in range(n):
        y = Ps[j].T @ (R * y)
    assert out.values[-1] == pytest.approx(y.sum(), abs=1e-12)


def test_dense_rejects_bad_blocks():
    gens = scalar_generators([1.0, 2.0])
    init = initial_condition(2)
    full = markov_free_blocks(uncorrelated_jump_matrix(2, 1.0, 0.1), 3, stationary=False)
    full[2, 1] = 0.5
    with pytest.raises(AcausalInput):
        solve_dense(full, gens, 0.1, init)
    lags = markov_free_blocks(uncorrelated_jump_matrix(2, 1.0, 0.1), 3)
    lags[0] = 0.5
    with pytest.raises(InvalidParameter):
        solve_dense(lags, gens, 0.1, init)
    with pytest.raises(DimensionMismatch):
        solve_dense(lags, scalar_generators([1.0, 2.0, 3.0]), 0.1, initial_condition(3))


def test_transfer_matrix_columns_conserve_probability():
    P = uncorrelated_jump_matrix(3, 1.0, 0.1)
    props = step_propagators(scalar_generators([0, 0, 0]), 0.1, "trapezoid")
    T = transfer_matrix(P, props)
    assert np.allclose(T.sum(axis=0), 1.0)


def test_dimension_errors():
    P = uncorrelated_jump_matrix(3, 1.0, 0.1)
    props = step_propagators(scalar_generators([1, 2]), 0.1, "trapezoid")
    with pytest.raises(DimensionMismatch):
        evolve_markov(P, props, initial_condition(3), 5)
    with pytest.raises(InvalidParameter):
        initial_condition(2, None, [0.7, 0.7])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linear_in_payload(seed, a, b):
    rng = np.random.default_rng(seed)
    P = validate_transition(random_stochastic(rng, 3))
    props = step_propagators(rotation_generators(rng.normal(size=(3, 3))), 0.05, "trapezoid")
    x, y = rng.normal(size=3), rng.normal(size=3)
    f = lambda v: evolve_markov(P, props, initial_condition(3, v), 10).values
    assert np.allclose(f(a * x + b * y), a * f(x) + b * f(y), atol=1e-10)


def test_slow_limit_is_average_of_static_signals():
    freqs = np.array([-0.5, 1.0, 2.0])
    series = evolve_markov(
        uncorrelated_jump_matrix(3, 0.0, 0.01),
        step_propagators(scalar_generators(freqs), 0.01, "exact"),
        initial_condition(3),
        500,
    )
    ref = np.exp(1j * np.outer(series.times, freqs)).mean(axis=1)
    assert np.allclose(series.values, ref, atol=1e-12)


def test_columns_layout():
    s = evolve_markov(
        uncorrelated_jump_matrix(2, 1.0, 0.1),
        step_propagators(scalar_generators([1, 2]), 0.1, "trapezoid"),
        initial_condition(2),
        3,
    )
    names, table = s.columns()
    assert names == ["re", "im"] and table.shape == (4, 2)
    assert np.array_equal(s.signal, s.values.real)
