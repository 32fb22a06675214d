import numpy as np
import pytest

from dysonmarkov.dyson import evolve_markov, initial_condition
from dysonmarkov.errors import DimensionMismatch, InvalidParameter
from dysonmarkov.generators import rotation_generators, scalar_generators, step_propagators, tetrahedral_axes
from dysonmarkov.markov import uncorrelated_jump_matrix, validate_transition, with_absorbing_state
from dysonmarkov.montecarlo import (
    draw_trajectory,
    ensemble_average,
    propagate_trajectory,
    sample_trajectory,
    trajectory_rng,
)


@pytest.fixture
def scalar_setup():
    P = uncorrelated_jump_matrix(3, 1.0, 0.01)
    props = step_propagators(scalar_generators([-0.5, 1.0, 2.0]), 0.01, "exact")
    return P, props, initial_condition(3)


def test_trajectories_follow_allowed_transitions():
    P = validate_transition([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    traj = sample_trajectory(P, 20, 1, np.random.default_rng(0))
    assert np.array_equal(traj.states, (np.arange(21) + 1) % 3)


def test_absorbing_state_is_never_left():
    P = with_absorbing_state(uncorrelated_jump_matrix(4, 50.0, 0.01), 3)
    traj = draw_trajectory(P, np.full(4, 0.25), 2000, 3, 0)
    hit = np.flatnonzero(traj.states == 3)
    assert hit.size and np.all(traj.states[hit[0]:] == 3)


def test_empirical_transition_frequencies():
    P = validate_transition([[0.2, 0.8], [0.6, 0.4]])
    s = sample_trajectory(P, 200_000, 0, np.random.default_rng(5)).states
    counts = np.zeros((2, 2))
    np.add.at(counts, (s[:-1], s[1:]), 1)
    freq = counts / counts.sum(axis=1, keepdims=True)
    assert np.allclose(freq, P.entries, atol=0.01)


def test_draw_trajectory_matches_the_batched_ensemble(scalar_setup):
    P, props, init = scalar_setup
    n = 50
    stats = ensemble_average(P, props, init, n, 7, base_seed=99, batch_size=3)
    paths = [propagate_trajectory(draw_trajectory(P, init.weights, n, 99, i), props, init.payload)[:, 0] for i in range(7)]
    assert np.allclose(stats.mean.values, np.mean(paths, axis=0), atol=1e-14)
    assert np.allclose(stats.sigma_re, np.std(np.real(paths), axis=0), atol=1e-14)


def test_deterministic_under_fixed_seed(scalar_setup):
    P, props, init = scalar_setup
    a = ensemble_average(P, props, init, 100, 300, base_seed=4)
    b = ensemble_average(P, props, init, 100, 300, base_seed=4)
    c = ensemble_average(P, props, init, 100, 300, base_seed=5)
    assert np.array_equal(a.mean.values, b.mean.values)
    assert np.array_equal(a.sigma_re, b.sigma_re)
    assert not np.array_equal(a.mean.values, c.mean.values)


def test_batching_and_threads_do_not_change_the_sample(scalar_setup):
    P, props, init = scalar_setup
    ref = ensemble_average(P, props, init, 100, 300, base_seed=4, batch_size=300)
    for bs, workers in [(7, 1), (64, 4), (1000, 2)]:
        other = ensemble_average(P, props, init, 100, 300, base_seed=4, batch_size=bs, workers=workers)
        assert np.allclose(other.mean.values, ref.mean.values, rtol=0, atol=1e-14)
        assert np.allclose(other.sigma_re, ref.sigma_re, rtol=0, atol=1e-13)


def test_prefix_of_a_larger_ensemble_is_the_smaller_ensemble(scalar_setup):
    P, props, init = scalar_setup
    small = draw_trajectory(P, init.weights, 30, 11, 4)
    again = draw_trajectory(P, init.weights, 30, 11, 4)
    assert np.array_equal(small.states, again.states)
    r1 = trajectory_rng(11, 4).random(3)
    r2 = trajectory_rng(11, 5).random(3)
    assert not np.array_equal(r1, r2)


def test_rotation_ensemble_agrees_with_dyson():
    delta, n = 0.01, 300
    P = with_absorbing_state(uncorrelated_jump_matrix(4, 1.0, delta), 3)
    gens = rotation_generators(tetrahedral_axes())
    init = initial_condition(4, [1.0, 0.0, 0.0])
    stats = ensemble_average(P, step_propagators(gens, delta, "exact"), init, n, 2000, base_seed=1)
    dy = evolve_markov(P, step_propagators(gens, delta, "exact"), init, n)
    se = np.maximum(stats.sigma_re, 1e-12) / np.sqrt(stats.n_traj)
    inside = np.abs(dy.values - stats.mean.values) <= 5 * se
    assert inside[1:].mean() >= 0.95
    assert stats.mean.values.dtype.kind == "f"


def test_columns_and_observable(scalar_setup):
    P, props, init = scalar_setup
    stats = ensemble_average(P, props, init, 10, 4)
    names, table = stats.columns()
    assert names == ["re", "im", "sigma_re"] and table.shape == (11, 3)
    custom = ensemble_average(P, props, init, 10, 4, observable=lambda x: np.abs(x) ** 2)
    assert custom.mean.kind == "custom"
    assert np.allclose(custom.mean.values, 1.0)
    assert np.allclose(custom.sigma_re, 0.0, atol=1e-14)


def test_argument_errors(scalar_setup):
    P, props, init = scalar_setup
    with pytest.raises(InvalidParameter):
        ensemble_average(P, props, init, 10, 1)
    with pytest.raises(DimensionMismatch):
        ensemble_average(uncorrelated_jump_matrix(2, 1.0, 0.01), props, init, 10, 5)
