import numpy as np
import pytest

from dysonmarkov.dyson import evolve_markov, initial_condition
from dysonmarkov.errors import LengthMismatch, NonPhysicalState
from dysonmarkov.generators import step_propagators
from dysonmarkov.markov import uncorrelated_jump_matrix
from dysonmarkov.montecarlo import draw_trajectory, propagate_trajectory
from dysonmarkov.quantum import (
    SIGNS,
    active_frequencies,
    build_spin_pair,
    correlation,
    exchange_operator,
    hilbert_oracle_evolve,
    observable_table,
    pair_hamiltonian,
    pair_operators,
    recurrence_period,
    spin_operators,
    unvec,
    vec,
    von_neumann_entropy,
)


def test_spin_algebra():
    ix, iy, iz = spin_operators()
    assert np.allclose(ix @ iy - iy @ ix, 1j * iz)
    assert np.allclose(ix @ ix + iy @ iy + iz @ iz, 0.75 * np.eye(2))
    one, two = pair_operators()
    for a in one:
        for b in two:
            assert np.allclose(a @ b, b @ a)


def test_hamiltonians_are_hermitian_and_spin_flip_related():
    flip = np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]]))
    for s1, s2 in SIGNS:
        H = pair_hamiltonian(s1, s2)
        assert np.allclose(H, H.conj().T)
        assert np.allclose(flip @ H @ flip, pair_hamiltonian(-s1, -s2))


def test_exchange_term_spectrum():
    # sigma1 . sigma2 has eigenvalues +1 (triplet, x3) and -3 (singlet)
    vals = np.linalg.eigvalsh(4 * exchange_operator())
    assert np.allclose(vals, [-3, 1, 1, 1])


def test_initial_state():
    system = build_spin_pair()
    rho0 = system.rho0
    assert np.trace(rho0).real == pytest.approx(1.0)
    assert np.allclose(rho0 @ rho0, rho0)
    assert correlation(rho0) == pytest.approx(1.0)
    assert von_neumann_entropy(rho0) == pytest.approx(0.0, abs=1e-12)


def test_entropy_reference_values():
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(np.log(4))
    assert von_neumann_entropy(np.diag([0.5, 0.5, 0, 0])) == pytest.approx(np.log(2))
    with pytest.raises(NonPhysicalState):
        von_neumann_entropy(np.diag([1.5, -0.5]))


def test_vec_round_trip_and_errors(rng):
    rho = rng.normal(size=(3, 3))
    assert np.array_equal(unvec(vec(rho)), rho)
    assert vec(rho)[1] == rho[0, 1]
    with pytest.raises(LengthMismatch):
        unvec(np.zeros(5))


def test_liouvillian_trajectory_matches_hilbert_space_evolution():
    system = build_spin_pair()
    delta, n = 0.01, 400
    P = uncorrelated_jump_matrix(4, 5.0, delta)
    props = step_propagators(system.generators, delta, "exact")
    for index in range(3):
        traj = draw_trajectory(P, np.full(4, 0.25), n, 21, index)
        liou = propagate_trajectory(traj, props, vec(system.rho0)).reshape(n + 1, 4, 4)
        hilb = hilbert_oracle_evolve(traj.states, system.hamiltonians, delta, system.rho0)
        assert np.abs(liou - hilb).max() <= 1e-10


def test_static_correlation_is_periodic():
    system = build_spin_pair()
    T = recurrence_period(system)
    assert T == pytest.approx(2 * np.pi / (4 * np.sqrt(2)))
    freqs = active_frequencies(system)
    assert np.allclose(freqs, [4 * np.sqrt(2)])
    # the correlation (not the full state) recurs after one period, in every field configuration
    for k in range(4):
        rho = hilbert_oracle_evolve([k] * 2, system.hamiltonians, T, system.rho0)[-1]
        assert correlation(rho) == pytest.approx(1.0, abs=1e-12)
        half = hilbert_oracle_evolve([k] * 2, system.hamiltonians, T / 2, system.rho0)[-1]
        # equal field signs commute with the exchange term; opposite signs swing it to 0
        expected = 1.0 if SIGNS[k][0] == SIGNS[k][1] else 0.0
        assert correlation(half) == pytest.approx(expected, abs=1e-12)


def test_observable_table_columns():
    system = build_spin_pair()
    delta = 0.01
    series = evolve_markov(
        uncorrelated_jump_matrix(4, 1.0, delta),
        step_propagators(system.generators, delta, "trapezoid"),
        initial_condition(4, system.rho0),
        200,
    )
    table = observable_table(series.values)
    assert table.shape == (201, 4)
    assert table[0, 0] == pytest.approx(1.0)
    assert np.all(table[:, 2] < 1e-12) and np.all(table[:, 3] < 1e-12)
    assert np.all(np.diff(table[:5, 1]) > 0)
