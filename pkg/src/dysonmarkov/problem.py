"""A fully specified averaging problem, independent of the solver used on it."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dyson, montecarlo
from .errors import DimensionMismatch, InvalidParameter
from .generators import GeneratorSet, rotation_generators, scalar_generators, step_propagators, tetrahedral_axes
from .markov import TransitionMatrix, uncorrelated_jump_matrix, validate_transition, with_absorbing_state


@dataclass(frozen=True)
class MarkovSpec:
    """Recipe for the one-step kernel.

    ``kind="uncorrelated"`` uses the jump rate ``nu`` (``inf`` allowed) and is
    rebuilt for every time step; ``kind="matrix"`` is a fixed explicit kernel.
    ``absorbing`` optionally turns one state into a trap.
    """

    kind: str = "uncorrelated"
    nu: float = 0.0
    entries: Optional[tuple] = None
    absorbing: Optional[int] = None

    def build(self, n_states: int, delta: float) -> TransitionMatrix:
        if self.kind == "uncorrelated":
            P = uncorrelated_jump_matrix(n_states, self.nu, delta)
        elif self.kind == "matrix":
            P = validate_transition(np.array(self.entries, dtype=float))
            if P.n_states != n_states:
                raise DimensionMismatch(f"explicit {P.n_states}x{P.n_states} matrix for {n_states} states")
        else:
            raise InvalidParameter(f"unknown Markov kind {self.kind!r}")
        if self.absorbing is not None:
            P = with_absorbing_state(P, self.absorbing)
        return P


@dataclass(frozen=True, eq=False)
class Problem:
    generators: GeneratorSet
    markov: MarkovSpec
    delta: float
    n_steps: int
    weights: Optional[np.ndarray] = None
    payload: Optional[np.ndarray] = None

    @property
    def n_states(self) -> int:
        return self.generators.n_states

    @property
    def kind(self) -> str:
        return self.generators.kind

    @property
    def duration(self) -> float:
        return self.delta * self.n_steps

    def transition(self) -> TransitionMatrix:
        return self.markov.build(self.n_states, self.delta)

    def initial(self) -> dyson.InitialCondition:
        return dyson.initial_condition(self.n_states, self.payload, self.weights)

    def propagators(self, scheme: str):
        return step_propagators(self.generators, self.delta, scheme)

    def with_step(self, delta: float, n_steps: Optional[int] = None) -> "Problem":
        """Same problem on another grid; by default keeps the total duration."""
        if n_steps is None:
            n_steps = int(round(self.duration / delta))
        return dataclasses.replace(self, delta=float(delta), n_steps=int(n_steps))

    def dyson(self, scheme: str = "trapezoid") -> dyson.SignalSeries:
        return dyson.evolve_markov(self.transition(), self.propagators(scheme), self.initial(), self.n_steps)

    def dense(self) -> dyson.SignalSeries:
        blocks = dyson.markov_free_blocks(self.transition(), self.n_steps)
        return dyson.solve_dense(blocks, self.generators, self.delta, self.initial())

    def monte_carlo(self, n_traj: int, seed: int = 0, scheme: str = "exact", **kwargs) -> montecarlo.EnsembleStats:
        return montecarlo.ensemble_average(
            self.transition(), self.propagators(scheme), self.initial(), self.n_steps, n_traj, seed, **kwargs
        )


def scalar_problem(frequencies=(-0.5, 1.0, 2.0), nu: float = 1.0, delta: float = 0.001, n_steps: int = 10000) -> Problem:
    """Precession at sites with the given frequencies and uncorrelated jumps."""
    return Problem(scalar_generators(frequencies), MarkovSpec("uncorrelated", nu), delta, n_steps)


def tetra_problem(nu: float = 1.0, delta: float = 0.001, n_steps: int = 10000, absorbing: Optional[int] = 3) -> Problem:
    """Unit vector along x rotating about tetrahedral axes of length sqrt(3)."""
    return Problem(
        rotation_generators(tetrahedral_axes()),
        MarkovSpec("uncorrelated", nu, absorbing=absorbing),
        delta,
        n_steps,
        payload=np.array([1.0, 0.0, 0.0]),
    )


def spin_pair_problem(nu: float = 1.0, delta: float = 0.001, n_steps: int = 10000) -> Problem:
    from .quantum import build_spin_pair

    system = build_spin_pair()
    return Problem(system.generators, MarkovSpec("uncorrelated", nu), delta, n_steps, payload=system.rho0.reshape(-1))
