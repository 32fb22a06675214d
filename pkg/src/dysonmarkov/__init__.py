"""Averaged evolution of systems whose generator hops between states of a Markov chain.

The package propagates ``S(t) = <exp-ordered product of generators> x0`` through
a discretized Dyson equation, with a Monte Carlo trajectory sampler as an
independent reference.
"""

__version__ = "0.1.0"

from .dyson import SignalSeries, evolve_markov, initial_condition, solve_dense
from .generators import (
    liouvillian_generators,
    rotation_generators,
    scalar_generators,
    step_propagators,
    tetrahedral_axes,
)
from .markov import TransitionMatrix, uncorrelated_jump_matrix, validate_transition, with_absorbing_state
from .montecarlo import EnsembleStats, ensemble_average
from .problem import MarkovSpec, Problem, scalar_problem, spin_pair_problem, tetra_problem

__all__ = [
    "__version__",
    "SignalSeries",
    "evolve_markov",
    "initial_condition",
    "solve_dense",
    "liouvillian_generators",
    "rotation_generators",
    "scalar_generators",
    "step_propagators",
    "tetrahedral_axes",
    "TransitionMatrix",
    "uncorrelated_jump_matrix",
    "validate_transition",
    "with_absorbing_state",
    "EnsembleStats",
    "ensemble_average",
    "MarkovSpec",
    "Problem",
    "scalar_problem",
    "spin_pair_problem",
    "tetra_problem",
]
