"""Two coupled spin-1/2 particles with randomly flipping local fields.

The four Hamiltonians are ``H(s1, s2) = -s1.s2 + s1 sz1 + s2 sz2`` with
``s = 2 I`` the Pauli matrices and ``s1, s2 = +-1`` the field signs. Both
spins start along ``+x``. Basis order is ``|uu>, |ud>, |du>, |dd>`` with
spin 1 the slow (left) Kronecker factor.

The correlation observable is ``4 <I1.I2>`` (``= <s1.s2>``), which is 1 for the
initial state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, LengthMismatch, NonPhysicalState
from .generators import GeneratorSet, liouvillian_generators

SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def spin_operators():
    """Spin-1/2 operators ``(Ix, Iy, Iz)`` with eigenvalues +-1/2."""
    ix = np.array([[0, 1], [1, 0]], dtype=complex) / 2
    iy = np.array([[0, -1j], [1j, 0]]) / 2
    iz = np.array([[1, 0], [0, -1]], dtype=complex) / 2
    return ix, iy, iz


def pair_operators():
    """``(I1, I2)``: the x, y, z operators of each spin on the 4-dim product space."""
    eye = np.eye(2)
    ops = spin_operators()
    return [np.kron(o, eye) for o in ops], [np.kron(eye, o) for o in ops]


def exchange_operator() -> np.ndarray:
    """``I1.I2``."""
    one, two = pair_operators()
    return sum(a @ b for a, b in zip(one, two))


@dataclass(frozen=True, eq=False)
class SpinPairSystem:
    hamiltonians: np.ndarray  # (4, 4, 4), ordered as SIGNS
    generators: GeneratorSet
    rho0: np.ndarray

    @property
    def liouvillians(self) -> np.ndarray:
        return self.generators.generators


def pair_hamiltonian(sign1: int, sign2: int) -> np.ndarray:
    one, two = pair_operators()
    return 4.0 * (-exchange_operator()) + 2.0 * (sign1 * one[2] + sign2 * two[2])


def build_spin_pair() -> SpinPairSystem:
    hams = np.array([pair_hamiltonian(a, b) for a, b in SIGNS])
    psi0 = np.full(4, 0.5, dtype=complex)
    rho0 = np.outer(psi0, psi0.conj())
    return SpinPairSystem(hams, liouvillian_generators(hams), rho0)


def vec(rho) -> np.ndarray:
    """Row-major flattening of a square matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {rho.shape}")
    return rho.reshape(-1).copy()


def unvec(v) -> np.ndarray:
    v = np.asarray(v)
    side = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or side * side != v.size:
        raise LengthMismatch(f"vector of length {v.size} is not a flattened square matrix")
    return v.reshape(side, side).copy()


def correlation(rho) -> float:
    """``4 Tr(rho I1.I2)``; accepts a single matrix or a stack ``(..., 4, 4)``."""
    rho = np.asarray(rho)
    val = 4.0 * np.einsum("...ij,ji->...", rho, exchange_operator()).real
    return float(val) if val.ndim == 0 else val


def von_neumann_entropy(rho) -> float:
    """``-Tr(rho ln rho)`` in nats.

    Eigenvalues of the Hermitian part are clamped to ``[0, 1]``; an eigenvalue
    below -1e-6 raises :class:`NonPhysicalState`.
    """
    rho = np.asarray(rho)
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam.min() < -1e-6:
        raise NonPhysicalState(f"density matrix has eigenvalue {lam.min():.3g}")
    lam = np.clip(lam, 0.0, 1.0)
    lam = lam[lam > 0]
    return float(-(lam * np.log(lam)).sum())


def entropy_series(rhos) -> np.ndarray:
    return np.array([von_neumann_entropy(r) for r in rhos])


def hilbert_oracle_evolve(states: Sequence[int], hamiltonians, delta: float, rho0) -> np.ndarray:
    """Exact unitary evolution along a state sequence.

    ``rho_{k+1} = U rho_k U^dagger`` with ``U = expm(-i H[s_k] delta)``;
    returns ``len(states)`` density matrices (the last state is not used).
    """
    hams = np.asarray(hamiltonians)
    rho = np.asarray(rho0, dtype=complex)
    if hams.ndim != 3 or hams.shape[1:] != rho.shape:
        raise DimensionMismatch("Hamiltonians and density matrix disagree in size")
    states = np.asarray(getattr(states, "states", states))
    if states.size and states.max() >= hams.shape[0]:
        raise DimensionMismatch("trajectory visits a state without a Hamiltonian")
    U = scipy.linalg.expm(-1j * delta * hams)
    out = np.empty((states.size,) + rho.shape, dtype=complex)
    out[0] = rho
    for k in range(states.size - 1):
        u = U[states[k]]
        rho = u @ rho @ u.conj().T
        out[k + 1] = rho
    return out


def active_frequencies(system: SpinPairSystem, observable=None, tol: float = 1e-12) -> np.ndarray:
    """Distinct positive Bohr frequencies that actually appear in ``<observable>(t)``.

    A gap ``E_m - E_n`` of any Hamiltonian contributes only if
    ``<m|rho0|n><n|O|m>`` is nonzero.
    """
    obs = exchange_operator() if observable is None else observable
    freqs = []
    for H in system.hamiltonians:
        E, V = np.linalg.eigh(H)
        r = V.conj().T @ system.rho0 @ V
        o = V.conj().T @ obs @ V
        weight = np.abs(r * o.T)
        gap = E[:, None] - E[None, :]
        freqs.extend(np.abs(gap[(weight > tol) & (np.abs(gap) > 1e-9)]))
    freqs = np.sort(np.array(freqs))
    if freqs.size == 0:
        return freqs
    keep = np.concatenate([[True], np.diff(freqs) > 1e-9])
    return freqs[keep]


def recurrence_period(system: SpinPairSystem, observable=None, max_denominator: int = 64) -> float:
    """Common period of all active frequencies (``inf`` if they are incommensurate)."""
    freqs = active_frequencies(system, observable)
    if freqs.size == 0:
        return np.inf
    base = freqs[0]
    multiple = 1
    for f in freqs[1:]:
        ratio = Fraction(f / base).limit_denominator(max_denominator)
        if abs(float(ratio) - f / base) > 1e-9:
            return np.inf
        multiple = np.lcm(multiple, ratio.denominator)
    return float(2 * np.pi / base * multiple)


def observable_table(rhos) -> np.ndarray:
    """Columns: correlation, entropy, trace deviation, Hermiticity deviation."""
    rhos = np.asarray(rhos)
    corr = correlation(rhos)
    ent = entropy_series(rhos)
    trace_dev = np.abs(np.einsum("tii->t", rhos) - 1.0)
    herm_dev = np.abs(rhos - rhos.conj().transpose(0, 2, 1)).max(axis=(1, 2))
    return np.column_stack([corr, ent, trace_dev, herm_dev])


OBSERVABLE_COLUMNS = ["correlation", "entropy", "trace_deviation", "hermiticity_deviation"]
