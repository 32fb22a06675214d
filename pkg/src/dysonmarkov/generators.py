"""Per-state evolution generators and their one-step propagators.

A generator ``A_i`` is the matrix for which a system sitting in Markov state
``i`` evolves as ``x(t) = exp(t A_i) x(0)``. Three physical families share this
form:

* scalar precession, ``A_i = i * omega_i`` (1x1),
* classical rotation, ``A_i v = w_i x v`` (3x3, real antisymmetric),
* Liouvillian evolution of a vectorized density matrix.

Density matrices are vectorized row-major (``rho.reshape(-1)``), under which
``vec(A rho B) = kron(A, B.T) vec(rho)`` and ``d rho/dt = -i [H, rho]`` becomes
``L = -i (kron(H, I) - kron(I, H.T))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    EmptyList,
    InvalidParameter,
    NonFiniteAxis,
    NotHermitian,
    SingularResolvent,
)

KINDS = ("scalar", "rotation", "liouvillian", "custom")
SCHEMES = ("rectangle", "trapezoid", "exact")
SCHEME_ALIASES = {"rect": "rectangle", "trapz": "trapezoid"}
HERMITIAN_TOL = 1e-10
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Stack of ``N`` generators of equal dimension, shape ``(N, d, d)``."""

    generators: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        g = self.generators
        if g.ndim != 3 or g.shape[1] != g.shape[2]:
            raise DimensionMismatch(f"generators must have shape (N, d, d), got {g.shape}")
        if g.shape[0] < 1:
            raise EmptyList("at least one generator is required")
        if self.kind not in KINDS:
            raise InvalidParameter(f"unknown generator kind {self.kind!r}")
        g.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.generators.shape[0]

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def hilbert_dim(self) -> Optional[int]:
        """Side of the density matrix for Liouvillian sets, else ``None``."""
        if self.kind != "liouvillian":
            return None
        return int(round(np.sqrt(self.dim)))


def scalar_generators(frequencies: Sequence[float]) -> GeneratorSet:
    """1x1 generators ``i * omega`` for the given angular frequencies."""
    w = np.asarray(frequencies, dtype=float).reshape(-1)
    if w.size == 0:
        raise EmptyList("frequency list is empty")
    return GeneratorSet((1j * w).reshape(-1, 1, 1), kind="scalar")


def cross_matrix(w) -> np.ndarray:
    """Matrix ``K`` with ``K @ v == np.cross(w, v)``."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_generators(axes) -> GeneratorSet:
    """Rotation generators from axis vectors.

    Each vector carries both the direction and the angular speed (its norm).
    """
    w = np.asarray(axes, dtype=float)
    if w.size == 0:
        raise EmptyList("axis list is empty")
    w = w.reshape(-1, 3) if w.ndim == 1 else w
    if w.ndim != 2 or w.shape[1] != 3:
        raise DimensionMismatch(f"axes must be 3-vectors, got shape {np.shape(axes)}")
    if not np.all(np.isfinite(w)):
        raise NonFiniteAxis("rotation axes must be finite")
    return GeneratorSet(np.array([cross_matrix(v) for v in w]), kind="rotation")


def tetrahedral_axes(length: float = np.sqrt(3.0)) -> np.ndarray:
    """Four axes pointing at the corners of a regular tetrahedron."""
    corners = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return corners * (length / np.sqrt(3.0))


def _check_hermitian(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"Hamiltonian must be square, got shape {H.shape}")
    if not np.allclose(H, H.conj().T, rtol=0.0, atol=HERMITIAN_TOL):
        raise NotHermitian("Hamiltonian is not Hermitian")
    return H


def liouvillian_generator(H) -> np.ndarray:
    """Liouvillian of ``d rho/dt = -i [H, rho]`` acting on row-major ``vec(rho)``."""
    H = _check_hermitian(H)
    eye = np.eye(H.shape[0])
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T))


def liouvillian_generators(hamiltonians) -> GeneratorSet:
    hams = [np.asarray(h) for h in hamiltonians]
    if not hams:
        raise EmptyList("Hamiltonian list is empty")
    if len({h.shape for h in hams}) != 1:
        raise DimensionMismatch("all Hamiltonians must share one dimension")
    return GeneratorSet(np.array([liouvillian_generator(h) for h in hams]), kind="liouvillian")


def custom_generators(matrices) -> GeneratorSet:
    g = np.asarray(matrices)
    if g.size == 0:
        raise EmptyList("generator list is empty")
    if not np.iscomplexobj(g):
        g = g.astype(float)
    return GeneratorSet(np.array(g), kind="custom")


@dataclass(frozen=True, eq=False)
class StepPropagatorSet:
    """Per-state one-step factors; a step in state ``i`` is ``left[i] @ right[i]``.

    ``right`` is ``None`` when it is the identity (rectangle and exact schemes).
    """

    scheme: str
    left: np.ndarray
    right: Optional[np.ndarray]
    delta: float
    kind: str = "custom"

    @property
    def n_states(self) -> int:
        return self.left.shape[0]

    @property
    def dim(self) -> int:
        return self.left.shape[1]

    def step_factors(self) -> np.ndarray:
        """Full single-step factor for every state, shape ``(N, d, d)``."""
        if self.right is None:
            return self.left
        return self.left @ self.right


def normalize_scheme(scheme: str) -> str:
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    if scheme not in SCHEMES:
        raise InvalidParameter(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return scheme


def step_propagators(gens: GeneratorSet, delta: float, scheme: str = "trapezoid") -> StepPropagatorSet:
    """Build the one-step factors for every state.

    rectangle
        ``(I - delta A)^-1``, first order.
    trapezoid
        ``(I - delta A / 2)^-1`` on the left and ``(I + delta A / 2)`` on the
        right, second order (Cayley transform).
    exact
        ``expm(delta A)``.

    Raises
    ------
    SingularResolvent
        If any ``I - c delta A`` has condition number above 1e12.
    """
    scheme = normalize_scheme(scheme)
    if not (delta > 0 and np.isfinite(delta)):
        raise InvalidParameter(f"time step must be > 0, got {delta!r}")
    A = gens.generators
    n, d, _ = A.shape

    if scheme == "exact":
        left = scipy.linalg.expm(delta * A)
        if not np.iscomplexobj(A):
            left = left.real
        return StepPropagatorSet(scheme, left, None, float(delta), gens.kind)

    c = 1.0 if scheme == "rectangle" else 0.5
    eye = np.eye(d)
    M = eye - c * delta * A
    if d == 1:
        absval = np.abs(M[:, 0, 0])
        if np.any(absval < 1.0 / MAX_CONDITION):
            raise SingularResolvent("resolvent factor is singular; reduce the time step")
        left = 1.0 / M
    else:
        cond = np.linalg.cond(M)
        if np.any(~np.isfinite(cond)) or np.any(cond > MAX_CONDITION):
            bad = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
            raise SingularResolvent(
                f"resolvent of state {bad} has condition number {cond[bad]:.3g}; reduce the time step"
            )
        left = np.linalg.solve(M, np.broadcast_to(eye, M.shape))
    right = None if scheme == "rectangle" else eye + c * delta * A
    return StepPropagatorSet(scheme, left, right, float(delta), gens.kind)
