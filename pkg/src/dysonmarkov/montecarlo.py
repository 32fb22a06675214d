"""Monte Carlo sampling of Markov trajectories.

Each trajectory ``i`` owns a counter-based Philox stream keyed by
``(base_seed, i)``; it first draws one uniform for the initial state and then
one per step. Results therefore do not depend on how trajectories are grouped
into batches or which worker runs them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dyson import InitialCondition, SignalSeries, shape_values, time_grid
from .errors import DimensionMismatch, IndexOutOfRange, InvalidParameter
from .generators import StepPropagatorSet
from .markov import TransitionMatrix


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray
    seed_id: int = -1

    @property
    def n_steps(self) -> int:
        return self.states.size - 1


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Mean and population standard deviation over sampled trajectories.

    ``sigma_re`` and ``sigma_im`` are the spreads of the real and imaginary
    parts of the per-trajectory observable, shaped like ``mean.values``.
    """

    mean: SignalSeries
    sigma_re: np.ndarray
    sigma_im: np.ndarray
    n_traj: int

    @property
    def sigma(self) -> np.ndarray:
        if self.mean.kind in ("scalar", "rotation") or not self.sigma_im.any():
            return self.sigma_re
        return np.hypot(self.sigma_re, self.sigma_im)

    def columns(self):
        names, table = self.mean.columns()
        if self.mean.kind == "scalar":
            return names + ["sigma_re"], np.column_stack([table, self.sigma_re])
        if self.mean.kind == "rotation":
            return names + ["sigma_" + c for c in names], np.column_stack([table, self.sigma_re])
        n = self.sigma_re.shape[0]
        sig = np.empty((n, table.shape[1]))
        sig[:, 0::2] = self.sigma_re.reshape(n, -1)
        sig[:, 1::2] = self.sigma_im.reshape(n, -1)
        return names + ["sigma_" + c for c in names], np.column_stack([table, sig])


def trajectory_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent stream for trajectory ``index`` of a run seeded with ``base_seed``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _cdf_table(P: np.ndarray) -> np.ndarray:
    cum = np.cumsum(P, axis=-1)
    cum[..., -1] = 1.0
    return cum


def _select(cum_rows: np.ndarray, r) -> np.ndarray:
    # first j with r < cum[j]; the last bin is closed at 1 so it is never exceeded
    return np.sum(np.asarray(r)[..., None] >= cum_rows[..., :-1], axis=-1)


def sample_initial(weights, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of a state index from ``weights``."""
    cum = _cdf_table(np.asarray(weights, dtype=float))
    return int(_select(cum, rng.random()))


def sample_trajectory(P: TransitionMatrix, n_steps: int, s0: int, rng: np.random.Generator, seed_id: int = -1) -> Trajectory:
    """Sample ``n_steps`` transitions starting from state ``s0``."""
    if not 0 <= s0 < P.n_states:
        raise IndexOutOfRange(f"initial state {s0} out of range for {P.n_states} states")
    cum = _cdf_table(P.entries)
    r = rng.random(n_steps)
    states = np.empty(n_steps + 1, dtype=np.int64)
    states[0] = s = s0
    for k in range(n_steps):
        s = int(_select(cum[s], r[k]))
        states[k + 1] = s
    return Trajectory(states, seed_id)


def draw_trajectory(P: TransitionMatrix, weights, n_steps: int, base_seed: int, index: int) -> Trajectory:
    """The trajectory that :func:`ensemble_average` uses as member ``index``."""
    rng = trajectory_rng(base_seed, index)
    s0 = sample_initial(weights, rng)
    return sample_trajectory(P, n_steps, s0, rng, seed_id=index)


def propagate_trajectory(traj: Trajectory, props: StepPropagatorSet, payload) -> np.ndarray:
    """Payload along one path: ``x_{k+1} = F(s_k) x_k``, shape ``(n+1, d)``."""
    payload = np.asarray(payload)
    if payload.ndim != 1 or payload.size != props.dim:
        raise DimensionMismatch(f"payload of length {payload.size} for {props.dim}x{props.dim} generators")
    if traj.states.max(initial=0) >= props.n_states:
        raise DimensionMismatch("trajectory visits a state without a generator")
    F = props.step_factors()
    n = traj.n_steps
    if props.dim == 1:
        steps = F[traj.states[:-1], 0, 0]
        out = np.empty(n + 1, dtype=np.result_type(steps, payload))
        out[0] = 1.0
        np.cumprod(steps, out=out[1:])
        return (out * payload[0])[:, None]
    x = payload.astype(np.result_type(F, payload))
    out = np.empty((n + 1, props.dim), dtype=x.dtype)
    out[0] = x
    for k in range(n):
        x = F[traj.states[k]] @ x
        out[k + 1] = x
    return out


@dataclass
class _Moments:
    count: int
    mean: np.ndarray
    m2_re: np.ndarray
    m2_im: np.ndarray

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        w = self.count * other.count / n
        mean = self.mean + delta * (other.count / n)
        m2_re = self.m2_re + other.m2_re + np.real(delta) ** 2 * w
        m2_im = self.m2_im + other.m2_im + np.imag(delta) ** 2 * w
        return _Moments(n, mean, m2_re, m2_im)


def _moments(x: np.ndarray, axis: int = 0) -> _Moments:
    mean = x.mean(axis=axis)
    dev = x - np.expand_dims(mean, axis)
    return _Moments(x.shape[axis], mean, (dev.real**2).sum(axis=axis), (np.imag(dev) ** 2).sum(axis=axis))


def _batch(P, props, init, n_steps, base_seed, indices, observable) -> _Moments:
    B = len(indices)
    draws = np.empty((n_steps + 1, B))
    for col, i in enumerate(indices):
        draws[:, col] = trajectory_rng(base_seed, i).random(n_steps + 1)
    cum = _cdf_table(P.entries)
    states = np.empty((n_steps + 1, B), dtype=np.int64)
    states[0] = _select(_cdf_table(init.weights), draws[0])
    for k in range(n_steps):
        states[k + 1] = _select(cum[states[k]], draws[k + 1])

    F = props.step_factors()
    payload = init.payload
    if props.dim == 1:
        steps = F[states[:-1], 0, 0]
        x = np.empty((n_steps + 1, B), dtype=np.result_type(steps, payload))
        x[0] = 1.0
        np.cumprod(steps, axis=0, out=x[1:])
        x = (x * payload[0])[..., None]
        if observable is not None:
            x = observable(x.reshape(-1, 1)).reshape(n_steps + 1, B, -1)
        return _moments(x, axis=1)

    x = np.broadcast_to(payload.astype(np.result_type(F, payload)), (B, props.dim)).copy()
    obs = observable if observable is not None else (lambda v: v)
    first = obs(x)
    mean = np.empty((n_steps + 1,) + first.shape[1:], dtype=first.dtype)
    m2_re = np.empty(mean.shape)
    m2_im = np.empty(mean.shape)
    for k in range(n_steps + 1):
        if k:
            x = np.einsum("bxy,by->bx", F[states[k - 1]], x)
        m = _moments(obs(x))
        mean[k], m2_re[k], m2_im[k] = m.mean, m.m2_re, m.m2_im
    return _Moments(B, mean, m2_re, m2_im)


def ensemble_average(
    P: TransitionMatrix,
    props: StepPropagatorSet,
    init: InitialCondition,
    n_steps: int,
    n_traj: int,
    base_seed: int = 0,
    batch_size: int = 1000,
    observable: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    workers: int = 1,
) -> EnsembleStats:
    """Average ``n_traj`` sampled trajectories.

    Parameters
    ----------
    observable
        Optional map from payloads ``(B, d)`` to real per-trajectory
        observables ``(B, k)``. When given, the mean series has kind
        ``"custom"`` with ``k`` columns.
    batch_size, workers
        Trajectories ``[0, n_traj)`` are split into consecutive batches that may
        run on a thread pool; batch moments are merged in index order.
    """
    if int(n_traj) != n_traj or n_traj < 2:
        raise InvalidParameter(f"need at least 2 trajectories for a standard deviation, got {n_traj!r}")
    if int(n_steps) != n_steps or n_steps < 1:
        raise InvalidParameter(f"n_steps must be a positive integer, got {n_steps!r}")
    if props.n_states != P.n_states or init.n_states != P.n_states or init.dim != props.dim:
        raise DimensionMismatch("transition matrix, propagators and initial condition disagree in size")
    n_traj, n_steps = int(n_traj), int(n_steps)
    chunks = [range(a, min(a + batch_size, n_traj)) for a in range(0, n_traj, batch_size)]

    def job(idx):
        return _batch(P, props, init, n_steps, base_seed, idx, observable)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)

    kind = props.kind if observable is None else "custom"
    times = time_grid(n_steps, props.delta)
    mean = total.mean
    sig_re = np.sqrt(total.m2_re / total.count)
    sig_im = np.sqrt(total.m2_im / total.count)
    if kind == "rotation" and np.iscomplexobj(mean):
        mean = mean.real
    values = shape_values(mean, kind)
    return EnsembleStats(
        SignalSeries(times, values, kind),
        shape_values(sig_re, kind),
        shape_values(sig_im, kind),
        n_traj,
    )


__all__ = [
    "EnsembleStats",
    "Trajectory",
    "draw_trajectory",
    "ensemble_average",
    "propagate_trajectory",
    "sample_initial",
    "sample_trajectory",
    "trajectory_rng",
]
