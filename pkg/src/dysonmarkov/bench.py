"""Accuracy and runtime benchmarking of the Dyson solvers against Monte Carlo."""

from __future__ import annotations

import hashlib
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, List, Optional, Union

import numpy as np

from .dyson import SignalSeries, evolve_markov
from .errors import GridMismatch, InvalidParameter, ZeroSigma
from .montecarlo import EnsembleStats
from .problem import Problem

DEFAULT_DELTAS = (0.1, 0.03, 0.01, 0.003, 0.001)
DEFAULT_NUS = (0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class BenchmarkPoint:
    delta: float
    n_steps: int
    runtime: float
    mre: float


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    stats: EnsembleStats
    fingerprint: str
    batches: int
    traj_per_batch: int
    base_seed: int

    @property
    def n_traj(self) -> int:
        return self.stats.n_traj


def problem_fingerprint(problem: Problem, **extra) -> str:
    """SHA-256 of the problem parameters (and any ``extra`` keyword values)."""
    g = problem.generators.generators
    doc = {
        "kind": problem.kind,
        "generators_re": np.real(g).tolist(),
        "generators_im": np.imag(g).tolist(),
        "markov": asdict(problem.markov),
        "delta": problem.delta,
        "n_steps": problem.n_steps,
        "weights": None if problem.weights is None else np.asarray(problem.weights).tolist(),
        "payload": None if problem.payload is None else np.real(problem.payload).tolist(),
        "payload_im": None if problem.payload is None else np.imag(problem.payload).tolist(),
    }
    doc.update(extra)
    text = json.dumps(doc, sort_keys=True, default=repr)
    return hashlib.sha256(text.encode()).hexdigest()


def reference_mc(
    problem: Problem,
    batches: int = 50,
    traj_per_batch: int = 1000,
    base_seed: int = 0,
    scheme: str = "exact",
) -> ReferenceSolution:
    """Pooled Monte Carlo reference over ``batches * traj_per_batch`` trajectories."""
    n_traj = int(batches) * int(traj_per_batch)
    if n_traj < 2:
        raise InvalidParameter("a reference needs at least 2 trajectories in total")
    stats = problem.monte_carlo(n_traj, base_seed, scheme, batch_size=int(traj_per_batch))
    fp = problem_fingerprint(problem, batches=batches, traj_per_batch=traj_per_batch, seed=base_seed, scheme=scheme)
    return ReferenceSolution(stats, fp, int(batches), int(traj_per_batch), int(base_seed))


def _components(series: SignalSeries):
    """Real observable components of a series: list of (name, (n+1,) array)."""
    kind, v = series.kind, series.values
    n1 = v.shape[0]
    if kind == "scalar":
        return [("re", np.real(v))]
    if kind == "rotation":
        return [(c, np.real(v[:, i])) for i, c in enumerate("xyz")]
    flat = v.reshape(n1, -1)
    out = []
    for i in range(flat.shape[1]):
        out.append((f"re_{i}", flat[:, i].real))
        out.append((f"im_{i}", np.imag(flat[:, i])))
    return out


def _sigma_components(stats: EnsembleStats):
    kind = stats.mean.kind
    n1 = stats.sigma_re.shape[0]
    if kind == "scalar":
        return [stats.sigma_re]
    if kind == "rotation":
        return [stats.sigma_re[:, i] for i in range(3)]
    re = stats.sigma_re.reshape(n1, -1)
    im = stats.sigma_im.reshape(n1, -1)
    out = []
    for i in range(re.shape[1]):
        out += [re[:, i], im[:, i]]
    return out


def grid_indices(test_times: np.ndarray, ref_times: np.ndarray) -> np.ndarray:
    """Index into ``ref_times`` of every test time; raises if any is off-grid."""
    if ref_times.size < 2:
        raise GridMismatch("reference grid has a single point")
    step = ref_times[1] - ref_times[0]
    idx = np.rint(test_times / step).astype(np.int64)
    if np.any(idx < 0) or np.any(idx >= ref_times.size):
        raise GridMismatch("test times extend beyond the reference grid")
    if np.any(np.abs(ref_times[idx] - test_times) > 1e-9 * np.maximum(1.0, np.abs(test_times))):
        raise GridMismatch("test times are not on the reference grid")
    return idx


def _mre(test_times, ref_times, triples) -> float:
    """Core of the metric over ``(name, test, ref, sigma)`` component arrays.

    ``test`` is sampled at ``test_times``; ``ref`` and ``sigma`` at ``ref_times``.
    """
    idx = grid_indices(np.asarray(test_times), np.asarray(ref_times))
    errors = []
    for name, t_val, r_val, sig in triples:
        s = np.asarray(sig)[idx]
        use = np.ones(idx.size, dtype=bool)
        if idx[0] == 0 and s[0] == 0:
            use[0] = False
        if not np.any(s[use] > 0):
            continue
        if np.any(s[use] == 0):
            bad = np.asarray(test_times)[use][np.argmax(s[use] == 0)]
            raise ZeroSigma(f"reference sigma of component {name} is zero at t = {bad}")
        errors.append(np.mean(np.abs(np.asarray(t_val)[use] - np.asarray(r_val)[idx][use]) / s[use]))
    if not errors:
        raise ZeroSigma("reference sigma is zero everywhere")
    return float(np.mean(errors))


def mean_relative_error(test: SignalSeries, ref: Union[ReferenceSolution, EnsembleStats]) -> float:
    """Mean of ``|S_test - S_ref| / sigma_ref`` over the test time points.

    For multi-component observables the metric is computed per component and
    averaged; components whose sigma vanishes at every used time point are
    deterministic and skipped. The ``t = 0`` point is skipped when its sigma is
    zero.
    """
    stats = ref.stats if isinstance(ref, ReferenceSolution) else ref
    if test.kind != stats.mean.kind:
        raise GridMismatch(f"cannot compare a {test.kind} series with a {stats.mean.kind} reference")
    comps_t = _components(test)
    comps_r = _components(stats.mean)
    sigmas = _sigma_components(stats)
    if len(comps_t) != len(comps_r):
        raise GridMismatch("test and reference have different numbers of components")
    triples = [(name, tv, rv, sg) for (name, tv), (_, rv), sg in zip(comps_t, comps_r, sigmas)]
    return _mre(test.times, stats.mean.times, triples)


def mre_from_tables(test_header, test_table, ref_header, ref_table) -> float:
    """Metric between CSV tables: every ``sigma_X`` column of the reference pairs
    column ``X`` of both tables."""
    t_cols = {name: i for i, name in enumerate(test_header)}
    r_cols = {name: i for i, name in enumerate(ref_header)}
    if "time" not in t_cols or "time" not in r_cols:
        raise GridMismatch("both tables need a time column")
    triples = []
    for name in ref_header:
        if not name.startswith("sigma_"):
            continue
        comp = name[len("sigma_"):]
        if comp not in t_cols or comp not in r_cols:
            raise GridMismatch(f"column {comp!r} missing from one of the tables")
        triples.append((comp, test_table[:, t_cols[comp]], ref_table[:, r_cols[comp]], ref_table[:, r_cols[name]]))
    if not triples:
        raise GridMismatch("reference table has no sigma columns")
    return _mre(test_table[:, t_cols["time"]], ref_table[:, r_cols["time"]], triples)


def timed(fn: Callable, repeats: int = 5):
    """Run ``fn`` ``repeats`` times; return the last result and the median wall time."""
    times = []
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.median(times)


def convergence_sweep(
    problem: Problem,
    deltas: Iterable[float] = DEFAULT_DELTAS,
    ref: Optional[ReferenceSolution] = None,
    scheme: str = "trapezoid",
    repeats: int = 5,
    parallel: bool = False,
) -> List[BenchmarkPoint]:
    """Run the iterative solver at every step in ``deltas`` (descending).

    The duration of ``problem`` is kept; each step size uses
    ``round(duration / delta)`` steps. Timing covers the solver call only. With
    ``parallel=True`` the solutions used for the error metric are computed on
    a thread pool, while timings still run one at a time.
    """
    deltas = [float(d) for d in deltas]
    if any(b > a for a, b in zip(deltas, deltas[1:])):
        raise InvalidParameter("step sizes must be sorted in descending order")
    setups = []
    for d in deltas:
        p = problem.with_step(d)
        setups.append((p, p.transition(), p.propagators(scheme), p.initial()))

    def solve(setup):
        p, P, props, init = setup
        return evolve_markov(P, props, init, p.n_steps)

    if parallel:
        with ThreadPoolExecutor() as pool:
            solutions = list(pool.map(solve, setups))
    else:
        solutions = [None] * len(setups)

    points = []
    for k, setup in enumerate(setups):
        sol, runtime = timed(lambda: solve(setup), repeats)
        if solutions[k] is None:
            solutions[k] = sol
        mre = mean_relative_error(solutions[k], ref) if ref is not None else float("nan")
        points.append(BenchmarkPoint(setup[0].delta, setup[0].n_steps, runtime, mre))
    return points


def benchmark_rows(points: Iterable[BenchmarkPoint], nu: Optional[float] = None):
    rows = []
    for p in points:
        row = [p.delta, p.n_steps, p.runtime, p.mre]
        rows.append(row if nu is None else [nu] + row)
    return rows
