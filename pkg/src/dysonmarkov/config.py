"""JSON run configuration.

A document looks like::

    {
      "name": "scalar3",
      "kind": "scalar",                      # scalar | rotation | spin_pair | custom
      "generators": [-0.5, 1, 2],
      "markov": {"type": "uncorrelated", "nu": 1.0},
      "delta": 0.001,
      "n_steps": 10000,
      "initial": {"weights": [...], "payload": [...]},
      "solver": "dyson_trapz",               # dyson_rect | dyson_trapz | dense | mc
      "mc": {"n_traj": 100, "seed": 0, "scheme": "exact"},
      "output": {"dir": "out", "prefix": "scalar3"},
      "bench": {"nus": [...], "deltas": [...], "batches": 50, "traj_per_batch": 1000}
    }

Generators per kind: a list of reals (scalar); a list of 3-vectors or the
string ``"tetrahedral"`` (rotation); nothing for ``spin_pair``; for ``custom``
either ``"hamiltonians"`` (Hermitian matrices, evolved as Liouvillians) or
``"matrices"`` (raw generators). Complex numbers are ``[re, im]`` pairs.
Markov ``type`` is ``uncorrelated`` (rate ``nu``; ``"inf"`` allowed) or
``matrix`` (explicit ``entries``); both accept ``absorbing``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import DysonError, ParseError, ValidationError
from .generators import (
    GeneratorSet,
    custom_generators,
    liouvillian_generators,
    normalize_scheme,
    rotation_generators,
    scalar_generators,
    tetrahedral_axes,
)
from .problem import MarkovSpec, Problem

KINDS = ("scalar", "rotation", "spin_pair", "custom")
SOLVERS = ("dyson_rect", "dyson_trapz", "dense", "mc")


@dataclass(frozen=True, eq=False)
class MCOptions:
    n_traj: int = 100
    seed: int = 0
    scheme: str = "exact"
    batch_size: int = 1000


@dataclass(frozen=True, eq=False)
class BenchOptions:
    nus: Tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    deltas: Tuple[float, ...] = (0.1, 0.03, 0.01, 0.003, 0.001)
    batches: int = 50
    traj_per_batch: int = 1000
    seed: int = 0
    repeats: int = 5


@dataclass(frozen=True, eq=False)
class RunConfig:
    name: str
    kind: str
    problem: Problem
    solver: str
    mc: MCOptions
    bench: BenchOptions
    out_dir: Optional[str]
    prefix: str
    document: Dict[str, Any] = field(repr=False)


def _complex_array(obj, path):
    """Array of ``[re, im]`` pairs -> complex array (one dimension fewer)."""
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: expected nested [re, im] pairs", [path]) from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValidationError(f"{path}: expected nested [re, im] pairs", [path])
    return arr[..., 0] + 1j * arr[..., 1]


def _number(doc, key, path, default=None, cast=float):
    if key not in doc:
        if default is None:
            raise ValidationError(f"missing required field {path}", [path])
        return default
    val = doc[key]
    if cast is float and isinstance(val, str) and val.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{path} must be a number", [path])
    if cast is int and int(val) != val:
        raise ValidationError(f"{path} must be an integer", [path])
    return cast(val)


def _generators(doc, kind) -> GeneratorSet:
    try:
        if kind == "scalar":
            g = doc.get("generators")
            if not isinstance(g, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in g):
                raise ValidationError("generators must be a list of frequencies", ["generators"])
            return scalar_generators(g)
        if kind == "rotation":
            g = doc.get("generators")
            if g == "tetrahedral":
                return rotation_generators(tetrahedral_axes())
            return rotation_generators(np.array(g, dtype=float))
        if kind == "spin_pair":
            from .quantum import build_spin_pair

            return build_spin_pair().generators
        if "hamiltonians" in doc:
            hams = _complex_array(doc["hamiltonians"], "hamiltonians")
            if hams.ndim != 3:
                raise ValidationError("hamiltonians must be a list of square matrices", ["hamiltonians"])
            return liouvillian_generators(hams)
        if "matrices" in doc:
            mats = _complex_array(doc["matrices"], "matrices")
            return custom_generators(mats)
        raise ValidationError("custom kind needs 'hamiltonians' or 'matrices'", ["hamiltonians", "matrices"])
    except ValidationError:
        raise
    except (DysonError, ValueError, TypeError) as exc:
        raise ValidationError(f"generators: {exc}", ["generators"]) from exc


def _markov(doc, n_states) -> MarkovSpec:
    m = doc.get("markov", {"type": "uncorrelated", "nu": 0.0})
    if not isinstance(m, dict):
        raise ValidationError("markov must be an object", ["markov"])
    mtype = m.get("type", "uncorrelated")
    absorbing = m.get("absorbing")
    if absorbing is not None:
        if isinstance(absorbing, bool) or not isinstance(absorbing, int) or not 0 <= absorbing < n_states:
            raise ValidationError(
                f"markov.absorbing must be a state index below {n_states}", ["markov.absorbing", "generators"]
            )
    if mtype == "uncorrelated":
        nu = _number(m, "nu", "markov.nu", default=0.0)
        if not nu >= 0:
            raise ValidationError("markov.nu must be >= 0", ["markov.nu"])
        return MarkovSpec("uncorrelated", nu, absorbing=absorbing)
    if mtype == "matrix":
        try:
            entries = np.array(m.get("entries"), dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError("markov.entries must be a numeric matrix", ["markov.entries"]) from exc
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError("markov.entries must be a square matrix", ["markov.entries"])
        if entries.shape[0] != n_states:
            raise ValidationError(
                f"generators define {n_states} states but markov.entries is "
                f"{entries.shape[0]}x{entries.shape[1]}",
                ["generators", "markov.entries"],
            )
        spec = MarkovSpec("matrix", entries=tuple(map(tuple, entries.tolist())), absorbing=absorbing)
        try:
            spec.build(n_states, 1.0)
        except DysonError as exc:
            raise ValidationError(f"markov.entries: {exc}", ["markov.entries"]) from exc
        return spec
    raise ValidationError(f"unknown markov.type {mtype!r}", ["markov.type"])


def _initial(doc, gens: GeneratorSet, kind):
    init = doc.get("initial", {}) or {}
    if not isinstance(init, dict):
        raise ValidationError("initial must be an object", ["initial"])
    n = gens.n_states
    weights = None
    if "weights" in init:
        try:
            weights = np.array(init["weights"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ValidationError("initial.weights must be numbers", ["initial.weights"]) from exc
        if weights.shape != (n,):
            raise ValidationError(
                f"initial.weights has {weights.size} entries for {n} states", ["initial.weights", "generators"]
            )
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError("initial.weights must be nonnegative and sum to 1", ["initial.weights"])
    payload = None
    if kind == "scalar":
        payload = np.array([float(init.get("payload", 1.0))])
    elif kind == "rotation":
        payload = np.array(init.get("payload", [1.0, 0.0, 0.0]), dtype=float)
    elif kind == "spin_pair":
        from .quantum import build_spin_pair

        payload = build_spin_pair().rho0.reshape(-1)
    elif "rho0" in init:
        payload = _complex_array(init["rho0"], "initial.rho0").reshape(-1)
    elif "payload" in init:
        payload = _complex_array(init["payload"], "initial.payload")
    else:
        raise ValidationError("custom kind needs initial.payload or initial.rho0", ["initial.payload"])
    if payload.shape != (gens.dim,):
        raise ValidationError(
            f"initial payload has length {payload.size}, generators are {gens.dim}x{gens.dim}",
            ["initial.payload", "generators"],
        )
    return weights, payload


def parse_config(text) -> RunConfig:
    """Parse and validate a configuration (JSON text or an already-loaded dict)."""
    if isinstance(text, dict):
        doc = copy.deepcopy(text)
    else:
        try:
            doc = json.loads(text)
        except (json.JSONDecodeError, TypeError) as exc:
            raise ParseError(f"configuration is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("configuration must be a JSON object")

    kind = doc.get("kind")
    if kind not in KINDS:
        raise ValidationError(f"kind must be one of {KINDS}, got {kind!r}", ["kind"])
    gens = _generators(doc, kind)
    markov = _markov(doc, gens.n_states)
    delta = _number(doc, "delta", "delta")
    if not (delta > 0 and math.isfinite(delta)):
        raise ValidationError("delta must be > 0", ["delta"])
    n_steps = _number(doc, "n_steps", "n_steps", cast=int)
    if n_steps < 1:
        raise ValidationError("n_steps must be >= 1", ["n_steps"])
    weights, payload = _initial(doc, gens, kind)

    solver = doc.get("solver", "dyson_trapz")
    if solver not in SOLVERS:
        raise ValidationError(f"solver must be one of {SOLVERS}", ["solver"])

    mc_doc = doc.get("mc", {}) or {}
    mc = MCOptions(
        n_traj=_number(mc_doc, "n_traj", "mc.n_traj", 100, int),
        seed=_number(mc_doc, "seed", "mc.seed", 0, int) if "seed" in mc_doc else 0,
        scheme=mc_doc.get("scheme", "exact"),
        batch_size=_number(mc_doc, "batch_size", "mc.batch_size", 1000, int),
    )
    if mc.n_traj < 2:
        raise ValidationError("mc.n_traj must be >= 2", ["mc.n_traj"])
    if mc.batch_size < 1:
        raise ValidationError("mc.batch_size must be >= 1", ["mc.batch_size"])
    try:
        mc = MCOptions(mc.n_traj, mc.seed, normalize_scheme(mc.scheme), mc.batch_size)
    except DysonError as exc:
        raise ValidationError(str(exc), ["mc.scheme"]) from exc

    b = doc.get("bench", {}) or {}
    bench = BenchOptions(
        nus=tuple(float(x) for x in b.get("nus", BenchOptions.nus)),
        deltas=tuple(float(x) for x in b.get("deltas", BenchOptions.deltas)),
        batches=_number(b, "batches", "bench.batches", 50, int),
        traj_per_batch=_number(b, "traj_per_batch", "bench.traj_per_batch", 1000, int),
        seed=_number(b, "seed", "bench.seed", 0, int) if "seed" in b else 0,
        repeats=_number(b, "repeats", "bench.repeats", 5, int),
    )
    if bench.batches * bench.traj_per_batch < 2:
        raise ValidationError("bench needs at least 2 reference trajectories", ["bench.batches", "bench.traj_per_batch"])
    if any(x > y for x, y in zip(bench.deltas[1:], bench.deltas)):
        raise ValidationError("bench.deltas must be sorted in descending order", ["bench.deltas"])

    out = doc.get("output", {}) or {}
    name = str(doc.get("name", kind))
    problem = Problem(gens, markov, delta, n_steps, weights, payload)
    return RunConfig(name, kind, problem, solver, mc, bench, out.get("dir"), str(out.get("prefix", name)), doc)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
