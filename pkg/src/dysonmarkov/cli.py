"""Command line front end: ``dysonmarkov {run,compare,bench,validate}``."""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .bench import convergence_sweep, mre_from_tables, problem_fingerprint, reference_mc
from .config import RunConfig, load_config, parse_config
from .errors import ConfigError, DysonError
from .io import read_csv, write_csv, write_json


OUT_ENV = "DYSONMARKOV_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
SCHEME_FLAGS = {"rect": "rectangle", "trapz": "trapezoid", "exact": "exact"}


@dataclass
class RunManifest:
    fingerprint: str
    version: str
    seed: Optional[int]
    solver: str
    started: str
    finished: str
    runtime_s: float
    outputs: List[str]

    def to_dict(self):
        return dataclasses.asdict(self)


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def config_fingerprint(cfg: RunConfig) -> str:
    return problem_fingerprint(
        cfg.problem,
        solver=cfg.solver,
        mc=dataclasses.asdict(cfg.mc) if cfg.solver == "mc" else None,
    )


def _out_dir(cfg: RunConfig, override: Optional[str]) -> Path:
    return Path(override or cfg.out_dir or os.environ.get(OUT_ENV) or ".")


def run(cfg: RunConfig, out_dir: Optional[str] = None) -> RunManifest:
    """Solve the configured problem and write the result CSVs plus a manifest."""
    out = _out_dir(cfg, out_dir)
    started = _now()
    t0 = time.perf_counter()
    problem = cfg.problem
    stem = f"{cfg.prefix}_{cfg.solver}"
    outputs = []

    if cfg.solver == "mc":
        stats = problem.monte_carlo(cfg.mc.n_traj, cfg.mc.seed, cfg.mc.scheme, batch_size=cfg.mc.batch_size)
        series = stats.mean
        names, table = stats.columns()
    else:
        if cfg.solver == "dense":
            series = problem.dense()
        else:
            series = problem.dyson("rectangle" if cfg.solver == "dyson_rect" else "trapezoid")
        names, table = series.columns()
    runtime = time.perf_counter() - t0

    outputs.append(str(write_csv(out / f"{stem}.csv", ["time"] + names, np.column_stack([series.times, table]))))
    if cfg.kind == "spin_pair":
        from .quantum import OBSERVABLE_COLUMNS, observable_table

        obs = observable_table(series.values)
        path = write_csv(out / f"{stem}_observables.csv", ["time"] + OBSERVABLE_COLUMNS, np.column_stack([series.times, obs]))
        outputs.append(str(path))

    manifest = RunManifest(
        fingerprint=config_fingerprint(cfg),
        version=__version__,
        seed=cfg.mc.seed if cfg.solver == "mc" else None,
        solver=cfg.solver,
        started=started,
        finished=_now(),
        runtime_s=runtime,
        outputs=outputs,
    )
    write_json(out / f"{stem}_manifest.json", manifest.to_dict())
    return manifest


def compare(dyson_csv, mc_csv, out_path=None) -> float:
    """Mean relative error of a solver CSV against a Monte Carlo CSV."""
    th, tt = read_csv(dyson_csv)
    rh, rt = read_csv(mc_csv)
    mre = mre_from_tables(th, tt, rh, rt)
    if out_path:
        write_json(out_path, {"dyson": str(dyson_csv), "mc": str(mc_csv), "mre": mre, "n_points": int(tt.shape[0])})
    return mre


def bench(cfg: RunConfig, out_dir: Optional[str] = None, quiet: bool = True):
    """Convergence sweep against a pooled Monte Carlo reference for every jump rate."""
    if cfg.problem.markov.kind != "uncorrelated":
        raise ConfigError("bench requires an uncorrelated markov model")
    out = _out_dir(cfg, out_dir)
    opts = cfg.bench
    rows, summary = [], []
    for nu in opts.nus:
        markov = dataclasses.replace(cfg.problem.markov, nu=nu)
        problem = dataclasses.replace(cfg.problem, markov=markov)
        ref = reference_mc(problem, opts.batches, opts.traj_per_batch, opts.seed, cfg.mc.scheme)
        points = convergence_sweep(problem, opts.deltas, ref, repeats=opts.repeats)
        for p in points:
            rows.append([nu, p.delta, p.n_steps, p.runtime, p.mre])
            if not quiet:
                print(f"nu={nu:g} delta={p.delta:g} n={p.n_steps} runtime={p.runtime:.4g}s mre={p.mre:.4g}")
        summary.append({"nu": nu, "reference_fingerprint": ref.fingerprint, "points": [dataclasses.asdict(p) for p in points]})
    csv_path = write_csv(out / f"{cfg.prefix}_bench.csv", ["nu", "delta", "n_steps", "runtime_s", "mre"], rows)
    doc = {
        "fingerprint": problem_fingerprint(cfg.problem, bench=dataclasses.asdict(opts), scheme=cfg.mc.scheme),
        "seed": opts.seed,
        "version": __version__,
        "reference": {"batches": opts.batches, "traj_per_batch": opts.traj_per_batch, "scheme": cfg.mc.scheme},
        "sweeps": summary,
    }
    json_path = write_json(out / f"{cfg.prefix}_bench.json", doc)
    return [str(csv_path), str(json_path)], rows


def _apply_overrides(path, args) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return parse_config(text)  # raises ParseError with context
    if not isinstance(doc, dict):
        return parse_config(doc)
    if getattr(args, "solver", None):
        doc["solver"] = args.solver
    if getattr(args, "delta", None) is not None:
        doc["delta"] = args.delta
    if getattr(args, "steps", None) is not None:
        doc["n_steps"] = args.steps
    mc = dict(doc.get("mc") or {})
    if getattr(args, "n_traj", None) is not None:
        mc["n_traj"] = args.n_traj
    if getattr(args, "seed", None) is not None:
        mc["seed"] = args.seed
    if getattr(args, "scheme", None):
        mc["scheme"] = SCHEME_FLAGS[args.scheme]
    doc["mc"] = mc
    return parse_config(doc)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dysonmarkov", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", metavar="DIR", help=f"output directory (default: config, ${OUT_ENV}, or .)")
        p.add_argument("--quiet", action="store_true")

    p_run = sub.add_parser("run", help="solve a configured problem")
    p_run.add_argument("config")
    p_run.add_argument("--solver", choices=["dyson_rect", "dyson_trapz", "dense", "mc"])
    p_run.add_argument("--n-traj", type=int, dest="n_traj")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--delta", type=float)
    p_run.add_argument("--steps", type=int)
    p_run.add_argument("--scheme", choices=sorted(SCHEME_FLAGS))
    common(p_run)

    p_cmp = sub.add_parser("compare", help="mean relative error of a solver CSV against an MC CSV")
    p_cmp.add_argument("dyson_csv")
    p_cmp.add_argument("mc_csv")
    common(p_cmp)

    p_bench = sub.add_parser("bench", help="convergence and runtime sweep")
    p_bench.add_argument("config")
    p_bench.add_argument("--seed", type=int)
    p_bench.add_argument("--scheme", choices=sorted(SCHEME_FLAGS))
    common(p_bench)

    p_val = sub.add_parser("validate", help="parse and validate a config only")
    p_val.add_argument("config")
    p_val.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    quiet = getattr(args, "quiet", False)
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            if not quiet:
                p = cfg.problem
                print(f"ok: {cfg.name} kind={cfg.kind} states={p.n_states} dim={p.generators.dim} "
                      f"delta={p.delta:g} n_steps={p.n_steps} solver={cfg.solver}")
            return EXIT_OK
        if args.command == "run":
            cfg = _apply_overrides(args.config, args)
            manifest = run(cfg, args.out)
            if not quiet:
                for path in manifest.outputs:
                    print(path)
            return EXIT_OK
        if args.command == "compare":
            out = Path(args.out) / "compare.json" if args.out else None
            mre = compare(args.dyson_csv, args.mc_csv, out)
            print(f"MRE = {mre:.6g}")
            return EXIT_OK
        if args.command == "bench":
            cfg = _apply_overrides(args.config, args)
            if args.seed is not None:
                cfg = dataclasses.replace(cfg, bench=dataclasses.replace(cfg.bench, seed=args.seed))
            paths, _ = bench(cfg, args.out, quiet)
            if not quiet:
                for path in paths:
                    print(path)
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DysonError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
