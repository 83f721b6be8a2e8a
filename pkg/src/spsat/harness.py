"""Command-line front end: experiment configs, dispatch, and artifacts.

Every run takes one top-level seed, draws all randomness through named
substreams, writes plot-ready CSV/JSON artifacts plus a manifest (config
snapshot, code version, wall time, per-stage timings, output digests),
and exits with a stable code:

    0  success
    2  invalid parameters
    3  contradiction (opposing frozen constraints)
    4  solver did not converge
    5  DIMACS parse error
    6  unrolling refused by the node budget

Artifacts are reproducible byte-for-byte from the config in the manifest;
wall time and timings live only in the manifest itself.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, belief, popdyn, survey, tree
from .errors import (ContradictionError, DimacsParseError,
                     InvalidParametersError, SpsatError, TreeBudgetError)
from .instance import (FactorGraph, Instance, generate_random_instance,
                       parse_dimacs, write_dimacs)

EXIT_OK = 0
EXIT_INVALID_PARAMETERS = 2
EXIT_CONTRADICTION = 3
EXIT_NON_CONVERGENCE = 4
EXIT_PARSE_ERROR = 5
EXIT_BUDGET = 6

OUTDIR_ENV = "SPSAT_OUTDIR"

SUBCOMMANDS = ("gen", "bp", "sp", "unroll", "probe", "popdyn", "lyapunov", "scan")


@dataclass
class ExperimentConfig:
    """Flat record of every knob a run can take; round-trips via dicts."""

    subcommand: str
    n_vars: int | None = None
    alpha: float | None = None
    alpha_from: float | None = None
    alpha_to: float | None = None
    alpha_step: float | None = None
    arity: int = 3
    size: int | None = None          # population size L
    epsilon: float = 1e-6
    max_sweeps: int = 1000
    damping: float = 0.0
    k_max: int | None = None
    t_max: int = 250
    seed: int = 0
    seeds: tuple = ()
    mode: str = belief.UNIFORM
    schedule: str = survey.SEQUENTIAL
    init: str | None = None
    trivial_tol: float | None = None
    frozen_tol: float = 0.5
    dimacs: str | None = None
    root: int = 0
    n_boundaries: int = 8
    node_budget: int = tree.DEFAULT_NODE_BUDGET
    sigma_samples: int = 1_000_000
    equilibration: int = 150
    with_entropy: bool = False
    with_complexity: bool = False
    out: str | None = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "seeds" in d and d["seeds"] is not None:
            d["seeds"] = tuple(d["seeds"])
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidParametersError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def seed_list(self) -> list[int]:
        return list(self.seeds) if self.seeds else [self.seed]


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_time_s: float
    timings: dict
    artifacts: dict  # filename -> sha256

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2,
                                   sort_keys=True) + "\n")


class _Run:
    """Shared artifact bookkeeping for one invocation."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        outdir = Path(os.environ.get(OUTDIR_ENV, "."))
        prefix = config.out if config.out else config.subcommand
        self.prefix = outdir / prefix
        if self.prefix.parent != Path("."):
            self.prefix.parent.mkdir(parents=True, exist_ok=True)
        self.t0 = time.perf_counter()
        self.timings: dict[str, float] = {}
        self.artifacts: dict[str, str] = {}
        self._stage_start = self.t0

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.timings[name] = round(now - self._stage_start, 6)
        self._stage_start = now

    def path(self, suffix: str) -> Path:
        return Path(str(self.prefix) + suffix)

    def write_text(self, suffix: str, text: str) -> Path:
        p = self.path(suffix)
        p.write_text(text)
        self.artifacts[p.name] = hashlib.sha256(text.encode()).hexdigest()
        return p

    def write_json(self, suffix: str, obj) -> Path:
        return self.write_text(suffix, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def finish(self) -> None:
        manifest = RunManifest(
            config=self.config.to_dict(),
            version=__version__,
            wall_time_s=round(time.perf_counter() - self.t0, 6),
            timings=self.timings,
            artifacts=self.artifacts,
        )
        manifest.write(self.path("_manifest.json"))


def format_csv(rows, columns) -> str:
    """Headered CSV with stable column order and round-trip float text."""
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(columns)]
    for row in rows:
        if isinstance(row, dict):
            lines.append(",".join(cell(row.get(c)) for c in columns))
        else:
            lines.append(",".join(cell(v) for v in row))
    return "\n".join(lines) + "\n"


def emit_plot_data(rows, columns, path) -> None:
    """Write a plot-ready CSV table to ``path``."""
    if not rows:
        raise InvalidParametersError("table is empty")
    Path(path).write_text(format_csv(rows, columns))


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _load_instance(config: ExperimentConfig) -> Instance:
    if config.dimacs:
        return parse_dimacs(Path(config.dimacs).read_text())
    if config.n_vars is None or config.alpha is None:
        raise InvalidParametersError("need --dimacs or both --n and --alpha")
    return generate_random_instance(config.n_vars, config.alpha, config.arity,
                                    config.seed)


def _run_gen(run: _Run) -> int:
    cfg = run.config
    inst = _load_instance(cfg)
    run.stage("generate")
    run.write_text(".cnf", write_dimacs(inst))
    run.write_json("_summary.json", inst.summary())
    run.stage("write")
    return EXIT_OK


def _residual_rows(residuals) -> list[tuple]:
    return [(sweep + 1, float(r)) for sweep, r in enumerate(residuals)]


def _run_bp(run: _Run) -> int:
    cfg = run.config
    inst = _load_instance(cfg)
    run.stage("instance")
    result = belief.solve(inst, mode=cfg.mode, schedule=cfg.schedule,
                          epsilon=cfg.epsilon, max_sweeps=cfg.max_sweeps,
                          seed=cfg.seed, damping=cfg.damping,
                          init=cfg.init or "uniform")
    run.stage("solve")
    report = result.report()
    if cfg.with_entropy and result.converged and cfg.mode == belief.UNIFORM:
        ent = belief.entropy(inst, result.state)
        report["entropy"] = ent.total
    run.write_json("_report.json", report)
    run.write_text("_residuals.csv",
                   format_csv(_residual_rows(result.residuals), ["sweep", "max_change"]))
    run.write_text("_messages.jsonl", belief.dump_messages(result.state))
    run.stage("write")
    return EXIT_OK if result.converged else EXIT_NON_CONVERGENCE


def _run_sp(run: _Run) -> int:
    cfg = run.config
    inst = _load_instance(cfg)
    run.stage("instance")
    result = survey.solve(inst, schedule=cfg.schedule, epsilon=cfg.epsilon,
                          max_sweeps=cfg.max_sweeps, damping=cfg.damping,
                          seed=cfg.seed, trivial_tol=cfg.trivial_tol,
                          frozen_tol=cfg.frozen_tol, init=cfg.init or "random")
    run.stage("solve")
    report = result.report()
    if cfg.with_complexity and result.converged:
        cx = survey.complexity(inst, result.state)
        report["sigma"] = cx.total
        report["sigma_per_n"] = cx.per_var
        report["sigma_slot_spread"] = cx.slot_spread
    run.write_json("_report.json", report)
    run.write_text("_residuals.csv",
                   format_csv(_residual_rows(result.residuals), ["sweep", "max_change"]))
    run.write_text("_surveys.jsonl", survey.dump_surveys(result.state))
    run.stage("write")
    return EXIT_OK if result.converged else EXIT_NON_CONVERGENCE


def _unrolled(cfg: ExperimentConfig) -> tree.RootedTree:
    inst = _load_instance(cfg)
    if cfg.k_max is None:
        raise InvalidParametersError("need --k for unrolling")
    return tree.unroll(inst, cfg.root, cfg.k_max, node_budget=cfg.node_budget)


def _run_unroll(run: _Run) -> int:
    t = _unrolled(run.config)
    run.stage("unroll")
    run.write_text("_tree.jsonl", tree.tree_to_jsonl(t))
    run.stage("write")
    return EXIT_OK


def _run_probe(run: _Run) -> int:
    cfg = run.config
    t = _unrolled(cfg)
    run.stage("unroll")
    rows = tree.uniqueness_probe(t, cfg.n_boundaries, seed=cfg.seed)
    run.stage("probe")
    table = [(r.k, r.mean_pairwise_l1, r.max_pairwise_l1, r.n_boundaries)
             for r in rows]
    run.write_text("_dispersion.csv",
                   format_csv(table, ["k", "mean_dist", "max_dist", "n_boundaries"]))
    run.stage("write")
    return EXIT_OK


def _need_population_args(cfg: ExperimentConfig) -> None:
    if cfg.size is None or cfg.alpha is None:
        raise InvalidParametersError("need --L and --alpha")


def _run_popdyn(run: _Run) -> int:
    cfg = run.config
    _need_population_args(cfg)
    pair = popdyn.replica_pair(cfg.size, cfg.alpha, seed=cfg.seed,
                               arity=cfg.arity)
    pair, rec = popdyn.replica_run(pair, cfg.t_max, frozen_tol=cfg.frozen_tol)
    run.stage("run")
    rows = list(zip(rec.generations.tolist(),
                    rec.distance.tolist(),
                    rec.mean_unfrozen.tolist(),
                    rec.frozen_fraction.tolist(),
                    rec.sigma_per_n.tolist()))
    run.write_text("_trajectory.csv",
                   format_csv(rows, ["t", "D", "mean_s_I", "frozen_fraction",
                                     "Sigma_per_N"]))
    run.stage("write")
    return EXIT_OK


def _run_lyapunov(run: _Run) -> int:
    cfg = run.config
    _need_population_args(cfg)
    est = popdyn.lyapunov(cfg.alpha, cfg.size, t_max=cfg.t_max,
                          seed=cfg.seed,
                          seeds=cfg.seeds or None,
                          equilibration=cfg.equilibration,
                          arity=cfg.arity, keep_distance=True)
    run.stage("run")
    run.write_json("_lambda.json", {
        "alpha": cfg.alpha,
        "lambda": est.value,
        "ci": est.ci,
        "r_squared": est.r_squared,
        "window": list(est.window),
        "flags": est.flags,
    })
    if est.distance is not None:
        rows = [(t + 1, float(d)) for t, d in enumerate(est.distance)]
        run.write_text("_distance.csv", format_csv(rows, ["t", "D"]))
    run.stage("write")
    return EXIT_OK


def _run_scan(run: _Run) -> int:
    cfg = run.config
    if cfg.alpha_from is None or cfg.alpha_to is None or not cfg.alpha_step:
        raise InvalidParametersError("need --alpha-from, --alpha-to, --step")
    if cfg.size is None:
        raise InvalidParametersError("need --L")
    n_steps = int(round((cfg.alpha_to - cfg.alpha_from) / cfg.alpha_step))
    grid = [round(cfg.alpha_from + j * cfg.alpha_step, 10)
            for j in range(n_steps + 1)]
    result = popdyn.scan_alpha(grid, cfg.size, t_max=cfg.t_max,
                               seeds=cfg.seed_list(), arity=cfg.arity,
                               equilibration=cfg.equilibration,
                               sigma_samples=cfg.sigma_samples,
                               frozen_tol=cfg.frozen_tol)
    run.stage("scan")
    rows = [(r.alpha, r.lam, r.lam_ci, r.sigma_per_n, r.sigma_se,
             r.frozen_fraction) for r in result.rows]
    run.write_text("_scan.csv",
                   format_csv(rows, ["alpha", "lambda", "lambda_ci",
                                     "Sigma_per_N", "Sigma_se",
                                     "frozen_fraction"]))
    run.write_json("_thresholds.json", {
        "alpha_L": result.alpha_trivial,
        "alpha_star": result.alpha_sigma_zero,
        "alpha_U": result.alpha_chaos,
    })
    run.stage("write")
    return EXIT_OK


_DISPATCH = {
    "gen": _run_gen,
    "bp": _run_bp,
    "sp": _run_sp,
    "unroll": _run_unroll,
    "probe": _run_probe,
    "popdyn": _run_popdyn,
    "lyapunov": _run_lyapunov,
    "scan": _run_scan,
}


def run(config: ExperimentConfig) -> int:
    """Dispatch a config; artifacts plus a manifest land on disk."""
    if config.subcommand not in _DISPATCH:
        raise InvalidParametersError(f"unknown subcommand {config.subcommand!r}")
    if config.epsilon <= 0:
        raise InvalidParametersError("epsilon must be positive")
    if not 0.0 <= config.damping < 1.0:
        raise InvalidParametersError("damping must be in [0, 1)")
    runner = _Run(config)
    code = _DISPATCH[config.subcommand](runner)
    runner.finish()
    return code


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, DimacsParseError):
        return EXIT_PARSE_ERROR
    if isinstance(exc, TreeBudgetError):
        return EXIT_BUDGET
    if isinstance(exc, InvalidParametersError):
        return EXIT_INVALID_PARAMETERS
    if isinstance(exc, ContradictionError):
        return EXIT_CONTRADICTION
    return 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    # subparser arguments default to SUPPRESS: anything the user does not
    # type stays absent, so config-file values and dataclass defaults can
    # fill in underneath (file < flags)
    parser = argparse.ArgumentParser(
        prog="spsat",
        description="Message-passing workbench for random K-SAT")
    parser.add_argument("--config", help="KEY=VALUE defaults file")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text,
                              argument_default=argparse.SUPPRESS)

    def common(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--arity", type=int)
        p.add_argument("--out", help="output path prefix "
                       f"(under ${OUTDIR_ENV} if set)")

    def instance_args(p):
        p.add_argument("--n", dest="n_vars", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--dimacs", help="read the instance from a CNF file")

    def solver_args(p):
        p.add_argument("--epsilon", type=float)
        p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
        p.add_argument("--damping", type=float)
        p.add_argument("--schedule",
                       choices=[survey.SEQUENTIAL, survey.SYNCHRONOUS])
        p.add_argument("--init")

    p = add("gen", "generate an instance, write DIMACS")
    common(p)
    instance_args(p)

    p = add("bp", "belief propagation on one instance")
    common(p)
    instance_args(p)
    solver_args(p)
    p.add_argument("--mode", choices=[belief.PAPER, belief.UNIFORM])
    p.add_argument("--entropy", dest="with_entropy", action="store_true")

    p = add("sp", "survey propagation on one instance")
    common(p)
    instance_args(p)
    solver_args(p)
    p.add_argument("--trivial-tol", dest="trivial_tol", type=float)
    p.add_argument("--frozen-tol", dest="frozen_tol", type=float)
    p.add_argument("--complexity", dest="with_complexity", action="store_true")

    def tree_args(p):
        p.add_argument("--root", type=int)
        p.add_argument("--k", dest="k_max", type=int)
        p.add_argument("--budget", dest="node_budget", type=int)

    p = add("unroll", "unroll the tree around a root variable")
    common(p)
    instance_args(p)
    tree_args(p)

    p = add("probe", "boundary-uniqueness dispersion probe")
    common(p)
    instance_args(p)
    tree_args(p)
    p.add_argument("--boundaries", dest="n_boundaries", type=int)

    p = add("popdyn", "coupled-replica population trajectory")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--L", dest="size", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--frozen-tol", dest="frozen_tol", type=float)

    p = add("lyapunov", "damage-spreading exponent at one alpha")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--L", dest="size", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--seeds", type=_seed_list)
    p.add_argument("--equilibration", type=int)

    p = add("scan", "alpha scan with threshold detection")
    common(p)
    p.add_argument("--alpha-from", dest="alpha_from", type=float)
    p.add_argument("--alpha-to", dest="alpha_to", type=float)
    p.add_argument("--step", dest="alpha_step", type=float)
    p.add_argument("--L", dest="size", type=int)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--seeds", type=_seed_list)
    p.add_argument("--equilibration", type=int)
    p.add_argument("--sigma-samples", dest="sigma_samples", type=int)
    p.add_argument("--frozen-tol", dest="frozen_tol", type=float)
    return parser


def _seed_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError("seeds must be comma-separated ints")


def load_config_file(path: str) -> dict:
    """KEY=VALUE lines; '#' comments; values parsed as JSON when possible."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidParametersError(
                f"{path}:{lineno}: expected KEY=VALUE, got {line!r}")
        key, _, value = line.partition("=")
        try:
            values[key.strip()] = json.loads(value.strip())
        except json.JSONDecodeError:
            values[key.strip()] = value.strip()
    return values


def config_from_args(argv) -> ExperimentConfig:
    ns = _build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(ns).items() if k != "config"}
    values = load_config_file(ns.config) if ns.config else {}
    values.update(flags)
    return ExperimentConfig.from_dict(values)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = config_from_args(argv)
        code = run(config)
    except SpsatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except SystemExit as exc:  # argparse --help or usage errors
        return int(exc.code or 0)
    if code == EXIT_NON_CONVERGENCE:
        print("warning: solver did not converge", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
