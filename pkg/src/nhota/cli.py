"""Benchmark CLI: run experiments from flat config files and audit the build.

Subcommands:
    run <config>       one solver run; writes trace.csv and summary.txt
    sweep <config>     one run per u in u_list on shared problem data
    check [--full]     named self-check suite; --full adds desk-scale runs
    gen-data <config>  write the problem data bundle for replay

Config files are flat ``key=value`` lines with ``#`` comments.  Unknown keys
are errors.  The environment variable NHOTA_SEED, when set, overrides the
config seed.  Exit codes: 0 success, 1 config error, 2 run failure,
3 check-suite failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import CompositeProblem, OracleFailure, Vector
from .driver import (
    TRACE_HEADER,
    IterateTrace,
    LineSearchFailure,
    RunConfig,
    format_trace_row,
    nhota_run,
)
from .inner import InnerSolveFailure
from .metrics import min_prefix, rate_fit
from .problems import (
    data_hash,
    gen_diag_quad_l1,
    gen_phase_retrieval,
    save_phase_retrieval,
)

SEED_ENV_VAR = "NHOTA_SEED"


class ConfigError(ValueError):
    """Bad config file: unknown key, unparsable value, or invalid combination."""


@dataclass
class ExperimentConfig:
    """Parsed experiment description; see KNOWN_KEYS for the file schema."""

    problem: str = ""
    n: int = 100
    m: int = 1000
    seed: int = 0
    lam: float = 1e-5
    noise_scale: float = 1.0
    gen_variance: float = 0.5
    d: Optional[list[float]] = None
    c: Optional[list[float]] = None
    p: int = 2
    M0: float = 1e-2
    Mtilde: float = 1e-2
    theta: float = 0.1
    u: float = 0.5
    u_min: float = 1e-3
    max_outer: int = 1000
    max_inner: int = 500
    step_guess: float = 1.0
    max_doublings: int = 60
    stop_f: float = 1e-3
    stop_stat: float = 1e-3
    u_list: list[float] = field(default_factory=lambda: [0.05, 0.25, 0.5, 0.75, 1.0])
    out_dir: str = "runs"


_INT_KEYS = {"n", "m", "seed", "p", "max_outer", "max_inner", "max_doublings"}
_FLOAT_KEYS = {
    "lambda", "noise_scale", "gen_variance", "M0", "Mtilde", "theta",
    "u", "u_min", "step_guess", "stop_f", "stop_stat",
}
_LIST_KEYS = {"u_list", "d", "c"}
_STR_KEYS = {"problem", "out_dir"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _STR_KEYS

# config key -> dataclass attribute ("lambda" is a Python keyword)
_ATTR_FOR_KEY = {"lambda": "lam"}

_PROBLEMS = ("phase_retrieval", "diag_quad_l1")


def parse_config(path) -> ExperimentConfig:
    """Parse a flat key=value file; every malformed line is an error."""
    cfg = ExperimentConfig()
    seen: set[str] = set()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        attr = _ATTR_FOR_KEY.get(key, key)
        try:
            if key in _INT_KEYS:
                setattr(cfg, attr, int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, attr, float(value))
            elif key in _LIST_KEYS:
                items = [float(v) for v in value.split(",") if v.strip()]
                if not items:
                    raise ValueError("empty list")
                setattr(cfg, attr, items)
            else:
                setattr(cfg, attr, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    _validate(cfg, path)
    return cfg


def _validate(cfg: ExperimentConfig, path) -> None:
    if cfg.problem not in _PROBLEMS:
        raise ConfigError(
            f"{path}: problem must be one of {', '.join(_PROBLEMS)}, got {cfg.problem!r}"
        )
    if (cfg.d is None) != (cfg.c is None):
        raise ConfigError(f"{path}: d and c must be given together")
    if cfg.d is not None and len(cfg.d) != len(cfg.c):
        raise ConfigError(f"{path}: d and c must have equal length")
    if SEED_ENV_VAR in os.environ:
        try:
            cfg.seed = int(os.environ[SEED_ENV_VAR])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer: {exc}") from exc


def build_problem(cfg: ExperimentConfig) -> tuple[CompositeProblem, object, Vector]:
    """Instantiate the configured problem; returns (problem, data, x0)."""
    if cfg.problem == "phase_retrieval":
        return gen_phase_retrieval(
            cfg.n, cfg.m, cfg.seed, cfg.noise_scale, lam=cfg.lam,
            gen_variance=cfg.gen_variance,
        )
    if cfg.d is not None:
        from .problems import DiagQuadL1Data, diag_quad_problem

        data = DiagQuadL1Data(d=np.asarray(cfg.d, float), c=np.asarray(cfg.c, float), lam=cfg.lam)
        rng = np.random.default_rng(cfg.seed)
        x0 = rng.normal(0.0, 1.0, size=data.n)
        return diag_quad_problem(data), data, x0
    return gen_diag_quad_l1(cfg.n, cfg.seed, lam=cfg.lam)


def run_config_of(cfg: ExperimentConfig, u: Optional[float] = None) -> RunConfig:
    return RunConfig(
        p=cfg.p, M0=cfg.M0, Mtilde=cfg.Mtilde, theta=cfg.theta,
        u=cfg.u if u is None else u, u_min=cfg.u_min,
        max_outer=cfg.max_outer, stop_f=cfg.stop_f, stop_stat=cfg.stop_stat,
        seed=cfg.seed, max_inner=cfg.max_inner, step_guess=cfg.step_guess,
        max_doublings=cfg.max_doublings,
    )


def _fitted_slope(trace: IterateTrace) -> float:
    """Log-log slope of the running-minimum stationarity series, NaN if unfit."""
    series = trace.stationarity_values()
    if series.size < 8 or not np.all(np.isfinite(series)):
        return float("nan")
    try:
        return rate_fit(min_prefix(series)).slope
    except ValueError:
        return float("nan")



def _write_summary(path: Path, entries: dict) -> None:
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={float(value)!r}\n" if isinstance(value, float)
                     else f"{key}={value}\n")


def _summary_entries(cfg: ExperimentConfig, runcfg: RunConfig, trace: IterateTrace,
                     problem: CompositeProblem, data, wall_total: float) -> dict:
    entries = {
        "status": trace.status,
        "iterations": trace.iterations(),
        "final_f": trace.f_final,
        "final_stationarity": float("nan") if trace.stat_final is None else trace.stat_final,
        "stationarity_kind": trace.stationarity_kind,
        "fitted_slope": _fitted_slope(trace),
        "problem": cfg.problem,
        "p": runcfg.p,
        "u": runcfg.u,
        "seed": cfg.seed,
        "data_hash": data_hash(data),
        "wall_millis_total": wall_total,
    }
    if problem.known_opt is not None:
        entries["final_f_gap"] = trace.f_final - problem.known_opt[1]
    return entries


def _run_to_files(problem, x0, runcfg, trace_path: Path) -> tuple[IterateTrace, float]:
    """Execute one run, streaming (and flushing) trace rows as they happen."""
    t0 = time.perf_counter()
    with open(trace_path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        fh.flush()

        def sink(row):
            fh.write(format_trace_row(row) + "\n")
            fh.flush()

        trace = nhota_run(problem, x0, runcfg, row_sink=sink)
    return trace, (time.perf_counter() - t0) * 1000.0


def run_experiment(cfg: ExperimentConfig) -> IterateTrace:
    """Single run: writes <out_dir>/trace.csv and <out_dir>/summary.txt."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem, data, x0 = build_problem(cfg)
    runcfg = run_config_of(cfg)
    trace, wall = _run_to_files(problem, x0, runcfg, out / "trace.csv")
    _write_summary(out / "summary.txt",
                   _summary_entries(cfg, runcfg, trace, problem, data, wall))
    return trace


def sweep_u(cfg: ExperimentConfig) -> dict[float, IterateTrace]:
    """One run per u in u_list, all on bit-identical problem data.

    Writes trace_u<...>.csv and summary_u<...>.txt per run plus a wide
    comparison.csv holding, for each u, the objective and stationarity at
    every iterate (blank after a run has stopped).
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem, data, x0 = build_problem(cfg)
    traces: dict[float, IterateTrace] = {}
    for u in cfg.u_list:
        tag = f"u{u:g}"
        runcfg = run_config_of(cfg, u=u)
        trace, wall = _run_to_files(problem, x0, runcfg, out / f"trace_{tag}.csv")
        _write_summary(out / f"summary_{tag}.txt",
                       _summary_entries(cfg, runcfg, trace, problem, data, wall))
        traces[u] = trace

    columns: dict[float, tuple[np.ndarray, np.ndarray]] = {
        u: (t.f_values(), t.stationarity_values()) for u, t in traces.items()
    }
    depth = max(len(f) for f, _ in columns.values())
    with open(out / "comparison.csv", "w") as fh:
        names = ",".join(f"f_u{u:g},stat_u{u:g}" for u in cfg.u_list)
        fh.write(f"k,{names}\n")
        for k in range(depth):
            cells = []
            for u in cfg.u_list:
                f_vals, s_vals = columns[u]
                if k < len(f_vals):
                    cells.append(f"{float(f_vals[k])!r},{float(s_vals[k])!r}")
                else:
                    cells.append(",")
            fh.write(f"{k},{','.join(cells)}\n")
    return traces


def gen_data(cfg: ExperimentConfig) -> Path:
    """Write the replayable data bundle for a phase retrieval config."""
    if cfg.problem != "phase_retrieval":
        raise ConfigError(
            "gen-data supports only problem=phase_retrieval; diagonal instances "
            "are regenerated exactly from (n, seed, lambda)"
        )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, data, _ = build_problem(cfg)
    path = out / "data.npz"
    save_phase_retrieval(data, path)
    return path


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nhota",
        description="Composite-optimization benchmark driver (higher-order "
                    "Taylor steps with nonmonotone acceptance).",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)
    for name, needs_config in (("run", True), ("sweep", True), ("gen-data", True)):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("config", help="flat key=value config file")
    check_p = sub.add_parser("check")
    check_p.add_argument("--full", action="store_true",
                         help="include desk-scale problem sizes")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    try:
        if args.cmd == "run":
            trace = run_experiment(parse_config(args.config))
            print(f"status={trace.status} iterations={trace.iterations()} "
                  f"final_f={trace.f_final!r}")
        elif args.cmd == "sweep":
            traces = sweep_u(parse_config(args.config))
            for u, trace in traces.items():
                print(f"u={u:g}: status={trace.status} iterations={trace.iterations()} "
                      f"final_f={trace.f_final!r}")
        elif args.cmd == "gen-data":
            path = gen_data(parse_config(args.config))
            print(f"wrote {path}")
        else:
            from .checks import check_suite, render_results

            results = check_suite("full" if args.full else "quick")
            print(render_results(results))
            if not all(r.passed for r in results):
                return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (LineSearchFailure, InnerSolveFailure, OracleFailure) as exc:
        print(f"run failure: {exc}", file=sys.stderr)
        return 2
    return 0


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
