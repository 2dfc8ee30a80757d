from __future__ import annotations

import argparse
import json
import math
import os
from argparse import Namespace
from typing import Any

from loguru import logger
from scipy import fft as sfft

from .cli_utils import initial_field, parse_besov, parse_lp, setup_logging
from .config import Config, load_config
from .diagnostics import critical_index, fitted_decay_rate, local_existence_time, smallness_report
from .dyadic import BesovSpec, besov_norm, build_family
from .errors import BlowupError, CFLViolation, ConfigurationError, DomainError, SnapshotError
from .exporter import export_ledger_csv, export_report_json, fmt_exponent, jsonable, norm_report
from .ledger import LEDGER_PS
from .run_config import PLAN_NAMES, load_plan, load_run_config
from .solver import SimulationState, initial_state, step_qg
from .spectral import Grid, forward, inverse, lp_norm
from .storage import ensure_dirs, load_snapshot, save_snapshot
from .suites import SUITES, SuiteContext, run_suite, write_report


"""CLI entry: simulate, verify and diagnose. Exit codes: 0 ok, 1 config/input error
or failed hard checks, 2 blowup or mid-run CFL abort."""


def _out_dir(args: Namespace, cfg: Config, fallback: str | None = None) -> str:
    return ensure_dirs(args.out or fallback or cfg.out_dir)


def _save(state: SimulationState, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, f"{name}_{state.steps:06d}.bin")
    return save_snapshot(inverse(state.theta), path, state.t, name)


def _besov_values(theta, specs: list[BesovSpec], fam) -> dict[str, float]:
    return {spec.label(): besov_norm(theta, spec, fam) for spec in specs}


def cmd_simulate(args: Namespace, cfg: Config) -> int:
    try:
        run = load_run_config(args.config)
        grid = Grid(run.n, run.length)
        fam = build_family(grid)
        seed = args.seed if args.seed is not None else run.seed if run.seed is not None else cfg.default_seed
        theta0 = initial_field(run, grid, fam, seed)
        solver_cfg = run.solver_config()
        state = initial_state(theta0, solver_cfg, fam)
    except (ConfigurationError, DomainError, SnapshotError) as e:
        logger.error(str(e))
        return 1
    specs = [b.to_spec() for b in run.outputs.besov_specs] or [
        BesovSpec(critical_index(p, run.alpha), p, 1.0) for p in LEDGER_PS
    ]
    out_dir = _out_dir(args, cfg)
    every = run.outputs.snapshot_every
    logger.info(
        f"simulate {run.name}: n={grid.n} alpha={run.alpha} dt={run.dt} t_end={run.t_end} "
        f"steps={solver_cfg.n_steps} integrator={run.integrator} seed={seed}"
    )
    _save(state, out_dir, run.name)

    status, code = "completed", 0
    try:
        for _ in range(solver_cfg.n_steps):
            state = step_qg(state, solver_cfg)
            if every and state.steps % every == 0:
                _save(state, out_dir, run.name)
    except CFLViolation as e:
        if state.steps == 0:
            logger.error(str(e))
            return 1
        logger.error(f"aborted at step {state.steps}: {e}")
        status, code = "cfl_abort", 2
    except BlowupError as e:
        logger.error(f"aborted at step {state.steps}: {e}")
        status, code = "blowup", 2

    if not every or state.steps % every:
        _save(state, out_dir, run.name)
    if run.outputs.ledger_csv:
        export_ledger_csv(state.ledger, name=run.name, out_dir=out_dir)
    rate_c = fitted_decay_rate(theta0, run.alpha, fam, fallback=cfg.rate_c)
    summary: dict[str, Any] = {
        "name": run.name,
        "status": status,
        "seed": seed,
        "steps": state.steps,
        "t_final": state.t,
        "V": float(state.ledger.accumulated_v()[-1]),
        "lp_final": {fmt_exponent(p): state.ledger.lp[p][-1] for p in LEDGER_PS},
        "besov_initial": _besov_values(theta0, specs, fam),
        "besov_final": _besov_values(state.theta, specs, fam),
        "smallness": smallness_report(theta0, run.alpha, fam).as_dict(),
        "decay_rate_c": rate_c,
        "local_existence_time": local_existence_time(theta0, run.alpha, rate_c, cfg.eta, fam),
    }
    export_report_json(summary, os.path.join(out_dir, f"{run.name}_summary.json"))
    print(f"{run.name}: {status} after {state.steps} steps (t={state.t:.6g}); outputs in {out_dir}")
    return code


def cmd_verify(args: Namespace, cfg: Config) -> int:
    if args.list:
        for name in PLAN_NAMES:
            suite = SUITES[name]
            print(f'{name:<14} {suite.measures}  "{suite.anchor}"')
        return 0
    if not args.plan:
        logger.error("verify needs --plan NAME|path.json (or --list)")
        return 1
    try:
        plan = load_plan(args.plan)
    except ConfigurationError as e:
        logger.error(str(e))
        return 1
    seed = args.seed if args.seed is not None else plan.seed if plan.seed is not None else cfg.default_seed
    ctx = SuiteContext(seed=seed, params=plan.params, eta=cfg.eta, rate_c=cfg.rate_c)
    try:
        report = run_suite(plan.name, ctx)
    except (ConfigurationError, DomainError) as e:
        logger.error(f"plan {plan.name}: {e}")
        return 1
    except BlowupError as e:
        logger.error(f"plan {plan.name} aborted: {e}")
        return 2
    out_dir = _out_dir(args, cfg, plan.out_dir)
    write_report(report, out_dir)
    hard = [c for c in report.checks if c.hard]
    failed = [c.name for c in hard if not c.passed]
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{plan.name}: {verdict} ({len(hard) - len(failed)}/{len(hard)} hard checks)")
    for name in failed:
        print(f"  failed: {name}")
    return 0 if report.passed else 1


def cmd_diagnose(args: Namespace, cfg: Config) -> int:
    try:
        u, meta = load_snapshot(args.snapshot)
        specs = [parse_besov(b) for b in args.besov or []]
        ps = parse_lp(args.lp) or (() if specs else (1.0, 2.0, math.inf))
    except (SnapshotError, ConfigurationError) as e:
        logger.error(str(e))
        return 1
    grid = u.grid
    fam = build_family(grid)
    uh = forward(u)
    out: dict[str, Any] = {
        "snapshot": args.snapshot,
        "name": meta["name"],
        "time": meta["time"],
        "grid": {"n": grid.n, "length": grid.length, "d": grid.d},
        "lp": {fmt_exponent(p): lp_norm(u, p) for p in ps},
        "besov": [norm_report(spec, besov_norm(uh, spec, fam), grid.n, grid.length) for spec in specs],
    }
    print(json.dumps(jsonable(out), sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="Output directory (default SQGLAB_OUT_DIR or data/out)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed; overrides the config/plan seed")
    common.add_argument("--threads", type=int, default=None, help="FFT worker threads (default SQGLAB_THREADS)")

    p = argparse.ArgumentParser(prog="sqglab", description="QG_alpha simulator and Littlewood-Paley diagnostics")
    sub = p.add_subparsers(dest="cmd", required=True)

    s_sim = sub.add_parser("simulate", parents=[common], help="Run the QG_alpha solver from a JSON run config")
    s_sim.add_argument("--config", required=True, help="Path to the run config (JSON)")
    s_sim.set_defaults(func=cmd_simulate)

    s_ver = sub.add_parser("verify", parents=[common], help="Run a named verification suite")
    s_ver.add_argument("--plan", default=None, help=f"Plan name ({', '.join(PLAN_NAMES)}) or a plan JSON file")
    s_ver.add_argument("--list", action="store_true", help="List the available plans")
    s_ver.set_defaults(func=cmd_verify)

    s_diag = sub.add_parser("diagnose", parents=[common], help="Print norms of a stored snapshot as JSON")
    s_diag.add_argument("snapshot", help="Snapshot .bin path (sidecar .json alongside)")
    s_diag.add_argument("--besov", action="append", default=None, help="s,p,m[,hom|inhom]; repeatable")
    s_diag.add_argument("--lp", default=None, help="Comma-separated Lebesgue exponents, e.g. 1,2,inf")
    s_diag.set_defaults(func=cmd_diagnose)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = load_config()
    setup_logging(cfg.log_level)
    threads = args.threads if args.threads is not None else cfg.threads
    with sfft.set_workers(max(1, threads)):
        return args.func(args, cfg)


if __name__ == "__main__":
    raise SystemExit(main())
