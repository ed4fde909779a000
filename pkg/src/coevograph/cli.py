"""Command-line front end: simulate, constants, study, presets.

Exit codes: 0 success, 1 runtime failure (divergence, non-convergence,
failed required gate), 2 config/validation error.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys

import numpy as np

from . import __version__
from .analysis import (
    ContractionInputs,
    contraction_report,
    fast_limit_study,
    graph_limit_study,
    slow_limit_study,
    working_constants,
)
from .config import (
    ConfigError,
    Scenario,
    build_scenario,
    load_config,
    rebuild_at_resolution,
)
from .dynamics import DivergenceError, NonConvergenceError, integrate, picard_solve
from .fields import estimate_constants
from .graph_core import sup_norm, tv_norm
from .presets import available_presets
from .serialize import (
    audit_payload,
    dump_json,
    ensure_dir,
    to_jsonable,
    write_trajectory_csv,
)


def _locate_key(config_path: str, key_path: str) -> str:
    """Best-effort line hint for a config error path."""
    leaf = re.split(r"[.\[]", key_path)[-1].rstrip("]")
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if re.match(rf"\s*{re.escape(leaf)}\s*:", line):
                    return f" (near line {lineno})"
    except OSError:
        pass
    return ""


def _fail_config(exc: ConfigError, config_path: str) -> int:
    hint = _locate_key(config_path, exc.path) if config_path else ""
    print(f"error: {exc}{hint}", file=sys.stderr)
    return 2


def _scenario_from(args) -> Scenario:
    resolved = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        resolved["seed"] = args.seed
    if getattr(args, "dt", None) is not None:
        resolved["run"]["dt"] = args.dt
    if getattr(args, "eta_stride", None) is not None:
        resolved["emit"]["eta_stride"] = args.eta_stride
    return build_scenario(resolved)


def _contraction_from_constants(scenario: Scenario, consts: dict):
    needed = ("c_v", "l_v", "c_omega", "l_omega")
    if any(math.isnan(consts[k]) for k in needed):
        return None
    inputs = ContractionInputs(
        consts["l_phi"],
        consts["c_v"],
        consts["l_v"],
        scenario.spec.mass_bound,
        consts["c_omega"],
        consts["l_omega"],
        consts["eta0_sup"],
    )
    return contraction_report(inputs, scenario.spec.horizon)


def _summary(scenario: Scenario, traj, solver: str, extra=None, truncated=False) -> dict:
    out = {
        "version": __version__,
        "solver": solver,
        "config": scenario.echo,
        "truncated": truncated,
        "n_vertices": scenario.spec.graph.n,
    }
    if traj is not None:
        out["final"] = {
            "time": float(traj.times[-1]),
            "total_mass": float(traj.rho[-1].sum()),
            "tv_norm": tv_norm(traj.rho[-1]),
            "eta_sup": sup_norm(traj.eta[-1]),
            "rho": traj.rho[-1],
        }
    if extra:
        out.update(extra)
    return out


def cmd_simulate(args) -> int:
    try:
        scenario = _scenario_from(args)
    except ConfigError as exc:
        return _fail_config(exc, args.config)
    out = ensure_dir(args.out)
    emit = scenario.emit
    solver = scenario.run["solver"]
    extra = {}
    truncated = False
    traj = None
    status = 0
    try:
        if solver == "picard":
            consts = working_constants(
                scenario.spec, scenario.eta0, probes=scenario.constants_probes,
                seed=scenario.seed,
            )
            report = _contraction_from_constants(scenario, consts)
            traj, log = picard_solve(
                scenario.spec, scenario.rho0, scenario.eta0, scenario.picard(),
                t_star=report.t_star if report else None,
            )
            extra["picard"] = {
                "iterations": log.iterations,
                "gaps": list(log.gaps),
                "ratios": list(log.ratios),
                "tol": log.tol,
            }
            if report is not None:
                extra["contraction"] = report.to_dict()
        else:
            traj = integrate(
                scenario.spec, scenario.rho0, scenario.eta0, scenario.integrator()
            )
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        traj = exc.partial
        truncated = True
        extra["error"] = str(exc)
        status = 1
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        extra["error"] = str(exc)
        extra["gap_history"] = list(exc.gaps)
        truncated = True
        status = 1

    if traj is not None and emit["trajectory"]:
        write_trajectory_csv(
            os.path.join(out, "trajectory.csv"), traj, emit["eta"], emit["eta_stride"]
        )
    if traj is not None and emit["audit"]:
        payload = audit_payload(scenario.spec, traj)
        payload["truncated"] = truncated
        payload["config"] = scenario.echo
        dump_json(payload, os.path.join(out, "audit.json"))
    if emit["summary"]:
        dump_json(
            _summary(scenario, traj, solver, extra, truncated),
            os.path.join(out, "summary.json"),
        )
    return status


def cmd_constants(args) -> int:
    try:
        scenario = _scenario_from(args)
    except ConfigError as exc:
        return _fail_config(exc, args.config)
    out = ensure_dir(args.out)
    spec = scenario.spec
    vrep = estimate_constants(
        spec.velocity, spec.graph, scenario.constants_probes,
        spec.mass_bound, spec.horizon, scenario.seed,
    )
    orep = estimate_constants(
        spec.omega, spec.graph, scenario.constants_probes,
        spec.mass_bound, spec.horizon, scenario.seed + 1,
    )

    def est_dict(report):
        return {
            name: {
                "declared": e.declared,
                "empirical": e.empirical,
                "closed_form": e.closed_form,
                "working": e.working,
                "declared_consistent": e.declared_consistent,
            }
            for name, e in report.estimates.items()
        }

    consts = working_constants(
        spec, scenario.eta0, probes=scenario.constants_probes, seed=scenario.seed
    )
    report = _contraction_from_constants(scenario, consts)
    payload = {
        "version": __version__,
        "config": scenario.echo,
        "velocity": est_dict(vrep),
        "omega": est_dict(orep),
        "l_phi": spec.interp.lipschitz_constant,
        "eta0_sup": consts["eta0_sup"],
        "contraction": report.to_dict() if report else None,
    }
    dump_json(payload, os.path.join(out, "constants.json"))
    if report:
        print(
            f"T* = {report.t_star:.9g}; horizon {spec.horizon:g} -> {payload['contraction']['verdict']}"
        )
    return 0


def _evaluate_gates(study, gates: dict) -> dict:
    verdicts = {}
    if gates["slope_window"] is not None:
        lo, hi = gates["slope_window"]
        verdicts["slope_in_window"] = bool(
            not math.isnan(study.slope) and lo <= study.slope <= hi
        )
    if gates["errors_below_bounds"]:
        verdicts["errors_below_bounds"] = bool(
            all(
                math.isnan(b) or e <= b
                for e, b in zip(study.errors, study.bounds)
            )
        )
    if gates["monotone"]:
        verdicts["monotone"] = not any("error increased" in f for f in study.flags)
    verdicts["all_passed"] = all(verdicts.values()) if verdicts else True
    return verdicts


def cmd_study(args) -> int:
    try:
        scenario = _scenario_from(args)
        study_cfg = scenario.study
        if study_cfg is None:
            raise ConfigError("study", "missing required section for the study command")
        if study_cfg["kind"] != args.kind:
            raise ConfigError(
                "study.kind",
                f"config says {study_cfg['kind']!r} but the command requested {args.kind!r}",
            )
    except ConfigError as exc:
        return _fail_config(exc, args.config)
    out = ensure_dir(args.out)
    cfg = scenario.integrator()
    jobs = args.jobs or 1

    if args.kind == "slow":
        study, runs = slow_limit_study(
            scenario.spec, scenario.rho0, scenario.eta0, study_cfg["epsilons"], cfg,
            probes=study_cfg["probes"], seed=scenario.seed, jobs=jobs, return_runs=True,
        )
    elif args.kind == "fast":
        study, runs = fast_limit_study(
            scenario.spec, scenario.rho0, scenario.eta0, study_cfg["epsilons"], cfg,
            well_prepared=study_cfg["well_prepared"], probes=study_cfg["probes"],
            seed=scenario.seed, jobs=jobs, return_runs=True,
        )
    else:
        try:
            study, runs = graph_limit_study(
                lambda n: rebuild_at_resolution(scenario.echo, n),
                study_cfg["n_ladder"],
                scenario.spec.velocity,
                scenario.spec.omega,
                scenario.spec.interp,
                scenario.spec.horizon,
                scenario.spec.mass_bound,
                cfg,
                jobs=jobs,
                return_runs=True,
            )
        except ConfigError as exc:
            return _fail_config(exc, args.config)

    gates = _evaluate_gates(study, study_cfg["gates"])
    payload = study.to_dict()
    payload["gates"] = gates
    payload["seed"] = scenario.seed
    payload["config"] = scenario.echo
    payload["version"] = __version__
    dump_json(payload, os.path.join(out, "study.json"))

    if "reference" in runs:
        write_trajectory_csv(os.path.join(out, "reference.csv"), runs["reference"])
    for idx, (param, traj) in enumerate(runs["runs"]):
        write_trajectory_csv(os.path.join(out, f"rung_{idx:02d}.csv"), traj)

    slope_txt = "n/a" if math.isnan(study.slope) else f"{study.slope:.3f}"
    print(
        f"{study.kind}: {len(study.errors)} rungs, slope {slope_txt}, "
        f"gates {'pass' if gates['all_passed'] else 'FAIL'}"
    )
    if study_cfg["gates"]["required"] and not gates["all_passed"]:
        print("error: a required study gate failed", file=sys.stderr)
        return 1
    return 0


def cmd_presets(args) -> int:
    if args.action != "list":
        print(f"error: unknown presets action {args.action!r}", file=sys.stderr)
        return 2
    for name, desc in sorted(available_presets().items()):
        print(f"{name:22s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coevograph",
        description="Simulate nonlocal continuity equations on co-evolving weighted graphs.",
    )
    parser.add_argument("--version", action="version", version=f"coevograph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dt_flag=True):
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        if dt_flag:
            p.add_argument("--dt", type=float, default=None, help="override run.dt")

    sim = sub.add_parser("simulate", help="run one simulation and write outputs")
    common(sim)
    sim.add_argument(
        "--eta-stride", type=int, default=None,
        help="emit eta snapshots every N rows (default from config: 10)",
    )
    sim.set_defaults(func=cmd_simulate)

    con = sub.add_parser("constants", help="estimate constants and the contraction horizon")
    common(con, dt_flag=False)
    con.set_defaults(func=cmd_constants)

    stu = sub.add_parser("study", help="run a convergence study")
    stu.add_argument("kind", choices=["slow", "fast", "graph-limit"])
    common(stu)
    stu.add_argument("--jobs", type=int, default=1, help="concurrent rungs (default 1)")
    stu.set_defaults(func=cmd_study)

    pre = sub.add_parser("presets", help="inspect scenario presets")
    pre.add_argument("action", choices=["list"])
    pre.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, NonConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
