"""Command-line entry point: run scenarios, check derivatives, benchmark.

Exit codes for `run`: 0 success, 2 when any solve degraded or any foothold
violated terrain constraints, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .exceptions import QuadMpcError
from .ocp import solve
from .scenarios import load_scenario
from .simloop import mpc_step, simulate, write_log, MpcState, _planner_state
from .verify import check_derivatives

__all__ = ["main"]


def _parse_overrides(pairs: list) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValueError(f"--set expects KEY=VALUE, got '{pair}'")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, _parse_overrides(args.set))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    log = simulate(scenario)
    summary = write_log(log, scenario, outdir)
    (outdir / "scenario-resolved.yaml").write_text(
        yaml.safe_dump(scenario.resolved, sort_keys=True)
    )
    if log.failure:
        print(f"FAILURE: {log.failure}", file=sys.stderr)
        return 1
    violations = sum(
        r["violations"]["gap_violations"] + r["violations"]["stone_violations"]
        for r in summary["robots"]
    )
    degraded = summary["degraded_solves"]
    print(
        f"{scenario.name}: {summary['solves']} solves "
        f"({degraded} degraded), {violations} foothold violations, "
        f"tracking rms {summary['robots'][0]['tracking_rms']:.4f} m"
    )
    return 2 if (degraded or violations) else 0


def cmd_check_gradients(args) -> int:
    worst = check_derivatives(args.model, args.trials, seed=args.seed)
    ok = all(v < args.tol for v in worst.values())
    for name, value in sorted(worst.items()):
        marker = "ok" if value < args.tol else "FAIL"
        print(f"{args.model} {name}: max rel err {value:.3e} (tol {args.tol:g}) {marker}")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    scenario = load_scenario(args.scenario, _parse_overrides(args.set))
    cold_ms = []
    warm_ms = []
    for _ in range(args.reps):
        mpc = MpcState()
        from .simloop import SimState  # local import keeps CLI surface minimal

        sims = []
        for setup in scenario.robots:
            r0 = np.array(
                [setup.start_xy[0], setup.start_xy[1], scenario.target_height]
            )
            from .quat import yaw_quat

            q0 = yaw_quat(setup.heading)
            sims.append(
                SimState(
                    model=scenario.model,
                    dt_sub=scenario.dt / scenario.substeps,
                    mass=setup.params.mass,
                    r=r0.copy(),
                    r_prev=r0.copy(),
                    q=q0.copy(),
                    q_prev=q0.copy(),
                )
            )
        measured = [_planner_state(scenario, s) for s in sims]
        t0 = time.perf_counter()
        mpc_step(mpc, measured, scenario, 0.0)
        cold_ms.append((time.perf_counter() - t0) * 1e3)
        for i in range(1, 1 + args.warm_steps):
            t = i * scenario.dt
            t0 = time.perf_counter()
            mpc_step(mpc, measured, scenario, t)
            warm_ms.append((time.perf_counter() - t0) * 1e3)

    def stats(values):
        arr = np.array(values) if values else np.zeros(1)
        return {
            "p50": float(np.percentile(arr, 50)),
            "p95": float(np.percentile(arr, 95)),
            "max": float(arr.max()),
            "n": len(values),
        }

    result = {
        "scenario": scenario.name,
        "model": scenario.model,
        "N": scenario.N,
        "cold_ms": stats(cold_ms),
        "warm_ms": stats(warm_ms),
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_validate(args) -> int:
    from .scenarios import validate_footholds

    outdir = Path(args.log)
    summary = json.loads((outdir / "summary.json").read_text())
    scenario = load_scenario(outdir / "scenario-resolved.yaml")
    total = 0
    for i, robot in enumerate(summary["robots"]):
        feet = np.array(
            [f["position"] for f in robot["executed_footholds"]]
        ).reshape(-1, 3)
        report = validate_footholds(feet, scenario.gaps, scenario.stones)
        print(
            f"robot {i}: {report.total} footholds, "
            f"{report.gap_violations} in gaps, {report.stone_violations} off stones"
        )
        total += report.violation_count
    return 2 if total else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadmpc")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write logs")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_run.set_defaults(func=cmd_run)

    p_chk = sub.add_parser("check-gradients", help="finite-difference oracles")
    p_chk.add_argument("--model", choices=["ipm", "srbm"], default="ipm")
    p_chk.add_argument("--trials", type=int, default=20)
    p_chk.add_argument("--tol", type=float, default=1e-5)
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.set_defaults(func=cmd_check_gradients)

    p_bench = sub.add_parser("bench", help="cold/warm solve timing")
    p_bench.add_argument("--scenario", required=True)
    p_bench.add_argument("--reps", type=int, default=5)
    p_bench.add_argument("--warm-steps", type=int, default=10)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_bench.set_defaults(func=cmd_bench)

    p_val = sub.add_parser("validate", help="re-check footholds of a finished run")
    p_val.add_argument("--log", required=True)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QuadMpcError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
