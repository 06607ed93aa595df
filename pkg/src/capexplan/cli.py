"""Command-line surface: validate, solve, pareto, oracle, horizon.

Exit codes: 0 success, 1 infeasible or invariant violation, 2 input error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .analysis import (
    EnumerationTooLarge,
    OracleInfeasible,
    brute_force_solve,
    profitability_horizon,
)
from .formulation import ObjectiveMode, build_stochastic, extract_plan
from .instance import validate
from .instance_io import (
    InstanceFormatError,
    case_labels,
    load_instance,
    restrict_to_case,
    save_plan,
)
from .milp.branch_and_bound import solve_milp
from .milp.model import NumericalFailure, SolveOptions, Status
from .milp.mps import export_mps
from .pareto import AllPointsInfeasible, frontier_csv, sweep
from .svg import scatter_chart

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3


def _add_common(parser):
    parser.add_argument("instance", help="instance JSON file")
    parser.add_argument("--case", help="catalog case label defined in the instance")
    parser.add_argument(
        "--no-discount",
        action="store_true",
        help="force a zero interest rate (undiscounted NPV)",
    )
    parser.add_argument("--out", default="capexplan-out", help="output directory")


def _add_solver(parser):
    parser.add_argument("--gap", type=float, default=1e-4, help="MIP gap tolerance")
    parser.add_argument("--time-limit", type=float, help="seconds per solve")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument(
        "--relax-sw",
        action="store_true",
        help="relax storage/waste integrality (faster, flagged in outputs)",
    )
    parser.add_argument(
        "--export-mps", action="store_true", help="also write the model as MPS"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capexplan",
        description="capacity-expansion planning under demand uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")

    p = sub.add_parser("solve", help="single solve of the stochastic program")
    _add_common(p)
    _add_solver(p)
    p.add_argument(
        "--mode",
        choices=["max-expected", "min-risk"],
        default="max-expected",
    )
    p.add_argument(
        "--eps",
        type=float,
        help="expected-NPV target (min-risk) or risk cap (max-expected)",
    )
    p.add_argument(
        "--eps-sense",
        choices=["eq", "ge"],
        default="eq",
        help="bind the expected-NPV target exactly or as a floor",
    )

    p = sub.add_parser("pareto", help="epsilon-constraint frontier sweep")
    _add_common(p)
    _add_solver(p)
    p.add_argument(
        "--sweep-on",
        choices=["expected", "risk"],
        default="expected",
        help="sweep expected-NPV targets (min-risk solves) or risk caps",
    )
    p.add_argument(
        "--eps-grid",
        help="comma-separated targets, or lo:hi:count",
    )
    p.add_argument(
        "--eps-sense",
        choices=["eq", "ge"],
        default="ge",
        help="how expected-NPV targets bind during the sweep",
    )

    p = sub.add_parser("oracle", help="exhaustive-enumeration solve (tiny instances)")
    _add_common(p)
    p.add_argument("--u-cap", type=int, help="uniform cap on install counts")
    p.add_argument(
        "--mode", choices=["max-expected", "min-risk"], default="max-expected"
    )
    p.add_argument("--eps", type=float, help="expected-NPV target for min-risk")

    p = sub.add_parser("horizon", help="smallest profitable planning horizon")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--max-stages", type=int, help="largest horizon to test")
    return parser


def _load(args):
    instance = load_instance(args.instance)
    if getattr(args, "case", None):
        instance = restrict_to_case(instance, args.case)
    if getattr(args, "no_discount", False):
        instance.interest_rate = 0.0
    return instance


def _options(args) -> SolveOptions:
    return SolveOptions(
        gap_tol=getattr(args, "gap", 1e-4),
        time_limit=getattr(args, "time_limit", None),
        threads=getattr(args, "threads", 1),
    )


def _mode_from_args(args) -> ObjectiveMode:
    if args.mode == "min-risk":
        if args.eps is None:
            return ObjectiveMode(kind="min_risk", expected_target=None)
        return ObjectiveMode.minimize_risk(args.eps, equality=args.eps_sense == "eq")
    return ObjectiveMode.maximize_expected(risk_cap=getattr(args, "eps", None))


def _parse_grid(text):
    if text is None:
        return None
    if ":" in text:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
        if count < 1:
            raise ValueError("grid count must be >= 1")
        if count == 1:
            return [lo]
        return [lo + i * (hi - lo) / (count - 1) for i in range(count)]
    return [float(part) for part in text.split(",") if part.strip()]


def _write_metrics(out_dir: Path, solution, plan, runtime):
    metrics = {
        "expected": plan.expected if plan else None,
        "risk": plan.risk if plan else None,
        "objective": plan.objective if plan else None,
        "status": solution.status.value if solution else None,
        "gap": solution.relative_gap if solution else None,
        "node_count": solution.node_count if solution else None,
        "runtime": runtime,
    }
    (out_dir / "metrics.json").write_text(
        json.dumps(metrics, indent=2, sort_keys=True) + "\n"
    )
    return metrics


def _summary_lines(instance, plan):
    lines = [f"instance: {instance.label or '(unlabeled)'}"]
    lines.append(f"expected NPV: {plan.expected:,.2f}")
    lines.append(f"risk (mean deviation): {plan.risk:,.2f}")
    lines.append("installations:")
    any_install = False
    for entry in plan.nodes:
        summary = entry.installed_summary(instance)
        if summary:
            any_install = True
            parts = ", ".join(f"{pid}: {text}" for pid, text in sorted(summary.items()))
            lines.append(f"  node {entry.node}: {parts}")
    if not any_install:
        lines.append("  (none)")
    return lines


def cmd_validate(args) -> int:
    try:
        instance = load_instance(args.instance)
    except InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    diagnostics = validate(instance)
    for diag in diagnostics:
        print(f"{diag.severity}: {diag.where}: {diag.message}")
    errors = [d for d in diagnostics if d.is_error()]
    print(
        f"{len(errors)} error(s), {len(diagnostics) - len(errors)} warning(s)"
    )
    return EXIT_INFEASIBLE if errors else EXIT_OK


def cmd_solve(args) -> int:
    instance = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    mode = _mode_from_args(args)
    start = time.monotonic()
    model, atlas = build_stochastic(
        instance, mode, relax_storage_integrality=args.relax_sw
    )
    if args.export_mps:
        export_mps(model, str(out_dir / "model.mps"))
    solution = solve_milp(model, options=_options(args))
    runtime = time.monotonic() - start
    if not solution.is_feasible or not solution.values:
        _write_metrics(out_dir, solution, None, runtime)
        print(f"solve failed: {solution.status.value}", file=sys.stderr)
        return EXIT_INFEASIBLE
    plan = extract_plan(atlas, solution)
    save_plan(plan, out_dir / "plan.json")
    _write_metrics(out_dir, solution, plan, runtime)
    lines = _summary_lines(instance, plan)
    lines.append(f"status: {solution.status.value}, nodes: {solution.node_count}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_pareto(args) -> int:
    instance = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = _parse_grid(args.eps_grid)
    options = _options(args)
    labels = case_labels(instance) or [None]
    series = []
    for case in labels:
        sub = restrict_to_case(instance, case) if case else instance
        if args.case and case and case != args.case:
            continue
        frontier = sweep(
            sub,
            grid=grid,
            sweep_on=args.sweep_on,
            equality=args.eps_sense == "eq",
            options=options,
            relax_storage_integrality=args.relax_sw,
            case_label=case or (instance.label or "frontier"),
        )
        stem = (case or "frontier").replace(" ", "_").lower()
        (out_dir / f"{stem}.csv").write_text(frontier_csv(frontier))
        (out_dir / f"{stem}_raw.csv").write_text(
            frontier_csv(frontier, include_raw=True)
        )
        for i, point in enumerate(frontier.points):
            save_plan(point.plan, out_dir / f"{stem}_plan_{i:03d}.json")
        series.append(
            (
                frontier.case_label,
                [(p.expected, p.risk) for p in frontier.points],
            )
        )
        print(f"{frontier.case_label}: {len(frontier.points)} frontier points")
    chart = scatter_chart(
        series,
        x_label="expected NPV",
        y_label="risk (mean deviation)",
        title="expected NPV vs risk",
    )
    (out_dir / "frontier.svg").write_text(chart)
    return EXIT_OK


def cmd_oracle(args) -> int:
    instance = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.mode == "min-risk":
        mode = (
            ObjectiveMode(kind="min_risk", expected_target=None)
            if args.eps is None
            else ObjectiveMode.minimize_risk(args.eps)
        )
    else:
        mode = ObjectiveMode.maximize_expected()
    start = time.monotonic()
    plan, objective = brute_force_solve(instance, u_bounds=args.u_cap, mode=mode)
    runtime = time.monotonic() - start
    save_plan(plan, out_dir / "plan.json")
    (out_dir / "metrics.json").write_text(
        json.dumps(
            {
                "expected": plan.expected,
                "risk": plan.risk,
                "objective": objective,
                "runtime": runtime,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    lines = _summary_lines(instance, plan)
    print("\n".join(lines))
    return EXIT_OK


def cmd_horizon(args) -> int:
    instance = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    horizon = profitability_horizon(
        instance,
        max_stages=args.max_stages,
        options=_options(args),
        relax_storage_integrality=args.relax_sw,
    )
    (out_dir / "horizon.json").write_text(
        json.dumps({"profitable_horizon": horizon}, indent=2) + "\n"
    )
    if horizon is None:
        print("never profitable within the tested horizons")
    else:
        print(f"first profitable horizon: {horizon} stages")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "validate": cmd_validate,
        "solve": cmd_solve,
        "pareto": cmd_pareto,
        "oracle": cmd_oracle,
        "horizon": cmd_horizon,
    }
    try:
        return handlers[args.command](args)
    except InstanceFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AllPointsInfeasible, OracleInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalFailure, EnumerationTooLarge) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
