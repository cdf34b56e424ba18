"""Command line interface: problem-file ingestion and machine-readable output.

Subcommands:
    coeffs    write the coefficient table (CSV)
    analyze   evaluate all applicable criteria (JSON report)
    simulate  solve, reconstruct and write trajectory/node CSVs plus verdicts
    check     run every per-instance consistency invariant and report pass/fail

Exit codes: 0 success, 1 invariant failure, 2 input/schema error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import criteria as crit
from . import diffeq, trajectory
from .exprlang import Expr, ParseError, parse
from .quad import NoConvergence, SingularIntegrand
from .reduction import (
    CoefficientError,
    DiagnosticMismatch,
    Direction,
    ImpulseSpec,
    ProblemSpec,
    ZeroCoefficient,
    ZeroImpulseFactor,
    build_discrete_system,
)

__all__ = ["main", "load_problem", "SchemaError"]

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (
    SingularIntegrand,
    NoConvergence,
    CoefficientError,
    DiagnosticMismatch,
    ZeroCoefficient,
    diffeq.AdvanceDivisionByZero,
    diffeq.DegenerateAdvance,
    diffeq.TooShort,
    crit.TooShortTail,
)


class SchemaError(Exception):
    pass


_ALLOWED_KEYS = {
    "a", "b", "direction", "k", "impulse", "initial_window",
    "n0", "horizon", "tol", "tail_fraction",
}
_REQUIRED_KEYS = {"a", "b", "direction", "k", "impulse", "initial_window", "horizon"}


@dataclass
class ProblemFile:
    spec: ProblemSpec
    tol: float
    tail_fraction: float


def _require_number(doc, key, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"key {key!r} must be a number")
    return float(value)


def _parse_expr(source, variable, key) -> Expr:
    if not isinstance(source, str):
        raise SchemaError(f"key {key!r} must be an expression string")
    try:
        return parse(source, variable)
    except ParseError as exc:
        raise SchemaError(f"key {key!r}: {exc}") from exc


def _parse_impulse(value) -> ImpulseSpec:
    if value == "none":
        return ImpulseSpec.none()
    if not isinstance(value, dict):
        raise SchemaError('impulse must be "none" or an object')
    keys = set(value)
    if keys == {"factor"}:
        return ImpulseSpec.constant(_require_number(value, "impulse.factor", value["factor"]))
    if keys == {"formula"}:
        return ImpulseSpec.formula(_parse_expr(value["formula"], "n", "impulse.formula"))
    if keys in ({"table"}, {"table", "default"}):
        table = value["table"]
        if not isinstance(table, list) or not table:
            raise SchemaError("impulse.table must be a nonempty list of numbers")
        entries = [_require_number(value, "impulse.table", v) for v in table]
        default = _require_number(value, "impulse.default", value.get("default", 1.0))
        return ImpulseSpec.table(entries, default=default)
    raise SchemaError(f"unrecognized impulse object with keys {sorted(keys)}")


def validate_problem(doc: dict) -> ProblemFile:
    if not isinstance(doc, dict):
        raise SchemaError("problem file must be a JSON object")
    unknown = set(doc) - _ALLOWED_KEYS
    if unknown:
        raise SchemaError(f"unknown keys: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(doc)
    if missing:
        raise SchemaError(f"missing keys: {sorted(missing)}")

    direction_text = doc["direction"]
    if direction_text not in ("delayed", "advanced"):
        raise SchemaError('direction must be "delayed" or "advanced"')
    direction = Direction(direction_text)

    k = doc["k"]
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise SchemaError("k must be a positive integer")
    horizon = doc["horizon"]
    if isinstance(horizon, bool) or not isinstance(horizon, int):
        raise SchemaError("horizon must be an integer")
    n0 = doc.get("n0", 0)
    if isinstance(n0, bool) or not isinstance(n0, int):
        raise SchemaError("n0 must be an integer")

    window = doc["initial_window"]
    if not isinstance(window, list) or len(window) != k + 1:
        raise SchemaError(f"initial_window must be a list of {k + 1} numbers")
    window = [_require_number(doc, "initial_window", v) for v in window]

    tol = _require_number(doc, "tol", doc.get("tol", 1e-10))
    if tol <= 0.0:
        raise SchemaError("tol must be positive")
    tail_fraction = _require_number(doc, "tail_fraction", doc.get("tail_fraction", 0.5))
    if not 0.0 < tail_fraction <= 1.0:
        raise SchemaError("tail_fraction must lie in (0, 1]")

    a = _parse_expr(doc["a"], "t", "a")
    b = _parse_expr(doc["b"], "t", "b")
    impulse = _parse_impulse(doc["impulse"])

    try:
        spec = ProblemSpec(
            a=a, b=b, direction=direction, k=k, impulse=impulse,
            initial_window=tuple(window), horizon=horizon, n0=n0,
            t_start=float(n0),
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc

    # standing hypothesis: every realized jump factor is finite and nonzero
    for n in range(n0, horizon + 1):
        try:
            spec.impulse.factor(n)
        except ZeroImpulseFactor as exc:
            raise SchemaError(str(exc)) from exc
    return ProblemFile(spec, tol, tail_fraction)


def load_problem(path) -> ProblemFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read problem file: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return validate_problem(doc)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


# -- subcommands --------------------------------------------------------------

def cmd_coeffs(pf: ProblemFile, out: Optional[str]) -> int:
    ds = build_discrete_system(pf.spec, pf.tol)
    stream, close = _open_out(out)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["n", "a_n", "b_n", "alpha_n", "q_n"])
        for n in range(ds.n0, ds.horizon):
            q = _fmt(ds.q(n)) if n in ds.q_indices() else ""
            writer.writerow([n, _fmt(ds.a(n)), _fmt(ds.b(n)), _fmt(ds.alpha(n)), q])
    finally:
        if close:
            stream.close()
    return EXIT_OK


def _stats_dict(r: crit.CriterionReport) -> dict:
    doc = {
        "criterion_id": r.criterion_id,
        "threshold": r.threshold,
        "statistic": r.statistic.statistic,
        "kind": r.statistic.kind.value,
        "window": list(r.statistic.window),
        "margin": r.margin,
        "convergence_flag": r.statistic.convergence_flag,
        "precondition_violations": [[n, reason] for n, reason in r.violations],
        "verdict": r.verdict.value,
    }
    if r.note:
        doc["note"] = r.note
    return doc


def cmd_analyze(pf: ProblemFile, out: Optional[str]) -> int:
    ds = build_discrete_system(pf.spec, pf.tol)
    reports = crit.evaluate_all(ds, pf.tail_fraction)
    doc = {
        "direction": pf.spec.direction.value,
        "k": pf.spec.k,
        "tail_fraction": pf.tail_fraction,
        "criteria": [_stats_dict(r) for r in reports],
        "overall_verdict": crit.synthesize_verdict(reports),
    }
    stream, close = _open_out(out)
    try:
        json.dump(doc, stream, indent=2, sort_keys=True)
        stream.write("\n")
    finally:
        if close:
            stream.close()
    return EXIT_OK


def _verdict_dict(v) -> dict:
    doc = {"verdict": v.verdict.value, "tail_window": list(v.tail_window)}
    if hasattr(v, "last_sign_change"):
        doc["last_sign_change"] = v.last_sign_change
    return doc


def cmd_simulate(pf: ProblemFile, out: Optional[str], samples: int) -> int:
    ds = build_discrete_system(pf.spec, pf.tol)
    sol = diffeq.solve(ds, pf.spec.initial_window)
    traj = trajectory.reconstruct(pf.spec, ds, sol, samples, pf.tol)
    prefix = out if out else "trajectory"

    with open(f"{prefix}.trajectory.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "z"])
        for t, z in traj.samples:
            writer.writerow([_fmt(t), _fmt(z)])
    with open(f"{prefix}.nodes.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "z_left", "z_right", "jump_factor"])
        for rec in traj.nodes:
            writer.writerow([rec.n, _fmt(rec.z_left), _fmt(rec.z_right),
                             _fmt(rec.jump_factor)])

    discrete = diffeq.discrete_oscillation_check(sol, pf.tail_fraction)
    continuous = trajectory.continuous_oscillation_check(traj, pf.tail_fraction)
    doc = {
        "discrete": _verdict_dict(discrete),
        "continuous": _verdict_dict(continuous),
        "solution_truncated_at": sol.truncated_at,
    }
    with open(f"{prefix}.verdicts.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _check_instance(pf: ProblemFile, samples: int):
    """Run every per-instance invariant; yields (name, ok, detail)."""
    spec = pf.spec
    try:
        ds = build_discrete_system(spec, pf.tol)
        yield ("dual_route_q_audit", True, f"{len(ds.q_seq)} indices compared")
    except DiagnosticMismatch as exc:
        yield ("dual_route_q_audit", False, str(exc))
        return

    # telescoping: alpha_{n+1} * prod(a_j) = 1
    worst = 0.0
    prod = 1.0
    for n in range(ds.n0, min(ds.horizon, ds.n0 + 51)):
        prod *= ds.a(n)
        worst = max(worst, abs(ds.alpha(n + 1) * prod - 1.0))
    yield ("alpha_telescoping", worst <= 1e-12, f"max deviation {worst:.3e}")

    sol = diffeq.solve(ds, spec.initial_window)
    k = spec.k
    if spec.direction is Direction.DELAYED:
        recursion_range = range(ds.n0, min(ds.horizon, sol.n_hi))
        dev = lambda n: n - k
    else:
        # the sweep enforces the relation from n0+1 on (n0 for k = 1)
        start = ds.n0 if k == 1 else ds.n0 + 1
        recursion_range = range(start, min(ds.horizon - k + 1, sol.n_hi - k + 1))
        dev = lambda n: n + k
    worst = 0.0
    for n in recursion_range:
        lhs = sol.value(n + 1)
        rhs = ds.a(n) * sol.value(n) + ds.b(n) * sol.value(dev(n))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    yield ("recursion_residual", worst <= 1e-9, f"max relative residual {worst:.3e}")

    y = diffeq.reduce_to_y(ds, sol)
    y_of = lambda n: y[n - ds.n0]
    tail_scale = max(abs(v) for v in y) if y else 1.0
    worst = 0.0
    for n in recursion_range:
        if n in ds.q_indices() and dev(n) - ds.n0 < len(y):
            worst = max(worst, abs((y_of(n + 1) - y_of(n)) - ds.q(n) * y_of(dev(n))))
    ok = worst <= 1e-8 * max(1e-300, tail_scale)
    yield ("reduced_form_residual", ok, f"max residual {worst:.3e} vs scale {tail_scale:.3e}")

    traj = trajectory.reconstruct(spec, ds, sol, samples, pf.tol)
    worst = 0.0
    for rec in traj.nodes:
        if math.isfinite(rec.z_right):
            gap = abs(rec.jump_factor * rec.z_left - rec.z_right)
            worst = max(worst, gap / max(1e-300, abs(rec.z_right), abs(rec.z_left)))
    yield ("node_consistency", worst <= 1e-7, f"max relative gap {worst:.3e}")

    if spec.impulse.kind == "none":
        gap = trajectory.max_node_discontinuity(traj)
        yield ("continuity_without_impulses", gap <= 1e-8, f"max node gap {gap:.3e}")

    discrete = diffeq.discrete_oscillation_check(sol, pf.tail_fraction)
    continuous = trajectory.continuous_oscillation_check(traj, pf.tail_fraction)
    if discrete.verdict is diffeq.Verdict.OSCILLATORY:
        ok = continuous.verdict is diffeq.Verdict.OSCILLATORY
        yield ("discrete_to_continuous_transfer", ok,
               f"discrete {discrete.verdict.value}, continuous {continuous.verdict.value}")


def cmd_check(pf: ProblemFile, samples: int) -> int:
    failed = False
    for name, ok, detail in _check_instance(pf, samples):
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: {detail}")
        if not ok:
            failed = True
    return EXIT_INVARIANT if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idepca",
        description="Oscillation analysis of linear impulsive systems with "
                    "piecewise constant deviating arguments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("coeffs", "write the coefficient table as CSV"),
        ("analyze", "evaluate oscillation criteria and write a JSON report"),
        ("simulate", "solve and reconstruct the trajectory"),
        ("check", "run all per-instance consistency invariants"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("problem", help="path to a JSON problem file")
        p.add_argument("--out", help="output path (coeffs/analyze) or prefix (simulate)")
        p.add_argument("--tol", type=float, help="override quadrature tolerance")
        p.add_argument("--tail", type=float, help="override tail fraction")
        p.add_argument("--samples", type=int, default=32,
                       help="trajectory samples per unit interval")
        p.add_argument("--horizon", type=int, help="override the index horizon")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        pf = load_problem(args.problem)
        if args.tol is not None:
            if args.tol <= 0:
                raise SchemaError("tol must be positive")
            pf = ProblemFile(pf.spec, args.tol, pf.tail_fraction)
        if args.tail is not None:
            if not 0.0 < args.tail <= 1.0:
                raise SchemaError("tail fraction must lie in (0, 1]")
            pf = ProblemFile(pf.spec, pf.tol, args.tail)
        if args.horizon is not None:
            try:
                spec = ProblemSpec(
                    a=pf.spec.a, b=pf.spec.b, direction=pf.spec.direction,
                    k=pf.spec.k, impulse=pf.spec.impulse,
                    initial_window=pf.spec.initial_window,
                    horizon=args.horizon, n0=pf.spec.n0, t_start=pf.spec.t_start,
                )
            except ValueError as exc:
                raise SchemaError(str(exc)) from exc
            pf = ProblemFile(spec, pf.tol, pf.tail_fraction)

        if args.command == "coeffs":
            return cmd_coeffs(pf, args.out)
        if args.command == "analyze":
            return cmd_analyze(pf, args.out)
        if args.command == "simulate":
            out = args.out or Path(args.problem).stem
            return cmd_simulate(pf, out, args.samples)
        return cmd_check(pf, args.samples)
    except (SchemaError, ZeroImpulseFactor) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
