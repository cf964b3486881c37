"""Command-line entry point.

Exit codes: 0 when every criterion passes, 1 when one fails, 2 for usage or
configuration errors.  Reports are JSON (stable key order, no timings);
``--csv`` additionally writes the per-point records.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .adapted import NormalizationError, adapted_chart, verify_adapted
from .charts import ChartError
from .disc import DiscConvergenceError, DomainEscapeError, hessian_via_disc, solve_disc
from .expr import DomainError
from .levi import LEVI_FACTOR, _levi_matrices, is_strictly_psh, levi_value
from .regmax import regmax_eval, regmax_grad
from .scenarios import ScenarioError, builtin_names, load_scenario
from .smoothing import HypothesisViolation, VerificationReport, estimate_report, verify_hessian_bound

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(report: VerificationReport, args):
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"{report.name}: {'PASS' if report.passed else 'FAIL'} -> {args.out}")
    else:
        sys.stdout.write(text)
    if getattr(args, "csv", None):
        with open(args.csv, "w") as fh:
            fh.write(report.to_csv())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_regmax_eval(args):
    t = np.array(args.t)
    theta = np.array(args.theta)
    if t.size != theta.size:
        raise UsageError(f"--t has {t.size} values but --theta has {theta.size}")
    try:
        value = float(regmax_eval(t, theta))
        grad = regmax_grad(t, theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ok = t.max() - 1e-9 <= value <= (t + theta).max() + 1e-9
    report = VerificationReport(
        "regmax",
        {"bounds": bool(ok)},
        {"t": t.tolist(), "theta": theta.tolist(), "value": value, "gradient": grad.tolist()},
    )
    print(repr(value))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_levi_check(args):
    sc = load_scenario(args.scenario)
    mode = sc.levi["mode"]
    records, criteria, summary = [], {}, {}
    for j, u in enumerate(sc.fields):
        key = f"u{j + 1}"
        if mode == "psh":
            margin = float(sc.levi.get("margin", 0.0))
            rep = is_strictly_psh(sc.structure, u, sc.grid, sc.metric, margin)
            criteria[f"{key}_psh"] = rep.passed
            summary[key] = {"min_eigen": rep.min_eigen, "worst_point": rep.worst_point, "margin": margin}
            records += [dict(field=key, **r) for r in rep.records]
        else:
            tol = sc.tolerances["levi"]
            M = _levi_matrices(sc.structure, u, sc.grid)
            size = np.max(np.abs(np.linalg.eigvalsh(M)), axis=-1)
            worst = int(np.argmax(size))
            criteria[f"{key}_vanish"] = bool(size[worst] <= tol)
            summary[key] = {"max_abs_levi": float(size[worst]), "worst_point": sc.grid[worst].tolist(), "tol": tol}
            records += [
                {"field": key, "point": p.tolist(), "max_abs_levi": float(s), "pass": bool(s <= tol)}
                for p, s in zip(sc.grid, size)
            ]
    report = VerificationReport(sc.name, criteria, summary, _point_first(records), {"mode": mode, "seed": sc.seed})
    return _emit(report, args)


def _point_first(records):
    return [{"point": r["point"], **{k: v for k, v in r.items() if k != "point"}} for r in records]


def _point(sc):
    return np.zeros(2 * sc.n) if sc.point is None else sc.point


def _vector(sc):
    if sc.vector is not None:
        return sc.vector
    v = np.zeros(2 * sc.n)
    v[0] = 1.0
    return v


def cmd_adapt(args):
    sc = load_scenario(args.scenario)
    p = _point(sc)
    chart, _ = adapted_chart(sc.structure, p)
    rep = verify_adapted(sc.structure, chart, sc.fields[0])
    tol_s = sc.tolerances["adapted_structure"]
    tol_l = sc.tolerances["adapted_levi"]
    criteria = {
        "a0": rep.a0_residual <= tol_s,
        "dza": rep.dza_residual <= tol_s,
        "levi_identity": rep.levi_identity_residual <= tol_l,
    }
    summary = {
        "point": p.tolist(),
        "a0_residual": rep.a0_residual,
        "dza_residual": rep.dza_residual,
        "levi_identity_residual": rep.levi_identity_residual,
        "levi_matrix": rep.levi_matrix,
        "hermitian_form": rep.hermitian_form,
        "chart": chart.to_json(),
    }
    return _emit(VerificationReport(sc.name, criteria, summary, [], {"seed": sc.seed}), args)


def cmd_disc_solve(args):
    sc = load_scenario(args.scenario)
    p, V = _point(sc), _vector(sc)
    params = dict(sc.disc)
    tol = sc.tolerances["disc"]
    disc = solve_disc(sc.structure, p, V, tol=tol, **params)
    u = sc.fields[0]
    via_disc = float(hessian_via_disc(sc.structure, u, p, V, tol=tol, **params))
    direct = float(levi_value(sc.structure, u, p, V))
    diff = abs(via_disc - direct)
    agree_tol = sc.tolerances["disc_agreement"]
    criteria = {
        "cr_residual": disc.cr_residual <= tol,
        "hessian_agreement": diff <= agree_tol * max(1.0, abs(direct)),
    }
    summary = {
        "point": p.tolist(),
        "vector": V.tolist(),
        "iterations": disc.iterations,
        "increment": disc.increment,
        "cr_residual": disc.cr_residual,
        "hessian_via_disc": via_disc,
        "levi_value": direct,
        "difference": diff,
        "levi_factor": LEVI_FACTOR,
    }
    report = VerificationReport(sc.name, criteria, summary, [], {"grid": params, "seed": sc.seed})
    code = _emit(report, argparse.Namespace(out=args.out, csv=None))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(",".join(disc.header()) + "\n")
            for row in disc.rows():
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return code


def cmd_smooth_estimate(args):
    sc = load_scenario(args.scenario)
    if sc.theta is None:
        raise ScenarioError("epsilon", "smooth estimate needs theta or epsilon")
    rep = estimate_report(sc.fields, sc.theta, sc.grid, sc.tolerances["estimate"], name=sc.name)
    rep.meta["seed"] = sc.seed
    return _emit(rep, args)


def cmd_smooth_hessian(args):
    sc = load_scenario(args.scenario)
    try:
        rep = verify_hessian_bound(sc)
    except HypothesisViolation as exc:
        rep = VerificationReport(
            sc.name,
            {"hypothesis": False},
            {
                "status": "hypothesis violated: theorem not applicable",
                "field": f"u{exc.index + 1}",
                "point": exc.point,
                "min_levi_eigen": exc.eigen,
                "alpha": exc.alpha,
                "margin": exc.margin,
            },
            [],
            {"seed": sc.seed},
        )
        print(str(exc), file=sys.stderr)
    return _emit(rep, args)


def cmd_scenario_list(args):
    for name in builtin_names():
        sc = load_scenario(f"builtin:{name}")
        print(f"builtin:{name}\t{sc.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levimax", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_cmd(p, func, csv=True):
        p.add_argument("--scenario", required=True, help="JSON file or builtin:<name>")
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        if csv:
            p.add_argument("--csv", help="also write per-point records as CSV")
        p.set_defaults(func=func)

    rm = sub.add_parser("regmax", help="regularized maximum").add_subparsers(dest="action", required=True)
    ev = rm.add_parser("eval", help="evaluate M_theta(t)")
    ev.add_argument("--t", type=_floats, required=True)
    ev.add_argument("--theta", type=_floats, required=True)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_regmax_eval)

    lv = sub.add_parser("levi", help="Levi form checks").add_subparsers(dest="action", required=True)
    scenario_cmd(lv.add_parser("check", help="psh or vanishing check on the scenario grid"), cmd_levi_check)

    scenario_cmd(sub.add_parser("adapt", help="adapted coordinates at the scenario point"), cmd_adapt, csv=False)

    dc = sub.add_parser("disc", help="J-holomorphic discs").add_subparsers(dest="action", required=True)
    scenario_cmd(dc.add_parser("solve", help="solve a disc and compare Hessians"), cmd_disc_solve)

    sm = sub.add_parser("smooth", help="regularized-max smoothing").add_subparsers(dest="action", required=True)
    scenario_cmd(sm.add_parser("estimate", help="uniform estimate on the grid"), cmd_smooth_estimate)
    scenario_cmd(sm.add_parser("hessian", help="Levi lower bound of the smoothed max"), cmd_smooth_hessian)

    sc = sub.add_parser("scenario", help="scenario registry").add_subparsers(dest="action", required=True)
    sc.add_parser("list", help="list builtin scenarios").set_defaults(func=cmd_scenario_list)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ScenarioError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DiscConvergenceError, DomainEscapeError, NormalizationError, ChartError, DomainError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
