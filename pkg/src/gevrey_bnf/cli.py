"""Command-line front end: ``gevrey-bnf {compute,diagnose,verify,checks}``.

Exit codes: 0 success, 1 a reported inequality failed, 2 bad or missing
input data, 3 resonant frequency, 4 flatness slope below the expected order.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .canonical import CanonicalMap, flatness_scan
from .checks import SUITES, run_suites
from .diagnostics import (
    GevreyParams,
    b_envelope,
    fit_constants,
    log_remainder_bound,
    norm_profile,
    optimal_truncation,
    profiles_to_csv,
    stability_time_estimate,
    verify_estimate_lemmas,
)
from .engine import bnf_run
from .errors import BNFError, DegenerateProfile, MissingData, ResonantMode, SchemaError
from .flow import IntegratorConfig, escape_table_csv, escape_times
from .fourier import wiener_norm
from .problems import dumps, load_problem, load_result, result_to_json, write_json

EXIT_OK, EXIT_FAIL, EXIT_DATA, EXIT_RESONANT, EXIT_SLOPE = 0, 1, 2, 3, 4
DEFAULT_S_GRID = (0.0, 1.0, 2.0, 3.0, 4.0)
SLOPE_TOLERANCE = 0.2

log = logging.getLogger("gevrey_bnf")


def _fmt(x) -> str:
    return "inf" if x == math.inf else f"{x:.17g}"


def _summary(problem, result) -> str:
    lines = [f"problem: {problem.name or '(unnamed)'}",
             f"dimension: {result.dim}",
             f"omega: {' '.join(_fmt(w) for w in result.omega)}",
             f"requested order: {result.order}",
             f"completed order: {result.completed_order}"]
    if result.error:
        lines.append(f"stopped early: {result.error}")
    lines += ["", "normal form R_m(I) = sum c_alpha I^alpha", "m\talpha\tcoefficient"]
    for part in result.normal_form:
        for alpha, s in part.items():
            lines.append(f"{part.degree}\t{list(alpha)}\t{_fmt(float(complex(s[(0,) * result.dim]).real))}")
    lines += ["", "generating function", "m\tn_alpha\tn_modes\tS_0"]
    g_terms = 0
    for m in sorted(result.g.parts):
        part = result.g.parts[m]
        g_terms += len(part)
        modes = sum(len(s) for _, s in part.items())
        s0 = math.fsum(wiener_norm(s, 0).value for _, s in part.items())
        lines.append(f"{m}\t{len(part)}\t{modes}\t{_fmt(s0)}")
    if not g_terms:
        lines.append("(empty: the input is already in normal form)")
    lines += ["", "small divisors", "m\tmin_divisor\ttruncated_mass"]
    for m in sorted(result.divisor_log):
        lines.append(f"{m}\t{_fmt(result.divisor_log[m])}\t{_fmt(result.truncation_log.get(m, 0.0))}")
    return "\n".join(lines) + "\n"


def cmd_compute(args) -> int:
    try:
        problem = load_problem(args.problem)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ResonantMode as exc:
        print(f"error: resonant frequency: {exc}", file=sys.stderr)
        return EXIT_RESONANT
    order = args.order or problem.order
    retain = True if args.retain_b else None
    result = bnf_run(problem.spec, order, retain_B=retain, extended=args.extended)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "result.json", result_to_json(result, problem.raw))
    (out / "summary.txt").write_text(_summary(problem, result))
    if result.error:
        print(f"error: {result.error}", file=sys.stderr)
        return EXIT_RESONANT
    return EXIT_OK


def _params_from(problem_doc, args) -> GevreyParams:
    doc = problem_doc or {}
    n = doc.get("dim", 1)
    rho = args.rho if args.rho is not None else float(doc.get("rho", 1.0))
    tau = args.tau if args.tau is not None else float(doc.get("tau", max(1.0, n - 1)))
    return GevreyParams(rho, tau, float(doc.get("kappa", 1.0)), float(doc.get("L0", 1.0)),
                        float(doc.get("L1", 1.0)), float(doc.get("L2", 1.0)))


def cmd_diagnose(args) -> int:
    try:
        result, problem_doc = load_result(args.result)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if result.B_parts is None:
        print("error: result does not retain B_m; rerun compute with --retain-b", file=sys.stderr)
        return EXIT_DATA
    params = _params_from(problem_doc, args)
    s_grid = tuple(args.s_grid)
    orders = sorted(m for m in result.g.parts if m >= 2)
    g_profiles = [norm_profile(result.g.parts[m], s_grid) for m in orders]
    b_profiles = [norm_profile(result.B_parts[m], s_grid) for m in sorted(result.B_parts)]
    try:
        fit = fit_constants(g_profiles, params)
    except DegenerateProfile as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "profiles.csv").write_text(
        profiles_to_csv(g_profiles, "g") + profiles_to_csv(b_profiles, "B").split("\n", 1)[1])
    b0 = b_envelope(b_profiles, params, fit.C1, fit.C2)
    fitted = params.with_constants(fit.C1, fit.C2)
    write_json(out / "constants.json", {"params": fitted.as_dict(), "fit": fit.as_dict(),
                                        "B0": b0, "s_grid": list(s_grid)})

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["I", "m_star", "log_remainder", "log_T", "log10_T"])
    for I in np.geomspace(1e-8, 1e-1, 8):
        st = stability_time_estimate(float(I), fitted)
        w.writerow([_fmt(float(I)), optimal_truncation(float(I), fitted),
                    _fmt(log_remainder_bound(float(I), (0,) * result.dim, (0,) * result.dim, 1.0, fitted)),
                    _fmt(st.log_T), _fmt(st.log10_T)])
    (out / "truncation.csv").write_text(buf.getvalue())

    reports = {"envelope": {"violations": fit.violations, "entries": fit.n_entries,
                            "passed": fit.violations == 0}}
    if len(orders) >= 2:
        try:
            reports["estimate_lemmas"] = verify_estimate_lemmas(result, fitted, args.samples,
                                                                args.seed, s_grid)
        except (ValueError, MissingData) as exc:
            reports["estimate_lemmas"] = {"skipped": str(exc), "passed": True}
    write_json(out / "inequalities.json", reports)
    ok = all(r.get("passed", True) for r in reports.values())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        problem = load_problem(args.problem)
        result, _ = load_result(args.result)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ResonantMode as exc:
        print(f"error: resonant frequency: {exc}", file=sys.stderr)
        return EXIT_RESONANT
    spec = problem.spec
    if result.dim != spec.dim or np.max(np.abs(np.subtract(result.omega, spec.omega.omega))) > 0:
        print("error: result was computed for a different problem", file=sys.stderr)
        return EXIT_DATA
    radii = args.radii or list(np.geomspace(1e-3, 1e-2, 8))
    cmap = CanonicalMap(result.g, domain_radius=max(max(radii), spec.domain_radius))
    table = flatness_scan(spec, result, radii, args.samples, args.seed, cmap)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "flatness.csv").write_text(table.to_csv())

    esc_radii = [r for r in args.escape_radii if r <= spec.domain_radius]
    skipped = [r for r in args.escape_radii if r > spec.domain_radius]
    for r in skipped:
        log.warning("escape radius %g exceeds the domain radius %g; skipped", r, spec.domain_radius)
    config = IntegratorConfig(dt=args.dt, scheme=args.scheme)
    results = escape_times(spec, esc_radii, args.band, args.horizon, config, args.workers)
    (out / "escape.csv").write_text(escape_table_csv(results))

    M = result.completed_order
    if table.slope is None:
        print("flatness residuals vanish at every radius; slope fit skipped")
        return EXIT_OK
    print(f"flatness slope {table.slope:.4f} (expected {M + 1})")
    if table.slope < M + 1 - SLOPE_TOLERANCE:
        print(f"error: slope {table.slope:.4f} below {M + 1 - SLOPE_TOLERANCE}", file=sys.stderr)
        return EXIT_SLOPE
    return EXIT_OK


def cmd_checks(args) -> int:
    report = run_suites(args.suite, args.seed)
    passed = all(item["passed"] for items in report.values() for item in items)
    text = dumps({"suites": report, "passed": passed})
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gevrey-bnf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=None,
                        help="thread count (default: GEVREY_BNF_WORKERS or 1)")

    c = sub.add_parser("compute", help="run the normal-form recursion")
    c.add_argument("problem")
    c.add_argument("--order", "-M", type=int, default=None)
    c.add_argument("--out", default="out")
    c.add_argument("--retain-b", action="store_true", help="keep B_m for every order")
    c.add_argument("--extended", action="store_true", help="128-bit coefficient arithmetic")
    common(c)
    c.set_defaults(func=cmd_compute)

    d = sub.add_parser("diagnose", help="growth profiles and fitted constants")
    d.add_argument("result")
    d.add_argument("--s-grid", type=float, nargs="+", default=list(DEFAULT_S_GRID))
    d.add_argument("--out", default="out")
    d.add_argument("--samples", type=int, default=32, help="sampled tuples per product length")
    d.add_argument("--rho", type=float, default=None)
    d.add_argument("--tau", type=float, default=None)
    common(d)
    d.set_defaults(func=cmd_diagnose)

    v = sub.add_parser("verify", help="flatness scan and escape times")
    v.add_argument("problem")
    v.add_argument("result")
    v.add_argument("--radii", type=float, nargs="+", default=None)
    v.add_argument("--samples", type=int, default=64)
    v.add_argument("--horizon", type=float, default=1e3, help="escape-time cap")
    v.add_argument("--escape-radii", type=float, nargs="*", default=[0.2, 0.1, 0.05])
    v.add_argument("--band", type=float, default=2.0)
    v.add_argument("--dt", type=float, default=1e-2)
    v.add_argument("--scheme", default="midpoint-triple-jump",
                   choices=["implicit-midpoint", "midpoint-triple-jump"])
    v.add_argument("--out", default="out")
    common(v)
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("checks", help="inequality suites")
    k.add_argument("--suite", choices=sorted(SUITES) + ["all"], default="all")
    k.add_argument("--out", default=None)
    common(k)
    k.set_defaults(func=cmd_checks)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ResonantMode as exc:
        print(f"error: resonant frequency: {exc}", file=sys.stderr)
        return EXIT_RESONANT
    except BNFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
