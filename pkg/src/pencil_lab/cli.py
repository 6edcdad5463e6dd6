"""Command-line front end: validate problem files, run checks and
verification suites, emport reports.

Exit codes: 0 pass, 1 condition or estimate failure, 2 input error,
3 numerical indeterminacy.  Report files embed a run manifest; payloads are
deterministic (fixed summation order, no wall-clock fields), so identical
inputs and configuration produce byte-identical payloads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_INDETERMINATE = 3


def _apply_thread_cap() -> None:
    cap = os.environ.get("PENCIL_LAB_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


class SchemaError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _expect(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise SchemaError(field, message)


def _parse_terms(raw, field: str, n: int):
    from .symbols import MultiPoly

    _expect(isinstance(raw, list), field, "expected a list of terms")
    terms = {}
    for i, item in enumerate(raw):
        loc = f"{field}[{i}]"
        _expect(isinstance(item, dict), loc, "expected an object")
        alpha = item.get("alpha")
        _expect(
            isinstance(alpha, list)
            and len(alpha) == n
            and all(isinstance(a, int) and a >= 0 for a in alpha),
            f"{loc}.alpha",
            f"expected a list of {n} nonnegative ints",
        )
        re_part = item.get("re", 0.0)
        im_part = item.get("im", 0.0)
        _expect(
            isinstance(re_part, (int, float)) and isinstance(im_part, (int, float)),
            loc,
            "re/im must be numbers",
        )
        key = tuple(alpha)
        terms[key] = terms.get(key, 0.0) + complex(re_part, im_part)
    return MultiPoly(n, terms)


def load_problem(path: str):
    """Parse and structurally validate a problem file.

    Returns (pencil-or-epsilon-pencil, boundary set, (r, s), form, options).
    Schema violations raise SchemaError with a field path; construction-level
    rule violations raise the library's input error.
    """
    from .symbols import BoundarySet, EpsilonPencil, OperatorPencil

    with open(path) as fh:
        doc = json.load(fh)
    _expect(isinstance(doc, dict), "$", "problem file must be a JSON object")
    for key in ("n", "m", "mu"):
        _expect(isinstance(doc.get(key), int), key, "expected an integer")
    n, m, mu = doc["n"], doc["m"], doc["mu"]
    _expect(n >= 2, "n", "dimension must be >= 2")
    form = doc.get("form", "lambda")
    _expect(form in ("lambda", "epsilon"), "form", "must be 'lambda' or 'epsilon'")

    parts_raw = doc.get("parts")
    _expect(isinstance(parts_raw, dict) and parts_raw, "parts", "expected a nonempty object")
    parts = {}
    for key, val in parts_raw.items():
        _expect(key.lstrip("-").isdigit(), f"parts.{key}", "keys must be integer orders")
        parts[int(key)] = _parse_terms(val, f"parts.{key}", n)

    braw = doc.get("boundary")
    _expect(isinstance(braw, list) and braw, "boundary", "expected a nonempty list")
    ops = []
    for i, item in enumerate(braw):
        loc = f"boundary[{i}]"
        _expect(isinstance(item, dict), loc, "expected an object")
        _expect(isinstance(item.get("order"), int), f"{loc}.order", "expected an integer")
        poly = _parse_terms(item.get("terms"), f"{loc}.terms", n)
        ops.append((poly, item["order"]))

    idx = doc.get("indices", {})
    _expect(isinstance(idx, dict), "indices", "expected an object")
    r = idx.get("r")
    s = idx.get("s")
    _expect(isinstance(r, int) and isinstance(s, int), "indices", "r and s must be integers")

    options = doc.get("options", {})
    _expect(isinstance(options, dict), "options", "expected an object")

    if form == "epsilon":
        pencil = EpsilonPencil(n, m, mu, parts)
    else:
        pencil = OperatorPencil(n, m, mu, parts)
    boundary = BoundarySet(tuple(ops))
    return pencil, boundary, (r, s), form, options


def _manifest(command: str, config: dict, started: float, seed: int = 0) -> dict:
    import numpy

    from . import __version__

    payload = json.dumps(config, sort_keys=True)
    return {
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(payload.encode()).hexdigest(),
        "seed": seed,
        "versions": {
            "pencil_lab": __version__,
            "numpy": numpy.__version__,
            "python": "%d.%d.%d" % sys.version_info[:3],
        },
        "timing_s": round(time.monotonic() - started, 6),
    }


def _emit(doc: dict, out_path: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _lambda_pencil(pencil, form: str):
    from .symbols import from_epsilon

    return from_epsilon(pencil) if form == "epsilon" else pencil


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    from .symbols import validate_problem

    started = time.monotonic()
    pencil, boundary, (r, s), form, _ = load_problem(args.path)
    P = _lambda_pencil(pencil, form)
    report = validate_problem(P, boundary, r, s)
    payload = report.to_jsonable()
    doc = {
        "manifest": _manifest("validate", {"path": os.path.basename(args.path)}, started),
        "payload": payload,
    }
    _emit(doc, args.out)
    return EXIT_PASS if report.mandatory_ok else EXIT_FAIL


def _check_config(args, options: dict):
    from .elliptic_check import CheckConfig

    cfg = CheckConfig()
    merged = dict(options.get("check", {}))
    if getattr(args, "grid", None):
        merged["grid_n"] = args.grid
    if getattr(args, "pole_cutoff", None):
        merged["pole_cutoff"] = args.pole_cutoff
    allowed = {
        "grid_n",
        "angular_grid",
        "psi_grid",
        "pole_cutoff",
        "margin_floor",
        "det_floor",
        "refine",
    }
    bad = set(merged) - allowed
    if bad:
        raise SchemaError("options.check", f"unknown keys {sorted(bad)}")
    from dataclasses import replace

    return replace(cfg, **merged)


def _run_check(args):
    from .elliptic_check import check_epsilon, full_check
    from .symbols import validate_problem

    pencil, boundary, (r, s), form, options = load_problem(args.path)
    P = _lambda_pencil(pencil, form)
    validation = validate_problem(P, boundary, r, s)
    if not validation.structural_ok:
        failed = ", ".join(rule.rule for rule in validation.failures())
        raise SchemaError("problem", f"structural validation failed: {failed}")
    cfg = _check_config(args, options)
    if form == "epsilon":
        report = check_epsilon(pencil, boundary, cfg)
    else:
        report = full_check(P, boundary, cfg)
    return report, P, boundary, (r, s), form, options


def cmd_check(args) -> int:
    started = time.monotonic()
    report, *_ = _run_check(args)
    payload = report.to_jsonable()
    if args.json or args.out:
        doc = {
            "manifest": _manifest(
                "check",
                {
                    "path": os.path.basename(args.path),
                    "config": report.config.to_jsonable(),
                },
                started,
            ),
            "payload": payload,
        }
        _emit(doc, args.out)
    else:
        print(report.format_text())
    if report.indeterminate:
        return EXIT_INDETERMINATE
    return EXIT_PASS if report.overall else EXIT_FAIL


def cmd_solve_model(args) -> int:
    from .halfline import (
        boundary_values,
        deriv_l2_norm,
        fundamental_solution,
        ode_residual,
    )
    from .errors import InputError

    started = time.monotonic()
    pencil, boundary, (r, s), form, _ = load_problem(args.path)
    P = _lambda_pencil(pencil, form)
    xi = [float(x) for x in args.xi.split(",")]
    if len(xi) != P.n - 1:
        raise SchemaError("--xi", f"expected {P.n - 1} components")
    if not (1 <= args.j <= P.m):
        raise SchemaError("--j", f"index must lie in 1..{P.m}")
    w = fundamental_solution(P, boundary, xi, args.lam, args.j)
    import numpy as np

    bvals = boundary_values(boundary, w)
    target = np.zeros(P.m)
    target[args.j - 1] = 1.0
    payload = {
        "xi_prime": xi,
        "lambda": args.lam,
        "j": args.j,
        "terms": [
            {
                "root": {"re": root.real, "im": root.imag},
                "coefficients": [{"re": c.real, "im": c.imag} for c in coeffs],
            }
            for root, coeffs in w.terms
        ],
        "boundary_values": [{"re": v.real, "im": v.imag} for v in bvals],
        "boundary_residual": float(np.max(np.abs(bvals - target))),
        "ode_residual": ode_residual(P, w),
        "condition_number": w.cond,
        "derivative_norms": {str(l): deriv_l2_norm(w, l) for l in range(r + 1)},
    }
    doc = {
        "manifest": _manifest(
            "solve-model",
            {"path": os.path.basename(args.path), "xi": xi, "lambda": args.lam, "j": args.j},
            started,
        ),
        "payload": payload,
    }
    _emit(doc, args.out)
    return EXIT_PASS


def _parse_ladder(text: str, field: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise SchemaError(field, f"bad ladder: {exc}") from exc


def cmd_verify(args) -> int:
    from .elliptic_check import interior_margin
    from .estimate_lab import (
        BoundaryDataSpec,
        apriori_ratio,
        eps_apriori,
        gaussian_profile,
        parametrix_p0,
        ring_profile,
        wholespace_ratio,
    )
    from .halfline import estimate_table
    from .newton import WeightSpec
    from .symbols import to_epsilon, validate_problem

    started = time.monotonic()
    report, P, boundary, (r, s), form, options = _run_check(args)
    validation = validate_problem(P, boundary, r, s)
    w = WeightSpec(float(r), float(s), 1.0)
    suite = args.suite
    ladder = _parse_ladder(args.ladder, "--ladder") if args.ladder else None

    growth_note = None
    if suite == "ode":
        if not report.overall:
            print(report.format_text())
            return EXIT_FAIL
        lam_ladder = ladder or [0.0, 1.0, 10.0, 100.0, 1000.0]
        table = estimate_table(P, boundary, angular_grid=8, lambda_ladder=lam_ladder, l_max=max(4, r))
        by_lam = table.max_ratio_by_lambda()
        tail = sorted(by_lam)[-2:]
        stable = (
            len(tail) == 2
            and abs(by_lam[tail[1]] - by_lam[tail[0]]) <= 0.1 * by_lam[tail[0]]
        )
        passed = stable and all(
            np.isfinite(row.ratio) for row in table.rows
        )
    elif suite in ("apriori", "eps"):
        if not validation.mandatory_ok:
            raise SchemaError("indices", "index window fails; estimate suite undefined")
        interior_ok = report.condition("interior_lower_bound").passed
        solvable = report.condition("boundary_independence").passed
        if not interior_ok:
            print(report.format_text())
            return EXIT_FAIL
        data = BoundaryDataSpec(
            tuple(ring_profile(1.0, 0.5) for _ in range(P.m)), "ring-data"
        )
        if suite == "apriori":
            lam_ladder = ladder or [1.0, 10.0, 100.0, 1000.0]
            table = apriori_ratio(
                P, boundary, w, data, lam_ladder, n_radial=args.n_radial,
                n_angular=args.n_angular,
            )
        else:
            eps_ladder = ladder or [1.0, 0.1, 0.01]
            table = eps_apriori(
                to_epsilon(P) if form == "lambda" else to_epsilon(P),
                boundary,
                w,
                data,
                eps_ladder,
                n_radial=args.n_radial,
                n_angular=args.n_angular,
            )
        passed = table.passed and report.overall
        if not table.passed and len(table.rows) >= 2:
            first, last = table.rows[0], table.rows[-1]
            if last.ratio > 2.0 * first.ratio and table.param_name == "lambda":
                growth_note = (
                    f"ratio grows along the ladder: {first.ratio:.4g} at "
                    f"{table.param_name}={first.param:g} vs {last.ratio:.4g} at "
                    f"{table.param_name}={last.param:g} (no uniform constant)"
                )
    elif suite == "wholespace":
        margin_rep = interior_margin(P, margin_floor=report.config.margin_floor)
        if not margin_rep.passed:
            print("interior lower bound fails; whole-space suite aborted")
            return EXIT_FAIL
        lam_ladder = ladder or [0.0, 1.0, 10.0, 100.0]
        profiles = [gaussian_profile(1.0), ring_profile(1.0, 0.25)]
        table = wholespace_ratio(
            P, w, profiles, lam_ladder, margin=margin_rep.margin
        )
        passed = table.passed
    elif suite == "parametrix":
        if not report.condition("interior_lower_bound").passed:
            print("interior lower bound fails; parametrix suite aborted")
            return EXIT_FAIL
        lam_ladder = ladder or [1.0, 10.0, 100.0]
        from .estimate_lab import RatioRow, RatioTable

        rows = []
        margin = report.condition("interior_lower_bound").value
        bound = 2.0 ** (2 * P.mu) / margin
        for lam in lam_ladder:
            rep = parametrix_p0(P, w, gaussian_profile(1.0), lam, margin=margin)
            rows.append(
                RatioRow(
                    float(lam),
                    rep.bound_ratio,
                    bound,
                    rep.bound_ratio / bound,
                    {"residual_ratio": rep.residual_ratio},
                )
            )
        passed = all(rw.lhs <= bound + 0.05 and rw.components["residual_ratio"] <= 1.0 + 1e-9 for rw in rows)
        table = RatioTable(
            tuple(rows),
            "parametrix-boundedness",
            "lambda",
            passed,
            f"bound ratio <= {bound:.6g} + slack and residual ratio <= 1",
        )
    else:
        raise SchemaError("--suite", f"unknown suite {suite!r}")

    payload = table.to_jsonable()
    if growth_note:
        payload["growth_note"] = growth_note
    doc = {
        "manifest": _manifest(
            "verify",
            {
                "path": os.path.basename(args.path),
                "suite": suite,
                "ladder": ladder,
                "n_radial": args.n_radial,
                "n_angular": args.n_angular,
            },
            started,
        ),
        "payload": payload,
    }
    if args.csv:
        table.to_csv(args.csv)
    _emit(doc, args.out)
    if growth_note:
        print(f"note: {growth_note}", file=sys.stderr)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_polygon(args) -> int:
    from .newton import build_polygon

    started = time.monotonic()
    poly = build_polygon(args.r, args.s)
    payload = {
        "r": poly.r,
        "s": poly.s,
        "vertices": [list(v) for v in poly.vertices],
        "points": [list(p) for p in poly.integer_points],
        "count": len(poly.integer_points),
    }
    doc = {
        "manifest": _manifest("polygon", {"r": args.r, "s": args.s}, started),
        "payload": payload,
    }
    _emit(doc, args.out)
    return EXIT_PASS


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pencil-lab",
        description="Ellipticity checks and estimate verification for "
        "parameter-dependent operator pencils",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a problem file")
    p.add_argument("path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="decide ellipticity with margins")
    p.add_argument("path")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--pole-cutoff", dest="pole_cutoff", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve-model", help="solve the half-line model problem")
    p.add_argument("path")
    p.add_argument("--xi", required=True, help="tangential frequency, comma separated")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve_model)

    p = sub.add_parser("verify", help="run an estimate verification suite")
    p.add_argument("path")
    p.add_argument(
        "--suite",
        required=True,
        choices=["ode", "apriori", "wholespace", "parametrix", "eps"],
    )
    p.add_argument("--ladder", default=None, help="comma separated parameter ladder")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--pole-cutoff", dest="pole_cutoff", type=float, default=None)
    p.add_argument("--n-radial", dest="n_radial", type=int, default=256)
    p.add_argument("--n-angular", dest="n_angular", type=int, default=64)
    p.add_argument("--csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("polygon", help="dump polygon vertices and lattice points")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_polygon)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)

    global np
    import numpy as np  # after the thread cap

    from .errors import DegenerateProblemError, InputError, StructuralError

    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON at line {exc.lineno}, column {exc.colno}", file=sys.stderr)
        return EXIT_INPUT
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StructuralError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except DegenerateProblemError as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE


if __name__ == "__main__":
    sys.exit(main())
