"""Command line interface.

Subcommands: ``spectrum``, ``bound``, ``tv-exact``, ``card-tv``, ``simulate``,
``coupling``.  Output goes to stdout unless ``--output`` is given; relative
output paths are resolved against ``$RUDVALIS_OUTPUT_DIR`` when it is set.

Exit codes: 0 success, 2 validation error, 3 solver failure, 4 state-space
cap exceeded.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

from rudvalis import bounds, exact, montecarlo, spectral
from rudvalis.errors import RudvalisError, ValidationError
from rudvalis.shuffles import KINDS, ShuffleSpec

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "RUDVALIS_OUTPUT_DIR"


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _spec(args, n: int | None = None) -> ShuffleSpec:
    n = args.n if n is None else n
    if isinstance(n, list):
        n = n[0]
    if args.shuffle == "rudvalis" and args.p is None:
        raise ValidationError("--p is required for the rudvalis shuffle")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        spec = ShuffleSpec.make(args.shuffle, n, args.p)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return spec


def _solver_kwargs(args) -> dict:
    return {"max_iter": args.max_iter, "residual_tol": args.residual_tol}


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


@contextlib.contextmanager
def _sink(args):
    if not args.output:
        yield sys.stdout
        return
    path = Path(args.output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        yield fh


def _emit_json(args, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": _config(args)}
    doc.update(payload)
    with _sink(args) as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=False)
        fh.write("\n")


def _emit_csv(args, header: list[str], rows) -> None:
    with _sink(args) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


# ---------------------------------------------------------------------------
# commands


def _normalised(es: spectral.EigenSystem) -> dict:
    n = es.n
    out = {}
    if es.spec.kind == "rudvalis":
        p = float(es.spec.p)
        out["gamma_scaled"] = es.gamma * n**3 / (4 * math.pi**2 * p / (1 - p))
    elif es.spec.kind == "shift-or-swap":
        out["gamma_scaled"] = es.gamma * n**3 / math.pi**2
    else:
        out["gamma_scaled"] = es.gamma * n**3 / (math.pi**2 / 2)
        out["theta_scaled"] = es.theta * n**1.5 / (math.sqrt(2) * math.pi)
        out["delta_scaled"] = es.delta * math.sqrt(2 * n)
    return out


def cmd_spectrum(args) -> int:
    spec = _spec(args)
    es = spectral.solve(spec, **_solver_kwargs(args))
    result = es.to_dict()
    result.update(_normalised(es))
    _emit_json(args, {"spec": spec.describe(), "result": result})
    return 0


def cmd_bound(args) -> int:
    reports = []
    for n in args.n:
        spec = _spec(args, n)
        es = spectral.solve(spec, **_solver_kwargs(args))
        rep = bounds.bound_report(spec, args.epsilon, es=es)
        if rep.t_lower == 0:
            print(f"warning: lower bound is 0 steps at n={n}, epsilon={args.epsilon}", file=sys.stderr)
        reports.append(rep)
    if args.format == "csv":
        header = ["n", "t_lower", "theorem_constant", "reference_constant", "deviation",
                  "psi_max", "gamma", "r", "epsilon"]
        rows = ([r.n, r.t_lower, r.theorem_constant, r.reference_constant, r.deviation,
                 r.psi_max, r.gamma, r.r, r.epsilon] for r in reports)
        _emit_csv(args, header, rows)
    else:
        _emit_json(args, {"reports": [r.to_dict() for r in reports]})
    return 0


def cmd_tv_exact(args) -> int:
    spec = _spec(args)
    exact.LiftedChain.check_cap(spec.n)
    try:
        es = spectral.solve(spec, **_solver_kwargs(args))
    except ValidationError as exc:
        print(f"warning: no eigenfunction ({exc}); moment columns are NaN", file=sys.stderr)
        es = None
    curve = exact.exact_curve(spec, args.t, es)
    header = ["t", "tv", "mean_re", "mean_im", "var"]
    if args.format == "json":
        _emit_json(args, {"spec": spec.describe(), "rows": curve})
    else:
        _emit_csv(args, header, zip(*(curve[h] for h in header)))
    return 0


def cmd_card_tv(args) -> int:
    rows = []
    for n in args.n:
        spec = _spec(args, n)
        if args.t_grid == "auto":
            curve = exact.auto_tv_curve(spec, args.threshold, args.start)
        else:
            curve = exact.single_card_tv_curve(spec, _int_list(args.t_grid), args.start)
        rows.extend((n, t, tv) for t, tv in curve)
    if args.format == "json":
        _emit_json(args, {"rows": [{"n": n, "t": t, "tv": tv} for n, t, tv in rows]})
    else:
        _emit_csv(args, ["n", "t", "tv"], rows)
    return 0


def cmd_simulate(args) -> int:
    spec = _spec(args)
    es = spectral.solve(spec, **_solver_kwargs(args))
    batch = montecarlo.sample_psi(spec, es, args.t, args.trials, args.seed)
    if args.format == "json":
        threshold, tv_lb = montecarlo.separation_test(batch, args.stationary, args.epsilon)
        summary = {
            "mean_re": batch.mean.real,
            "mean_im": batch.mean.imag,
            "variance": batch.variance,
            "variance_bound": es.r_bound / (2 * es.gamma),
            "threshold": threshold,
            "empirical_tv_lower_bound": tv_lb,
        }
        _emit_json(args, {"spec": spec.describe(), "summary": summary})
    else:
        _emit_csv(args, ["trial", "re", "im", "abs"], batch.rows())
    return 0


def cmd_coupling(args) -> int:
    frac = montecarlo.coupling_parity(args.n, args.shifts, args.seed)
    report = montecarlo.shift_count_equivalence(args.n, args.t, args.seed)
    _emit_json(args, {"fraction_odd": frac, "expected_fraction_odd": 1 / 3,
                      "equivalence": report.to_dict()})
    return 0 if report.matched and report.final_match else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rudvalis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, multi_n=False, shuffle=True, fmt="json"):
        if shuffle:
            p.add_argument("--shuffle", choices=KINDS, required=True)
            p.add_argument("--p", default=None, help="swap-then-shift probability (rudvalis), e.g. 0.5 or 1/3")
        p.add_argument("--n", type=_int_list if multi_n else int, required=True,
                       help="deck size" + (" (comma-separated list allowed)" if multi_n else ""))
        p.add_argument("--format", choices=("json", "csv"), default=fmt)
        p.add_argument("--output", default=None, help=f"output file (relative to ${OUTPUT_DIR_ENV} if set)")
        p.add_argument("--max-iter", type=int, default=spectral.MAX_ITER)
        p.add_argument("--residual-tol", type=float, default=spectral.RESIDUAL_TOL)

    p = sub.add_parser("spectrum", help="eigenvalue, profile parameters, psi_max and R")
    common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bound", help="lower bound on mixing time and its constant")
    common(p, multi_n=True)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("tv-exact", help="exact TV and Psi moments for small decks (CSV t,tv,mean_re,mean_im,var)")
    common(p, fmt="csv")
    p.add_argument("--t", type=int, required=True)
    p.set_defaults(func=cmd_tv_exact)

    p = sub.add_parser("card-tv", help="TV of one card's position (CSV n,t,tv)")
    common(p, multi_n=True, fmt="csv")
    p.add_argument("--t-grid", default="auto",
                   help="'auto' doubles t from 1 until TV < threshold, or a comma list")
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--start", type=int, default=1, help="starting position of the card")
    p.set_defaults(func=cmd_card_tv)

    p = sub.add_parser("simulate", help="Monte Carlo samples of Psi_t (CSV trial,re,im,abs or JSON summary)")
    common(p, fmt="csv")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stationary", type=int, default=10_000, help="stationary samples for the JSON summary")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coupling", help="shift-or-swap versus Rudvalis(1/3) diagnostics")
    common(p, shuffle=False)
    p.add_argument("--shifts", type=int, default=100_000)
    p.add_argument("--t", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_coupling)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RudvalisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
