"""Command-line interface.

Exit codes: 0 success, 1 domain error (invalid data, solver failure, no
threshold in bracket), 2 usage error.  Set ``NSQKD_LOG_LEVEL`` (e.g.
``DEBUG``) for diagnostic logging on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from nsqkd import __version__
from nsqkd.exceptions import NsqkdError
from nsqkd.io import dump_lp, load_table
from nsqkd.keyrate import LOCAL_BOUNDARY, find_threshold, report_for, solve_table
from nsqkd.lp_builder import FULL_NAMES, build_full, build_reduced, lift_solution
from nsqkd.protocol import werner_correlations
from nsqkd.sweep import fmt, round12, run_sweep

logger = logging.getLogger("nsqkd")


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _json(doc):
    return json.dumps(doc, indent=2) + "\n"


def solve_document(t, form, p=None):
    if form == "auto":
        form = "reduced" if t.is_symmetric() else "full"
    inst, sol, cert = solve_table(t, form)
    rep = report_for(p, t, sol, form=form, certificate_gap=cert.gap)
    full = lift_solution(sol.primal, t) if form == "reduced" else sol.primal
    return {
        "p": p,
        "form": form,
        "source": t.source,
        "P_E": round12(rep.guessing_prob),
        "I_AB": round12(rep.I_AB),
        "I_BE_bound": round12(rep.I_BE_bound),
        "K_raw": round12(rep.K_raw),
        "K": round12(rep.K),
        "distribution": {name: round12(v) for name, v in zip(FULL_NAMES, full)},
        "solution": {
            "status": sol.status,
            "value": round12(sol.value),
            "primal": [round12(v) for v in sol.primal],
            "dual_eq": [round12(v) for v in sol.dual_eq],
            "reduced_costs": [round12(v) for v in sol.reduced_costs],
            "basis": sol.basis,
            "iterations": sol.iterations,
        },
        "certificate": {
            "dual_bound": round12(cert.bound),
            "gap": round12(cert.gap),
            "primal_eq_residual": round12(cert.primal_eq_residual),
            "ok": cert.ok,
        },
    }


def cmd_solve(args):
    if args.table:
        t = load_table(args.table)
        doc = solve_document(t, args.form)
    else:
        form = "reduced" if args.form == "auto" else args.form
        doc = solve_document(werner_correlations(args.p), form, p=args.p)
    _emit(_json(doc), args.out)
    return 0


def _write_sweep(result, args):
    text = result.to_csv() if args.format == "csv" else _json(result.to_json_dict())
    _emit(text, args.out)


def cmd_sweep(args, model=werner_correlations, provenance="werner"):
    result = run_sweep(
        p_min=args.p_min,
        p_max=args.p_max,
        steps=args.steps,
        form=args.form,
        jobs=args.jobs,
        model=model,
        with_threshold=args.threshold,
        provenance=provenance,
    )
    _write_sweep(result, args)
    return 0


def cmd_threshold(args):
    lo, hi = args.bracket
    res = find_threshold(tol=args.tol, bracket=(lo, hi), form=args.form)
    print(f"p* = {fmt(res.p_star)}  bracket [{fmt(res.lo)}, {fmt(res.hi)}]")
    if args.out:
        doc = {
            "p_star": round12(res.p_star),
            "bracket": [round12(res.lo), round12(res.hi)],
            "tol": args.tol,
            "iterations": res.iterations,
            "form": args.form,
        }
        _emit(_json(doc), args.out)
    return 0


def cmd_export_lp(args):
    t = werner_correlations(args.p)
    inst = build_reduced(t) if args.form == "reduced" else build_full(t)
    _emit(dump_lp(inst) + "\n", args.out)
    return 0


def cmd_ingest(args):
    t = load_table(args.table)
    if args.run == "solve":
        _emit(_json(solve_document(t, args.form)), args.out)
        return 0
    # Sweep the visibility of the ingested data: p * table + (1 - p) * uniform.
    if args.form == "auto":
        args.form = "reduced" if t.is_symmetric() else "full"
    return cmd_sweep(args, model=t.mix_with_noise, provenance=f"ingested:{args.table}")


def _add_sweep_options(sp, form_choices, default_form):
    sp.add_argument("--p-min", type=float, default=0.0)
    sp.add_argument("--p-max", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=101)
    sp.add_argument("--form", choices=form_choices, default=default_form)
    sp.add_argument("--out", default=None, help="output path (default: stdout)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--threshold", action="store_true", help="also locate the key threshold")


def build_parser():
    parser = argparse.ArgumentParser(prog="nsqkd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="key-rate records on a p-grid (Werner model)")
    _add_sweep_options(sp, ("reduced", "full", "both"), "reduced")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("solve", help="solve one instance and print the certified optimum")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--p", type=float)
    src.add_argument("--table", metavar="FILE")
    sp.add_argument("--form", choices=("auto", "reduced", "full"), default="auto")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("threshold", help="bisect for the onset of positive key")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"), default=(LOCAL_BOUNDARY, 1.0))
    sp.add_argument("--form", choices=("reduced", "full"), default="reduced")
    sp.add_argument("--out", default=None, help="write a JSON record here")
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("export-lp", help="write the LP instance as JSON")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--form", choices=("reduced", "full"), default="reduced")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_export_lp)

    sp = sub.add_parser("ingest", help="validate an external correlation table and analyse it")
    sp.add_argument("--table", metavar="FILE", required=True)
    sp.add_argument("--run", choices=("solve", "sweep"), default="solve")
    _add_sweep_options(sp, ("auto", "reduced", "full", "both"), "auto")
    sp.set_defaults(func=cmd_ingest)
    return parser


def _validate_args(parser, args):
    if getattr(args, "p", None) is not None and not 0.0 <= args.p <= 1.0:
        parser.error("--p must lie in [0, 1]")
    if hasattr(args, "steps") and args.steps < 1:
        parser.error("--steps must be positive")
    if hasattr(args, "jobs") and args.jobs < 1:
        parser.error("--jobs must be positive")
    if getattr(args, "command", None) == "threshold" and args.tol <= 0:
        parser.error("--tol must be positive")


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("NSQKD_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate_args(parser, args)
    try:
        return args.func(args)
    except (NsqkdError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
