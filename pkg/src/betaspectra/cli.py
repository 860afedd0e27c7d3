"""Command-line entry point: ``betaspectra <command> ...``.

Every command writes JSON (with a top-level ``schema: 1``) or CSV to stdout
or to ``--output``.  Usage errors exit with status 2; numerical failures exit
with status 1 and a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .betaspec import BetaSpec, to_fraction
from .errors import BetaSpectraError, VerificationFailure

SCHEMA = 1
PRECISION_BITS = {"double": 53, "double-double": 106}
ENV_PRECISION = "BETASPECTRA_PRECISION"
ENV_THREADS = "BETASPECTRA_THREADS"


class UsageError(Exception):
    pass


# -- argument helpers ------------------------------------------------------------

def _complex_arg(text: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected <re,im>, got {text!r}")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _beta(args, text: str) -> BetaSpec:
    try:
        return BetaSpec.parse(text, PRECISION_BITS[args.precision])
    except (ValueError, ArithmeticError) as exc:
        raise UsageError(f"invalid beta spec {text!r}: {exc}") from exc


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{ENV_THREADS} must be an integer") from None
    return 1


def _clean(obj):
    """Make a result JSON-safe: complex -> [re, im], non-finite floats -> null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if hasattr(obj, "__float__") and not isinstance(obj, (int, bool)):
        return _clean(float(obj))
    return obj


def _emit(args, payload=None, rows=None, header=None, text=None) -> None:
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        out = buf.getvalue()
    elif args.format == "text" and text is not None:
        out = text + "\n"
    else:
        out = json.dumps(_clean({"schema": SCHEMA, **payload}), indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


# -- commands --------------------------------------------------------------------

def cmd_digits(args) -> int:
    from .expansion import greedy_digits, quasi_greedy_digits

    beta = _beta(args, args.beta)
    x = to_fraction(args.x)
    ds = greedy_digits(beta, x, args.n)
    quasi = list(quasi_greedy_digits(beta, x, args.n).quasi_greedy) if x > 0 else None
    rows = [(k, g, quasi[k - 1] if quasi else "") for k, g in enumerate(ds.greedy, 1)]
    _emit(args, {"command": "digits", "beta": beta.describe(), "x": args.x,
                 "greedy": list(ds.greedy), "quasi_greedy": quasi,
                 "simple_index": ds.simple_index, "trust_horizon": ds.trust_horizon},
          rows, ["n", "greedy", "quasi_greedy"], " ".join(map(str, ds.greedy)))
    return 0


def cmd_spectrum(args) -> int:
    from .spectra import locate_eigenvalues

    beta = _beta(args, args.beta)
    rep = locate_eigenvalues(beta, args.tol, args.ceiling)
    rows = [(e.lam.real, e.lam.imag, abs(e.lam), e.multiplicity, e.kind) for e in rep.eigenvalues]
    _emit(args, {"command": "spectrum", **rep.to_dict()}, rows,
          ["re", "im", "modulus", "multiplicity", "kind"])
    return 0


def cmd_scan(args) -> int:
    from .spectra import scan_beta_range

    res = scan_beta_range(args.lo, args.hi, args.grid, _threads(args), args.tol, args.ceiling)
    points, rows = [], []
    for b, rep, err in zip(res.betas, res.reports, res.errors):
        if rep is None:
            points.append({"beta": b, "error": err})
            rows.append((b, "", "", err))
            continue
        lams = [[e.lam.real, e.lam.imag, e.multiplicity] for e in rep.nonleading]
        points.append({"beta": b, "nonleading": lams,
                       "subleading_modulus": rep.subleading_modulus,
                       "contour_winding_total": rep.contour_winding_total})
        rows.append((b, len(lams), rep.subleading_modulus if rep.subleading_modulus else "", ""))
    summary = {"grid": args.grid, "lo": args.lo, "hi": args.hi,
               "fraction_with_nonleading": res.fraction_nonleading,
               "failures": sum(1 for e in res.errors if e)}
    _emit(args, {"command": "scan", "points": points, "summary": summary}, rows,
          ["beta", "n_nonleading", "subleading_modulus", "error"])
    return 0


def cmd_track(args) -> int:
    from .continuity import track

    beta0 = _beta(args, args.beta0)
    b0 = float(beta0)
    curve = track(beta0, args.lam, (b0 - args.window, b0 + args.window), args.steps,
                  args.tol or 1e-8)
    rows = [(b, lam.real, lam.imag, r) for b, lam, r in curve.rows()]
    _emit(args, {"command": "track", "base": curve.base, "truncated": curve.truncated,
                 "flags": list(curve.flags),
                 "curve": [list(r) for r in rows]},
          rows, ["beta", "re", "im", "residual"])
    return 0


def cmd_holder(args) -> int:
    from .continuity import fit_exponent, holder_constants, nondiff_probe

    beta0 = _beta(args, args.beta0)
    probes = nondiff_probe(beta0, args.lam, args.probes) if args.probes else []
    fit = fit_exponent(probes, args.lam) if probes else None
    est = holder_constants(beta0, args.lam, fitted_left=fit[0] if fit else None)
    table = [{"l": p["l"], "beta": float(p["beta"]), "beta_spec": p["beta"].spec_string(),
              "gap": p["gap"], "lambda": p["lambda"], "quotient": p["quotient"],
              "residual": p["residual"]} for p in probes]
    rows = [(p["l"], float(p["beta"]), p["gap"], p["lambda"].real, p["lambda"].imag, p["quotient"])
            for p in probes]
    _emit(args, {"command": "holder", "estimate": est.to_dict(), "probes": table,
                 "fit_stderr": fit[1] if fit else None}, rows,
          ["l", "beta", "gap", "re", "im", "quotient"])
    return 0


def cmd_functional(args) -> int:
    from .functional import eval_F

    beta = _beta(args, args.beta)
    tol = args.tol or 1e-12
    rows = []
    for k in range(args.samples + 1):
        x = Fraction(k, args.samples)
        ev = eval_F(beta, args.lam, x, tol)
        rows.append((float(x), ev.value.real, ev.value.imag, ev.tail_bound))
    _emit(args, {"command": "functional", "beta": beta.describe(), "lambda": args.lam,
                 "curve": [list(r) for r in rows]}, rows, ["x", "re", "im", "tail_bound"])
    return 0


def cmd_decay(args) -> int:
    from .spectra import locate_eigenvalues
    from .transfer import decay_fit, good_decay_construct, indicator, observable_record

    beta = _beta(args, args.beta)
    lams = []
    if args.construct:
        rep = locate_eigenvalues(beta)
        lams = [e.lam for e in rep.nonleading]
        f = good_decay_construct(beta, list(rep.nonleading), tol=args.tol or 1e-12)
    else:
        x0 = to_fraction(args.x0)
        f = indicator(x0) - indicator(1, x0)
    lo = args.window_lo if args.window_lo is not None else args.nmax // 2
    fit = decay_fit(beta, f, args.nmax, (lo, args.nmax))
    rows = [(n, v) for n, v in fit.rates]
    _emit(args, {"command": "decay", "beta": beta.describe(), "fit": fit.to_dict(),
                 "observable": observable_record(beta, f, lams)}, rows, ["n", "bv_norm"])
    return 0


def cmd_verify(args) -> int:
    from .examples import FAMILY_RANGES, QuarticFamily, verify_example

    fams = [args.family] if args.family else sorted(FAMILY_RANGES)
    reports, failed = [], []
    for fam in fams:
        ns = [args.n] if args.n is not None else range(FAMILY_RANGES[fam][0], FAMILY_RANGES[fam][1] + 1)
        for n in ns:
            try:
                q = QuarticFamily(fam, n)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            try:
                reports.append(verify_example(q, args.tol or 1e-9))
            except VerificationFailure as exc:
                failed.append({"family": fam, "n": n, "clause": exc.clause, "message": str(exc)})
                reports.append({"family": fam, "n": n, "passed": False, "clause": exc.clause})
    rows = [(r["family"], r["n"], r["passed"]) for r in reports]
    _emit(args, {"command": "verify-appendix", "reports": reports, "failures": failed,
                 "passed": not failed}, rows, ["family", "n", "passed"])
    if failed:
        _error({"error": "VerificationFailure", "failures": failed})
        return 1
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--precision", choices=tuple(PRECISION_BITS),
                        default=os.environ.get(ENV_PRECISION, "double"),
                        help=f"working precision for decimal betas (env {ENV_PRECISION})")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker processes (env {ENV_THREADS})")

    p = argparse.ArgumentParser(prog="betaspectra",
                                description="Spectra of beta-transformations.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("digits", parents=[common], help="greedy and quasi-greedy digits")
    s.add_argument("--beta", required=True)
    s.add_argument("--x", default="1")
    s.add_argument("--n", type=_positive_int, default=16)
    s.set_defaults(func=cmd_digits)

    s = sub.add_parser("spectrum", parents=[common], help="isolated eigenvalues")
    s.add_argument("--beta", required=True)
    s.add_argument("--ceiling", type=float, default=0.95)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("scan", parents=[common], help="spectra over a grid of beta")
    s.add_argument("--lo", type=float, required=True)
    s.add_argument("--hi", type=float, required=True)
    s.add_argument("--grid", type=_positive_int, required=True)
    s.add_argument("--ceiling", type=float, default=0.95)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("track", parents=[common], help="continue an eigenvalue in beta")
    s.add_argument("--beta0", required=True)
    s.add_argument("--lambda", dest="lam", type=_complex_arg, required=True)
    s.add_argument("--window", type=float, required=True)
    s.add_argument("--steps", type=_positive_int, default=41)
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("holder", parents=[common], help="Hoelder constants and probes")
    s.add_argument("--beta0", required=True)
    s.add_argument("--lambda", dest="lam", type=_complex_arg, required=True)
    s.add_argument("--probes", type=int, default=6)
    s.set_defaults(func=cmd_holder)

    s = sub.add_parser("functional", parents=[common], help="sample F_lambda on [0, 1]")
    s.add_argument("--beta", required=True)
    s.add_argument("--lambda", dest="lam", type=_complex_arg, required=True)
    s.add_argument("--samples", type=_positive_int, default=256)
    s.set_defaults(func=cmd_functional)

    s = sub.add_parser("decay", parents=[common], help="BV decay of an observable")
    s.add_argument("--beta", required=True)
    s.add_argument("--construct", action="store_true",
                   help="use the constructed good-decay observable")
    s.add_argument("--x0", default="3/10", help="breakpoint of the centered indicator")
    s.add_argument("--nmax", type=int, default=40)
    s.add_argument("--window-lo", type=int, default=None)
    s.set_defaults(func=cmd_decay)

    s = sub.add_parser("verify-appendix", parents=[common], help="check the quartic families")
    s.add_argument("--family", choices=("P", "Q", "R"))
    s.add_argument("--n", type=int)
    s.set_defaults(func=cmd_verify)
    return p


def _error(record: dict) -> None:
    sys.stderr.write(json.dumps(_clean({"schema": SCHEMA, **record}), sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.precision not in PRECISION_BITS:
        parser.error(f"unknown precision {args.precision!r}")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return 2
    except BetaSpectraError as exc:
        _error({"error": type(exc).__name__, "message": str(exc)})
        return 1
    except ArithmeticError as exc:
        _error({"error": type(exc).__name__, "message": str(exc)})
        return 1


if __name__ == "__main__":
    sys.exit(main())
