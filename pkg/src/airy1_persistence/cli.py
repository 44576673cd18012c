"""Command-line interface: ``airy1 {kappa,curve,fit,verify,figure}``.

Every command writes CSV: ``#`` metadata lines, one header line, then
rows formatted with 15 significant digits.  Thread count never enters the
output, so identical flags give byte-identical files.

Exit codes: 0 ok, 2 usage, 3 pole proximity, 4 curve degradation,
5 verification failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import sys
import warnings

from . import __version__
from .errors import Airy1Error, ConfigurationError, PoleProximity
from .exponent import ContinuationSpec, jump_points_between, kappa, kappa_tilde
from .identities import run_identity_suite
from .operators import KernelParams, default_truncation
from .persistence import (
    L_MAX_FEASIBLE,
    CurvePoint,
    default_L_grid,
    figure1_data,
    figure2_data,
    fit_exponent,
    persistence_curve,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_POLE = 3
EXIT_DEGRADED = 4
EXIT_VERIFY = 5

DEGRADED_FRACTION = 0.25


class UsageError(Exception):
    """Flag validation failed before any computation."""


def fmt(x):
    """Fixed 15-significant-digit formatting used for every CSV number."""
    if isinstance(x, (bool,)):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return "%.15g" % float(x)


def _write_csv(stream, meta, header, rows):
    for line in meta:
        stream.write(f"# {line}\n")
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _meta(command, flags):
    items = ", ".join(f"{k}={v}" for k, v in flags.items())
    return [f"airy1_persistence {__version__}", f"command: {command} {items}".rstrip()]


# ---------------------------------------------------------------- kappa


def _c_range(lo, hi, step):
    if not step > 0:
        raise UsageError("--step must be positive")
    if lo > hi:
        raise UsageError("--c-min must not exceed --c-max")
    count = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 12) for k in range(count + 1)]


def cmd_kappa(args):
    cs = _c_range(args.c_min, args.c_max, args.step)
    if not args.continuation and cs[0] < 0:
        raise UsageError("negative c needs --continuation")
    spec = ContinuationSpec(tol=args.tol)
    rows = []
    for c in cs:
        r = kappa_tilde(c, spec) if args.continuation else kappa(c)
        rows.append((c, r.value, r.err_est, r.branch_correction))
    meta = _meta("kappa", {"c_min": fmt(args.c_min), "c_max": fmt(args.c_max),
                           "step": fmt(args.step), "continuation": args.continuation,
                           "tol": fmt(args.tol)})
    if args.continuation:
        jumps = jump_points_between(args.c_min, args.c_max)
        meta.append("jump points in range: " + (" ".join(fmt(p) for p in jumps) or "none"))
    with _open_out(args.output) as fh:
        _write_csv(fh, meta, ["c", "kappa", "err_est", "branch_correction"], rows)
    return EXIT_OK


# ---------------------------------------------------------------- curve


def _params_from(args, c, L):
    return KernelParams(c, L, d_minus=args.d_minus, d_plus=args.d_plus,
                        nodes_per_panel=args.nodes, panels_per_side=args.panels)


def _curve_grid(args):
    if not args.l_step > 0:
        raise UsageError("--l-step must be positive")
    if not 0 < args.l_max <= L_MAX_FEASIBLE:
        raise UsageError(
            f"--l-max={args.l_max:g} is outside the feasible window (0, {L_MAX_FEASIBLE:g}]: "
            "the kernel of exp(-L Delta) B grows super-exponentially with L")
    if args.l_step > args.l_max:
        raise UsageError("--l-step exceeds --l-max")
    return default_L_grid(args.l_max, args.l_step)


def _curve_rows(c, curve):
    return [(c, p.L, p.prob, p.log_prob, p.err_est) for p in curve]


def _curve_meta(args, c, Ls):
    meta = _meta(args.command, {"c": fmt(c), "l_max": fmt(args.l_max), "l_step": fmt(args.l_step),
                                "nodes": args.nodes, "panels": args.panels, "route": args.route})
    lo = default_truncation(c, Ls[0])
    hi = default_truncation(c, Ls[-1])
    dm = fmt(args.d_minus) if args.d_minus is not None else f"auto {fmt(lo[0])}..{fmt(hi[0])}"
    dp = fmt(args.d_plus) if args.d_plus is not None else f"auto {fmt(hi[1])}"
    meta.append(f"truncation: d_minus={dm} d_plus={dp}")
    return meta


def _compute_curve(args):
    Ls = _curve_grid(args)
    template = _params_from(args, args.c, Ls[0])
    curve = persistence_curve(args.c, Ls, params=template, route=args.route, threads=args.threads)
    failed = sum(1 for p in curve if not p.ok)
    return Ls, curve, failed


def cmd_curve(args):
    Ls, curve, failed = _compute_curve(args)
    meta = _curve_meta(args, args.c, Ls)
    meta.append(f"failed points: {failed}")
    with _open_out(args.output) as fh:
        _write_csv(fh, meta, ["c", "L", "prob", "log_prob", "err_est"], _curve_rows(args.c, curve))
    if failed > DEGRADED_FRACTION * len(curve):
        print(f"error: {failed} of {len(curve)} curve points failed", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


# ------------------------------------------------------------------ fit


def read_curve_csv(path):
    """Read ``c,L,prob,log_prob,err_est`` rows; ``#`` lines are skipped.

    Only ``L`` and one of ``log_prob``/``prob`` are required.
    """
    if not os.path.exists(path):
        raise UsageError(f"input file {path!r} does not exist")
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or "L" not in reader.fieldnames:
        raise UsageError("input CSV needs an 'L' column")
    c_val = None
    points = []
    for row in reader:
        L = float(row["L"])
        if row.get("log_prob") not in (None, ""):
            lp = float(row["log_prob"])
            prob = float(row["prob"]) if row.get("prob") not in (None, "") else math.exp(lp)
        else:
            prob = float(row["prob"])
            lp = math.log(prob) if prob > 0 else math.nan
        err = float(row["err_est"]) if row.get("err_est") not in (None, "") else 0.0
        if row.get("c") not in (None, "") and c_val is None:
            c_val = float(row["c"])
        bad = None if math.isfinite(lp) and math.isfinite(prob) else "non-finite input"
        points.append(CurvePoint(L, prob, lp, err, bad))
    if not points:
        raise UsageError("input CSV has no data rows")
    return c_val, points


def cmd_fit(args):
    if (args.input is None) == (args.c is None):
        raise UsageError("fit needs exactly one of --input or --c")
    if args.input is not None:
        c, curve = read_curve_csv(args.input)
        source = {"input": os.path.basename(args.input)}
    else:
        _, curve, _ = _compute_curve(args)
        c = args.c
        source = {"c": fmt(c), "l_max": fmt(args.l_max), "l_step": fmt(args.l_step),
                  "nodes": args.nodes, "panels": args.panels, "route": args.route}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fit_exponent(curve, burn_in=args.burn_in, max_rel_err=args.max_rel_err)
    meta = _meta("fit", {**source, "burn_in": args.burn_in, "max_rel_err": fmt(args.max_rel_err)})
    meta.extend(str(w.message) for w in caught)
    row = (fmt(c) if c is not None else "nan", fit.kappa_hat, fit.slope, fit.intercept,
           fit.residual_rms, fit.points_used)
    with _open_out(args.output) as fh:
        _write_csv(fh, meta, ["c", "kappa_hat", "slope", "intercept", "residual_rms",
                              "points_used"], [row])
    return EXIT_OK


# --------------------------------------------------------------- verify


def cmd_verify(args):
    reports = run_identity_suite(args.level)
    rows = [(r.name, r.measured, r.expected, r.abs_err, r.tol, r.passed) for r in reports]
    with _open_out(args.output) as fh:
        _write_csv(fh, _meta("verify", {"level": args.level}),
                   ["name", "measured", "expected", "abs_err", "tol", "pass"], rows)
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed", file=sys.stderr)
    for r in failed:
        print(f"FAIL {r.name}: abs_err={r.abs_err:.3g} tol={r.tol:.3g}", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


# --------------------------------------------------------------- figure


def cmd_figure(args):
    os.makedirs(args.output_dir, exist_ok=True)
    flags = {"which": args.which, "route": args.route}
    if args.which == 1:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            curve, fit = figure1_data(threads=args.threads, route=args.route)
        meta = _meta("figure", flags)
        meta.append(f"fit: slope={fmt(fit.slope)} intercept={fmt(fit.intercept)} "
                    f"residual_rms={fmt(fit.residual_rms)} points_used={fit.points_used}")
        path = os.path.join(args.output_dir, "figure1_curve.csv")
        with open(path, "w", newline="") as fh:
            _write_csv(fh, meta, ["c", "L", "prob", "log_prob", "err_est"], _curve_rows(1.0, curve))
        path_fit = os.path.join(args.output_dir, "figure1_fit.csv")
        with open(path_fit, "w", newline="") as fh:
            _write_csv(fh, _meta("figure", flags),
                       ["c", "kappa_hat", "slope", "intercept", "residual_rms", "points_used"],
                       [(1.0, fit.kappa_hat, fit.slope, fit.intercept, fit.residual_rms,
                         fit.points_used)])
        print(path, file=sys.stderr)
        print(path_fit, file=sys.stderr)
        return EXIT_OK

    c_values = args.c_values
    if c_values is not None:
        c_values = sorted(float(v) for v in c_values.split(","))
    if not args.theory_step > 0:
        raise UsageError("--theory-step must be positive")
    theory, fitted = figure2_data(c_values, args.theory_step, threads=args.threads,
                                  route=args.route)
    flags = {**flags, "theory_step": fmt(args.theory_step),
             "c_values": ",".join(fmt(c) for c in c_values) if c_values else "default"}
    meta = _meta("figure", flags)
    jumps = jump_points_between(-4.0, 1.5)
    meta.append("jump points in range: " + " ".join(fmt(p) for p in jumps))
    p_theory = os.path.join(args.output_dir, "figure2_theory.csv")
    with open(p_theory, "w", newline="") as fh:
        _write_csv(fh, meta, ["c", "kappa_tilde", "err_est"], theory)
    p_fit = os.path.join(args.output_dir, "figure2_fitted.csv")
    with open(p_fit, "w", newline="") as fh:
        _write_csv(fh, _meta("figure", flags),
                   ["c", "kappa_hat", "residual_rms", "points_used", "error"],
                   [(c, k, rms, n, (err or "").replace(",", ";")) for c, k, rms, n, err in fitted])
    print(p_theory, file=sys.stderr)
    print(p_fit, file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------- parser


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_curve_flags(p, c_required=True):
    p.add_argument("--c", type=float, required=c_required, help="threshold")
    p.add_argument("--l-max", type=float, default=2.0, help="largest horizon L (<= 3)")
    p.add_argument("--l-step", type=float, default=0.05, help="horizon spacing")
    p.add_argument("--nodes", type=_positive_int, default=80, help="Gauss-Legendre nodes per panel")
    p.add_argument("--panels", type=_positive_int, default=2, help="panels per side")
    p.add_argument("--d-minus", type=float, default=None, help="left truncation length")
    p.add_argument("--d-plus", type=float, default=None, help="right truncation length")


def _add_common(p):
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: $AIRY1_THREADS or CPU count)")
    p.add_argument("--route", choices=("A", "B"), default="B", help="determinant form")


def build_parser():
    parser = argparse.ArgumentParser(prog="airy1",
                                     description="Persistence of the Airy1 process below a level.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kappa", help="persistence exponent over a range of c")
    p.add_argument("--c-min", type=float, required=True)
    p.add_argument("--c-max", type=float, required=True)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--continuation", action="store_true",
                   help="use the analytic continuation (allows c < 0)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("curve", help="persistence probabilities on an L grid")
    _add_curve_flags(p)
    _add_common(p)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("fit", help="fit the exponent from a curve")
    p.add_argument("--input", "-i", default=None, help="curve CSV to fit")
    _add_curve_flags(p, c_required=False)
    _add_common(p)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--max-rel-err", type=float, default=1e-3)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", help="run the identity suite")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figure", help="data files for the figures")
    p.add_argument("--which", type=int, choices=(1, 2), required=True)
    p.add_argument("--output-dir", default=".")
    p.add_argument("--c-values", default=None,
                   help="comma separated thresholds for fitted points (figure 2)")
    p.add_argument("--theory-step", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PoleProximity as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_POLE
    except Airy1Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGRADED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
