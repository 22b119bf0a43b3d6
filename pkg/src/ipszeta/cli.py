"""Command-line interface.

Subcommands: op build, spectrum, zeta, verify <claim>, dk survive, dk scan.
Outputs are deterministic for a fixed argument list (seeds default to 0 and
metadata carries no timestamps).  Exit codes: 0 success, 1 failed claim or
bracket, 2 usage or parameter error, 3 size cap or convergence failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dk import DKParams, dk_local_operator, estimate_survival, scan_critical
from .errors import (
    DenseUnavailable,
    LengthMismatch,
    NoBracket,
    NoConvergence,
    ParamOutOfRange,
    SingularFactor,
    SizeCapExceeded,
    SparsityViolation,
)
from .operators import (
    DENSE_SITE_CAP,
    LocalOperator,
    build_global_kronecker,
    build_global_recursive,
    identity_local,
    qca_rotation_local,
    random_local_operator,
)
from .serialize import (
    coefficients_csv,
    dense_csv,
    histogram_csv,
    operator_from_json,
    operator_to_json,
    report_json,
    scan_csv,
    spectrum_csv,
    survival_json,
    zeta_eval_json,
)
from .spectral import (
    EIG_DIM_CAP,
    VerificationReport,
    eig_dense,
    histogram,
    match_multisets,
    shift_coefficients,
    t_case_spectrum,
    trace_closed_form,
    verify_spectral_recursion,
)
from .zeta import (
    c_r,
    qca_rotation_check,
    t_case_c_r,
    trace_path_sum,
    zeta_det,
    zeta_log_series,
)

CLAIMS = (
    "build-recursion",
    "block-sums",
    "trace-formulas",
    "spectral-recursion",
    "t-family",
    "qca-rotation",
)


def _parse_complex(text: str) -> complex:
    if "," in text:
        re_s, im_s = text.split(",", 1)
        return complex(float(re_s), float(im_s))
    return complex(text.replace(" ", ""))


def _write(out: str | None, text: str):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _resolve_local(args, parser) -> tuple[LocalOperator, int, str]:
    """Local operator, site count and label from the model flags."""
    n = args.n
    model = getattr(args, "model", None)
    if model == "dk":
        if args.p is None or args.q is None:
            parser.error("--model dk needs --p and --q")
        local = dk_local_operator(DKParams(args.p, args.q))
    elif model == "qca":
        if args.xi is None:
            parser.error("--model qca needs --xi")
        local = qca_rotation_local(args.xi)
    elif model == "custom":
        if args.file is None:
            parser.error("--model custom needs --file")
        file_n, local = operator_from_json(Path(args.file).read_text())
        if n is None:
            n = file_n
    else:
        if n == 1:
            local = identity_local()
        else:
            parser.error("--model is required for n > 1")
    if n is None:
        parser.error("--n is required")
    return local, n, local.label or "custom"


def _base_meta(command: str, label: str, n: int | None = None, seed: int | None = None) -> dict:
    meta = {"tool": "ipszeta", "version": __version__, "command": command, "model": label}
    if n is not None:
        meta["n"] = n
    if seed is not None:
        meta["seed"] = seed
    return meta


# --- subcommand handlers ----------------------------------------------------


def cmd_op_build(args, parser) -> int:
    local, n, label = _resolve_local(args, parser)
    if args.format == "json":
        _write(args.out, operator_to_json(local, n, label=label))
    else:
        g = build_global_kronecker(local, n, cap=args.dense_cap)
        _write(args.out, dense_csv(g.dense, _base_meta("op build", label, n)))
    return 0


def cmd_spectrum(args, parser) -> int:
    local, n, label = _resolve_local(args, parser)
    g = build_global_recursive(local, n, cap=args.dense_cap)
    spec = eig_dense(g.dense, max_dim=args.eig_cap)
    _write(args.out, spectrum_csv(spec, _base_meta("spectrum", label, n)))
    if args.hist:
        _write(args.hist, histogram_csv(histogram(spec, args.bin),
                                        _base_meta("spectrum --hist", label, n)))
    return 0


def cmd_zeta(args, parser) -> int:
    local, n, label = _resolve_local(args, parser)
    meta = _base_meta("zeta", label, n)
    meta["r_max"] = args.rmax
    if args.u is not None:
        u = _parse_complex(args.u)
        series = zeta_log_series(local, n, args.rmax)
        log_z = series.evaluate(u)
        _write(args.out, zeta_eval_json(n, u, log_z, np.exp(log_z),
                                        series.truncation_bound(u), meta))
    else:
        series = zeta_log_series(local, n, args.rmax)
        _write(args.out, coefficients_csv(series.coefficients, meta))
    return 0


def _random_locals(args, rng):
    for _ in range(args.trials):
        yield random_local_operator(args.random, rng)


def _verify_targets(args, parser):
    if args.random:
        rng = np.random.default_rng(args.seed)
        return list(_random_locals(args, rng)), "random-%s" % args.random
    local, n, label = _resolve_local(args, parser)
    args.n = n
    return [local], label


def _rel(diff: float, scale: float) -> float:
    return diff / max(1.0, scale)


def run_claim(args, parser) -> VerificationReport:
    claim = args.claim
    tol = args.tol
    if claim == "qca-rotation":
        if args.xi is None:
            parser.error("qca-rotation needs --xi")
        report = qca_rotation_check(args.xi, args.n, args.rmax,
                                    tol=tol if tol is not None else 1e-9)
        return report
    locals_, label = _verify_targets(args, parser)
    n = args.n
    worst = 0.0
    details: dict = {"family": label, "count": len(locals_), "seed": args.seed}
    if claim == "build-recursion":
        tol = tol if tol is not None else 1e-12
        for loc in locals_:
            a = build_global_kronecker(loc, n).dense
            b = build_global_recursive(loc, n).dense
            worst = max(worst, _rel(float(np.abs(a - b).max()), float(np.abs(a).max())))
    elif claim == "block-sums":
        tol = tol if tol is not None else 1e-12
        if n < 2:
            parser.error("block-sums needs --n >= 2")
        for loc in locals_:
            g = build_global_recursive(loc, n)
            prev = build_global_recursive(loc, n - 1).dense
            e, f, gg, h = g.blocks()
            scale = float(np.abs(prev).max())
            worst = max(worst,
                        _rel(float(np.abs(e + gg - prev).max()), scale),
                        _rel(float(np.abs(f + h - prev).max()), scale))
    elif claim == "trace-formulas":
        tol = tol if tol is not None else 1e-10
        for loc in locals_:
            tr_path = trace_path_sum(loc, n)
            tr_closed = trace_closed_form(loc, n)
            tr_sweep = c_r(loc, n, 1) * (1 << n)
            scale = abs(tr_sweep)
            worst = max(worst, _rel(abs(tr_path - tr_sweep), scale),
                        _rel(abs(tr_closed - tr_sweep), scale))
    elif claim == "spectral-recursion":
        tol = tol if tol is not None else 1e-7
        for loc in locals_:
            rep = verify_spectral_recursion(loc, n, tol=tol)
            worst = max(worst, rep.worst_residual)
    elif claim == "t-family":
        tol = tol if tol is not None else 1e-7
        for loc in locals_:
            t0, t1 = shift_coefficients(loc)
            if abs(t0 - t1) > 1e-9:
                worst = float("inf")
                details["reason"] = "column-block shifts differ; not in the t family"
                continue
            g = build_global_recursive(loc, n)
            ok, dist = match_multisets(eig_dense(g.dense), t_case_spectrum(t0, n), tol)
            worst = max(worst, dist)
            for r in range(1, args.rmax + 1):
                worst = max(worst, abs(c_r(loc, n, r) - t_case_c_r(t0, n, r)))
    else:
        parser.error("unknown claim %r" % claim)
    return VerificationReport(claim=claim, n_sites=n, tol=tol,
                              passed=worst <= tol, worst_residual=worst, details=details)


def cmd_verify(args, parser) -> int:
    report = run_claim(args, parser)
    _write(args.out, report_json(report, _base_meta("verify %s" % args.claim,
                                                    report.details.get("family", args.claim),
                                                    report.n_sites, args.seed)))
    return 0 if report.passed else 1


def cmd_dk_survive(args, parser) -> int:
    params = DKParams(args.p, args.q)
    seed_set = tuple(int(x) for x in args.a.split(","))
    est = estimate_survival(params, seed_set, args.horizon, args.trials,
                            base_seed=args.seed, workers=args.threads)
    meta = _base_meta("dk survive", "dk(p=%g, q=%g)" % (args.p, args.q), seed=args.seed)
    meta["rng"] = est.rng
    _write(args.out, survival_json(est, meta))
    return 0


def cmd_dk_scan(args, parser) -> int:
    if args.p_grid:
        grid = [float(x) for x in args.p_grid.split(",")]
    else:
        if args.p_from is None or args.p_to is None:
            parser.error("give either --p-grid or --p-from/--p-to/--p-step")
        grid = list(np.round(np.arange(args.p_from, args.p_to + args.p_step / 2,
                                       args.p_step), 12))
    result = scan_critical(args.q, grid, args.horizon, args.trials,
                           threshold=args.eps, base_seed=args.seed, workers=args.threads)
    meta = _base_meta("dk scan", "dk(q=%g)" % args.q, seed=args.seed)
    meta["rng"] = result.points[0].rng
    meta["horizon"] = args.horizon
    meta["trials"] = args.trials
    _write(args.out, scan_csv(result, meta))
    return 0


# --- parser -----------------------------------------------------------------


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--model", choices=("dk", "qca", "custom"))
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--file")
    p.add_argument("--n", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipszeta",
        description="Operators, spectra and zeta functions of nearest-neighbour "
                    "interacting particle systems; Domany-Kinzel Monte Carlo.")
    parser.add_argument("--version", action="version", version="ipszeta %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_op = sub.add_parser("op", help="operator construction")
    sub_op = p_op.add_subparsers(dest="op_command", required=True)
    p_build = sub_op.add_parser("build", help="build and export an operator")
    _add_model_flags(p_build)
    p_build.add_argument("--format", choices=("json", "csv"), default="json")
    p_build.add_argument("--out")
    p_build.add_argument("--dense-cap", type=int, default=DENSE_SITE_CAP)
    p_build.set_defaults(func=cmd_op_build)

    p_spec = sub.add_parser("spectrum", help="dense spectrum and histogram export")
    _add_model_flags(p_spec)
    p_spec.add_argument("--out")
    p_spec.add_argument("--hist", help="also write a histogram CSV to this path")
    p_spec.add_argument("--bin", type=float, default=0.05)
    p_spec.add_argument("--dense-cap", type=int, default=DENSE_SITE_CAP)
    p_spec.add_argument("--eig-cap", type=int, default=EIG_DIM_CAP)
    p_spec.set_defaults(func=cmd_spectrum)

    p_zeta = sub.add_parser("zeta", help="power-trace coefficients or zeta value")
    _add_model_flags(p_zeta)
    p_zeta.add_argument("--rmax", type=int, default=60)
    p_zeta.add_argument("--u", help="evaluation point, e.g. 0.5 or 0.3+0.1j or 0.3,0.1")
    p_zeta.add_argument("--out")
    p_zeta.set_defaults(func=cmd_zeta)

    p_ver = sub.add_parser("verify", help="check a named identity numerically")
    p_ver.add_argument("claim", choices=CLAIMS)
    _add_model_flags(p_ver)
    p_ver.add_argument("--random", choices=("pca", "qca", "general", "ca", "complex-stochastic"))
    p_ver.add_argument("--trials", type=int, default=50)
    p_ver.add_argument("--rmax", type=int, default=30)
    p_ver.add_argument("--tol", type=float)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out")
    p_ver.set_defaults(func=cmd_verify)

    p_dk = sub.add_parser("dk", help="Domany-Kinzel Monte Carlo")
    sub_dk = p_dk.add_subparsers(dest="dk_command", required=True)

    p_sv = sub_dk.add_parser("survive", help="survival probability estimate")
    p_sv.add_argument("--p", type=float, required=True)
    p_sv.add_argument("--q", type=float, required=True)
    p_sv.add_argument("--horizon", "--t", "-t", type=int, default=200)
    p_sv.add_argument("--trials", type=int, default=10000)
    p_sv.add_argument("--a", default="0", help="comma-separated seed sites")
    p_sv.add_argument("--seed", type=int, default=0)
    p_sv.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_sv.add_argument("--out")
    p_sv.set_defaults(func=cmd_dk_survive)

    p_sc = sub_dk.add_parser("scan", help="survival scan over p with bracket")
    p_sc.add_argument("--q", type=float, required=True)
    p_sc.add_argument("--p-grid", help="comma-separated p values")
    p_sc.add_argument("--p-from", type=float)
    p_sc.add_argument("--p-to", type=float)
    p_sc.add_argument("--p-step", type=float, default=0.05)
    p_sc.add_argument("--horizon", "--t", "-t", type=int, default=200)
    p_sc.add_argument("--trials", type=int, default=2000)
    p_sc.add_argument("--eps", type=float, default=0.02)
    p_sc.add_argument("--seed", type=int, default=0)
    p_sc.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_sc.add_argument("--out")
    p_sc.set_defaults(func=cmd_dk_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (SizeCapExceeded, NoConvergence) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except NoBracket as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ParamOutOfRange, SparsityViolation, LengthMismatch,
            SingularFactor, DenseUnavailable, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
