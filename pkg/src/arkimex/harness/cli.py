"""Command line interface: ``arkimex <subcommand> [options]``.

Exit status: 0 success, 2 usage error, 3 configuration error,
4 certification mismatch, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

import numpy as np

from ..analysis import (certify, compare_with_expected, rational_boundary,
                        stability_boundary)
from ..tableaux import BUILTIN, CatalogError, UnknownMethodError, get_method, load_catalog
from .config import ConfigError, RunConfig, load_config
from .converge import run_convergence, run_split_floor_study
from .energy import energy_matrix, run_energy
from .problems import build_problem
from .reports import write_report
from .scan import scan_max_dt, scan_scaling_sensitivity

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_MISMATCH, EXIT_NUMERICAL = 0, 2, 3, 4, 5

NEEDS_CONFIG = {"converge", "scan", "energy", "floor-study"}


class NumericalFailure(RuntimeError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arkimex", description="ARK IMEX method toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "certify": "property table of catalog methods",
        "boundary": "explicit and implicit stability region boundaries",
        "converge": "convergence study with order fit",
        "scan": "largest stable step over a ladder",
        "energy": "relative energy drift",
        "floor-study": "convergence with the split hyperviscosity post-step",
        "list-methods": "catalog listing",
    }
    for name, text in specs.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--methods", help="comma-separated method names or 'all'")
        p.add_argument("--problem", help="problem id")
        p.add_argument("--out", help="output directory")
        p.add_argument("--ladder", help="comma-separated step sizes")
        p.add_argument("--scale", type=float, help="scale the explicit operator by X")
        p.add_argument("--seed", type=int, help="random seed")
        if name == "certify":
            p.add_argument("--all", action="store_true", help="every catalog method")
    return parser


def _resolve(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.command in NEEDS_CONFIG:
        raise ConfigError(f"{args.command} requires --config")
    else:
        cfg = RunConfig()
    if getattr(args, "all", False):
        cfg.methods = "all"
    if args.methods:
        cfg.methods = "all" if args.methods == "all" else [m.strip() for m in
                                                            args.methods.split(",") if m.strip()]
    if args.problem:
        cfg.problem_id = args.problem
    if args.out:
        cfg.out = args.out
    if args.ladder:
        try:
            cfg.ladder = [float(v) for v in args.ladder.split(",")]
        except ValueError:
            raise ConfigError(f"--ladder: not a list of numbers: {args.ladder!r}") from None
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _methods(cfg: RunConfig):
    try:
        catalog = load_catalog(BUILTIN if cfg.catalog == "builtin" else cfg.catalog)
        if cfg.methods == "all":
            return list(catalog)
        return [get_method(n, catalog) for n in cfg.methods]
    except (CatalogError, UnknownMethodError, OSError) as exc:
        raise ConfigError(str(exc)) from None


def _problem(cfg: RunConfig, scale):
    prob = build_problem(cfg.problem_id, cfg.problem_params)
    return prob.scaled(scale) if scale not in (None, 1.0) else prob


def _need(cfg: RunConfig, *keys):
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise ConfigError(f"configuration is missing {', '.join(missing)}")


def cmd_list_methods(cfg, args):
    rows = [{"method": m.name, "order": m.declared_order, "f_I": m.declared_implicit_solves,
             "f_E": m.declared_explicit_evals, "source": m.source, "provenance": m.provenance}
            for m in _methods(cfg)]
    print(f"{'method':10s} {'order':>5s} {'f_I':>4s} {'f_E':>4s}  provenance")
    for r in rows:
        print(f"{r['method']:10s} {r['order']:5d} {r['f_I']:4d} {r['f_E']:4d}  {r['provenance']}")
    if args.out:
        write_report(cfg.out, "methods", "methods", rows)
    return EXIT_OK


def cmd_certify(cfg, args):
    rows, diag, bad = [], {}, 0
    for m in _methods(cfg):
        rep = certify(m)
        if m.expected is not None:
            mism, verdict = compare_with_expected(rep, m.expected)
        else:
            mism, verdict = [], "yes" if rep.algebraically_stable else "no"
        bad += len(mism)
        rows.append({
            "method": m.name, "f_I": rep.implicit_solves, "f_E": rep.explicit_evals,
            "order_E": rep.order_explicit, "order_I": rep.order_implicit,
            "order_A": rep.order_coupled, "stage_order_E": rep.stage_order_explicit,
            "stage_order_I": rep.stage_order_implicit, "stage_order_A": rep.stage_order_coupled,
            "A": rep.a_stable, "L": rep.l_stable, "B": verdict,
            "SA_DIRK": rep.stiffly_accurate_dirk, "SA_ERK": rep.stiffly_accurate_erk,
            "b": rep.shared_b, "c": rep.shared_c, "max_exp": round(rep.max_imag_step, 6),
            "order_source": rep.order_source,
            "mismatches": ";".join(f"{x.field}={x.computed}(expected {x.expected})" for x in mism),
        })
        diag[m.name] = {"report": rep.as_dict(), "mismatches": [asdict(x) for x in mism]}
    _print_certify(rows)
    write_report(cfg.out, "certify", "certify", rows, diag)
    if bad:
        print(f"certification: {bad} mismatch(es)", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def _print_certify(rows):
    yn = {True: "y", False: "n"}
    print(f"{'method':10s} fI fE  ord  stg  A L B    SA   b c  maxexp")
    for r in rows:
        print(f"{r['method']:10s} {r['f_I']:2d} {r['f_E']:2d}  "
              f"{r['order_E']}{r['order_I']}{r['order_A']}  "
              f"{r['stage_order_E']}{r['stage_order_I']}{r['stage_order_A']}  "
              f"{yn[r['A']]} {yn[r['L']]} {r['B'][0]}  {yn[r['SA_DIRK']]}{yn[r['SA_ERK']]}   "
              f"{yn[r['b']]} {yn[r['c']]}  {r['max_exp']:.3f}"
              + (f"  MISMATCH {r['mismatches']}" if r["mismatches"] else ""))


def cmd_boundary(cfg, args):
    rows, diag = [], {}
    for m in _methods(cfg):
        sb = stability_boundary(m, cfg.resolution)
        rows += [{"re": float(z.real), "im": float(z.imag), "which": f"{m.name}:explicit"}
                 for z in sb.points]
        if not m.is_pure_explicit:
            rows += [{"re": float(z.real), "im": float(z.imag), "which": f"{m.name}:implicit"}
                     for z in rational_boundary(m.implicit, cfg.resolution)]
        diag[m.name] = {"imaginary_axis_crossings": sb.imaginary_axis_crossings(),
                        "failures": sb.failures, "implicit_y": sb.implicit_y,
                        "implicit_modulus": sb.implicit_modulus}
        print(f"{m.name:10s} crossings {np.round(sb.imaginary_axis_crossings(), 4).tolist()}")
    write_report(cfg.out, "boundary", "boundary", rows, diag)
    return EXIT_OK


def cmd_converge(cfg, args):
    _need(cfg, "ladder", "t_final")
    prob = _problem(cfg, args.scale)
    rows, diag, failed = [], {}, False
    for m in _methods(cfg):
        try:
            rep = run_convergence(m, prob, cfg.ladder, cfg.t_final, cfg.reference,
                                  reference_dt=cfg.reference_dt)
        except RuntimeError as exc:
            raise NumericalFailure(str(exc)) from None
        failed |= any(f is not None for f in rep.failures)
        rows += _convergence_rows(rep, cfg.problem_id)
        diag[m.name] = {"beta_large": rep.beta_large, **rep.diagnostics}
        beta = "unavailable" if rep.beta is None else f"{rep.beta:.3f}"
        print(f"{m.name:10s} beta {beta}  floor {rep.floor:.2e}")
    write_report(cfg.out, "converge", "converge", rows, diag, asdict(cfg))
    return EXIT_NUMERICAL if failed else EXIT_OK


def _convergence_rows(rep, problem_id):
    used = {d for d, _ in rep.fit_points}
    return [{"method": rep.method, "problem": problem_id, "dt": d, "error": e,
             "floor": rep.floor, "in_fit": d in used, "alpha": rep.alpha, "beta": rep.beta,
             "failure": f} for d, e, f in zip(rep.dts, rep.errors, rep.failures)]


def cmd_scan(cfg, args):
    _need(cfg, "ladder", "t_final")
    prob = _problem(cfg, args.scale)
    rows, scaling, diag = [], [], {}
    for m in _methods(cfg):
        rep = scan_max_dt(m, prob, cfg.ladder, cfg.t_final, cfg.accuracy)
        for o in rep.outcomes:
            norm = rep.normalized(o.dt)
            rows.append({"method": m.name, "problem": cfg.problem_id, "dt": o.dt,
                         "outcome": o.outcome, "steps": o.steps, "error": o.error,
                         "dt_per_f_I": norm["per_implicit_solve"],
                         "dt_per_f_E": norm["per_explicit_eval"]})
        diag[m.name] = {"largest_stable": rep.largest_stable,
                        "largest_accurate": rep.largest_accurate,
                        "normalized_stable": rep.normalized(rep.largest_stable),
                        "normalized_accurate": rep.normalized(rep.largest_accurate)}
        print(f"{m.name:10s} largest stable {rep.largest_stable}  "
              f"largest accurate {rep.largest_accurate}")
        if len(cfg.scales) > 1 and hasattr(prob, "scaled"):
            for r in scan_scaling_sensitivity(m, prob.scaled, cfg.ladder, cfg.t_final,
                                              cfg.scales, cfg.accuracy):
                scaling.append({"method": m.name, "problem": cfg.problem_id, **r})
    write_report(cfg.out, "scan", "scan", rows, diag, asdict(cfg))
    if scaling:
        write_report(cfg.out, "scaling", "scaling", scaling)
    return EXIT_OK


def cmd_energy(cfg, args):
    prob = _problem(cfg, args.scale)
    methods = _methods(cfg)
    if cfg.dt is None or (cfg.n_steps is None and cfg.t_final is None):
        raise ConfigError("energy needs dt and n_steps (or t_final)")
    n = cfg.n_steps or int(round(cfg.t_final / cfg.dt))
    rows, failed = [], False
    for m in methods:
        rep = run_energy(m, prob, cfg.dt, n, K=cfg.K)
        failed |= rep.failure is not None
        rows += [{"method": m.name, "problem": cfg.problem_id, "dt": cfg.dt,
                  "hyperviscosity": rep.post_step, "K": rep.K, "time": t, "drift": d}
                 for t, d in zip(rep.times, rep.drift)]
        print(f"{m.name:10s} max |drift| {rep.max_abs_drift:.3e}")
    summary = []
    if hasattr(prob, "post_step"):
        summary = energy_matrix(methods, prob, cfg.dt, n * cfg.dt, K=max(cfg.K, 1))
        failed |= any(r["failure"] for r in summary)
    write_report(cfg.out, "energy", "energy", rows, {}, asdict(cfg))
    if summary:
        write_report(cfg.out, "energy_summary", "energy_summary", summary)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_floor_study(cfg, args):
    _need(cfg, "ladder", "t_final")
    prob = _problem(cfg, args.scale)
    if not hasattr(prob, "post_step"):
        raise ConfigError("floor-study needs a problem with a hyperviscosity field")
    rows, diag, failed = [], {}, False
    for m in _methods(cfg):
        for K in sorted({cfg.K, 0}):
            rep = run_split_floor_study(m, prob, cfg.ladder, cfg.t_final, K)
            failed |= all(f is not None for f in rep.failures)
            rows += [dict(r, problem=f"{cfg.problem_id}:K={K}")
                     for r in _convergence_rows(rep, cfg.problem_id)]
            diag[f"{m.name}:K={K}"] = {"beta_large": rep.beta_large, **rep.diagnostics}
            beta = "unavailable" if rep.beta is None else f"{rep.beta:.3f}"
            print(f"{m.name:10s} K={K} beta {beta}")
    write_report(cfg.out, "floor_study", "converge", rows, diag, asdict(cfg))
    return EXIT_NUMERICAL if failed else EXIT_OK


COMMANDS = {"list-methods": cmd_list_methods, "certify": cmd_certify, "boundary": cmd_boundary,
            "converge": cmd_converge, "scan": cmd_scan, "energy": cmd_energy,
            "floor-study": cmd_floor_study}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command == "certify" and not (args.all or args.methods or args.config):
        parser.print_usage(sys.stderr)
        print("certify: pass --all or --methods", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
