"""Command-line front end.

Subcommands: pgf, limits, simulate, verify, explosion, table.  Exit codes:
0 pass, 1 verification failed, 2 config error, 3 runtime failure.  All
outputs are deterministic functions of (config, seed): CSV with a mandatory
header row, '.' decimal separator, UTF-8; JSON with sorted keys.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from pathlib import Path

import numpy as np

from .config import (ConfigError, EXPLOSION_SCHEMA, EXPERIMENT_SCHEMA,
                     LIMITS_SCHEMA, PGF_SCHEMA, SIMULATE_SCHEMA,
                     experiment_from_json, explosion_from_json, load_json,
                     validate, _params_from)
from .harness import run_experiment, run_explosion_study
from .limits import (CsbpProfile, GaussianLimitProfile, StableOUProfile,
                     c_profile, mean_and_variance, normalizer_an)
from .offspring import (GeneralizedNeveu, LuriaDelbruck, NeveuHarmonic,
                        ProcessParams, assumption_a, moment_profile,
                        slowly_varying_L, tail_constants)
from .pgf import (SolverConfig, conditional_pgf_G, csbp_residual, evaluate_F,
                  has_closed_form, transfer_residual)
from .simulate import SimConfig, simulate_ensemble
from .stable import LimitSampleRequest, draw_limit


def _write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def _fmt(x):
    return "" if x is None else repr(float(x))


def _set_threads(n):
    if n is None:
        return
    import numba
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# ---- pgf -------------------------------------------------------------------

def cmd_pgf(args) -> int:
    obj = load_json(args.config)
    validate(obj, PGF_SCHEMA)
    params = _params_from(obj)
    solver = SolverConfig(rel_tol=obj.get("rel_tol", 1e-10),
                          abs_tol=obj.get("abs_tol", 1e-12))
    closed = has_closed_form(params)
    aa = assumption_a(params.offspring)
    prof = moment_profile(params)
    try:
        tc = tail_constants(params.offspring)
    except ValueError:
        tc = None
    csbp_ok = tc is not None and math.isfinite(tc.A) and tc.A > 0 \
        and tc.B is not None and math.isfinite(tc.B)
    rows = [["s", "t", "F_closed", "F_ode", "F_diff", "G",
             "transfer_residual", "csbp_residual"]]
    for s in obj["s_grid"]:
        for t in obj["t_grid"]:
            f_ode = evaluate_F(params, s, t, solver, method="ode")
            f_closed = evaluate_F(params, s, t, solver, method="closed") if closed else None
            g = conditional_pgf_G(params, s, t, solver)
            tr = None
            if aa is not None and s < 1.0 and math.isfinite(prof.mean_m):
                tr = transfer_residual(params, aa[0], s, t, solver)
            cr = csbp_residual(params, s, t, solver) if (csbp_ok and s < 1.0) else None
            diff = None if f_closed is None else abs(f_closed - f_ode)
            rows.append([repr(float(s)), repr(float(t)), _fmt(f_closed),
                         _fmt(f_ode), _fmt(diff), _fmt(g), _fmt(tr), _fmt(cr)])
    _write_csv(args.out, rows)
    print(f"pgf table written to {args.out} ({len(rows) - 1} rows)")
    return 0


# ---- limits ----------------------------------------------------------------

def cmd_limits(args) -> int:
    obj = load_json(args.config)
    validate(obj, LIMITS_SCHEMA)
    if "sample" in obj:
        sob = dict(obj["sample"])
        if args.seed is not None:
            sob["seed"] = args.seed
        req = LimitSampleRequest(regime=sob["regime"], count=sob["count"],
                                 seed=sob["seed"],
                                 variance=sob.get("variance", 1.0),
                                 alpha=sob.get("alpha", 0.0),
                                 c=sob.get("c", 0.0), beta=sob.get("beta", 0.0))
        draws = draw_limit(req)
        rows = [["draw"]] + [[repr(float(v))] for v in draws]
        _write_csv(args.out, rows)
        print(f"{req.count} {req.regime} limit draws written to {args.out}")
        return 0
    params = _params_from(obj)
    prof = moment_profile(params)
    times = obj.get("times", [0.5, 1.0, 2.0])
    n_values = obj.get("n_values", [])
    aa = assumption_a(params.offspring)
    try:
        tc = tail_constants(params.offspring)
    except ValueError:
        tc = None
    rows = [["t", "m", "sigma2", "c", "alpha_t", "beta_t"]]
    csbp = None
    if tc is not None and math.isfinite(tc.A) and tc.A > 0 and tc.B is not None:
        csbp = CsbpProfile(A=tc.A, B=tc.B, rate=params.a)
    for t in times:
        mv = mean_and_variance(params, t)
        c_val = c_profile(params, aa[0], t) if (aa and math.isfinite(prof.mean_m)) else None
        rows.append([repr(float(t)),
                     _fmt(mv.m if math.isfinite(mv.m) else None),
                     _fmt(mv.sigma2 if math.isfinite(mv.sigma2) else None),
                     _fmt(c_val),
                     _fmt(csbp.alpha_t(t) if csbp else None),
                     _fmt(csbp.beta_t(t) if csbp else None)])
    if aa and n_values:
        rows.append(["n", "a_n", "", "", "", ""])
        for n in n_values:
            rows.append([str(n), repr(normalizer_an(params.offspring, aa[0], n)),
                         "", "", "", ""])
    _write_csv(args.out, rows)
    print(f"limit profile written to {args.out}")
    return 0


# ---- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    obj = load_json(args.config)
    validate(obj, SIMULATE_SCHEMA)
    params = _params_from(obj)
    seed = args.seed if args.seed is not None else obj["seed"]
    try:
        cfg = SimConfig(initial_n=obj["initial_n"],
                        grid=tuple(obj["grid"]),
                        horizon=obj.get("horizon", max(obj["grid"])),
                        replicates=obj["replicates"], seed=int(seed),
                        explosion_cap=obj.get("explosion_cap", 10 ** 9))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _set_threads(args.threads)
    t0 = time.time()
    ens = simulate_ensemble(params, cfg)
    ens.to_csv(args.out)
    print(f"{cfg.replicates} paths ({int(ens.events.sum())} events, "
          f"{time.time() - t0:.1f}s) written to {args.out}")
    return 0


# ---- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    obj = load_json(args.config)
    config = experiment_from_json(obj, seed_override=args.seed,
                                  significance_override=args.significance)
    _set_threads(args.threads)
    t0 = time.time()
    report = run_experiment(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    _write_csv(out_dir / "report.csv", report.csv_rows())
    elapsed = time.time() - t0
    n_pass = sum(1 for c in report.checks if c["pass"])
    print(f"experiment {report.id}: {n_pass}/{len(report.checks)} checks passed "
          f"in {elapsed:.1f}s -> {out_dir}/report.json")
    return 0 if report.passed else 1


# ---- explosion ---------------------------------------------------------------

def cmd_explosion(args) -> int:
    obj = load_json(args.config)
    config = explosion_from_json(obj, seed_override=args.seed)
    _set_threads(args.threads)
    report = run_explosion_study(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    _write_csv(out_dir / "report.csv", report.csv_rows())
    mean_t = report.info.get("mean_T")
    print(f"explosion study {report.id}: mean_T="
          f"{'n/a' if mean_t is None else format(mean_t, '.4f')} "
          f"({'pass' if report.passed else 'FAIL'}) -> {out_dir}/report.json")
    return 0 if report.passed else 1


# ---- table -------------------------------------------------------------------

def cmd_table(args) -> int:
    """Summary table of the three infinite-mean examples: pgf, L, alpha(t),
    beta(t), with numeric values at rate 1, t = 1."""
    b, c = args.b, args.c
    bl = args.bl
    entries = [
        ("harmonic p_k = 1/(k(k-1))", NeveuHarmonic(),
         "s + (1-s) log(1-s)", "1 + log x"),
        (f"generalized (b={b}, c={c})", GeneralizedNeveu(b=b, c=c),
         "s + (1-s)(c + b log(1-s))", "1 - c + b log x"),
        (f"Luria-Delbrueck (b={bl})", LuriaDelbruck(b=bl),
         "(1-s)^(b(1-s)/s)", "x(1 - x^(b/(1-x)))"),
    ]
    rows = [["example", "pgf", "L(x)", "alpha(t)", "beta(t)",
             "alpha(1) at a=1", "beta(1) at a=1", "L(e)"]]
    for label, spec, pgf_str, l_str in entries:
        tc = tail_constants(spec)
        prof = CsbpProfile(A=tc.A, B=tc.B, rate=1.0)
        alpha_sym = "exp(-aAt), A=" + repr(tc.A)
        beta_sym = f"exp((B-1)/A (1-alpha(t))), B={tc.B!r}"
        rows.append([label, pgf_str, l_str, alpha_sym, beta_sym,
                     repr(prof.alpha_t(1.0)), repr(prof.beta_t(1.0)),
                     repr(slowly_varying_L(spec, math.e))])
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    if args.out:
        _write_csv(args.out, rows)
        print(f"table written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchlab",
        description="Branching-process scaling-limit laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output path")
        p.add_argument("--threads", type=int, default=None,
                       help="simulation thread count")

    p = sub.add_parser("pgf", help="tabulate F(s,t), G(s,t) and residuals")
    common(p)
    p.set_defaults(func=cmd_pgf, default_out="pgf.csv")

    p = sub.add_parser("limits", help="limit-profile tables or limit-law draws")
    common(p)
    p.set_defaults(func=cmd_limits, default_out="limits.csv")

    p = sub.add_parser("simulate", help="simulate an ensemble to CSV")
    common(p)
    p.set_defaults(func=cmd_simulate, default_out="ensemble.csv")

    p = sub.add_parser("verify", help="run a convergence experiment")
    common(p)
    p.add_argument("--significance", type=float, default=None)
    p.set_defaults(func=cmd_verify, default_out="verify_out")

    p = sub.add_parser("explosion", help="explosion-time study")
    common(p)
    p.set_defaults(func=cmd_explosion, default_out="explosion_out")

    p = sub.add_parser("table", help="summary table of the infinite-mean examples")
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--c", type=float, default=0.2)
    p.add_argument("--bl", type=float, default=1.0,
                   help="Luria-Delbrueck parameter")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_table, default_out=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out", None) is None:
        args.out = args.default_out
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure contract
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
