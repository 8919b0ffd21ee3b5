"""Command-line entry point.

Subcommands
-----------
analyze   tabulate hitting times and cumulative values over a value grid
simulate  Monte Carlo estimates for every (scheme, profile) pair
optimize  optimal BIN and constant PPP prices per profile
compare   scheme metrics side by side, with the winner of each metric
verify    run the verification suite; exit 1 on any failed check

Exit codes: 0 success, 1 failed check, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import analytics as A
from .config import ExperimentConfig, load_config
from .errors import ConfigError, NotClosedFormError, PPPLabError, UnsupportedError
from .process import BinaryValueModel, RandomWalkModel
from .schemes import closed_form_metrics, optimal_bin, optimal_constant_ppp
from .sim.engine import estimate

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

_DEFAULTS_HELP = """\
Config file (JSON) keys and defaults:
  distribution     {"kind": "uniform"}   kinds: uniform, power{k}, point{v}, table{x, F}
  process          {"kind": "walk", "delta": 0.1}
                   binary{stop: geometric|deterministic{slope, intercept} | table{edges, support, probs}}
                   markov{increments: {values, probs}} or markov{delta, shape: symmetric|skewed}
  schemes          [{"kind": "ppp", "price": 0.5}, {"kind": "bin", "price": "optimal"}]
                   kinds: bin, ppp, free_ppp, free_bin, rto, sequence
  profiles         [{"alpha": 0}]        alpha is a number >= 0 or "inf"
  n_samples        100000
  seed             none; required by simulate and by compare when simulation is needed
  out              stdout
  format           json
  grid_resolution  10000
  slack_constant   10
  v_grid           the walk grid (analyze)
  workers          1
"""


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(cfg: ExperimentConfig, payload: dict, rows: list[dict], columns: list[str]):
    if cfg.format == "json":
        text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _jsonable(r.get(k)) for k in columns})
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _record_base(cfg, scheme, profile, model, F):
    return {"scheme": scheme.to_dict(), "profile": profile.to_dict(),
            "model": model.to_dict(), "F": F.to_dict()}


# ---------------------------------------------------------------------------

def cmd_analyze(cfg: ExperimentConfig) -> int:
    model = cfg.build_process()
    if cfg.v_grid is not None:
        v = np.asarray(cfg.v_grid, dtype=float)
    elif isinstance(model, RandomWalkModel):
        v = model.grid
    else:
        v = np.linspace(0.0, 1.0, 11)
    if isinstance(model, RandomWalkModel):
        d = model.delta
        prices = sorted({float(s["price"]) for s in cfg.schemes
                         if isinstance(s, dict) and s.get("kind") == "ppp"
                         and isinstance(s.get("price"), (int, float))})
        columns = ["v", "absorption_time", "cumulative_value", "worst_case_cumulative",
                   "worst_case_cumulative_approx"]
        columns += [f"ppp_utility_{p:g}" for p in prices]
        thresholds = {f"{p:g}": {"continuous": A.rn_threshold(p),
                                 "grid": A.rn_grid_threshold(p, d)} for p in prices}
        rows = []
        for x in v:
            r = {"v": float(x), "absorption_time": A.absorption_time(x, d),
                 "cumulative_value": A.cumulative_value(x, d),
                 "worst_case_cumulative": A.worst_case_cumulative(x, d),
                 "worst_case_cumulative_approx": A.worst_case_cumulative_approx(x, d)}
            for p in prices:
                w = min(thresholds[f"{p:g}"]["grid"], float(x))
                r[f"ppp_utility_{p:g}"] = A.rn_ppp_utility(x, w, p, d)
            rows.append(r)
        meta = {"delta": d, "thresholds": thresholds}
    elif isinstance(model, BinaryValueModel):
        columns = ["v", "expected_stop", "min_stop", "cumulative_value"]
        rows = [{"v": float(x), "expected_stop": float(model.expected_stop(x)),
                 "min_stop": float(model.min_stop(x)),
                 "cumulative_value": A.binary_cumulative(x, model)} for x in v]
        meta = {}
    else:
        raise ConfigError("analyze supports the walk and binary processes")
    _emit(cfg, {"command": "analyze", "model": model.to_dict(), "columns": columns,
                "rows": rows, **meta}, rows, columns)
    return EXIT_OK


def _summary_rows(record):
    out = []
    for metric, est in record["metrics"].items():
        if isinstance(est, dict) and "mean" in est:
            out.append({"scheme": json.dumps(_jsonable(record["scheme"]), sort_keys=True),
                        "profile": _jsonable(record["profile"]["alpha"]),
                        "metric": metric, "mean": est["mean"], "std_err": est["std_err"],
                        "ci_low": est["ci99"][0], "ci_high": est["ci99"][1],
                        "n": est["n_samples"]})
    return out


def cmd_simulate(cfg: ExperimentConfig) -> int:
    seed = cfg.require_seed()
    model, F = cfg.build_process(), cfg.build_distribution()
    records, rows = [], []
    for profile in cfg.build_profiles():
        for scheme in cfg.build_schemes(profile):
            try:
                summary = estimate(scheme, profile, model, F, int(cfg.n_samples), seed,
                                   workers=int(cfg.workers))
            except (UnsupportedError, NotClosedFormError) as exc:
                raise ConfigError(f"cannot simulate {scheme} for {profile}: {exc}") from exc
            rec = {**_record_base(cfg, scheme, profile, model, F),
                   "n": int(cfg.n_samples), "seed": seed, "metrics": summary.to_dict()}
            records.append(rec)
            rows.extend(_summary_rows(rec))
    columns = ["scheme", "profile", "metric", "mean", "std_err", "ci_low", "ci_high", "n"]
    _emit(cfg, {"command": "simulate", "results": records}, rows, columns)
    return EXIT_OK


def cmd_optimize(cfg: ExperimentConfig) -> int:
    model, F = cfg.build_process(), cfg.build_distribution()
    rows = []
    for profile in cfg.build_profiles():
        opt = optimal_bin(F, model, profile, int(cfg.grid_resolution))
        rows.append({"scheme": "bin", "alpha": profile.alpha, "price": opt.price,
                     "revenue": opt.revenue, "threshold": opt.threshold, "note": ""})
        try:
            p, rev = optimal_constant_ppp(F, model, profile)
            rows.append({"scheme": "ppp", "alpha": profile.alpha, "price": p, "revenue": rev,
                         "threshold": None, "note": ""})
        except (NotClosedFormError, UnsupportedError) as exc:
            rows.append({"scheme": "ppp", "alpha": profile.alpha, "price": None,
                         "revenue": None, "threshold": None, "note": str(exc)})
    if isinstance(model, RandomWalkModel):
        for r in rows:
            r["revenue_delta2"] = None if r["revenue"] is None else r["revenue"] * model.delta ** 2
    columns = ["scheme", "alpha", "price", "revenue", "threshold", "note"]
    if isinstance(model, RandomWalkModel):
        columns.insert(4, "revenue_delta2")
    _emit(cfg, {"command": "optimize", "model": model.to_dict(), "F": F.to_dict(),
                "results": rows}, rows, columns)
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig) -> int:
    if len(cfg.schemes) < 2:
        raise ConfigError("compare needs at least two schemes")
    model, F = cfg.build_process(), cfg.build_distribution()
    scale = model.delta ** 2 if isinstance(model, RandomWalkModel) else 1.0
    rows = []
    for profile in cfg.build_profiles():
        group = []
        for scheme in cfg.build_schemes(profile):
            try:
                m = closed_form_metrics(scheme, F, model, profile)
                vals, source = (m.revenue, m.welfare, m.utility), "closed_form"
            except (NotClosedFormError, UnsupportedError):
                s = estimate(scheme, profile, model, F, int(cfg.n_samples), cfg.require_seed(),
                             workers=int(cfg.workers))
                vals, source = (s.revenue.mean, s.welfare.mean, s.utility.mean), "monte_carlo"
            group.append({"scheme": json.dumps(_jsonable(scheme.to_dict()), sort_keys=True),
                          "alpha": profile.alpha, "source": source,
                          "revenue": vals[0], "welfare": vals[1], "utility": vals[2],
                          "revenue_scaled": vals[0] * scale, "welfare_scaled": vals[1] * scale,
                          "utility_scaled": vals[2] * scale})
        for metric in ("revenue", "welfare", "utility"):
            best = max(r[metric] for r in group)
            for r in group:
                r[f"best_{metric}"] = bool(r[metric] >= best - 1e-12 * max(1.0, abs(best)))
        rows.extend(group)
    columns = ["scheme", "alpha", "source", "revenue", "welfare", "utility", "revenue_scaled",
               "welfare_scaled", "utility_scaled", "best_revenue", "best_welfare",
               "best_utility"]
    _emit(cfg, {"command": "compare", "model": model.to_dict(), "F": F.to_dict(),
                "scale": scale, "results": rows}, rows, columns)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, scale: float = 1.0, only=None) -> int:
    from .verify import run_all

    checks = run_all(scale, float(cfg.slack_constant), only, seed=cfg.seed)
    for c in checks:
        print(c.line(), file=sys.stderr)
    rows = [c.to_dict() for c in checks]
    passed = all(c.passed for c in checks)
    _emit(cfg, {"command": "verify", "passed": passed, "checks": rows}, rows,
          ["criterion", "name", "passed", "measured", "expected", "detail"])
    return EXIT_OK if passed else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="master seed for Monte Carlo")
    common.add_argument("--n", type=int, dest="n_samples", help="Monte Carlo sample size")
    common.add_argument("--delta", type=float, help="walk step δ (1/δ must be an integer)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format (default json)")

    parser = argparse.ArgumentParser(
        prog="ppplab", description="Pay-per-play versus buy-it-now pricing toolkit.",
        epilog=_DEFAULTS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("analyze", "tabulate closed forms over a value grid"),
                       ("simulate", "Monte Carlo estimates per scheme and profile"),
                       ("optimize", "optimal BIN and constant PPP prices"),
                       ("compare", "compare at least two schemes")):
        sub.add_parser(name, parents=[common], help=text, description=text, epilog=_DEFAULTS_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    v = sub.add_parser("verify", parents=[common], help="run the verification suite",
                       description="Run every criterion; exit 1 if any check fails.",
                       epilog=_DEFAULTS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    v.add_argument("--quick", action="store_true",
                   help="shrink Monte Carlo sample sizes tenfold (never below 10^4)")
    v.add_argument("--criteria", help="comma-separated criterion numbers to run (default all)")
    v.add_argument("--slack", type=float, dest="slack_constant",
                   help="slack constant of the general-walk checks (default 10)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {"seed": args.seed, "n_samples": args.n_samples, "delta": args.delta,
                 "out": args.out, "format": args.format,
                 "slack_constant": getattr(args, "slack_constant", None)}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "optimize":
            return cmd_optimize(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        only = None
        if args.criteria:
            try:
                only = {int(x) for x in args.criteria.split(",") if x.strip()}
            except ValueError as exc:
                raise ConfigError(f"--criteria must list integers: {exc}") from exc
            if not only or not only <= set(range(1, 13)):
                raise ConfigError("--criteria takes numbers from 1 to 12")
        return cmd_verify(cfg, 0.1 if args.quick else 1.0, only)
    except ConfigError as exc:
        print(f"ppplab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PPPLabError as exc:
        print(f"ppplab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
