"""``cavs`` command line: estimate, regress, simulate, compare-selectors, moments, version."""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .avar import QuadratureError, log_moment_abs, moment_abs, v_population
from .baselines import gg_mle_select, holdout_cv_select
from .core import INF, ConvergenceError, Sample, lgamma_center
from .distributions import SeededRng, parse_dist, sample
from .harness import (
    ExperimentConfig,
    InputError,
    analyze_csv,
    config_from_mapping,
    load_config,
    read_columns,
    run_experiment,
    write_outputs,
)
from .selector import CavsConfig, cavs_estimate, parse_grid

EXIT_INPUT = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, 2-space indent, non-finite floats as strings."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _g6(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def render_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(header)] + [[_g6(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_estimate(args) -> int:
    M, dropped = read_columns(args.input, [args.column])
    y = M[:, 0]
    grid = parse_grid(args.grid, len(y)) if args.grid else None
    r = cavs_estimate(y, CavsConfig(tau=args.tau, grid=grid))
    if args.table:
        head = (f"n = {r.n}  dropped = {dropped}  tau = {_g6(r.tau)}\n"
                f"theta_hat = {_g6(r.theta_hat)}  gamma_hat = {r.gamma_hat}  gamma_max = {r.gamma_max}\n")
        rows = [(str(d.power), d.theta_hat, d.vhat.value, d.interval_low, d.interval_high, d.within_gamma_max)
                for d in r.diagnostics]
        _emit(head + render_table(("gamma", "theta_hat", "vhat", "low", "high", "admitted"), rows), args.output)
    else:
        out = r.as_dict()
        out["dropped"] = dropped
        _emit(dumps(out), args.output)
    return 0


def cmd_regress(args) -> int:
    features = tuple(f.strip() for f in args.features.split(",") if f.strip())
    if not features:
        raise InputError("regress needs at least one feature column")
    cfg = ExperimentConfig(
        kind="csv-analyze", input=args.input, column=args.column, features=features,
        noise_columns=tuple(f.strip() for f in (args.noise_columns or "").split(",") if f.strip()),
        tau_policy="fixed", tau=args.tau, grid=args.grid,
        train_size=args.train_size if args.train_size else 2**62, split_seed=args.split_seed,
    )
    rep = analyze_csv(cfg)
    if args.table:
        head = (f"n = {rep['n']}  train = {rep['train_size']}  test = {rep['test_size']}\n"
                f"gamma_hat = {rep['gamma_hat']}  gamma_max = {rep['gamma_max']}\n")
        rows = [(k, v, rep["ols_coefficients"][k]) for k, v in rep["coefficients"].items()]
        text = head + render_table(("term", "beta_hat", "beta_ols"), rows)
        if "test_mse" in rep:
            text += f"test_mse = {_g6(rep['test_mse'])}  test_mse_ols = {_g6(rep['test_mse_ols'])}\n"
        _emit(text, args.output)
    else:
        _emit(dumps(rep), args.output)
    return 0


_SIM_FLAGS = ("kind", "distributions", "n", "trials", "tau_policy", "tau", "taus", "seed",
              "statistic", "workers", "d", "grid", "input", "column", "features",
              "noise_columns", "train_size", "split_seed")


def cmd_simulate(args) -> int:
    flags = {k: getattr(args, k) for k in _SIM_FLAGS if getattr(args, k) is not None}
    if args.config:
        base = load_config(args.config).to_dict()
        base.pop("output_dir", None)
        # explicit flags override the file
        base = {k: v for k, v in base.items() if v is not None and v != []}
        base.update(flags)
        cfg = config_from_mapping(base)
    else:
        cfg = config_from_mapping(flags)
    out_dir = args.out or cfg.output_dir
    if cfg.kind == "csv-analyze":
        rep = analyze_csv(cfg)
        text = dumps(rep)
        if out_dir:
            from pathlib import Path

            Path(out_dir).mkdir(parents=True, exist_ok=True)
            (Path(out_dir) / "csv-analyze-report.json").write_text(text)
        _emit(text, None)
        return 0
    res = run_experiment(cfg)
    written = write_outputs(res, out_dir, plots=not args.no_plots) if out_dir else []
    if args.table:
        rows = [(c.label, c.distribution, c.slope, c.r2, sum(c.trials), sum(c.failures)) for c in res.curves]
        _emit(render_table(("curve", "distribution", "slope", "r2", "trials", "failures"), rows), None)
    elif out_dir and not args.json:
        _emit("".join(f"{p}\n" for p in written), None)
    else:
        _emit(res.summary_json(), None)
    return 0


def cmd_compare(args) -> int:
    if args.input:
        if not args.column:
            raise InputError("--column is required with --input")
        M, _ = read_columns(args.input, [args.column])
        y = Sample(M[:, 0])
        source = {"input": args.input, "column": args.column}
    else:
        if not args.dist or not args.n:
            raise InputError("give --input/--column or --dist/--n")
        y = sample(args.dist, args.n, SeededRng(args.seed, "compare-selectors"))
        source = {"dist": args.dist, "seed": args.seed}
    if y.n < 4:
        raise InputError("need at least four observations")
    grid = parse_grid(args.grid, y.n) if args.grid else None
    cav = cavs_estimate(y, CavsConfig(tau=args.tau, grid=grid))
    mle = gg_mle_select(y, grid or parse_grid(None, y.n))
    perm = np.random.Generator(np.random.Philox(np.random.SeedSequence([args.seed, 1]))).permutation(y.n)
    half = y.n // 2
    tr, te = Sample(y.values[perm[:half]]), Sample(y.values[perm[half:]])
    cv = holdout_cv_select(tr, te)
    out = {
        **source,
        "n": y.n,
        "cavs": {"gamma": str(cav.gamma_hat), "theta_hat": cav.theta_hat, "gamma_max": str(cav.gamma_max)},
        "gg_mle": {"gamma": str(mle.selected), "theta_hat": lgamma_center(y, mle.selected),
                   "profile": {str(p): v for p, v in mle.values.items()}},
        "holdout_cv": {"gamma": str(cv), "theta_hat": lgamma_center(y, cv)},
    }
    if args.table:
        rows = [(k, out[k]["gamma"], out[k]["theta_hat"]) for k in ("cavs", "gg_mle", "holdout_cv")]
        _emit(render_table(("selector", "gamma", "theta_hat"), rows), args.output)
    else:
        _emit(dumps(out), args.output)
    return 0


def cmd_moments(args) -> int:
    dist = parse_dist(args.dist)
    gammas = [float(g) for g in args.gamma.split(",") if g.strip()]
    if not gammas:
        raise InputError("--gamma needs at least one value")
    a = dist.alpha
    rows = []
    for g in gammas:
        if g < 0:
            raise InputError("moment orders must be >= 0")
        m = moment_abs(dist, g)
        env = math.exp(a * math.log(g) + log_moment_abs(dist, g)) if a is not None and g > 0 else None
        v = v_population(dist, g) if g > 1 else None
        rows.append({"gamma": g, "moment": m, "envelope": env, "v": v})
    if args.table:
        _emit(render_table(("gamma", "E|Z|^gamma", "gamma^alpha*E|Z|^gamma", "V(gamma)"),
                           [(r["gamma"], r["moment"], r["envelope"], r["v"]) for r in rows]), args.output)
    else:
        _emit(dumps({"distribution": str(dist), "alpha": a, "rows": rows}), args.output)
    return 0


def cmd_version(args) -> int:
    sys.stdout.write(f"cavs {__version__}\n")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _fmt_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--json", action="store_true", help="JSON output (default)")
    g.add_argument("--table", action="store_true", help="aligned table, 6 significant digits")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cavs", description="Adaptive L_gamma location and regression estimation.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("estimate", help="select gamma for one CSV column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--grid", default=None, help='e.g. "pow2:max=1024,inf" or "2,3,4,inf"')
    p.add_argument("--output", default=None)
    _fmt_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("regress", help="L_gamma regression of one column on others")
    p.add_argument("--input", required=True)
    p.add_argument("--column", required=True)
    p.add_argument("--features", required=True, help="comma-separated feature columns")
    p.add_argument("--noise-columns", default=None)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--grid", default=None)
    p.add_argument("--train-size", type=int, default=None, help="fit on a random subset of this size")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--output", default=None)
    _fmt_flags(p)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("simulate", help="run an experiment and write CSV/JSON/SVG")
    p.add_argument("--config", default=None, help="flat key = value config file")
    p.add_argument("--kind", default=None)
    p.add_argument("--dists", dest="distributions", default=None, help="comma (or ';') separated tags")
    p.add_argument("--n", default=None, help="comma-separated sample sizes")
    p.add_argument("--trials", default=None)
    p.add_argument("--tau-policy", default=None, choices=("rate", "fixed", "sqrt-log-n"))
    p.add_argument("--tau", default=None)
    p.add_argument("--taus", default=None)
    p.add_argument("--seed", default=None)
    p.add_argument("--statistic", default=None, choices=("median", "mean"))
    p.add_argument("--workers", default=None)
    p.add_argument("--d", default=None)
    p.add_argument("--grid", default=None)
    p.add_argument("--input", default=None)
    p.add_argument("--column", default=None)
    p.add_argument("--features", default=None)
    p.add_argument("--noise-columns", default=None)
    p.add_argument("--train-size", default=None)
    p.add_argument("--split-seed", default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--no-plots", action="store_true")
    _fmt_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare-selectors", help="CAVS vs GG-MLE vs held-out CV on one sample")
    p.add_argument("--input", default=None)
    p.add_argument("--column", default=None)
    p.add_argument("--dist", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--grid", default=None)
    p.add_argument("--output", default=None)
    _fmt_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("moments", help="absolute moments and asymptotic variance of a noise family")
    p.add_argument("--dist", required=True)
    p.add_argument("--gamma", required=True, help="comma-separated orders")
    p.add_argument("--output", default=None)
    _fmt_flags(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("version", help="print the version")
    p.set_defaults(func=cmd_version)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, QuadratureError, FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"cavs: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (InputError, ValueError, OSError) as exc:
        sys.stderr.write(f"cavs: error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
