"""Regenerate the committed golden statistics and CLI fixtures.

Run from the repository root: ``python3 tests/fixtures/generate_golden.py``.
Budgets here are larger than the ones the tests use. Proportions record a
binomial standard error; slopes are replicated over independent seeds at the
test budget and record the per-run standard deviation.
"""

import json
import math
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from cavs.distributions import SeededRng, sample
from cavs.harness import ExperimentConfig, run_experiment
from cavs.regress import cavs_regress
from cavs.selector import CavsConfig, cavs_estimate

HERE = Path(__file__).parent


def proportion(hits, total):
    p = hits / total
    return {"value": p, "se": math.sqrt(max(p * (1 - p), 0.25 / total) / total), "trials": total}


def regress_uniform(seed=11, trials=400, n=400, d=3):
    hits = 0
    for t in range(trials):
        rng = SeededRng(seed, "golden/regress-uniform", t)
        g = rng.generator(3)
        X = np.c_[np.ones(n), g.standard_normal((n, d - 1))]
        beta0 = rng.generator(2).uniform(-10, 10, d)
        y = X @ beta0 + sample("uniform", n, rng).values
        hits += cavs_regress(X, y).gamma_hat.value > 2
    return {**proportion(hits, trials), "seed": seed, "n": n, "d": d}


def column_selection(dist, pred, seed, trials=400, n=626, shift=0.0):
    hits = 0
    for t in range(trials):
        g = SeededRng(seed, f"golden/column/{dist}", t).generator(0)
        y = g.uniform(0, 1, n) if dist == "uniform01" else g.exponential(1.0, n)
        hits += pred(cavs_estimate(y, CavsConfig(tau=1.0)).gamma_hat.value)
    return {**proportion(hits, trials), "seed": seed, "n": n}


def replicated_slope(cfg, replicates=10):
    """Slope at the test budget over independent seeds: mean and per-run sd."""
    slopes = [run_experiment(replace(cfg, seed=cfg.seed + k)).curves[0].slope for k in range(replicates)]
    return {"value": float(np.mean(slopes)), "sd": float(np.std(slopes, ddof=1)),
            "replicates": replicates, "trials": cfg.trials, "seed": cfg.seed, "n_grid": list(cfg.n_grid)}


INVARIANCE_FAMILIES = ("uniform", "gaussian", "semicircle", "ushape", "tgauss:t=2", "mixture", "gg:shape=4")


def invariance_samples(seed=77, count=50):
    """Fifty mixed-family samples with sizes in [5, 400] and shifted centers."""
    g = np.random.default_rng(seed)
    out = []
    for k in range(count):
        fam = INVARIANCE_FAMILIES[k % len(INVARIANCE_FAMILIES)]
        n = int(g.integers(5, 401))
        s = sample(fam, n, SeededRng(seed, "invariance", k))
        loc, scale = g.uniform(-50, 50), 10.0 ** g.uniform(-2, 2)
        out.append({"family": fam, "values": [float(v) for v in loc + scale * s.values]})
    (HERE / "invariance_samples.json").write_text(json.dumps(out, indent=1) + "\n")


def main():
    out = {
        "regress_uniform_gamma_gt_2": regress_uniform(),
        "column_uniform01_gamma_gt_2": column_selection("uniform01", lambda g: g > 2, seed=21),
        "column_exponential_gamma_eq_2": column_selection("exponential", lambda g: g == 2, seed=22),
        "trunc_t25_slope_n_le_200": replicated_slope(
            ExperimentConfig(kind="trunc-sweep", distributions=("tgauss:t=2.5",),
                             n_grid=(50, 100, 200), trials=300, seed=3100)),
        "trunc_t1_slope": replicated_slope(
            ExperimentConfig(kind="trunc-sweep", distributions=("tgauss:t=1",), trials=150, seed=3200)),
    }
    tau = run_experiment(ExperimentConfig(kind="tau-sweep", distributions=("uniform:unitvar",),
                                          taus=(1.0,), trials=500, seed=41))
    c = {x.label: x for x in tau.curves}
    out["tau1_uniform_ratio_6400"] = {
        "value": c["tau-sweep-tau1"].errors[-1] / c["tau-sweep-mean"].errors[-1],
        "trials": 500, "seed": 41,
    }
    invariance_samples()
    (HERE / "golden_stats.json").write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")

    # CLI fixture: a seeded Unif[-1, 1] column shifted to 3 and its estimate report
    g = SeededRng(2024, "fixture/uniform-column").generator(0)
    y = 3.0 + g.uniform(-1.0, 1.0, 300)
    with open(HERE / "uniform_column.csv", "w") as fh:
        fh.write("id,y\n")
        for i, v in enumerate(y):
            fh.write(f"{i},{float(v)!r}\n")
    cp = subprocess.run([sys.executable, "-m", "cavs", "estimate", "--input", str(HERE / "uniform_column.csv"),
                         "--column", "y", "--json"], capture_output=True, text=True, check=True)
    (HERE / "estimate_uniform_golden.json").write_text(cp.stdout)


if __name__ == "__main__":
    main()
