"""Acceptance criteria, one PASS/FAIL line each in the terminal summary.

All simulation criteria share one base seed fixed up front (ACCEPTANCE_SEED)
and are run at the stated desk scale.
"""
import math
import time

import numpy as np
import pytest

from conftest import record_acceptance
from oracles import enumerate_sf_extrema, logit, pairwise_auc
from optopro import (FittedModel, LifParams, build_design, deviance_r2, fit_logistic,
                     format_table, predict_prob, roc_curve, sf_extrema, simulate_dataset,
                     simulate_lif)
from optopro.glm import INTERCEPT, fit_matrix, log_likelihood, score
from optopro.pointproc import DesignMatrix, PRO_TERMS
from optopro.studies import (StudyConfig, run_auc_study, run_parameter_sweep,
                             run_significance_study)

ACCEPTANCE_SEED = 1
ANALYTIC_CROSSING = 21 * math.log(1.5)


def check(number, title, passed, detail=""):
    record_acceptance(number, title, bool(passed), detail)
    assert passed, detail


def test_criterion_1_sf_extrema_match_enumeration():
    cases = [(M, K) for M in range(1, 13) for K in range(1, min(M, 5) + 1)]
    start = time.perf_counter()
    got = {mk: sf_extrema(*mk) for mk in cases}
    elapsed = time.perf_counter() - start
    bad = []
    for (M, K), ex in got.items():
        hi, lo, argmaxes, argmins = enumerate_sf_extrema(M, K)
        q, r = divmod(M, K)
        balanced = (q + 1,) * r + (q,) * (K - r)
        if (ex.max_value != M * M or ex.max_value != hi or ex.min_value != lo
                or tuple(ex.argmax) not in argmaxes or tuple(ex.argmin) != balanced
                or balanced not in argmins):
            bad.append((M, K))
    check(1, "SF extrema vs exhaustive compositions", not bad and elapsed < 1.0,
          f"cases={len(cases)} mismatches={bad} runtime={elapsed:.4f}s")


def test_criterion_2_glm_correctness():
    worst = {}
    # two groups: 2/10 and 8/10 events
    X = np.column_stack([np.ones(20), np.r_[np.zeros(10), np.ones(10)]])
    y = np.r_[np.ones(2), np.zeros(8), np.ones(8), np.zeros(2)]
    m = fit_matrix(X, y, ["x"])
    worst["two_group"] = max(abs(m.coefficients[0] - logit(0.2)),
                             abs(m.coefficients[1] - (logit(0.8) - logit(0.2))))
    y0 = np.r_[np.ones(3), np.zeros(7)]
    m0 = fit_matrix(np.ones((10, 1)), y0, [])
    worst["intercept_only"] = abs(m0.coefficients[0] - logit(0.3))

    score_max = 0.0
    grad_rel = 0.0
    rng = np.random.Generator(np.random.PCG64(ACCEPTANCE_SEED))
    for i in range(5):
        d = build_design(simulate_dataset(LifParams(), 5000, 0.14, seed=ACCEPTANCE_SEED + i))
        fit = fit_logistic(d)
        if fit.converged:
            score_max = max(score_max, float(np.max(np.abs(
                score(fit.coefficients, d.X, d.responses)))))
        beta = fit.coefficients + rng.normal(0, 0.3, fit.coefficients.size)
        g = score(beta, d.X, d.responses)
        h = 1e-5
        for j in range(beta.size):
            e = np.zeros_like(beta)
            e[j] = h
            fd = (log_likelihood(beta + e, d.X, d.responses)
                  - log_likelihood(beta - e, d.X, d.responses)) / (2 * h)
            grad_rel = max(grad_rel, abs(fd - g[j]) / max(abs(g[j]), 1.0))
    score_max = max(score_max, float(np.max(np.abs(score(m.coefficients, X, y)))),
                    float(np.max(np.abs(score(m0.coefficients, np.ones((10, 1)), y0)))))
    ok = (worst["two_group"] < 1e-6 and worst["intercept_only"] < 1e-6
          and score_max < 1e-6 and grad_rel < 1e-4)
    check(2, "GLM closed forms, score equations, gradient", ok,
          f"two_group={worst['two_group']:.1e} intercept={worst['intercept_only']:.1e} "
          f"max|score|={score_max:.1e} grad_rel={grad_rel:.1e}")


def test_criterion_3_auc_matches_pairwise_count():
    rng = np.random.Generator(np.random.PCG64(ACCEPTANCE_SEED))
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 101))
        s = np.round(rng.random(n), int(rng.integers(1, 4)))
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        worst = max(worst, abs(roc_curve(s, y).auc - pairwise_auc(s, y)))
    check(3, "trapezoid AUC vs pairwise Mann-Whitney", worst < 1e-12, f"max diff={worst:.1e}")


def test_criterion_4_lif_analytic():
    tr = simulate_lif(LifParams(), np.ones(4, dtype=np.uint8))
    err100 = abs(tr.crossing_times_ms[0] - ANALYTIC_CROSSING)
    in_bin1 = tr.spikes[:2].tolist() == [0, 1]
    errs = [err100]
    for sub in (200, 400):
        t = simulate_lif(LifParams(substeps_per_bin=sub), np.ones(4, dtype=np.uint8))
        errs.append(abs(t.crossing_times_ms[0] - ANALYTIC_CROSSING))
    fl = np.zeros(20, dtype=np.uint8)
    fl[3] = 1
    peak = simulate_lif(LifParams(), fl).peak_potential
    ok = err100 < 0.1 and in_bin1 and errs[0] > errs[1] > errs[2] and abs(peak - 0.6357) <= 0.01
    check(4, "LIF first crossing, convergence, isolated peak", ok,
          f"crossing={tr.crossing_times_ms[0]:.4f}ms errors={[round(float(e), 4) for e in errs]} "
          f"bin1={in_bin1} peak={peak:.4f}")


@pytest.mark.slow
def test_criterion_5_significance_study():
    res = run_significance_study(StudyConfig(n_replications=1000, n_bins=5000,
                                             base_seed=ACCEPTANCE_SEED))
    a = res.aggregates
    f = {t: a[f"sig_freq_{t}"] for t in PRO_TERMS}
    ok = (all(f[t] >= 0.995 for t in ("CF", "SF", "CF:SF"))
          and abs(f["PF"] - 0.88) <= 0.04 and abs(a["mean_r2"] - 0.5681) <= 0.01)
    check(5, "significance frequencies and mean R2, 1000 reps", ok,
          " ".join(f"{t}={v:.3f}" for t, v in f.items())
          + f" mean_r2={a['mean_r2']:.4f} used={a['n_used']}/{a['n_replications']}")


@pytest.mark.slow
def test_criterion_6_out_of_sample_auc():
    res = run_auc_study(StudyConfig(n_replications=20, n_bins=10000,
                                    base_seed=ACCEPTANCE_SEED))
    auc = res.aggregates["mean_auc"]
    check(6, "out-of-sample AUC, 20 reps of 10000 bins", 0.970 <= auc <= 0.980,
          f"mean_auc={auc:.5f} se={res.aggregates['se_auc']:.5f}")


EXPECTED_SIGNS = {
    "C": {"PF": 1, "CF": -1, "SF": 1, "CF:SF": 1},
    "R": {"PF": -1, "CF": 1, "SF": 1, "CF:SF": -1},
}


@pytest.mark.slow
def test_criterion_7_sweep_slope_signs():
    cfg = StudyConfig(n_replications=30, n_bins=5000, base_seed=ACCEPTANCE_SEED)
    failures = []
    parts = []
    dropped_pf = None
    for which, signs in EXPECTED_SIGNS.items():
        res = run_parameter_sweep(which, cfg)
        a = res.aggregates
        for t, sign in signs.items():
            slope, p = a[f"slope_{t}"], a[f"slope_p_{t}"]
            good = math.isfinite(slope) and np.sign(slope) == sign and p < 0.01
            parts.append(f"{which}.{t}={slope:+.3f}(p={p:.1e})")
            if not good:
                failures.append(f"{which}.{t}")
        if which == "C":
            dropped_pf = a["dropped_frac_PF"]
    drop_ok = abs(dropped_pf - 0.0927) <= 0.05
    if not drop_ok:
        failures.append("C.PF dropped fraction")
    check(7, "C and R sweep slope signs", not failures,
          " ".join(parts) + f" C.PF_dropped={dropped_pf:.4f} failing={failures}")


def reported_model():
    return FittedModel(
        (INTERCEPT, "PF", "CF", "SF", "CF:SF"),
        np.array([-24.310, -1.447, 15.719, 10.347, -7.108]),
        np.array([4.115, 0.134, 2.821, 2.204, 1.507]),
        np.array([-5.907, -10.796, 5.572, 4.696, -4.716]),
        np.array([3.47e-09, 1e-17, 2.52e-08, 2.66e-06, 2.41e-06]),
        null_deviance=1400.80, residual_deviance=895.38, null_df=4867,
        residual_df=4863, aic=905.38, converged=True, iterations=0)


def test_criterion_8_reported_model_properties():
    model = reported_model()
    r2 = deviance_r2(model)
    pf, cf, sf = 0.6931, 1.0986, 0.8746
    d = DesignMatrix(np.empty((1, 4)), ("PF", "CF", "SF", "CF:SF"), np.zeros(1),
                     np.zeros(1, int), np.zeros(1, int),
                     np.array([[pf, cf, sf]])).with_terms(("PF", "CF", "SF", "CF:SF"))
    eta = float(d.X[0] @ model.coefficients)
    p = float(predict_prob(model, d)[0])
    table = format_table(model)
    rows = [line.split() for line in table.splitlines()[1:6]]
    expected_rows = [
        ["Intercept", "-24.310", "4.115", "-5.907", "3.47e-09"],
        ["PF", "-1.447", "0.134", "-10.796", "<", "2e-16"],
        ["CF", "15.719", "2.821", "5.572", "2.52e-08"],
        ["SF", "10.347", "2.204", "4.696", "2.66e-06"],
        ["CF:SF", "-7.108", "1.507", "-4.716", "2.41e-06"],
    ]
    ok = (round(r2, 4) == 0.3608 and abs(eta + 5.8242) < 1e-4 and abs(p - 0.00295) < 1e-4
          and rows == expected_rows)
    check(8, "deviance R2, hand-derived prediction, coefficient table", ok,
          f"r2={r2:.6f} eta={eta:.6f} p={p:.6f} table_rows_match={rows == expected_rows}")


@pytest.mark.slow
def test_criterion_9_worker_count_invariance(tmp_path):
    from optopro.cli import write_study
    runs = {
        "significance": lambda cfg: run_significance_study(cfg),
        "auc": lambda cfg: run_auc_study(cfg),
        "sweep-c": lambda cfg: run_parameter_sweep("C", cfg, (0.8, 1.0, 1.2)),
        "sweep-r": lambda cfg: run_parameter_sweep("R", cfg, (0.8, 1.0, 1.2)),
    }
    differing = []
    for name, run in runs.items():
        digests = {}
        for workers in (1, 2, 4):
            cfg = StudyConfig(n_replications=8, n_bins=2000, base_seed=ACCEPTANCE_SEED,
                              parallelism=workers)
            out = tmp_path / f"{name}-{workers}"
            out.mkdir()
            write_study(run(cfg), out)
            digests[workers] = {f.name: f.read_bytes() for f in sorted(out.iterdir())}
        if not digests[1] == digests[2] == digests[4]:
            differing.append(name)
    check(9, "aggregate files identical across worker counts 1/2/4", not differing,
          f"studies={list(runs)} differing={differing}")
