"""Simulation studies: significance frequencies, out-of-sample AUC, C/R sweeps.

Replication ``i`` always uses the seed ``derive_seed(base_seed, i)`` (sweeps
add the grid index as a second key), so results do not depend on how the
work is spread over processes. Aggregates are computed from records sorted
by replication index.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, OptoproError, StudyError
from .evaluate import train_test_evaluate
from .glm import OlsFit, deviance_r2, fit_logistic, ols_slope
from .lif import LifParams, derive_seed, gen_stimulus, make_rng, simulate_lif
from .pointproc import PRO_TERMS, Dataset, Sweep, build_design

DEFAULT_MULTIPLIERS = tuple(round(0.8 + 0.04 * i, 2) for i in range(11))


@dataclass(frozen=True)
class StudyConfig:
    n_replications: int = 1000
    n_bins: int = 5000
    flash_prob: float = 0.14
    lif: LifParams = field(default_factory=LifParams)
    alpha: float = 0.05
    base_seed: int = 0
    parallelism: int = 1
    terms: tuple = PRO_TERMS

    def __post_init__(self):
        if self.n_replications < 1:
            raise ConfigError("n_replications must be >= 1")
        if self.n_bins < 1:
            raise ConfigError("n_bins must be >= 1")
        if not 0.0 <= self.flash_prob <= 1.0:
            raise ConfigError("flash_prob must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")

    def to_dict(self):
        return {
            "n_replications": self.n_replications, "n_bins": self.n_bins,
            "flash_prob": self.flash_prob, "alpha": self.alpha,
            "base_seed": self.base_seed, "terms": list(self.terms),
            "lif": {"C": self.lif.C, "R": self.lif.R, "v_th": self.lif.v_th,
                    "v_reset": self.lif.v_reset,
                    "substeps_per_bin": self.lif.substeps_per_bin,
                    "bin_ms": self.lif.bin_ms,
                    "stimulus_height": self.lif.stimulus_height},
        }


@dataclass
class StudyResult:
    kind: str
    config: StudyConfig
    records: list
    aggregates: dict
    dropped: dict


@dataclass
class SweepResult(StudyResult):
    which: str = "C"
    parameter_values: tuple = ()
    grid: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        return math.nan, math.nan
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return mean, se


def _fit_record(dataset, terms):
    """Fit the fixed model on one simulated dataset; never raises on bad fits."""
    rec = {}
    try:
        model = fit_logistic(build_design(dataset, terms))
    except OptoproError as exc:
        rec["status"] = "degenerate"
        rec["error"] = type(exc).__name__
        return rec, None
    rec["status"] = "ok" if model.converged else "separation"
    for name in model.terms:
        rec[f"coef_{name}"] = model.coef(name)
        rec[f"p_{name}"] = model.p_value(name)
    rec["r2"] = deviance_r2(model)
    return rec, model


def _significance_task(args):
    index, seed, n_bins, p, params, terms, alpha = args
    trace = simulate_lif(params, gen_stimulus(n_bins, p, make_rng(seed)))
    data = Dataset((Sweep(0, trace.flashes, trace.spikes, params.bin_ms),))
    rec, _ = _fit_record(data, terms)
    rec.update(index=index, seed=seed, n_spikes=trace.spike_count)
    return rec


def _auc_task(args):
    index, seed, n_bins, p, params, terms, alpha = args
    trace = simulate_lif(params, gen_stimulus(n_bins, p, make_rng(seed)))
    half = n_bins // 2
    train = Dataset((Sweep(0, trace.flashes[:half], trace.spikes[:half], params.bin_ms),))
    test = Dataset((Sweep(1, trace.flashes[half:], trace.spikes[half:], params.bin_ms),))
    rec = {"index": index, "seed": seed, "n_spikes": trace.spike_count}
    try:
        ev = train_test_evaluate(train, test, terms)
    except OptoproError as exc:
        rec.update(status="degenerate", error=type(exc).__name__)
        return rec
    rec["status"] = "ok" if ev.model.converged else "separation"
    for name in ev.model.terms:
        rec[f"coef_{name}"] = ev.model.coef(name)
        rec[f"p_{name}"] = ev.model.p_value(name)
    rec["r2"] = deviance_r2(ev.model)
    rec["auc"] = ev.auc
    rec["n_excluded"] = ev.n_excluded
    return rec


def _sweep_task(args):
    (grid_index, rep), seed, n_bins, p, params, terms, alpha, value = args
    rec = _significance_task(((grid_index, rep), seed, n_bins, p, params, terms, alpha))
    rec["grid_index"] = grid_index
    rec["rep"] = rep
    rec["parameter_value"] = value
    return rec


def _run(task, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        out = [task(j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(task, jobs, chunksize=chunk))
    return sorted(out, key=lambda r: r["index"])


def _dropped(records):
    return {
        "degenerate": sum(r["status"] == "degenerate" for r in records),
        "separation": sum(r["status"] == "separation" for r in records),
    }


def _coefficient_aggregates(ok, terms, alpha):
    agg = {}
    for name in terms:
        sig = [float(r[f"p_{name}"] < alpha) for r in ok]
        agg[f"sig_freq_{name}"], agg[f"sig_freq_se_{name}"] = _mean_se(sig)
        agg[f"mean_coef_{name}"], agg[f"se_coef_{name}"] = _mean_se(
            [r[f"coef_{name}"] for r in ok])
    agg["mean_r2"], agg["se_r2"] = _mean_se([r["r2"] for r in ok])
    return agg


def run_significance_study(cfg: StudyConfig) -> StudyResult:
    jobs = [(i, derive_seed(cfg.base_seed, i), cfg.n_bins, cfg.flash_prob, cfg.lif,
             tuple(cfg.terms), cfg.alpha) for i in range(cfg.n_replications)]
    records = _run(_significance_task, jobs, cfg.parallelism)
    ok = [r for r in records if r["status"] == "ok"]
    if not ok:
        raise StudyError("every replication was dropped")
    agg = {"n_replications": len(records), "n_used": len(ok)}
    agg.update(_coefficient_aggregates(ok, cfg.terms, cfg.alpha))
    return StudyResult("significance", cfg, records, agg, _dropped(records))


def run_auc_study(cfg: StudyConfig) -> StudyResult:
    if cfg.n_bins % 2:
        raise ConfigError("n_bins must be even so it splits into train and test halves")
    jobs = [(i, derive_seed(cfg.base_seed, i), cfg.n_bins, cfg.flash_prob, cfg.lif,
             tuple(cfg.terms), cfg.alpha) for i in range(cfg.n_replications)]
    records = _run(_auc_task, jobs, cfg.parallelism)
    ok = [r for r in records if r["status"] == "ok"]
    if not ok:
        raise StudyError("every replication was dropped")
    agg = {"n_replications": len(records), "n_used": len(ok)}
    agg["mean_auc"], agg["se_auc"] = _mean_se([r["auc"] for r in ok])
    agg.update(_coefficient_aggregates(ok, cfg.terms, cfg.alpha))
    return StudyResult("auc", cfg, records, agg, _dropped(records))


def run_parameter_sweep(which: str, cfg: StudyConfig,
                        multipliers: Optional[Sequence[float]] = None) -> SweepResult:
    """Refit the fixed model while scaling C or R over ``multipliers``.

    Per coefficient, estimates with p >= alpha are dropped before the
    coefficient is regressed on the absolute parameter value.
    """
    if which not in ("C", "R"):
        raise ConfigError(f"sweep parameter must be 'C' or 'R', not {which!r}")
    mults = tuple(DEFAULT_MULTIPLIERS if multipliers is None else multipliers)
    if not mults:
        raise ConfigError("multiplier grid is empty")
    base = getattr(cfg.lif, which)
    values = tuple(base * m for m in mults)
    params = [cfg.lif.scaled(which, m) for m in mults]
    n = cfg.n_replications
    jobs = []
    for g, par in enumerate(params):
        for r in range(n):
            seed = derive_seed(cfg.base_seed, g * n + r)
            jobs.append(((g, r), seed, cfg.n_bins, cfg.flash_prob, par,
                         tuple(cfg.terms), cfg.alpha, values[g]))
    records = _run(_sweep_task, jobs, cfg.parallelism)
    usable = [r for r in records if r["status"] == "ok"]
    if not usable:
        raise StudyError("every replication was dropped")

    grid = []
    slopes = {}
    dropped_frac = {}
    for name in cfg.terms:
        kept = [r for r in usable if r[f"p_{name}"] < cfg.alpha]
        dropped_frac[name] = 1.0 - len(kept) / len(usable)
        pts = [(r["parameter_value"], r[f"coef_{name}"]) for r in kept]
        try:
            slopes[name] = ols_slope(pts)
        except OptoproError:
            slopes[name] = None
    for g, value in enumerate(values):
        row = {"grid_index": g, "multiplier": mults[g], "parameter_value": value}
        at = [r for r in usable if r["grid_index"] == g]
        row["n_used"] = len(at)
        for name in cfg.terms:
            kept = [r[f"coef_{name}"] for r in at if r[f"p_{name}"] < cfg.alpha]
            row[f"n_kept_{name}"] = len(kept)
            row[f"available_{name}"] = bool(kept)
            row[f"mean_coef_{name}"], row[f"se_coef_{name}"] = _mean_se(kept)
        grid.append(row)

    agg = {"n_replications": len(records), "n_used": len(usable)}
    for name in cfg.terms:
        s: Optional[OlsFit] = slopes[name]
        agg[f"dropped_frac_{name}"] = dropped_frac[name]
        agg[f"slope_{name}"] = s.slope if s else math.nan
        agg[f"slope_p_{name}"] = s.slope_p_value if s else math.nan
        agg[f"intercept_{name}"] = s.intercept if s else math.nan
    dropped = _dropped(records)
    dropped.update({f"insignificant_{k}": v for k, v in dropped_frac.items()})
    return SweepResult(f"sweep-{which}", cfg, records, agg, dropped, which=which,
                       parameter_values=values, grid=grid, slopes=slopes)
