"""Logistic regression by IRLS with Wald inference and AIC stepwise search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import (DegenerateAbscissaError, DegenerateResponseError, SchemaError,
                     SingularDesignError, UndefinedStatisticError)
from .pointproc import (Dataset, DesignMatrix, all_monomials, build_design,
                        canonical_terms)

INTERCEPT = "(Intercept)"
MAX_ITER = 50
DEVIANCE_TOL = 1e-8
SEPARATION_BOUND = 30.0
_W_FLOOR = 1e-12


def normal_cdf(x: float) -> float:
    """Standard normal CDF as 0.5 * erfc(-x / sqrt(2)) (libm erfc)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def wald_p_value(z: float) -> float:
    """Two-sided p-value 2 * Phi(-|z|)."""
    if math.isnan(z):
        return math.nan
    return math.erfc(abs(z) / math.sqrt(2.0))


def expit(eta):
    return 1.0 / (1.0 + np.exp(-eta))


def bernoulli_deviance(y, eta) -> float:
    # -2 * loglik, written with logaddexp so large |eta| stays finite
    return float(2.0 * np.sum(np.logaddexp(0.0, eta) - y * eta))


def log_likelihood(beta, X, y) -> float:
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def score(beta, X, y):
    """Gradient of the log-likelihood, X^T (y - p)."""
    return X.T @ (y - expit(X @ beta))


@dataclass(frozen=True)
class StepRecord:
    step: int
    action: str          # "start", "add" or "drop"
    term: Optional[str]
    aic: float
    terms: tuple


@dataclass(frozen=True)
class FittedModel:
    term_names: tuple
    coefficients: np.ndarray
    standard_errors: np.ndarray
    z_values: np.ndarray
    p_values: np.ndarray
    null_deviance: float
    residual_deviance: float
    null_df: int
    residual_df: int
    aic: float
    converged: bool
    iterations: int
    warnings: tuple = ()
    steps: tuple = field(default=(), compare=False)
    deviance_trace: tuple = field(default=(), compare=False, repr=False)

    @property
    def terms(self):
        """Model terms without the intercept."""
        return tuple(self.term_names[1:])

    def coef(self, name):
        return float(self.coefficients[self.term_names.index(name)])

    def p_value(self, name):
        return float(self.p_values[self.term_names.index(name)])

    def to_dict(self):
        return {
            "terms": list(self.term_names),
            "coef": [float(v) for v in self.coefficients],
            "se": [float(v) for v in self.standard_errors],
            "z": [float(v) for v in self.z_values],
            "p": [float(v) for v in self.p_values],
            "null_deviance": float(self.null_deviance),
            "residual_deviance": float(self.residual_deviance),
            "null_df": int(self.null_df),
            "residual_df": int(self.residual_df),
            "aic": float(self.aic),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
        }

    @classmethod
    def from_dict(cls, d):
        required = ("terms", "coef", "se", "z", "p", "null_deviance",
                    "residual_deviance", "null_df", "residual_df", "aic",
                    "converged", "iterations")
        missing = [k for k in required if k not in d]
        if missing:
            raise SchemaError(f"model JSON missing keys: {missing}")
        names = tuple(d["terms"])
        if not names or names[0] != INTERCEPT:
            raise SchemaError(f"first term must be {INTERCEPT!r}")
        arrays = {}
        for k in ("coef", "se", "z", "p"):
            arrays[k] = np.array([math.nan if v is None else v for v in d[k]], dtype=float)
            if arrays[k].shape != (len(names),):
                raise SchemaError(f"{k!r} length does not match terms")
        return cls(names, arrays["coef"], arrays["se"], arrays["z"], arrays["p"],
                   float(d["null_deviance"]), float(d["residual_deviance"]),
                   int(d["null_df"]), int(d["residual_df"]), float(d["aic"]),
                   bool(d["converged"]), int(d["iterations"]))


def _wls_step(X, y, beta):
    eta = X @ beta
    p = expit(eta)
    w = np.maximum(p * (1.0 - p), _W_FLOOR)
    z = eta + (y - p) / w
    sw = np.sqrt(w)
    sol, _, rank, _ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError(f"model matrix has rank {rank} < {X.shape[1]}")
    return sol


def fit_matrix(X, y, term_names: Sequence[str], max_iter: int = MAX_ITER,
               tol: float = DEVIANCE_TOL) -> FittedModel:
    """IRLS fit of a logistic model on a raw matrix whose column 0 is the intercept."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if n < 1:
        raise DegenerateResponseError("no rows to fit")
    if np.all(y == y[0]):
        raise DegenerateResponseError(f"all {n} responses equal {y[0]:g}")

    beta = np.zeros(k)
    dev = bernoulli_deviance(y, X @ beta)
    trace = [dev]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = _wls_step(X, y, beta)
        new_dev = bernoulli_deviance(y, X @ new)
        halvings = 0
        while new_dev > dev and halvings < 30:
            new = 0.5 * (beta + new)
            new_dev = bernoulli_deviance(y, X @ new)
            halvings += 1
        change = abs(dev - new_dev)
        beta, dev = new, new_dev
        trace.append(dev)
        if change < tol:
            converged = True
            break

    eta = X @ beta
    p = expit(eta)
    w = p * (1.0 - p)
    info = X.T @ (X * w[:, None])
    try:
        cov = np.linalg.inv(info)
        se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        se = np.full(k, math.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        zv = beta / se
    pv = np.array([wald_p_value(float(v)) for v in zv])

    # complete separation: the deviance collapses to ~0 while the
    # coefficients run off, so the deviance change alone looks converged
    if converged and dev < 1e-6 and np.max(np.abs(beta)) > SEPARATION_BOUND:
        converged = False

    notes = []
    if not converged and np.max(np.abs(beta)) > SEPARATION_BOUND:
        notes.append("separation: coefficients diverging, fit did not converge")
    elif not converged:
        notes.append(f"IRLS did not converge in {max_iter} iterations")

    m = float(y.mean())
    null_dev = -2.0 * n * (m * math.log(m) + (1.0 - m) * math.log(1.0 - m))
    return FittedModel(
        term_names=(INTERCEPT,) + tuple(term_names),
        coefficients=beta, standard_errors=se, z_values=zv, p_values=pv,
        null_deviance=null_dev, residual_deviance=dev,
        null_df=n - 1, residual_df=n - k,
        aic=dev + 2.0 * k, converged=converged, iterations=it,
        warnings=tuple(notes), deviance_trace=tuple(trace),
    )


def fit_logistic(design: DesignMatrix, **kw) -> FittedModel:
    return fit_matrix(design.X, design.responses, design.term_names, **kw)


def predict_prob(model: FittedModel, design: DesignMatrix) -> np.ndarray:
    if tuple(design.term_names) != model.terms:
        raise SchemaError(f"design terms {list(design.term_names)} do not match "
                          f"model terms {list(model.terms)}")
    return expit(design.X @ model.coefficients)


def deviance_r2(model) -> float:
    """1 - residual/null deviance; ``model`` needs the two deviance attributes."""
    if model.null_deviance == 0:
        raise UndefinedStatisticError("null deviance is zero")
    return 1.0 - model.residual_deviance / model.null_deviance


def format_table(model: FittedModel) -> str:
    """Coefficient table in the usual Estimate / SE / Z value / P-value layout."""
    rows = [("Coefficients", "Estimate", "SE", "Z value", "P-value")]
    for i, name in enumerate(model.term_names):
        p = float(model.p_values[i])
        ptxt = "< 2e-16" if p < 2e-16 else f"{p:.2e}"
        label = "Intercept" if name == INTERCEPT else name
        rows.append((label, f"{model.coefficients[i]:.3f}",
                     f"{model.standard_errors[i]:.3f}", f"{model.z_values[i]:.3f}", ptxt))
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    lines = ["  ".join(cell.rjust(w) if c else cell.ljust(w)
                       for c, (cell, w) in enumerate(zip(r, widths))) for r in rows]
    lines.append("")
    lines.append(f"Null deviance: {model.null_deviance:.2f} (df={model.null_df})")
    lines.append(f"Residual deviance: {model.residual_deviance:.2f} (df={model.residual_df})")
    lines.append(f"AIC: {model.aic:.2f}")
    return "\n".join(lines) + "\n"


def _fit_terms(design: DesignMatrix, terms):
    sub = design.with_terms(terms)
    return fit_logistic(sub)


def stepwise_aic(data, max_degree: int = 3, strict_ddagger: bool = False) -> FittedModel:
    """Greedy forward/backward AIC search over monomials of PF, CF, SF.

    Starts from the full model with every monomial of degree <= ``max_degree``
    and at each step applies the single addition or deletion with the
    largest AIC decrease. ``data`` may be a Dataset or a DesignMatrix.
    The returned model carries the step log in ``steps``.
    """
    candidates = all_monomials(max_degree)
    if isinstance(data, Dataset):
        design = build_design(data, candidates, strict_ddagger)
    else:
        design = data
    order = {t: i for i, t in enumerate(candidates)}
    cache = {}

    def fit(terms):
        key = frozenset(terms)
        if key not in cache:
            ordered = sorted(key, key=order.__getitem__)
            try:
                cache[key] = _fit_terms(design, ordered)
            except SingularDesignError:
                cache[key] = None
        return cache[key]

    current = frozenset(candidates)
    full = fit(current)
    if full is None or not full.converged:
        current = frozenset()
    best = fit(current)
    if best is None:
        raise SingularDesignError("starting model could not be fit")
    steps = [StepRecord(0, "start", None, best.aic, tuple(best.terms))]

    while True:
        moves = [("drop", t, current - {t}) for t in sorted(current, key=order.__getitem__)]
        moves += [("add", t, current | {t}) for t in candidates if t not in current]
        best_move = None
        for action, term, terms in moves:
            m = fit(terms)
            if m is None or not m.converged:
                continue
            if best_move is None or m.aic < best_move[3].aic:
                best_move = (action, term, terms, m)
        if best_move is None or not best_move[3].aic < best.aic:
            break
        action, term, current, best = best_move
        steps.append(StepRecord(len(steps), action, term, best.aic, tuple(best.terms)))

    return replace(best, steps=tuple(steps))


@dataclass(frozen=True)
class OlsFit:
    slope: float
    intercept: float
    slope_p_value: float
    slope_se: float
    n: int


def ols_slope(points) -> OlsFit:
    """Least-squares line through ``(x, y)`` pairs with a two-sided t-test on the slope."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    n = x.size
    if n < 3:
        raise DegenerateAbscissaError(f"need at least 3 points, got {n}")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise DegenerateAbscissaError("all x values are equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    s2 = float(np.sum(resid ** 2)) / (n - 2)
    se = math.sqrt(s2 / sxx)
    if se == 0.0:
        p = 1.0 if slope == 0.0 else 0.0
    else:
        p = float(2.0 * stats.t.sf(abs(slope / se), n - 2))
    return OlsFit(slope, intercept, p, se, n)
