"""ROC curves, AUC and the train/test protocol."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateLabelsError
from .glm import FittedModel, fit_logistic, predict_prob
from .pointproc import PRO_TERMS, Dataset, build_design


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray   # first entry is +inf (nothing predicted positive)
    auc: float
    n_pos: int
    n_neg: int

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def _check(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-d and of equal length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    y = y.astype(np.int64)
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabelsError(f"need both classes, got {n_pos} positives "
                                    f"and {n_neg} negatives")
    return s, y, n_pos, n_neg


def roc_curve(scores, labels) -> RocCurve:
    """One point per distinct score; tied scores move along a single diagonal step."""
    s, y, n_pos, n_neg = _check(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    # last index of each tie group in descending order
    ends = np.flatnonzero(np.diff(s_sorted) != 0)
    ends = np.append(ends, s_sorted.size - 1)
    tp = np.concatenate([[0], np.cumsum(y_sorted)[ends]])
    fp = np.concatenate([[0], np.cumsum(1 - y_sorted)[ends]])
    # trapezoids in integer units, one division at the end
    twice_area = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = twice_area / (2.0 * n_pos * n_neg)
    return RocCurve(fp / n_neg, tp / n_pos,
                    np.concatenate([[np.inf], s_sorted[ends]]), auc, n_pos, n_neg)


def auc_score(scores, labels) -> float:
    """Mann-Whitney AUC from midranks: P(score_pos > score_neg) + 0.5 P(tie)."""
    s, y, n_pos, n_neg = _check(scores, labels)
    ranks = rankdata(s)  # average ranks, so ties contribute half
    u = float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass(frozen=True)
class Evaluation:
    model: FittedModel
    auc: float
    roc: RocCurve
    n_excluded: int
    probabilities: np.ndarray


def train_test_evaluate(train: Dataset, test: Dataset, terms: Sequence[str] = PRO_TERMS,
                        strict_ddagger: bool = False) -> Evaluation:
    """Fit on ``train`` and score one-step-ahead predictions on ``test``.

    Test features come from the test data's own realised history; bins with
    an undefined history marker are excluded and counted.
    """
    model = fit_logistic(build_design(train, terms, strict_ddagger))
    test_design = build_design(test, terms, strict_ddagger)
    probs = predict_prob(model, test_design)
    roc = roc_curve(probs, test_design.responses)
    return Evaluation(model, roc.auc, roc, test_design.n_excluded, probs)
