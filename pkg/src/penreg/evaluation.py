"""Classification metrics, ROC/AUC, and the two reference classifiers
(the COMPAS prediction column and an unpenalized logistic regression)."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import Dataset, DefendantRecord
from .errors import (
    DataError,
    DegenerateLabels,
    EmptyInput,
    LengthMismatch,
    NotStandardized,
    SeparationWarning,
)

SEPARATION_LIMIT = 30.0


def classify(scores, threshold: float = 0.5) -> np.ndarray:
    """1 where score >= threshold (ties are positive), else 0."""
    return (np.asarray(scores, dtype=float) >= threshold).astype(np.int64)


def _pair(pred, obs):
    pred = np.asarray(pred)
    obs = np.asarray(obs)
    if pred.shape != obs.shape or pred.ndim != 1:
        raise LengthMismatch(f"shapes {pred.shape} and {obs.shape} differ")
    return pred, obs


def accuracy(pred, obs) -> float:
    pred, obs = _pair(pred, obs)
    if pred.size == 0:
        raise EmptyInput("accuracy of an empty vector")
    return float(np.mean(pred == obs))


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def rates(self) -> dict:
        t = self.total
        return {k: getattr(self, k) / t for k in ("tp", "fp", "fn", "tn")}

    def percent(self, cell: str) -> str:
        return f"{100 * self.rates()[cell]:.1f}%"

    def render(self) -> str:
        """Predicted rows (p', n') by observed columns (p, n), counts and percentages."""
        cells = {k: f"{getattr(self, k)} ({self.percent(k)})" for k in ("tp", "fp", "fn", "tn")}
        width = max(len(v) for v in cells.values()) + 2
        lines = [
            " " * 4 + "p".center(width) + "n".center(width),
            "p'  " + cells["tp"].center(width) + cells["fp"].center(width),
            "n'  " + cells["fn"].center(width) + cells["tn"].center(width),
        ]
        return "\n".join(lines)


def confusion(pred, obs) -> ConfusionMatrix:
    pred, obs = _pair(pred, obs)
    pred = pred.astype(bool)
    obs = obs.astype(bool)
    return ConfusionMatrix(
        tp=int(np.sum(pred & obs)),
        fp=int(np.sum(pred & ~obs)),
        fn=int(np.sum(~pred & obs)),
        tn=int(np.sum(~pred & ~obs)),
    )


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # starts at +inf
    auc: float

    @property
    def points(self) -> list:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self, extra: Optional[dict] = None) -> str:
        extra = extra or {}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["fpr", "tpr", *extra])
        for x, y in zip(self.fpr, self.tpr):
            w.writerow([repr(float(x)), repr(float(y)), *extra.values()])
        return buf.getvalue()


def roc(scores, obs) -> RocCurve:
    """ROC curve swept over the distinct score values, highest first.

    Tied scores move the curve in a single (possibly diagonal) step, so the
    trapezoidal area counts ties as half-concordant.
    """
    scores, obs = _pair(np.asarray(scores, dtype=float), obs)
    obs = obs.astype(bool)
    n_pos = int(obs.sum())
    n_neg = obs.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("ROC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    o = obs[order]
    tp = np.cumsum(o)
    fp = np.cumsum(~o)
    # last position of each run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tpr = np.r_[0.0, tp[ends] / n_pos]
    fpr = np.r_[0.0, fp[ends] / n_neg]
    thresholds = np.r_[np.inf, s[ends]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(fpr, tpr, thresholds, auc)


@dataclass(frozen=True, eq=False)
class LogisticResult:
    scores: np.ndarray
    accuracy: float
    intercept: float
    coefficients: np.ndarray  # original feature scale
    n_iterations: int
    converged: bool
    separated: bool


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_baseline(
    train: Dataset,
    X_test,
    y_test,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> LogisticResult:
    """Unpenalized logistic regression fitted by IRLS.

    Newton steps fall back to gradient descent with step 1/L when the
    weighted Gram matrix is ill-conditioned. Stops when the gradient norm of
    the mean log-likelihood drops below ``tol``. Coefficients beyond +/-30 on
    the standardized scale signal (quasi-)separation: the fit stops there and
    a SeparationWarning is issued.
    """
    if not train.is_standardized:
        raise NotStandardized("logistic_baseline expects standardized training data")
    y = train.y
    if not np.all((y == 0) | (y == 1)):
        raise DataError("logistic_baseline needs a 0/1 response")
    n = train.n
    Z = np.column_stack([np.ones(n), train.X])
    lipschitz = np.linalg.eigvalsh(Z.T @ Z / n).max() / 4
    beta = np.zeros(Z.shape[1])
    converged = separated = False
    it = 0
    for it in range(1, max_iter + 1):
        prob = _sigmoid(Z @ beta)
        grad = Z.T @ (y - prob) / n
        if np.linalg.norm(grad) < tol:
            converged = True
            it -= 1
            break
        H = (Z * (prob * (1 - prob))[:, None]).T @ Z / n
        if np.linalg.cond(H) < 1e12:
            beta = beta + np.linalg.solve(H, grad)
        else:
            beta = beta + grad / lipschitz
        if np.max(np.abs(beta[1:])) > SEPARATION_LIMIT:
            separated = True
            break
    if separated:
        warnings.warn(
            "logistic coefficients exceed 30 in magnitude; classes look separable",
            SeparationWarning,
            stacklevel=2,
        )
    coef = beta[1:] / train.scales
    icpt = float(beta[0] - coef @ train.means)
    X_test = np.asarray(X_test, dtype=float)
    scores = _sigmoid(icpt + X_test @ coef)
    acc = accuracy(classify(scores, 0.5), np.asarray(y_test).astype(np.int64))
    return LogisticResult(scores, acc, icpt, coef, it, converged, separated)


def compas_baseline(records: Sequence[DefendantRecord]) -> float:
    """Agreement between the COMPAS prediction column and observed recidivism."""
    if len(records) == 0:
        raise EmptyInput("no records")
    pred = [r.compas_prediction for r in records]
    if any(p is None for p in pred):
        raise DataError("records lack the COMPAS prediction column")
    return accuracy(np.array(pred), np.array([r.two_year_recid for r in records]))
