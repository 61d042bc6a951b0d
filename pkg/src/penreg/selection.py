"""k-fold cross-validation over lambda paths and the alpha grid search."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DEFAULT_MAX_PASSES, DEFAULT_TOL, lambda_grid, lambda_max, path_arrays
from .dataset import Dataset, assign_folds, standardize
from .errors import DataError, InvalidK

RULES = ("one_se", "min")
DEFAULT_ALPHAS = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True, eq=False)
class CvCurve:
    alpha: float
    lambdas: np.ndarray
    mean_mse: np.ndarray
    se_mse: np.ndarray
    fold_mse: np.ndarray  # [k, L]
    index_min: int
    index_1se: int
    fold_stats: tuple = ()  # per fold (means, scales) of its training rows

    @property
    def lambda_min(self) -> float:
        return float(self.lambdas[self.index_min])

    @property
    def lambda_1se(self) -> float:
        return float(self.lambdas[self.index_1se])

    def selected_index(self, rule: str = "one_se") -> int:
        if rule not in RULES:
            raise DataError(f"unknown lambda rule {rule!r}")
        return self.index_1se if rule == "one_se" else self.index_min

    def selected_lambda(self, rule: str = "one_se") -> float:
        return float(self.lambdas[self.selected_index(rule)])

    def mse_at(self, rule: str = "one_se") -> float:
        return float(self.mean_mse[self.selected_index(rule)])

    def to_csv(self, extra: Optional[dict] = None) -> str:
        extra = extra or {}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["log_lambda", "mean_mse", "se_mse", "is_lambda_min", "is_lambda_1se", *extra])
        for i, lam in enumerate(self.lambdas):
            w.writerow([
                repr(math.log(lam)), repr(float(self.mean_mse[i])), repr(float(self.se_mse[i])),
                int(i == self.index_min), int(i == self.index_1se), *extra.values(),
            ])
        return buf.getvalue()


def select_indices(mean_mse, se_mse) -> tuple[int, int]:
    """(index of minimum mean error, index of the 1SE choice).

    Lambdas are in decreasing order, so the 1SE choice is the first index whose
    mean error is within one standard error of the minimum.
    """
    mean_mse = np.asarray(mean_mse)
    i_min = int(np.argmin(mean_mse))
    bound = mean_mse[i_min] + se_mse[i_min]
    i_1se = int(np.flatnonzero(mean_mse <= bound)[0])
    return i_min, i_1se


def cross_validate(
    d: Dataset,
    alpha: float,
    k: int = 10,
    seed: int = 0,
    n_lambdas: int = 100,
    ratio: float = 1e-4,
    lambdas: Optional[Sequence[float]] = None,
    folds: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> CvCurve:
    """Held-out MSE of the warm-started lambda path, fold by fold.

    Each training fold is standardized with its own statistics; predictions on
    the held-out fold are made on the original feature scale. When no grid is
    given, one is shared by all folds and its top is the largest lambda_max of
    the full data and every training fold, so the first grid point is the
    intercept-only model in every fold.
    """
    if d.is_standardized:
        raise DataError("cross_validate expects raw data; folds are standardized internally")
    if folds is None:
        folds = assign_folds(d.n, k, seed)
    else:
        folds = np.asarray(folds, dtype=np.int64)
        if folds.shape != (d.n,):
            raise DataError("fold labels must have one entry per row")
        k = int(folds.max()) + 1
    if not 2 <= k <= d.n:
        raise InvalidK(f"need 2 <= k <= n, got k={k}")

    train_sets = []
    for j in range(k):
        held = folds == j
        if not held.any():
            raise InvalidK(f"fold {j} is empty")
        train_sets.append((standardize(d.take(np.flatnonzero(~held))), held))

    if lambdas is None:
        top = max(
            [lambda_max(standardize(d), alpha)] + [lambda_max(s, alpha) for s, _ in train_sets]
        )
        lambdas = lambda_grid(d, alpha, n_lambdas, ratio, lam_max=top)
    lambdas = np.asarray(lambdas, dtype=float)

    fold_mse = np.empty((k, len(lambdas)))
    stats = []
    for j, (tr, held) in enumerate(train_sets):
        B, icpt_std, _, _ = path_arrays(tr, alpha, lambdas, tol, max_passes)
        coef = B / tr.scales
        icpt = icpt_std - coef @ tr.means
        pred = d.X[held] @ coef.T + icpt
        fold_mse[j] = np.mean((pred - d.y[held][:, None]) ** 2, axis=0)
        stats.append((tr.means, tr.scales))

    mean_mse = fold_mse.mean(axis=0)
    se_mse = fold_mse.std(axis=0, ddof=1) / math.sqrt(k)
    i_min, i_1se = select_indices(mean_mse, se_mse)
    lambdas = lambdas.copy()
    for a in (lambdas, mean_mse, se_mse, fold_mse):
        a.setflags(write=False)
    return CvCurve(float(alpha), lambdas, mean_mse, se_mse, fold_mse, i_min, i_1se, tuple(stats))


@dataclass(frozen=True, eq=False)
class AlphaSearchResult:
    alphas: np.ndarray
    cv_mse_at_selected_lambda: np.ndarray
    best_alpha: float
    rule: str
    curves: tuple = ()

    def to_csv(self, extra: Optional[dict] = None) -> str:
        extra = extra or {}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["alpha", "selected_lambda", "cv_mse", *extra])
        for a, c, m in zip(self.alphas, self.curves, self.cv_mse_at_selected_lambda):
            w.writerow([repr(float(a)), repr(c.selected_lambda(self.rule)), repr(float(m)), *extra.values()])
        return buf.getvalue()


def alpha_search(
    d: Dataset,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    k: int = 10,
    seed: int = 0,
    rule: str = "one_se",
    folds: Optional[np.ndarray] = None,
    **cv_kwargs,
) -> AlphaSearchResult:
    """Cross-validate every alpha on the same folds; best alpha = lowest CV MSE
    at its selected lambda, ties going to the smaller alpha.

    Folds come from (n, k, seed) unless explicit labels are passed.
    """
    alphas = np.asarray(list(alphas), dtype=float)
    if alphas.size == 0:
        raise DataError("alphas must be non-empty")
    if np.any((alphas < 0) | (alphas > 1)):
        raise DataError("every alpha must lie in [0, 1]")
    if rule not in RULES:
        raise DataError(f"unknown lambda rule {rule!r}")
    if folds is None:
        folds = assign_folds(d.n, k, seed)
    curves = tuple(cross_validate(d, float(a), folds=folds, **cv_kwargs) for a in alphas)
    mse = np.array([c.mse_at(rule) for c in curves])
    best = min(range(len(alphas)), key=lambda i: (mse[i], alphas[i]))
    alphas.setflags(write=False)
    mse.setflags(write=False)
    return AlphaSearchResult(alphas, mse, float(alphas[best]), rule, curves)
