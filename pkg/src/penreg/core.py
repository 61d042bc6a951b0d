"""Ridge / LASSO / elastic net by cyclic coordinate descent.

All fits minimize, on standardized features,

    (1/2n) * sum_i (y_i - b0 - sum_j b_j x_ij)**2
        + lam * ((1 - alpha)/2 * ||b||_2**2 + alpha * ||b||_1)

so alpha=0 is ridge, alpha=1 is the LASSO, and lam is on a per-observation
scale (comparable across sample sizes). The intercept is never penalized.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .dataset import Dataset
from .errors import DataError, DimensionMismatch, NotStandardized, SingularSystem

DEFAULT_TOL = 1e-7
DEFAULT_MAX_PASSES = 10_000
ALPHA_FLOOR = 1e-3


@dataclass(frozen=True)
class PenaltySpec:
    lam: float
    alpha: float

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise DataError(f"lambda must be finite and >= 0, got {self.lam}")
        if not 0.0 <= self.alpha <= 1.0:
            raise DataError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True, eq=False)
class FitResult:
    intercept: float
    coefficients: np.ndarray
    coefficients_std: np.ndarray
    intercept_std: float
    penalty: PenaltySpec
    n_iterations: int
    converged: bool
    feature_names: tuple = ()
    objective_trace: Optional[np.ndarray] = None

    @property
    def dropped(self) -> tuple:
        return tuple(n for n, b in zip(self.feature_names, self.coefficients) if b == 0.0)


@dataclass(frozen=True, eq=False)
class LambdaPath:
    alpha: float
    lambdas: np.ndarray
    fits: tuple

    def coefficient_matrix(self) -> np.ndarray:
        """Original-scale coefficients, one row per lambda."""
        return np.array([f.coefficients for f in self.fits])

    def to_csv(self, extra: Optional[dict] = None) -> str:
        """Long-format path data: feature, log_lambda, coefficient."""
        extra = extra or {}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["feature", "log_lambda", "coefficient", *extra])
        names = self.fits[0].feature_names if self.fits else ()
        for j, name in enumerate(names):
            for lam, f in zip(self.lambdas, self.fits):
                w.writerow([name, repr(math.log(lam)), repr(float(f.coefficients[j])), *extra.values()])
        return buf.getvalue()


def soft_threshold(z: float, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


@njit(cache=True)
def _objective(c, G, beta, y_ss, l1, l2):
    quad = 0.0
    lin = 0.0
    pen1 = 0.0
    pen2 = 0.0
    p = c.shape[0]
    for j in range(p):
        s = 0.0
        for k in range(p):
            s += G[j, k] * beta[k]
        quad += beta[j] * s
        lin += c[j] * beta[j]
        pen1 += abs(beta[j])
        pen2 += beta[j] * beta[j]
    return y_ss - lin + 0.5 * quad + l1 * pen1 + 0.5 * l2 * pen2


@njit(cache=True)
def _coordinate_descent(G, c, y_ss, lam, alpha, beta, tol, max_passes, record):
    p = c.shape[0]
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    Gb = np.zeros(p)
    for j in range(p):
        for k in range(p):
            Gb[j] += G[j, k] * beta[k]
    trace = np.empty(max_passes + 1 if record else 1)
    if record:
        trace[0] = _objective(c, G, beta, y_ss, l1, l2)
    passes = 0
    converged = False
    while passes < max_passes:
        max_delta = 0.0
        for j in range(p):
            old = beta[j]
            rho = c[j] - Gb[j] + G[j, j] * old
            if rho > l1:
                new = (rho - l1) / (G[j, j] + l2)
            elif rho < -l1:
                new = (rho + l1) / (G[j, j] + l2)
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                beta[j] = new
                for k in range(p):
                    Gb[k] += delta * G[k, j]
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        passes += 1
        if record:
            trace[passes] = _objective(c, G, beta, y_ss, l1, l2)
        if max_delta < tol:
            converged = True
            break
    if record:
        return beta, passes, converged, trace[: passes + 1]
    return beta, passes, converged, trace[:0]


@njit(cache=True)
def _path_kernel(G, c, y_ss, lambdas, alpha, beta0, tol, max_passes):
    L = lambdas.shape[0]
    p = c.shape[0]
    B = np.empty((L, p))
    passes = np.empty(L, dtype=np.int64)
    conv = np.empty(L, dtype=np.bool_)
    beta = beta0.copy()
    for i in range(L):
        beta, n_pass, ok, _ = _coordinate_descent(
            G, c, y_ss, lambdas[i], alpha, beta, tol, max_passes, False
        )
        B[i] = beta
        passes[i] = n_pass
        conv[i] = ok
    return B, passes, conv


def _moments(d: Dataset):
    """Centered Gram matrix, feature-response covariances, half mean square of y."""
    n = d.n
    xbar = d.X.mean(axis=0)
    ybar = float(d.y.mean())
    Xc = d.X - xbar
    yc = d.y - ybar
    G = np.ascontiguousarray(Xc.T @ Xc / n)
    c = Xc.T @ yc / n
    return G, c, float(yc @ yc / (2 * n)), xbar, ybar


def _require_standardized(d: Dataset):
    if not d.is_standardized:
        raise NotStandardized("fit requires a standardized Dataset")


def _make_fit(d, beta_std, xbar, ybar, spec, passes, converged, trace=None):
    beta_std = np.asarray(beta_std, dtype=float).copy()
    beta_std[beta_std == 0.0] = 0.0  # no negative zeros
    icpt_std = ybar - float(xbar @ beta_std)
    coef = beta_std / d.scales
    icpt = icpt_std - float(coef @ d.means)
    for a in (beta_std, coef):
        a.setflags(write=False)
    return FitResult(
        intercept=icpt,
        coefficients=coef,
        coefficients_std=beta_std,
        intercept_std=icpt_std,
        penalty=spec,
        n_iterations=int(passes),
        converged=bool(converged),
        feature_names=d.feature_names,
        objective_trace=trace,
    )


def fit(
    d: Dataset,
    spec: PenaltySpec,
    warm_start=None,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
    record_objective: bool = False,
) -> FitResult:
    """Coordinate-descent fit at one (lambda, alpha).

    ``warm_start`` is a standardized-scale coefficient vector. Convergence
    means the largest coefficient change over a full pass fell below ``tol``;
    hitting ``max_passes`` first yields ``converged=False`` rather than an
    exception. With ``record_objective`` the penalized objective after every
    pass is kept in ``objective_trace`` (entry 0 is the starting point).
    """
    _require_standardized(d)
    if not tol > 0 or max_passes < 1:
        raise DataError("need tol > 0 and max_passes >= 1")
    G, c, y_ss, xbar, ybar = _moments(d)
    beta = np.zeros(d.p) if warm_start is None else np.array(warm_start, dtype=float)
    if beta.shape != (d.p,):
        raise DimensionMismatch(f"warm start has shape {beta.shape}, expected ({d.p},)")
    beta, passes, ok, trace = _coordinate_descent(
        G, c, y_ss, float(spec.lam), float(spec.alpha), beta, float(tol), int(max_passes),
        record_objective,
    )
    return _make_fit(d, beta, xbar, ybar, spec, passes, ok, trace if record_objective else None)


def penalized_objective(d: Dataset, spec: PenaltySpec, beta_std, intercept_std=None) -> float:
    """Objective evaluated directly from the residuals (no Gram shortcut)."""
    beta = np.asarray(beta_std, dtype=float)
    b0 = float(d.y.mean() - d.X.mean(axis=0) @ beta) if intercept_std is None else intercept_std
    r = d.y - b0 - d.X @ beta
    pen = (1 - spec.alpha) / 2 * float(beta @ beta) + spec.alpha * float(np.abs(beta).sum())
    return float(r @ r) / (2 * d.n) + spec.lam * pen


def ridge_closed_form(d: Dataset, lam: float) -> FitResult:
    """Direct solve of (X'X/n + lam I) b = X'(y - ybar)/n on centered data."""
    _require_standardized(d)
    spec = PenaltySpec(lam, 0.0)
    G, c, _, xbar, ybar = _moments(d)
    A = G + lam * np.eye(d.p)
    if np.linalg.cond(A) > 1e12:
        raise SingularSystem(f"ridge system is singular at lambda={lam}")
    try:
        beta = np.linalg.solve(A, c)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(str(e)) from e
    return _make_fit(d, beta, xbar, ybar, spec, 0, True)


def lambda_max(d: Dataset, alpha: float) -> float:
    """Smallest lambda zeroing every coefficient (alpha floored at 1e-3)."""
    _, c, *_ = _moments(d)
    return float(np.max(np.abs(c))) / max(alpha, ALPHA_FLOOR)


def lambda_grid(
    d: Dataset,
    alpha: float,
    n_lambdas: int = 100,
    ratio: float = 1e-4,
    lam_max: Optional[float] = None,
) -> np.ndarray:
    """Log-spaced decreasing grid from lambda_max down to lambda_max * ratio."""
    if n_lambdas < 2 or not 0.0 < ratio < 1.0:
        raise DataError("need n_lambdas >= 2 and 0 < ratio < 1")
    top = lambda_max(d, alpha) if lam_max is None else float(lam_max)
    if not top > 0:
        raise DataError("lambda_max is zero: response uncorrelated with every feature")
    return top * ratio ** (np.arange(n_lambdas) / (n_lambdas - 1))


def _check_decreasing(lambdas) -> np.ndarray:
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or len(lambdas) == 0:
        raise DataError("lambdas must be a non-empty vector")
    if np.any(np.diff(lambdas) >= 0) or lambdas[-1] < 0:
        raise DataError("lambdas must be strictly decreasing and non-negative")
    return lambdas


def path_arrays(d: Dataset, alpha: float, lambdas, tol=DEFAULT_TOL, max_passes=DEFAULT_MAX_PASSES):
    """Warm-started path as raw arrays: (coef_std [L, p], intercept_std [L], passes, converged).

    Bulk variant of :func:`fit_path` for cross-validation loops.
    """
    _require_standardized(d)
    lambdas = _check_decreasing(lambdas)
    G, c, y_ss, xbar, ybar = _moments(d)
    B, passes, conv = _path_kernel(
        G, c, y_ss, lambdas, float(alpha), np.zeros(d.p), float(tol), int(max_passes)
    )
    B[B == 0.0] = 0.0
    return B, ybar - B @ xbar, passes, conv


def fit_path(
    d: Dataset,
    alpha: float,
    lambdas: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> LambdaPath:
    _require_standardized(d)
    lambdas = _check_decreasing(lambdas)
    fits = []
    beta = None
    for lam in lambdas:
        f = fit(d, PenaltySpec(float(lam), alpha), warm_start=beta, tol=tol, max_passes=max_passes)
        beta = f.coefficients_std
        fits.append(f)
    lambdas = lambdas.copy()
    lambdas.setflags(write=False)
    return LambdaPath(float(alpha), lambdas, tuple(fits))


def fit_to(d: Dataset, alpha: float, lambdas, tol=DEFAULT_TOL, max_passes=DEFAULT_MAX_PASSES) -> FitResult:
    """Fit at ``lambdas[-1]``, warm-started along the preceding grid points.

    Gives the same solution as the matching entry of :func:`fit_path`.
    """
    lambdas = _check_decreasing(lambdas)
    warm = None
    if len(lambdas) > 1:
        B, *_ = path_arrays(d, alpha, lambdas[:-1], tol, max_passes)
        warm = B[-1]
    return fit(d, PenaltySpec(float(lambdas[-1]), alpha), warm_start=warm, tol=tol, max_passes=max_passes)


def predict(f: FitResult, X_raw) -> np.ndarray:
    X_raw = np.asarray(X_raw, dtype=float)
    if X_raw.ndim == 1:
        X_raw = X_raw[None, :]
    if X_raw.shape[1] != len(f.coefficients):
        raise DimensionMismatch(
            f"X has {X_raw.shape[1]} columns, fit has {len(f.coefficients)} coefficients"
        )
    return f.intercept + X_raw @ f.coefficients
