"""Penalized linear regression (ridge, LASSO, elastic net) with
cross-validated tuning, and a harness replicating a recidivism-prediction
benchmark against the COMPAS risk score."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FitResult,
    LambdaPath,
    PenaltySpec,
    fit,
    fit_path,
    lambda_grid,
    predict,
    ridge_closed_form,
    soft_threshold,
)
from .dataset import Dataset, DefendantRecord, assign_folds, load_csv, split, standardize, to_dataset  # noqa: E402
from .selection import CvCurve, alpha_search, cross_validate  # noqa: E402
