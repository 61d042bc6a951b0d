"""Replication runs: the repeated-split accuracy protocol, representative
fits, the alpha sweep, and report emission."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .core import DEFAULT_MAX_PASSES, DEFAULT_TOL, FitResult, LambdaPath, fit_path, fit_to
from .dataset import FEATURE_LABELS, Dataset, assign_folds, load_csv, split, standardize, to_dataset
from .errors import ConfigError
from .evaluation import (
    ConfusionMatrix,
    RocCurve,
    accuracy,
    classify,
    compas_baseline,
    confusion,
    logistic_baseline,
    roc,
)
from .rng import derive_seed
from .selection import DEFAULT_ALPHAS, RULES, AlphaSearchResult, CvCurve, alpha_search, cross_validate
from .svg import line_chart

log = logging.getLogger(__name__)

PENALIZED = ("lasso", "ridge", "elastic_net")
MODELS = PENALIZED + ("logistic", "compas")
MODEL_LABELS = {
    "lasso": "LASSO",
    "ridge": "Ridge",
    "elastic_net": "Elastic net",
    "logistic": "Logistic",
    "compas": "COMPAS",
}
# sub-stream of the master seed reserved for representative splits
_REPRESENTATIVE_STREAM = 1 << 40


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str = "data/compas-scores-two-years.csv"
    column_map: Optional[dict] = None
    models: tuple = MODELS
    iterations: int = 1000
    train_fraction: float = 0.8
    k_folds: int = 10
    alpha_grid: tuple = DEFAULT_ALPHAS
    pinned_alpha: float = 0.3
    lambda_rule: str = "one_se"
    master_seed: int = 2019
    output_dir: str = "results"
    n_lambdas: int = 100
    lambda_ratio: float = 1e-4
    tol: float = DEFAULT_TOL
    max_passes: int = DEFAULT_MAX_PASSES
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if not self.models:
            raise ConfigError("models must name at least one model")
        unknown = [m for m in self.models if m not in MODELS]
        if unknown:
            raise ConfigError(f"unknown models {unknown}; choose from {list(MODELS)}")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("models must not repeat")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")
        if not 0 <= self.pinned_alpha <= 1:
            raise ConfigError("pinned_alpha must lie in [0, 1]")
        if not self.alpha_grid or any(not 0 <= a <= 1 for a in self.alpha_grid):
            raise ConfigError("alpha_grid must be non-empty with entries in [0, 1]")
        if self.lambda_rule not in RULES:
            raise ConfigError(f"lambda_rule must be one of {RULES}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        """Read a flat key/value YAML (or JSON) file."""
        import yaml

        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config file must be a key/value mapping")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        raw = dict(raw)
        if isinstance(raw.get("models"), str):
            raw["models"] = [m.strip() for m in raw["models"].split(",") if m.strip()]
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def alpha_for(self, model: str) -> float:
        return {"lasso": 1.0, "ridge": 0.0, "elastic_net": self.pinned_alpha}[model]


def data_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(cfg: ExperimentConfig, digest: str) -> str:
    """Hash of every setting that can change results, plus the data digest.

    Output location, worker count and the data file's path are excluded.
    """
    d = dataclasses.asdict(cfg)
    for k in ("output_dir", "workers", "data_path"):
        d.pop(k)
    d["data_sha256"] = digest
    blob = json.dumps(d, sort_keys=True, default=list).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class LoadedData:
    records: list
    dataset: Dataset
    compas: Optional[np.ndarray]
    digest: str
    dropped: int


def load_data(cfg: ExperimentConfig) -> LoadedData:
    records, report = load_csv(cfg.data_path, cfg.column_map)
    d = to_dataset(records)
    compas = None
    if all(r.compas_prediction is not None for r in records):
        compas = np.array([r.compas_prediction for r in records], dtype=np.int64)
    elif "compas" in cfg.models:
        raise ConfigError("model 'compas' requested but the data has no COMPAS column")
    return LoadedData(records, d, compas, data_digest(cfg.data_path), report.dropped)


def iteration_seeds(master_seed: int, n: int) -> list:
    return [derive_seed(master_seed, i) for i in range(n)]


def representative_seed(master_seed: int, replicate: int = 0) -> int:
    return derive_seed(derive_seed(master_seed, _REPRESENTATIVE_STREAM), replicate)


def _select_and_refit(train: Dataset, alpha: float, cfg: ExperimentConfig, folds):
    cv = cross_validate(
        train, alpha, folds=folds, n_lambdas=cfg.n_lambdas, ratio=cfg.lambda_ratio,
        tol=cfg.tol, max_passes=cfg.max_passes,
    )
    sel = cv.selected_index(cfg.lambda_rule)
    std = standardize(train)
    f = fit_to(std, alpha, cv.lambdas[: sel + 1], cfg.tol, cfg.max_passes)
    return f, cv, std


def run_iteration(seed: int, data: LoadedData, cfg: ExperimentConfig) -> dict:
    """Test-split accuracy of every configured model on one seeded split."""
    d = data.dataset
    plan = split(d.n, seed, cfg.train_fraction)
    train = d.take(plan.train_indices)
    X_test = d.X[plan.test_indices]
    y_test = d.y[plan.test_indices].astype(np.int64)
    folds = None
    out = {}
    for m in cfg.models:
        if m in PENALIZED:
            if folds is None:
                folds = assign_folds(train.n, cfg.k_folds, derive_seed(seed, 0))
            f, _, _ = _select_and_refit(train, cfg.alpha_for(m), cfg, folds)
            out[m] = accuracy(classify(f.intercept + X_test @ f.coefficients), y_test)
            out[m + "_converged"] = f.converged
        elif m == "logistic":
            res = logistic_baseline(standardize(train), X_test, y_test)
            out[m] = res.accuracy
        else:
            out[m] = accuracy(data.compas[plan.test_indices], y_test)
    return out


_WORKER_STATE: dict = {}


def _init_worker(data, cfg):
    _WORKER_STATE["data"] = data
    _WORKER_STATE["cfg"] = cfg


def _worker_iteration(seed):
    return run_iteration(seed, _WORKER_STATE["data"], _WORKER_STATE["cfg"])


@dataclass(frozen=True, eq=False)
class ModelAccuracy:
    mean: float
    sd: float
    accuracies: np.ndarray


def run_accuracy_protocol(cfg: ExperimentConfig, data: Optional[LoadedData] = None) -> dict:
    """Mean and sd of test accuracy over ``cfg.iterations`` seeded 80/20 splits.

    Seeds are generated up front from the master seed, so results do not
    depend on the worker count.
    """
    data = data or load_data(cfg)
    seeds = iteration_seeds(cfg.master_seed, cfg.iterations)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(data, cfg)) as ex:
            rows = list(ex.map(_worker_iteration, seeds, chunksize=max(1, len(seeds) // (4 * cfg.workers))))
    else:
        rows = [run_iteration(s, data, cfg) for s in seeds]
    table = {}
    for m in cfg.models:
        acc = np.array([r[m] for r in rows])
        sd = float(acc.std(ddof=1)) if len(acc) > 1 else 0.0
        table[m] = ModelAccuracy(float(acc.mean()), sd, acc)
    unconverged = sum(1 for r in rows for k, v in r.items() if k.endswith("_converged") and not v)
    if unconverged:
        log.warning("%d protocol fits stopped at max_passes before converging", unconverged)
    return table


@dataclass(frozen=True, eq=False)
class RepresentativeFit:
    model: str
    alpha: float
    split_seed: int
    fit: FitResult
    cv: CvCurve
    path: LambdaPath
    confusion: ConfusionMatrix
    roc: RocCurve
    test_accuracy: float


def run_representative_fit(
    cfg: ExperimentConfig, model: str, data: Optional[LoadedData] = None, replicate: int = 0
) -> RepresentativeFit:
    """One seeded split: CV on the training side, refit at the chosen lambda,
    test-side confusion matrix and ROC, plus the full coefficient path."""
    if model not in PENALIZED:
        raise ConfigError(f"representative fits exist for {PENALIZED}, not {model!r}")
    data = data or load_data(cfg)
    d = data.dataset
    seed = representative_seed(cfg.master_seed, replicate)
    plan = split(d.n, seed, cfg.train_fraction)
    train = d.take(plan.train_indices)
    alpha = cfg.alpha_for(model)
    folds = assign_folds(train.n, cfg.k_folds, derive_seed(seed, 0))
    f, cv, std = _select_and_refit(train, alpha, cfg, folds)
    path = fit_path(std, alpha, cv.lambdas, cfg.tol, cfg.max_passes)
    X_test = d.X[plan.test_indices]
    y_test = d.y[plan.test_indices].astype(np.int64)
    scores = f.intercept + X_test @ f.coefficients
    pred = classify(scores)
    return RepresentativeFit(
        model, alpha, seed, f, cv, path, confusion(pred, y_test), roc(scores, y_test),
        accuracy(pred, y_test),
    )


def run_alpha_sweep(cfg: ExperimentConfig, data: Optional[LoadedData] = None) -> AlphaSearchResult:
    """CV MSE at each alpha's selected lambda, on the representative training split."""
    data = data or load_data(cfg)
    d = data.dataset
    seed = representative_seed(cfg.master_seed)
    plan = split(d.n, seed, cfg.train_fraction)
    train = d.take(plan.train_indices)
    folds = assign_folds(train.n, cfg.k_folds, derive_seed(seed, 0))
    return alpha_search(
        train, cfg.alpha_grid, rule=cfg.lambda_rule, folds=folds, n_lambdas=cfg.n_lambdas, ratio=cfg.lambda_ratio,
        tol=cfg.tol, max_passes=cfg.max_passes,
    )


@dataclass(frozen=True, eq=False)
class RunReport:
    config: ExperimentConfig
    config_hash: str
    data_sha256: str
    n_records: int
    compas_full_accuracy: Optional[float]
    accuracy: dict = field(default_factory=dict)
    representative: dict = field(default_factory=dict)
    alpha_search: Optional[AlphaSearchResult] = None

    @property
    def provenance(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "master_seed": self.config.master_seed,
            "software": f"penreg {__version__}",
            "data_sha256": self.data_sha256,
        }


def run_experiment(cfg: ExperimentConfig, data: Optional[LoadedData] = None) -> RunReport:
    data = data or load_data(cfg)
    log.info("running %d iterations for %s", cfg.iterations, ", ".join(cfg.models))
    acc = run_accuracy_protocol(cfg, data)
    reps = {m: run_representative_fit(cfg, m, data) for m in cfg.models if m in PENALIZED}
    sweep = run_alpha_sweep(cfg, data) if "elastic_net" in cfg.models else None
    compas_full = compas_baseline(data.records) if data.compas is not None else None
    return RunReport(
        cfg, config_hash(cfg, data.digest), data.digest, data.dataset.n, compas_full, acc, reps, sweep
    )


# ---------------------------------------------------------------- output


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows, prov) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow([*header, "config_hash", "master_seed"])
    for r in rows:
        w.writerow([*r, prov["config_hash"], prov["master_seed"]])
    return buf.getvalue()


def _num(v):
    return "" if v is None else repr(float(v))


def report_dict(report: RunReport) -> dict:
    cfg = dataclasses.asdict(report.config)
    out = {
        "provenance": report.provenance,
        "config": cfg,
        "n_records": report.n_records,
        "compas_full_accuracy": report.compas_full_accuracy,
        "accuracy_protocol": {
            m: {"mean": a.mean, "sd": a.sd, "iterations": len(a.accuracies)}
            for m, a in report.accuracy.items()
        },
        "representative": {},
    }
    for m, r in report.representative.items():
        out["representative"][m] = {
            "alpha": r.alpha,
            "split_seed": r.split_seed,
            "lambda_selected": r.fit.penalty.lam,
            "lambda_min": r.cv.lambda_min,
            "lambda_1se": r.cv.lambda_1se,
            "cv_mse_selected": r.cv.mse_at(report.config.lambda_rule),
            "intercept": r.fit.intercept,
            "coefficients": dict(zip(r.fit.feature_names, r.fit.coefficients.tolist())),
            "dropped": list(r.fit.dropped),
            "converged": r.fit.converged,
            "test_accuracy": r.test_accuracy,
            "auc": r.roc.auc,
            "confusion": dataclasses.asdict(r.confusion),
            "confusion_rates": r.confusion.rates(),
            "confusion_rendered": r.confusion.render(),
        }
    if report.alpha_search is not None:
        s = report.alpha_search
        out["alpha_search"] = {
            "rule": s.rule,
            "alphas": s.alphas.tolist(),
            "cv_mse": s.cv_mse_at_selected_lambda.tolist(),
            "selected_lambda": [c.selected_lambda(s.rule) for c in s.curves],
            "best_alpha": s.best_alpha,
        }
    return out


def emit_report(report: RunReport, output_dir) -> list:
    """Write tables, figure data (CSV + SVG) and report.json; returns the paths.

    Each file is written to a temporary name and renamed into place.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    prov = report.provenance
    extra = {"config_hash": prov["config_hash"], "master_seed": prov["master_seed"]}
    files: dict[str, str] = {}

    rows = []
    if report.compas_full_accuracy is not None:
        rows.append(["compas_full_data", _num(report.compas_full_accuracy), "", 1])
    for m, a in report.accuracy.items():
        rows.append([m, _num(a.mean), _num(a.sd), len(a.accuracies)])
    files["table1_accuracy.csv"] = _csv(["model", "mean_accuracy", "sd_accuracy", "iterations"], rows, prov)

    reps = report.representative
    if reps:
        models = list(reps)
        first = reps[models[0]].fit
        rows = [
            ["lambda_selected", *(_num(reps[m].fit.penalty.lam) for m in models)],
            ["alpha", *(_num(reps[m].alpha) for m in models)],
            ["intercept", *(_num(reps[m].fit.intercept) for m in models)],
        ]
        for j, name in enumerate(first.feature_names):
            rows.append([name, *(_num(reps[m].fit.coefficients[j]) for m in models)])
        rows.append(["test_accuracy", *(_num(reps[m].test_accuracy) for m in models)])
        rows.append(["auc", *(_num(reps[m].roc.auc) for m in models)])
        files["table5_coefficients.csv"] = _csv(["term", *models], rows, prov)

        rows = [
            [m, r.confusion.tp, r.confusion.fp, r.confusion.fn, r.confusion.tn,
             *(r.confusion.percent(c) for c in ("tp", "fp", "fn", "tn"))]
            for m, r in reps.items()
        ]
        files["tables2_4_confusion.csv"] = _csv(
            ["model", "tp", "fp", "fn", "tn", "tp_pct", "fp_pct", "fn_pct", "tn_pct"], rows, prov
        )

        meta = {**extra, "software": prov["software"]}
        roc_rows = []
        roc_series = []
        for m, r in reps.items():
            label = MODEL_LABELS[m]
            files[f"fig1_{m}_paths.csv"] = r.path.to_csv(extra)
            loglam = np.log(r.path.lambdas)
            coefs = r.path.coefficient_matrix()
            series = [(FEATURE_LABELS.get(n, n), loglam, coefs[:, j]) for j, n in enumerate(first.feature_names)]
            files[f"fig1_{m}_paths.svg"] = line_chart(
                series, f"Coefficient path: {label}", "log(lambda)", "Coefficient",
                vlines=[("selected lambda", math.log(r.fit.penalty.lam))], metadata=meta,
            )
            files[f"fig3_{m}_cv.csv"] = r.cv.to_csv(extra)
            files[f"fig3_{m}_cv.svg"] = line_chart(
                [("mean CV MSE", np.log(r.cv.lambdas), r.cv.mean_mse),
                 ("+1 SE", np.log(r.cv.lambdas), r.cv.mean_mse + r.cv.se_mse),
                 ("-1 SE", np.log(r.cv.lambdas), r.cv.mean_mse - r.cv.se_mse)],
                f"Cross-validation: {label}", "log(lambda)", "Mean squared error",
                vlines=[("lambda_min", math.log(r.cv.lambda_min)), ("lambda_1se", math.log(r.cv.lambda_1se))],
                metadata=meta,
            )
            roc_rows += [[m, repr(float(x)), repr(float(y))] for x, y in zip(r.roc.fpr, r.roc.tpr)]
            roc_series.append((f"{label} (AUC {r.roc.auc:.4f})", r.roc.fpr, r.roc.tpr))
        files["fig2_roc.csv"] = _csv(["model", "fpr", "tpr"], roc_rows, prov)
        files["fig2_roc.svg"] = line_chart(
            roc_series, "ROC curves", "False positive rate", "True positive rate",
            diagonal=True, xlim=(0, 1), ylim=(0, 1), metadata=meta,
        )

    if report.alpha_search is not None:
        files["table6_alpha_mse.csv"] = report.alpha_search.to_csv(extra)

    files["report.json"] = json.dumps(report_dict(report), indent=2, sort_keys=True) + "\n"

    written = []
    for name in sorted(files):
        p = out / name
        _atomic_write(p, files[name])
        written.append(p)
    return written
