"""Broward County CSV ingestion, feature encoding, standardization, and
seeded train/test splits and CV folds."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    ConstantColumn,
    DataError,
    DataQualityError,
    DegenerateSplit,
    EmptyInput,
    HeaderMissing,
    InvalidK,
)
from .rng import SplitMix64

log = logging.getLogger(__name__)

FEATURES = (
    "race",
    "sex",
    "age",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "priors_count",
    "charge_degree",
)

FEATURE_LABELS = {
    "race": "Race",
    "sex": "Sex",
    "age": "Age",
    "juv_fel_count": "Juvenile felony count",
    "juv_misd_count": "Juvenile misdemeanor count",
    "juv_other_count": "Juvenile other count",
    "priors_count": "Priors count",
    "charge_degree": "Charge degree",
}

# role -> column in the ProPublica compas-scores-two-years.csv file.
# COMPAS "predicts recidivism" when its decile score is 5 or more, which is
# the same as score_text being Medium or High.
PROPUBLICA_COLUMNS = {
    "race": "race",
    "sex": "sex",
    "age": "age",
    "juv_fel_count": "juv_fel_count",
    "juv_misd_count": "juv_misd_count",
    "juv_other_count": "juv_other_count",
    "priors_count": "priors_count",
    "charge_degree": "c_charge_degree",
    "two_year_recid": "two_year_recid",
    "compas_prediction": "score_text",
}

RACE_CODES = {
    "white": 1,
    "caucasian": 1,
    "black": 2,
    "african-american": 2,
    "african american": 2,
    "hispanic": 3,
    "asian": 4,
    "native american": 5,
    "native-american": 5,
    "other": 6,
}

_SEX = {"female": 1, "f": 1, "male": 0, "m": 0}
_CHARGE = {"f": 1, "felony": 1, "m": 0, "misdemeanor": 0}
_COMPAS_TEXT = {"low": 0, "medium": 1, "high": 1}


@dataclass(frozen=True, slots=True)
class DefendantRecord:
    race: int
    sex: int
    age: int
    juv_fel_count: int
    juv_misd_count: int
    juv_other_count: int
    priors_count: int
    charge_degree: int
    two_year_recid: int
    compas_prediction: Optional[int] = None

    def __post_init__(self):
        if self.race not in range(1, 7):
            raise DataError(f"race code {self.race} outside 1..6")
        for name in ("sex", "charge_degree", "two_year_recid"):
            if getattr(self, name) not in (0, 1):
                raise DataError(f"{name} must be 0 or 1")
        if self.compas_prediction not in (None, 0, 1):
            raise DataError("compas_prediction must be 0 or 1")
        if self.age <= 0:
            raise DataError("age must be positive")
        for name in ("juv_fel_count", "juv_misd_count", "juv_other_count", "priors_count"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be non-negative")

    def features(self) -> tuple:
        return tuple(getattr(self, f) for f in FEATURES)


@dataclass(frozen=True)
class LoadReport:
    path: str
    retained: int
    dropped: int
    drop_reasons: dict = field(default_factory=dict)


def _parse_int(text: str) -> int:
    v = float(text)
    if not math.isfinite(v) or v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _parse_binary(text: str) -> int:
    v = _parse_int(text)
    if v not in (0, 1):
        raise ValueError(f"not binary: {text!r}")
    return v


def _lookup(table: Mapping[str, int], what: str):
    def parse(text: str) -> int:
        key = text.strip().lower()
        if key in table:
            return table[key]
        return _parse_binary(key) if what != "race" else _parse_int(key)

    return parse


_PARSERS = {
    "race": _lookup(RACE_CODES, "race"),
    "sex": _lookup(_SEX, "sex"),
    "age": _parse_int,
    "juv_fel_count": _parse_int,
    "juv_misd_count": _parse_int,
    "juv_other_count": _parse_int,
    "priors_count": _parse_int,
    "charge_degree": _lookup(_CHARGE, "charge_degree"),
    "two_year_recid": _parse_binary,
    "compas_prediction": _lookup(_COMPAS_TEXT, "compas_prediction"),
}


def load_csv(
    path, column_map: Optional[Mapping[str, Optional[str]]] = None
) -> tuple[list[DefendantRecord], LoadReport]:
    """Read defendant records from a CSV file.

    ``column_map`` maps record fields to CSV column names and defaults to the
    ProPublica two-year schema. Mapping ``compas_prediction`` to None loads
    records without the COMPAS column. Rows whose mapped fields are missing
    or unparseable are dropped and tallied in the returned report.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    cmap = dict(PROPUBLICA_COLUMNS)
    if column_map:
        cmap.update(column_map)
    unknown = set(cmap) - set(_PARSERS)
    if unknown:
        raise DataError(f"unknown record fields in column map: {sorted(unknown)}")
    roles = [r for r in _PARSERS if cmap.get(r) is not None]
    for r in _PARSERS:
        if r not in roles and r != "compas_prediction":
            raise DataError(f"column map must name a column for {r!r}")

    records: list[DefendantRecord] = []
    reasons: dict[str, int] = {}
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise HeaderMissing(cmap[roles[0]])
        header = [h.strip() for h in header]
        pos = {}
        for r in roles:
            if cmap[r] not in header:
                raise HeaderMissing(cmap[r])
            pos[r] = header.index(cmap[r])
        for row in reader:
            if not row:
                continue
            values = {}
            bad = None
            for r in roles:
                i = pos[r]
                text = row[i].strip() if i < len(row) else ""
                if text == "" or text.upper() == "NA":
                    bad = f"missing {r}"
                    break
                try:
                    values[r] = _PARSERS[r](text)
                except ValueError:
                    bad = f"unparseable {r}"
                    break
            if bad is None:
                try:
                    records.append(DefendantRecord(**values))
                except DataError:
                    bad = "invalid value"
            if bad is not None:
                reasons[bad] = reasons.get(bad, 0) + 1

    dropped = sum(reasons.values())
    report = LoadReport(str(path), len(records), dropped, reasons)
    log.info("loaded %s: %d retained, %d dropped", path, report.retained, dropped)
    total = len(records) + dropped
    if total > 0 and dropped > total / 2:
        raise DataQualityError(
            f"{dropped} of {total} rows dropped from {path} ({reasons})"
        )
    return records, report


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix plus response.

    ``means``/``scales`` are None for raw data. For standardized data they
    hold the per-column statistics that were removed, so fitted coefficients
    can be mapped back to the original feature scale.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    means: Optional[np.ndarray] = None
    scales: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"incompatible shapes X{X.shape} y{y.shape}")
        names = tuple(self.feature_names)
        if len(names) != X.shape[1]:
            raise DataError("feature_names length differs from column count")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)
        for attr in ("means", "scales"):
            v = getattr(self, attr)
            if v is not None:
                v = np.array(v, dtype=float)
                v.setflags(write=False)
                object.__setattr__(self, attr, v)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def is_standardized(self) -> bool:
        return self.means is not None

    def take(self, indices) -> "Dataset":
        """Row subset of a raw dataset."""
        if self.is_standardized:
            raise DataError("take() is only defined for raw datasets")
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], self.feature_names)


def to_dataset(records: Sequence[DefendantRecord], target: str = "two_year_recid") -> Dataset:
    if target != "two_year_recid":
        raise DataError(f"unsupported target {target!r}")
    if len(records) == 0:
        raise EmptyInput("no records")
    X = np.array([r.features() for r in records], dtype=float)
    y = np.array([r.two_year_recid for r in records], dtype=float)
    return Dataset(X, y, FEATURES)


def standardize(d: Dataset) -> Dataset:
    if d.is_standardized:
        raise DataError("dataset is already standardized")
    means = d.X.mean(axis=0)
    scales = d.X.std(axis=0)
    for j, s in enumerate(scales):
        if not s > 1e-12 * max(1.0, abs(means[j])):
            raise ConstantColumn(d.feature_names[j])
    return Dataset((d.X - means) / scales, d.y, d.feature_names, means, scales)


def destandardize(d: Dataset) -> Dataset:
    if not d.is_standardized:
        return d
    return Dataset(d.X * d.scales + d.means, d.y, d.feature_names)


@dataclass(frozen=True, eq=False)
class SplitPlan:
    seed: int
    n: int
    train_fraction: float
    train_indices: np.ndarray
    test_indices: np.ndarray


def split(n: int, seed: int, train_fraction: float = 0.8) -> SplitPlan:
    """Seeded random train/test partition of ``range(n)``.

    The first round(train_fraction * n) entries (halves round up) of a
    SplitMix64 Fisher-Yates permutation form the training side. Index arrays
    are returned sorted.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DegenerateSplit(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(math.floor(train_fraction * n + 0.5))
    if n < 2 or n_train == 0 or n_train == n:
        raise DegenerateSplit(f"n={n}, train_fraction={train_fraction} leaves a side empty")
    perm = SplitMix64(seed).permutation(n)
    train = np.sort(perm[:n_train])
    test = np.sort(perm[n_train:])
    train.setflags(write=False)
    test.setflags(write=False)
    return SplitPlan(int(seed), n, float(train_fraction), train, test)


def assign_folds(n: int, k: int, seed: int) -> np.ndarray:
    """Fold label in 0..k-1 for each row; fold sizes differ by at most one."""
    if not 2 <= k <= n:
        raise InvalidK(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = SplitMix64(seed).permutation(n)
    labels = np.empty(n, dtype=np.int64)
    labels[perm] = np.arange(n) % k
    return labels
