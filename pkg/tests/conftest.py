import os
from pathlib import Path

import numpy as np
import pytest

from penreg.dataset import Dataset, standardize

ROOT = Path(__file__).resolve().parent.parent
DATA = Path(os.environ.get("PENREG_DATA", ROOT / "data" / "compas-scores-two-years.csv"))

_CRITERIA = []


@pytest.fixture(scope="session")
def data_path():
    if not DATA.exists():
        pytest.fail(f"two-year recidivism CSV not found at {DATA} (set PENREG_DATA)")
    return DATA


@pytest.fixture
def record_criterion():
    def record(cid, description, ok, detail=""):
        _CRITERIA.append((cid, description, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid, desc, ok, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {cid}: {desc} -- {detail}")


def random_problem(rng, n, p, noise=0.5):
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 3, size=p) + rng.normal(size=p)
    beta = rng.normal(size=p)
    y = 1.0 + X @ beta + noise * rng.normal(size=n)
    return Dataset(X, y, tuple(f"x{j}" for j in range(p)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def std_problem(rng):
    return standardize(random_problem(rng, 40, 5))
