import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from curekit.control import ControlParams
from curekit.ingest import ingest_csv
from curekit.simulation import simulate_model
from curekit.survival_data import SurvivalSample

PROJECT_ROOT = Path(__file__).parent.parent
BMT_CSV = Path(os.getenv("CUREKIT_BMT_CSV", str(PROJECT_ROOT / "tests" / "data" / "bmt.csv")))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep CUREKIT_* settings from the developer shell out of the tests."""
    monkeypatch.delenv("CUREKIT_SEED", raising=False)
    monkeypatch.delenv("CUREKIT_WORKERS", raising=False)


@pytest.fixture
def four_subjects():
    """T = 1..4 with the first two uncensored; covariates spread over [0, 3]."""
    return SurvivalSample(x=[0.0, 1.0, 2.0, 3.0], t=[1.0, 2.0, 3.0, 4.0], d=[1, 1, 0, 0])


@pytest.fixture
def fast_params():
    """Small bootstrap and grid so selectors run quickly."""
    return ControlParams(B=40, hl=8, seed=20240601, workers=1)


@pytest.fixture
def sim_sample():
    return simulate_model(120, seed=11).sample


@pytest.fixture
def random_sample():
    rng = np.random.default_rng(5)
    n = 60
    x = rng.uniform(0, 1, n)
    t = rng.exponential(1.0, n)
    d = (rng.uniform(size=n) < 0.7).astype(int)
    return SurvivalSample(x=x, t=t, d=d)


@pytest.fixture
def bmt_path():
    if not BMT_CSV.exists():
        pytest.skip(f"bmt dataset not available at {BMT_CSV}; set CUREKIT_BMT_CSV (see README)")
    return str(BMT_CSV)


@pytest.fixture
def bmt_loader(bmt_path):
    def load(x_col: str, categorical=None) -> SurvivalSample:
        return ingest_csv(bmt_path, x_col, "t2", "d3", categorical=categorical)

    return load


@pytest.fixture
def write_csv(tmp_path):
    """Write a header plus rows to a CSV file under tmp_path and return its path."""

    def write(header: str, rows, name: str = "data.csv") -> str:
        path = tmp_path / name
        path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
        return str(path)

    return write
