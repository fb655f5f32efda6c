"""CSV ingestion into a SurvivalSample."""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from curekit.errors import EmptyAfterFiltering, MissingColumn, ParseError, UsageError
from curekit.survival_data import SurvivalSample

logger = logging.getLogger(__name__)

MISSING_TOKENS = ("", "NA")


def _first_bad_row(mask: np.ndarray, rows: np.ndarray) -> int:
    return int(rows[np.flatnonzero(mask)[0]])


def ingest_csv(
    path: str,
    x_col: str,
    t_col: str,
    d_col: str,
    categorical: Optional[bool] = None,
) -> SurvivalSample:
    """Read three columns of a comma-separated file with a header row.

    Rows with an empty or ``NA`` field in any of the three columns are dropped.
    Row numbers in errors count data rows from 1.
    """
    csv_path = Path(path)
    if not csv_path.exists():
        raise UsageError(f"input file not found: {csv_path}", "ingest_csv")

    try:
        frame = pd.read_csv(csv_path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot parse {csv_path}: {e}")
    except pd.errors.EmptyDataError:
        raise EmptyAfterFiltering(f"{csv_path} is empty", "ingest_csv")

    missing = [c for c in (x_col, t_col, d_col) if c not in frame.columns]
    if missing:
        raise MissingColumn(f"column(s) {', '.join(missing)} not found in {csv_path}", "ingest_csv")

    cols = frame[[x_col, t_col, d_col]].apply(lambda s: s.str.strip())
    rows = np.arange(1, len(cols) + 1)
    keep = ~cols.isin(MISSING_TOKENS).any(axis=1).to_numpy()
    dropped = int((~keep).sum())
    if dropped:
        logger.warning(f"Dropped {dropped} row(s) with missing values in {x_col}, {t_col} or {d_col}")
    cols = cols[keep]
    rows = rows[keep]
    if len(cols) == 0:
        raise EmptyAfterFiltering(f"no complete rows left in {csv_path}", "ingest_csv")

    t = pd.to_numeric(cols[t_col], errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(t)
    if bad.any():
        raise ParseError(f"column {t_col} is not a finite number", _first_bad_row(bad, rows))
    if (t < 0).any():
        raise ParseError(f"column {t_col} is negative", _first_bad_row(t < 0, rows))

    d = pd.to_numeric(cols[d_col], errors="coerce").to_numpy(dtype=float)
    bad = ~((d == 0) | (d == 1))
    if bad.any():
        raise ParseError(f"column {d_col} must be 0 or 1", _first_bad_row(bad, rows))

    x_numeric = pd.to_numeric(cols[x_col], errors="coerce").to_numpy(dtype=float)
    if categorical is None:
        categorical = bool(np.isnan(x_numeric).any())
    if categorical:
        x = cols[x_col].to_numpy(dtype=object)
    else:
        bad = ~np.isfinite(x_numeric)
        if bad.any():
            raise ParseError(f"column {x_col} is not a finite number", _first_bad_row(bad, rows))
        x = x_numeric

    logger.debug(f"Read {len(t)} subjects from {csv_path} ({'categorical' if categorical else 'continuous'} covariate)")
    return SurvivalSample(x=x, t=t, d=d.astype(int), categorical=categorical)
