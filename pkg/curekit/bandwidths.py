"""Bandwidth containers, search grids, grid minimization and smoothing."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from curekit.errors import DegenerateCovariate, UsageError

logger = logging.getLogger(__name__)

IQR_TO_SIGMA = 1.349

LOCAL = "local"
GLOBAL = "global"


@dataclass(frozen=True, eq=False)
class BandwidthSpec:
    """Local (one per evaluation point) or global smoothing parameters.

    A NaN entry in a local spec marks a point where no bandwidth could be
    selected; estimators report that point as failed.
    """

    mode: str
    values: np.ndarray

    def __post_init__(self):
        if self.mode not in (LOCAL, GLOBAL):
            raise UsageError(f"bandwidth mode must be '{LOCAL}' or '{GLOBAL}', got {self.mode!r}", "BandwidthSpec")
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0:
            raise UsageError("at least one bandwidth is required", "BandwidthSpec")
        if self.mode == GLOBAL and values.size != 1:
            raise UsageError("a global bandwidth spec holds exactly one value", "BandwidthSpec")
        finite = values[~np.isnan(values)]
        if np.any(finite <= 0) or np.any(np.isinf(finite)):
            raise UsageError("bandwidths must be positive and finite", "BandwidthSpec")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def local(cls, values: Sequence[float]) -> "BandwidthSpec":
        return cls(LOCAL, np.asarray(values, dtype=float))

    @classmethod
    def single(cls, value: float) -> "BandwidthSpec":
        return cls(GLOBAL, np.array([float(value)]))

    @classmethod
    def from_values(cls, values: Sequence[float], local: bool = True) -> "BandwidthSpec":
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if local:
            return cls.local(values)
        return cls.single(values[0])

    def for_points(self, m: int) -> np.ndarray:
        """Bandwidth per evaluation point."""
        if self.mode == GLOBAL:
            return np.full(m, self.values[0])
        if self.values.size != m:
            raise UsageError(
                f"local bandwidths need one value per x0 point ({self.values.size} given, {m} points)",
                "BandwidthSpec",
            )
        return np.array(self.values)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class BandwidthGrid:
    """Geometric grid of candidate bandwidths between hbound multiples of the sIQR."""

    values: np.ndarray
    hbound: Tuple[float, float]
    hl: int

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "hbound": list(self.hbound), "hl": self.hl}


@dataclass(frozen=True, eq=False)
class BandwidthSelection:
    """Outcome of a grid-search bandwidth selector."""

    kind: str
    x0: np.ndarray
    h: BandwidthSpec
    smoothed: Optional[BandwidthSpec] = None
    grid: Optional[BandwidthGrid] = None
    criterion: Optional[np.ndarray] = None
    dropped: Optional[np.ndarray] = None
    errors: Tuple[Optional[str], ...] = ()
    seed: Optional[int] = None

    @property
    def selected(self) -> BandwidthSpec:
        """Smoothed bandwidths when smoothing was requested, raw ones otherwise."""
        return self.smoothed if self.smoothed is not None else self.h


def standardized_iqr(covariate: Sequence[float]) -> float:
    """IQR / 1.349, falling back to the standard deviation for a zero IQR."""
    x = np.asarray(covariate, dtype=float)
    q25, q75 = np.quantile(x, [0.25, 0.75])
    scale = (q75 - q25) / IQR_TO_SIGMA
    if scale > 0:
        return float(scale)
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    if sd > 0:
        logger.debug("Covariate IQR is zero; scaling the bandwidth grid by the standard deviation")
        return sd
    raise DegenerateCovariate("covariate has zero spread; no bandwidth scale", "standardized_iqr")


def bandwidth_grid(covariate: Sequence[float], hbound: Tuple[float, float], hl: int) -> BandwidthGrid:
    scale = standardized_iqr(covariate)
    lo, hi = hbound
    values = np.geomspace(lo * scale, hi * scale, int(hl))
    values.setflags(write=False)
    return BandwidthGrid(values=values, hbound=(float(lo), float(hi)), hl=int(hl))


def select_minimizer(criterion: np.ndarray) -> int:
    """Index of the minimum over finite entries; ties go to the largest bandwidth."""
    crit = np.asarray(criterion, dtype=float)
    finite = np.isfinite(crit)
    if not finite.any():
        return -1
    best = crit[finite].min()
    return int(np.flatnonzero(finite & (crit == best))[-1])


def smooth_bandwidths(h: Sequence[float], window: int) -> np.ndarray:
    """Centered moving average, the window truncated symmetrically at the edges."""
    if window < 1:
        raise UsageError(f"smoothing window must be >= 1, got {window}", "smooth_bandwidths")
    values = np.asarray(h, dtype=float)
    if window == 1:
        return values.copy()
    m = values.size
    left = (window - 1) // 2
    right = window - 1 - left
    smoothed = np.empty(m)
    for j in range(m):
        # positions outside the vector are dropped from the window
        chunk = values[max(0, j - left):min(m, j + right + 1)]
        chunk = chunk[~np.isnan(chunk)]
        smoothed[j] = chunk.mean() if chunk.size else np.nan
    return smoothed
