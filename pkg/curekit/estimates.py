"""Result containers returned by the estimators."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from curekit.bandwidths import BandwidthSelection, BandwidthSpec


@dataclass(frozen=True, eq=False)
class CureEstimate:
    """Cure probabilities 1 - p(x0) on an x0 grid.

    ``errors[j]`` holds the failure message for point j (its cure is NaN), and
    ``no_events`` flags the all-censored convention cure = 1.
    """

    x0: np.ndarray
    h: BandwidthSpec
    cure: np.ndarray
    t1max: Optional[float] = None
    ci_lower: Optional[np.ndarray] = None
    ci_upper: Optional[np.ndarray] = None
    conflevel: Optional[float] = None
    errors: Tuple[Optional[str], ...] = ()
    no_events: bool = False
    selection: Optional[BandwidthSelection] = None
    seed: Optional[int] = None


@dataclass(frozen=True, eq=False)
class CurveEstimate:
    """Per-x0 curves evaluated on a common vector of times, shape (m, len(times))."""

    x0: np.ndarray
    h: BandwidthSpec
    times: np.ndarray
    values: np.ndarray
    ci_lower: Optional[np.ndarray] = None
    ci_upper: Optional[np.ndarray] = None
    conflevel: Optional[float] = None
    errors: Tuple[Optional[str], ...] = ()
    selection: Optional[BandwidthSelection] = None
    seed: Optional[int] = None

    kind = "curve"


@dataclass(frozen=True, eq=False)
class SurvivalEstimate(CurveEstimate):
    """Conditional survival S(t | x0)."""

    kind = "survival"


@dataclass(frozen=True, eq=False)
class LatencyEstimate(CurveEstimate):
    """Latency S0(t | x0); ``unclamped`` keeps the values before clipping to [0, 1]."""

    unclamped: Optional[np.ndarray] = None
    cure: Optional[np.ndarray] = None

    kind = "latency"

    @property
    def testim(self) -> np.ndarray:
        return self.times

    @property
    def S0(self) -> np.ndarray:
        return self.values
