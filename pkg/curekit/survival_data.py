"""Survival data model, Epanechnikov kernel weights and Kaplan-Meier estimation.

The generalized product-limit recursion lives here as well (``product_limit``)
because the Kaplan-Meier, Beran, cure and latency estimators are all the same
product evaluated with different weights.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Sequence

import numpy as np

from curekit.errors import AllWeightsZero, CureFractionOne, InvalidSample

logger = logging.getLogger(__name__)


def _readonly(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class SurvivalSample:
    """Covariate, observed time and uncensoring indicator per subject.

    Observations are ordered once by (t ascending, d descending) so that at tied
    times events precede censorings; the permutation is stable and cached.
    """

    x: np.ndarray
    t: np.ndarray
    d: np.ndarray
    categorical: bool = False

    def __post_init__(self):
        t = np.array(self.t, dtype=float).ravel()
        d_raw = np.asarray(self.d).ravel()
        if self.categorical:
            x = np.array([str(v) for v in np.asarray(self.x, dtype=object).ravel()], dtype=object)
        else:
            try:
                x = np.array(self.x, dtype=float).ravel()
            except (TypeError, ValueError):
                raise InvalidSample("covariate is not numeric; pass categorical=True", "SurvivalSample")

        n = t.size
        if n < 1:
            raise InvalidSample("sample must contain at least one subject", "SurvivalSample")
        if x.size != n or d_raw.size != n:
            raise InvalidSample(
                f"columns differ in length (x={x.size}, t={n}, d={d_raw.size})", "SurvivalSample"
            )
        if not np.all(np.isfinite(t)):
            raise InvalidSample("observed times must be finite", "SurvivalSample")
        if np.any(t < 0):
            raise InvalidSample("observed times must be >= 0", "SurvivalSample")
        d_float = np.asarray(d_raw, dtype=float)
        if not np.all((d_float == 0) | (d_float == 1)):
            raise InvalidSample("uncensoring indicators must be 0 or 1", "SurvivalSample")
        if not self.categorical and not np.all(np.isfinite(x)):
            raise InvalidSample("covariate values must be finite", "SurvivalSample")

        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "t", _readonly(t))
        object.__setattr__(self, "d", _readonly(d_float.astype(np.int8)))

    @classmethod
    def from_arrays(cls, x: Sequence, t: Sequence, d: Sequence, categorical: Optional[bool] = None) -> "SurvivalSample":
        """Build a sample, treating the covariate as categorical when it is not numeric."""
        if categorical is None:
            try:
                np.asarray(x, dtype=float)
                categorical = False
            except (TypeError, ValueError):
                categorical = True
        return cls(x=x, t=t, d=d, categorical=categorical)

    @property
    def n(self) -> int:
        return int(self.t.size)

    @cached_property
    def order(self) -> np.ndarray:
        return _readonly(np.lexsort((-self.d, self.t)))

    @cached_property
    def t_sorted(self) -> np.ndarray:
        return _readonly(self.t[self.order])

    @cached_property
    def d_sorted(self) -> np.ndarray:
        return _readonly(self.d[self.order].astype(float))

    @cached_property
    def x_sorted(self) -> np.ndarray:
        return _readonly(self.x[self.order])

    @property
    def has_events(self) -> bool:
        return bool(np.any(self.d == 1))

    @cached_property
    def last_event_index(self) -> Optional[int]:
        """Position of the largest uncensored time in the sorted order."""
        events = np.flatnonzero(self.d_sorted == 1)
        if events.size == 0:
            return None
        return int(events[-1])

    @property
    def t1max(self) -> Optional[float]:
        """Largest uncensored observed time, or None without events."""
        idx = self.last_event_index
        return None if idx is None else float(self.t_sorted[idx])

    @cached_property
    def unique_times(self) -> np.ndarray:
        return _readonly(np.unique(self.t))

    @cached_property
    def levels(self) -> tuple:
        return tuple(sorted(set(self.x.tolist())))

    def subset(self, mask: np.ndarray) -> "SurvivalSample":
        mask = np.asarray(mask)
        return SurvivalSample(x=self.x[mask], t=self.t[mask], d=self.d[mask], categorical=self.categorical)

    def flipped(self) -> "SurvivalSample":
        """Same subjects with censoring treated as the event."""
        return SurvivalSample(x=self.x, t=self.t, d=1 - self.d, categorical=self.categorical)

    def require_continuous(self, operation: str) -> None:
        if self.categorical:
            raise InvalidSample("operation needs a continuous covariate", operation)


@dataclass(frozen=True, eq=False)
class KernelWeightVector:
    """Nadaraya-Watson weights at x0, ordered like the time-sorted sample."""

    weights: np.ndarray
    x0: float
    h: float


@dataclass(frozen=True, eq=False)
class StepFunctionEstimate:
    """Right-continuous survival-type step curve; equal to 1 before the first time."""

    times: np.ndarray
    values: np.ndarray
    x0: Optional[float] = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float).ravel()
        values = np.array(self.values, dtype=float).ravel()
        if times.size != values.size:
            raise ValueError("times and values must have equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "values", _readonly(values))

    def __call__(self, at) -> np.ndarray:
        return step_values(self.times, self.values, np.asarray(at, dtype=float))


def epanechnikov(u):
    """K(u) = 0.75 (1 - u^2) on |u| <= 1, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    k = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return float(k) if k.ndim == 0 else k


def kernel_values(x: np.ndarray, x0, h) -> np.ndarray:
    """Unnormalized kernel values K((x0 - x) / h), broadcast over x0/h leading axes."""
    x0 = np.asarray(x0, dtype=float)[..., None]
    h = np.asarray(h, dtype=float)[..., None]
    return epanechnikov((x0 - np.asarray(x, dtype=float)) / h)


def nw_weights(sample: SurvivalSample, x0: float, h: float) -> KernelWeightVector:
    """Nadaraya-Watson weights B_h[i](x0) in the sample's time-sorted order."""
    sample.require_continuous("nw_weights")
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    raw = kernel_values(sample.x_sorted, x0, h)
    total = raw.sum()
    if not total > 0:
        raise AllWeightsZero(float(x0), float(h))
    return KernelWeightVector(weights=_readonly(raw / total), x0=float(x0), h=float(h))


def product_limit(weights_sorted: np.ndarray, d_sorted: np.ndarray) -> np.ndarray:
    """Running product of (1 - d_i w_i / sum_{r>=i} w_r) along the last axis.

    Entry i is the curve value just after the i-th sorted observation. Factors
    whose trailing weight sum is zero contribute 1.
    """
    w = np.asarray(weights_sorted, dtype=float)
    at_risk = np.cumsum(w[..., ::-1], axis=-1)[..., ::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        hazard = np.where(at_risk > 0, d_sorted * w / at_risk, 0.0)
    return np.cumprod(np.clip(1.0 - hazard, 0.0, 1.0), axis=-1)


def step_values(t_sorted: np.ndarray, curve: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Evaluate a right-continuous step curve (1 before the first jump) at ``at``."""
    curve = np.asarray(curve, dtype=float)
    if curve.shape[-1] == 0:
        return np.ones(curve.shape[:-1] + np.shape(at))
    idx = np.searchsorted(t_sorted, at, side="right") - 1
    picked = np.take(curve, np.maximum(idx, 0), axis=-1)
    return np.where(idx >= 0, picked, 1.0)


def km_survival(sample: SurvivalSample) -> StepFunctionEstimate:
    """Kaplan-Meier product-limit curve at the distinct observed times."""
    curve = product_limit(np.ones(sample.n), sample.d_sorted)
    times = sample.unique_times
    return StepFunctionEstimate(times=times, values=step_values(sample.t_sorted, curve, times))


def km_cure(sample: SurvivalSample) -> float:
    """Unconditional cure estimate: the KM curve at the largest uncensored time."""
    idx = sample.last_event_index
    if idx is None:
        return 1.0
    curve = product_limit(np.ones(sample.n), sample.d_sorted)
    return float(curve[idx])


def km_cure_by_strata(sample: SurvivalSample) -> Dict[str, float]:
    """km_cure computed separately within each covariate level."""
    result = {}
    for level in sample.levels:
        stratum = sample.subset(sample.x == level)
        result[str(level)] = km_cure(stratum)
    return result


def km_latency(sample: SurvivalSample) -> StepFunctionEstimate:
    """Unconditional latency (S_KM(t) - cure) / (1 - cure), clamped to [0, 1]."""
    survival = km_survival(sample)
    cure = km_cure(sample)
    if not cure < 1.0:
        raise CureFractionOne(float("nan"), "km_latency")
    values = np.clip((survival.values - cure) / (1.0 - cure), 0.0, 1.0)
    return StepFunctionEstimate(times=survival.times, values=values)
