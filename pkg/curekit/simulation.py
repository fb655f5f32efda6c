"""Logistic cure / Weibull latency data-generating model.

X ~ U(-2, 2); uncured with probability p(x) = exp(2x) / (1 + exp(2x));
uncured lifetimes are Weibull with shape (x + 4) / 2 and scale 1; censoring
is Exp(1).
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import integrate
from scipy.special import expit

from curekit.errors import UsageError
from curekit.parallel import STREAM_SIMULATION, stream_rng
from curekit.survival_data import SurvivalSample

logger = logging.getLogger(__name__)

X_LOW, X_HIGH = -2.0, 2.0


def true_probability(x):
    """Uncure probability p(x)."""
    return expit(2.0 * np.asarray(x, dtype=float))


def true_cure(x):
    return 1.0 - true_probability(x)


def weibull_shape(x):
    return 0.5 * (np.asarray(x, dtype=float) + 4.0)


def true_latency(t, x):
    """Susceptible survival S0(t | x) = exp(-t^shape(x))."""
    return np.exp(-np.power(np.asarray(t, dtype=float), weibull_shape(x)))


@dataclass(frozen=True, eq=False)
class SimulatedData:
    sample: SurvivalSample
    seed: int
    cured: np.ndarray

    def true_function_table(self, x_grid: Sequence[float], t_grid: Sequence[float]) -> pd.DataFrame:
        return true_function_table(x_grid, t_grid)


def simulate_model(n: int, seed: int) -> SimulatedData:
    if n < 1:
        raise UsageError(f"simulation size must be >= 1, got {n}", "simulate_model")
    rng = stream_rng(seed, STREAM_SIMULATION, 0)
    x = rng.uniform(X_LOW, X_HIGH, size=n)
    y = rng.weibull(weibull_shape(x))
    c = rng.exponential(1.0, size=n)
    u = rng.uniform(size=n)

    uncured = u < true_probability(x)
    t = np.where(uncured, np.minimum(y, c), c)
    d = uncured & (y < c)
    logger.debug(f"Simulated n={n}: {int(d.sum())} events, {int((~uncured).sum())} cured")
    return SimulatedData(sample=SurvivalSample(x=x, t=t, d=d.astype(int)), seed=int(seed), cured=~uncured)


def censoring_proportion() -> float:
    """P(d = 0) under the model, by numerical integration over x."""

    def event_probability(x: float) -> float:
        shape = float(weibull_shape(x))
        # P(Y < C) = 1 - int_0^inf exp(-c - c^shape) dc
        survive, _ = integrate.quad(lambda c: np.exp(-c - c**shape), 0.0, np.inf)
        return float(true_probability(x)) * (1.0 - survive)

    events, _ = integrate.quad(event_probability, X_LOW, X_HIGH)
    return 1.0 - events / (X_HIGH - X_LOW)


def true_function_table(x_grid: Sequence[float], t_grid: Sequence[float]) -> pd.DataFrame:
    """Long table of p(x), the cure rate and S0(t | x) on a grid."""
    xs = np.asarray(x_grid, dtype=float)
    ts = np.asarray(t_grid, dtype=float)
    xx, tt = np.meshgrid(xs, ts, indexing="ij")
    return pd.DataFrame(
        {
            "x": xx.ravel(),
            "t": tt.ravel(),
            "p": true_probability(xx).ravel(),
            "cure": true_cure(xx).ravel(),
            "latency": true_latency(tt, xx).ravel(),
        }
    )
