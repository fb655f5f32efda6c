"""Nearest-neighbor pilot bandwidths and the registry of pilot procedures.

Alternative pilots are plugged in by name (the ``fpilot`` control parameter),
mirroring how providers are looked up in a registry.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from curekit.errors import DegenerateCovariate, InvalidSample, UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PilotBandwidth:
    """Pilot bandwidths aligned with an evaluation grid."""

    g: np.ndarray
    k: int


def nn_order(n: int, nnfrac: float) -> int:
    """k = round(n * nnfrac), half rounded up, at least 1."""
    return max(1, int(np.floor(n * nnfrac + 0.5)))


def hpilot(covariate: Sequence[float], x0_grid: Sequence[float], nnfrac: float = 0.25) -> PilotBandwidth:
    """Pilot bandwidth g_x = (d_k^+(x) + d_k^-(x)) / 2 * (100 / n)^(1/9).

    d_k^+ and d_k^- are the distances from x to its k-th nearest neighbor
    strictly to the right and strictly to the left. A side with fewer than k
    neighbors takes the other side's distance; when neither side has k
    neighbors, the farthest available neighbor on each side is used.
    """
    x = np.sort(np.asarray(covariate, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise InvalidSample("covariate is empty", "hpilot")
    if not 0 < nnfrac <= 1:
        raise UsageError(f"nnfrac must lie in (0, 1], got {nnfrac}", "hpilot")
    if x[0] == x[-1]:
        raise DegenerateCovariate("all covariate values are equal; pilot bandwidth undefined", "hpilot")

    k = nn_order(n, nnfrac)
    x0 = np.atleast_1d(np.asarray(x0_grid, dtype=float))

    right_start = np.searchsorted(x, x0, side="right")
    left_end = np.searchsorted(x, x0, side="left")
    n_right = n - right_start
    n_left = left_end

    kth_right = x[np.minimum(right_start + k - 1, n - 1)] - x0
    kth_left = x0 - x[np.maximum(left_end - k, 0)]
    far_right = x[-1] - x0
    far_left = x0 - x[0]

    d_plus = np.where(n_right >= k, kth_right, np.nan)
    d_minus = np.where(n_left >= k, kth_left, np.nan)

    neither = np.isnan(d_plus) & np.isnan(d_minus)
    d_plus = np.where(neither & (n_right > 0), far_right, d_plus)
    d_minus = np.where(neither & (n_left > 0), far_left, d_minus)

    d_plus = np.where(np.isnan(d_plus), d_minus, d_plus)
    d_minus = np.where(np.isnan(d_minus), d_plus, d_minus)

    g = (d_plus + d_minus) / 2.0 * (100.0 / n) ** (1.0 / 9.0)
    return PilotBandwidth(g=g, k=k)


PilotFunction = Callable[[Sequence[float], Sequence[float], float], PilotBandwidth]

PILOTS: Dict[str, PilotFunction] = {
    "hpilot": hpilot,
}


def register_pilot(name: str, fn: PilotFunction) -> None:
    """Make an alternative pilot procedure available under ``name``."""
    PILOTS[name] = fn


def get_pilot(name: Optional[str] = None) -> PilotFunction:
    """Look up a pilot procedure; None selects the nearest-neighbor default."""
    if name is None:
        return hpilot
    fn = PILOTS.get(name)
    if fn is None:
        available = ", ".join(PILOTS.keys())
        raise UsageError(f"Unknown pilot procedure: {name}. Available pilots: {available}", "get_pilot")
    return fn


def pilot_values(name: Optional[str], covariate: Sequence[float], x0_grid: Sequence[float], nnfrac: float) -> np.ndarray:
    """Evaluate the configured pilot and check it returned usable bandwidths."""
    g = np.asarray(get_pilot(name)(covariate, x0_grid, nnfrac).g, dtype=float)
    if g.shape != np.atleast_1d(np.asarray(x0_grid)).shape:
        raise UsageError("pilot procedure returned a bandwidth vector of the wrong length", "pilot_values")
    if np.any(~(g > 0)):
        raise DegenerateCovariate("pilot procedure returned a non-positive bandwidth", "pilot_values")
    return g
