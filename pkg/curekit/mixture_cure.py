"""Conditional cure probability and latency estimators.

The cure probability at x0 is the Beran curve at the largest uncensored time;
the latency rescales the Beran curve by that probability with the same
bandwidth. Failures at single x0 points are reported per point.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from curekit.bandwidth_boot import bootstrap_standard_error, latency_hboot, probcure_hboot
from curekit.bandwidths import BandwidthSpec
from curekit.beran import beran_curve, evaluation_times, normal_quantile
from curekit.control import ControlParams
from curekit.errors import AllWeightsZero, CureFractionOne, UsageError
from curekit.estimates import CureEstimate, LatencyEstimate
from curekit.parallel import resolve_seed
from curekit.survival_data import SurvivalSample, step_values

logger = logging.getLogger(__name__)


def _grid(x0_grid: Sequence[float], operation: str) -> np.ndarray:
    x0 = np.atleast_1d(np.asarray(x0_grid, dtype=float))
    if x0.size == 0:
        raise UsageError("x0 grid is empty", operation)
    return x0


def cure_values(sample: SurvivalSample, x0: np.ndarray, h: np.ndarray) -> Tuple[np.ndarray, List[Optional[str]]]:
    """Cure estimate per x0; NaN with a message where it is undefined."""
    cure = np.full(x0.size, np.nan)
    errors: List[Optional[str]] = [None] * x0.size
    if not sample.has_events:
        cure[:] = 1.0
        return cure, errors
    last = sample.last_event_index
    for j in range(x0.size):
        if np.isnan(h[j]):
            errors[j] = "no bandwidth available"
            continue
        try:
            cure[j] = beran_curve(sample, x0[j], h[j])[last]
        except AllWeightsZero as e:
            errors[j] = str(e)
    return cure, errors


def latency_values(sample: SurvivalSample, x0: np.ndarray, h: np.ndarray, times: np.ndarray):
    """Unclamped latency rows, cure per x0 and per-point errors."""
    raw = np.full((x0.size, times.size), np.nan)
    cure = np.full(x0.size, np.nan)
    errors: List[Optional[str]] = [None] * x0.size
    last = sample.last_event_index
    for j in range(x0.size):
        if np.isnan(h[j]):
            errors[j] = "no bandwidth available"
            continue
        try:
            curve = beran_curve(sample, x0[j], h[j])
        except AllWeightsZero as e:
            errors[j] = str(e)
            continue
        cure[j] = 1.0 if last is None else curve[last]
        if not cure[j] < 1.0:
            errors[j] = str(CureFractionOne(float(x0[j])))
            continue
        raw[j] = (step_values(sample.t_sorted, curve, times) - cure[j]) / (1.0 - cure[j])
    return raw, cure, errors


def _merge_errors(selection, errors: List[Optional[str]]) -> Tuple[Optional[str], ...]:
    if selection is None:
        return tuple(errors)
    return tuple(sel or err for sel, err in zip(selection.errors, errors))


def probcure(
    sample: SurvivalSample,
    x0_grid: Sequence[float],
    h: Optional[BandwidthSpec] = None,
    conflevel: Optional[float] = None,
    params: Optional[ControlParams] = None,
) -> CureEstimate:
    """Cure probability 1 - p_h(x0) with optional bootstrap-normal intervals.

    Without ``h`` the bandwidths are selected by ``probcure_hboot`` (smoothed
    when ``hsmooth`` > 1).
    """
    params = params or ControlParams()
    sample.require_continuous("probcure")
    x0 = _grid(x0_grid, "probcure")

    selection = None
    if h is None and sample.has_events:
        selection = probcure_hboot(sample, x0, params)
        h = selection.selected
    elif h is None:
        h = BandwidthSpec.local(np.full(x0.size, np.nan))
    hv = h.for_points(x0.size)

    cure, errors = cure_values(sample, x0, hv)
    if not sample.has_events:
        logger.warning("Sample has no uncensored observation; cure probability set to 1 at every x0")
        errors = [None] * x0.size

    lower = upper = None
    seed = selection.seed if selection is not None else None
    if conflevel is not None:
        z = normal_quantile(conflevel, "probcure")
        seed = resolve_seed(params.seed if seed is None else seed)
        se = bootstrap_standard_error(sample, lambda r: cure_values(r, x0, hv)[0], params, seed)
        lower = np.clip(cure - z * se, 0.0, 1.0)
        upper = np.clip(cure + z * se, 0.0, 1.0)

    return CureEstimate(
        x0=x0, h=h, cure=cure, t1max=sample.t1max, ci_lower=lower, ci_upper=upper,
        conflevel=conflevel, errors=_merge_errors(selection, errors),
        no_events=not sample.has_events, selection=selection, seed=seed,
    )


def latency(
    sample: SurvivalSample,
    x0_grid: Sequence[float],
    h: Optional[BandwidthSpec] = None,
    eval_times: Optional[Sequence[float]] = None,
    conflevel: Optional[float] = None,
    params: Optional[ControlParams] = None,
) -> LatencyEstimate:
    """Latency S0_b(t | x0) = (S_b(t | x0) - (1 - p_b(x0))) / p_b(x0), clamped to [0, 1]."""
    params = params or ControlParams()
    sample.require_continuous("latency")
    x0 = _grid(x0_grid, "latency")
    times = evaluation_times(sample, eval_times, "latency")

    selection = None
    if h is None and sample.has_events:
        selection = latency_hboot(sample, x0, params)
        h = selection.selected
    elif h is None:
        h = BandwidthSpec.local(np.full(x0.size, np.nan))
    hv = h.for_points(x0.size)

    raw, cure, errors = latency_values(sample, x0, hv, times)
    values = np.clip(raw, 0.0, 1.0)

    def clamped(resample: SurvivalSample) -> np.ndarray:
        return np.clip(latency_values(resample, x0, hv, times)[0], 0.0, 1.0)

    lower = upper = None
    seed = selection.seed if selection is not None else None
    if conflevel is not None:
        z = normal_quantile(conflevel, "latency")
        seed = resolve_seed(params.seed if seed is None else seed)
        se = bootstrap_standard_error(sample, clamped, params, seed)
        lower = np.clip(values - z * se, 0.0, 1.0)
        upper = np.clip(values + z * se, 0.0, 1.0)

    return LatencyEstimate(
        x0=x0, h=h, times=times, values=values, ci_lower=lower, ci_upper=upper,
        conflevel=conflevel, errors=_merge_errors(selection, errors), selection=selection,
        seed=seed, unclamped=raw, cure=cure,
    )
