"""Generalized product-limit (Beran) estimation and the CV bandwidth selector."""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from curekit.bandwidth_boot import bootstrap_standard_error
from curekit.bandwidths import (
    BandwidthSelection,
    BandwidthSpec,
    bandwidth_grid,
    select_minimizer,
    smooth_bandwidths,
)
from curekit.control import ControlParams
from curekit.errors import AllWeightsZero, DegenerateSample, InvalidSample, UsageError
from curekit.estimates import SurvivalEstimate
from curekit.parallel import ordered_map, resolve_seed
from curekit.pilot import pilot_values
from curekit.survival_data import (
    StepFunctionEstimate,
    SurvivalSample,
    kernel_values,
    nw_weights,
    product_limit,
    step_values,
)

logger = logging.getLogger(__name__)


def beran_curve(sample: SurvivalSample, x0: float, h: float) -> np.ndarray:
    """Beran curve just after each time-sorted observation."""
    return product_limit(nw_weights(sample, x0, h).weights, sample.d_sorted)


def evaluation_times(sample: SurvivalSample, eval_times: Optional[Sequence[float]], operation: str) -> np.ndarray:
    """Distinct evaluation times, defaulting to the observed times."""
    if eval_times is None:
        return np.array(sample.unique_times)
    times = np.atleast_1d(np.asarray(eval_times, dtype=float))
    if times.size == 0:
        raise UsageError("no evaluation times given", operation)
    if not np.all(np.isfinite(times)):
        raise UsageError("evaluation times must be finite", operation)
    if np.any(np.diff(times) < 0):
        raise UsageError("evaluation times must be sorted ascending", operation)
    return np.unique(times)


def beran_survival(
    sample: SurvivalSample, x0: float, h: float, eval_times: Optional[Sequence[float]] = None
) -> StepFunctionEstimate:
    """S_h(t | x0) at the evaluation times (observed times by default)."""
    times = evaluation_times(sample, eval_times, "beran_survival")
    curve = beran_curve(sample, x0, h)
    return StepFunctionEstimate(times=times, values=step_values(sample.t_sorted, curve, times), x0=float(x0))


def beran_censoring(
    sample: SurvivalSample, x0: float, h: float, eval_times: Optional[Sequence[float]] = None
) -> StepFunctionEstimate:
    """1 - G_h(t | x0), the Beran estimator with the indicators flipped."""
    return beran_survival(sample.flipped(), x0, h, eval_times)


def _loo_residuals(sample: SurvivalSample, h: float, identifiable: np.ndarray, below: np.ndarray) -> np.ndarray:
    """Squared leave-one-out residuals (1{T_i <= T_j} - F^(-i)(T_j | X_i))^2 on identifiable pairs."""
    raw = kernel_values(sample.x_sorted, sample.x_sorted, h)
    np.fill_diagonal(raw, 0.0)
    curves = product_limit(raw, sample.d_sorted)
    surv = step_values(sample.t_sorted, curves, sample.t_sorted)
    return np.where(identifiable, (below - (1.0 - surv)) ** 2, 0.0)


def berancv(sample: SurvivalSample, x0_grid: Sequence[float], params: Optional[ControlParams] = None) -> BandwidthSelection:
    """Local cross-validation bandwidths for the Beran estimator.

    At each x0 the leave-one-out criterion is localized with pilot weights and
    minimized over the geometric grid; ties go to the larger bandwidth.
    """
    params = params or ControlParams()
    sample.require_continuous("berancv")
    if sample.n < 4:
        raise InvalidSample(f"cross-validation needs at least 4 subjects, got {sample.n}", "berancv")
    x0 = np.atleast_1d(np.asarray(x0_grid, dtype=float))
    if x0.size == 0:
        raise UsageError("x0 grid is empty", "berancv")

    t = sample.t_sorted
    d = sample.d_sorted
    below = (t[:, None] <= t[None, :]).astype(float)
    identifiable = ((t[:, None] <= t[None, :]) & (d[:, None] == 1)) | ((t[None, :] < t[:, None]) & (d[None, :] == 1))
    if not identifiable.any():
        raise DegenerateSample("no identifiable pair for cross-validation", "berancv")

    grid = bandwidth_grid(sample.x, params.hbound, params.hl)
    g = pilot_values(params.fpilot, sample.x, x0, params.nnfrac)
    local_raw = kernel_values(sample.x_sorted, x0, g)
    totals = local_raw.sum(axis=1)
    errors = [None] * x0.size
    for a in np.flatnonzero(~(totals > 0)):
        errors[a] = str(AllWeightsZero(float(x0[a]), float(g[a]), "berancv"))
    with np.errstate(invalid="ignore", divide="ignore"):
        local = local_raw / totals[:, None]

    def one(l: int) -> np.ndarray:
        residuals = _loo_residuals(sample, grid.values[l], identifiable, below)
        return np.einsum("ai,ij,aj->a", local, residuals, local)

    criterion = np.column_stack(list(ordered_map(one, grid.values.size, params.workers)))

    h = np.full(x0.size, np.nan)
    for a in range(x0.size):
        if errors[a] is not None:
            criterion[a] = np.nan
            continue
        best = select_minimizer(criterion[a])
        if best < 0:
            errors[a] = f"cross-validation criterion undefined at x0={x0[a]!r}"
            continue
        h[a] = grid.values[best]
    logger.debug(f"berancv: selected {np.count_nonzero(~np.isnan(h))} of {x0.size} local bandwidths")

    smoothed = BandwidthSpec.local(smooth_bandwidths(h, params.hsmooth)) if params.hsmooth > 1 else None
    return BandwidthSelection(
        kind="berancv",
        x0=x0,
        h=BandwidthSpec.local(h),
        smoothed=smoothed,
        grid=grid if params.hsave else None,
        criterion=criterion if params.hsave else None,
        errors=tuple(errors),
    )


def normal_quantile(conflevel: float, operation: str) -> float:
    if not 0.0 < conflevel < 1.0:
        raise UsageError(f"conflevel must lie in (0, 1), got {conflevel}", operation)
    return float(norm.ppf(1.0 - (1.0 - conflevel) / 2.0))


def _survival_rows(sample: SurvivalSample, x0: np.ndarray, h: np.ndarray, times: np.ndarray):
    values = np.full((x0.size, times.size), np.nan)
    errors = [None] * x0.size
    for j in range(x0.size):
        if np.isnan(h[j]):
            errors[j] = "no bandwidth available"
            continue
        try:
            values[j] = step_values(sample.t_sorted, beran_curve(sample, x0[j], h[j]), times)
        except AllWeightsZero as e:
            errors[j] = str(e)
    return values, errors


def beran(
    sample: SurvivalSample,
    x0_grid: Sequence[float],
    h: Optional[BandwidthSpec] = None,
    eval_times: Optional[Sequence[float]] = None,
    conflevel: Optional[float] = None,
    params: Optional[ControlParams] = None,
) -> SurvivalEstimate:
    """Conditional survival on an x0 grid, with CV bandwidths when h is not given."""
    params = params or ControlParams()
    sample.require_continuous("beran")
    x0 = np.atleast_1d(np.asarray(x0_grid, dtype=float))
    if x0.size == 0:
        raise UsageError("x0 grid is empty", "beran")
    times = evaluation_times(sample, eval_times, "beran")

    selection = None
    if h is None:
        selection = berancv(sample, x0, params)
        h = selection.selected
    hv = h.for_points(x0.size)

    values, errors = _survival_rows(sample, x0, hv, times)
    if selection is not None:
        errors = [sel or err for sel, err in zip(selection.errors, errors)]

    lower = upper = None
    seed = None
    if conflevel is not None:
        z = normal_quantile(conflevel, "beran")
        seed = resolve_seed(params.seed)
        se = bootstrap_standard_error(sample, lambda r: _survival_rows(r, x0, hv, times)[0], params, seed)
        lower = np.clip(values - z * se, 0.0, 1.0)
        upper = np.clip(values + z * se, 0.0, 1.0)

    return SurvivalEstimate(
        x0=x0, h=h, times=times, values=values, ci_lower=lower, ci_upper=upper,
        conflevel=conflevel, errors=tuple(errors), selection=selection, seed=seed,
    )
