"""Weighted bootstrap resampling and the bootstrap bandwidth selectors.

Resamples keep every covariate value fixed and draw each subject's (time,
indicator) pair from the kernel-weighted empirical distribution at its own
covariate value, using the pilot bandwidth there. One set of B resamples is
shared by every candidate bandwidth and every evaluation point.
"""

import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from curekit.bandwidths import (
    BandwidthSelection,
    BandwidthSpec,
    bandwidth_grid,
    select_minimizer,
    smooth_bandwidths,
)
from curekit.control import ControlParams
from curekit.errors import (
    AllWeightsZero,
    CureFractionOne,
    InsufficientResamples,
    InvalidSample,
    NoUncensored,
    UsageError,
)
from curekit.parallel import STREAM_CONFIDENCE, STREAM_WEIGHTED_BOOTSTRAP, ordered_map, resolve_seed, stream_rng
from curekit.pilot import PilotBandwidth, pilot_values
from curekit.survival_data import SurvivalSample, kernel_values, product_limit, step_values

logger = logging.getLogger(__name__)

__all__ = [
    "WeightedResampler",
    "bootstrap_resample",
    "bootstrap_standard_error",
    "integrate_squared_difference",
    "latency_hboot",
    "mesh_squared_distance",
    "pilot_resampler",
    "probcure_hboot",
    "smooth_bandwidths",
    "step_mesh",
]

# share of the B resamples that must give a defined estimate
MIN_VALID_SHARE = 0.10


def min_valid_resamples(B: int) -> int:
    return max(1, math.ceil(MIN_VALID_SHARE * B))


class WeightedResampler:
    """Inverse-CDF sampler over the kernel-weighted atoms at each subject.

    Row i of the cached CDF holds the pilot weights B_{g_i j}(X_i) accumulated
    over the time-sorted atoms (T_(j), d_[j]).
    """

    def __init__(self, sample: SurvivalSample, g_at_subjects: Sequence[float]):
        sample.require_continuous("bootstrap_resample")
        g = np.asarray(g_at_subjects, dtype=float)
        if g.shape != (sample.n,):
            raise UsageError("pilot bandwidths must be evaluated at every covariate value", "bootstrap_resample")
        self.sample = sample
        raw = kernel_values(sample.x_sorted, sample.x, g)
        totals = raw.sum(axis=1)
        bad = np.flatnonzero(~(totals > 0))
        if bad.size:
            i = int(bad[0])
            raise AllWeightsZero(float(sample.x[i]), float(g[i]), "bootstrap_resample")
        cdf = np.cumsum(raw, axis=1) / totals[:, None]
        cdf[:, -1] = 1.0
        self._cdf = cdf

    def draw(self, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Resampled (t, d) per subject, in the sample's original subject order."""
        u = rng.random(self.sample.n)
        atoms = np.minimum((self._cdf <= u[:, None]).sum(axis=1), self.sample.n - 1)
        return self.sample.t_sorted[atoms], self.sample.d_sorted[atoms]

    def resample(self, rng: np.random.Generator) -> SurvivalSample:
        t, d = self.draw(rng)
        return SurvivalSample(x=self.sample.x, t=t, d=d)


def pilot_resampler(sample: SurvivalSample, params: ControlParams) -> WeightedResampler:
    """Resampler driven by the configured pilot evaluated at every X_i."""
    g = pilot_values(params.fpilot, sample.x, sample.x, params.nnfrac)
    return WeightedResampler(sample, g)


def bootstrap_resample(sample: SurvivalSample, pilot: PilotBandwidth, rng: np.random.Generator) -> SurvivalSample:
    """One weighted-bootstrap resample; ``pilot.g`` is aligned with ``sample.x``."""
    return WeightedResampler(sample, pilot.g).resample(rng)


def bootstrap_standard_error(
    sample: SurvivalSample,
    evaluate: Callable[[SurvivalSample], np.ndarray],
    params: ControlParams,
    seed: int,
) -> np.ndarray:
    """Standard deviation of ``evaluate`` over B weighted-bootstrap resamples.

    ``evaluate`` returns NaN where its estimate is undefined on a resample;
    entries defined on fewer than 10% of the resamples get a NaN error.
    """
    resampler = pilot_resampler(sample, params)

    def one(b: int) -> np.ndarray:
        return np.asarray(evaluate(resampler.resample(stream_rng(seed, STREAM_CONFIDENCE, b))), dtype=float)

    replicates = np.stack(list(ordered_map(one, params.B, params.workers)))
    valid = np.isfinite(replicates).sum(axis=0)
    enough = valid >= max(2, min_valid_resamples(params.B))
    se = np.full(replicates.shape[1:], np.nan)
    if enough.any():
        se[enough] = np.nanstd(replicates[:, enough], axis=0, ddof=1)
    short = int(np.sum(valid < params.B))
    if short:
        logger.warning(f"{short} estimate(s) were undefined on some bootstrap resamples; their standard errors use the remaining ones")
    return se


def step_mesh(jump_times: np.ndarray, upper: float) -> Tuple[np.ndarray, np.ndarray]:
    """Left ends and widths of the pieces of [0, upper] between consecutive jumps."""
    if not upper > 0:
        return np.zeros(0), np.zeros(0)
    mesh = np.union1d([0.0], np.asarray(jump_times, dtype=float))
    mesh = mesh[(mesh >= 0) & (mesh < upper)]
    return mesh, np.diff(np.append(mesh, upper))


def mesh_squared_distance(a: np.ndarray, b: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """Integral of (a - b)^2 for curves held constant on each mesh piece."""
    return np.sum((a - b) ** 2 * widths, axis=-1)


def integrate_squared_difference(
    times_a: np.ndarray, values_a: np.ndarray, times_b: np.ndarray, values_b: np.ndarray, upper: float
) -> float:
    """Exact integral over [0, upper] of the squared difference of two step curves."""
    times_a = np.asarray(times_a, dtype=float)
    times_b = np.asarray(times_b, dtype=float)
    mesh, widths = step_mesh(np.concatenate([times_a, times_b]), upper)
    a = step_values(times_a, np.asarray(values_a, dtype=float), mesh)
    b = step_values(times_b, np.asarray(values_b, dtype=float), mesh)
    return float(mesh_squared_distance(a, b, widths))


def _check_selector_input(sample: SurvivalSample, x0_grid: Sequence[float], operation: str) -> np.ndarray:
    sample.require_continuous(operation)
    if sample.n < 4:
        raise InvalidSample(f"bandwidth selection needs at least 4 subjects, got {sample.n}", operation)
    if not sample.has_events:
        raise NoUncensored("sample has no uncensored observation", operation)
    x0 = np.atleast_1d(np.asarray(x0_grid, dtype=float))
    if x0.size == 0:
        raise UsageError("x0 grid is empty", operation)
    return x0


def _hboot(sample: SurvivalSample, x0_grid: Sequence[float], params: ControlParams, kind: str) -> BandwidthSelection:
    operation = f"{kind}_hboot"
    x0 = _check_selector_input(sample, x0_grid, operation)
    seed = resolve_seed(params.seed)
    grid = bandwidth_grid(sample.x, params.hbound, params.hl)
    g_x0 = pilot_values(params.fpilot, sample.x, x0, params.nnfrac)
    resampler = pilot_resampler(sample, params)
    m, L = x0.size, grid.values.size

    # kernel over the fixed covariates, original subject order: (m, L, n)
    kernel = kernel_values(sample.x, x0[:, None], grid.values[None, :])
    defined = kernel.sum(axis=-1) > 0

    ref_kernel = kernel_values(sample.x_sorted, x0, g_x0)
    ref_curve = product_limit(ref_kernel, sample.d_sorted)
    ref_cure = ref_curve[:, sample.last_event_index]
    errors = [None] * m
    for a in np.flatnonzero(~(ref_kernel.sum(axis=-1) > 0)):
        errors[a] = str(AllWeightsZero(float(x0[a]), float(g_x0[a]), operation))

    if kind == "latency":
        upper = float(np.quantile(sample.t, params.qt))
        # resampled curves only jump at observed times
        mesh, widths = step_mesh(sample.unique_times, upper)
        with np.errstate(invalid="ignore", divide="ignore"):
            ref_lat = np.clip(
                (step_values(sample.t_sorted, ref_curve, mesh) - ref_cure[:, None]) / (1.0 - ref_cure[:, None]), 0.0, 1.0
            )
        for a in np.flatnonzero(~(ref_cure < 1.0)):
            if errors[a] is None:
                errors[a] = str(CureFractionOne(float(x0[a]), operation))

    def one(b: int) -> np.ndarray:
        t_star, d_star = resampler.draw(stream_rng(seed, STREAM_WEIGHTED_BOOTSTRAP, b))
        order = np.lexsort((-d_star, t_star))
        ts, ds = t_star[order], d_star[order]
        events = np.flatnonzero(ds == 1)
        if events.size == 0:
            return np.full((m, L), np.nan)
        curve = product_limit(kernel[..., order], ds)
        cure = curve[..., events[-1]]
        if kind == "probcure":
            loss = (cure - ref_cure[:, None]) ** 2
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                lat = (step_values(ts, curve, mesh) - cure[..., None]) / (1.0 - cure[..., None])
            lat = np.clip(lat, 0.0, 1.0)
            loss = mesh_squared_distance(lat, ref_lat[:, None, :], widths)
            loss = np.where(cure < 1.0, loss, np.nan)
        return np.where(defined, loss, np.nan)

    sums = np.zeros((m, L))
    counts = np.zeros((m, L), dtype=int)
    for loss in ordered_map(one, params.B, params.workers):
        ok = np.isfinite(loss)
        sums[ok] += loss[ok]
        counts += ok

    with np.errstate(invalid="ignore", divide="ignore"):
        criterion = sums / counts
    criterion[counts < min_valid_resamples(params.B)] = np.nan

    h = np.full(m, np.nan)
    dropped = np.full(m, params.B, dtype=int)
    for a in range(m):
        if defined[a].any():
            dropped[a] = params.B - int(counts[a][defined[a]].min())
        if errors[a] is not None:
            criterion[a] = np.nan
            continue
        best = select_minimizer(criterion[a])
        if best < 0:
            errors[a] = str(InsufficientResamples(
                f"fewer than {min_valid_resamples(params.B)} usable resamples for every bandwidth at x0={x0[a]!r}",
                operation,
            ))
            continue
        h[a] = grid.values[best]

    if np.any(dropped[defined.any(axis=1)] > 0):
        logger.warning(f"{operation}: resamples dropped per x0 (max {int(dropped.max())} of {params.B})")
    failed = sum(e is not None for e in errors)
    if failed:
        logger.warning(f"{operation}: no bandwidth selected at {failed} of {m} x0 point(s)")

    smoothed = None
    if params.hsmooth > 1:
        smoothed = BandwidthSpec.local(smooth_bandwidths(h, params.hsmooth))

    return BandwidthSelection(
        kind=operation,
        x0=x0,
        h=BandwidthSpec.local(h),
        smoothed=smoothed,
        grid=grid if params.hsave else None,
        criterion=criterion if params.hsave else None,
        dropped=dropped,
        errors=tuple(errors),
        seed=seed,
    )


def probcure_hboot(sample: SurvivalSample, x0_grid: Sequence[float], params: Optional[ControlParams] = None) -> BandwidthSelection:
    """Local bandwidths minimizing the bootstrap MSE of the cure-rate estimator."""
    return _hboot(sample, x0_grid, params or ControlParams(), "probcure")


def latency_hboot(sample: SurvivalSample, x0_grid: Sequence[float], params: Optional[ControlParams] = None) -> BandwidthSelection:
    """Local bandwidths minimizing the bootstrap MISE of the latency on [0, qt-quantile]."""
    return _hboot(sample, x0_grid, params or ControlParams(), "latency")
