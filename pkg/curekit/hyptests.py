"""Covariate significance test for the cure rate and the Maller-Zhou follow-up test.

The covariate test compares the synthetic responses eta_i with the covariate
through the centered process U_n, summarized by Cramer-von Mises and
Kolmogorov-Smirnov statistics whose null distribution is bootstrapped.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from curekit.bandwidths import bandwidth_grid
from curekit.beran import beran_curve, berancv
from curekit.control import ControlParams
from curekit.errors import CureFractionOne, DegenerateSample, GbarZero, InvalidSample, NoUncensored, TooManyLevels
from curekit.parallel import STREAM_COVARIATE_TEST, ordered_map, resolve_seed, stream_rng
from curekit.pilot import pilot_values
from curekit.survival_data import SurvivalSample, km_cure, km_latency, km_survival, product_limit, step_values

logger = logging.getLogger(__name__)

MAX_LEVELS = 7

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass(frozen=True, eq=False)
class EtaResponse:
    eta: np.ndarray
    tau_hat: float
    capped: int = 0


@dataclass(frozen=True, eq=False)
class CovTestResult:
    cm_stat: float
    cm_pvalue: float
    ks_stat: float
    ks_pvalue: float
    B: int
    covariate_kind: str
    seed: Optional[int] = None
    # bootstrap statistics in resample order, kept when hsave is set
    cm_boot: Optional[np.ndarray] = None
    ks_boot: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class MZTestResult:
    statistic: int
    n: int
    delta: float
    interval: Tuple[float, float]
    pvalue: float


def _censoring_survival_at(flipped: SurvivalSample, x: float, h: float, at: float) -> float:
    """1 - G(at | x) from the Beran estimator on the flipped sample."""
    curve = beran_curve(flipped, x, h)
    return float(step_values(flipped.t_sorted, curve, np.array([at]))[0])


def _stratum_censoring_survival_at(sample: SurvivalSample, level: str, at: float) -> float:
    stratum = sample.subset(sample.x == level).flipped()
    return float(km_survival(stratum)([at])[0])


def censoring_bandwidths(sample: SurvivalSample, params: ControlParams) -> np.ndarray:
    """CV bandwidth of the censoring Beran estimator at every X_i.

    Falls back to the largest grid bandwidth when cross-validation on the
    flipped sample is impossible.
    """
    flipped = sample.flipped()
    values, inverse = np.unique(sample.x, return_inverse=True)
    try:
        selection = berancv(flipped, values, params)
        h = np.array(selection.h.values)
    except DegenerateSample:
        h = np.full(values.size, np.nan)
    if np.any(np.isnan(h)):
        fallback = bandwidth_grid(sample.x, params.hbound, params.hl).values[-1]
        logger.debug(f"Censoring CV bandwidth unavailable at some covariate values; using {fallback:.6g}")
        h = np.where(np.isnan(h), fallback, h)
    return h[inverse]


def estimate_eta(
    sample: SurvivalSample,
    params: Optional[ControlParams] = None,
    bandwidths: Optional[np.ndarray] = None,
    cap: bool = True,
) -> EtaResponse:
    """Synthetic responses eta_i = 1{d_i = 0, T_i >= tau} / (1 - G(tau | X_i)).

    ``bandwidths`` (aligned with the subjects) overrides the CV bandwidths of
    the censoring estimator for a continuous covariate. Weights whose
    censoring survival at tau is zero are capped at n, or raise GbarZero
    when ``cap`` is off.
    """
    if not sample.has_events:
        raise NoUncensored("sample has no uncensored observation", "estimate_eta")
    tau = sample.t1max
    eta = np.zeros(sample.n)
    contributing = np.flatnonzero((sample.d == 0) & (sample.t >= tau))
    if contributing.size == 0:
        return EtaResponse(eta=eta, tau_hat=tau)

    surv_c = np.empty(contributing.size)
    if sample.categorical:
        cache = {}
        for k, i in enumerate(contributing):
            level = sample.x[i]
            if level not in cache:
                cache[level] = _stratum_censoring_survival_at(sample, level, tau)
            surv_c[k] = cache[level]
    else:
        if bandwidths is None:
            bandwidths = censoring_bandwidths(sample, params or ControlParams())
        flipped = sample.flipped()
        for k, i in enumerate(contributing):
            surv_c[k] = _censoring_survival_at(flipped, sample.x[i], bandwidths[i], tau)

    capped = int(np.sum(~(surv_c > 0)))
    if capped and not cap:
        raise GbarZero(f"1 - G(tau | x) is zero for {capped} subject(s) censored at or beyond tau", "estimate_eta")
    with np.errstate(divide="ignore"):
        weights = np.where(surv_c > 0, 1.0 / surv_c, float(sample.n))
    if capped:
        logger.warning(f"1 - G(tau | x) is zero for {capped} subject(s); capping their weight at n={sample.n}")
    eta[contributing] = np.minimum(weights, float(sample.n))
    return EtaResponse(eta=eta, tau_hat=tau, capped=capped)


def u_process(eta: EtaResponse, covariate: Sequence[float]) -> np.ndarray:
    """U_n(X_i) = (1/n) sum_k (eta_k - mean(eta)) 1{X_k <= X_i}, aligned with the subjects."""
    values = np.asarray(eta.eta if isinstance(eta, EtaResponse) else eta, dtype=float)
    x = np.asarray(covariate, dtype=float)
    n = values.size
    order = np.argsort(x, kind="stable")
    partial = np.cumsum(values[order] - values.mean())
    idx = np.searchsorted(x[order], x, side="right") - 1
    u = partial[idx] / n
    # the full centered sum is zero
    u[idx == n - 1] = 0.0
    return u


def statistics(eta: np.ndarray, covariate: Sequence[float]) -> Tuple[float, float]:
    """Cramer-von Mises and Kolmogorov-Smirnov statistics of U_n."""
    u = u_process(eta, covariate)
    return float(np.sum(u**2)), float(math.sqrt(u.size) * np.max(np.abs(u)))


def level_statistics(eta: np.ndarray, labels: np.ndarray, levels: Sequence[str]) -> Tuple[float, float]:
    """Maximum of each statistic over every ordering of the covariate levels."""
    if len(levels) > MAX_LEVELS:
        raise TooManyLevels(
            f"categorical covariate has {len(levels)} levels; at most {MAX_LEVELS} can be permuted", "testcov"
        )
    cm_best, ks_best = 0.0, 0.0
    for ordering in itertools.permutations(levels):
        rank = {level: r for r, level in enumerate(ordering)}
        codes = np.array([rank[v] for v in labels], dtype=float)
        cm, ks = statistics(eta, codes)
        cm_best, ks_best = max(cm_best, cm), max(ks_best, ks)
    return cm_best, ks_best


def _inverse_cdf_rows(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """First atom index whose CDF reaches u, per row; cdf.shape[1] when none does."""
    return (cdf < u[:, None]).sum(axis=1)


class _NullModel:
    """Conditional lifetime and censoring distributions used to draw null resamples.

    Row k of each CDF matrix is the distribution at the k-th subject's covariate.
    """

    def __init__(self, sample: SurvivalSample, params: ControlParams, cv_bandwidths: Optional[np.ndarray]):
        self.sample = sample
        self.cure = km_cure(sample)
        self.t1max = sample.t1max
        self.tmax = float(sample.t_sorted[-1])
        flipped = sample.flipped()
        self.lifetime_times = sample.t_sorted
        self.censor_times = flipped.t_sorted

        last = sample.last_event_index
        km = product_limit(np.ones(sample.n), sample.d_sorted)
        km_cdf = self._latency_cdf(km, km[last])

        if sample.categorical:
            rows_l, rows_c = {}, {}
            for level in sample.levels:
                stratum = sample.subset(sample.x == level)
                try:
                    rows_l[level] = 1.0 - km_latency(stratum)(self.lifetime_times)
                except CureFractionOne:
                    rows_l[level] = km_cdf
                rows_c[level] = 1.0 - km_survival(stratum.flipped())(self.censor_times)
            self.lifetime_cdf = np.stack([rows_l[v] for v in sample.x])
            self.censor_cdf = np.stack([rows_c[v] for v in sample.x])
        else:
            g = pilot_values(params.fpilot, sample.x, sample.x, params.nnfrac)
            lifetime = np.empty((sample.n, sample.n))
            censor = np.empty((sample.n, sample.n))
            for k in range(sample.n):
                curve = beran_curve(sample, sample.x[k], g[k])
                cure = curve[last]
                lifetime[k] = self._latency_cdf(curve, cure) if cure < 1.0 else km_cdf
                censor[k] = 1.0 - beran_curve(flipped, sample.x[k], cv_bandwidths[k])
            self.lifetime_cdf = lifetime
            self.censor_cdf = censor

    @staticmethod
    def _latency_cdf(curve: np.ndarray, cure: float) -> np.ndarray:
        return 1.0 - np.clip((curve - cure) / (1.0 - cure), 0.0, 1.0)

    def draw(self, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Indices of the resampled subjects plus their null (t, d)."""
        n = self.sample.n
        idx = rng.integers(0, n, size=n)
        cured = rng.random(n) < self.cure
        u_life = 1.0 - rng.random(n)
        u_cens = 1.0 - rng.random(n)

        j = _inverse_cdf_rows(self.lifetime_cdf[idx], u_life)
        y = np.where(j < n, self.lifetime_times[np.minimum(j, n - 1)], self.t1max)
        y = np.where(cured, np.inf, y)
        j = _inverse_cdf_rows(self.censor_cdf[idx], u_cens)
        c = np.where(j < n, self.censor_times[np.minimum(j, n - 1)], self.tmax)

        t = np.minimum(y, c)
        d = (y <= c).astype(float)
        return idx, t, d


def rank_scale(sample: SurvivalSample) -> SurvivalSample:
    """The sample with its continuous covariate replaced by mid-ranks divided by n.

    testcov runs entirely on this scale, so its output depends on X only through
    the order of the covariate values.
    """
    return SurvivalSample(x=rankdata(sample.x, method="average") / sample.n, t=sample.t, d=sample.d)


def testcov(sample: SurvivalSample, params: Optional[ControlParams] = None) -> CovTestResult:
    """Bootstrap significance test of the covariate effect on the cure rate."""
    params = params or ControlParams()
    if sample.n < 4:
        raise InvalidSample(f"covariate test needs at least 4 subjects, got {sample.n}", "testcov")
    if not sample.has_events:
        raise NoUncensored("sample has no uncensored observation", "testcov")

    if sample.categorical:
        kind = CATEGORICAL
        levels = sample.levels
        if len(levels) > MAX_LEVELS:
            raise TooManyLevels(
                f"categorical covariate has {len(levels)} levels; at most {MAX_LEVELS} can be permuted", "testcov"
            )

        def stats_of(s: SurvivalSample, eta: EtaResponse) -> Tuple[float, float]:
            return level_statistics(eta.eta, s.x, levels)

        cv = None
    else:
        kind = CONTINUOUS
        sample = rank_scale(sample)
        constant = sample.x.min() == sample.x.max()

        def stats_of(s: SurvivalSample, eta: EtaResponse) -> Tuple[float, float]:
            return statistics(eta.eta, s.x)

        cv = None if constant else censoring_bandwidths(sample, params)

    seed = resolve_seed(params.seed)
    if kind == CONTINUOUS and cv is None:
        logger.info("Covariate is constant; U_n is identically zero")
        return CovTestResult(0.0, 1.0, 0.0, 1.0, params.B, kind, seed)

    observed = estimate_eta(sample, params, bandwidths=cv)
    cm_obs, ks_obs = stats_of(sample, observed)
    null = _NullModel(sample, params, cv)

    def one(b: int) -> Tuple[float, float]:
        idx, t, d = null.draw(stream_rng(seed, STREAM_COVARIATE_TEST, b))
        star = SurvivalSample(x=sample.x[idx], t=t, d=d, categorical=sample.categorical)
        if not star.has_events:
            return 0.0, 0.0
        eta = estimate_eta(star, params, bandwidths=None if cv is None else cv[idx])
        return stats_of(star, eta)

    boot = np.array(list(ordered_map(one, params.B, params.workers)), dtype=float).reshape(params.B, 2)
    cm_exceed = int(np.sum(boot[:, 0] >= cm_obs))
    ks_exceed = int(np.sum(boot[:, 1] >= ks_obs))

    return CovTestResult(
        cm_stat=cm_obs,
        cm_pvalue=(1 + cm_exceed) / (params.B + 1),
        ks_stat=ks_obs,
        ks_pvalue=(1 + ks_exceed) / (params.B + 1),
        B=params.B,
        covariate_kind=kind,
        seed=seed,
        cm_boot=boot[:, 0].copy() if params.hsave else None,
        ks_boot=boot[:, 1].copy() if params.hsave else None,
    )


def testmz(sample: SurvivalSample) -> MZTestResult:
    """Maller-Zhou test of sufficient follow-up: p = (1 - N_n / n)^n."""
    n = sample.n
    if not sample.has_events:
        logger.warning("Sample has no uncensored observation; follow-up test statistic set to 0")
        return MZTestResult(statistic=0, n=n, delta=float("nan"), interval=(float("nan"), float("nan")), pvalue=1.0)
    tau = sample.t1max
    delta = float(sample.t_sorted[-1]) - tau
    lo = max(0.0, tau - delta)
    count = int(np.sum((sample.d == 1) & (sample.t > lo) & (sample.t <= tau)))
    return MZTestResult(statistic=count, n=n, delta=delta, interval=(lo, tau), pvalue=(1.0 - count / n) ** n)
