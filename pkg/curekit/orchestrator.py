"""Run orchestration: immutable run configuration and subcommand dispatch."""

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from curekit.bandwidth_boot import latency_hboot, probcure_hboot
from curekit.bandwidths import BandwidthSpec
from curekit.beran import beran, berancv
from curekit.control import ControlParams, resolve_control_params
from curekit.emit import emit_results, frame_to_csv, write_text
from curekit.errors import UsageError
from curekit.hyptests import testcov, testmz
from curekit.ingest import ingest_csv
from curekit.mixture_cure import latency, probcure
from curekit.parallel import resolve_seed
from curekit.simulation import X_HIGH, X_LOW, simulate_model, true_function_table
from curekit.survival_data import SurvivalSample, km_cure_by_strata

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "beran", "probcure", "latency", "testcov", "testmz", "simulate",
    "berancv", "probcure-hboot", "latency-hboot", "kmcure",
)

DEFAULT_X0_GRID = (0.05, 0.95, 100)


@dataclass(frozen=True)
class RunConfig:
    """Immutable configuration of one command-line run.

    Serialized into JSON output so that a run can be replayed. Use
    ``with_updates()`` to derive a modified copy.
    """

    subcommand: str
    input: Optional[str] = None
    x_col: str = "x"
    t_col: str = "t"
    d_col: str = "d"
    categorical: Optional[bool] = None
    x0: Optional[Tuple[float, ...]] = None
    x0_grid: Optional[Tuple[float, float, int]] = None
    h: Optional[Tuple[float, ...]] = None
    local: bool = True
    conflevel: Optional[float] = None
    testim: Optional[Tuple[float, ...]] = None
    n: Optional[int] = None
    output_format: str = "csv"
    output: Optional[str] = None
    config_path: Optional[str] = None
    control: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}", "RunConfig")
        if self.x0 is not None and len(self.x0) == 0:
            raise UsageError("x0 list is empty", "RunConfig")
        if self.x0_grid is not None and int(self.x0_grid[2]) < 1:
            raise UsageError("x0 grid length must be >= 1", "RunConfig")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str)

    @classmethod
    def from_json(cls, json_str: str) -> "RunConfig":
        data = json.loads(json_str)
        for key in ("x0", "x0_grid", "h", "testim"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def with_updates(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


def resolve_x0(config: RunConfig, sample: SurvivalSample) -> np.ndarray:
    """Explicit x0 list, or an equally spaced grid between two covariate quantiles."""
    if config.x0 is not None:
        return np.asarray(config.x0, dtype=float)
    lo_q, hi_q, length = config.x0_grid or DEFAULT_X0_GRID
    if not 0.0 <= lo_q <= hi_q <= 1.0:
        raise UsageError(f"x0 grid quantiles must satisfy 0 <= lo <= hi <= 1, got {lo_q}, {hi_q}", "resolve_x0")
    lo, hi = np.quantile(sample.x, [lo_q, hi_q])
    return np.linspace(lo, hi, int(length))


def bandwidth_spec(config: RunConfig) -> Optional[BandwidthSpec]:
    if config.h is None:
        return None
    if config.local and len(config.h) == 1:
        return BandwidthSpec.single(config.h[0])
    return BandwidthSpec.from_values(config.h, local=config.local)


def load_sample(config: RunConfig, categorical: Optional[bool] = None) -> SurvivalSample:
    if not config.input:
        raise UsageError("--input is required", config.subcommand)
    if categorical is None:
        categorical = config.categorical
    return ingest_csv(config.input, config.x_col, config.t_col, config.d_col, categorical)


def _run_estimator(config: RunConfig, params: ControlParams):
    sample = load_sample(config)
    x0 = resolve_x0(config, sample)
    h = bandwidth_spec(config)
    if config.subcommand == "beran":
        return beran(sample, x0, h, config.testim, config.conflevel, params)
    if config.subcommand == "probcure":
        return probcure(sample, x0, h, config.conflevel, params)
    return latency(sample, x0, h, config.testim, config.conflevel, params)


def _run_selector(config: RunConfig, params: ControlParams):
    sample = load_sample(config)
    x0 = resolve_x0(config, sample)
    selector: Callable = {"berancv": berancv, "probcure-hboot": probcure_hboot, "latency-hboot": latency_hboot}[
        config.subcommand
    ]
    return selector(sample, x0, params)


def _run_testcov(config: RunConfig, params: ControlParams):
    return testcov(load_sample(config), params)


def _run_testmz(config: RunConfig, params: ControlParams):
    return testmz(load_sample(config))


def _run_kmcure(config: RunConfig, params: ControlParams):
    return km_cure_by_strata(load_sample(config, categorical=True))


def _run_simulate(config: RunConfig, params: ControlParams):
    if config.n is None:
        raise UsageError("--n is required for simulate", "simulate")
    return simulate_model(config.n, resolve_seed(params.seed))


HANDLERS: Dict[str, Callable[[RunConfig, ControlParams], Any]] = {
    "beran": _run_estimator,
    "probcure": _run_estimator,
    "latency": _run_estimator,
    "berancv": _run_selector,
    "probcure-hboot": _run_selector,
    "latency-hboot": _run_selector,
    "testcov": _run_testcov,
    "testmz": _run_testmz,
    "kmcure": _run_kmcure,
    "simulate": _run_simulate,
}


def needs_seed(config: RunConfig) -> bool:
    """Whether the run draws random numbers."""
    if config.subcommand in ("probcure-hboot", "latency-hboot", "testcov", "simulate"):
        return True
    if config.subcommand in ("probcure", "latency"):
        return config.h is None or config.conflevel is not None
    return config.subcommand == "beran" and config.conflevel is not None


def sidecar_path(output: str) -> str:
    path = Path(output)
    return str(path.with_name(f"{path.stem}.truth.csv"))


def run_command(config: RunConfig) -> str:
    """Execute one subcommand and return its serialized output."""
    params = resolve_control_params(config.config_path, config.control)
    if needs_seed(config):
        params = params.with_updates(seed=resolve_seed(params.seed))
    logger.debug(f"Running {config.subcommand} with {params.to_dict()}")
    result = HANDLERS[config.subcommand](config, params)

    text = emit_results(result, config.output_format, config.output, params, config.to_dict())

    if config.subcommand == "simulate" and config.output:
        times = np.linspace(0.0, float(np.quantile(result.sample.t, 0.95)), 50)
        table = true_function_table(np.linspace(X_LOW, X_HIGH, 41), times)
        write_text(sidecar_path(config.output), frame_to_csv(table))
    return text

