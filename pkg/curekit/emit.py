"""Serialization of estimates, bandwidth selections and test results.

CSV tables use 17 significant digits; JSON keeps Python's shortest exact float
representation, so reparsed vectors are bit-identical. Non-finite values are
written as ``NA`` (CSV) or ``null`` (JSON).
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
import pandas as pd
from jinja2 import Environment, FileSystemLoader

from curekit.bandwidths import BandwidthSelection
from curekit.control import ControlParams
from curekit.errors import DataError, UsageError
from curekit.estimates import CureEstimate, CurveEstimate
from curekit.hyptests import CovTestResult, MZTestResult
from curekit.parallel import RNG_NAME
from curekit.simulation import SimulatedData

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "text")
FLOAT_FORMAT = "%.17g"
TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"


def _clean(value: Any) -> Any:
    """JSON-ready copy: arrays to lists, non-finite floats to None."""
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return _clean(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _optional(values: Optional[np.ndarray], shape) -> np.ndarray:
    return np.full(shape, np.nan) if values is None else np.asarray(values, dtype=float)


def result_kind(result: Any) -> str:
    if isinstance(result, CureEstimate):
        return "cure"
    if isinstance(result, CurveEstimate):
        return result.kind
    if isinstance(result, BandwidthSelection):
        return "bandwidth"
    if isinstance(result, CovTestResult):
        return "testcov"
    if isinstance(result, MZTestResult):
        return "testmz"
    if isinstance(result, SimulatedData):
        return "simulation"
    if isinstance(result, Mapping):
        return "kmcure"
    raise UsageError(f"cannot serialize a {type(result).__name__}", "emit_results")


def to_frame(result: Any) -> pd.DataFrame:
    """Tabular form: one row per (x0, time) cell for estimates, one row for tests."""
    kind = result_kind(result)
    if kind == "cure":
        m = result.x0.size
        return pd.DataFrame({
            "x0": result.x0,
            "h": result.h.for_points(m),
            "time": np.full(m, np.nan if result.t1max is None else result.t1max),
            "estimate": result.cure,
            "lower": _optional(result.ci_lower, m),
            "upper": _optional(result.ci_upper, m),
            "error": [e or "" for e in result.errors] if result.errors else [""] * m,
        })
    if kind in ("survival", "latency", "curve"):
        m, r = result.values.shape
        return pd.DataFrame({
            "x0": np.repeat(result.x0, r),
            "h": np.repeat(result.h.for_points(m), r),
            "time": np.tile(result.times, m),
            "estimate": result.values.ravel(),
            "lower": _optional(result.ci_lower, (m, r)).ravel(),
            "upper": _optional(result.ci_upper, (m, r)).ravel(),
            "error": np.repeat([e or "" for e in result.errors] if result.errors else [""] * m, r),
        })
    if kind == "bandwidth":
        m = result.x0.size
        frame = pd.DataFrame({"x0": result.x0, "h": result.h.values})
        if result.smoothed is not None:
            frame["h_smoothed"] = result.smoothed.values
        if result.dropped is not None:
            frame["dropped"] = result.dropped
        frame["error"] = [e or "" for e in result.errors] if result.errors else [""] * m
        return frame
    if kind == "testcov":
        return pd.DataFrame([{
            "cm_stat": result.cm_stat, "cm_pvalue": result.cm_pvalue,
            "ks_stat": result.ks_stat, "ks_pvalue": result.ks_pvalue,
            "B": result.B, "covariate_kind": result.covariate_kind,
        }])
    if kind == "testmz":
        return pd.DataFrame([{
            "statistic": result.statistic, "n": result.n, "delta": result.delta,
            "interval_lo": result.interval[0], "interval_hi": result.interval[1], "pvalue": result.pvalue,
        }])
    if kind == "simulation":
        s = result.sample
        return pd.DataFrame({"x": s.x, "t": s.t, "d": s.d.astype(int)})
    return pd.DataFrame({"level": list(result.keys()), "cure": list(result.values())})


def to_document(result: Any) -> Dict[str, Any]:
    """Structured form of a result for the JSON output."""
    kind = result_kind(result)
    if kind == "cure":
        doc = {
            "x0": result.x0, "h": result.h.to_dict(), "t1max": result.t1max, "cure": result.cure,
            "ci_lower": result.ci_lower, "ci_upper": result.ci_upper, "conflevel": result.conflevel,
            "errors": list(result.errors), "no_events": result.no_events,
        }
    elif kind in ("survival", "latency", "curve"):
        doc = {
            "x0": result.x0, "h": result.h.to_dict(), "times": result.times, "values": result.values,
            "ci_lower": result.ci_lower, "ci_upper": result.ci_upper, "conflevel": result.conflevel,
            "errors": list(result.errors),
        }
    elif kind == "bandwidth":
        doc = {
            "selector": result.kind, "x0": result.x0, "h": result.h.to_dict(),
            "smoothed": None if result.smoothed is None else result.smoothed.to_dict(),
            "grid": None if result.grid is None else result.grid.to_dict(),
            "criterion": result.criterion, "dropped": result.dropped, "errors": list(result.errors),
        }
    elif kind == "simulation":
        doc = {"x": result.sample.x, "t": result.sample.t, "d": result.sample.d.astype(int)}
    elif kind == "kmcure":
        doc = {"cure": dict(result)}
    elif kind == "testcov":
        doc = {
            "cm_stat": result.cm_stat, "cm_pvalue": result.cm_pvalue,
            "ks_stat": result.ks_stat, "ks_pvalue": result.ks_pvalue,
            "B": result.B, "covariate_kind": result.covariate_kind,
        }
        if result.cm_boot is not None:
            doc["cm_boot"] = result.cm_boot
            doc["ks_boot"] = result.ks_boot
    else:
        doc = {
            "statistic": result.statistic, "n": result.n, "delta": result.delta,
            "interval_lo": result.interval[0], "interval_hi": result.interval[1],
            "interval": list(result.interval), "pvalue": result.pvalue,
        }
    selection = getattr(result, "selection", None)
    if selection is not None:
        doc["selection"] = to_document(selection)
    return doc


def _seed_of(result: Any) -> Optional[int]:
    return getattr(result, "seed", None)


def render_json(result: Any, params: Optional[ControlParams] = None, run: Optional[Dict[str, Any]] = None) -> str:
    document = {
        "kind": result_kind(result),
        "result": to_document(result),
        "params": None if params is None else params.to_dict(),
        "seed": _seed_of(result),
        "rng": RNG_NAME,
        "run": run,
    }
    return json.dumps(_clean(document), indent=2, allow_nan=False) + "\n"


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="NA", lineterminator="\n")


def render_csv(result: Any) -> str:
    return frame_to_csv(to_frame(result))


def load_template_environment() -> Environment:
    env = Environment(loader=FileSystemLoader([TEMPLATES_DIR, Path.cwd()]), keep_trailing_newline=True)
    env.filters["num"] = lambda v: "NA" if v is None or (isinstance(v, float) and not math.isfinite(v)) else f"{v:.6g}"
    return env


def render_text(result: Any, params: Optional[ControlParams] = None) -> str:
    kind = result_kind(result)
    frame = to_frame(result)
    template_name = "test.txt.j2" if kind in ("testcov", "testmz", "kmcure") else "estimate.txt.j2"
    template = load_template_environment().get_template(template_name)
    h = getattr(result, "h", None)
    return template.render(
        kind=kind,
        bandwidth_mode=None if h is None or not hasattr(h, "mode") else h.mode,
        columns=list(frame.columns),
        rows=frame.to_dict(orient="records"),
        conflevel=getattr(result, "conflevel", None),
        seed=_seed_of(result),
        params=None if params is None else params.to_dict(),
    )


def emit_results(
    result: Any,
    fmt: str = "csv",
    destination: Optional[str] = None,
    params: Optional[ControlParams] = None,
    run: Optional[Dict[str, Any]] = None,
) -> str:
    """Serialize ``result``; write it to ``destination`` when given and return the text."""
    if fmt == "csv":
        text = render_csv(result)
    elif fmt == "json":
        text = render_json(result, params, run)
    elif fmt == "text":
        text = render_text(result, params)
    else:
        raise UsageError(f"unknown output format {fmt!r}; choose from {', '.join(FORMATS)}", "emit_results")

    if destination:
        write_text(destination, text)
    return text


def write_text(destination: str, text: str) -> None:
    path = Path(destination)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot write {path}: {e.strerror or e}", "emit_results")
    logger.info(f"Wrote {path}")
