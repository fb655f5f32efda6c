"""Control parameters for the bootstrap and cross-validation procedures.

Values are layered: model defaults, then an optional YAML file, then the
environment (``CUREKIT_SEED``, ``CUREKIT_WORKERS``, also read from ``.env``),
then explicit overrides from the command line.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from curekit.errors import UsageError

load_dotenv()

logger = logging.getLogger(__name__)

ENV_PREFIX = "CUREKIT_"


class ControlParams(BaseModel):
    """Immutable bootstrap/grid/pilot configuration.

    Use ``with_updates()`` to derive a modified copy.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    B: int = Field(999, ge=1)
    hbound: Tuple[float, float] = (0.1, 3.0)
    hl: int = Field(100, ge=1)
    hsave: bool = False
    nnfrac: float = Field(0.25, gt=0.0, le=1.0)
    fpilot: Optional[str] = None
    qt: float = Field(0.75, gt=0.0, lt=1.0)
    hsmooth: int = Field(1, ge=1)
    seed: Optional[int] = None
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("hbound")
    @classmethod
    def _positive_bounds(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        lo, hi = value
        if lo <= 0 or hi <= 0:
            raise ValueError("hbound entries must be positive")
        return (float(lo), float(hi))

    @model_validator(mode="after")
    def _ordered_bounds(self) -> "ControlParams":
        lo, hi = self.hbound
        if not lo < hi:
            raise ValueError(f"hbound must satisfy lo < hi, got {self.hbound}")
        return self

    def with_updates(self, **kwargs: Any) -> "ControlParams":
        """Create a validated copy with some fields replaced."""
        return build_control_params({**self.model_dump(), **kwargs})

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump()
        data["hbound"] = list(self.hbound)
        return data


def build_control_params(values: Dict[str, Any]) -> ControlParams:
    """Validate a mapping into ControlParams, raising UsageError on bad input."""
    try:
        return ControlParams(**values)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first.get("loc", ())) or "control"
        raise UsageError(f"invalid control parameter '{field}': {first.get('msg')}", "controlpars")


def load_control_file(path: str) -> Dict[str, Any]:
    """Read control parameters from a YAML file.

    The file may hold the parameters at top level or under a ``control:`` key.
    """
    config_path = Path(path)
    if not config_path.exists():
        raise UsageError(f"config file not found: {config_path}", "load_control_file")

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise UsageError(f"failed to parse {config_path}: {e}", "load_control_file")

    if not isinstance(data, dict):
        raise UsageError(f"{config_path} must contain a mapping", "load_control_file")
    section = data.get("control", data)
    if not isinstance(section, dict):
        raise UsageError(f"'control' section of {config_path} must be a mapping", "load_control_file")
    return dict(section)


def env_overrides(environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """Collect ``CUREKIT_SEED`` / ``CUREKIT_WORKERS`` from the environment."""
    if environ is None:
        environ = os.environ
    overrides: Dict[str, Any] = {}
    for key in ("seed", "workers"):
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is None or raw == "":
            continue
        try:
            overrides[key] = int(raw)
        except ValueError:
            raise UsageError(f"{ENV_PREFIX}{key.upper()} must be an integer, got {raw!r}", "env_overrides")
    return overrides


def resolve_control_params(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    environ: Optional[Dict[str, str]] = None,
) -> ControlParams:
    """Layer defaults, YAML file, environment and explicit overrides."""
    values: Dict[str, Any] = {}
    if config_path:
        values.update(load_control_file(config_path))
        logger.debug(f"Loaded control parameters from {config_path}")
    values.update(env_overrides(environ))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return build_control_params(values)
