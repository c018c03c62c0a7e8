"""Run configuration schema, loading and overrides."""

import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any

import pydantic
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from core.coeff import (
    COEFFICIENT_PARAMETERS,
    RHS_PARAMETERS,
    CoefficientFamily,
    RhsFamily,
)
from core.exceptions import ConfigError
from core.fixtures import (
    BOUNDARY_PARAMETERS,
    SYNTHETIC_PARAMETERS,
    BoundaryProfile,
    SyntheticField,
)
from core.grid import MIN_NODES_PER_AXIS
from core.solver import SolverMethod

logger = logging.getLogger(__name__)

# Sweep axis derived from the grid block
GRID_SPACING_KEY = "grid.h"


class StrictModel(BaseModel):
    """Unknown keys are errors."""

    model_config = ConfigDict(extra="forbid")


def _check_names(given: dict[str, Any], allowed, owner: str) -> dict[str, Any]:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ValueError(
            f"unknown parameter(s) {unknown} for {owner}; allowed: {sorted(allowed)}"
        )
    return given


class GridConfig(StrictModel):
    """Box [-half_width, half_width]^n with nodes_per_axis nodes per axis."""

    n: int = Field(..., description="Space dimension (1, 2 or 3)")
    half_width: float = Field(default=1.0, gt=0, description="Half side of the box")
    nodes_per_axis: int = Field(
        ..., ge=MIN_NODES_PER_AXIS, description="Nodes per axis, end points included"
    )

    @field_validator("n")
    @classmethod
    def validate_dimension(cls, v: int) -> int:
        if v not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        return v


class CoefficientConfig(StrictModel):
    family: CoefficientFamily = Field(default=CoefficientFamily.IDENTITY)
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("params")
    @classmethod
    def validate_params(cls, v: dict[str, Any], info: ValidationInfo) -> dict[str, Any]:
        family = info.data.get("family")
        if family is None:
            return v
        return _check_names(v, COEFFICIENT_PARAMETERS[family], f"coefficient family '{family}'")


class RhsConfig(StrictModel):
    family: RhsFamily = Field(default=RhsFamily.CONSTANT)
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("params")
    @classmethod
    def validate_params(cls, v: dict[str, Any], info: ValidationInfo) -> dict[str, Any]:
        family = info.data.get("family")
        if family is None:
            return v
        return _check_names(v, RHS_PARAMETERS[family], f"f family '{family}'")


class BoundaryConfig(StrictModel):
    profile: BoundaryProfile = Field(default=BoundaryProfile.ZERO)
    params: dict[str, Any] = Field(default_factory=dict, validate_default=True)

    @field_validator("params")
    @classmethod
    def validate_params(cls, v: dict[str, Any], info: ValidationInfo) -> dict[str, Any]:
        profile = info.data.get("profile")
        if profile is None:
            return v
        _check_names(v, BOUNDARY_PARAMETERS[profile], f"boundary profile '{profile}'")
        if profile == BoundaryProfile.CUSTOM and "path" not in v:
            raise ValueError("boundary profile 'custom' requires 'path'")
        return v


class SolverConfig(StrictModel):
    method: SolverMethod = Field(default=SolverMethod.PSOR)
    tol: float = Field(default=1e-10, gt=0, description="Relative complementarity tolerance")
    max_iter: int = Field(default=200_000, ge=1, description="Sweeps or outer iterations")


class SyntheticConfig(StrictModel):
    """A field built directly on the grid instead of solving."""

    kind: SyntheticField
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("params")
    @classmethod
    def validate_params(cls, v: dict[str, Any], info: ValidationInfo) -> dict[str, Any]:
        kind = info.data.get("kind")
        if kind is None:
            return v
        return _check_names(v, SYNTHETIC_PARAMETERS[kind], f"synthetic field '{kind}'")


class SuiteConfig(StrictModel):
    name: str
    params: dict[str, Any] = Field(default_factory=dict)
    asserted: bool | None = Field(
        default=None, description="Override the suite's negative-control default"
    )

    @field_validator("name")
    @classmethod
    def validate_name(cls, v: str) -> str:
        import experiments  # noqa: F401  (registers the suites)
        from core.suites import get_suite, list_suites

        if get_suite(v) is None:
            raise ValueError(f"unknown suite '{v}'; registered: {list_suites()}")
        return v.lower()

    @field_validator("params")
    @classmethod
    def validate_params(cls, v: dict[str, Any], info: ValidationInfo) -> dict[str, Any]:
        from core.suites import get_suite

        name = info.data.get("name")
        suite = get_suite(name) if name else None
        if suite is None:
            return v
        return _check_names(v, suite.parameters, f"suite '{name}'")


class RunConfig(StrictModel):
    """Everything needed to reproduce a run."""

    grid: GridConfig
    coefficients: CoefficientConfig = Field(default_factory=CoefficientConfig)
    f: RhsConfig = Field(default_factory=RhsConfig)
    boundary: BoundaryConfig = Field(default_factory=BoundaryConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    synthetic: SyntheticConfig | None = None
    tau_pos: float | None = Field(
        default=None, ge=0, description="Positivity threshold; h²/100 when omitted"
    )
    suites: list[SuiteConfig] = Field(default_factory=list)
    output_dir: str | None = None
    seed: int | None = None


def _config_error(exc: pydantic.ValidationError, source: str) -> ConfigError:
    errors = exc.errors()
    first = errors[0]
    key = ".".join(str(part) for part in first["loc"]) or "<root>"
    message = first["msg"].removeprefix("Value error, ")
    return ConfigError(
        f"{key}: {message}",
        details={
            "source": source,
            "errors": [
                {"key": ".".join(str(p) for p in e["loc"]), "message": e["msg"]} for e in errors
            ],
        },
    )


def parse_run_config(data: Any, source: str = "<config>") -> RunConfig:
    """Validate a decoded configuration.

    Raises:
        ConfigError: Message starts with the dotted key of the first offending field
    """
    try:
        return RunConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        raise _config_error(exc, source) from None


def load_run_config(path: Path) -> RunConfig:
    """Load and validate a JSON run configuration.

    Raises:
        ConfigError: If the file is unreadable, not JSON or fails the schema
    """
    path = Path(path)
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    config = parse_run_config(data, str(path))
    logger.debug(f"Loaded run config from {path}")
    return config


def dump_run_config(config: RunConfig, path: Path | None = None) -> str:
    """Serialize to JSON; ``parse_run_config(json.loads(...))`` gives back ``config``."""
    text = json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text


def has_key(config: RunConfig, key: str) -> bool:
    """Whether ``apply_override`` can address ``key`` in this config."""
    if key == GRID_SPACING_KEY:
        return True
    parts = key.split(".")
    node: Any = config.model_dump(mode="json")
    for depth, part in enumerate(parts):
        if isinstance(node, list):
            if not part.isdigit() or int(part) >= len(node):
                return False
            node = node[int(part)]
        elif isinstance(node, dict):
            if part not in node:
                # New parameter names are addressable inside params blocks
                return depth == len(parts) - 1 and depth > 0 and parts[depth - 1] == "params"
            node = node[part]
        else:
            return False
    return True


def parse_value(text: str) -> Any:
    """Sweep value from the command line: JSON literal, fraction like 1/64, or string."""
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        return text


def parse_values(text: str) -> list[Any]:
    """Comma-separated sweep values."""
    return [parse_value(part) for part in text.split(",") if part.strip()]


def apply_override(config: RunConfig, key: str, value: Any) -> RunConfig:
    """Return a copy of ``config`` with the dotted ``key`` set to ``value``.

    ``grid.h`` is derived: it sets nodes_per_axis = 2·half_width/h + 1. Keys
    inside a ``params`` block may be new (they are checked per family); any
    other key must already exist.

    Raises:
        ConfigError: Unknown key, non-integral node count, or schema failure
    """
    data = config.model_dump(mode="json")
    if key == GRID_SPACING_KEY:
        h = float(value)
        if not h > 0:
            raise ConfigError(f"{key}: spacing must be positive")
        intervals = 2 * data["grid"]["half_width"] / h
        if abs(intervals - round(intervals)) > 1e-9 * max(1.0, intervals):
            raise ConfigError(f"{key}: 2·half_width/h = {intervals} is not an integer")
        data["grid"]["nodes_per_axis"] = int(round(intervals)) + 1
        return parse_run_config(data, f"override {key}={value}")

    parts = key.split(".")
    node: Any = data
    for depth, part in enumerate(parts[:-1]):
        node = _step(node, part, ".".join(parts[: depth + 1]))
    last = parts[-1]
    if isinstance(node, list):
        index = _index(node, last, key)
        node[index] = value
    elif isinstance(node, dict):
        if last not in node and (len(parts) < 2 or parts[-2] != "params"):
            raise ConfigError(f"{key}: parameter does not exist in the config")
        node[last] = value
    else:
        raise ConfigError(f"{key}: parameter does not exist in the config")
    return parse_run_config(data, f"override {key}={value}")


def _step(node: Any, part: str, path: str) -> Any:
    if isinstance(node, list):
        return node[_index(node, part, path)]
    if isinstance(node, dict) and isinstance(node.get(part), (dict, list)):
        return node[part]
    raise ConfigError(f"{path}: parameter does not exist in the config")


def _index(node: list, part: str, path: str) -> int:
    try:
        index = int(part)
    except ValueError:
        raise ConfigError(f"{path}: expected a list index") from None
    if not 0 <= index < len(node):
        raise ConfigError(f"{path}: index out of range")
    return index
