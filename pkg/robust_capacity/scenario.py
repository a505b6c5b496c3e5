"""
Scenario and model files.

A scenario names one uncertainty model (inline or generated), an optional
cost constraint, solver overrides, an optional one-parameter sweep and the
output location.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError, model_validator

from .channel import ChannelMatrix
from .exceptions import ChannelError, RobustCapacityError, ScenarioError
from .uncertainty import SetKind, UncertaintyModel


class SetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: SetKind = SetKind.INF_BALL
    gamma: float = Field(default=1.0, ge=0, le=1)


class InlineModel(BaseModel):
    """Model given by its matrices: nominal rows, direction matrices and the set."""
    model_config = ConfigDict(extra="forbid")

    nominal: List[List[float]]
    directions: List[List[List[float]]] = Field(default_factory=list)
    set: SetSpec = Field(default_factory=SetSpec)

    def build(self) -> UncertaintyModel:
        return UncertaintyModel.from_dict(self.model_dump(mode="json"))


class GeneratorSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    params: Dict[str, Any] = Field(default_factory=dict)
    # None falls back to the solver seed
    seed: Optional[int] = None


class CostSpec(BaseModel):
    """Explicit cost vector, or the threshold rule applied to the unconstrained solution."""
    model_config = ConfigDict(extra="forbid")

    a: Optional[List[float]] = None
    b: float = Field(default=1.0, gt=0)
    threshold: float = Field(default=0.05, gt=0, le=1)
    penalty: float = Field(default=50.0, gt=0)


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    param: Literal["gamma", "W", "beta_lo", "beta_hi"]
    values: List[Union[int, float]] = Field(min_length=1)


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: Optional[str] = None
    name: Optional[str] = None
    format: Literal["csv"] = "csv"


class StartSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    xi: List[float]
    p: List[float]
    lam: Optional[float] = None


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    model: Optional[InlineModel] = None
    generator: Optional[GeneratorSpec] = None
    cost: Optional[CostSpec] = None
    solver: Dict[str, Any] = Field(default_factory=dict)
    sweep: Optional[SweepSpec] = None
    output: OutputSpec = Field(default_factory=OutputSpec)
    start: Optional[StartSpec] = None
    parallelism: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_model_source(self):
        if (self.model is None) == (self.generator is None):
            raise ValueError("exactly one of 'model' and 'generator' is required")
        if self.model is not None and self.sweep is not None and self.sweep.param != "gamma":
            raise ValueError("inline models can only sweep 'gamma'")
        return self

    @property
    def seed(self) -> int:
        if self.generator is None or self.generator.seed is None:
            return 0
        return self.generator.seed

    @property
    def points(self) -> List[Optional[Union[int, float]]]:
        """Sweep values in order, or a single unswept point."""
        if self.sweep is None:
            return [None]
        return list(self.sweep.values)


def _read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError(str(path), f"cannot read file: {e.strerror or e}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(str(path), f"invalid JSON: {e.msg}", f"line {e.lineno}, column {e.colno}")


def _pydantic_error(path: Union[str, Path], error: PydanticValidationError) -> ScenarioError:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ())) or None
    return ScenarioError(str(path), first.get("msg", "invalid value"), location)


def _channel_location(error: ChannelError, prefix: str = "nominal") -> Optional[str]:
    details = error.details
    if "direction" in details:
        return f"directions[{details['direction']}] row {details['row']}"
    if "row" in details:
        return f"{prefix} row {details['row']}"
    if "index" in details:
        return f"entry {tuple(details['index'])}"
    return None


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Parse and validate a scenario file.

    Raises:
        ScenarioError: With the JSON line and column, or the failing field path
    """
    data = _read_json(path)
    try:
        return Scenario.model_validate(data)
    except PydanticValidationError as e:
        raise _pydantic_error(path, e) from e


def build_inline_model(path: Union[str, Path], model: InlineModel) -> UncertaintyModel:
    """Construct an inline model, reporting invariant violations against the file."""
    try:
        return model.build()
    except ChannelError as e:
        raise ScenarioError(str(path), e.details.get("reason", e.message), _channel_location(e)) from e
    except RobustCapacityError as e:
        raise ScenarioError(str(path), e.message) from e


def load_model(path: Union[str, Path]) -> UncertaintyModel:
    """Load an uncertainty model file (nominal, directions, set)."""
    data = _read_json(path)
    try:
        model = InlineModel.model_validate(data)
    except PydanticValidationError as e:
        raise _pydantic_error(path, e) from e
    return build_inline_model(path, model)


def load_problem(path: Union[str, Path]) -> Scenario:
    """
    Load a scenario file, or wrap a bare model file as an unswept scenario.

    Model files are recognised by a top-level 'nominal' key.

    Raises:
        ScenarioError: If the file is neither a valid scenario nor a valid model
    """
    data = _read_json(path)
    if isinstance(data, dict) and "nominal" in data:
        try:
            model = InlineModel.model_validate(data)
        except PydanticValidationError as e:
            raise _pydantic_error(path, e) from e
        build_inline_model(path, model)
        return Scenario(name=Path(path).stem, model=model)
    try:
        return Scenario.model_validate(data)
    except PydanticValidationError as e:
        raise _pydantic_error(path, e) from e


def load_channel(path: Union[str, Path]) -> ChannelMatrix:
    """Load a single channel matrix: either a bare array of rows or {"nominal": rows}."""
    data = _read_json(path)
    rows = data.get("nominal") if isinstance(data, dict) else data
    if rows is None:
        raise ScenarioError(str(path), "expected an array of rows or an object with 'nominal'")
    try:
        return ChannelMatrix.from_rows(rows)
    except ChannelError as e:
        raise ScenarioError(str(path), e.details.get("reason", e.message), _channel_location(e)) from e
    except RobustCapacityError as e:
        raise ScenarioError(str(path), e.message) from e
