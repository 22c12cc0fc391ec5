"""Simulation configuration: YAML in, fully resolved and validated model out."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

MODES = ("baygo", "fully_connected", "star_posm", "star_negm", "no_collab", "centralized")
Mode = Literal["baygo", "fully_connected", "star_posm", "star_negm", "no_collab", "centralized"]

# Defaults the source experiments never state; reported in run metadata.
UNSTATED_DEFAULTS = (
    "delta",
    "batch_size",
    "rounds",
    "noise_std",
    "grid.points",
    "data.samples_per_agent",
    "data.theta_star",
    "data.noise_std",
    "data.test_size",
    "consensus_tol",
    "epsilon",
)


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSpec(_Strict):
    lower: list[float]
    upper: list[float]
    points: Union[int, list[int]] = 41

    @model_validator(mode="after")
    def _check(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("grid lower/upper must be nonempty and of equal length")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("grid box needs lower < upper in every dimension")
        pts = [self.points] * len(self.lower) if isinstance(self.points, int) else self.points
        if len(pts) != len(self.lower):
            raise ValueError("grid.points must give one count per dimension")
        if any(p < 1 for p in pts):
            raise ValueError("grid.points entries must be >= 1")
        total = 1
        for p in pts:
            total *= p
        if total < 2:
            raise ValueError("grid needs K >= 2 points in total")
        object.__setattr__(self, "points", list(pts))
        return self

    @property
    def size(self) -> int:
        total = 1
        for p in self.points:
            total *= p
        return total


class UniformPrior(_Strict):
    kind: Literal["uniform"]


class GaussianPrior(_Strict):
    kind: Literal["gaussian"]
    mean: list[float] = Field(default_factory=lambda: [0.0, 0.0])
    diag_cov: list[float] = Field(default_factory=lambda: [0.5, 0.5])

    @field_validator("diag_cov")
    @classmethod
    def _positive(cls, v):
        if any(c <= 0 for c in v):
            raise ValueError("prior variances must be > 0")
        return v


class TopologySpec(_Strict):
    kind: Literal["complete", "edge_list"] = "complete"
    path: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "edge_list" and not self.path:
            raise ValueError("topology.kind = edge_list requires topology.path")
        return self


class SyntheticData(_Strict):
    source: Literal["synthetic"]
    theta_star: list[float] = Field(default_factory=lambda: [-39.0, 0.63])
    noise_std: float = 1.0
    informative_range: list[float] = Field(default_factory=lambda: [85.0, 120.0])
    restricted_range: list[float] = Field(default_factory=lambda: [70.0, 85.0])
    informative_agent: int = 0
    samples_per_agent: int = 50
    test_size: int = 200
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check(self):
        if len(self.theta_star) != 2:
            raise ValueError("theta_star must be [intercept, slope]")
        for name in ("informative_range", "restricted_range"):
            r = getattr(self, name)
            if len(r) != 2 or not r[0] < r[1]:
                raise ValueError(f"{name} must be [lo, hi] with lo < hi")
        if self.noise_std < 0:
            raise ValueError("data.noise_std must be >= 0")
        if self.samples_per_agent < 1:
            raise ValueError("samples_per_agent must be >= 1")
        if self.test_size < 1:
            raise ValueError("test_size must be >= 1")
        return self


class CsvData(_Strict):
    source: Literal["csv"]
    path: str
    feature_columns: list[str]
    label_column: str
    threshold: float
    informative_agent: int = 0
    test_fraction: float = 0.2
    seed: Optional[int] = None

    @field_validator("test_fraction")
    @classmethod
    def _fraction(cls, v):
        if not 0 < v < 1:
            raise ValueError("test_fraction ∈ (0,1) violated")
        return v


class EmitFlags(_Strict):
    rounds: bool = True
    final_beliefs: bool = True
    connectivity: bool = True
    metadata: bool = True
    wall_clock: bool = False


class ExperimentSpec(_Strict):
    modes: Optional[list[Mode]] = None
    emit: EmitFlags = Field(default_factory=EmitFlags)

    @field_validator("modes")
    @classmethod
    def _nonempty(cls, v):
        if v is not None and not v:
            raise ValueError("at least one mode must be requested")
        return v


class SimulationConfig(_Strict):
    mode: Mode = "baygo"
    m: int = 12
    rounds: int = 100
    delta: float = 0.5
    batch_size: int = 4
    noise_std: float = 1.0
    seed: int = 0
    b_window: Optional[int] = None
    consensus_tol: float = 0.05
    epsilon: float = 0.01
    negm_center: Optional[int] = None
    grid: GridSpec
    prior: Union[UniformPrior, GaussianPrior] = Field(
        default_factory=lambda: GaussianPrior(kind="gaussian"), discriminator="kind"
    )
    topology: TopologySpec = Field(default_factory=TopologySpec)
    data: Union[SyntheticData, CsvData] = Field(
        default_factory=lambda: SyntheticData(source="synthetic"), discriminator="source"
    )
    experiment: ExperimentSpec = Field(default_factory=ExperimentSpec)

    @field_validator("delta")
    @classmethod
    def _delta(cls, v):
        if not 0 < v < 1:
            raise ValueError("delta ∈ (0,1) violated")
        return v

    @field_validator("rounds")
    @classmethod
    def _rounds(cls, v):
        if v < 1:
            raise ValueError("rounds T >= 1 violated")
        return v

    @field_validator("m")
    @classmethod
    def _m(cls, v):
        if v < 1:
            raise ValueError("m >= 1 violated")
        return v

    @field_validator("batch_size")
    @classmethod
    def _batch(cls, v):
        if v < 1:
            raise ValueError("batch_size >= 1 violated")
        return v

    @field_validator("noise_std", "consensus_tol", "epsilon")
    @classmethod
    def _positive(cls, v, info):
        if not v > 0:
            raise ValueError(f"{info.field_name} > 0 violated")
        return v

    @field_validator("seed")
    @classmethod
    def _seed(cls, v):
        if v < 0:
            raise ValueError("seed >= 0 violated")
        return v

    @model_validator(mode="after")
    def _resolve(self):
        dim = len(self.grid.lower)
        if isinstance(self.prior, GaussianPrior) and (
            len(self.prior.mean) != dim or len(self.prior.diag_cov) != dim
        ):
            raise ValueError(f"prior mean/diag_cov must have the grid dimension {dim}")
        n_features = 1 if isinstance(self.data, SyntheticData) else len(self.data.feature_columns)
        if n_features + 1 != dim:
            raise ValueError(
                f"grid dimension {dim} must equal feature count {n_features} + 1 (intercept)"
            )
        if not 0 <= self.data.informative_agent < self.m:
            raise ValueError(f"data.informative_agent must lie in [0, m={self.m})")
        b = self.b_window if self.b_window is not None else self.m
        if b < 1:
            raise ValueError("b_window >= 1 violated")
        object.__setattr__(self, "b_window", b)
        if self.data.seed is None:
            object.__setattr__(self.data, "seed", self.seed)
        if self.negm_center is None and self.m >= 2:
            object.__setattr__(self, "negm_center", 1 if self.data.informative_agent == 0 else 0)
        if self.negm_center is not None:
            if not 0 <= self.negm_center < self.m:
                raise ValueError("negm_center must lie in [0, m)")
            if self.m >= 2 and self.negm_center == self.data.informative_agent:
                raise ValueError("negm_center must differ from the informative agent")
        if self.experiment.modes is None:
            object.__setattr__(self.experiment, "modes", [self.mode])
        return self

    @property
    def modes(self) -> list[str]:
        return list(self.experiment.modes)

    def with_mode(self, mode: str) -> "SimulationConfig":
        return self.model_copy(update={"mode": mode})

    def resolved(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"]
        if e["type"] == "extra_forbidden":
            msg = f"unknown key {loc.split('.')[-1]!r}"
        lines.append(f"{loc}: {msg}")
    return "; ".join(lines)


def config_from_dict(raw: dict[str, Any]) -> SimulationConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    try:
        return SimulationConfig.model_validate(raw)
    except ValidationError as err:
        raise ConfigError(_format_validation(err)) from None


def parse_config(path, overrides: Optional[dict[str, Any]] = None) -> SimulationConfig:
    """Load, apply top-level overrides, validate and resolve every default."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: invalid YAML: {err}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    raw = dict(raw)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        node = raw
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    cfg = config_from_dict(raw)
    # relative data/topology paths resolve against the config file
    base = path.parent
    if isinstance(cfg.data, CsvData) and not Path(cfg.data.path).is_absolute():
        object.__setattr__(cfg.data, "path", str(base / cfg.data.path))
    if cfg.topology.path and not Path(cfg.topology.path).is_absolute():
        object.__setattr__(cfg.topology, "path", str(base / cfg.topology.path))
    return cfg
