"""Configuration data models."""

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .significance_models import ResampleStatistic


def _default_alpha_grid() -> List[float]:
    return [round(0.01 * i, 2) for i in range(1, 26)]


def _default_h_grid() -> List[float]:
    return [round(0.005 * i, 3) for i in range(61)]


def _check_grid(name: str, grid: List[float]) -> None:
    if not grid:
        raise ValueError(f"{name} must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} must be strictly increasing")


class IngestConfig(BaseModel):
    """Configuration for TREC run ingestion."""

    top_k: int = Field(default=1000, gt=0, description="Entries retained per query after sorting by score")
    min_docs_per_query: int = Field(default=10, ge=0, description="Minimum scored entries every query must have")
    min_relevant_per_query: int = Field(default=5, ge=0, description="Minimum retrieved judged-relevant documents per query")
    shift_epsilon: float = Field(default=1e-3, gt=0.0, description="Offset added after shifting non-positive scores")


class SimplexConfig(BaseModel):
    """Configuration for the Nelder-Mead simplex search."""

    max_iterations: int = Field(default=500, ge=1, description="Maximum number of simplex iterations")
    tolerance: float = Field(default=1e-8, gt=0.0, description="Convergence threshold on the objective spread")
    initial_step: float = Field(default=0.05, gt=0.0, description="Offset of the initial simplex vertices from x0")


class Profile(str, Enum):
    """Named experiment scales."""
    PAPER = "paper"
    DESK = "desk"


class ExperimentConfig(BaseModel):
    """Configuration for the type-I, power and validity experiments."""

    n_samples_per_list: int = Field(default=1000, ge=1, description="Scores sampled per synthetic list")
    n_repetitions: int = Field(default=1000, ge=1, description="Repetitions per system")
    n_resamples: int = Field(default=100_000, ge=1, description="Resamples of the permutation and bootstrap tests")
    alpha_grid: List[float] = Field(default_factory=_default_alpha_grid, description="Significance levels of the type-I experiment")
    h_grid: List[float] = Field(default_factory=_default_h_grid, description="Fractional increases of mu1 for the power experiment")
    query_sizes: List[int] = Field(default_factory=lambda: [10, 20, 30, 40, 50], description="Query-set sizes")
    power_alpha: float = Field(default=0.05, gt=0.0, lt=1.0, description="Significance level of the power curves")
    master_seed: Optional[int] = Field(default=None, ge=0, description="Seed of every random stream")
    statistic: ResampleStatistic = Field(default=ResampleStatistic.MEAN, description="Permutation and bootstrap statistic")
    exact_threshold: int = Field(default=20, ge=0, description="Largest n with exact permutation enumeration")
    map_simulations: int = Field(default=50, ge=1, description="Simulations per (system, query) for the validity MAP curve")
    threads: int = Field(default=1, ge=1, description="Worker threads")

    @field_validator('alpha_grid')
    @classmethod
    def validate_alpha_grid(cls, v):
        _check_grid("alpha_grid", v)
        if any(not 0.0 < a < 1.0 for a in v):
            raise ValueError("alpha_grid values must lie in (0, 1)")
        return v

    @field_validator('h_grid')
    @classmethod
    def validate_h_grid(cls, v):
        _check_grid("h_grid", v)
        if v[0] != 0.0:
            raise ValueError("h_grid must start at 0.0")
        return v

    @field_validator('query_sizes')
    @classmethod
    def validate_query_sizes(cls, v):
        _check_grid("query_sizes", v)
        if v[0] < 1:
            raise ValueError("query_sizes must be positive")
        return v


class ValidityConfig(BaseModel):
    """Configuration for the validity studies."""

    h: float = Field(default=0.05, ge=0.0, description="Increase of mu1 for the delta-AP distribution")
    n_reps: int = Field(default=100, ge=1, description="Simulations per (system, query) pair")
    h_grid: List[float] = Field(default_factory=lambda: [round(0.05 * i, 2) for i in range(7)], description="Grid of the MAP curve")

    @field_validator('h_grid')
    @classmethod
    def validate_h_grid(cls, v):
        _check_grid("h_grid", v)
        return v


class SystemConfig(BaseModel):
    """Main system configuration."""

    log_level: str = Field(default="INFO", description="System log level")
    log_file: Optional[str] = Field(default=None, description="Log file path")

    ingest: IngestConfig = Field(default_factory=IngestConfig, description="Run ingestion configuration")
    simplex: SimplexConfig = Field(default_factory=SimplexConfig, description="Simplex optimizer configuration")
    validity: ValidityConfig = Field(default_factory=ValidityConfig, description="Validity study configuration")
    profiles: Dict[str, Dict[str, Any]] = Field(default_factory=dict, description="Experiment profiles by name")

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of: {valid_levels}")
        return v.upper()

    def experiment_config(self, profile: Profile, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        """Resolve a profile and apply field-by-field overrides on top of it."""
        values = dict(self.profiles.get(profile.value, {}))
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return ExperimentConfig(**values)


class RunManifest(BaseModel):
    """Inputs and settings of one CLI invocation."""

    collection: str = Field(..., description="Collection name written to every report")
    runs: List[str] = Field(default_factory=list, description="Run files or directories of run files")
    qrels: Optional[str] = Field(default=None, description="Relevance judgments file")
    output_dir: str = Field(default="results", description="Output directory")
    profile: Profile = Field(default=Profile.DESK, description="Experiment profile")
    master_seed: Optional[int] = Field(default=None, ge=0, description="Seed of every random stream")
    overrides: Dict[str, Any] = Field(default_factory=dict, description="ExperimentConfig overrides")

    @model_validator(mode='after')
    def validate_sources(self):
        if self.runs and not self.qrels:
            raise ValueError("qrels is required when runs are given")
        return self
