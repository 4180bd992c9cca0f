"""Configuration management using Pydantic settings."""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .utils.exceptions import ConfigurationError


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="OFFLINE_ZSG_",
        case_sensitive=False,
        extra="ignore",
    )

    # Reproducibility
    seed: int = Field(default=0, ge=0, description="Default seed for sampling and splits")
    rng_bit_generator: Literal["philox", "pcg64"] = Field(
        default="philox", description="Bit generator used for every random stream"
    )

    # Learner parameters
    delta: float = Field(default=0.05, gt=0.0, lt=1.0, description="Failure probability")
    bernstein_c: float = Field(
        default=1.0, gt=0.0, description="Universal constant of the Bernstein bonuses"
    )
    hoeffding_constant: float = Field(
        default=4.0, gt=0.0, description="Leading constant of the Hoeffding bonus"
    )

    # Solver tolerances
    eps_ne_exact: float = Field(
        default=1e-8, gt=0.0, description="Matrix-game exploitability for exact evaluation"
    )
    eps_ne_learner: float = Field(
        default=1e-6, gt=0.0, description="Matrix-game exploitability inside learners"
    )
    prob_tolerance: float = Field(
        default=1e-12, gt=0.0, description="Tolerance for probability vectors"
    )
    coverage_threshold: float = Field(
        default=1e-12, ge=0.0, description="Occupancy mass below which a cell is uncovered"
    )

    # Execution
    workers: int = Field(default=1, ge=1, description="Concurrent sweep workers")
    run_timeout_seconds: float = Field(
        default=300.0, gt=0.0, description="Wall-clock budget of one learner run"
    )

    # Logging
    log_level: str = Field(default="INFO", description="Logging level")
    log_file: Optional[str] = Field(
        default="./logs/offline_zsg.log", description="Log file path"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        v = v.upper()
        if v not in valid_levels:
            raise ValueError(f"Invalid log level. Must be one of {valid_levels}")
        return v

    def get_log_file_path(self) -> Optional[Path]:
        """Get expanded log file path."""
        if self.log_file:
            return Path(self.log_file).expanduser()
        return None


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or create global settings instance."""
    global _settings
    if _settings is None:
        try:
            _settings = Settings()
        except ValidationError as e:
            raise ConfigurationError(f"Invalid settings: {e}")
    return _settings


def reload_settings() -> Settings:
    """Reload settings from environment."""
    global _settings
    _settings = None
    return get_settings()


Algorithm = Literal["hoeffding", "bernstein", "both"]


class ExperimentConfig(BaseModel):
    """One sweep over sample sizes, seeds and learners."""

    model_config = {"extra": "forbid"}

    game: Union[str, Dict[str, Any]] = Field(
        description="Game file path, 'hardness1', 'hardness2', 'random:...' or a generator dict"
    )
    rho: str = Field(default="uniform", description="Exploration policy file, 'uniform' or 'hardness'")
    algorithm: Algorithm = Field(default="both")
    n_grid: List[int] = Field(min_length=1)
    seeds: List[int] = Field(default_factory=lambda: [get_settings().seed])
    delta: float = Field(default_factory=lambda: get_settings().delta, gt=0.0, lt=1.0)
    c: float = Field(default_factory=lambda: get_settings().bernstein_c, gt=0.0)
    hoeffding_constant: float = Field(
        default_factory=lambda: get_settings().hoeffding_constant, gt=0.0
    )
    c_sensitivity: List[float] = Field(default_factory=list)
    hoeffding_sensitivity: List[float] = Field(default_factory=list)
    eps_ne: float = Field(default_factory=lambda: get_settings().eps_ne_learner, gt=0.0)
    output: Path = Field(default=Path("sweep.csv"))
    workers: int = Field(default_factory=lambda: get_settings().workers, ge=1)
    run_timeout_seconds: float = Field(
        default_factory=lambda: get_settings().run_timeout_seconds, gt=0.0
    )
    save_strategies: bool = False

    @field_validator("n_grid")
    @classmethod
    def validate_n_grid(cls, v: List[int]) -> List[int]:
        """n_grid must be positive and strictly increasing."""
        if any(n <= 0 for n in v):
            raise ValueError("n_grid entries must be positive integers")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("n_grid must be strictly increasing")
        return v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: List[int]) -> List[int]:
        """At least one non-negative seed."""
        if not v:
            raise ValueError("seeds must be non-empty")
        if any(s < 0 for s in v):
            raise ValueError("seeds must be non-negative")
        return v

    @field_validator("c_sensitivity", "hoeffding_sensitivity")
    @classmethod
    def validate_constants(cls, v: List[float]) -> List[float]:
        """Bonus constants must be positive."""
        if any(x <= 0 for x in v):
            raise ValueError("bonus constants must be positive")
        return v

    def algorithms(self) -> List[str]:
        """Learners covered by this config, in a fixed order."""
        if self.algorithm == "both":
            return ["hoeffding", "bernstein"]
        return [self.algorithm]

    def bonus_scales(self, algorithm: str) -> List[float]:
        """Bonus constants swept for ``algorithm`` (the base value first, no duplicates)."""
        if algorithm == "hoeffding":
            values = [self.hoeffding_constant] + list(self.hoeffding_sensitivity)
        else:
            values = [self.c] + list(self.c_sensitivity)
        return list(dict.fromkeys(values))

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        """
        Load a config from a JSON file.

        Args:
            path: Config file path

        Returns:
            Validated config

        Raises:
            ConfigurationError: If the file is unreadable, malformed or invalid
        """
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigurationError(f"Cannot read config file {path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(
                f"Malformed config file {path} at line {e.lineno}, column {e.colno}: {e.msg}"
            )
        if not isinstance(raw, dict):
            raise ConfigurationError(f"Config file {path} must contain a JSON object")
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: Dict[str, Any]) -> "ExperimentConfig":
        """Validate a plain mapping, raising ConfigurationError on failure."""
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid experiment config: {e}")

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """
        Apply CLI flag values on top of this config.

        Args:
            overrides: Field values; None means "flag not given"

        Returns:
            New validated config
        """
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_mapping(data)
