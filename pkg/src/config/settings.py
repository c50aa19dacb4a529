import logging
from typing import Optional

from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class AppSettings(BaseSettings):
    """Application settings loaded from environment variables or .env file."""

    # Linear algebra
    cholesky_jitter: float = Field(
        0.0,
        ge=0,
        description="Diagonal jitter added before factorizing W'ΣW. Off by default, it biases the priors.",
    )
    condition_warning: float = Field(
        1e12, gt=1, description="Condition-number estimate above which a warning is logged."
    )
    degenerate_threshold: float = Field(
        1e-300,
        ge=0,
        description="Quadratic form y'W(W'ΣW)^-1W'y below this value means y lies in span(H).",
    )
    span_rtol: float = Field(
        1e-12,
        ge=0,
        description="Relative size of W'y against y under which y is treated as lying in span(H).",
    )

    # Reference prior
    radicand_clamp: float = Field(
        1e-14,
        ge=0,
        description="Relative tolerance under which a negative prior radicand is clamped to zero.",
    )
    strict_prior_bound: bool = Field(
        False, description="Raise instead of logging when the conditional prior upper bound is violated."
    )

    # Gibbs sampler grids
    grid_size: int = Field(512, ge=16, description="Points per conditional posterior table.")
    grid_theta_min: float = Field(1e-2, gt=0, description="Initial lower grid bound on θ_i.")
    grid_theta_max: float = Field(1e1, gt=0, description="Initial upper grid bound on θ_i.")
    grid_max_extensions: int = Field(4, ge=0, description="Maximum number of grid extensions per side.")
    grid_extension_factor: float = Field(10.0, gt=1, description="Multiplicative widening per extension.")
    tail_log_ratio: float = Field(
        27.6, gt=0, description="Required log-density drop at the grid boundary (27.6 ≈ log 1e12)."
    )

    # Simulation
    generation_jitter: float = Field(
        1e-10, ge=0, description="Jitter allowed when drawing synthetic Gaussian process data."
    )

    # Execution
    threads: Optional[int] = Field(
        None, ge=1, description="Worker threads for benchmark replicates (None = all cores)."
    )

    log_level: str = Field("INFO", description="One of DEBUG, INFO, WARNING, ERROR, CRITICAL.")
    log_file: Optional[str] = Field(None, description="Optional path of a rotating JSON log file.")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="GIBBS_KRIGING_",
        extra="ignore",
        case_sensitive=False,
    )

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in LOG_LEVELS:
            logging.warning(f"Unknown GIBBS_KRIGING_LOG_LEVEL '{value}', falling back to INFO.")
            return "INFO"
        return level

    @model_validator(mode="after")
    def _grid_bounds(self) -> "AppSettings":
        if self.grid_theta_min >= self.grid_theta_max:
            raise ValueError("grid_theta_min must be smaller than grid_theta_max")
        return self


def load_settings() -> AppSettings:
    """Settings from the environment and .env; exits when they do not validate."""
    try:
        return AppSettings()
    except ValidationError as e:
        logging.error(f"Invalid GIBBS_KRIGING_* settings:\n{e}")
        raise SystemExit("Failed to load gibbs-kriging settings. Exiting.") from e


settings: AppSettings = load_settings()
