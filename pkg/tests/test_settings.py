import pytest
from pydantic import ValidationError

from src.config.settings import AppSettings


def test_log_level_is_normalised():
    assert AppSettings(log_level="debug").log_level == "DEBUG"
    assert AppSettings(log_level="chatty").log_level == "INFO"


def test_environment_prefix(monkeypatch):
    monkeypatch.setenv("GIBBS_KRIGING_GRID_SIZE", "128")
    monkeypatch.setenv("GIBBS_KRIGING_STRICT_PRIOR_BOUND", "true")
    loaded = AppSettings()
    assert loaded.grid_size == 128
    assert loaded.strict_prior_bound


def test_invalid_numerical_settings():
    with pytest.raises(ValidationError):
        AppSettings(grid_size=4)
    with pytest.raises(ValidationError):
        AppSettings(grid_theta_min=5.0, grid_theta_max=1.0)
