import pytest
from pydantic import ValidationError

from app.core.config import Settings, settings

def test_settings_initialization():
    """Test settings initialization with default values"""
    assert settings.PROJECT_NAME == "UrbanDEM-SR"
    assert settings.BATCH_SIZE == 64
    assert settings.LEARNING_RATE == 1e-4
    assert settings.LR_DROP_FACTOR == 10
    assert settings.WEIGHT_DECAY == 1e-4
    assert settings.TRAIN_BLOCK == 500
    assert settings.TRAIN_BLOCK_OVERLAP == 250
    assert settings.INFER_BLOCK == 250
    assert settings.INFER_OVERLAP == 125

def test_assessment_defaults():
    """Test morphological assessment defaults"""
    assert settings.EDGE_THRESHOLD == 1.0
    assert settings.MIN_BUILDING_AREA == 20.0
    assert settings.BOUNDARY_BUFFERS == [0, 1, 2, 3]
    assert settings.THINNING_METHOD == "zhang"
    assert settings.PROFILE_SAMPLING == "nearest"

def test_environment_overrides(monkeypatch):
    """Test that environment variables are properly loaded"""
    monkeypatch.setenv("THREADS", "4")
    monkeypatch.setenv("FEATURES", "16")
    fresh = Settings()
    assert fresh.THREADS == 4
    assert fresh.FEATURES == 16

def test_test_environment():
    """Test that pytest-env settings reach the settings object"""
    assert settings.LOG_LEVEL == "WARNING"
    assert settings.THREADS == 1

@pytest.mark.parametrize(
    "raw, expected",
    [
        ("0,2,4", [0, 2, 4]),
        (" 1 , 3 ", [1, 3]),
        ("[0, 5]", [0, 5]),
    ],
)
def test_boundary_buffers_from_env(monkeypatch, raw, expected):
    """Test comma-separated and JSON list forms of BOUNDARY_BUFFERS"""
    monkeypatch.setenv("BOUNDARY_BUFFERS", raw)
    assert Settings().BOUNDARY_BUFFERS == expected

def test_threads_must_be_positive(monkeypatch):
    """Test that a zero thread count is rejected"""
    monkeypatch.setenv("THREADS", "0")
    with pytest.raises(ValidationError):
        Settings()
