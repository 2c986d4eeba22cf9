"""
Tests for configuration loading and overrides.
"""

import json

import pytest

from src.config import Config, THREADS_ENV_VAR, load_config
from src.exceptions import ParameterError


# ============================================================================
# 1. Defaults and validation
# ============================================================================

def test_defaults():
    """Built-in defaults match the documented tolerances"""
    config = Config()
    assert config.quad_tol == 1e-10
    assert config.closure_tol == 1e-8
    assert config.parallel_tol == 1e-10
    assert config.energy_cutoff == 0.9999
    assert config.max_threads is None


@pytest.mark.parametrize("field, value", [
    ("quad_tol", 0.0),
    ("closure_tol", -1e-8),
    ("energy_cutoff", 1.0),
    ("census_cutoff", 0.0),
    ("steps_per_period", 2),
    ("profile_samples", 4),
    ("max_threads", 0),
])
def test_invalid_values_rejected(field, value):
    """Out-of-range settings raise ParameterError"""
    with pytest.raises(ParameterError):
        Config(**{field: value})


def test_with_overrides_skips_none():
    """None overrides keep the current value"""
    config = Config().with_overrides(quad_tol=1e-12, closure_tol=None)
    assert config.quad_tol == 1e-12
    assert config.closure_tol == 1e-8


# ============================================================================
# 2. Loading
# ============================================================================

def test_from_dict_ignores_unknown_keys():
    """Unknown keys such as notes are ignored"""
    config = Config.from_dict({"quad_tol": 1e-9, "notes": "defaults"})
    assert config.quad_tol == 1e-9


def test_load_missing_file_gives_defaults(tmp_path):
    """A missing file falls back to defaults"""
    assert Config.load(tmp_path / "absent.json") == Config()


def test_load_file(tmp_path):
    """Values from the JSON file are used"""
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"profile_samples": 512}), encoding="utf-8")
    assert Config.load(path).profile_samples == 512


def test_project_config_matches_defaults(monkeypatch):
    """data/config.json carries the built-in defaults"""
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    assert load_config() == Config()


def test_thread_cap_from_environment(monkeypatch, tmp_path):
    """WM_THREADS sets max_threads"""
    monkeypatch.setenv(THREADS_ENV_VAR, "3")
    assert load_config(tmp_path / "absent.json").max_threads == 3


@pytest.mark.parametrize("value", ["many", "0"])
def test_invalid_thread_cap(monkeypatch, tmp_path, value):
    """Non-integer or non-positive WM_THREADS is a parameter error"""
    monkeypatch.setenv(THREADS_ENV_VAR, value)
    with pytest.raises(ParameterError):
        load_config(tmp_path / "absent.json")
