"""
Configuration management - numerical defaults shared by all modules.
"""

from dataclasses import dataclass, asdict, replace, fields
from pathlib import Path
from typing import Optional
import json
import logging
import os

from src.exceptions import ParameterError

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "WM_THREADS"


@dataclass(frozen=True)
class Config:
    """
    Numerical tolerances and limits.

    Attributes:
        quad_tol: Relative agreement required between two successive
            Gauss-Legendre orders in the period quadrature.
        accuracy_limit: Quadrature error estimate above which a period is
            reported as not accurate.
        closure_tol: Maximal phase-space distance between the start and the
            end of an orbit after one minimal period.
        parallel_tol: Sup-norm threshold below which the Ricci tensor is
            declared parallel.
        energy_cutoff: Fraction of c_max above which energies are rejected by
            the period map.
        census_cutoff: Fraction of c_max bounding the energy search of the
            census (closer to the homoclinic loop than energy_cutoff).
        steps_per_period: Default step count of the symplectic integrator.
        profile_samples: Default number of samples of a solution profile.
        max_threads: Cap on worker threads for table evaluation (None: serial).
    """
    quad_tol: float = 1e-10
    accuracy_limit: float = 1e-8
    closure_tol: float = 1e-8
    parallel_tol: float = 1e-10
    energy_cutoff: float = 0.9999
    census_cutoff: float = 1.0 - 1e-8
    steps_per_period: int = 4096
    profile_samples: int = 4096
    max_threads: Optional[int] = None

    def __post_init__(self):
        for name in ("quad_tol", "accuracy_limit", "closure_tol", "parallel_tol"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("energy_cutoff", "census_cutoff"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {value}")
        if self.steps_per_period < 4:
            raise ParameterError(f"steps_per_period must be at least 4, got {self.steps_per_period}")
        if self.profile_samples < 8:
            raise ParameterError(f"profile_samples must be at least 8, got {self.profile_samples}")
        if self.max_threads is not None and self.max_threads < 1:
            raise ParameterError(f"max_threads must be at least 1, got {self.max_threads}")

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        """Create Config from dictionary, ignoring unknown keys."""
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def load(cls, json_path: Path) -> "Config":
        """Load configuration from JSON file."""
        try:
            with open(json_path, "r", encoding="utf-8") as f:
                data = json.load(f)
            return cls.from_dict(data)
        except FileNotFoundError:
            # Return default config if file doesn't exist
            logger.debug("config file %s not found, using defaults", json_path)
            return cls()

    def to_dict(self) -> dict:
        """Convert Config to dictionary."""
        return asdict(self)

    def with_overrides(self, **overrides) -> "Config":
        """Return a copy with the given non-None fields replaced."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config(config_path: Optional[Path] = None) -> Config:
    """
    Load configuration from file and apply the thread cap from the environment.

    Args:
        config_path: Optional path to config file. If None, uses default location.

    Returns:
        Config object
    """
    if config_path is None:
        # Default location: data/config.json relative to project root
        config_path = Path(__file__).parent.parent / "data" / "config.json"

    config = Config.load(config_path)

    threads = os.environ.get(THREADS_ENV_VAR)
    if threads:
        try:
            max_threads = int(threads)
        except ValueError:
            raise ParameterError(f"{THREADS_ENV_VAR} must be an integer, got '{threads}'")
        config = config.with_overrides(max_threads=max_threads)
    return config
