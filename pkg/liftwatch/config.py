"""Runtime settings, numeric tolerances and named scenario presets."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from .models import Scenario

# Global sum / distribution validation.
SUM_TOL = 1e-9
# Every |lift| vs eps and delta_total vs delta comparison.
LIFT_TOL = 1e-12
# Channel rows and R(y) of constructed mechanisms.
ROW_TOL = 1e-12

# Finite stand-in for eps_bar = inf used in the relaxed NMIL runs.
EPS_BAR_LARGE = 1000.0


@dataclass
class Settings:
    """Environment-driven defaults."""

    jobs: int = 1
    brute_force_max_alphabet: int = 20
    brute_force_warn_alphabet: int = 16
    log_level: str = "WARNING"


def load_settings(env_file: Path | None = None) -> Settings:
    """Read settings from the environment after loading an optional .env file."""
    load_dotenv(env_file or Path.cwd() / ".env")
    return Settings(
        jobs=int(os.environ.get("LIFTWATCH_JOBS", 1)),
        brute_force_max_alphabet=int(
            os.environ.get("LIFTWATCH_BRUTE_FORCE_MAX_ALPHABET", 20)
        ),
        brute_force_warn_alphabet=int(
            os.environ.get("LIFTWATCH_BRUTE_FORCE_WARN_ALPHABET", 16)
        ),
        log_level=os.environ.get("LIFTWATCH_LOG_LEVEL", "WARNING").upper(),
    )


# Scenario sets for the Monte Carlo harness:
# - max-lift: maximum abs-log-lift before vs after randomization at eps = 2
# - nmil:     utility loss for strict eps = 1, 2 and three relaxed settings
SCENARIO_PRESETS: dict[str, list[Scenario]] = {
    "max-lift": [Scenario(eps=2.0)],
    "nmil": [
        Scenario(eps=1.0),
        Scenario(eps=2.0),
        Scenario(eps=1.0, delta=0.005, eps_bar=2.0),
        Scenario(eps=1.0, delta=0.005, eps_bar=EPS_BAR_LARGE),
        Scenario(eps=1.0, delta=0.01, eps_bar=4.0),
    ],
    "nmil-unbounded": [
        Scenario(eps=1.0),
        Scenario(eps=1.0, delta=0.005, eps_bar=math.inf),
    ],
}


def get_preset(name: str) -> list[Scenario]:
    """Get a scenario preset by name."""
    if name not in SCENARIO_PRESETS:
        raise ValueError(
            f"Unknown scenario preset: {name}. Choose from: {list(SCENARIO_PRESETS.keys())}"
        )
    return list(SCENARIO_PRESETS[name])


def list_presets() -> list[str]:
    """Return all preset names."""
    return list(SCENARIO_PRESETS.keys())
