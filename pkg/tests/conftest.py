"""Shared fixtures: the worked example joint and a few degenerate shapes."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from liftwatch.distributions import make_joint, product_joint
from liftwatch.models import JointDistribution

D1_PROBS = [
    [0.25, 0.05, 0.08, 0.12],
    [0.05, 0.20, 0.15, 0.10],
]

# Lifts of D1 in nats, rounded.
D1_EPS_X = [1.09861, 0.91629, 0.36291, 0.09531]
D1_H_X = 1.37890
D1_NMIL_X0_X1 = 0.27483


@pytest.fixture(autouse=True)
def _isolate_liftwatch_env():
    """Restore LIFTWATCH_* variables that load_dotenv may write into os.environ."""
    saved = {k: v for k, v in os.environ.items() if k.startswith("LIFTWATCH_")}
    yield
    for key in [k for k in os.environ if k.startswith("LIFTWATCH_")]:
        del os.environ[key]
    os.environ.update(saved)


@pytest.fixture
def d1() -> JointDistribution:
    return make_joint(D1_PROBS)


@pytest.fixture
def d1_csv(tmp_path: Path) -> Path:
    path = tmp_path / "d1.csv"
    path.write_text(
        ",x0,x1,x2,x3\n"
        "s0,0.25,0.05,0.08,0.12\n"
        "s1,0.05,0.20,0.15,0.10\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture
def independent() -> JointDistribution:
    """p(s, x) = p(s) p(x); every lift is (numerically) zero."""
    return product_joint([0.4, 0.6], [0.1, 0.2, 0.3, 0.4])


@pytest.fixture
def zero_cell() -> JointDistribution:
    """p(s0, x1) = 0, so i(s0, x1) = -inf and eps(x1) = inf."""
    return make_joint([[0.3, 0.0, 0.2], [0.1, 0.2, 0.2]])


@pytest.fixture
def breach() -> JointDistribution:
    """At eps = 0.8 only x0 is randomized and its block still breaches with mass 0.05."""
    return make_joint([[0.35, 0.15], [0.05, 0.45]])
