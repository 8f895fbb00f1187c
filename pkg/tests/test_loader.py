"""Tests for file loaders, scenario parsing and settings."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import D1_PROBS
from liftwatch.config import get_preset, list_presets, load_settings
from liftwatch.distributions import random_joint
from liftwatch.errors import InvalidParameter, ParseError, SumNotOne
from liftwatch.lift import watchdog_partition
from liftwatch.loader import (
    load_channel,
    load_experiment_config,
    load_joint,
    parse_float,
    parse_scenarios,
    save_channel,
    write_joint,
    write_rows,
)
from liftwatch.mechanism import build_mechanism, channel_rows
from liftwatch.models import DistributionSpec, Metric, Scenario

EXPERIMENTS_DIR = Path(__file__).parent.parent / "experiments"

# (text, parsed value)
FLOAT_CASES = [
    ("0.5", 0.5),
    ("inf", math.inf),
    (".inf", math.inf),
    ("Infinity", math.inf),
    (2, 2.0),
]


def test_load_csv(d1_csv):
    joint = load_joint(d1_csv)
    assert joint.x_labels == ("x0", "x1", "x2", "x3")
    assert joint.s_labels == ("s0", "s1")
    np.testing.assert_allclose(joint.probs, D1_PROBS, atol=1e-15)


def test_load_tsv(tmp_path):
    path = tmp_path / "joint.tsv"
    path.write_text("\ta\tb\nlow\t0.4\t0.1\nhigh\t0.2\t0.3\n", encoding="utf-8")
    joint = load_joint(path)
    assert joint.x_labels == ("a", "b")
    assert joint.s_labels == ("low", "high")


@pytest.mark.parametrize("suffix", [".json", ".yaml"])
def test_load_structured(tmp_path, suffix):
    path = tmp_path / f"joint{suffix}"
    path.write_text(json.dumps({"probs": D1_PROBS, "x_labels": ["a", "b", "c", "d"]}), encoding="utf-8")
    joint = load_joint(path)
    assert joint.x_labels == ("a", "b", "c", "d")
    assert joint.s_labels == ("s0", "s1")


def test_write_joint_is_lossless(tmp_path):
    joint = random_joint(DistributionSpec(3, 4, seed=8))
    for name in ("joint.csv", "joint.json"):
        loaded = load_joint(write_joint(joint, tmp_path / name))
        assert np.array_equal(loaded.probs, joint.probs)
        assert loaded.x_labels == joint.x_labels


def test_load_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_joint(tmp_path / "missing.csv")


@pytest.mark.parametrize(
    "text",
    [
        ",x0,x1\n",
        ",x0,x1\ns0,0.5\n",
        ",x0,x1\ns0,0.5,abc\n",
    ],
)
def test_load_malformed_csv(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ParseError):
        load_joint(path)


def test_load_invalid_probabilities(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",x0,x1\ns0,0.5,0.4\n", encoding="utf-8")
    with pytest.raises(SumNotOne):
        load_joint(path)


def test_structured_without_probs(tmp_path):
    path = tmp_path / "joint.yaml"
    path.write_text("x_labels: [a, b]\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_joint(path)


def test_channel_round_trip(tmp_path, d1):
    mech = build_mechanism(d1, watchdog_partition(d1, 0.5), "custom", [0.3, 0.7])
    labels, channel = load_channel(save_channel(mech, tmp_path / "channel.json"))
    assert labels == d1.x_labels
    np.testing.assert_allclose(channel, mech.channel, atol=1e-12)
    np.testing.assert_allclose(channel.sum(axis=1), 1.0, atol=1e-15)


@pytest.mark.parametrize(
    "payload,error",
    [
        ({"labels": ["a", "b"], "channel": [[1.0, 0.0]]}, ParseError),
        ({"labels": ["a", "a"], "channel": [[1.0, 0.0], [0.0, 1.0]]}, ParseError),
        ({"labels": ["a", "b"], "channel": [[0.9, 0.0], [0.0, 1.0]]}, InvalidParameter),
        ({"labels": ["a", "b"], "channel": [[1.5, -0.5], [0.0, 1.0]]}, InvalidParameter),
    ],
)
def test_invalid_channel(tmp_path, payload, error):
    path = tmp_path / "channel.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(error):
        load_channel(path)


@pytest.mark.parametrize("name", ["channel.csv", "channel.tsv"])
def test_delimited_channel_round_trip(tmp_path, d1, name):
    mech = build_mechanism(d1, watchdog_partition(d1, 0.5), "custom", [0.3, 0.7])
    path = save_channel(mech, tmp_path / name)
    first = path.read_text(encoding="utf-8").splitlines()[0]
    assert first.replace("\t", ",") == "x,y,probability"
    labels, channel = load_channel(path)
    assert labels == d1.x_labels
    np.testing.assert_allclose(channel, mech.channel, atol=1e-12)


def test_channel_rows_load_without_header_or_zero_entries(tmp_path, d1):
    mech = build_mechanism(d1, watchdog_partition(d1, 0.5))
    path = tmp_path / "channel.csv"
    path.write_text(
        "".join(f"{x},{y},{p!r}\n" for x, y, p in channel_rows(mech) if p > 0),
        encoding="utf-8",
    )
    labels, channel = load_channel(path)
    assert labels == d1.x_labels
    np.testing.assert_allclose(channel, mech.channel, atol=1e-15)


@pytest.mark.parametrize(
    "text,error",
    [
        ("x,y,probability\n", ParseError),
        ("a,a,1.0,extra\n", ParseError),
        ("a,a,0.5\na,a,0.5\n", ParseError),
        ("a,b,1.0\n", ParseError),
        ("a,a,half\n", ParseError),
        ("a,a,0.5\na,b,0.2\nb,b,1.0\n", InvalidParameter),
    ],
)
def test_invalid_delimited_channel(tmp_path, text, error):
    path = tmp_path / "channel.csv"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(error):
        load_channel(path)


def test_write_rows(tmp_path):
    rows = [("s0", "x1", -math.inf), ("s1", "x0", 1 / 3)]
    path = write_rows(tmp_path / "rows.csv", ("s", "x", "lift"), rows)
    assert path.read_text(encoding="utf-8").splitlines() == [
        "s,x,lift",
        "s0,x1,-inf",
        "s1,x0,0.333333333333",
    ]


@pytest.mark.parametrize("text,expected", FLOAT_CASES)
def test_parse_float(text, expected):
    assert parse_float(text) == expected


def test_parse_float_rejects_garbage():
    with pytest.raises(ParseError):
        parse_float("one")


def test_parse_scenarios_inline():
    scenarios = parse_scenarios("1:0.005:2, 2:0")
    assert scenarios == [Scenario(1.0, 0.005, 2.0), Scenario(2.0)]


def test_parse_scenarios_inline_unbounded():
    assert parse_scenarios("1:0.01:inf")[0].eps_bar == math.inf


def test_parse_scenarios_preset():
    assert parse_scenarios("nmil") == get_preset("nmil")
    assert len(get_preset("nmil")) == 5


@pytest.mark.parametrize("text", ["unknown-preset", "1:2:3:4", "1:0.5:0.2"])
def test_parse_scenarios_errors(text):
    with pytest.raises((ParseError, InvalidParameter)):
        parse_scenarios(text)


def test_presets_listed():
    assert list_presets() == ["max-lift", "nmil", "nmil-unbounded"]


@pytest.mark.parametrize("name", ["max_lift", "nmil", "nmil_unbounded"])
def test_bundled_experiments_load(name):
    config = load_experiment_config(EXPERIMENTS_DIR / f"{name}.yaml")
    assert config.n_trials == 5000
    assert (config.dist_spec.n_s, config.dist_spec.n_x, config.dist_spec.seed) == (15, 20, 1)
    assert config.overflow_cap is None


def test_experiment_matches_preset():
    config = load_experiment_config(EXPERIMENTS_DIR / "nmil.yaml")
    assert config.scenarios == get_preset("nmil")
    assert config.metrics == [Metric.NMIL, Metric.EPS_C_AFTER]
    unbounded = load_experiment_config(EXPERIMENTS_DIR / "nmil_unbounded.yaml")
    assert unbounded.scenarios[1].eps_bar == math.inf


def test_experiment_defaults(tmp_path):
    path = tmp_path / "quick.yaml"
    path.write_text("scenarios: max-lift\n", encoding="utf-8")
    config = load_experiment_config(path)
    assert config.name == "quick"
    assert config.n_trials == 5000
    assert config.scenarios == [Scenario(2.0)]
    assert config.metrics == list(Metric)


def test_experiment_unknown_metric(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("scenarios: max-lift\nmetrics: [median]\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_experiment_config(path)


def test_experiment_needs_scenarios(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("n_trials: 10\n", encoding="utf-8")
    with pytest.raises(InvalidParameter):
        load_experiment_config(path)


def test_settings_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LIFTWATCH_JOBS", "3")
    monkeypatch.setenv("LIFTWATCH_LOG_LEVEL", "debug")
    settings = load_settings(tmp_path / ".env")
    assert settings.jobs == 3
    assert settings.log_level == "DEBUG"
    assert settings.brute_force_max_alphabet == 20


def test_settings_from_dotenv(tmp_path, monkeypatch):
    monkeypatch.delenv("LIFTWATCH_BRUTE_FORCE_MAX_ALPHABET", raising=False)
    env_file = tmp_path / ".env"
    env_file.write_text("LIFTWATCH_BRUTE_FORCE_MAX_ALPHABET=12\n", encoding="utf-8")
    assert load_settings(env_file).brute_force_max_alphabet == 12
    monkeypatch.delenv("LIFTWATCH_BRUTE_FORCE_MAX_ALPHABET", raising=False)
