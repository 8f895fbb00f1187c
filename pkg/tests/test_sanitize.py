"""Tests for applying a channel to a symbol stream."""

from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from liftwatch.errors import UnknownSymbol
from liftwatch.lift import watchdog_partition
from liftwatch.mechanism import build_mechanism
from liftwatch.sanitize import sanitize_stream

LABELS = ("a", "b", "c")


def test_identity_channel_passes_symbols_through():
    stream = ["a", "c", "b", "b", "a"]
    assert sanitize_stream(np.eye(3), LABELS, stream, seed=1) == stream


def test_same_seed_same_output(d1):
    mech = build_mechanism(d1, watchdog_partition(d1, 0.5))
    stream = ["x0", "x1"] * 50
    first = sanitize_stream(mech.channel, d1.x_labels, stream, seed=11)
    assert first == sanitize_stream(mech.channel, d1.x_labels, stream, seed=11)
    assert first != sanitize_stream(mech.channel, d1.x_labels, stream, seed=12)


def test_kept_symbols_are_never_changed(d1):
    mech = build_mechanism(d1, watchdog_partition(d1, 0.5))
    stream = ["x2", "x3", "x2"] * 20
    assert sanitize_stream(mech.channel, d1.x_labels, stream, seed=3) == stream


def test_merge_channel_emits_single_symbol(d1):
    mech = build_mechanism(d1, watchdog_partition(d1, 0.5), "merge")
    outputs = sanitize_stream(mech.channel, d1.x_labels, ["x0", "x1"] * 30, seed=5)
    assert set(outputs) == {"x0"}


def test_unknown_symbol():
    with pytest.raises(UnknownSymbol):
        sanitize_stream(np.eye(3), LABELS, ["a", "z"], seed=0)


def test_empty_stream():
    assert sanitize_stream(np.eye(3), LABELS, [], seed=0) == []


def test_output_frequencies_follow_the_channel():
    channel = np.array(
        [
            [0.2, 0.3, 0.5],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    n = 100_000
    counts = Counter(sanitize_stream(channel, LABELS, ["a"] * n, seed=2))
    empirical = np.array([counts[label] / n for label in LABELS])
    assert 0.5 * np.abs(empirical - channel[0]).sum() < 0.02


@pytest.mark.parametrize("mode", ["uniform", "merge"])
def test_released_joint_matches_channel(d1, mode):
    mech = build_mechanism(d1, watchdog_partition(d1, 0.5), mode)
    n = 100_000
    rng = np.random.default_rng(21)
    cells = rng.choice(d1.probs.size, size=n, p=d1.probs.ravel())
    s_index, x_index = np.unravel_index(cells, d1.probs.shape)

    stream = [d1.x_labels[x] for x in x_index]
    outputs = sanitize_stream(mech.channel, d1.x_labels, stream, seed=8)
    y_lookup = {label: y for y, label in enumerate(d1.x_labels)}
    y_index = [y_lookup[label] for label in outputs]
    empirical = np.zeros(d1.probs.shape)
    np.add.at(empirical, (s_index, y_index), 1.0 / n)

    expected = d1.probs @ mech.channel
    assert 0.5 * np.abs(empirical - expected).sum() < 0.02
