"""Tests for joint construction, validation and generation."""

from __future__ import annotations

import numpy as np
import pytest

from liftwatch.distributions import (
    conditional_s_given_x,
    conditional_x_given_s,
    make_joint,
    random_joint,
    trial_seed,
)
from liftwatch.errors import (
    DuplicateLabel,
    IndexOutOfRange,
    InvalidParameter,
    NegativeEntry,
    ParseError,
    SumNotOne,
    ZeroMarginal,
)
from liftwatch.models import DistributionSpec

INVALID_TABLES = [
    ([[0.5, 0.4]], SumNotOne),
    ([[0.3, 0.3], [0.3, 0.3]], SumNotOne),
    ([[0.6, -0.1], [0.3, 0.2]], NegativeEntry),
    ([[0.5, 0.0], [0.5, 0.0]], ZeroMarginal),
    ([[0.5, 0.5], [0.0, 0.0]], ZeroMarginal),
    ([[1.0]], ParseError),
    ([0.5, 0.5], ParseError),
    ([["a", "b"]], ParseError),
    ([[0.5, float("nan")]], ParseError),
]


def test_d1_marginals(d1):
    np.testing.assert_allclose(d1.p_x, [0.30, 0.25, 0.23, 0.22], atol=1e-12)
    np.testing.assert_allclose(d1.p_s, [0.5, 0.5], atol=1e-12)
    assert d1.x_labels == ("x0", "x1", "x2", "x3")
    assert d1.s_labels == ("s0", "s1")


def test_single_sensitive_symbol():
    joint = make_joint([[0.5, 0.5]])
    assert joint.n_s == 1
    np.testing.assert_allclose(joint.p_s, [1.0])


@pytest.mark.parametrize("table,error", INVALID_TABLES)
def test_invalid_tables(table, error):
    with pytest.raises(error):
        make_joint(table)


def test_duplicate_label():
    with pytest.raises(DuplicateLabel):
        make_joint([[0.5, 0.5]], x_labels=["a", "a"])


def test_label_count_mismatch():
    with pytest.raises(ParseError):
        make_joint([[0.5, 0.5]], x_labels=["a", "b", "c"])


def test_joint_is_read_only(d1):
    with pytest.raises(ValueError):
        d1.probs[0, 0] = 0.5


def test_random_joint_shape_and_sum():
    joint = random_joint(DistributionSpec(15, 20, seed=1))
    assert joint.probs.shape == (15, 20)
    assert abs(joint.probs.sum() - 1.0) <= 1e-12
    assert np.all(joint.probs > 0)


def test_random_joint_is_deterministic():
    first = random_joint(DistributionSpec(2, 4, seed=7))
    second = random_joint(DistributionSpec(2, 4, seed=7))
    assert np.array_equal(first.probs, second.probs)


def test_random_joints_are_distinct():
    tables = {random_joint(DistributionSpec(3, 4, seed=s)).probs.tobytes() for s in range(1, 51)}
    assert len(tables) == 50


@pytest.mark.parametrize("n_s,n_x,seed", [(0, 4, 1), (2, 1, 1), (2, 4, -1), (2, 4, 2**64)])
def test_invalid_spec(n_s, n_x, seed):
    with pytest.raises(InvalidParameter):
        DistributionSpec(n_s, n_x, seed)


def test_trial_seed_is_pure_and_distinct():
    assert trial_seed(1, 5) == trial_seed(1, 5)
    assert len({trial_seed(1, t) for t in range(100)}) == 100
    assert trial_seed(1, 0) != trial_seed(2, 0)
    assert 0 <= trial_seed(1, 0) < 2**64


def test_conditional_x_given_s(d1):
    np.testing.assert_allclose(conditional_x_given_s(d1, 0), [0.50, 0.10, 0.16, 0.24], atol=1e-12)


def test_conditional_rows_sum_to_one():
    joint = random_joint(DistributionSpec(5, 7, seed=3))
    for s in range(joint.n_s):
        assert abs(conditional_x_given_s(joint, s).sum() - 1.0) <= 1e-12
    for x in range(joint.n_x):
        assert abs(conditional_s_given_x(joint, x).sum() - 1.0) <= 1e-12


def test_conditional_of_independent_joint(independent):
    np.testing.assert_allclose(conditional_x_given_s(independent, 1), independent.p_x, atol=1e-12)


@pytest.mark.parametrize("fn,index", [(conditional_x_given_s, 5), (conditional_s_given_x, 4)])
def test_conditional_index_out_of_range(d1, fn, index):
    with pytest.raises(IndexOutOfRange):
        fn(d1, index)
