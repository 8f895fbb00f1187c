"""Tests for lift tables, subset lifts, the watchdog partition and critical values."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import D1_EPS_X, D1_NMIL_X0_X1
from liftwatch.distributions import make_joint, random_joint
from liftwatch.errors import EmptySubset, IndexOutOfRange
from liftwatch.lift import (
    critical_epsilons,
    critical_sweep,
    epsilon_eff,
    epsilon_of_subset,
    lift_rows,
    lift_table,
    log_sum_bounds,
    subset_lift,
    subset_lifts,
    watchdog_partition,
)
from liftwatch.models import DistributionSpec, Partition

# (subset, s, expected i(s, Q))
SUBSET_LIFT_CASES = [
    ([0, 1], 0, 0.08701),
    ([0, 1], 1, -0.09531),
    ([1, 0], 0, 0.08701),
    ([0], 0, 0.51083),
    ([0], 1, -1.09861),
]

# (eps, kept, randomized)
WATCHDOG_CASES = [
    (0.5, (2, 3), (0, 1)),
    (2.0, (0, 1, 2, 3), ()),
    (0.05, (), (0, 1, 2, 3)),
    (1.0, (1, 2, 3), (0,)),
]

# (kept, randomized, eps_eff)
EPS_EFF_CASES = [
    ((2, 3), (0, 1), 0.36291),
    ((1, 2, 3), (0,), 1.09861),
    ((0, 1, 2, 3), (), 1.09861),
    ((), (0, 1, 2, 3), 0.0),
]


def test_d1_lift_table(d1):
    table = lift_table(d1)
    assert table.i_sx[0, 0] == pytest.approx(math.log(0.25 / (0.5 * 0.30)), abs=1e-12)
    assert table.i_sx[0, 0] == pytest.approx(0.51083, abs=1e-4)
    assert table.i_sx[1, 0] == pytest.approx(-1.09861, abs=1e-4)
    np.testing.assert_allclose(table.eps_x, D1_EPS_X, atol=1e-4)


def test_independent_lifts_are_zero(independent):
    table = lift_table(independent)
    np.testing.assert_allclose(table.i_sx, 0.0, atol=1e-12)


def test_zero_cell_gives_minus_inf_without_nan(zero_cell):
    table = lift_table(zero_cell)
    assert table.i_sx[0, 1] == -math.inf
    assert table.eps_x[1] == math.inf
    assert not np.isnan(table.i_sx).any()


@pytest.mark.parametrize("subset,s,expected", SUBSET_LIFT_CASES)
def test_subset_lift(d1, subset, s, expected):
    assert subset_lift(d1, subset, s) == pytest.approx(expected, abs=1e-5)


def test_full_alphabet_lift_is_exactly_zero(d1):
    assert np.array_equal(subset_lifts(d1, range(d1.n_x)), np.zeros(d1.n_s))


def test_singleton_matches_table_exactly():
    joint = random_joint(DistributionSpec(6, 10, seed=11))
    table = lift_table(joint)
    for x in range(joint.n_x):
        assert np.array_equal(subset_lifts(joint, [x]), table.i_sx[:, x])
        assert epsilon_of_subset(joint, [x]) == table.eps_x[x]


def test_merging_removes_minus_inf(zero_cell):
    np.testing.assert_allclose(subset_lifts(zero_cell, [0, 1]), [0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("subset,error", [([], EmptySubset), ([0, 7], IndexOutOfRange), ([-1], IndexOutOfRange)])
def test_subset_errors(d1, subset, error):
    with pytest.raises(error):
        subset_lifts(d1, subset)


def test_subset_lift_bad_s(d1):
    with pytest.raises(IndexOutOfRange):
        subset_lift(d1, [0], 2)


def test_epsilon_of_subset(d1):
    assert epsilon_of_subset(d1, [0, 1]) == pytest.approx(0.09531, abs=1e-5)
    assert epsilon_of_subset(d1, [2]) == pytest.approx(0.36291, abs=1e-4)


@pytest.mark.parametrize("eps,kept,randomized", WATCHDOG_CASES)
def test_watchdog_partition(d1, eps, kept, randomized):
    partition = watchdog_partition(d1, eps)
    assert partition.kept == kept
    assert partition.randomized == randomized


def test_watchdog_keeps_symbol_at_threshold(d1):
    eps = float(lift_table(d1).eps_x[2])
    assert watchdog_partition(d1, eps).kept == (2, 3)


def test_critical_ladder(d1):
    ladder = critical_epsilons(d1)
    assert ladder.indices == [0, 1, 2, 3]
    np.testing.assert_allclose(ladder.values, D1_EPS_X, atol=1e-4)
    assert ladder.to_dict(d1.x_labels)[0]["x"] == "x0"


def test_ladder_ties_keep_index_order():
    joint = make_joint([[0.2, 0.3], [0.3, 0.2]])
    ladder = critical_epsilons(joint)
    assert ladder.values[0] == ladder.values[1]
    assert ladder.indices == [0, 1]


def test_ladder_puts_infinite_first(zero_cell):
    assert critical_epsilons(zero_cell).indices[0] == 1


@pytest.mark.parametrize("kept,randomized,expected", EPS_EFF_CASES)
def test_epsilon_eff(d1, kept, randomized, expected):
    assert epsilon_eff(d1, Partition(kept, randomized)) == pytest.approx(expected, abs=1e-4)


def test_epsilon_eff_rejects_bad_partition(d1):
    with pytest.raises(IndexOutOfRange):
        epsilon_eff(d1, Partition((0, 1), (1, 2, 3)))
    with pytest.raises(IndexOutOfRange):
        epsilon_eff(d1, Partition((0,), (1, 2)))


def test_log_sum_bounds(d1):
    for s in range(d1.n_s):
        lower, value, upper = log_sum_bounds(d1, [0, 1], s)
        assert lower <= value <= upper
    assert log_sum_bounds(d1, [0, 1], 0)[1] == pytest.approx(0.08701, abs=1e-5)


def test_log_sum_bounds_singleton_collapse(d1):
    lower, value, upper = log_sum_bounds(d1, [2], 1)
    assert lower == pytest.approx(value, abs=1e-12)
    assert upper == pytest.approx(value, abs=1e-12)


def test_log_sum_bounds_with_zero_cell(zero_cell):
    lower, value, upper = log_sum_bounds(zero_cell, [0, 1], 0)
    assert lower == -math.inf
    assert value == pytest.approx(0.0, abs=1e-12)
    assert upper == pytest.approx(math.log(1.5), abs=1e-12)


def test_critical_sweep(d1):
    points = critical_sweep(d1)
    assert [p.step for p in points] == [0, 1, 2, 3, 4]

    assert points[0].randomized == ()
    assert points[0].eps_eff == pytest.approx(1.09861, abs=1e-4)
    assert points[0].nmil == 0.0

    assert points[1].randomized == (0,)
    assert points[1].eps_c == pytest.approx(1.09861, abs=1e-4)
    assert points[1].nmil == 0.0

    assert points[2].randomized == (0, 1)
    assert points[2].epsilon == pytest.approx(0.36291, abs=1e-4)
    assert points[2].eps_c == pytest.approx(0.09531, abs=1e-5)
    assert points[2].eps_eff == pytest.approx(0.36291, abs=1e-4)
    assert points[2].nmil == pytest.approx(D1_NMIL_X0_X1, abs=1e-4)

    assert points[4].randomized == (0, 1, 2, 3)
    assert points[4].epsilon == 0.0
    assert points[4].eps_c == 0.0
    assert points[4].nmil == pytest.approx(1.0, abs=1e-12)


def test_sweep_steps_match_watchdog(d1):
    for point in critical_sweep(d1)[:-1]:
        assert watchdog_partition(d1, point.epsilon).randomized == point.randomized


def test_lift_rows(d1):
    rows = lift_rows(d1, lift_table(d1))
    assert len(rows) == 8
    assert rows[0][:2] == ("s0", "x0")
    assert rows[4][:2] == ("s1", "x0")


def test_watchdog_matches_ladder_prefix_inside_intervals():
    joint = random_joint(DistributionSpec(15, 20, 1))
    table = lift_table(joint)
    ladder = critical_epsilons(joint, table)
    values = np.array(ladder.values)
    rng = np.random.default_rng(7)
    for eps in rng.uniform(0.0, values[0] * 1.1, size=100):
        # eps lies in [eps_{j+1}, eps_j) for j = number of values above it.
        j = int(np.sum(values > eps))
        randomized = watchdog_partition(joint, eps, table).randomized
        assert set(randomized) == set(ladder.indices[:j])
