"""Log-lift tables, subset lifts, critical values and the watchdog partition.

All logarithms are natural (nats). Lifts are extended reals: a zero joint cell
gives -inf, and the corresponding eps(x) is +inf. No operation here produces
NaN.
"""

from __future__ import annotations

import math
from collections.abc import Iterable

import numpy as np

from .config import LIFT_TOL
from .errors import EmptySubset, IndexOutOfRange
from .models import (
    CriticalLadder,
    JointDistribution,
    LadderEntry,
    LiftTable,
    Partition,
    SweepPoint,
)
from .utility import nmil


def log_lift(p_joint: np.ndarray, p_row: np.ndarray, p_col: np.ndarray) -> np.ndarray:
    """ln p(s, c) - ln p(s) - ln p(c), broadcasting rows against columns.

    Zero joint mass gives -inf. Every lift in the package goes through this
    expression so that singleton subsets reproduce the per-pair table bit for
    bit.
    """
    with np.errstate(divide="ignore"):
        return np.log(p_joint) - np.log(p_row)[:, None] - np.log(p_col)[None, :]


def as_subset(joint: JointDistribution, subset: Iterable[int]) -> np.ndarray:
    """Validate a subset of X's indices and return it sorted and de-duplicated."""
    indices = np.unique(np.asarray(list(subset), dtype=int))
    if indices.size == 0:
        raise EmptySubset("subset of X must be non-empty")
    if indices[0] < 0 or indices[-1] >= joint.n_x:
        raise IndexOutOfRange(f"subset {indices.tolist()} outside 0..{joint.n_x - 1}")
    return indices


def check_partition(joint: JointDistribution, partition: Partition) -> None:
    """Raise IndexOutOfRange unless the partition splits X's alphabet exactly."""
    kept, randomized = set(partition.kept), set(partition.randomized)
    if kept & randomized or kept | randomized != set(range(joint.n_x)):
        raise IndexOutOfRange(
            f"partition {partition} does not split 0..{joint.n_x - 1} into two disjoint sets"
        )


def lift_table(joint: JointDistribution) -> LiftTable:
    """Compute i(s, x) for every pair and eps(x) = max_s |i(s, x)|."""
    i_sx = log_lift(joint.probs, joint.p_s, joint.p_x)
    return LiftTable(i_sx=i_sx, eps_x=np.abs(i_sx).max(axis=0))


def subset_lifts(joint: JointDistribution, subset: Iterable[int]) -> np.ndarray:
    """i(s, Q) = ln(p(Q|s) / p(Q)) for every s, as a vector over S."""
    indices = as_subset(joint, subset)
    if indices.size == joint.n_x:
        # p(X|s) = p(X) = 1.
        return np.zeros(joint.n_s)
    p_sq = joint.probs[:, indices].sum(axis=1)
    p_q = joint.p_x[indices].sum()
    return log_lift(p_sq[:, None], joint.p_s, np.array([p_q]))[:, 0]


def subset_lift(joint: JointDistribution, subset: Iterable[int], s: int) -> float:
    """i(s, Q) for one sensitive symbol."""
    if not 0 <= s < joint.n_s:
        raise IndexOutOfRange(f"s index {s} outside 0..{joint.n_s - 1}")
    return float(subset_lifts(joint, subset)[s])


def epsilon_of_subset(joint: JointDistribution, subset: Iterable[int]) -> float:
    """eps(Q) = max_s |i(s, Q)|."""
    return float(np.abs(subset_lifts(joint, subset)).max())


def watchdog_partition(
    joint: JointDistribution, eps: float, table: LiftTable | None = None
) -> Partition:
    """Keep symbols with eps(x) <= eps; randomize the rest."""
    if table is None:
        table = lift_table(joint)
    kept = np.flatnonzero(table.eps_x <= eps + LIFT_TOL)
    randomized = np.flatnonzero(~(table.eps_x <= eps + LIFT_TOL))
    return Partition(kept=tuple(kept), randomized=tuple(randomized))


def critical_epsilons(
    joint: JointDistribution, table: LiftTable | None = None
) -> CriticalLadder:
    """Sort X by non-increasing eps(x); ties keep ascending index order."""
    if table is None:
        table = lift_table(joint)
    order = np.argsort(-table.eps_x, kind="stable")
    return CriticalLadder(
        entries=tuple(LadderEntry(int(x), float(table.eps_x[x])) for x in order)
    )


def epsilon_eff(
    joint: JointDistribution, partition: Partition, table: LiftTable | None = None
) -> float:
    """max(max_{x kept} eps(x), eps(randomized)), with empty terms read as 0."""
    check_partition(joint, partition)
    if table is None:
        table = lift_table(joint)
    kept_max = float(table.eps_x[list(partition.kept)].max()) if partition.kept else 0.0
    randomized_eps = (
        epsilon_of_subset(joint, partition.randomized) if partition.randomized else 0.0
    )
    return max(kept_max, randomized_eps)


def log_sum_bounds(
    joint: JointDistribution, subset: Iterable[int], s: int
) -> tuple[float, float, float]:
    """Convex-combination bounds around i(s, Q) from the log-sum inequality.

    Returns:
        Tuple of (lower, i(s, Q), upper) where lower averages i(s, x) over Q
        with weights p(x)/p(Q) and upper with weights p(x|s)/p(Q|s)
    """
    indices = as_subset(joint, subset)
    value = subset_lift(joint, indices, s)
    lifts = lift_table(joint).i_sx[s, indices]

    p_x = joint.p_x[indices]
    lower = _weighted_mean(p_x / p_x.sum(), lifts)

    p_xs = joint.probs[s, indices]
    if p_xs.sum() == 0:
        upper = -math.inf
    else:
        upper = _weighted_mean(p_xs / p_xs.sum(), lifts)
    return lower, value, upper


def _weighted_mean(weights: np.ndarray, values: np.ndarray) -> float:
    # Zero-weight terms are dropped so 0 * -inf never occurs.
    mask = weights > 0
    return float(np.dot(weights[mask], values[mask]))


def lift_rows(joint: JointDistribution, table: LiftTable) -> list[tuple[str, str, float]]:
    """Flatten a lift table into (s label, x label, lift) rows."""
    return [
        (s_label, x_label, float(table.i_sx[s, x]))
        for s, s_label in enumerate(joint.s_labels)
        for x, x_label in enumerate(joint.x_labels)
    ]


def critical_sweep(joint: JointDistribution) -> list[SweepPoint]:
    """Privacy/utility tradeoff at each step of the critical-value ladder.

    Step j randomizes the first j ladder symbols, which is the watchdog
    partition for any eps in [eps_{j+1}, eps_j). Each point reports the
    smallest such eps (eps_{j+1}, with eps_{|X|+1} = 0), which is also the
    largest eps(x) left on the kept side. Step 0 randomizes nothing.
    """
    table = lift_table(joint)
    ladder = critical_epsilons(joint, table)
    values = ladder.values + [0.0]
    points = []
    for step in range(joint.n_x + 1):
        randomized = tuple(sorted(ladder.indices[:step]))
        eps_c = epsilon_of_subset(joint, randomized) if randomized else 0.0
        points.append(
            SweepPoint(
                step=step,
                epsilon=values[step],
                randomized=randomized,
                eps_c=eps_c,
                eps_eff=max(values[step], eps_c),
                nmil=nmil(joint, randomized),
            )
        )
    return points
