"""Release channels p(y|x) and the realized privacy they achieve.

A mechanism publishes kept symbols unchanged and maps every randomized symbol
to a shared output distribution R(y) supported on the randomized set. Any such
R attains the smallest possible worst-case abs-log-lift on the randomized
block, eps^c = eps(randomized set).
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import LIFT_TOL, ROW_TOL, SUM_TOL
from .errors import (
    InvalidParameter,
    InvalidR,
    InvariantViolation,
    SingletonOrEmptyRandomizedSet,
)
from .lift import (
    as_subset,
    check_partition,
    epsilon_of_subset,
    log_lift,
    watchdog_partition,
)
from .models import JointDistribution, Mechanism, MechanismMode, OutputStats, Partition

logger = logging.getLogger(__name__)


def _resolve_r(
    k: int, mode: MechanismMode, r: Sequence[float] | np.ndarray | None
) -> np.ndarray:
    if k == 0:
        return np.zeros(0)
    if mode == MechanismMode.UNIFORM:
        return np.full(k, 1.0 / k)
    if mode == MechanismMode.MERGE:
        # Merge target: lowest-index randomized symbol.
        merged = np.zeros(k)
        merged[0] = 1.0
        return merged

    if r is None:
        raise InvalidR("custom mode needs an explicit R(y)")
    values = np.asarray(r, dtype=float)
    if values.shape != (k,):
        raise InvalidR(f"R(y) must have {k} entries, one per randomized symbol (got {values.shape})")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise InvalidR(f"R(y) has negative or non-finite entries: {values}")
    if abs(values.sum() - 1.0) > SUM_TOL:
        raise InvalidR(f"R(y) sums to {values.sum():.17g}, not 1")
    return values / values.sum()


def block_channel(n_x: int, randomized: Sequence[int], block: np.ndarray) -> np.ndarray:
    """Identity channel with the randomized rows/columns replaced by ``block``."""
    channel = np.eye(n_x)
    if len(randomized):
        idx = np.asarray(randomized, dtype=int)
        channel[idx, :] = 0.0
        channel[np.ix_(idx, idx)] = block
    return channel


def build_mechanism(
    joint: JointDistribution,
    partition: Partition,
    mode: MechanismMode | str = MechanismMode.UNIFORM,
    r: Sequence[float] | np.ndarray | None = None,
) -> Mechanism:
    """Build the X-invariant release channel for a partition.

    Args:
        joint: Joint distribution p(s, x)
        partition: Kept / randomized split of X
        mode: ``uniform``, ``merge`` or ``custom``
        r: R(y) over the randomized set, in ascending index order (custom only)

    Returns:
        Mechanism with one-hot kept rows and identical randomized rows

    Raises:
        InvalidR: Custom R is not a distribution on the randomized set
    """
    check_partition(joint, partition)
    mode = MechanismMode(mode)
    k = len(partition.randomized)
    # A singleton randomized set gets R = (1,), i.e. the identity on it.
    r_values = _resolve_r(k, mode, r)
    block = np.tile(r_values, (k, 1))
    channel = block_channel(joint.n_x, partition.randomized, block)
    if np.any(np.abs(channel.sum(axis=1) - 1.0) > ROW_TOL):
        raise InvariantViolation("constructed channel has a row that does not sum to 1")
    return Mechanism(
        channel=channel,
        partition=partition,
        r=r_values,
        mode=mode,
        labels=joint.x_labels,
    )


def _realized_lifts(
    joint: JointDistribution, channel: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (p_y, reachable indices, i(s, y) over reachable y)."""
    p_sy = joint.probs @ channel
    p_y = joint.p_x @ channel
    reachable = np.flatnonzero(p_y > 0)
    i_sy = log_lift(p_sy[:, reachable], joint.p_s, p_y[reachable])
    return p_y, reachable, i_sy


def _max_abs_over(
    i_sy: np.ndarray, reachable: np.ndarray, outputs: Iterable[int]
) -> float:
    columns = np.isin(reachable, np.asarray(list(outputs), dtype=int))
    if not columns.any():
        return 0.0
    return float(np.abs(i_sy[:, columns]).max())


def output_stats(joint: JointDistribution, mech: Mechanism) -> OutputStats:
    """Output marginal p(y) and realized lifts i(s, y) under S -> X -> Y.

    Outputs with p(y) = 0 are excluded from every maximum.
    """
    if mech.channel.shape != (joint.n_x, joint.n_x):
        raise InvalidParameter(
            f"channel shape {mech.channel.shape} does not match |X| = {joint.n_x}"
        )
    p_y, reachable, i_sy = _realized_lifts(joint, mech.channel)
    return OutputStats(
        p_y=p_y,
        reachable=tuple(int(y) for y in reachable),
        i_sy=i_sy,
        max_abs_lift_randomized=_max_abs_over(i_sy, reachable, mech.partition.randomized),
        max_abs_lift=float(np.abs(i_sy).max()) if reachable.size else 0.0,
    )


def attainable(joint: JointDistribution, subset: Iterable[int], eps_prime: float) -> bool:
    """Whether some channel on ``subset`` keeps every |i(s, y)| <= eps_prime."""
    if eps_prime < 0:
        raise InvalidParameter(f"eps_prime must be >= 0 (got {eps_prime})")
    return epsilon_of_subset(joint, subset) <= eps_prime + LIFT_TOL


def epsilon_c(joint: JointDistribution, eps: float) -> float:
    """Smallest achievable worst-case abs-log-lift on the watchdog's randomized set.

    Returns 0 when nothing needs randomizing.
    """
    if eps < 0:
        raise InvalidParameter(f"eps must be >= 0 (got {eps})")
    randomized = watchdog_partition(joint, eps).randomized
    if not randomized:
        return 0.0
    return epsilon_of_subset(joint, randomized)


def _random_block_lift(
    joint: JointDistribution, randomized: tuple[int, ...], seed_seq: np.random.SeedSequence
) -> float:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    k = len(randomized)
    block = rng.dirichlet(np.ones(k), size=k)
    channel = block_channel(joint.n_x, randomized, block)
    _, reachable, i_sy = _realized_lifts(joint, channel)
    return _max_abs_over(i_sy, reachable, randomized)


def falsify_optimality(
    joint: JointDistribution,
    eps: float,
    n_channels: int,
    seed: int,
    jobs: int = 1,
    include_invariant: bool = False,
) -> float:
    """Search random channels on the randomized block for a lift below eps^c.

    Each randomized row is drawn flat on the simplex over the randomized set.
    The smallest realized worst-case abs-log-lift found is returned; it should
    never fall below ``epsilon_c(joint, eps) - 1e-9``. This is empirical
    evidence for optimality, not a proof.

    Args:
        joint: Joint distribution p(s, x)
        eps: Watchdog threshold defining the randomized set
        n_channels: Number of random channels to draw
        seed: Master seed; trial t uses the t-th spawned child sequence
        jobs: Worker threads
        include_invariant: Also evaluate the uniform X-invariant channel

    Raises:
        SingletonOrEmptyRandomizedSet: Fewer than two randomized symbols
    """
    if n_channels < 1:
        raise InvalidParameter(f"n_channels must be >= 1 (got {n_channels})")
    randomized = watchdog_partition(joint, eps).randomized
    if len(randomized) < 2:
        raise SingletonOrEmptyRandomizedSet(
            f"randomized set at eps={eps} has {len(randomized)} symbol(s); need >= 2"
        )

    children = np.random.SeedSequence(seed).spawn(n_channels)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            lifts = list(pool.map(lambda c: _random_block_lift(joint, randomized, c), children))
    else:
        lifts = [_random_block_lift(joint, randomized, c) for c in children]

    if include_invariant:
        mech = build_mechanism(joint, Partition.from_randomized(joint.n_x, randomized))
        lifts.append(output_stats(joint, mech).max_abs_lift_randomized)

    best = min(lifts)
    logger.debug(
        "falsification over %d channels: min lift %.12g on %d randomized symbols",
        len(lifts),
        best,
        len(randomized),
    )
    return best


def _simplex_grid(k: int, steps: int) -> Iterable[np.ndarray]:
    """All distributions on k points with masses in multiples of 1/steps."""
    for bars in itertools.combinations(range(steps + k - 1), k - 1):
        edges = (-1,) + bars + (steps + k - 1,)
        yield np.array([edges[i + 1] - edges[i] - 1 for i in range(k)], dtype=float) / steps


def search_feasible_channel(
    joint: JointDistribution,
    subset: Iterable[int],
    eps_prime: float,
    grid_steps: int = 10,
    n_random: int = 200,
    seed: int = 0,
) -> bool:
    """Look for a channel on ``subset`` whose realized lifts stay within eps_prime.

    Tries every X-invariant R on a simplex grid, then ``n_random`` random
    channels. Used to cross-check ``attainable`` on small subsets.
    """
    indices = tuple(int(i) for i in as_subset(joint, subset))
    k = len(indices)
    for r_values in _simplex_grid(k, grid_steps):
        channel = block_channel(joint.n_x, indices, np.tile(r_values, (k, 1)))
        _, reachable, i_sy = _realized_lifts(joint, channel)
        if _max_abs_over(i_sy, reachable, indices) <= eps_prime + LIFT_TOL:
            return True
    for child in np.random.SeedSequence(seed).spawn(n_random):
        if _random_block_lift(joint, indices, child) <= eps_prime + LIFT_TOL:
            return True
    return False


def channel_rows(mech: Mechanism) -> list[tuple[str, str, float]]:
    """Flatten a channel into (x label, y label, probability) rows."""
    return [
        (x_label, y_label, float(mech.channel[x, y]))
        for x, x_label in enumerate(mech.labels)
        for y, y_label in enumerate(mech.labels)
    ]
