"""Construction, validation and random generation of joint distributions p(s, x).

Random joints are drawn with NumPy's PCG64 bit generator so a seed reproduces
the same table on every platform.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .config import SUM_TOL
from .errors import (
    DuplicateLabel,
    IndexOutOfRange,
    NegativeEntry,
    ParseError,
    SumNotOne,
    ZeroMarginal,
)
from .models import DistributionSpec, JointDistribution


def _check_labels(labels: Sequence[str], axis: str) -> tuple[str, ...]:
    labels = tuple(str(label) for label in labels)
    seen: set[str] = set()
    for label in labels:
        if label in seen:
            raise DuplicateLabel(f"duplicate {axis} label: {label!r}")
        seen.add(label)
    return labels


def make_joint(
    probs: Sequence[Sequence[float]] | np.ndarray,
    s_labels: Sequence[str] | None = None,
    x_labels: Sequence[str] | None = None,
) -> JointDistribution:
    """Validate a |S| x |X| table and wrap it with its marginals.

    Args:
        probs: Table of p(s, x), rows indexed by s
        s_labels: Sensitive-symbol labels (default ``s0, s1, ...``)
        x_labels: Useful-symbol labels (default ``x0, x1, ...``)

    Returns:
        Validated JointDistribution

    Raises:
        ParseError: Table is not a rectangular numeric matrix of at least 1x2
        NegativeEntry: Some p(s, x) < 0
        SumNotOne: |sum - 1| > 1e-9
        ZeroMarginal: Some row or column has zero mass
        DuplicateLabel: A label repeats on one axis
    """
    try:
        table = np.array(probs, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"probability table is not numeric: {e}") from e

    if table.ndim != 2:
        raise ParseError(f"probability table must be 2-D (got {table.ndim}-D)")
    n_s, n_x = table.shape
    if n_s < 1 or n_x < 2:
        raise ParseError(f"probability table must be at least 1x2 (got {n_s}x{n_x})")
    if not np.all(np.isfinite(table)):
        raise ParseError("probability table holds non-finite entries")

    s_labels = _check_labels(
        s_labels if s_labels is not None else [f"s{i}" for i in range(n_s)], "s"
    )
    x_labels = _check_labels(
        x_labels if x_labels is not None else [f"x{j}" for j in range(n_x)], "x"
    )
    if len(s_labels) != n_s or len(x_labels) != n_x:
        raise ParseError(
            f"label counts ({len(s_labels)}, {len(x_labels)}) do not match "
            f"table shape ({n_s}, {n_x})"
        )

    if np.any(table < 0):
        s, x = np.argwhere(table < 0)[0]
        raise NegativeEntry(
            f"p({s_labels[s]}, {x_labels[x]}) = {table[s, x]} is negative"
        )
    total = table.sum()
    if abs(total - 1.0) > SUM_TOL:
        raise SumNotOne(f"table sums to {total:.17g}, not 1")

    p_s = table.sum(axis=1)
    p_x = table.sum(axis=0)
    if np.any(p_s == 0):
        raise ZeroMarginal(f"p({s_labels[int(np.argmin(p_s))]}) = 0")
    if np.any(p_x == 0):
        raise ZeroMarginal(f"p({x_labels[int(np.argmin(p_x))]}) = 0")

    return JointDistribution(
        s_labels=s_labels, x_labels=x_labels, probs=table, p_s=p_s, p_x=p_x
    )


def random_joint(spec: DistributionSpec) -> JointDistribution:
    """Draw a strictly positive joint: i.i.d. uniform cells, normalized.

    The draw is a pure function of ``spec``.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    # 1 - U maps [0, 1) onto (0, 1], so no cell is ever zero.
    cells = 1.0 - rng.random((spec.n_s, spec.n_x))
    return make_joint(cells / cells.sum())


def trial_seed(master_seed: int, trial: int) -> int:
    """Derive the 64-bit seed of one trial from the master seed.

    Uses ``SeedSequence`` spawn keys, so the value depends only on
    ``(master_seed, trial)`` and not on execution order.
    """
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def conditional_x_given_s(joint: JointDistribution, s: int) -> np.ndarray:
    """Return p(x | s) as a vector over X."""
    if not 0 <= s < joint.n_s:
        raise IndexOutOfRange(f"s index {s} outside 0..{joint.n_s - 1}")
    return joint.probs[s] / joint.p_s[s]


def conditional_s_given_x(joint: JointDistribution, x: int) -> np.ndarray:
    """Return p(s | x) as a vector over S."""
    if not 0 <= x < joint.n_x:
        raise IndexOutOfRange(f"x index {x} outside 0..{joint.n_x - 1}")
    return joint.probs[:, x] / joint.p_x[x]


def product_joint(p_s: Sequence[float], p_x: Sequence[float]) -> JointDistribution:
    """Independent joint p(s)p(x)."""
    return make_joint(np.outer(np.asarray(p_s, dtype=float), np.asarray(p_x, dtype=float)))
