"""Entropy, mutual information and normalized mutual information loss (nats)."""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np
from scipy.special import entr, rel_entr

from .config import SUM_TOL
from .errors import DegenerateX, IndexOutOfRange, InvalidDistribution, InvalidParameter
from .models import JointDistribution, Mechanism, Partition, UtilityReport


def entropy(dist: Iterable[float] | np.ndarray) -> float:
    """Shannon entropy -sum p ln p with 0 ln 0 = 0.

    Raises:
        InvalidDistribution: Negative or non-finite entries, or sum != 1
    """
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidDistribution("distribution must be a non-empty vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidDistribution(f"distribution has negative or non-finite entries: {p}")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise InvalidDistribution(f"distribution sums to {p.sum():.17g}, not 1")
    return float(entr(p).sum())


def mutual_information(joint: JointDistribution, mech: Mechanism) -> float:
    """I(X; Y) computed from the explicit channel p(y|x)."""
    channel = mech.channel
    if channel.shape != (joint.n_x, joint.n_x):
        raise InvalidParameter(
            f"channel shape {channel.shape} does not match |X| = {joint.n_x}"
        )
    p_xy = joint.p_x[:, None] * channel
    p_y = p_xy.sum(axis=0)
    return float(rel_entr(p_xy, np.outer(joint.p_x, p_y)).sum())


def _indices(joint: JointDistribution, subset: Iterable[int]) -> np.ndarray:
    indices = np.unique(np.asarray(list(subset), dtype=int))
    if indices.size and (indices[0] < 0 or indices[-1] >= joint.n_x):
        raise IndexOutOfRange(f"subset {indices.tolist()} outside 0..{joint.n_x - 1}")
    return indices


def randomized_loss(joint: JointDistribution, subset: Iterable[int]) -> tuple[float, float]:
    """Return (p(Q), H(q)) for the renormalized distribution q on Q.

    Both are 0 for an empty subset; H(q) is 0 for a singleton.
    """
    indices = _indices(joint, subset)
    if indices.size == 0:
        return 0.0, 0.0
    p_q = float(joint.p_x[indices].sum())
    if indices.size == 1:
        return p_q, 0.0
    return p_q, float(entr(joint.p_x[indices] / p_q).sum())


def nmil(joint: JointDistribution, subset: Iterable[int]) -> float:
    """Normalized mutual information loss p(Q) H(q) / H(X) of randomizing Q.

    Raises:
        DegenerateX: H(X) = 0
    """
    h_x = entropy(joint.p_x)
    if h_x == 0:
        raise DegenerateX("H(X) = 0, so NMIL is undefined")
    p_q, h_q = randomized_loss(joint, subset)
    return float(np.clip(p_q * h_q / h_x, 0.0, 1.0))


def utility_report(joint: JointDistribution, partition: Partition) -> UtilityReport:
    """Closed-form utility of an X-invariant mechanism built on ``partition``.

    The value does not depend on R(y).
    """
    h_x = entropy(joint.p_x)
    p_qc, h_q = randomized_loss(joint, partition.randomized)
    return UtilityReport(
        h_x=h_x,
        mi_xy=h_x - p_qc * h_q,
        p_qc=p_qc,
        h_q=h_q,
        nmil=nmil(joint, partition.randomized),
    )
