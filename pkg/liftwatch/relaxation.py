"""The (eps, delta)-log-lift relaxation: breach probabilities, greedy partitioning
and the exhaustive oracle.

Symbols are moved from the randomized set back to the published set while the
total breach probability stays within delta and no abs-log-lift exceeds
eps_bar.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import entr, xlogy

from .config import LIFT_TOL, load_settings
from .errors import AlphabetTooLarge, DeltaNotAboveDelta0, Infeasible, InvariantViolation
from .lift import (
    as_subset,
    check_partition,
    epsilon_eff,
    epsilon_of_subset,
    lift_table,
    log_lift,
    subset_lifts,
    watchdog_partition,
)
from .models import (
    GreedyMove,
    JointDistribution,
    LiftTable,
    MoveReason,
    OracleComparison,
    Partition,
    PrivacyReport,
    RelaxationParams,
    ReportMethod,
)
from .utility import entropy, nmil, utility_report

logger = logging.getLogger(__name__)

# Masks evaluated per vectorized brute-force block.
_BLOCK = 1 << 13


def delta_of_subset(joint: JointDistribution, eps: float, subset: Iterable[int]) -> float:
    """Probability mass p(s, Q) over the s whose |i(s, Q)| exceeds eps."""
    indices = as_subset(joint, subset)
    lifts = subset_lifts(joint, indices)
    p_sq = joint.probs[:, indices].sum(axis=1)
    return float(p_sq[np.abs(lifts) > eps + LIFT_TOL].sum())


def _singleton_deltas(joint: JointDistribution, eps: float, table: LiftTable) -> np.ndarray:
    """Delta(eps, {x}) for every x; identical to delta_of_subset on singletons."""
    breach = np.abs(table.i_sx) > eps + LIFT_TOL
    return np.where(breach, joint.probs, 0.0).sum(axis=0)


def delta_total(joint: JointDistribution, eps: float, partition: Partition) -> float:
    """Sum of per-symbol breach mass on the kept side plus the randomized block's."""
    check_partition(joint, partition)
    total = sum(delta_of_subset(joint, eps, [x]) for x in partition.kept)
    if partition.randomized:
        total += delta_of_subset(joint, eps, partition.randomized)
    return float(total)


def delta0(joint: JointDistribution, eps: float) -> float:
    """Breach probability of the pure watchdog partition.

    Kept terms vanish since every kept symbol has eps(x) <= eps, so this is the
    randomized block's breach mass.
    """
    return delta_total(joint, eps, watchdog_partition(joint, eps))


def refine_candidates(joint: JointDistribution, params: RelaxationParams) -> list[int]:
    """Randomized symbols that could be published without breaking delta or eps_bar.

    Drops x with Delta(eps, {x}) > delta or eps(x) > eps_bar, then sorts by
    Delta(eps, {x}) ascending with ties by index.
    """
    table = lift_table(joint)
    randomized = watchdog_partition(joint, params.eps, table).randomized
    deltas = _singleton_deltas(joint, params.eps, table)
    candidates = [
        x
        for x in randomized
        if deltas[x] <= params.delta + LIFT_TOL and table.eps_x[x] <= params.eps_bar + LIFT_TOL
    ]
    return sorted(candidates, key=lambda x: (deltas[x], x))


def privacy_report(
    joint: JointDistribution,
    partition: Partition,
    eps: float,
    delta: float = 0.0,
    eps_bar: float = math.inf,
    method: ReportMethod = ReportMethod.GIVEN,
    trace: Sequence[GreedyMove] = (),
) -> PrivacyReport:
    """Evaluate privacy and utility of an arbitrary partition."""
    check_partition(joint, partition)
    d_total = delta_total(joint, eps, partition)
    return PrivacyReport(
        partition=partition,
        eps=eps,
        delta=delta,
        eps_bar=eps_bar,
        eps_eff=epsilon_eff(joint, partition),
        eps_c=epsilon_of_subset(joint, partition.randomized) if partition.randomized else 0.0,
        delta_total=d_total,
        delta0=delta0(joint, eps),
        utility=utility_report(joint, partition),
        feasible=d_total <= delta + LIFT_TOL,
        method=method,
        x_labels=joint.x_labels,
        trace=tuple(trace),
    )


def greedy_partition(joint: JointDistribution, params: RelaxationParams) -> PrivacyReport:
    """Greedy (eps, delta)-partitioning.

    Starts from the watchdog partition and walks the refined candidates in
    order, publishing a candidate when that strictly lowers NMIL, keeps the
    total breach probability within delta and keeps eps_eff within eps_bar.

    Raises:
        DeltaNotAboveDelta0: delta <= delta0
        Infeasible: The watchdog partition already exceeds eps_bar
        DegenerateX: H(X) = 0
    """
    floor = delta0(joint, params.eps)
    if params.delta <= floor:
        raise DeltaNotAboveDelta0(params.delta, floor)

    table = lift_table(joint)
    partition = watchdog_partition(joint, params.eps, table)
    start_eff = epsilon_eff(joint, partition, table)
    if start_eff > params.eps_bar + LIFT_TOL:
        raise Infeasible(
            f"watchdog partition at eps={params.eps:g} has eps_eff={start_eff:.12g} "
            f"> eps_bar={params.eps_bar:g}"
        )

    current_nmil = nmil(joint, partition.randomized)
    trace: list[GreedyMove] = []
    for x in refine_candidates(joint, params):
        trial = Partition(
            kept=partition.kept + (x,),
            randomized=tuple(i for i in partition.randomized if i != x),
        )
        trial_nmil = nmil(joint, trial.randomized)
        trial_delta = delta_total(joint, params.eps, trial)
        trial_eff = epsilon_eff(joint, trial, table)

        if not trial_nmil < current_nmil - LIFT_TOL:
            reason = MoveReason.NO_NMIL_GAIN
        elif trial_delta > params.delta + LIFT_TOL:
            reason = MoveReason.DELTA_EXCEEDED
        elif trial_eff > params.eps_bar + LIFT_TOL:
            reason = MoveReason.EPS_BAR_EXCEEDED
        else:
            reason = MoveReason.ACCEPTED

        accepted = reason == MoveReason.ACCEPTED
        trace.append(
            GreedyMove(
                candidate=x,
                accepted=accepted,
                reason=reason,
                nmil=trial_nmil,
                delta_total=trial_delta,
                eps_eff=trial_eff,
            )
        )
        logger.debug("greedy candidate %s: %s", joint.x_labels[x], reason.value)
        if accepted:
            partition, current_nmil = trial, trial_nmil

    report = privacy_report(
        joint,
        partition,
        params.eps,
        params.delta,
        params.eps_bar,
        method=ReportMethod.GREEDY,
        trace=trace,
    )
    if not report.feasible or report.eps_eff > params.eps_bar + LIFT_TOL:
        raise InvariantViolation(
            f"greedy output breaks its guarantees: delta_total={report.delta_total:.12g}, "
            f"eps_eff={report.eps_eff:.12g}"
        )
    return report


@dataclass(frozen=True)
class _Candidate:
    """Brute-force ranking key: NMIL, then size, then the index tuple."""

    nmil: float
    size: int
    randomized: tuple[int, ...]

    def key(self) -> tuple[float, int, tuple[int, ...]]:
        return (self.nmil, self.size, self.randomized)


def _best_in_block(
    joint: JointDistribution,
    params: RelaxationParams,
    table: LiftTable,
    cap_eps_bar: bool,
    start: int,
    stop: int,
) -> _Candidate | None:
    """Evaluate masks start..stop-1 at once; bit x set means x is randomized."""
    n_x = joint.n_x
    masks = np.arange(start, stop, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n_x)) & 1).astype(bool)
    weights = bits.astype(float)
    sizes = bits.sum(axis=1)

    # Kept side: per-symbol breach mass and eps(x).
    singleton_delta = _singleton_deltas(joint, params.eps, table)
    kept_delta = (~bits).astype(float) @ singleton_delta
    kept_eps = np.where(bits, 0.0, table.eps_x[None, :]).max(axis=1)

    # Randomized block: subset lifts for every mask.
    p_q = weights @ joint.p_x
    p_sq = weights @ joint.probs.T
    with np.errstate(divide="ignore", invalid="ignore"):
        lifts = log_lift(p_sq.T, joint.p_s, p_q).T
    lifts[sizes == 0] = 0.0
    lifts[sizes == n_x] = 0.0
    breach = np.abs(lifts) > params.eps + LIFT_TOL
    block_delta = np.where(breach, p_sq, 0.0).sum(axis=1)
    block_eps = np.abs(lifts).max(axis=1)

    feasible = kept_delta + block_delta <= params.delta + LIFT_TOL
    if cap_eps_bar:
        feasible &= np.maximum(kept_eps, block_eps) <= params.eps_bar + LIFT_TOL
    if not feasible.any():
        return None

    h_x = entropy(joint.p_x)
    loss = weights @ entr(joint.p_x) + xlogy(p_q, p_q)
    scores = np.where(sizes <= 1, 0.0, np.clip(loss / h_x, 0.0, 1.0))

    rows = np.flatnonzero(feasible)
    rows = rows[scores[rows] == scores[rows].min()]
    rows = rows[sizes[rows] == sizes[rows].min()]
    return min(
        (
            _Candidate(
                nmil=float(scores[row]),
                size=int(sizes[row]),
                randomized=tuple(int(i) for i in np.flatnonzero(bits[row])),
            )
            for row in rows
        ),
        key=_Candidate.key,
    )


def brute_force_partition(
    joint: JointDistribution,
    params: RelaxationParams,
    cap_eps_bar: bool = True,
    max_alphabet: int | None = None,
    jobs: int = 1,
) -> PrivacyReport:
    """Exhaustive search for the feasible partition with the smallest NMIL.

    Enumerates all 2^|X| bi-partitions. A partition is feasible when its
    delta_total is within delta and, unless ``cap_eps_bar`` is False, its
    eps_eff is within eps_bar. Ties go to fewer randomized symbols, then to
    the lexicographically smallest randomized index tuple.

    Args:
        joint: Joint distribution p(s, x)
        params: eps, delta and eps_bar
        cap_eps_bar: Apply the eps_bar cap to the feasible family
        max_alphabet: Largest |X| accepted (default from settings, 20)
        jobs: Worker threads; the result does not depend on this

    Raises:
        AlphabetTooLarge: |X| above ``max_alphabet``
        InvariantViolation: No partition was feasible, which full randomization rules out
    """
    settings = load_settings()
    cap = settings.brute_force_max_alphabet if max_alphabet is None else max_alphabet
    n_x = joint.n_x
    if n_x > cap:
        raise AlphabetTooLarge(f"|X| = {n_x} exceeds the brute-force cap of {cap}")
    if n_x > settings.brute_force_warn_alphabet:
        logger.warning("brute force over |X| = %d evaluates 2^%d = %d partitions", n_x, n_x, 2**n_x)

    table = lift_table(joint)
    blocks = [(start, min(start + _BLOCK, 2**n_x)) for start in range(0, 2**n_x, _BLOCK)]

    def run(block: tuple[int, int]) -> _Candidate | None:
        return _best_in_block(joint, params, table, cap_eps_bar, *block)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(block) for block in blocks]

    found = [c for c in results if c is not None]
    if not found:
        # Randomizing all of X has delta_total = eps_eff = 0.
        raise InvariantViolation("brute force found no feasible partition")
    best = min(found, key=_Candidate.key)
    return privacy_report(
        joint,
        Partition.from_randomized(n_x, best.randomized),
        params.eps,
        params.delta,
        params.eps_bar,
        method=ReportMethod.BRUTEFORCE,
    )


def summarize_oracle_gaps(
    pairs: Sequence[tuple[PrivacyReport, PrivacyReport]],
) -> OracleComparison:
    """Summarize (greedy, oracle) report pairs; the gap is greedy NMIL minus oracle NMIL."""
    gaps = [greedy.nmil - oracle.nmil for greedy, oracle in pairs]
    return OracleComparison(
        instances=len(pairs),
        greedy_feasible=sum(
            int(greedy.feasible and greedy.eps_eff <= greedy.eps_bar + LIFT_TOL)
            for greedy, _ in pairs
        ),
        oracle_dominates=sum(
            int(oracle.nmil <= greedy.nmil + LIFT_TOL) for greedy, oracle in pairs
        ),
        mean_gap=float(np.mean(gaps)) if gaps else 0.0,
        max_gap=float(np.max(gaps)) if gaps else 0.0,
    )


def compare_greedy_to_oracle(
    joints: Sequence[JointDistribution], params: RelaxationParams
) -> OracleComparison:
    """Run both partitioners on every joint and summarize the NMIL gap."""
    pairs = [
        (greedy_partition(joint, params), brute_force_partition(joint, params)) for joint in joints
    ]
    return summarize_oracle_gaps(pairs)
