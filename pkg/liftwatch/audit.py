"""Property audit over seeded random instances.

Each property is a ``check_<id>`` method on ``PropertyAudit`` returning a
``CheckResult``; ``run_audit`` runs the selected checks on every instance and
counts violations per check and scope.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from .config import LIFT_TOL
from .distributions import random_joint
from .errors import InvalidParameter
from .lift import (
    critical_epsilons,
    critical_sweep,
    epsilon_eff,
    epsilon_of_subset,
    lift_table,
    log_sum_bounds,
    watchdog_partition,
)
from .mechanism import (
    attainable,
    build_mechanism,
    epsilon_c,
    falsify_optimality,
    output_stats,
    search_feasible_channel,
)
from .models import (
    AuditReport,
    CheckResult,
    DistributionSpec,
    JointDistribution,
    MechanismMode,
    PrivacyReport,
    RelaxationParams,
    Violation,
)
from .relaxation import brute_force_partition, delta0, greedy_partition, summarize_oracle_gaps
from .utility import mutual_information, utility_report

logger = logging.getLogger(__name__)

ALL_CHECKS = [
    "achievability",
    "optimality",
    "attainability",
    "utility_closed_form",
    "eps_delta_guarantee",
    "greedy_vs_oracle",
    "chain_nesting",
    "nmil_monotonicity",
    "log_sum_sandwich",
    "r_invariance",
]

# Agreement between independently computed quantities.
AUDIT_TOL = 1e-9

# Salts keep each check's random draws independent of which checks run.
_SALT_PARAMS = 1
_SALT_CUSTOM_R = 2
_SALT_SUBSET = 3
_SALT_ATTAIN = 4

# Largest subset the attainability check searches channels on.
ATTAIN_MAX_SUBSET = 4


@dataclass(frozen=True)
class AuditInstance:
    """One seeded random joint."""

    seed: int
    joint: JointDistribution

    def generator(self, salt: int) -> np.random.Generator:
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=self.seed, spawn_key=(salt,)))
        )

    @property
    def probe_eps(self) -> float:
        """Third critical value (the smallest one when |X| < 3)."""
        values = critical_epsilons(self.joint).values
        return values[min(2, len(values) - 1)]


def relaxation_params(instance: AuditInstance) -> RelaxationParams | None:
    """Draw (eps, delta, eps_bar) that admit a greedy run, or None."""
    rng = instance.generator(_SALT_PARAMS)
    joint = instance.joint
    eps = instance.probe_eps
    floor = delta0(joint, eps)
    delta = floor + rng.uniform(0.01, 0.3)
    if delta >= 1:
        return None
    start = epsilon_eff(joint, watchdog_partition(joint, eps))
    eps_bar = max(start, eps) + rng.uniform(0.05, 2.0)
    return RelaxationParams(eps=eps, delta=delta, eps_bar=eps_bar)


def _random_rs(rng: np.random.Generator, k: int, count: int) -> list[np.ndarray]:
    return [rng.dirichlet(np.ones(k)) for _ in range(count)]


class PropertyAudit:
    """Property checks for the watchdog, mechanism and relaxation operations."""

    def __init__(self, n_channels: int = 200, n_custom_r: int = 10, oracle_max_alphabet: int = 12):
        self.n_channels = n_channels
        self.n_custom_r = n_custom_r
        self.oracle_max_alphabet = oracle_max_alphabet
        self.oracle_pairs: list[tuple[PrivacyReport, PrivacyReport]] = []

    def evaluate(
        self, checks: list[str], instances: list[AuditInstance], progress: bool = False
    ) -> tuple[list[Violation], float]:
        """Run ``checks`` on every instance.

        Returns:
            Tuple of (violations list, fraction of instances passing every check)
        """
        if not instances:
            return [], 1.0

        violation_counts: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
        passed_all = 0

        for instance in tqdm(instances, desc="audit", unit="instance", disable=not progress):
            instance_passed = True
            for check_id in checks:
                check_method = getattr(self, f"check_{check_id}", None)
                if check_method is None:
                    raise InvalidParameter(f"unknown check: {check_id}. Choose from: {ALL_CHECKS}")

                try:
                    result = check_method(instance)
                except Exception as e:
                    # A check that crashes counts as a violation.
                    logger.warning("check %s crashed on seed %d: %s", check_id, instance.seed, e)
                    result = CheckResult.failed(scope="error")

                if not result.passed:
                    instance_passed = False
                    violation_counts[check_id][result.scope or "unknown"] += 1

            if instance_passed:
                passed_all += 1

        violations = [
            Violation(check_id=check_id, scope=scope, count=count)
            for check_id, scopes in violation_counts.items()
            for scope, count in scopes.items()
        ]
        return violations, passed_all / len(instances)

    def check_achievability(self, instance: AuditInstance) -> CheckResult:
        """The uniform X-invariant channel realizes exactly eps^c."""
        joint, eps = instance.joint, instance.probe_eps
        partition = watchdog_partition(joint, eps)
        if not partition.randomized:
            return CheckResult.success()
        realized = output_stats(joint, build_mechanism(joint, partition)).max_abs_lift_randomized
        expected = epsilon_c(joint, eps)
        if realized == expected or abs(realized - expected) <= AUDIT_TOL:
            return CheckResult.success()
        return CheckResult.failed(scope="mismatch")

    def check_optimality(self, instance: AuditInstance) -> CheckResult:
        """No random channel on the randomized block beats eps^c."""
        joint, eps = instance.joint, instance.probe_eps
        if len(watchdog_partition(joint, eps).randomized) < 2:
            return CheckResult.success()
        best = falsify_optimality(joint, eps, self.n_channels, seed=instance.seed)
        if best >= epsilon_c(joint, eps) - AUDIT_TOL:
            return CheckResult.success()
        return CheckResult.failed(scope="strictly_smaller_lift")

    def check_attainability(self, instance: AuditInstance) -> CheckResult:
        """``attainable`` agrees with a channel search on a small random subset.

        eps' is taken just above and just below eps(subset).
        """
        joint = instance.joint
        rng = instance.generator(_SALT_ATTAIN)
        size = int(rng.integers(1, min(ATTAIN_MAX_SUBSET, joint.n_x) + 1))
        subset = [int(x) for x in rng.choice(joint.n_x, size=size, replace=False)]
        eps_q = epsilon_of_subset(joint, subset)
        if not np.isfinite(eps_q):
            return CheckResult.success()
        for eps_prime in (eps_q * 1.05, eps_q * 0.95):
            searched = search_feasible_channel(
                joint, subset, eps_prime, n_random=self.n_channels, seed=instance.seed
            )
            if searched != attainable(joint, subset, eps_prime):
                return CheckResult.failed(scope="found" if searched else "missed")
        return CheckResult.success()

    def check_utility_closed_form(self, instance: AuditInstance) -> CheckResult:
        """I(X; Y) from the channel equals H(X) - p(Q) H(q) for every R."""
        joint = instance.joint
        partition = watchdog_partition(joint, instance.probe_eps)
        closed = utility_report(joint, partition).mi_xy
        mechanisms = [
            build_mechanism(joint, partition, MechanismMode.UNIFORM),
            build_mechanism(joint, partition, MechanismMode.MERGE),
        ]
        k = len(partition.randomized)
        if k:
            rng = instance.generator(_SALT_CUSTOM_R)
            mechanisms += [
                build_mechanism(joint, partition, MechanismMode.CUSTOM, r)
                for r in _random_rs(rng, k, self.n_custom_r)
            ]
        for mech in mechanisms:
            if abs(mutual_information(joint, mech) - closed) > AUDIT_TOL:
                return CheckResult.failed(scope=mech.mode.value)
        return CheckResult.success()

    def check_eps_delta_guarantee(self, instance: AuditInstance) -> CheckResult:
        """The greedy mechanism's realized breach mass and worst lift stay in bounds."""
        params = relaxation_params(instance)
        if params is None:
            return CheckResult.success()
        joint = instance.joint
        report = greedy_partition(joint, params)
        mech = build_mechanism(joint, report.partition)
        stats = output_stats(joint, mech)

        p_sy = (joint.probs @ mech.channel)[:, list(stats.reachable)]
        breach = float(p_sy[np.abs(stats.i_sy) > params.eps + 1e-12].sum())
        if breach > params.delta + AUDIT_TOL:
            return CheckResult.failed(scope="delta")
        if stats.max_abs_lift > params.eps_bar + AUDIT_TOL:
            return CheckResult.failed(scope="eps_bar")
        return CheckResult.success()

    def check_greedy_vs_oracle(self, instance: AuditInstance) -> CheckResult:
        """The exhaustive optimum never has a larger NMIL than greedy."""
        joint = instance.joint
        params = relaxation_params(instance)
        if params is None or joint.n_x > self.oracle_max_alphabet:
            return CheckResult.success()
        greedy = greedy_partition(joint, params)
        oracle = brute_force_partition(joint, params)
        self.oracle_pairs.append((greedy, oracle))
        if oracle.nmil > greedy.nmil + 1e-12:
            return CheckResult.failed(scope="oracle_worse")
        return CheckResult.success()

    def check_chain_nesting(self, instance: AuditInstance) -> CheckResult:
        """Randomized sets shrink as eps grows and match the ladder prefix.

        Evaluated at every critical value and at the midpoint of every
        interval between consecutive distinct values.
        """
        joint = instance.joint
        table = lift_table(joint)
        ladder = critical_epsilons(joint, table)
        values = sorted(set(ladder.values))
        points = sorted(values + [(a + b) / 2 for a, b in zip(values, values[1:])])
        randomized_sets = [set(watchdog_partition(joint, p, table).randomized) for p in points]
        for point, randomized in zip(points, randomized_sets):
            prefix = sum(1 for v in ladder.values if v > point + LIFT_TOL)
            if randomized != set(ladder.indices[:prefix]):
                return CheckResult.failed(scope="not_prefix")
        for smaller, larger in zip(randomized_sets, randomized_sets[1:]):
            if not larger <= smaller:
                return CheckResult.failed(scope="not_nested")
        return CheckResult.success()

    def check_nmil_monotonicity(self, instance: AuditInstance) -> CheckResult:
        """NMIL never decreases along the critical-value sweep."""
        nmils = [point.nmil for point in critical_sweep(instance.joint)]
        if any(b < a - 1e-12 for a, b in zip(nmils, nmils[1:])):
            return CheckResult.failed(scope="decreasing")
        return CheckResult.success()

    def check_log_sum_sandwich(self, instance: AuditInstance) -> CheckResult:
        """i(s, Q) lies between its two convex-combination bounds."""
        joint = instance.joint
        rng = instance.generator(_SALT_SUBSET)
        size = int(rng.integers(1, joint.n_x + 1))
        subset = rng.choice(joint.n_x, size=size, replace=False)
        for s in range(joint.n_s):
            lower, value, upper = log_sum_bounds(joint, subset, s)
            if value < lower - AUDIT_TOL:
                return CheckResult.failed(scope="lower")
            if value > upper + AUDIT_TOL:
                return CheckResult.failed(scope="upper")
        return CheckResult.success()

    def check_r_invariance(self, instance: AuditInstance) -> CheckResult:
        """Realized lift and I(X; Y) do not depend on R."""
        joint = instance.joint
        partition = watchdog_partition(joint, instance.probe_eps)
        k = len(partition.randomized)
        if k < 2:
            return CheckResult.success()
        reference = build_mechanism(joint, partition)
        lift = output_stats(joint, reference).max_abs_lift_randomized
        mi = mutual_information(joint, reference)

        rng = instance.generator(_SALT_CUSTOM_R)
        others = [build_mechanism(joint, partition, MechanismMode.MERGE)] + [
            build_mechanism(joint, partition, MechanismMode.CUSTOM, r)
            for r in _random_rs(rng, k, 3)
        ]
        for mech in others:
            if abs(output_stats(joint, mech).max_abs_lift_randomized - lift) > AUDIT_TOL:
                return CheckResult.failed(scope="lift")
            if abs(mutual_information(joint, mech) - mi) > AUDIT_TOL:
                return CheckResult.failed(scope="mutual_information")
        return CheckResult.success()


def make_instances(n_instances: int, n_s: int, n_x: int, seed: int) -> list[AuditInstance]:
    """Instances with joint seeds ``seed, seed + 1, ...``."""
    return [
        AuditInstance(seed=s, joint=random_joint(DistributionSpec(n_s, n_x, s)))
        for s in range(seed, seed + n_instances)
    ]


def run_audit(
    checks: list[str] | None = None,
    n_instances: int = 200,
    n_s: int = 6,
    n_x: int = 10,
    seed: int = 1,
    n_channels: int = 200,
    progress: bool = False,
) -> AuditReport:
    """Run property checks over seeded random joints.

    Args:
        checks: Check ids (default: all of ``ALL_CHECKS``)
        n_instances: Number of random joints
        n_s: |S| of each joint
        n_x: |X| of each joint
        seed: Seed of the first joint
        n_channels: Random channels per instance for the optimality check
        progress: Show a tqdm progress bar
    """
    if n_instances < 1:
        raise InvalidParameter(f"n_instances must be >= 1 (got {n_instances})")
    checks = list(checks) if checks else list(ALL_CHECKS)
    unknown = [c for c in checks if c not in ALL_CHECKS]
    if unknown:
        raise InvalidParameter(f"unknown check(s): {unknown}. Choose from: {ALL_CHECKS}")

    logger.info("audit: %s over %d instances (|S|=%d, |X|=%d)", checks, n_instances, n_s, n_x)
    audit = PropertyAudit(n_channels=n_channels)
    violations, coverage = audit.evaluate(checks, make_instances(n_instances, n_s, n_x, seed), progress)
    oracle = summarize_oracle_gaps(audit.oracle_pairs) if audit.oracle_pairs else None
    if oracle is not None:
        logger.info(
            "greedy vs oracle on %d instances: mean NMIL gap %.6g, max %.6g",
            oracle.instances,
            oracle.mean_gap,
            oracle.max_gap,
        )
    return AuditReport(
        checks=checks,
        instances=n_instances,
        violations=violations,
        coverage=coverage,
        seed=seed,
        oracle=oracle,
    )
