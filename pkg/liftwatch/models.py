"""Data models for liftwatch."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .errors import InvalidParameter

SIGNIFICANT_DIGITS = 12


def format_number(value: float) -> float | str:
    """Round to 12 significant digits for diffable output.

    Infinities become the strings ``"inf"`` / ``"-inf"`` so the result stays
    valid JSON.
    """
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


class MechanismMode(str, Enum):
    """How R(y) is chosen for the randomized block."""

    UNIFORM = "uniform"
    MERGE = "merge"
    CUSTOM = "custom"


class MoveReason(str, Enum):
    """Outcome of one greedy candidate move."""

    ACCEPTED = "accepted"
    NO_NMIL_GAIN = "no_nmil_gain"
    DELTA_EXCEEDED = "delta_exceeded"
    EPS_BAR_EXCEEDED = "eps_bar_exceeded"


class ReportMethod(str, Enum):
    """Which procedure produced a partition."""

    GIVEN = "given"
    WATCHDOG = "watchdog"
    GREEDY = "greedy"
    BRUTEFORCE = "bruteforce"


class Metric(str, Enum):
    """Per-trial quantities recorded by the Monte Carlo harness."""

    MAX_LIFT_BEFORE = "max_lift_before"
    EPS_C_AFTER = "eps_c_after"
    NMIL = "nmil"


@dataclass(frozen=True)
class JointDistribution:
    """A validated joint table p(s, x) with cached marginals.

    Build instances through ``distributions.make_joint``; the constructor
    itself does not validate.
    """

    s_labels: tuple[str, ...]
    x_labels: tuple[str, ...]
    probs: np.ndarray
    p_s: np.ndarray
    p_x: np.ndarray

    def __post_init__(self) -> None:
        for name in ("probs", "p_s", "p_x"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_s(self) -> int:
        return len(self.s_labels)

    @property
    def n_x(self) -> int:
        return len(self.x_labels)

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict (full precision)."""
        return {
            "s_labels": list(self.s_labels),
            "x_labels": list(self.x_labels),
            "probs": [[float(v) for v in row] for row in self.probs],
        }


@dataclass(frozen=True)
class DistributionSpec:
    """Parameters for generating a random joint distribution."""

    n_s: int
    n_x: int
    seed: int

    def __post_init__(self) -> None:
        if self.n_s < 1:
            raise InvalidParameter(f"n_s must be >= 1 (got {self.n_s})")
        if self.n_x < 2:
            raise InvalidParameter(f"n_x must be >= 2 (got {self.n_x})")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameter(f"seed must be a 64-bit unsigned integer (got {self.seed})")


@dataclass(frozen=True)
class LiftTable:
    """Per-pair log-lift i(s, x) in nats and per-symbol maxima eps(x)."""

    i_sx: np.ndarray
    eps_x: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "i_sx", _frozen(self.i_sx))
        object.__setattr__(self, "eps_x", _frozen(self.eps_x))


@dataclass(frozen=True)
class Partition:
    """Ordered bi-partition of X's alphabet into kept and randomized symbols."""

    kept: tuple[int, ...]
    randomized: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kept", tuple(sorted(int(i) for i in self.kept)))
        object.__setattr__(
            self, "randomized", tuple(sorted(int(i) for i in self.randomized))
        )

    @classmethod
    def from_randomized(cls, n_x: int, randomized: Any) -> Partition:
        """Build the partition whose randomized set is ``randomized``."""
        chosen = {int(i) for i in randomized}
        return cls(
            kept=tuple(i for i in range(n_x) if i not in chosen),
            randomized=tuple(sorted(chosen)),
        )

    def to_dict(self, x_labels: tuple[str, ...]) -> dict[str, Any]:
        return {
            "kept": [x_labels[i] for i in self.kept],
            "randomized": [x_labels[i] for i in self.randomized],
        }


@dataclass(frozen=True)
class LadderEntry:
    """One critical value: symbol index and its eps(x)."""

    index: int
    value: float


@dataclass(frozen=True)
class CriticalLadder:
    """Symbols sorted by non-increasing eps(x), ties by ascending index."""

    entries: tuple[LadderEntry, ...]

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.entries]

    @property
    def indices(self) -> list[int]:
        return [e.index for e in self.entries]

    def to_dict(self, x_labels: tuple[str, ...]) -> list[dict[str, Any]]:
        return [
            {"x": x_labels[e.index], "epsilon": format_number(e.value)}
            for e in self.entries
        ]


@dataclass(frozen=True)
class SweepPoint:
    """Privacy and utility at one step of the critical-value ladder."""

    step: int
    epsilon: float
    randomized: tuple[int, ...]
    eps_c: float
    eps_eff: float
    nmil: float

    def to_dict(self, x_labels: tuple[str, ...]) -> dict[str, Any]:
        return {
            "step": self.step,
            "epsilon": format_number(self.epsilon),
            "randomized": [x_labels[i] for i in self.randomized],
            "eps_c": format_number(self.eps_c),
            "eps_eff": format_number(self.eps_eff),
            "nmil": format_number(self.nmil),
        }


@dataclass(frozen=True)
class Mechanism:
    """A release channel p(y|x) with Y's alphabet equal to X's."""

    channel: np.ndarray
    partition: Partition
    r: np.ndarray
    mode: MechanismMode
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "channel", _frozen(self.channel))
        object.__setattr__(self, "r", _frozen(self.r))

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "labels": list(self.labels),
            "partition": self.partition.to_dict(self.labels),
            "r": {
                self.labels[x]: format_number(p)
                for x, p in zip(self.partition.randomized, self.r)
            },
            "channel": [[format_number(v) for v in row] for row in self.channel],
        }


@dataclass(frozen=True)
class OutputStats:
    """Output marginal and realized lifts i(s, y) of a mechanism.

    ``i_sy`` has one column per entry of ``reachable`` (outputs with p(y) > 0).
    """

    p_y: np.ndarray
    reachable: tuple[int, ...]
    i_sy: np.ndarray
    max_abs_lift_randomized: float
    max_abs_lift: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_y", _frozen(self.p_y))
        object.__setattr__(self, "i_sy", _frozen(self.i_sy))


@dataclass(frozen=True)
class UtilityReport:
    """Utility of releasing Y under a bi-partition."""

    h_x: float
    mi_xy: float
    p_qc: float
    h_q: float
    nmil: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "h_x": format_number(self.h_x),
            "mi_xy": format_number(self.mi_xy),
            "p_qc": format_number(self.p_qc),
            "h_q": format_number(self.h_q),
            "nmil": format_number(self.nmil),
        }


@dataclass(frozen=True)
class RelaxationParams:
    """Inputs of the (eps, delta)-log-lift relaxation."""

    eps: float
    delta: float
    eps_bar: float = math.inf

    def __post_init__(self) -> None:
        if not self.eps >= 0:
            raise InvalidParameter(f"eps must be >= 0 (got {self.eps})")
        if not 0 < self.delta < 1:
            raise InvalidParameter(f"delta must lie in (0, 1) (got {self.delta})")
        if not self.eps_bar > self.eps:
            raise InvalidParameter(
                f"eps_bar must exceed eps (got eps_bar={self.eps_bar}, eps={self.eps})"
            )


@dataclass(frozen=True)
class GreedyMove:
    """One candidate considered by the greedy partitioner."""

    candidate: int
    accepted: bool
    reason: MoveReason
    nmil: float
    delta_total: float
    eps_eff: float

    def to_dict(self, x_labels: tuple[str, ...]) -> dict[str, Any]:
        return {
            "candidate": x_labels[self.candidate],
            "accepted": self.accepted,
            "reason": self.reason.value,
            "nmil": format_number(self.nmil),
            "delta_total": format_number(self.delta_total),
            "eps_eff": format_number(self.eps_eff),
        }


@dataclass(frozen=True)
class PrivacyReport:
    """Privacy and utility summary of one bi-partition."""

    partition: Partition
    eps: float
    delta: float
    eps_bar: float
    eps_eff: float
    eps_c: float
    delta_total: float
    delta0: float
    utility: UtilityReport
    feasible: bool
    method: ReportMethod
    x_labels: tuple[str, ...]
    trace: tuple[GreedyMove, ...] = ()

    @property
    def nmil(self) -> float:
        return self.utility.nmil

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict."""
        result: dict[str, Any] = {
            "method": self.method.value,
            "partition": self.partition.to_dict(self.x_labels),
            "eps": format_number(self.eps),
            "delta": format_number(self.delta),
            "eps_bar": format_number(self.eps_bar),
            "eps_eff": format_number(self.eps_eff),
            "eps_c": format_number(self.eps_c),
            "delta_total": format_number(self.delta_total),
            "delta0": format_number(self.delta0),
            **self.utility.to_dict(),
            "feasible": self.feasible,
        }
        if self.method == ReportMethod.GREEDY:
            result["trace"] = [m.to_dict(self.x_labels) for m in self.trace]
        return result


@dataclass(frozen=True)
class Scenario:
    """One (eps, delta, eps_bar) setting; delta = 0 means the pure watchdog."""

    eps: float
    delta: float = 0.0
    eps_bar: float = math.inf

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise InvalidParameter(f"scenario eps must be > 0 (got {self.eps})")
        if self.delta != 0:
            # Validates delta and eps_bar with the relaxation's own rules.
            RelaxationParams(self.eps, self.delta, self.eps_bar)

    @property
    def id(self) -> str:
        eps_bar = "inf" if math.isinf(self.eps_bar) else f"{self.eps_bar:g}"
        return f"eps={self.eps:g},delta={self.delta:g},eps_bar={eps_bar}"

    @property
    def relaxed(self) -> bool:
        return self.delta > 0

    def params(self) -> RelaxationParams:
        return RelaxationParams(self.eps, self.delta, self.eps_bar)


@dataclass
class ExperimentConfig:
    """Monte Carlo experiment definition."""

    n_trials: int
    dist_spec: DistributionSpec
    scenarios: list[Scenario]
    metrics: list[Metric] = field(default_factory=lambda: list(Metric))
    overflow_cap: float | None = None
    name: str = "experiment"

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise InvalidParameter(f"n_trials must be >= 1 (got {self.n_trials})")
        if not self.scenarios:
            raise InvalidParameter("an experiment needs at least one scenario")


@dataclass(frozen=True)
class EmpiricalCDF:
    """Sorted sample values; F(t) is the fraction of samples <= t."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", _frozen(np.sort(np.asarray(self.samples, dtype=float))))

    def __len__(self) -> int:
        return len(self.samples)

    def evaluate(self, t: float) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.searchsorted(self.samples, t, side="right")) / len(self.samples)

    def fractions(self) -> np.ndarray:
        """F(v) at each sorted sample v; tied samples share one fraction."""
        n = len(self.samples)
        return np.searchsorted(self.samples, self.samples, side="right") / n


@dataclass(frozen=True)
class TrialRecord:
    """Values of one scenario on one generated joint.

    ``max_lift_before`` is None when the watchdog randomizes nothing.
    ``fallback`` marks a relaxed scenario whose greedy run was infeasible, in
    which case ``nmil`` is the watchdog partition's.
    """

    trial: int
    scenario: Scenario
    max_lift_before: float | None
    eps_c_after: float
    nmil: float
    fallback: bool = False

    @property
    def empty(self) -> bool:
        return self.max_lift_before is None


@dataclass
class ScenarioResult:
    """Per-scenario output of an experiment."""

    scenario: Scenario
    cdfs: dict[Metric, EmpiricalCDF]
    trials: int = 0
    empty: int = 0
    overflow: int = 0
    fallback: int = 0
    eps_c_below_eps: float | None = None


@dataclass
class ExperimentResult:
    """All scenario results of one experiment run."""

    config: ExperimentConfig
    scenarios: list[ScenarioResult]

    def by_id(self, scenario_id: str) -> ScenarioResult:
        for result in self.scenarios:
            if result.scenario.id == scenario_id:
                return result
        raise KeyError(scenario_id)


@dataclass
class CheckResult:
    """Result of one property check on one instance."""

    passed: bool
    scope: str | None = None

    @staticmethod
    def success() -> CheckResult:
        return CheckResult(passed=True)

    @staticmethod
    def failed(scope: str) -> CheckResult:
        return CheckResult(passed=False, scope=scope)


@dataclass
class Violation:
    """A failed property check with count."""

    check_id: str
    scope: str
    count: int


@dataclass
class OracleComparison:
    """Greedy versus exhaustive optimum over a batch of instances."""

    instances: int
    greedy_feasible: int
    oracle_dominates: int
    mean_gap: float
    max_gap: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "instances": self.instances,
            "greedy_feasible": self.greedy_feasible,
            "oracle_dominates": self.oracle_dominates,
            "mean_gap": format_number(self.mean_gap),
            "max_gap": format_number(self.max_gap),
        }


@dataclass
class AuditReport:
    """Outcome of a property audit over random instances."""

    checks: list[str]
    instances: int
    violations: list[Violation]
    coverage: float
    seed: int
    oracle: OracleComparison | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {
            "checks": self.checks,
            "instances": self.instances,
            "seed": self.seed,
            "passed": self.passed,
            "coverage": format_number(self.coverage),
            "violations": [
                {"check_id": v.check_id, "scope": v.scope, "count": v.count}
                for v in self.violations
            ],
        }
        if self.oracle is not None:
            result["greedy_vs_oracle"] = self.oracle.to_dict()
        return result
