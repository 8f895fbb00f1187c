"""Aggregation of Monte Carlo trial records into CDFs and summaries."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

import numpy as np

from .errors import EmptySample, InvalidParameter
from .models import (
    EmpiricalCDF,
    ExperimentConfig,
    ExperimentResult,
    Metric,
    Scenario,
    ScenarioResult,
    TrialRecord,
    format_number,
)

logger = logging.getLogger(__name__)

SUMMARY_QUANTILES = (0.01, 0.05, 0.5, 0.95, 0.99)

# Quantile lookups tolerate fractions k/n that land a hair below q.
_QUANTILE_TOL = 1e-12


@dataclass
class ScenarioMetrics:
    """Running tallies for a single scenario."""

    scenario: Scenario
    samples: dict[Metric, list[float]] = field(
        default_factory=lambda: {metric: [] for metric in Metric}
    )
    trials: int = 0
    empty: int = 0
    overflow: int = 0
    fallback: int = 0
    eps_c_below: int = 0


class ExperimentCollector:
    """Collects trial records during an experiment run.

    Records may arrive in any order; every sample list is sorted when the
    result is generated, so the output does not depend on arrival order.
    """

    def __init__(self, config: ExperimentConfig):
        """Initialize the collector.

        Args:
            config: Experiment being run; supplies the scenarios, the recorded
                metrics and the overflow cap
        """
        self.config = config
        self.start_time = time.time()
        self.scenarios: dict[str, ScenarioMetrics] = {}
        self.total_trials = 0
        for scenario in config.scenarios:
            self._ensure_scenario(scenario)

    def _ensure_scenario(self, scenario: Scenario) -> ScenarioMetrics:
        if scenario.id not in self.scenarios:
            self.scenarios[scenario.id] = ScenarioMetrics(scenario=scenario)
        return self.scenarios[scenario.id]

    def _add_lift(self, tally: ScenarioMetrics, metric: Metric, value: float) -> None:
        if math.isinf(value):
            if self.config.overflow_cap is None:
                tally.overflow += 1
                return
            value = self.config.overflow_cap
        tally.samples[metric].append(value)

    def record_trial(self, records: list[TrialRecord]) -> None:
        """Record every scenario's values for one trial."""
        self.total_trials += 1
        for record in records:
            tally = self._ensure_scenario(record.scenario)
            tally.trials += 1
            tally.fallback += int(record.fallback)
            tally.eps_c_below += int(record.eps_c_after < record.scenario.eps)
            tally.samples[Metric.NMIL].append(record.nmil)
            if record.empty:
                tally.empty += 1
                continue
            self._add_lift(tally, Metric.MAX_LIFT_BEFORE, record.max_lift_before)
            self._add_lift(tally, Metric.EPS_C_AFTER, record.eps_c_after)

    def generate_result(self) -> ExperimentResult:
        """Build the final per-scenario CDFs."""
        results = []
        for tally in self.scenarios.values():
            results.append(
                ScenarioResult(
                    scenario=tally.scenario,
                    cdfs={
                        metric: EmpiricalCDF(np.array(tally.samples[metric]))
                        for metric in self.config.metrics
                    },
                    trials=tally.trials,
                    empty=tally.empty,
                    overflow=tally.overflow,
                    fallback=tally.fallback,
                    eps_c_below_eps=tally.eps_c_below / tally.trials if tally.trials else None,
                )
            )
            logger.info(
                "scenario %s: %d trials, %d empty, %d overflow, %d fallback",
                tally.scenario.id,
                tally.trials,
                tally.empty,
                tally.overflow,
                tally.fallback,
            )
        logger.info(
            "experiment %s finished %d trials in %.1fs",
            self.config.name,
            self.total_trials,
            time.time() - self.start_time,
        )
        return ExperimentResult(config=self.config, scenarios=results)


def cdf_quantile(cdf: EmpiricalCDF, q: float) -> float:
    """Lower empirical quantile: the smallest sample v with F(v) >= q.

    Raises:
        EmptySample: The CDF holds no samples
        InvalidParameter: q outside [0, 1]
    """
    if not 0 <= q <= 1:
        raise InvalidParameter(f"quantile level must lie in [0, 1] (got {q})")
    if len(cdf) == 0:
        raise EmptySample("quantile of an empty sample")
    index = int(np.searchsorted(cdf.fractions(), q - _QUANTILE_TOL, side="left"))
    return float(cdf.samples[min(index, len(cdf) - 1)])


def dominates(left: EmpiricalCDF, right: EmpiricalCDF) -> bool:
    """Whether F_left(t) >= F_right(t) at every sample point of either CDF."""
    points = np.union1d(left.samples, right.samples)
    if points.size == 0:
        return True

    def evaluate(cdf: EmpiricalCDF) -> np.ndarray:
        if len(cdf) == 0:
            return np.zeros(points.size)
        return np.searchsorted(cdf.samples, points, side="right") / len(cdf)

    return bool(np.all(evaluate(left) >= evaluate(right) - _QUANTILE_TOL))


def summarize(result: ExperimentResult) -> dict[str, Any]:
    """Per-scenario quantiles, counts, fraction eps^c < eps and mean NMIL."""
    config = result.config
    scenarios = []
    for scenario_result in result.scenarios:
        quantiles: dict[str, dict[str, Any]] = {}
        for metric, cdf in scenario_result.cdfs.items():
            quantiles[metric.value] = (
                {f"{q:g}": format_number(cdf_quantile(cdf, q)) for q in SUMMARY_QUANTILES}
                if len(cdf)
                else {}
            )
        nmil_cdf = scenario_result.cdfs.get(Metric.NMIL)
        mean_nmil = (
            format_number(float(np.mean(nmil_cdf.samples)))
            if nmil_cdf is not None and len(nmil_cdf)
            else None
        )
        below = scenario_result.eps_c_below_eps
        scenarios.append(
            {
                "scenario_id": scenario_result.scenario.id,
                "eps": format_number(scenario_result.scenario.eps),
                "delta": format_number(scenario_result.scenario.delta),
                "eps_bar": format_number(scenario_result.scenario.eps_bar),
                "trials": scenario_result.trials,
                "empty": scenario_result.empty,
                "overflow": scenario_result.overflow,
                "fallback": scenario_result.fallback,
                "eps_c_below_eps": format_number(below) if below is not None else None,
                "mean_nmil": mean_nmil,
                "quantiles": quantiles,
            }
        )
    return {
        "name": config.name,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "n_trials": config.n_trials,
        "n_s": config.dist_spec.n_s,
        "n_x": config.dist_spec.n_x,
        "seed": config.dist_spec.seed,
        "overflow_cap": config.overflow_cap,
        "scenarios": scenarios,
    }
