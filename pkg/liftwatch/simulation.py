"""Monte Carlo harness: random joints, per-scenario metrics and CDF export.

Trial t draws its joint from a seed derived from (master seed, t), so serial
and parallel runs produce bit-identical samples.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np
from tqdm import tqdm

from .config import load_settings
from .distributions import random_joint, trial_seed
from .errors import Infeasible, TrialError
from .lift import epsilon_of_subset, lift_table, watchdog_partition
from .metrics import ExperimentCollector, summarize
from .models import (
    DistributionSpec,
    ExperimentConfig,
    ExperimentResult,
    JointDistribution,
    Scenario,
    TrialRecord,
    format_number,
)
from .relaxation import greedy_partition
from .utility import nmil

logger = logging.getLogger(__name__)


def evaluate_trial(joint: JointDistribution, scenario: Scenario, trial: int = 0) -> TrialRecord:
    """Compute one scenario's values on one joint.

    The lift metrics refer to the watchdog's randomized set at the scenario's
    eps. NMIL is the watchdog partition's for delta = 0 and the greedy
    partition's otherwise; a relaxed scenario whose greedy run is infeasible
    falls back to the watchdog partition and is flagged.
    """
    table = lift_table(joint)
    randomized = watchdog_partition(joint, scenario.eps, table).randomized
    if randomized:
        max_before: float | None = float(table.eps_x[list(randomized)].max())
        eps_c = epsilon_of_subset(joint, randomized)
    else:
        max_before, eps_c = None, 0.0

    fallback = False
    if scenario.relaxed:
        try:
            value = greedy_partition(joint, scenario.params()).nmil
        except Infeasible as e:
            logger.debug("trial %d, %s: %s; using watchdog NMIL", trial, scenario.id, e)
            value = nmil(joint, randomized)
            fallback = True
    else:
        value = nmil(joint, randomized)

    return TrialRecord(
        trial=trial,
        scenario=scenario,
        max_lift_before=max_before,
        eps_c_after=eps_c,
        nmil=value,
        fallback=fallback,
    )


def trial_joint(spec: DistributionSpec, trial: int) -> JointDistribution:
    """Regenerate the joint of one trial."""
    return random_joint(DistributionSpec(spec.n_s, spec.n_x, trial_seed(spec.seed, trial)))


# Module level so ProcessPoolExecutor can pickle it.
def _run_trials(
    args: tuple[list[int], DistributionSpec, list[Scenario]],
) -> list[list[TrialRecord]]:
    trials, spec, scenarios = args
    batch = []
    for trial in trials:
        try:
            joint = trial_joint(spec, trial)
            batch.append([evaluate_trial(joint, scenario, trial) for scenario in scenarios])
        except Exception as e:
            raise TrialError(trial, e) from e
    return batch


def run_experiment(
    config: ExperimentConfig, jobs: int | None = None, progress: bool = False
) -> ExperimentResult:
    """Run every trial of an experiment and aggregate per-scenario CDFs.

    Args:
        config: Trials, generator settings and scenarios
        jobs: Worker processes (default from settings); results do not depend on it
        progress: Show a tqdm progress bar

    Raises:
        TrialError: A trial failed; carries the trial index
    """
    jobs = load_settings().jobs if jobs is None else jobs
    n_trials = config.n_trials
    logger.info(
        "experiment %s: %d trials, |S|=%d, |X|=%d, seed=%d, %d scenario(s), jobs=%d",
        config.name,
        n_trials,
        config.dist_spec.n_s,
        config.dist_spec.n_x,
        config.dist_spec.seed,
        len(config.scenarios),
        jobs,
    )
    collector = ExperimentCollector(config)
    pbar = tqdm(total=n_trials, desc=config.name, unit="trial", disable=not progress)

    if jobs > 1:
        # More chunks than workers gives finer progress.
        n_chunks = min(jobs * 4, n_trials)
        chunks = [c.tolist() for c in np.array_split(np.arange(n_trials), n_chunks)]
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [
                executor.submit(_run_trials, (chunk, config.dist_spec, config.scenarios))
                for chunk in chunks
            ]
            for future in as_completed(futures):
                batch = future.result()
                for records in batch:
                    collector.record_trial(records)
                pbar.update(len(batch))
    else:
        for trial in range(n_trials):
            for records in _run_trials(([trial], config.dist_spec, config.scenarios)):
                collector.record_trial(records)
            pbar.update(1)

    pbar.close()
    return collector.generate_result()


def write_cdf_files(result: ExperimentResult, out_dir: Path) -> list[Path]:
    """Write one ``cdf_<metric>.csv`` per recorded metric.

    Columns are scenario_id, value and cumulative_fraction, sorted by value
    within each scenario.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for metric in result.config.metrics:
        path = out_dir / f"cdf_{metric.value}.csv"
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["scenario_id", "value", "cumulative_fraction"])
            for scenario_result in result.scenarios:
                cdf = scenario_result.cdfs[metric]
                for value, fraction in zip(cdf.samples, cdf.fractions()):
                    writer.writerow(
                        [scenario_result.scenario.id, format_number(value), format_number(fraction)]
                    )
        paths.append(path)
    return paths


def write_summary(result: ExperimentResult, path: Path) -> Path:
    """Write the JSON summary of an experiment."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summarize(result), indent=2), encoding="utf-8")
    return path
