"""File loaders for joints, channels and experiment definitions."""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .config import SUM_TOL, get_preset
from .distributions import make_joint
from .errors import InvalidParameter, ParseError
from .mechanism import channel_rows
from .models import (
    DistributionSpec,
    ExperimentConfig,
    JointDistribution,
    Mechanism,
    Metric,
    Scenario,
    format_number,
)

STRUCTURED_SUFFIXES = {".json", ".yaml", ".yml"}
LIFT_HEADER = ("s", "x", "lift")
CHANNEL_HEADER = ("x", "y", "probability")


def _read_text(path: Path) -> str:
    if not path.exists():
        raise ParseError(f"file not found: {path}")
    with open(path, encoding="utf-8") as f:
        return f.read()


def _read_structured(path: Path) -> dict[str, Any]:
    # YAML is a superset of JSON, so one parser covers both.
    try:
        data = yaml.safe_load(_read_text(path))
    except yaml.YAMLError as e:
        raise ParseError(f"cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ParseError(f"{path} must hold a mapping at the top level")
    return data


def load_joint(path: Path) -> JointDistribution:
    """Load a joint p(s, x) from a delimited table or a structured file.

    Delimited files (``.csv``, or tab-separated ``.tsv`` / ``.txt``) carry the
    X labels in the first row after a blank corner cell, then one row per
    sensitive symbol: its label followed by the probabilities. Structured
    files (``.json`` / ``.yaml``) hold ``s_labels``, ``x_labels`` and ``probs``.
    """
    if path.suffix.lower() in STRUCTURED_SUFFIXES:
        data = _read_structured(path)
        if "probs" not in data:
            raise ParseError(f"{path} has no 'probs' table")
        return make_joint(data["probs"], data.get("s_labels"), data.get("x_labels"))

    delimiter = _delimiter(path)
    rows = [
        row
        for row in csv.reader(_read_text(path).splitlines(), delimiter=delimiter)
        if any(cell.strip() for cell in row)
    ]
    if len(rows) < 2:
        raise ParseError(f"{path} needs a header row and at least one probability row")

    header = [cell.strip() for cell in rows[0]]
    x_labels = header[1:]
    s_labels = []
    probs = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"{path}:{line} has {len(row)} cells; the header has {len(header)}"
            )
        s_labels.append(row[0].strip())
        try:
            probs.append([float(cell) for cell in row[1:]])
        except ValueError as e:
            raise ParseError(f"{path}:{line}: {e}") from e
    return make_joint(probs, s_labels, x_labels)


def write_joint(joint: JointDistribution, path: Path) -> Path:
    """Write a joint losslessly (17 significant digits) as CSV or JSON."""
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() in STRUCTURED_SUFFIXES:
        path.write_text(json.dumps(joint.to_dict(), indent=2), encoding="utf-8")
        return path
    delimiter = _delimiter(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter=delimiter)
        writer.writerow([""] + list(joint.x_labels))
        for label, row in zip(joint.s_labels, joint.probs):
            writer.writerow([label] + [f"{v:.17g}" for v in row])
    return path


def _delimiter(path: Path) -> str:
    return "," if path.suffix.lower() == ".csv" else "\t"


def _read_channel_rows(path: Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read (x label, y label, probability) rows; absent pairs are 0."""
    rows = [
        [cell.strip() for cell in row]
        for row in csv.reader(_read_text(path).splitlines(), delimiter=_delimiter(path))
        if any(cell.strip() for cell in row)
    ]
    if rows and rows[0] == list(CHANNEL_HEADER):
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path} holds no channel rows")

    labels: list[str] = []
    entries: dict[tuple[str, str], float] = {}
    for line, row in enumerate(rows, start=1):
        if len(row) != 3:
            raise ParseError(f"{path}:{line} must hold x, y and probability (got {len(row)} cells)")
        x_label, y_label, value = row
        if (x_label, y_label) in entries:
            raise ParseError(f"{path}:{line}: pair ({x_label}, {y_label}) repeats")
        try:
            entries[(x_label, y_label)] = float(value)
        except ValueError as e:
            raise ParseError(f"{path}:{line}: {e}") from e
        if x_label not in labels:
            labels.append(x_label)

    unknown = sorted({y for _, y in entries} - set(labels))
    if unknown:
        raise ParseError(f"{path}: output labels {unknown} have no input row")
    index = {label: i for i, label in enumerate(labels)}
    channel = np.zeros((len(labels), len(labels)))
    for (x_label, y_label), value in entries.items():
        channel[index[x_label], index[y_label]] = value
    return tuple(labels), channel


def load_channel(path: Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Load a stored channel as (labels, row-stochastic matrix).

    Delimited files (``.csv``, ``.tsv``, ``.txt``) hold one
    ``x, y, probability`` row per entry, with an optional header; labels keep
    the order in which they first appear as inputs. Structured files hold
    ``labels`` and a square ``channel``. Rows are renormalized after a 1e-9
    check, since stored entries may be rounded to 12 significant digits.
    """
    if path.suffix.lower() in STRUCTURED_SUFFIXES:
        data = _read_structured(path)
        labels = tuple(str(label) for label in data.get("labels", []))
        try:
            channel = np.array(data.get("channel", []), dtype=float)
        except (TypeError, ValueError) as e:
            raise ParseError(f"{path}: channel is not numeric: {e}") from e
    else:
        labels, channel = _read_channel_rows(path)

    n = len(labels)
    if n == 0 or channel.shape != (n, n):
        raise ParseError(f"{path}: channel must be {n}x{n} to match its labels (got {channel.shape})")
    if len(set(labels)) != n:
        raise ParseError(f"{path}: channel labels repeat")
    if not np.all(np.isfinite(channel)) or np.any(channel < 0):
        raise InvalidParameter(f"{path}: channel has negative or non-finite entries")
    sums = channel.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > SUM_TOL):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise InvalidParameter(f"{path}: row {labels[bad]!r} sums to {sums[bad]:.17g}, not 1")
    return labels, channel / sums[:, None]


def save_channel(mech: Mechanism, path: Path) -> Path:
    """Write a mechanism in the format ``load_channel`` reads.

    ``.json`` / ``.yaml`` get the full mechanism object; any other suffix gets
    delimited ``x, y, probability`` rows.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() in STRUCTURED_SUFFIXES:
        path.write_text(json.dumps(mech.to_dict(), indent=2), encoding="utf-8")
        return path
    return write_rows(path, CHANNEL_HEADER, channel_rows(mech))


def write_rows(
    path: Path, header: Sequence[str], rows: Iterable[tuple[str, str, float]]
) -> Path:
    """Write labelled numeric rows as delimited text, numbers at 12 significant digits."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, delimiter=_delimiter(path))
        writer.writerow(header)
        for first, second, value in rows:
            writer.writerow([first, second, format_number(value)])
    return path


def parse_float(value: Any) -> float:
    """Parse a number; the strings ``inf`` / ``.inf`` mean +infinity."""
    if isinstance(value, str) and value.strip().lower() in {"inf", ".inf", "+inf", "infinity"}:
        return float("inf")
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ParseError(f"not a number: {value!r}") from e


def parse_scenarios(text: str) -> list[Scenario]:
    """Parse a preset name or an inline list ``eps:delta[:eps_bar],...``."""
    text = text.strip()
    if ":" not in text:
        try:
            return get_preset(text)
        except ValueError as e:
            raise ParseError(str(e)) from e

    scenarios = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) not in (2, 3):
            raise ParseError(f"scenario {item!r} must look like eps:delta or eps:delta:eps_bar")
        values = [parse_float(p) for p in parts]
        scenarios.append(Scenario(*values))
    return scenarios


def _parse_scenario_list(data: Any) -> list[Scenario]:
    if isinstance(data, str):
        return parse_scenarios(data)
    scenarios = []
    for item in data or []:
        scenarios.append(
            Scenario(
                eps=parse_float(item.get("eps", 0)),
                delta=parse_float(item.get("delta", 0)),
                eps_bar=parse_float(item.get("eps_bar", "inf")),
            )
        )
    return scenarios


def load_experiment_config(path: Path) -> ExperimentConfig:
    """Load an experiment definition from YAML."""
    data = _read_structured(path)
    return _parse_experiment_config(data, default_name=path.stem)


def _parse_experiment_config(data: dict[str, Any], default_name: str = "experiment") -> ExperimentConfig:
    """Parse raw YAML data into ExperimentConfig."""
    dist_data = data.get("distribution", {})
    dist_spec = DistributionSpec(
        n_s=int(dist_data.get("n_s", 15)),
        n_x=int(dist_data.get("n_x", 20)),
        seed=int(dist_data.get("seed", 1)),
    )

    try:
        metrics = [Metric(m) for m in data.get("metrics", [m.value for m in Metric])]
    except ValueError as e:
        raise ParseError(f"unknown metric: {e}") from e

    overflow_cap = data.get("overflow_cap")
    return ExperimentConfig(
        n_trials=int(data.get("n_trials", 5000)),
        dist_spec=dist_spec,
        scenarios=_parse_scenario_list(data.get("scenarios", [])),
        metrics=metrics,
        overflow_cap=parse_float(overflow_cap) if overflow_cap is not None else None,
        name=data.get("name", default_name),
    )
