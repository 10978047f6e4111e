"""Data model for quantile-summarized study groups.

A study group either reports its moments directly (mean and SD) or a
quantile summary in one of three reporting patterns:

* S1: minimum, median, maximum
* S2: first quartile, median, third quartile
* S3: all five numbers

This module owns the record types, scenario classification, invariant
validation, subgroup combination, and CSV/JSON ingestion.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "Scenario",
    "QuantileSummary",
    "GroupRecord",
    "Study",
    "SummaryDataError",
    "UnsupportedSummaryError",
    "classify_scenario",
    "validate",
    "pooled_moments",
    "combine_subgroups",
    "parse_studies",
    "studies_to_rows",
    "write_csv",
    "write_json",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("study_id", "outcome", "arm", "group_label", "n",
               "mean", "sd", "min", "q1", "median", "q3", "max")

# Cells holding this literal are treated as missing, mirroring the
# "not specified" marker used in the source tables.
_MISSING_LITERAL = "NS"


class Scenario(Enum):
    """Reporting pattern of a study group."""

    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    DIRECT = "DIRECT"


class SummaryDataError(ValueError):
    """Input file cannot be parsed into a valid list of studies."""


class UnsupportedSummaryError(ValueError):
    """A quantile summary matches none of the supported scenarios."""


@dataclass(frozen=True)
class QuantileSummary:
    """Reported quantiles of one group; absent fields are None."""

    n: int
    median: float
    min: float | None = None
    q1: float | None = None
    q3: float | None = None
    max: float | None = None

    def present_fields(self) -> tuple[str, ...]:
        names = []
        for name in ("min", "q1", "median", "q3", "max"):
            if getattr(self, name) is not None:
                names.append(name)
        return tuple(names)


@dataclass(frozen=True)
class GroupRecord:
    """One arm of one study for one outcome."""

    study_id: str
    group_label: str
    arm: str  # "case" or "control"
    n: int
    reported_mean: float | None = None
    reported_sd: float | None = None
    summary: QuantileSummary | None = None
    violations: tuple[str, ...] = ()


@dataclass(frozen=True)
class Study:
    """All groups of one study for one outcome."""

    study_id: str
    outcome_label: str
    case_groups: tuple[GroupRecord, ...]
    control_groups: tuple[GroupRecord, ...]

    @property
    def groups(self) -> tuple[GroupRecord, ...]:
        return self.case_groups + self.control_groups


def classify_scenario(group: GroupRecord) -> Scenario:
    """Return the reporting pattern of ``group``.

    Directly reported moments win over any quantile summary.  A summary
    with extremes and quartiles is S3, extremes alone S1, quartiles
    alone S2; anything else is unsupported.

    Raises
    ------
    UnsupportedSummaryError
        If neither moments nor a recognizable summary are present.
    """
    if group.reported_mean is not None and group.reported_sd is not None:
        return Scenario.DIRECT
    s = group.summary
    if s is None:
        raise UnsupportedSummaryError(
            f"group {group.study_id}/{group.group_label}: neither reported "
            f"moments nor a quantile summary are present")
    has_extremes = s.min is not None and s.max is not None
    has_quartiles = s.q1 is not None and s.q3 is not None
    if has_extremes and has_quartiles:
        return Scenario.S3
    if has_extremes and s.q1 is None and s.q3 is None:
        return Scenario.S1
    if has_quartiles and s.min is None and s.max is None:
        return Scenario.S2
    missing = [name for name in ("min", "q1", "q3", "max")
               if getattr(s, name) is None]
    raise UnsupportedSummaryError(
        f"group {group.study_id}/{group.group_label}: summary with fields "
        f"{s.present_fields()} matches no scenario; missing {missing} "
        f"(need min/median/max, q1/median/q3, or all five)")


def validate(group: GroupRecord) -> list[str]:
    """Check the type invariants of ``group``.

    Returns a list of human-readable violations; an empty list means the
    record is well formed.  Violations are data, not exceptions.
    """
    out: list[str] = []
    if group.n < 1:
        out.append(f"n must be a positive integer, got {group.n}")
    if group.arm not in ("case", "control"):
        out.append(f"arm must be 'case' or 'control', got {group.arm!r}")
    has_moments = group.reported_mean is not None and group.reported_sd is not None
    has_summary = group.summary is not None
    if not has_moments and not has_summary:
        out.append("neither (mean, sd) nor a quantile summary is present")
    if has_moments and has_summary:
        out.append("both (mean, sd) and a quantile summary are present; "
                   "exactly one form is allowed")
    if group.reported_sd is not None and group.reported_sd < 0:
        out.append(f"sd must be nonnegative, got {group.reported_sd}")
    s = group.summary
    if s is None:
        return out
    if s.n != group.n:
        out.append(f"summary n={s.n} does not match group n={group.n}")
    ordered = [(name, getattr(s, name))
               for name in ("min", "q1", "median", "q3", "max")
               if getattr(s, name) is not None]
    for (lo_name, lo), (hi_name, hi) in zip(ordered, ordered[1:]):
        if lo > hi:
            out.append(f"ordering violation: {lo_name} <= {hi_name} fails "
                       f"({lo} > {hi})")
    has_quartiles = s.q1 is not None or s.q3 is not None
    if has_quartiles and group.n < 4:
        out.append(f"n >= 4 required with quartiles, got n={group.n}")
    elif not has_quartiles and group.n < 2:
        out.append(f"n >= 2 required with extremes, got n={group.n}")
    return out


def pooled_moments(moments: Sequence[tuple[int, float, float]]) -> tuple[int, float, float]:
    """Combine per-group (n, mean, sd) triples into overall moments.

    Applies the exact identity for the variance of concatenated samples:
    pooled mean is the n-weighted mean, and

        s^2 = [sum (n_i - 1) s_i^2 + sum n_i (m_i - m)^2] / (N - 1)

    so the result equals the moments of the concatenation of samples
    having exactly those per-group moments.
    """
    if not moments:
        raise ValueError("at least one (n, mean, sd) triple required")
    total_n = sum(n for n, _, _ in moments)
    mean = sum(n * m for n, m, _ in moments) / total_n
    ss = sum((n - 1) * sd * sd for n, _, sd in moments)
    ss += sum(n * (m - mean) ** 2 for n, m, _ in moments)
    sd = math.sqrt(ss / (total_n - 1))
    return total_n, mean, sd


def combine_subgroups(groups: Sequence[GroupRecord]) -> GroupRecord:
    """Merge two or more subgroups with reported moments into one record.

    Raises
    ------
    ValueError
        On fewer than two groups, or when any group lacks moments.
    """
    if len(groups) < 2:
        raise ValueError("combine_subgroups requires at least two groups")
    for g in groups:
        if g.reported_mean is None or g.reported_sd is None:
            raise ValueError(
                f"group {g.study_id}/{g.group_label} has no mean and SD; "
                f"estimate moments before combining")
    n, mean, sd = pooled_moments(
        [(g.n, g.reported_mean, g.reported_sd) for g in groups])
    first = groups[0]
    label = "+".join(g.group_label for g in groups)
    return GroupRecord(study_id=first.study_id, group_label=label,
                       arm=first.arm, n=n, reported_mean=mean,
                       reported_sd=sd)


def _parse_cell(raw: str | float | int | None, column: str, where: str) -> float | None:
    if raw is None:
        return None
    if isinstance(raw, (int, float)):
        return float(raw)
    text = raw.strip()
    if text == "" or text == _MISSING_LITERAL:
        return None
    try:
        return float(text)
    except ValueError:
        raise SummaryDataError(
            f"{where}: column {column!r} holds {raw!r}, expected a number, "
            f"an empty cell, or {_MISSING_LITERAL!r}") from None


def _record_from_row(row: dict, where: str) -> tuple[str, GroupRecord]:
    study_id = str(row.get("study_id") or "").strip()
    outcome = str(row.get("outcome") or "").strip()
    group_label = str(row.get("group_label") or "").strip()
    arm = str(row.get("arm") or "").strip().lower()
    if not study_id or not outcome:
        raise SummaryDataError(f"{where}: study_id and outcome must be nonempty")
    if arm not in ("case", "control"):
        raise SummaryDataError(
            f"{where}: arm must be 'case' or 'control', got {row.get('arm')!r}")
    n_raw = _parse_cell(row.get("n"), "n", where)
    if n_raw is None or n_raw != int(n_raw) or n_raw < 1:
        raise SummaryDataError(
            f"{where}: n must be a positive integer, got {row.get('n')!r}")
    n = int(n_raw)
    mean = _parse_cell(row.get("mean"), "mean", where)
    sd = _parse_cell(row.get("sd"), "sd", where)
    quantiles = {name: _parse_cell(row.get(name), name, where)
                 for name in ("min", "q1", "median", "q3", "max")}
    summary = None
    if any(v is not None for v in quantiles.values()):
        if quantiles["median"] is None:
            raise SummaryDataError(
                f"{where}: quantile fields present but median is missing")
        summary = QuantileSummary(n=n, **quantiles)
    record = GroupRecord(study_id=study_id, group_label=group_label or arm,
                         arm=arm, n=n, reported_mean=mean, reported_sd=sd,
                         summary=summary)
    return outcome, record


def _rows_from_csv(path: Path) -> Iterable[tuple[dict, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SummaryDataError(f"{path}: empty file")
        got = tuple(name.strip() for name in reader.fieldnames)
        if set(got) != set(CSV_COLUMNS):
            missing = sorted(set(CSV_COLUMNS) - set(got))
            extra = sorted(set(got) - set(CSV_COLUMNS))
            raise SummaryDataError(
                f"{path}: header mismatch; missing columns {missing}, "
                f"unexpected columns {extra}")
        for row in reader:
            yield row, f"{path}:line {reader.line_num}"


def _rows_from_json(path: Path) -> Iterable[tuple[dict, str]]:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SummaryDataError(
                f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, list):
        raise SummaryDataError(f"{path}: expected a JSON array of row objects")
    for i, row in enumerate(data, start=1):
        if not isinstance(row, dict):
            raise SummaryDataError(f"{path}: row {i} is not an object")
        unknown = sorted(set(row) - set(CSV_COLUMNS))
        if unknown:
            raise SummaryDataError(f"{path}: row {i} has unknown fields {unknown}")
        yield row, f"{path}:row {i}"


def parse_studies(path: str | Path, format: str | None = None) -> list[Study]:
    """Read a CSV or JSON dataset into a list of studies.

    One :class:`Study` is produced per (study_id, outcome) pair, with
    rows grouped by arm in file order.  Every record is validated and
    its violations attached as warnings on the record.

    Parameters
    ----------
    path : str or Path
        Input file.
    format : {"csv", "json"}, optional
        Defaults to the file extension.

    Raises
    ------
    SummaryDataError
        On malformed files (with the offending line), duplicate
        (study, group, outcome) keys, or studies missing an arm.
    """
    path = Path(path)
    if format is None:
        format = path.suffix.lstrip(".").lower() or "csv"
    if format == "csv":
        rows = _rows_from_csv(path)
    elif format == "json":
        rows = _rows_from_json(path)
    else:
        raise SummaryDataError(f"unsupported format {format!r}; use csv or json")

    by_study: dict[tuple[str, str], dict[str, list[GroupRecord]]] = {}
    seen_keys: set[tuple[str, str, str]] = set()
    count = 0
    for row, where in rows:
        count += 1
        outcome, record = _record_from_row(row, where)
        key = (record.study_id, record.group_label, outcome)
        if key in seen_keys:
            raise SummaryDataError(
                f"{where}: duplicate (study, group, outcome) key {key}")
        seen_keys.add(key)
        record = replace(record, violations=tuple(validate(record)))
        arms = by_study.setdefault((record.study_id, outcome),
                                   {"case": [], "control": []})
        arms[record.arm].append(record)
    if count == 0:
        raise SummaryDataError(f"{path}: no data rows")

    studies = []
    for (study_id, outcome), arms in by_study.items():
        if not arms["case"] or not arms["control"]:
            missing_arm = "case" if not arms["case"] else "control"
            raise SummaryDataError(
                f"study {study_id} ({outcome}): no {missing_arm} group")
        studies.append(Study(study_id=study_id, outcome_label=outcome,
                             case_groups=tuple(arms["case"]),
                             control_groups=tuple(arms["control"])))
    return studies


def _num(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def studies_to_rows(studies: Iterable[Study]) -> list[dict]:
    """Flatten studies back into schema-ordered row dictionaries."""
    rows = []
    for study in studies:
        for record in study.groups:
            s = record.summary
            rows.append({
                "study_id": record.study_id,
                "outcome": study.outcome_label,
                "arm": record.arm,
                "group_label": record.group_label,
                "n": str(record.n),
                "mean": _num(record.reported_mean),
                "sd": _num(record.reported_sd),
                "min": _num(s.min if s else None),
                "q1": _num(s.q1 if s else None),
                "median": _num(s.median if s else None),
                "q3": _num(s.q3 if s else None),
                "max": _num(s.max if s else None),
            })
    return rows


def write_csv(studies: Iterable[Study], path: str | Path) -> None:
    """Serialize studies to the canonical CSV schema."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(studies_to_rows(studies))


def write_json(studies: Iterable[Study], path: str | Path) -> None:
    """Serialize studies to the JSON mirror of the CSV schema."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(studies_to_rows(studies), fh, indent=2)
        fh.write("\n")
