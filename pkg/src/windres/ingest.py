"""Reading observation files, the complete-day filter and power-curve tables."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .core_types import Provenance, WindSeries
from .errors import IngestIOError, NoCompleteDays, NonMonotonicTimestamp, ParseError, PowerCurveError, ValidationError
from .power_model import PowerCurve

__all__ = [
    "CsvConfig",
    "DayExclusion",
    "FilterResult",
    "RawRecord",
    "filter_complete_days",
    "load_power_curve",
    "parse_csv",
    "parse_timestamp",
]

DEFAULT_SENTINELS = ("", "NaN", "-999")
SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class RawRecord:
    timestamp: datetime
    speed: float | None


@dataclass(frozen=True)
class CsvConfig:
    """Column mapping for observation files.

    ``timestamp_column`` / ``speed_column`` name header fields; ``None``
    selects the first / second column. ``time_format`` is a ``strptime``
    pattern; ``None`` means ISO-8601. Naive timestamps are taken as UTC.
    """

    timestamp_column: str | None = None
    speed_column: str | None = None
    sentinels: tuple[str, ...] = DEFAULT_SENTINELS
    time_format: str | None = None
    delimiter: str = ","


def parse_timestamp(text: str, time_format: str | None = None) -> datetime:
    text = text.strip()
    if time_format is None:
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        stamp = datetime.fromisoformat(text)
    else:
        stamp = datetime.strptime(text, time_format)
    if stamp.tzinfo is None:
        return stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def _column_index(header: list[str], name: str | None, default: int, path: Path) -> int:
    if name is None:
        if len(header) <= default:
            raise ParseError(1, f"header has {len(header)} columns, need at least {default + 1}")
        return default
    stripped = [h.strip() for h in header]
    if name not in stripped:
        raise ParseError(1, f"column {name!r} not found in {path}")
    return stripped.index(name)


def parse_csv(path: str | Path, config: CsvConfig = CsvConfig()) -> list[RawRecord]:
    """One :class:`RawRecord` per data row; sentinel or empty speeds become ``None``."""
    path = Path(path)
    sentinels = {s.strip() for s in config.sentinels}
    records: list[RawRecord] = []
    try:
        handle = path.open("r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with handle:
        reader = csv.reader(handle, delimiter=config.delimiter)
        header = next(reader, None)
        if header is None:
            raise ParseError(1, f"{path} is empty (header row required)")
        t_idx = _column_index(header, config.timestamp_column, 0, path)
        w_idx = _column_index(header, config.speed_column, 1, path)
        previous: datetime | None = None
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max(t_idx, w_idx):
                raise ParseError(line, f"expected at least {max(t_idx, w_idx) + 1} fields, got {len(row)}")
            try:
                stamp = parse_timestamp(row[t_idx], config.time_format)
            except ValueError as exc:
                raise ParseError(line, f"bad timestamp {row[t_idx]!r}: {exc}") from None
            if previous is not None and stamp <= previous:
                raise NonMonotonicTimestamp(line)
            previous = stamp
            raw = row[w_idx].strip()
            if raw in sentinels:
                speed = None
            else:
                try:
                    speed = float(raw)
                except ValueError:
                    raise ParseError(line, f"bad wind speed {raw!r}") from None
                if not np.isfinite(speed):
                    speed = None
            records.append(RawRecord(stamp, speed))
    return records


@dataclass(frozen=True)
class DayExclusion:
    day: str
    reason: str
    n_records: int
    n_missing: int

    def as_dict(self) -> dict:
        return {"day": self.day, "reason": self.reason, "n_records": self.n_records, "n_missing": self.n_missing}


@dataclass(frozen=True)
class FilterResult:
    series: WindSeries
    kept_days: list[str]
    excluded: list[DayExclusion] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "n_days_kept": len(self.kept_days),
            "n_days_excluded": len(self.excluded),
            "excluded_days": [e.as_dict() for e in self.excluded],
        }


def filter_complete_days(records: Sequence[RawRecord], expected_step: int = 600) -> FilterResult:
    """Keep only UTC days with every expected observation present at the expected cadence.

    Exclusion reasons: ``missing_values`` (a record carries no speed),
    ``missing_records`` (fewer rows than the cadence requires),
    ``cadence_violation`` (right number of rows at the wrong times),
    ``negative_speed``.
    """
    expected_step = int(expected_step)
    if expected_step <= 0 or SECONDS_PER_DAY % expected_step:
        raise ValidationError(f"expected step {expected_step}s does not divide 24 h")
    per_day = SECONDS_PER_DAY // expected_step

    by_day: dict = defaultdict(list)
    for rec in records:
        by_day[rec.timestamp.astimezone(timezone.utc).date()].append(rec)

    kept_values: list[np.ndarray] = []
    kept_times: list[np.ndarray] = []
    kept_days: list[str] = []
    excluded: list[DayExclusion] = []
    for day in sorted(by_day):
        recs = by_day[day]
        n_missing = sum(r.speed is None for r in recs)
        day_start = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
        offsets = [int((r.timestamp - day_start).total_seconds()) for r in recs]
        if n_missing:
            reason = "missing_values"
        elif len(recs) < per_day:
            reason = "missing_records"
        elif offsets != list(range(0, SECONDS_PER_DAY, expected_step)):
            reason = "cadence_violation"
        elif any(r.speed < 0 for r in recs):
            reason = "negative_speed"
        else:
            reason = ""
        if reason:
            excluded.append(DayExclusion(day.isoformat(), reason, len(recs), n_missing))
            continue
        kept_days.append(day.isoformat())
        kept_values.append(np.array([r.speed for r in recs], dtype=np.float64))
        start = np.datetime64(day.isoformat(), "s")
        kept_times.append(start + np.arange(per_day, dtype=np.int64) * np.timedelta64(expected_step, "s"))

    if not kept_days:
        raise NoCompleteDays(f"none of {len(by_day)} day(s) is complete at {expected_step}s cadence")
    first = datetime.fromisoformat(kept_days[0]).replace(tzinfo=timezone.utc)
    series = WindSeries(
        start_time=first,
        step=expected_step,
        values=np.concatenate(kept_values),
        provenance=Provenance.RAW,
        times=np.concatenate(kept_times),
    )
    return FilterResult(series, kept_days, excluded)


def load_power_curve(path: str | Path) -> PowerCurve:
    """Read a ``wind_speed_mps,power_kw`` table."""
    path = Path(path)
    try:
        handle = path.open("r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    speeds: list[float] = []
    power: list[float] = []
    with handle:
        reader = csv.reader(handle)
        header = [h.strip() for h in next(reader, [])]
        if header != ["wind_speed_mps", "power_kw"]:
            raise ParseError(1, f"power curve header must be 'wind_speed_mps,power_kw', got {','.join(header)!r}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(reader.line_num, f"expected 2 fields, got {len(row)}")
            try:
                speeds.append(float(row[0]))
                power.append(float(row[1]))
            except ValueError:
                raise ParseError(reader.line_num, f"non-numeric power curve row {row!r}") from None
    try:
        return PowerCurve(tuple(speeds), tuple(power), name=path.stem)
    except PowerCurveError as exc:
        raise type(exc)(f"{path}: {exc}", exc.problems) from None
