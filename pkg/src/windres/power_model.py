"""Turbine power curves and cumulative energy estimates across resolutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core_types import WindSeries, validate_series
from .errors import (
    FewerThanTwoPoints,
    NegativePower,
    NonMonotonicSpeeds,
    PowerCurveError,
    ZeroReferenceEnergy,
)

__all__ = [
    "GenerationEntry",
    "GenerationReport",
    "PowerCurve",
    "energy_total",
    "generation_error",
    "power_at_speed",
]


@dataclass(frozen=True)
class PowerCurve:
    """Piecewise-linear speed (m/s) to power (kW) table.

    Below the first tabulated speed and above the last one (cut-out) the
    output is zero.
    """

    speeds: tuple[float, ...]
    power_kw: tuple[float, ...]
    name: str = ""

    def __post_init__(self) -> None:
        speeds = tuple(float(s) for s in self.speeds)
        power = tuple(float(p) for p in self.power_kw)
        if len(speeds) != len(power):
            raise PowerCurveError("speeds and power_kw must have the same length")
        problems: list[tuple[type[PowerCurveError], str]] = []
        if any(not np.isfinite(v) for v in speeds + power):
            problems.append((PowerCurveError, "power curve contains non-finite values"))
        bad = [i for i, p in enumerate(power) if p < 0]
        if bad:
            problems.append((NegativePower, f"negative power at point {bad[0]}"))
        bad = [i + 1 for i in range(len(speeds) - 1) if speeds[i + 1] <= speeds[i]]
        if bad:
            problems.append((NonMonotonicSpeeds, f"speeds not strictly increasing at point {bad[0]}"))
        if len(speeds) < 2:
            problems.append((FewerThanTwoPoints, f"power curve needs at least 2 points, got {len(speeds)}"))
        if problems:
            cls, message = problems[0]
            raise cls(message, [m for _, m in problems])
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "power_kw", power)

    @classmethod
    def from_points(cls, points, name: str = "") -> "PowerCurve":
        points = list(points)
        return cls(tuple(p[0] for p in points), tuple(p[1] for p in points), name)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.speeds, self.power_kw))

    @property
    def cut_in(self) -> float | None:
        """First tabulated speed with positive power."""
        for speed, power in zip(self.speeds, self.power_kw):
            if power > 0:
                return speed
        return None

    @property
    def cut_out(self) -> float:
        return self.speeds[-1]

    @property
    def rated_power_kw(self) -> float:
        return max(self.power_kw)

    def __call__(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        out = np.interp(w, self.speeds, self.power_kw, left=0.0, right=0.0)
        return np.where(w > self.cut_out, 0.0, out)


def power_at_speed(curve: PowerCurve, w: float) -> float:
    return float(curve(w))


def energy_total(series: WindSeries, curve: PowerCurve) -> dict:
    """Rectangular integration: each value's power is held for one full step.

    Returns ``total_energy_kwh`` and ``cumulative_kwh`` (running total at
    the end of each step, aligned with ``end_times``).
    """
    validate_series(series)
    energy = curve(series.values) * series.step_hours
    cumulative = np.cumsum(energy)
    return {
        "total_energy_kwh": float(cumulative[-1]) if cumulative.size else 0.0,
        "cumulative_kwh": cumulative,
        "end_times": series.timestamps() + np.timedelta64(series.step, "s"),
    }


@dataclass(frozen=True)
class GenerationEntry:
    label: str
    mode: str
    total_energy_kwh: float
    relative_error_pct: float
    absolute_error_kwh: float
    end_times: np.ndarray = field(repr=False)
    cumulative_kwh: np.ndarray = field(repr=False)
    cumulative_fraction: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "mode": self.mode,
            "total_energy_kwh": self.total_energy_kwh,
            "total_energy_mwh": self.total_energy_kwh / 1000.0,
            "relative_error_pct": self.relative_error_pct,
            "absolute_error_kwh": self.absolute_error_kwh,
            "absolute_error_mwh": self.absolute_error_kwh / 1000.0,
        }


@dataclass(frozen=True)
class GenerationReport:
    reference_label: str
    reference_energy_kwh: float
    entries: dict[str, GenerationEntry]

    def __getitem__(self, label: str) -> GenerationEntry:
        return self.entries[label]

    def as_dict(self) -> dict:
        return {
            "reference_label": self.reference_label,
            "reference_energy_kwh": self.reference_energy_kwh,
            "entries": [entry.as_dict() for entry in self.entries.values()],
        }


def _mode_of(series: WindSeries) -> str:
    return {"raw": "raw", "averaged": "avg", "instantaneous": "inst"}[series.provenance.value]


def generation_error(
    reference: WindSeries,
    candidates: Mapping[str, WindSeries],
    curve: PowerCurve,
    *,
    reference_label: str = "reference",
) -> GenerationReport:
    """Relative and absolute energy errors of each candidate against *reference*.

    Cumulative curves are also expressed as a fraction of the reference total.
    """
    ref = energy_total(reference, curve)
    e_ref = ref["total_energy_kwh"]
    if e_ref <= 0:
        raise ZeroReferenceEnergy()

    def entry(label: str, series: WindSeries, result: dict) -> GenerationEntry:
        total = result["total_energy_kwh"]
        return GenerationEntry(
            label=label,
            mode=_mode_of(series),
            total_energy_kwh=total,
            relative_error_pct=100.0 * (total - e_ref) / e_ref,
            absolute_error_kwh=total - e_ref,
            end_times=result["end_times"],
            cumulative_kwh=result["cumulative_kwh"],
            cumulative_fraction=result["cumulative_kwh"] / e_ref,
        )

    entries = {reference_label: entry(reference_label, reference, ref)}
    for label, series in candidates.items():
        if label == reference_label:
            continue
        entries[label] = entry(label, series, energy_total(series, curve))
    return GenerationReport(reference_label=reference_label, reference_energy_kwh=e_ref, entries=entries)
