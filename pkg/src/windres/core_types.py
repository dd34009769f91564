"""Shared data model: wind series, resampling specs and fitted-parameter records."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import EmptySeries, InvalidParams, NegativeSpeed, NonFinite, ValidationError

__all__ = [
    "BASE_STEP_SECONDS",
    "GenGammaParams",
    "KsResult",
    "Mode",
    "Provenance",
    "ResampleSpec",
    "WeibullParams",
    "WindSeries",
    "format_duration",
    "parse_duration",
    "validate_series",
]

BASE_STEP_SECONDS = 600
SIGNIFICANCE_LEVEL = 0.05

_DURATION_RE = re.compile(r"^\s*(\d+)\s*(s|sec|min|m|h|d)\s*$", re.IGNORECASE)
_UNIT_SECONDS = {"s": 1, "sec": 1, "min": 60, "m": 60, "h": 3600, "d": 86400}


def parse_duration(text: str) -> int:
    """Parse labels such as ``"10min"``, ``"3h"`` or ``"1d"`` into seconds."""
    match = _DURATION_RE.match(text)
    if match is None:
        raise ValidationError(f"unrecognised duration {text!r}")
    seconds = int(match.group(1)) * _UNIT_SECONDS[match.group(2).lower()]
    if seconds <= 0:
        raise ValidationError(f"duration must be positive: {text!r}")
    return seconds


def format_duration(seconds: int) -> str:
    """Inverse of :func:`parse_duration` using the coarsest exact unit."""
    for unit, size in (("d", 86400), ("h", 3600), ("min", 60)):
        if seconds % size == 0:
            return f"{seconds // size}{unit}"
    return f"{seconds}s"


class Provenance(str, enum.Enum):
    RAW = "raw"
    AVERAGED = "averaged"
    INSTANTANEOUS = "instantaneous"


class Mode(str, enum.Enum):
    AVERAGE = "average"
    INSTANTANEOUS = "instantaneous"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        key = text.strip().lower()
        if key in ("avg", "average", "mean"):
            return cls.AVERAGE
        if key in ("inst", "instantaneous", "sub", "subsample"):
            return cls.INSTANTANEOUS
        raise ValidationError(f"unknown resampling mode {text!r}")

    @property
    def short(self) -> str:
        return "avg" if self is Mode.AVERAGE else "inst"


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError("wind speed values must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WindSeries:
    """Equal-step wind-speed sequence in m/s.

    ``times`` optionally carries the UTC start time of every value (as
    ``datetime64[s]``). It is populated by ingestion so that gaps left by
    the complete-day filter survive into derived series; when absent the
    times are implied by ``start_time + k * step``.
    """

    start_time: datetime
    step: int
    values: np.ndarray
    provenance: Provenance = Provenance.RAW
    source_step: int | None = None
    times: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if self.start_time.tzinfo is None:
            object.__setattr__(self, "start_time", self.start_time.replace(tzinfo=timezone.utc))
        step = int(self.step)
        if step <= 0 or step != self.step:
            raise ValidationError(f"step must be a positive integer number of seconds, got {self.step}")
        object.__setattr__(self, "step", step)
        source = step if self.source_step is None else int(self.source_step)
        if source <= 0 or step % source != 0:
            raise ValidationError(f"step {step}s is not an integer multiple of source step {source}s")
        object.__setattr__(self, "source_step", source)
        if self.times is not None:
            times = np.array(self.times, dtype="datetime64[s]")
            if times.shape != self.values.shape:
                raise ValidationError("times and values must have the same length")
            times.setflags(write=False)
            object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def block_factor(self) -> int:
        return self.step // self.source_step

    @property
    def step_hours(self) -> float:
        return self.step / 3600.0

    def timestamps(self) -> np.ndarray:
        """Start time of every value as ``datetime64[s]``."""
        if self.times is not None:
            return self.times
        start = np.datetime64(self.start_time.astimezone(timezone.utc).replace(tzinfo=None), "s")
        return start + np.arange(len(self), dtype=np.int64) * np.timedelta64(self.step, "s")

    def with_values(self, values, *, step: int, provenance: Provenance, times=None) -> "WindSeries":
        start = self.start_time
        if times is not None and len(times):
            start = _to_datetime(times[0])
        return WindSeries(
            start_time=start,
            step=step,
            values=values,
            provenance=provenance,
            source_step=self.source_step,
            times=times,
        )


def _to_datetime(value: np.datetime64) -> datetime:
    seconds = int(np.datetime64(value, "s").astype(np.int64))
    return datetime(1970, 1, 1, tzinfo=timezone.utc) + timedelta(seconds=seconds)


def validate_series(series: WindSeries) -> WindSeries:
    """Return *series* unchanged if every value is finite and non-negative."""
    values = series.values
    if values.size == 0:
        raise EmptySeries()
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFinite(int(bad[0]))
    bad = np.flatnonzero(values < 0.0)
    if bad.size:
        raise NegativeSpeed(int(bad[0]))
    return series


@dataclass(frozen=True)
class ResampleSpec:
    mode: Mode
    t: int
    label: str

    def __post_init__(self) -> None:
        if not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode.parse(self.mode))
        if int(self.t) != self.t or self.t < 1:
            raise ValidationError(f"block length must be a positive integer, got {self.t}")
        object.__setattr__(self, "t", int(self.t))

    @classmethod
    def from_label(cls, label: str, mode: Mode | str, base_step: int = BASE_STEP_SECONDS) -> "ResampleSpec":
        """Build a spec from a resolution label, e.g. ``"3h"`` over 600 s gives ``t=18``."""
        seconds = parse_duration(label)
        if seconds % base_step:
            raise ValidationError(f"resolution {label} is not a multiple of the {base_step}s base step")
        return cls(mode=mode, t=seconds // base_step, label=label)

    @property
    def key(self) -> str:
        return f"{self.label}-{self.mode.short}"


@dataclass(frozen=True)
class WeibullParams:
    """Three-parameter Weibull: shape ``beta``, scale ``lam`` (m/s), location ``theta`` (m/s)."""

    beta: float
    lam: float
    theta: float = 0.0
    log_likelihood: float = float("nan")
    n_samples: int = 0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise InvalidParams(f"beta must be > 0, got {self.beta}")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidParams(f"lambda must be > 0, got {self.lam}")
        if not np.isfinite(self.theta):
            raise InvalidParams(f"theta must be finite, got {self.theta}")

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "lambda_mps": self.lam,
            "theta_mps": self.theta,
            "log_likelihood": self.log_likelihood,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class GenGammaParams:
    """Generalized Gamma with scale ``a`` (m/s) and shapes ``d`` and ``p``."""

    a: float
    d: float
    p: float
    log_likelihood: float = float("nan")
    n_samples: int = 0

    def __post_init__(self) -> None:
        for name in ("a", "d", "p"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParams(f"{name} must be > 0, got {value}")

    def as_dict(self) -> dict:
        return {
            "a_mps": self.a,
            "d": self.d,
            "p": self.p,
            "log_likelihood": self.log_likelihood,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class KsResult:
    d_stat: float
    p_value: float
    n1: int
    n2: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.d_stat <= 1.0:
            raise ValidationError(f"KS statistic outside [0, 1]: {self.d_stat}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError(f"p-value outside [0, 1]: {self.p_value}")

    @property
    def significant(self) -> bool:
        return self.p_value <= SIGNIFICANCE_LEVEL

    def as_dict(self) -> dict:
        return {
            "d_stat": self.d_stat,
            "p_value": self.p_value,
            "n1": self.n1,
            "n2": self.n2,
            "significant": self.significant,
        }
