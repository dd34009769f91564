"""Lower-resolution views of a wind series: block averages and instantaneous subsamples."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .core_types import Mode, Provenance, ResampleSpec, WindSeries, validate_series
from .errors import BlockLongerThanSeries, ValidationError, WindResError

__all__ = ["LadderResult", "block_average", "resolution_ladder", "subsample_instantaneous"]


def _check_t(t: int) -> int:
    if int(t) != t or t < 1:
        raise ValidationError(f"block length must be a positive integer, got {t}")
    return int(t)


def block_average(series: WindSeries, t: int) -> WindSeries:
    """Mean of each half-open block ``[n*t, n*t + t)``; a trailing partial block is dropped."""
    validate_series(series)
    t = _check_t(t)
    n_blocks = len(series) // t
    if n_blocks == 0:
        raise BlockLongerThanSeries(t, len(series))
    if t == 1:
        return series
    blocks = series.values[: n_blocks * t].reshape(n_blocks, t)
    times = series.times[: n_blocks * t : t] if series.times is not None else None
    return series.with_values(
        blocks.mean(axis=1), step=series.step * t, provenance=Provenance.AVERAGED, times=times
    )


def subsample_instantaneous(series: WindSeries, t: int) -> WindSeries:
    """Keep every ``t``-th value starting from index 0."""
    validate_series(series)
    t = _check_t(t)
    if t == 1:
        return series
    times = series.times[::t] if series.times is not None else None
    return series.with_values(
        series.values[::t], step=series.step * t, provenance=Provenance.INSTANTANEOUS, times=times
    )


class LadderResult(NamedTuple):
    series: dict[str, WindSeries]
    errors: dict[str, WindResError]


def resolution_ladder(series: WindSeries, specs: Sequence[ResampleSpec]) -> LadderResult:
    """Derive one series per spec, keyed ``"<label>-<avg|inst>"``.

    Failures are collected per key instead of aborting the whole ladder.
    """
    derived: dict[str, WindSeries] = {}
    errors: dict[str, WindResError] = {}
    for spec in specs:
        op = block_average if spec.mode is Mode.AVERAGE else subsample_instantaneous
        try:
            derived[spec.key] = op(series, spec.t)
        except WindResError as exc:
            errors[spec.key] = exc
    return LadderResult(derived, errors)
