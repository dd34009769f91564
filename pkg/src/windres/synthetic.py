"""Seeded synthetic wind records for demos and tests.

A stationary Gaussian AR(1) process is mapped through the Gaussian copula
onto a three-parameter Weibull marginal, giving a positive, positively
autocorrelated series whose 10-min marginal distribution is known exactly.
"""

from __future__ import annotations

import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import signal, special

from .core_types import WeibullParams, WindSeries

__all__ = ["ar1_weibull_series", "write_observations_csv"]


def ar1_weibull_series(
    n_days: int,
    seed: int,
    *,
    marginal: WeibullParams = WeibullParams(beta=2.0, lam=7.0, theta=0.0),
    correlation_hours: float = 3.0,
    step: int = 600,
    start: datetime = datetime(2016, 1, 1, tzinfo=timezone.utc),
) -> WindSeries:
    """``n_days`` of contiguous data at ``step`` seconds with lag-one correlation ``exp(-step / tau)``."""
    n = n_days * (86400 // step)
    phi = math.exp(-step / (correlation_hours * 3600.0))
    rng = np.random.default_rng(seed)
    drive = rng.standard_normal(n)
    drive[1:] *= math.sqrt(1.0 - phi * phi)
    # z[0] ~ N(0, 1) (stationary start), z[i] = phi * z[i-1] + shock[i]
    z = signal.lfilter([1.0], [1.0, -phi], drive)
    # -ln(1 - Phi(z)) evaluated as -log Phi(-z) to keep the upper tail accurate
    expo = -special.log_ndtr(-z)
    values = marginal.theta + marginal.lam * expo ** (1.0 / marginal.beta)
    return WindSeries(start_time=start, step=step, values=values)


def write_observations_csv(
    path: str | Path, series: WindSeries, missing: Iterable[int] = (), sentinel: str = "-999"
) -> None:
    """Write ``timestamp,wind_speed_mps`` rows, replacing indices in *missing* by *sentinel*."""
    skip = set(missing)
    lines = ["timestamp,wind_speed_mps"]
    for i, (stamp, value) in enumerate(zip(series.timestamps(), series.values)):
        text = sentinel if i in skip else repr(float(value))
        lines.append(f"{np.datetime64(stamp, 's')}Z,{text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
