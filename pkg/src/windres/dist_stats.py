"""Non-parametric distribution comparison.

Empirical CDFs, the two-sample Kolmogorov-Smirnov test with asymptotic
p-values, CDF difference curves, moment summaries and a Gaussian kernel
density estimate with Scott's bandwidth rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_types import KsResult, WindSeries, validate_series
from .errors import EmptyGrid, EmptySeries, TooFewSamples, ValidationError, ZeroVariance

__all__ = [
    "EmpiricalCdf",
    "KdeSpec",
    "cdf_difference_curve",
    "default_kde_grid",
    "ecdf",
    "kde_density",
    "kolmogorov_sf",
    "ks_two_sample",
    "scott_bandwidth",
    "scott_rule",
    "summary",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _values(data) -> np.ndarray:
    if isinstance(data, WindSeries):
        return validate_series(data).values
    arr = np.asarray(data, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptySeries()
    return arr


@dataclass(frozen=True)
class EmpiricalCdf:
    sorted_values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.sorted_values, dtype=np.float64)
        if arr.size == 0:
            raise EmptySeries()
        if np.any(np.diff(arr) < 0):
            raise ValidationError("EmpiricalCdf values must be sorted ascending")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "sorted_values", arr)

    @property
    def n(self) -> int:
        return int(self.sorted_values.size)

    def __call__(self, w) -> np.ndarray | float:
        """Fraction of values ``<= w`` (right-continuous)."""
        counts = np.searchsorted(self.sorted_values, w, side="right")
        return counts / self.n

    def left_limit(self, w) -> np.ndarray | float:
        """Fraction of values strictly below ``w``."""
        counts = np.searchsorted(self.sorted_values, w, side="left")
        return counts / self.n


def ecdf(series) -> EmpiricalCdf:
    return EmpiricalCdf(np.sort(_values(series)))


def kolmogorov_sf(z: float, tol: float = 1e-16) -> float:
    """Survival function of the Kolmogorov distribution, P(K > z).

    For moderate and large ``z`` the alternating series
    ``2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 z^2)`` is summed until terms drop
    below ``tol``. For small ``z`` that series converges poorly, so the
    Jacobi-theta form of the CDF is used instead.
    """
    if z <= 0.0:
        return 1.0
    if z < 1.0:
        # P(K <= z) = sqrt(2 pi)/z * sum exp(-(2k-1)^2 pi^2 / (8 z^2))
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * z * z))
            total += term
            if term < tol * max(total, tol):
                break
            k += 1
        cdf = math.sqrt(2.0 * math.pi) / z * total
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    k = 1
    while True:
        term = 2.0 * math.exp(-2.0 * k * k * z * z)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(1.0, max(0.0, total))


def _ks_statistic(a: EmpiricalCdf, b: EmpiricalCdf) -> float:
    pooled = np.unique(np.concatenate([a.sorted_values, b.sorted_values]))
    right = np.abs(a(pooled) - b(pooled))
    left = np.abs(a.left_limit(pooled) - b.left_limit(pooled))
    return float(min(1.0, max(right.max(), left.max())))


def ks_two_sample(a: EmpiricalCdf, b: EmpiricalCdf) -> KsResult:
    """Two-sample KS test with the asymptotic Kolmogorov p-value.

    Samples are treated as given; when one is derived from the other (an
    average or subsample of the same record) the p-value is only meaningful
    relative to that protocol, not as an independence test.
    """
    if not isinstance(a, EmpiricalCdf):
        a = ecdf(a)
    if not isinstance(b, EmpiricalCdf):
        b = ecdf(b)
    d = _ks_statistic(a, b)
    m, n = a.n, b.n
    z = d * math.sqrt(m * n / (m + n))
    return KsResult(d_stat=d, p_value=kolmogorov_sf(z), n1=m, n2=n)


def _grid(grid) -> np.ndarray:
    arr = np.asarray(grid, dtype=np.float64).ravel()
    if arr.size == 0:
        raise EmptyGrid()
    if np.any(np.diff(arr) < 0):
        raise ValidationError("grid must be ascending")
    return arr


def cdf_difference_curve(reference: EmpiricalCdf, other: EmpiricalCdf, grid) -> np.ndarray:
    """Return an ``(len(grid), 2)`` array of ``(speed, F_other - F_reference)``."""
    w = _grid(grid)
    return np.column_stack([w, other(w) - reference(w)])


def summary(series) -> dict:
    values = _values(series)
    n = values.size
    if n < 2:
        raise TooFewSamples(n, 2)
    mean = float(values.mean())
    pop_var = float(np.mean((values - mean) ** 2))
    return {
        "n": int(n),
        "mean_mps": mean,
        "variance_m2ps2": pop_var,
        "sample_variance_m2ps2": pop_var * n / (n - 1),
        "min_mps": float(values.min()),
        "max_mps": float(values.max()),
    }


def scott_rule(sigma: float, n: int) -> float:
    """Scott's bandwidth ``sigma * n**(-1/5)`` for a one-dimensional Gaussian KDE."""
    if n < 2:
        raise TooFewSamples(n, 2)
    if not sigma > 0:
        raise ZeroVariance()
    return sigma / n**0.2


def scott_bandwidth(series) -> float:
    values = _values(series)
    if values.size < 2:
        raise TooFewSamples(values.size, 2)
    return scott_rule(float(np.std(values, ddof=1)), values.size)


@dataclass(frozen=True)
class KdeSpec:
    bandwidth: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValidationError(f"bandwidth must be > 0, got {self.bandwidth}")

    @classmethod
    def scott(cls, series) -> "KdeSpec":
        return cls(scott_bandwidth(series))


def default_kde_grid(series, bandwidth: float, num: int = 512) -> np.ndarray:
    """512 equally spaced points over ``[min - 3h, max + 3h]``."""
    values = _values(series)
    return np.linspace(values.min() - 3 * bandwidth, values.max() + 3 * bandwidth, num)


def kde_density(series, spec: KdeSpec, grid, chunk: int = 2_000_000) -> np.ndarray:
    """Gaussian KDE evaluated on *grid*; returns ``(len(grid), 2)`` of ``(speed, density)``.

    The kernel carries its ``1/sqrt(2 pi)`` normalisation so the estimate
    integrates to one.
    """
    values = np.sort(_values(series))
    x = _grid(grid)
    h = spec.bandwidth
    out = np.empty_like(x)
    rows = max(1, chunk // values.size)
    for start in range(0, x.size, rows):
        u = (x[start : start + rows, None] - values[None, :]) / h
        out[start : start + rows] = np.exp(-0.5 * u * u).sum(axis=1)
    out *= _INV_SQRT_2PI / (values.size * h)
    return np.column_stack([x, out])
