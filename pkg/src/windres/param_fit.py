"""Maximum-likelihood fits of the three-parameter Weibull and generalized Gamma.

The Weibull fit profiles the likelihood: for a fixed location ``theta`` the
scale has a closed form given the shape, and the shape solves a monotone
score equation, so the outer problem is a bounded scalar search over
``theta``. The location is kept strictly below the sample minimum because
the likelihood is unbounded there whenever the shape drops below one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy import optimize, special

from .core_types import GenGammaParams, WeibullParams, WindSeries, validate_series
from .errors import (
    EmptySeries,
    InvalidParams,
    NonConvergence,
    NotWeibullLike,
    SampleOutsideSupport,
    TooFewSamples,
    ValidationError,
    ZeroVariance,
)

__all__ = [
    "MIN_FIT_SAMPLES",
    "fit_gengamma_mle",
    "fit_weibull_mle",
    "gengamma_loglik",
    "gengamma_pdf",
    "gengamma_ppf",
    "moment_initializer",
    "qq_data",
    "weibull_cdf",
    "weibull_from_uniform",
    "weibull_loglik",
    "weibull_pdf",
    "weibull_ppf",
    "weibull_sample",
]

log = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 50
MONTHLY_STEP_SECONDS = 28 * 86400
THETA_EPS_FRACTION = 1e-4
REL_TOL = 1e-8
MAX_ITER = 10_000


# --------------------------------------------------------------------------- densities


def weibull_pdf(w, params: WeibullParams):
    """Three-parameter Weibull density; zero below the location ``theta``."""
    w = np.asarray(w, dtype=np.float64)
    beta, lam, theta = params.beta, params.lam, params.theta
    y = (w - theta) / lam
    inside = y >= 0
    ys = np.where(inside, y, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = beta / lam * ys ** (beta - 1.0) * np.exp(-(ys**beta))
    out = np.where(inside, dens, 0.0)
    return out if out.ndim else float(out)


def weibull_cdf(w, params: WeibullParams):
    w = np.asarray(w, dtype=np.float64)
    y = np.clip((w - params.theta) / params.lam, 0.0, None)
    out = -np.expm1(-(y**params.beta))
    return out if out.ndim else float(out)


def weibull_ppf(q, params: WeibullParams):
    q = np.asarray(q, dtype=np.float64)
    out = params.theta + params.lam * (-np.log1p(-q)) ** (1.0 / params.beta)
    return out if out.ndim else float(out)


def weibull_from_uniform(u, params: WeibullParams):
    """Inverse-CDF transform ``theta + lam * (-ln u)**(1/beta)`` for ``u`` in (0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    out = params.theta + params.lam * (-np.log(u)) ** (1.0 / params.beta)
    return out if out.ndim else float(out)


def gengamma_pdf(w, params: GenGammaParams):
    """Generalized Gamma density ``p / a^d * w^(d-1) * exp(-(w/a)^p) / Gamma(d/p)``."""
    w = np.asarray(w, dtype=np.float64)
    a, d, p = params.a, params.d, params.p
    inside = w >= 0
    ws = np.where(inside, w, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logdens = (
            math.log(p) - d * math.log(a) + special.xlogy(d - 1.0, ws) - (ws / a) ** p - special.gammaln(d / p)
        )
        dens = np.exp(logdens)
    out = np.where(inside, dens, 0.0)
    return out if out.ndim else float(out)


def gengamma_ppf(q, params: GenGammaParams):
    q = np.asarray(q, dtype=np.float64)
    out = params.a * special.gammaincinv(params.d / params.p, q) ** (1.0 / params.p)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------- likelihoods


def _sample_values(sample, *, force: bool = False) -> np.ndarray:
    if isinstance(sample, WindSeries):
        validate_series(sample)
        if sample.step >= MONTHLY_STEP_SECONDS and not force:
            raise NotWeibullLike(
                f"{sample.step}s resolution is monthly or coarser; pass force=True to fit anyway"
            )
        return sample.values
    arr = np.asarray(sample, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValidationError("sample contains non-finite values")
    return arr


def weibull_loglik(sample, params: WeibullParams) -> float:
    """Sum of log densities. Values at ``theta`` give ``-inf`` when ``beta > 1``."""
    x = _sample_values(sample, force=True)
    y = x - params.theta
    if np.any(y < 0):
        raise SampleOutsideSupport(f"sample contains values below theta={params.theta}")
    at_edge = y == 0
    if np.any(at_edge):
        if params.beta < 1:
            raise SampleOutsideSupport("sample value equals theta with beta < 1 (unbounded density)")
        if params.beta > 1:
            log.warning("sample value equals theta with beta > 1; log-likelihood is -inf")
            return float("-inf")
    z = y / params.lam
    with np.errstate(divide="ignore"):
        logz = np.log(z)
    logz[at_edge] = 0.0
    n = x.size
    return float(
        n * math.log(params.beta / params.lam) + (params.beta - 1.0) * logz.sum() - np.sum(z**params.beta)
    )


def gengamma_loglik(sample, params: GenGammaParams) -> float:
    x = _sample_values(sample, force=True)
    if np.any(x < 0):
        raise SampleOutsideSupport("generalized Gamma support is w >= 0")
    a, d, p = params.a, params.d, params.p
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    if np.any(x == 0) and d != 1:
        return float("inf") if d < 1 else float("-inf")
    logx[x == 0] = 0.0
    n = x.size
    return float(
        n * (math.log(p) - d * math.log(a) - special.gammaln(d / p))
        + (d - 1.0) * logx.sum()
        - np.sum((x / a) ** p)
    )


# --------------------------------------------------------------------------- Weibull fit


def _check_fit_sample(x: np.ndarray) -> None:
    if x.size < MIN_FIT_SAMPLES:
        raise TooFewSamples(x.size, MIN_FIT_SAMPLES)
    if x.max() == x.min():
        raise ZeroVariance()


def _weibull_shape_score(beta: float, logy: np.ndarray, mean_logy: float, max_logy: float) -> float:
    # d/d(beta) of the profile log-likelihood divided by n
    s = np.exp(beta * (logy - max_logy))
    return 1.0 / beta + mean_logy - float(np.dot(s, logy) / s.sum())


def _weibull_two_param(y: np.ndarray) -> tuple[float, float, float]:
    """MLE of (beta, lam) for a two-parameter Weibull on ``y > 0``; returns (beta, lam, loglik)."""
    logy = np.log(y)
    mean_logy = float(logy.mean())
    max_logy = float(logy.max())
    args = (logy, mean_logy, max_logy)
    lo, hi = 0.05, 20.0
    while _weibull_shape_score(lo, *args) < 0:
        lo /= 4.0
        if lo < 1e-8:
            raise NonConvergence("shape score has no root above 1e-8")
    while _weibull_shape_score(hi, *args) > 0:
        hi *= 4.0
        if hi > 1e6:
            raise NonConvergence("shape score has no root below 1e6")
    beta = optimize.brentq(_weibull_shape_score, lo, hi, args=args, xtol=1e-13, rtol=1e-13, maxiter=MAX_ITER)
    # lam^beta = mean(y^beta), evaluated in shifted log space to avoid overflow
    log_mean_pow = beta * max_logy + math.log(float(np.mean(np.exp(beta * (logy - max_logy)))))
    lam = math.exp(log_mean_pow / beta)
    n = y.size
    loglik = n * math.log(beta) - n * log_mean_pow + (beta - 1.0) * n * mean_logy - n
    return beta, lam, loglik


def moment_initializer(x: np.ndarray) -> WeibullParams:
    """Method-of-moments start: ``theta0 = min - 0.5 * (q10 - min)`` then (beta, lam) from mean and CV."""
    x = np.asarray(x, dtype=np.float64)
    lo = float(x.min())
    q10 = float(np.quantile(x, 0.1))
    spread = q10 - lo
    if spread <= 0:
        spread = THETA_EPS_FRACTION * float(x.max() - lo)
    theta0 = lo - 0.5 * spread
    y = x - theta0
    mean = float(y.mean())
    cv2 = float(y.var()) / mean**2

    def cv_gap(beta: float) -> float:
        g1 = special.gammaln(1.0 + 1.0 / beta)
        g2 = special.gammaln(1.0 + 2.0 / beta)
        return math.expm1(g2 - 2.0 * g1) - cv2

    beta0 = optimize.brentq(cv_gap, 0.02, 200.0) if cv_gap(0.02) > 0 > cv_gap(200.0) else 1.0
    lam0 = mean / math.exp(special.gammaln(1.0 + 1.0 / beta0))
    params = WeibullParams(beta=beta0, lam=lam0, theta=theta0, n_samples=int(x.size))
    return WeibullParams(
        beta=beta0, lam=lam0, theta=theta0, log_likelihood=weibull_loglik(x, params), n_samples=int(x.size)
    )


@dataclass
class _ThetaProfile:
    x: np.ndarray
    xmin: float
    cache: dict

    def at_offset(self, log_offset: float) -> tuple[float, float, float, float]:
        """Profile fit with ``theta = xmin - exp(log_offset)``: (loglik, beta, lam, theta)."""
        key = float(log_offset)
        if key not in self.cache:
            theta = self.xmin - math.exp(key)
            beta, lam, ll = _weibull_two_param(self.x - theta)
            self.cache[key] = (ll, beta, lam, theta)
        return self.cache[key]


def fit_weibull_mle(sample, *, force: bool = False) -> WeibullParams:
    """Three-parameter Weibull MLE with ``theta <= min(sample) - 1e-4 * range``.

    Deterministic: a fixed log-spaced scan over the distance between
    ``theta`` and the sample minimum is followed by a bounded Brent
    refinement around the best scan point. The moment initializer is always
    among the candidates, so the returned log-likelihood never falls below it.
    """
    x = _sample_values(sample, force=force)
    _check_fit_sample(x)
    xmin, xmax = float(x.min()), float(x.max())
    span = xmax - xmin
    eps = THETA_EPS_FRACTION * span
    profile = _ThetaProfile(x, xmin, {})

    lo, hi = math.log(eps), math.log(2.0 * span)
    scan = np.linspace(lo, hi, 41)
    init = moment_initializer(x)
    init_offset = min(max(math.log(xmin - init.theta), lo), hi)
    candidates = sorted(set(scan.tolist()) | {init_offset})
    values = [profile.at_offset(c)[0] for c in candidates]
    best = int(np.argmax(values))

    left = candidates[max(best - 1, 0)]
    right = candidates[min(best + 1, len(candidates) - 1)]
    if right > left:
        res = optimize.minimize_scalar(
            lambda c: -profile.at_offset(c)[0],
            bounds=(left, right),
            method="bounded",
            options={"xatol": 1e-9, "maxiter": MAX_ITER},
        )
        if not res.success:
            raise NonConvergence(f"theta search did not converge: {res.message}")
        refined = profile.at_offset(res.x)
        if refined[0] < values[best]:
            refined = profile.at_offset(candidates[best])
    else:
        refined = profile.at_offset(candidates[best])

    ll, beta, lam, theta = refined
    if ll < init.log_likelihood:
        log.debug("profile search fell below the moment initializer; returning the initializer")
        return init
    return WeibullParams(beta=beta, lam=lam, theta=theta, log_likelihood=ll, n_samples=int(x.size))


# --------------------------------------------------------------------------- generalized Gamma fit


def _positive_for_gengamma(x: np.ndarray) -> np.ndarray:
    if np.any(x < 0):
        raise SampleOutsideSupport("generalized Gamma support is w >= 0")
    zeros = x == 0
    if np.any(zeros):
        floor = 0.5 * float(x[~zeros].min())
        log.info("replacing %d zero speeds by %.6g for the generalized Gamma fit", int(zeros.sum()), floor)
        x = np.where(zeros, floor, x)
    return x


def _gengamma_profile(log_d: float, log_p: float, logx: np.ndarray, sum_logx: float, max_logx: float):
    """Log-likelihood with the scale profiled out; returns (loglik, a)."""
    d, p = math.exp(log_d), math.exp(log_p)
    n = logx.size
    # a^p = p * sum(x^p) / (n d)
    log_sum_pow = p * max_logx + math.log(float(np.sum(np.exp(p * (logx - max_logx)))))
    log_a_p = math.log(p / (n * d)) + log_sum_pow
    ll = n * math.log(p) - d / p * n * log_a_p + (d - 1.0) * sum_logx - n * d / p - n * special.gammaln(d / p)
    return float(ll), math.exp(log_a_p / p)


def fit_gengamma_mle(sample, *, force: bool = False) -> GenGammaParams:
    """Generalized Gamma MLE over ``(log d, log p)`` with the scale profiled out.

    Zero speeds are moved to half the smallest positive speed since the
    density is zero or unbounded at the origin unless ``d == 1``.
    """
    x = _sample_values(sample, force=force)
    _check_fit_sample(x)
    x = _positive_for_gengamma(x)
    logx = np.log(x)
    sum_logx, max_logx = float(logx.sum()), float(logx.max())

    beta0, _, _ = _weibull_two_param(x)
    start = np.array([math.log(beta0), math.log(beta0)])

    def objective(v: np.ndarray) -> float:
        if np.any(np.abs(v) > 8):
            return math.inf
        return -_gengamma_profile(v[0], v[1], logx, sum_logx, max_logx)[0]

    f0 = objective(start)
    best = None
    for _ in range(3):
        res = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "xatol": 1e-9,
                "fatol": REL_TOL * abs(f0),
                "maxiter": MAX_ITER,
                "maxfev": 2 * MAX_ITER,
                "initial_simplex": np.array([start, start + [0.1, 0.0], start + [0.0, 0.1]]),
            },
        )
        if best is not None and best.fun - res.fun <= REL_TOL * abs(res.fun):
            best = res
            break
        best = res
        start = res.x
    if not best.success:
        raise NonConvergence(f"generalized Gamma fit did not converge: {best.message}")
    ll, a = _gengamma_profile(best.x[0], best.x[1], logx, sum_logx, max_logx)
    return GenGammaParams(
        a=a, d=math.exp(best.x[0]), p=math.exp(best.x[1]), log_likelihood=ll, n_samples=int(x.size)
    )


# --------------------------------------------------------------------------- sampling and QQ


def _model_ppf(q, params):
    if isinstance(params, WeibullParams):
        return weibull_ppf(q, params)
    if isinstance(params, GenGammaParams):
        return gengamma_ppf(q, params)
    raise InvalidParams(f"unsupported parameter record {type(params).__name__}")


def weibull_sample(params: WeibullParams, count: int, seed: int, *, step: int = 600) -> WindSeries:
    """Draw ``count`` values by inverse CDF from a seeded PCG64 generator."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if not isinstance(params, WeibullParams):
        raise InvalidParams("weibull_sample needs WeibullParams")
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(count)  # (0, 1]
    draws = np.maximum(weibull_from_uniform(u, params), params.theta)
    return WindSeries(start_time=datetime(1970, 1, 1, tzinfo=timezone.utc), step=step, values=draws)


def qq_data(sample, params, seed: int, *, mode: str = "draws") -> np.ndarray:
    """Return ``(n, 2)`` pairs of (sample quantile, model quantile).

    ``mode="draws"`` pairs the sorted sample with an equally long sorted set
    of random model draws; ``mode="theoretical"`` uses model quantiles at
    plotting positions ``(k - 0.5) / n``.
    """
    if isinstance(sample, WindSeries):
        x = validate_series(sample).values
    else:
        x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptySeries()
    n = x.size
    if mode == "draws":
        model = _model_ppf(np.random.default_rng(seed).random(n), params)
    elif mode == "theoretical":
        model = _model_ppf((np.arange(1, n + 1) - 0.5) / n, params)
    else:
        raise ValidationError(f"unknown QQ mode {mode!r}")
    return np.column_stack([np.sort(x), np.sort(model)])
