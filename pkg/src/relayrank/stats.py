"""Scalar probability primitives.

Standard normal cdf/quantile, the lognormal cdf/quantile built on top of
them, the normal-theory MLE for lognormal parameters and the mean of a
uniform order statistic.

Each function accepts a float and returns a float. The ``*_array`` variants
apply the same arithmetic elementwise to numpy arrays, and the scalar and
array paths give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegenerateSampleError, DomainError, InsufficientDataError

__all__ = [
    "LognormalParams",
    "norm_cdf",
    "norm_cdf_array",
    "norm_ppf",
    "norm_ppf_array",
    "lognormal_cdf",
    "lognormal_cdf_array",
    "lognormal_quantile",
    "fit_lognormal_mle",
    "uniform_order_stat_mean",
    "expected_order_stat",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

_erfc_obj = np.frompyfunc(math.erfc, 1, 1)


def _erfc(x) -> np.ndarray:
    return np.asarray(_erfc_obj(x), dtype=np.float64)


@dataclass(frozen=True)
class LognormalParams:
    """Location and scale of ``log X`` (natural log, log-minutes)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise DomainError(f"lognormal parameters must be finite: {self}")
        if self.sigma < 0:
            raise DomainError(f"sigma must be nonnegative, got {self.sigma}")

    def require_nondegenerate(self) -> None:
        if self.sigma <= 0:
            raise DomainError("sigma = 0 describes a degenerate distribution")


# -- standard normal ---------------------------------------------------------


def norm_cdf_array(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise DomainError("standard normal cdf needs finite input")
    # erfc keeps full relative precision in the lower tail; the upper tail
    # is 2 - (small), which is exact to rounding in absolute terms.
    return 0.5 * _erfc(-z / _SQRT2)


def norm_cdf(z: float) -> float:
    """Standard normal cdf, accurate to about 1e-16 absolute."""
    return float(norm_cdf_array(float(z)))


# Acklam's rational approximation to the normal quantile (rel. error ~1e-9),
# refined below with Halley steps.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _lower_half_quantile(q: np.ndarray) -> np.ndarray:
    """Quantile for 0 < q <= 0.5."""
    x = np.empty_like(q)

    tail = q < _P_LOW
    if np.any(tail):
        t = np.sqrt(-2.0 * np.log(q[tail]))
        num = ((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]
        den = (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        x[tail] = num / den

    body = ~tail
    if np.any(body):
        s = q[body] - 0.5
        r = s * s
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[body] = num / den

    for _ in range(2):
        e = 0.5 * _erfc(-x / _SQRT2) - q
        with np.errstate(over="ignore", invalid="ignore"):
            u = e * _SQRT2PI * np.exp(0.5 * x * x)
        # the density underflows below about p = 1e-300; keep the estimate
        u = np.where(np.isfinite(u), u, 0.0)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


def norm_ppf_array(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise DomainError("standard normal quantile needs 0 < p < 1")
    upper = p > 0.5
    # 1 - p is exact for p >= 0.5, so the upper half reuses the lower half.
    q = np.where(upper, 1.0 - p, p)
    x = _lower_half_quantile(np.atleast_1d(q)).reshape(q.shape)
    return np.where(upper, -x, x)


def norm_ppf(p: float) -> float:
    """Inverse of :func:`norm_cdf` on the open unit interval."""
    return float(norm_ppf_array(float(p)))


# -- lognormal ---------------------------------------------------------------


def lognormal_cdf_array(x, params: LognormalParams) -> np.ndarray:
    params.require_nondegenerate()
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x) & (x > 0)):
        raise DomainError("lognormal cdf needs finite x > 0")
    return norm_cdf_array((np.log(x) - params.mu) / params.sigma)


def lognormal_cdf(x: float, params: LognormalParams) -> float:
    return float(lognormal_cdf_array(float(x), params))


def lognormal_quantile(p: float, params: LognormalParams) -> float:
    params.require_nondegenerate()
    return math.exp(params.mu + params.sigma * norm_ppf(p))


def fit_lognormal_mle(xs: Iterable[float]) -> LognormalParams:
    """Maximum-likelihood lognormal fit.

    The mean and the *population* variance (divisor ``c``) of ``log xs``.
    """
    x = np.asarray(list(xs) if not isinstance(xs, np.ndarray) else xs, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("expected a one-dimensional sample")
    if x.size < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x) & (x > 0)):
        raise DomainError("lognormal fit needs finite, strictly positive observations")
    q = np.log(x)
    mu = float(np.mean(q))
    var = float(np.mean((q - mu) ** 2))
    if var == 0.0:
        raise DegenerateSampleError("all observations are identical; sigma would be 0")
    return LognormalParams(mu, math.sqrt(var))


# -- order statistics --------------------------------------------------------


def uniform_order_stat_mean(r: int, n: int) -> float:
    """E(W_{r:n}) for standard uniforms: the mean of Beta(r, n - r + 1)."""
    if int(r) != r or int(n) != n:
        raise DomainError("r and n must be integers")
    if not 1 <= r <= n:
        raise DomainError(f"need 1 <= r <= n, got r={r}, n={n}")
    return r / (n + 1)


def expected_order_stat(r: int, n: int, params: LognormalParams) -> float:
    """Approximate mean of the r-th smallest of n lognormal draws.

    Evaluates the quantile function at the mean uniform order statistic.
    """
    return lognormal_quantile(uniform_order_stat_mean(r, n), params)
