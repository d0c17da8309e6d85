"""Place predictors: rounded OLS, exact GP regression, clipped ridge and FWOS.

Every fitted model is an immutable object with the same prediction surface:

``predict_value(x)``
    the real-valued regression output before rounding;
``predict(x)``
    the integer place (rounded half away from zero, then clamped);
``predict_many(xs)``
    elementwise ``predict`` over an array, with no coupling between elements.

The fitters take plain ``(x, y)`` arrays. :func:`fit_model` dispatches by
name on a validated :class:`TrainingSet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.linalg import lapack

from .errors import DomainError, IllConditionedError, InsufficientDataError, SingularFitError, TieError
from .estimators import german_tank_umvue
from .stats import LognormalParams, fit_lognormal_mle, norm_cdf_array

__all__ = [
    "MODEL_NAMES",
    "TrainingSet",
    "OlsModel",
    "RidgeModel",
    "GpHyperparameters",
    "GpModel",
    "FwosModel",
    "round_half_away",
    "ols_fit",
    "ridge_fit",
    "gp_fit",
    "fwos_fit",
    "fit_model",
]

MODEL_NAMES = ("ols", "gp", "ordinal", "fwos")


def round_half_away(v):
    """Round to the nearest integer, ties away from zero."""
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def _finite_array(x, positive: bool = False) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("prediction input must be finite")
    if positive and not np.all(arr > 0):
        raise DomainError("changeover time must be > 0")
    return arr


def _xy(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DomainError(f"x and y lengths differ: {x.size} vs {y.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("training data must be finite")
    return x, y


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Changeover times ``x`` at leg ``leg`` paired with final places ``y``."""

    x: np.ndarray
    y: np.ndarray
    leg: int = 1

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).ravel()
        y = np.asarray(self.y).ravel()
        if x.size != y.size:
            raise DomainError(f"x and y lengths differ: {x.size} vs {y.size}")
        if x.size == 0:
            raise InsufficientDataError("training set is empty")
        if not np.all(np.isfinite(x) & (x > 0)):
            raise DomainError("changeover times must be finite and > 0")
        if y.dtype.kind not in "iu":
            if not np.all(y == np.round(y)):
                raise DomainError("places must be integers")
        y = y.astype(np.int64)
        if np.any(y < 1):
            raise DomainError("places must be >= 1")
        if np.unique(y).size != y.size:
            raise TieError("places must be unique")
        if self.leg < 1:
            raise DomainError("leg index must be >= 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def c(self) -> int:
        return int(self.x.size)


class _PlaceModel:
    name: ClassVar[str]
    positive_inputs: ClassVar[bool] = False

    def _raw(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _finish(self, rounded: np.ndarray) -> np.ndarray:
        return np.maximum(rounded, 1.0)

    def predict_value(self, x: float) -> float:
        return float(self._raw(_finite_array(float(x), self.positive_inputs)))

    def predict_many(self, xs) -> np.ndarray:
        raw = self._raw(_finite_array(xs, self.positive_inputs))
        return self._finish(round_half_away(raw)).astype(np.int64)

    def predict(self, x: float) -> int:
        return int(self.predict_many(float(x)))

    def describe(self) -> dict:
        raise NotImplementedError


# -- linear models -----------------------------------------------------------


def _centered_line(x: np.ndarray, y: np.ndarray, lam: float) -> tuple[float, float]:
    xbar = float(np.mean(x))
    ybar = float(np.mean(y))
    dx = x - xbar
    sxx = float(np.dot(dx, dx))
    sxy = float(np.dot(dx, y - ybar))
    if sxx + lam == 0.0:
        raise SingularFitError("x has zero variance; slope is not identifiable")
    slope = sxy / (sxx + lam)
    return ybar - slope * xbar, slope


@dataclass(frozen=True)
class OlsModel(_PlaceModel):
    intercept: float
    slope: float
    name: ClassVar[str] = "ols"

    def _raw(self, x):
        return self.intercept + self.slope * x

    def describe(self):
        return {"intercept": self.intercept, "slope": self.slope}


def ols_fit(x, y) -> OlsModel:
    x, y = _xy(x, y)
    if x.size < 2:
        raise InsufficientDataError("OLS needs at least 2 observations")
    return OlsModel(*_centered_line(x, y, 0.0))


@dataclass(frozen=True)
class RidgeModel(_PlaceModel):
    """Ridge line whose rounded output is clipped to the training place range."""

    intercept: float
    slope: float
    lam: float
    clip_low: int
    clip_high: int
    name: ClassVar[str] = "ordinal"

    def _raw(self, x):
        return self.intercept + self.slope * x

    def _finish(self, rounded):
        return np.clip(rounded, self.clip_low, self.clip_high)

    def describe(self):
        return {
            "intercept": self.intercept,
            "slope": self.slope,
            "lambda": self.lam,
            "clip_low": self.clip_low,
            "clip_high": self.clip_high,
        }


def ridge_fit(x, y, lam: float = 1.0) -> RidgeModel:
    """Penalize only the slope; the intercept is fitted on centered inputs."""
    x, y = _xy(x, y)
    if x.size < 2:
        raise InsufficientDataError("ridge needs at least 2 observations")
    if not lam >= 0:
        raise DomainError(f"ridge weight must be >= 0, got {lam}")
    intercept, slope = _centered_line(x, y, float(lam))
    return RidgeModel(intercept, slope, float(lam), int(y.min()), int(y.max()))


# -- Gaussian process --------------------------------------------------------

_JITTERS = (0.0,) + tuple(10.0**k for k in range(-10, -3))
_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GpHyperparameters:
    """RBF kernel hyperparameters on standardized inputs and targets."""

    lengthscale: float = 1.0
    signal_var: float = 1.0
    noise_var: float = 1e-2

    def __post_init__(self):
        if not (self.lengthscale > 0 and self.signal_var > 0 and self.noise_var >= 0):
            raise DomainError(f"invalid GP hyperparameters: {self}")
        if not all(map(math.isfinite, (self.lengthscale, self.signal_var, self.noise_var))):
            raise DomainError(f"GP hyperparameters must be finite: {self}")


GpPolicy = Union[str, GpHyperparameters]


def _rbf(a: np.ndarray, b: np.ndarray, lengthscale: float, signal_var: float) -> np.ndarray:
    d = a[:, None] - b[None, :]
    return signal_var * np.exp(-0.5 * (d / lengthscale) ** 2)


def _cholesky(a: np.ndarray, start: int = 0):
    """Cholesky factor of ``a + jitter*I``, escalating jitter on failure."""
    for jitter in _JITTERS[start:]:
        try:
            m = a + jitter * np.eye(a.shape[0]) if jitter else a
            return scipy.linalg.cho_factor(m, lower=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            continue
    raise IllConditionedError("kernel matrix is not positive definite even with jitter 1e-4")


@dataclass(frozen=True, eq=False)
class GpModel(_PlaceModel):
    x_train: np.ndarray  # standardized
    alpha: np.ndarray  # (K + noise*I)^-1 y on standardized targets
    hyper: GpHyperparameters
    jitter: float
    x_mean: float
    x_scale: float
    y_mean: float
    y_scale: float
    log_marginal_likelihood: float = field(default=float("nan"))
    name: ClassVar[str] = "gp"

    def _raw(self, x):
        xs = (np.atleast_1d(x) - self.x_mean) / self.x_scale
        k = _rbf(xs, self.x_train, self.hyper.lengthscale, self.hyper.signal_var)
        out = self.y_mean + self.y_scale * (k @ self.alpha)
        return out.reshape(np.shape(x))

    def describe(self):
        return {
            "lengthscale": self.hyper.lengthscale,
            "signal_var": self.hyper.signal_var,
            "noise_var": self.hyper.noise_var,
            "jitter": self.jitter,
            "x_mean": self.x_mean,
            "x_scale": self.x_scale,
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
            "log_marginal_likelihood": self.log_marginal_likelihood,
        }


def _standardize(v: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(np.mean(v))
    scale = float(np.std(v))
    if scale == 0.0:
        scale = 1.0
    return (v - mean) / scale, mean, scale


class _ProfiledLikelihood:
    """Negative log marginal likelihood with the signal variance profiled out.

    Writing ``K + s0 I = s2 (R + g I)`` with ``R`` the unit-variance RBF
    matrix, the optimal ``s2`` for fixed ``(lengthscale, g)`` is
    ``y' (R + g I)^-1 y / c``, leaving a two-parameter search over
    ``theta = (log lengthscale, log g)``.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.y = y
        self.c = y.size
        self.d2 = (x[:, None] - x[None, :]) ** 2
        self.eye = np.eye(self.c)

    def _parts(self, theta):
        ell, g = math.exp(theta[0]), math.exp(theta[1])
        r = np.exp(-0.5 * self.d2 / (ell * ell))
        cho, _ = _cholesky(r + g * self.eye)
        alpha = scipy.linalg.cho_solve(cho, self.y, check_finite=False)
        s2 = float(self.y @ alpha) / self.c
        logdet = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
        nll = 0.5 * self.c * math.log(s2) + 0.5 * logdet + 0.5 * self.c * (1.0 + _LOG2PI)
        return nll, r, cho, alpha, s2, ell, g

    def value(self, theta) -> float:
        try:
            return self._parts(theta)[0]
        except IllConditionedError:
            return math.inf

    def value_and_grad(self, theta):
        try:
            nll, r, cho, alpha, s2, ell, g = self._parts(theta)
        except IllConditionedError:
            return 1e300, np.zeros(2)
        inv, info = lapack.dpotri(cho[0], lower=1)
        if info != 0:
            return nll, np.zeros(2)
        # dA/dlog(ell) has a zero diagonal, so tr(A^-1 dA) is twice the
        # strictly-lower sum; only the lower triangle of inv is valid.
        d_ell = r * self.d2 / (ell * ell)
        trace_term = 2.0 * float(np.sum(np.tril(inv * d_ell, -1)))
        grad_ell = 0.5 * trace_term - 0.5 * float(alpha @ d_ell @ alpha) / s2
        grad_g = 0.5 * g * float(np.sum(np.diag(inv))) - 0.5 * g * float(alpha @ alpha) / s2
        return nll, np.array([grad_ell, grad_g])

    def hyperparameters(self, theta) -> GpHyperparameters:
        _, _, _, _, s2, ell, g = self._parts(theta)
        return GpHyperparameters(ell, s2, g * s2)


_LOG_ELL_BOUNDS = (math.log(5e-3), math.log(20.0))
_LOG_G_BOUNDS = (math.log(1e-6), math.log(100.0))
_ELL_GRID = np.geomspace(0.01, 10.0, 6)
_G_GRID = np.geomspace(1e-6, 1.0, 4)
_START_MARGIN = 5.0


def _optimize_hyperparameters(x: np.ndarray, y: np.ndarray, n_starts: int = 2) -> GpHyperparameters:
    """Grid search over (lengthscale, noise ratio), then L-BFGS-B from the
    best grid points. Extra starts are refined only when they are not
    adjacent on the grid to an earlier start and score within
    ``_START_MARGIN`` nats of the best grid point, i.e. plausibly sit in a
    competing basin.
    """
    obj = _ProfiledLikelihood(x, y)
    grid = sorted(
        (obj.value((math.log(ell), math.log(g))), i, j)
        for i, ell in enumerate(_ELL_GRID)
        for j, g in enumerate(_G_GRID)
    )
    best_val, best_theta = math.inf, None
    refined: list[tuple[int, int]] = []
    for val, i, j in grid:
        if len(refined) == n_starts or not math.isfinite(val):
            break
        if refined and val > grid[0][0] + _START_MARGIN:
            break
        if any(abs(i - a) <= 1 and abs(j - b) <= 1 for a, b in refined):
            continue
        refined.append((i, j))
        theta = np.array([math.log(_ELL_GRID[i]), math.log(_G_GRID[j])])
        res = scipy.optimize.minimize(
            obj.value_and_grad,
            theta,
            jac=True,
            method="L-BFGS-B",
            bounds=[_LOG_ELL_BOUNDS, _LOG_G_BOUNDS],
            options={"maxiter": 60, "ftol": 1e-7},
        )
        cand_val, cand_theta = (res.fun, res.x) if res.fun <= val else (val, theta)
        if cand_val < best_val:
            best_val, best_theta = cand_val, cand_theta
    if best_theta is None:
        raise IllConditionedError("no grid point gave a factorizable kernel matrix")
    return obj.hyperparameters(best_theta)


def gp_fit(x, y, policy: GpPolicy = "optimize") -> GpModel:
    """Exact zero-mean GP regression with an RBF kernel.

    Inputs and targets are standardized first, so the prior mean is the
    training-target mean once predictions are mapped back. With
    ``policy="optimize"`` the hyperparameters maximize the exact log marginal
    likelihood (grid search followed by L-BFGS-B); passing a
    :class:`GpHyperparameters` instance fixes them.
    """
    x, y = _xy(x, y)
    if x.size == 0:
        raise InsufficientDataError("GP needs at least 1 observation")
    xs, x_mean, x_scale = _standardize(x)
    ys, y_mean, y_scale = _standardize(y)

    if isinstance(policy, GpHyperparameters):
        hyper = policy
    elif policy == "optimize":
        if np.all(ys == 0.0):
            # constant targets: the posterior mean is the constant for any kernel
            hyper = GpHyperparameters()
        else:
            hyper = _optimize_hyperparameters(xs, ys)
    else:
        raise DomainError(f"unknown GP policy {policy!r}")

    k = _rbf(xs, xs, hyper.lengthscale, hyper.signal_var) + hyper.noise_var * np.eye(xs.size)
    norm_y = float(np.linalg.norm(ys))
    for start in range(len(_JITTERS)):
        cho, jitter = _cholesky(k, start)
        kj = k + jitter * np.eye(xs.size) if jitter else k
        alpha = scipy.linalg.cho_solve(cho, ys, check_finite=False)
        alpha = alpha + scipy.linalg.cho_solve(cho, ys - kj @ alpha, check_finite=False)
        resid = float(np.linalg.norm(kj @ alpha - ys))
        if resid <= 1e-8 * norm_y or norm_y == 0.0:
            break
    else:
        raise IllConditionedError(f"GP solve residual {resid:.3g} exceeds tolerance")

    logdet = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
    lml = -0.5 * float(ys @ alpha) - 0.5 * logdet - 0.5 * xs.size * _LOG2PI
    return GpModel(
        x_train=xs,
        alpha=alpha,
        hyper=hyper,
        jitter=jitter,
        x_mean=x_mean,
        x_scale=x_scale,
        y_mean=y_mean,
        y_scale=y_scale,
        log_marginal_likelihood=lml,
    )


# -- FWOS --------------------------------------------------------------------


@dataclass(frozen=True)
class FwosModel(_PlaceModel):
    """Scaled lognormal cdf of changeover time.

    ``place = round(Phi((log x - mu) / sigma) * scale)`` clamped to
    ``[1, clamp_high]``, where ``scale = (1 + 1/c) * max(y)`` is the German
    tank estimate of the field size plus one.
    """

    params: LognormalParams
    scale: float
    clamp_high: int
    name: ClassVar[str] = "fwos"
    positive_inputs: ClassVar[bool] = True

    def __post_init__(self):
        self.params.require_nondegenerate()
        if not (self.scale > 0 and self.clamp_high >= 1):
            raise DomainError(f"invalid FWOS scale/clamp: {self.scale}, {self.clamp_high}")

    @property
    def n_hat(self) -> float:
        return self.scale - 1.0

    def _raw(self, x):
        z = (np.log(x) - self.params.mu) / self.params.sigma
        return norm_cdf_array(z) * self.scale

    def _finish(self, rounded):
        return np.clip(rounded, 1, self.clamp_high)

    def describe(self):
        return {
            "mu": self.params.mu,
            "sigma": self.params.sigma,
            "n_hat": self.n_hat,
            "scale": self.scale,
            "clamp_high": self.clamp_high,
        }


def fwos_fit(x, y) -> FwosModel:
    params = fit_lognormal_mle(np.asarray(x, dtype=np.float64).ravel())
    est = german_tank_umvue(np.asarray(y).ravel())
    if est.c != np.size(x):
        raise DomainError(f"x and y lengths differ: {np.size(x)} vs {est.c}")
    return FwosModel(params, est.scale, est.n_ceil)


# -- dispatch ----------------------------------------------------------------


def fit_model(
    name: str,
    train: TrainingSet,
    *,
    ridge_lambda: float = 1.0,
    gp_policy: GpPolicy = "optimize",
):
    if name == "ols":
        return ols_fit(train.x, train.y)
    if name == "gp":
        return gp_fit(train.x, train.y, gp_policy)
    if name == "ordinal":
        return ridge_fit(train.x, train.y, ridge_lambda)
    if name == "fwos":
        return fwos_fit(train.x, train.y)
    raise DomainError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
