"""Association statistics between two vectors and the no-intercept OLS fit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DegenerateInputError, DimensionError


@dataclass(frozen=True)
class AssociationSample:
    t_n: float
    rho_n: float
    scaled_t: float
    scaled_rho: float


@dataclass(frozen=True)
class OlsFit:
    beta_hat: float
    naive_var: float
    ci_low: float
    ci_high: float

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    @property
    def covers_zero(self) -> bool:
        return self.covers(0.0)


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"length mismatch: {x.size} vs {y.size}")
    return x, y


def sample_covariance(x, y) -> float:
    """``(1/n) sum (x_i - xbar)(y_i - ybar)``."""
    x, y = _pair(x, y)
    if x.size < 2:
        raise DimensionError("need at least two observations")
    return float(np.dot(x - x.mean(), y - y.mean()) / x.size)


def sample_correlation(x, y) -> float:
    x, y = _pair(x, y)
    if x.size < 2:
        raise DimensionError("need at least two observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx <= 0 or syy <= 0:
        raise DegenerateInputError("correlation undefined: a vector is constant")
    r = float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def association(x, y) -> AssociationSample:
    """All of ``T_n``, ``rho_n`` and their root-n scalings in one pass."""
    x, y = _pair(x, y)
    n = x.size
    t = sample_covariance(x, y)
    r = sample_correlation(x, y)
    root = math.sqrt(n)
    return AssociationSample(t_n=t, rho_n=r, scaled_t=root * t, scaled_rho=root * r)


def ols_fit(x, y, alpha: float = 0.05) -> OlsFit:
    """Regress ``y`` on ``x`` without intercept; naive i.i.d. variance and normal CI.

    ``naive_var = |e|^2 / (n |x|^2)`` with residuals ``e = y - x beta_hat``.
    """
    x, y = _pair(x, y)
    xx = float(np.dot(x, x))
    if xx <= 0:
        raise DegenerateInputError("OLS undefined: x is identically zero")
    beta_hat = float(np.dot(x, y)) / xx
    resid = y - x * beta_hat
    naive_var = float(np.dot(resid, resid)) / (x.size * xx)
    half = float(norm.ppf(1.0 - alpha / 2.0)) * math.sqrt(naive_var)
    return OlsFit(beta_hat=beta_hat, naive_var=naive_var,
                  ci_low=beta_hat - half, ci_high=beta_hat + half)


def ols_true_variance(x, sigma_eps) -> float:
    """Conditional variance ``x^T Sigma_eps x / |x|^4`` of the OLS slope."""
    x = np.asarray(x, dtype=float).ravel()
    sigma = np.asarray(sigma_eps, dtype=float)
    if sigma.shape != (x.size, x.size):
        raise DimensionError(f"Sigma_eps has shape {sigma.shape}, expected {(x.size, x.size)}")
    xx = float(np.dot(x, x))
    if xx <= 0:
        raise DegenerateInputError("x is identically zero")
    return float(x @ sigma @ x) / xx**2
