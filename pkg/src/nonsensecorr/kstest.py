"""One-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value."""

from __future__ import annotations

import math
from typing import Callable, Union

import numpy as np
from scipy.stats import norm

from .errors import NoPredictionError, ParameterError
from .theory import LimitPrediction, ab_cdf

SERIES_TERMS = 100
MIN_SAMPLES = 100


def kolmogorov_sf(x: float) -> float:
    """``P(K > x)`` for the Kolmogorov distribution.

    Uses the alternating series ``2 sum (-1)^(k-1) exp(-2 k^2 x^2)`` for
    ``x >= 1`` and the theta-function form of the CDF below that; both are
    truncated at ``SERIES_TERMS`` terms.
    """
    if x <= 0:
        return 1.0
    k = np.arange(1, SERIES_TERMS + 1)
    if x >= 1.0:
        terms = np.exp(-2.0 * k**2 * x * x) * np.where(k % 2 == 1, 1.0, -1.0)
        return float(min(1.0, max(0.0, 2.0 * terms.sum())))
    odd = 2 * k - 1
    cdf = math.sqrt(2 * math.pi) / x * np.exp(-(odd**2) * math.pi**2 / (8.0 * x * x)).sum()
    return float(min(1.0, max(0.0, 1.0 - cdf)))


def ks_distance(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def law_cdf(law: Union[LimitPrediction, Callable]) -> Callable[[np.ndarray], np.ndarray]:
    if callable(law) and not isinstance(law, LimitPrediction):
        return law
    if law.law == "normal":
        if not law.variance or law.variance <= 0:
            raise ParameterError("KS needs a normal law with positive variance")
        sd = math.sqrt(law.variance)
        return lambda x: norm.cdf(np.asarray(x) / sd)
    if law.law == "normal_times_chi":
        scale = law.scale if law.scale else 1.0
        return lambda x: ab_cdf(np.asarray(x) / scale)
    raise NoPredictionError(f"KS test not applicable to a {law.law} law")


def ks_test(samples, law) -> tuple[float, float]:
    """KS distance and asymptotic p-value of ``samples`` against ``law``.

    ``law`` is a ``LimitPrediction`` (normal or normal-times-chi) or a CDF.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < MIN_SAMPLES:
        raise ParameterError(f"KS test needs at least {MIN_SAMPLES} samples")
    d = ks_distance(samples, law_cdf(law))
    return d, kolmogorov_sf(math.sqrt(samples.size) * d)
