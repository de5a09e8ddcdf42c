"""Limiting laws of the association statistics and the OLS validity condition."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import NoPredictionError, OutOfRegimeError, ParameterError
from .gaussian import SpectralSummary
from .ising import beta_critical, solve_magnetization

SIMPSON_POINTS = 100_001
EXACT_RTOL = 1e-9
AB_UPPER = 40.0  # 2 phi(b) is below 1e-340 past here

LAWS = ("normal", "normal_times_chi", "rademacher", "unknown")
STATISTICS = ("scaled_covariance", "scaled_correlation", "raw_correlation", "ols_validity")


@dataclass(frozen=True)
class LimitPrediction:
    """Predicted limit law of one statistic.

    ``variance`` is set for ``normal``; ``scale`` multiplies ``A*B`` for
    ``normal_times_chi``; ``direction`` ("inflated"/"unchanged"/"deflated")
    qualifies ``unknown`` laws.
    """

    statistic: str
    law: str
    source: str
    variance: Optional[float] = None
    scale: Optional[float] = None
    direction: Optional[str] = None
    heuristic: bool = False

    def __post_init__(self):
        if self.law not in LAWS:
            raise ParameterError(f"unknown law {self.law!r}")
        if self.variance is not None and self.variance < 0:
            raise ParameterError("variance must be nonnegative")

    @property
    def is_normal(self) -> bool:
        return self.law == "normal"

    def type1_rate(self, alpha: float = 0.05) -> Optional[float]:
        """Rejection rate of the naive ``|stat| > z_{1-alpha/2}`` test under this law."""
        if self.law != "normal" or self.variance is None:
            return None
        if self.variance == 0:
            return 0.0
        z = norm.ppf(1 - alpha / 2)
        return float(2 * norm.sf(z / math.sqrt(self.variance)))

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def normal(statistic: str, variance: float, source: str, **kw) -> LimitPrediction:
    return LimitPrediction(statistic, "normal", source, variance=float(variance), **kw)


def predict_curie_weiss(beta1: float, beta2: float) -> tuple[LimitPrediction, LimitPrediction]:
    """Dense regular (Curie-Weiss class) limits of root-n covariance and correlation."""
    if beta1 < 0 or beta2 < 0:
        raise ParameterError("betas must be nonnegative")
    m1 = solve_magnetization(beta1)
    m2 = solve_magnetization(beta2)
    cov = normal("scaled_covariance", (1 - m1 * m1) * (1 - m2 * m2),
                 "Curie-Weiss CLT: variance (1-m1^2)(1-m2^2)")
    corr = normal("scaled_correlation", 1.0, "Curie-Weiss: root-n correlation is N(0,1)")
    return cov, corr


def predict_lattice(beta1: float, beta2: float, dim: int) -> tuple[LimitPrediction, LimitPrediction]:
    """Lattice limits: unit variance only at beta = 0, otherwise inflated (value open)."""
    if dim not in (1, 2):
        raise OutOfRegimeError(f"lattice predictions only for dim 1 or 2, got {dim}")
    bc = beta_critical(dim)
    for b in (beta1, beta2):
        if b < 0:
            raise ParameterError("betas must be nonnegative")
        if b >= bc:
            raise OutOfRegimeError(f"beta={b} is not below beta_c({dim})={bc:.4f}")
    source = "lattice: root-n covariance and correlation share an N(0, v^2) limit"
    if beta1 == 0 and beta2 == 0:
        return (normal("scaled_covariance", 1.0, source),
                normal("scaled_correlation", 1.0, source))
    if beta1 == 0 or beta2 == 0:
        # one factor i.i.d.: sum_k C_X(k) C_Y(k) reduces to the k = 0 term
        return (normal("scaled_covariance", 1.0, source),
                normal("scaled_correlation", 1.0, source))
    return (LimitPrediction("scaled_covariance", "unknown", source, direction="inflated"),
            LimitPrediction("scaled_correlation", "unknown", source, direction="inflated"))


def predict_gaussian(spectral: SpectralSummary) -> tuple[LimitPrediction, LimitPrediction]:
    """Gaussian limits from the centred spectrum ``lambda~``.

    Bulk regime: root-n covariance ~ N(0, sum lambda~^2 / n), root-n
    correlation ~ N(0, 1/a_n^2). Spike regime: ``n T_n / lambda~_1 -> A B`` and
    the raw correlation tends to a Rademacher law.
    """
    n = spectral.n
    if spectral.regime == "bulk":
        cov = normal("scaled_covariance", spectral.sum_sq / n,
                     "Gaussian bulk: n T_n / sqrt(sum lambda~^2) -> N(0,1)")
        corr = normal("scaled_correlation", 1.0 / spectral.a_n**2,
                      "Gaussian bulk: sqrt(n) rho_n a_n -> N(0,1)")
        return cov, corr
    if spectral.regime == "spike":
        lam1 = float(spectral.tilde_eigs[0])
        cov = LimitPrediction("scaled_covariance", "normal_times_chi",
                              "Gaussian spike: n T_n / lambda~_1 -> A B",
                              scale=lam1 / math.sqrt(n))
        corr = LimitPrediction("raw_correlation", "rademacher",
                               "Gaussian spike: rho_n -> Rademacher")
        return cov, corr
    raise NoPredictionError("centred spectrum is between the bulk and spike regimes")


def predict_independent() -> tuple[LimitPrediction, LimitPrediction]:
    src = "independent coordinates"
    return normal("scaled_covariance", 1.0, src), normal("scaled_correlation", 1.0, src)


# --------------------------------------------------------------------------
# normal-times-chi law
# --------------------------------------------------------------------------

def ab_cdf(t) -> np.ndarray:
    """CDF of ``A*B`` with ``A ~ N(0,1)``, ``B ~ |N(0,1)|`` independent.

    ``P(AB <= t) = int_0^inf Phi(t/b) 2 phi(b) db``, one vector-valued
    adaptive quadrature over all requested points.
    """
    arr = np.asarray(t, dtype=float)
    flat = arr.ravel()

    def integrand(b: float) -> np.ndarray:
        if b == 0.0:
            return np.where(flat > 0, 1.0, np.where(flat < 0, 0.0, 0.5)) * 2.0 * norm.pdf(0.0)
        return norm.cdf(flat / b) * 2.0 * norm.pdf(b)

    val, _ = integrate.quad_vec(integrand, 0.0, AB_UPPER, epsabs=1e-12, epsrel=1e-10,
                                limit=2000)
    out = np.clip(val, 0.0, 1.0)
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


# --------------------------------------------------------------------------
# OLS validity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OlsConditionReport:
    int_fg: float
    int_f: float
    int_g: float
    verdict: str
    riemann_fg: float
    riemann_f: float
    riemann_g: float
    n: int

    @property
    def ratio(self) -> float:
        """Asymptotic true-to-naive variance ratio ``int fg / (int f int g)``."""
        return self.int_fg / (self.int_f * self.int_g)

    @property
    def finite_ratio(self) -> float:
        return self.riemann_fg / (self.riemann_f * self.riemann_g)

    def predicted_coverage(self, alpha: float = 0.05, finite: bool = True) -> float:
        r = self.finite_ratio if finite else self.ratio
        z = norm.ppf(1 - alpha / 2)
        return float(2 * norm.cdf(z / math.sqrt(r)) - 1)

    @property
    def direction(self) -> str:
        """Expected coverage direction: below, above or at the nominal level."""
        return {"anticonservative": "below", "valid": "above", "exact": "nominal"}[self.verdict]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        d["finite_ratio"] = self.finite_ratio
        return d


def _classify(fg: float, f: float, g: float) -> str:
    prod = f * g
    if abs(fg - prod) < EXACT_RTOL * prod:
        return "exact"
    return "valid" if fg < prod else "anticonservative"


def ols_condition(f: Callable, g: Callable, n: int) -> OlsConditionReport:
    """Evaluate ``int f g <= int f int g`` for eigenvalue profiles on [0, 1].

    Riemann sums ``(1/n) sum h(i/n)`` use the experiment's own grid; the
    verdict comes from composite Simpson integrals on ``SIMPSON_POINTS`` nodes.
    """
    if n < 1:
        raise ParameterError("grid size must be positive")
    grid = np.arange(1, n + 1) / n
    fv = np.broadcast_to(np.asarray(f(grid), dtype=float), grid.shape)
    gv = np.broadcast_to(np.asarray(g(grid), dtype=float), grid.shape)
    fine = np.linspace(0.0, 1.0, SIMPSON_POINTS)
    ff = np.broadcast_to(np.asarray(f(fine), dtype=float), fine.shape)
    gf = np.broadcast_to(np.asarray(g(fine), dtype=float), fine.shape)
    if min(fv.min(), gv.min(), ff.min(), gf.min()) < 0:
        raise ParameterError("eigenvalue functions must be nonnegative on [0, 1]")
    int_f = float(integrate.simpson(ff, x=fine))
    int_g = float(integrate.simpson(gf, x=fine))
    int_fg = float(integrate.simpson(ff * gf, x=fine))
    return OlsConditionReport(
        int_fg=int_fg, int_f=int_f, int_g=int_g,
        verdict=_classify(int_fg, int_f, int_g),
        riemann_fg=float(np.mean(fv * gv)), riemann_f=float(np.mean(fv)),
        riemann_g=float(np.mean(gv)), n=n,
    )
