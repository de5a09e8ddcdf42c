"""Structured Gaussian covariances, sampling and centred spectra.

A covariance is held as ``Sigma = V diag(lam) V^T``. The basis ``V`` is
either the identity, a random orthogonal matrix, or the Householder
reflection whose first column is ``1/sqrt(n)`` (``centering`` basis); the
last two are applied in O(n) or O(n^2) without ever diagonalising ``Sigma``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy.stats import ortho_group

from .errors import ParameterError

log = logging.getLogger(__name__)

DENSE_EIG_CAP = 4000
NEG_EIG_TOL = 1e-8
BULK_RATIO = 0.01
SPIKE_FACTOR = 100.0

BASES = ("centering", "random", "identity")


# --------------------------------------------------------------------------
# eigenvalue profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenProfile:
    """Named eigenvalue family ``lam_i = h(i, n)`` for ``i = 1..n``.

    ``kind`` is one of ``power`` (``(i/n)^p``), ``exponential``
    (``exp(sign * i / n^q)``), ``constant`` (``c``) or ``values`` (explicit list).
    """

    kind: str
    p: float = 1.0
    q: float = 1.0
    sign: float = 1.0
    c: float = 1.0
    values_: Optional[tuple] = None

    def values(self, n: int) -> np.ndarray:
        if self.kind == "values":
            vals = np.asarray(self.values_, dtype=float)
            if vals.size != n:
                raise ParameterError(f"eigenvalue list has {vals.size} entries, expected {n}")
            return vals
        return self.function(n)(np.arange(1, n + 1) / n)

    def function(self, n: int) -> Callable[[np.ndarray], np.ndarray]:
        """The profile as a function of ``x = i/n`` at sample size ``n``."""
        if self.kind == "power":
            return lambda x: np.asarray(x, dtype=float) ** self.p
        if self.kind == "exponential":
            rate = self.sign * n ** (1.0 - self.q)
            return lambda x: np.exp(rate * np.asarray(x, dtype=float))
        if self.kind == "constant":
            return lambda x: np.full(np.shape(x), float(self.c))
        if self.kind == "values":
            vals = self.values(n)
            return lambda x: vals[np.clip(np.ceil(np.asarray(x) * n).astype(int) - 1, 0, n - 1)]
        raise ParameterError(f"unknown eigenvalue profile {self.kind!r}")

    def label(self) -> str:
        if self.kind == "power":
            return f"(i/n)^{self.p:g}"
        if self.kind == "exponential":
            sgn = "" if self.sign > 0 else "-"
            return f"exp({sgn}i/n^{self.q:g})"
        if self.kind == "constant":
            return f"{self.c:g}"
        return "explicit"

    @classmethod
    def from_dict(cls, spec: dict, base_dir: Optional[Path] = None) -> "EigenProfile":
        kind = str(spec.get("profile", spec.get("kind", ""))).lower()
        if kind == "power":
            return cls("power", p=float(spec.get("p", 1.0)))
        if kind == "exponential":
            return cls("exponential", q=float(spec.get("q", 1.0)), sign=float(spec.get("sign", 1.0)))
        if kind == "constant":
            return cls("constant", c=float(spec.get("c", 1.0)))
        if kind in ("values", "file"):
            if "path" in spec:
                path = Path(spec["path"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                try:
                    vals = np.loadtxt(path, ndmin=1)
                except (OSError, ValueError) as exc:
                    raise ParameterError(f"cannot read eigenvalues from {path}: {exc}") from exc
            else:
                vals = np.asarray(spec["values"], dtype=float)
            return cls("values", values_=tuple(float(v) for v in np.ravel(vals)))
        raise ParameterError(f"unknown eigenvalue profile {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "power":
            return {"profile": "power", "p": self.p}
        if self.kind == "exponential":
            return {"profile": "exponential", "q": self.q, "sign": self.sign}
        if self.kind == "constant":
            return {"profile": "constant", "c": self.c}
        return {"profile": "values", "values": list(self.values_ or ())}


# --------------------------------------------------------------------------
# covariance models
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EigenSpec:
    n: int
    values: np.ndarray
    basis: str = "centering"
    seed: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.n,):
            raise ParameterError(f"expected {self.n} eigenvalues, got shape {vals.shape}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ParameterError("eigenvalues must be finite and nonnegative")
        if self.basis not in BASES:
            raise ParameterError(f"unknown basis {self.basis!r}")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class Equicorrelation:
    rho: float
    n: int


@dataclass(frozen=True)
class IdentityScaled:
    variance: float
    n: int


@dataclass(frozen=True, eq=False)
class FromEigenSpec:
    spec: EigenSpec

    @property
    def n(self) -> int:
        return self.spec.n


CovarianceModel = Union[Equicorrelation, IdentityScaled, FromEigenSpec]


def tilde_construction(n: int, tilde_values) -> EigenSpec:
    """``Sigma = (1/n) 1 1^T + sum_i lt_i v_{i+1} v_{i+1}^T`` on the centering basis.

    The centred spectrum of the result is ``tilde_values`` plus one zero.
    """
    tilde = np.asarray(tilde_values, dtype=float)
    if tilde.size != n - 1:
        raise ParameterError(f"need n-1 = {n - 1} centred eigenvalues, got {tilde.size}")
    return EigenSpec(n=n, values=np.concatenate([[1.0 / n], tilde]), basis="centering")


def sigma_squared_construction(n: int, sigma2: float) -> EigenSpec:
    """Spectrum with ``ceil(n / sigma2)`` unit centred eigenvalues, rest zero."""
    if sigma2 < 1:
        raise ParameterError("sigma^2 must be >= 1")
    l0 = min(math.ceil(n / sigma2), n - 1)
    tilde = np.zeros(n - 1)
    tilde[:l0] = 1.0
    return tilde_construction(n, tilde)


def spike_construction(n: int, exponent: float = 2.5) -> EigenSpec:
    """One centred eigenvalue ``n^exponent``, all others one."""
    tilde = np.ones(n - 1)
    tilde[0] = float(n) ** exponent
    return tilde_construction(n, tilde)


@dataclass(eq=False)
class CovarianceHandle:
    """Immutable covariance with its eigen-decomposition ``V diag(lam) V^T``."""

    n: int
    eigenvalues: np.ndarray
    basis: str
    model: CovarianceModel
    _V: Optional[np.ndarray] = field(default=None, repr=False)
    _house: Optional[np.ndarray] = field(default=None, repr=False)
    _matrix: Optional[np.ndarray] = field(default=None, repr=False)

    def apply_basis(self, z: np.ndarray) -> np.ndarray:
        """Return ``V z`` (``z`` may hold one vector per column)."""
        if self.basis == "identity":
            return np.array(z, dtype=float)
        if self.basis == "centering":
            u = self._house
            if u is None:
                return np.array(z, dtype=float)
            return z - np.multiply.outer(u, u @ z)
        return self._V @ z

    def basis_matrix(self) -> np.ndarray:
        if self.basis == "random":
            return self._V
        return self.apply_basis(np.eye(self.n))

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            V = self.basis_matrix()
            sigma = (V * self.eigenvalues) @ V.T
            sigma = 0.5 * (sigma + sigma.T)
            if isinstance(self.model, Equicorrelation):
                np.fill_diagonal(sigma, 1.0)
            sigma.setflags(write=False)
            self._matrix = sigma
        return self._matrix

    def same_basis(self, other: "CovarianceHandle") -> bool:
        """True when both covariances are diagonal in a common basis."""
        if self.n != other.n:
            return False
        if _is_flat(self) or _is_flat(other):
            return True
        if self.basis != other.basis:
            return False
        if self.basis == "random":
            return np.array_equal(self._V, other._V)
        return True


def _is_flat(h: CovarianceHandle) -> bool:
    # a multiple of the identity is diagonal in every basis
    return bool(np.ptp(h.eigenvalues) == 0)


def _householder_vector(n: int) -> Optional[np.ndarray]:
    # reflection H = I - u u^T (|u|^2 = 2) with H e_1 = 1/sqrt(n)
    w = np.full(n, 1.0 / math.sqrt(n))
    u = -w
    u[0] += 1.0
    norm = np.linalg.norm(u)
    if norm < 1e-15:
        return None
    return u * (math.sqrt(2.0) / norm)


def build_covariance(model: CovarianceModel) -> CovarianceHandle:
    if isinstance(model, Equicorrelation):
        rho, n = model.rho, model.n
        if not 0 < rho < 1:
            raise ParameterError("equicorrelation needs 0 < rho < 1")
        if n < 2:
            raise ParameterError("need n >= 2")
        lam = np.full(n, 1.0 - rho)
        lam[0] = 1.0 + (n - 1) * rho
        return CovarianceHandle(n, lam, "centering", model, _house=_householder_vector(n))
    if isinstance(model, IdentityScaled):
        if model.variance <= 0:
            raise ParameterError("variance must be positive")
        if model.n < 1:
            raise ParameterError("need n >= 1")
        return CovarianceHandle(model.n, np.full(model.n, float(model.variance)), "identity", model)
    if isinstance(model, FromEigenSpec):
        spec = model.spec
        if spec.n > DENSE_EIG_CAP and spec.basis == "random":
            raise ParameterError(f"dense random basis capped at n = {DENSE_EIG_CAP}")
        if spec.basis == "centering":
            return CovarianceHandle(spec.n, spec.values, "centering", model,
                                    _house=_householder_vector(spec.n))
        if spec.basis == "random":
            V = ortho_group.rvs(spec.n, random_state=np.random.default_rng(spec.seed)) \
                if spec.n > 1 else np.ones((1, 1))
            return CovarianceHandle(spec.n, spec.values, "random", model, _V=V)
        return CovarianceHandle(spec.n, spec.values, "identity", model)
    raise ParameterError(f"unknown covariance model {model!r}")


def sample_gaussian(handle: CovarianceHandle, rng: np.random.Generator,
                    size: Optional[int] = None) -> np.ndarray:
    """Draw from ``N(0, Sigma)`` as ``V diag(sqrt(lam)) z``; ``size`` rows if given."""
    root = np.sqrt(handle.eigenvalues)
    if size is None:
        return handle.apply_basis(root * rng.standard_normal(handle.n))
    z = rng.standard_normal((size, handle.n)) * root
    return handle.apply_basis(z.T).T


# --------------------------------------------------------------------------
# centred spectrum
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralSummary:
    tilde_eigs: np.ndarray
    a_n: float
    regime: str

    @property
    def n(self) -> int:
        return self.tilde_eigs.size

    @property
    def sum_sq(self) -> float:
        return float(np.sum(self.tilde_eigs**2))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "a_n": self.a_n,
            "regime": self.regime,
            "lambda1": float(self.tilde_eigs[0]),
            "lambda2": float(self.tilde_eigs[1]) if self.n > 1 else 0.0,
            "sum": float(self.tilde_eigs.sum()),
            "sum_sq": self.sum_sq,
        }


def classify_regime(tilde: np.ndarray) -> str:
    total_sq = float(np.sum(tilde**2))
    if total_sq == 0:
        return "neither"
    if tilde[0] ** 2 <= BULK_RATIO * total_sq:
        return "bulk"
    second = tilde[1] if tilde.size > 1 else 0.0
    if tilde[0] >= SPIKE_FACTOR * tilde.size * second:
        return "spike"
    return "neither"


def summarize_tilde(tilde: np.ndarray) -> SpectralSummary:
    tilde = np.sort(np.asarray(tilde, dtype=float))[::-1]
    n = tilde.size
    total_sq = float(np.sum(tilde**2))
    a_n = float(tilde.sum() / math.sqrt(n * total_sq)) if total_sq > 0 else 0.0
    return SpectralSummary(tilde_eigs=tilde, a_n=a_n, regime=classify_regime(tilde))


def tilde_spectrum(handle: CovarianceHandle) -> SpectralSummary:
    """Eigenvalues of ``J Sigma J`` (same nonzero spectrum as ``Sigma^1/2 J Sigma^1/2``)."""
    if handle.n > DENSE_EIG_CAP:
        raise ParameterError(f"dense eigendecomposition capped at n = {DENSE_EIG_CAP}")
    sigma = handle.matrix
    row = sigma.mean(axis=1)
    centred = sigma - row[:, None] - row[None, :] + row.mean()
    eig = np.linalg.eigvalsh(0.5 * (centred + centred.T))
    low = eig.min()
    if low < -NEG_EIG_TOL * max(1.0, abs(eig).max()):
        warnings.warn(f"J Sigma J has eigenvalue {low:.3e}; clamping to zero", RuntimeWarning)
    return summarize_tilde(np.clip(eig, 0.0, None))


# --------------------------------------------------------------------------
# quadratic-form concentration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcentrationReport:
    mean_ratio: float
    sd_ratio: float
    bound: float
    within_bound: float
    concentrates: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()


CONCENTRATION_SD = 0.1


def quadratic_form_concentration_check(eigs, reps: int, rng: np.random.Generator,
                                       chunk: int = 256) -> ConcentrationReport:
    """Sample ``Z^T A Z / E(Z^T A Z)`` for ``A`` with eigenvalues ``eigs``.

    ``concentrates`` is set when the empirical sd of the ratio is at most
    ``CONCENTRATION_SD``; ``within_bound`` is the fraction of draws with
    ``|ratio - 1| < 5 sqrt(2 sum lam^2) / sum lam``.
    """
    lam = np.asarray(eigs, dtype=float)
    if np.any(lam < 0) or not np.any(lam > 0):
        raise ParameterError("eigenvalues must be nonnegative and not all zero")
    total = lam.sum()
    ratios = np.empty(reps)
    for start in range(0, reps, chunk):
        k = min(chunk, reps - start)
        z = rng.standard_normal((k, lam.size))
        ratios[start:start + k] = (z**2 @ lam) / total
    bound = 5.0 * math.sqrt(2.0 * np.sum(lam**2)) / total
    sd = float(ratios.std(ddof=1)) if reps > 1 else 0.0
    return ConcentrationReport(
        mean_ratio=float(ratios.mean()),
        sd_ratio=sd,
        bound=bound,
        within_bound=float(np.mean(np.abs(ratios - 1.0) < bound)),
        concentrates=sd <= CONCENTRATION_SD,
    )


def covariance_from_dict(spec: dict, n: int, base_dir: Optional[Path] = None) -> CovarianceModel:
    """Parse a covariance model table from a config file."""
    kind = str(spec.get("covariance", "identity")).lower()
    if kind == "identity":
        return IdentityScaled(float(spec.get("variance", 1.0)), n)
    if kind == "equicorrelation":
        return Equicorrelation(float(spec["rho"]), n)
    if kind == "sigma_squared":
        return FromEigenSpec(sigma_squared_construction(n, float(spec["sigma2"])))
    if kind == "spike":
        return FromEigenSpec(spike_construction(n, float(spec.get("exponent", 2.5))))
    if kind == "eigenspec":
        profile = EigenProfile.from_dict(spec, base_dir)
        return FromEigenSpec(EigenSpec(n=n, values=profile.values(n),
                                       basis=str(spec.get("basis", "centering")),
                                       seed=int(spec.get("basis_seed", 0))))
    raise ParameterError(f"unknown covariance kind {kind!r}")
