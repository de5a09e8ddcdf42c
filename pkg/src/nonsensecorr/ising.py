"""Samplers for binary Ising models ``P(x) ~ exp((beta/2) x^T Q x)``.

Spin vectors are ``int8`` arrays with entries in {-1, +1}. Exact samplers
exist for the Curie-Weiss model and for tiny systems (exhaustive
enumeration); everything else goes through Wolff cluster updates (lattices)
or heat-bath Glauber dynamics (dense graphs).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import expit, gammaln, logsumexp

from . import _kernels
from .errors import ParameterError, SizeError, UnsupportedDimensionError
from .graphs import DENSE_REGULAR, CurieWeiss, InteractionMatrix, Lattice

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 20
MAGNETIZATION_TOL = 1e-12
BETA_C_2D = 2.0 * math.log(1.0 + math.sqrt(2.0))

METHODS = ("exact_cw", "wolff", "glauber", "brute_force")

# burn-in defaults: Wolff in clusters, Glauber in sweeps
WOLFF_BURN_IN = 200
GLAUBER_BURN_IN_SUB = 500
GLAUBER_BURN_IN_SUPER = 2000
# Wolff burn-in also continues until this many n-site volumes were flipped;
# at high temperature clusters are tiny and 200 of them barely touch the lattice.
WOLFF_MIN_VOLUME_SWEEPS = 20

_UNIFORM_CHUNK = 1 << 16


def beta_critical(dim: int) -> float:
    """Critical inverse temperature of the hypercubic lattice, in the lattice beta units."""
    if dim == 1:
        return math.inf
    if dim == 2:
        return BETA_C_2D
    raise UnsupportedDimensionError(f"no closed-form critical point for dim={dim}")


@dataclass(frozen=True)
class IsingModel:
    Q: InteractionMatrix
    beta: float

    def __post_init__(self):
        if not self.beta >= 0:
            raise ParameterError(f"beta must be nonnegative, got {self.beta}")

    @property
    def n(self) -> int:
        return self.Q.n

    @property
    def edge_couplings(self) -> np.ndarray:
        """Per-edge couplings ``K_ij`` so that the log-weight is ``sum_{i<j} 2 K_ij x_i x_j / 2``."""
        return self.beta * self.Q.beta_scale * self.Q.weights

    def log_weight(self, x: np.ndarray) -> float:
        return 0.5 * self.beta * self.Q.beta_scale * self.Q.quadratic_form(x)


@dataclass(frozen=True)
class SamplerPlan:
    """How to draw spins: method, burn-in, thinning and seed.

    ``burn_in`` counts clusters for Wolff and sweeps for Glauber; ``thin`` is
    the number of clusters/sweeps between kept samples. ``None`` picks the
    method default.
    """

    method: str = "glauber"
    burn_in: Optional[int] = None
    thin: int = 1
    seed: int = 0
    min_volume_sweeps: int = WOLFF_MIN_VOLUME_SWEEPS
    two_well: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown sampler method {self.method!r}")
        if self.thin < 1:
            raise ParameterError("thin must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ParameterError("burn_in must be >= 0")

    def resolved_burn_in(self, beta: float) -> int:
        if self.burn_in is not None:
            return self.burn_in
        if self.method == "wolff":
            return WOLFF_BURN_IN
        if self.method == "glauber":
            return GLAUBER_BURN_IN_SUPER if beta > 1 else GLAUBER_BURN_IN_SUB
        return 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def uses_two_well_start(model: IsingModel, plan: SamplerPlan) -> bool:
    """Glauber on a dense regular family above beta = 1 starts in one of the two wells."""
    return (plan.method == "glauber" and plan.two_well and model.beta > 1
            and isinstance(model.Q.family, DENSE_REGULAR))


# --------------------------------------------------------------------------
# magnetization
# --------------------------------------------------------------------------

def solve_magnetization(beta: float) -> float:
    """Positive root of ``m = tanh(beta m)``; zero for ``beta <= 1``."""
    if beta < 0:
        raise ParameterError("beta must be nonnegative")
    if beta <= 1:
        return 0.0
    lo, hi = 1e-12, 1.0
    if math.tanh(beta * lo) - lo <= 0:
        return lo
    while hi - lo > MAGNETIZATION_TOL / 4:
        mid = 0.5 * (lo + hi)
        if math.tanh(beta * mid) - mid > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# exact samplers
# --------------------------------------------------------------------------

def curie_weiss_count_pmf(n: int, beta: float) -> np.ndarray:
    """Exact pmf of the number ``k`` of +1 spins under the Curie-Weiss model."""
    k = np.arange(n + 1)
    logw = (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
            + beta * (2 * k - n) ** 2 / (2.0 * n))
    return np.exp(logw - logsumexp(logw))


class CurieWeissSampler:
    """Exact sampler: draw the +1 count, then scatter it uniformly."""

    def __init__(self, n: int, beta: float):
        if n < 2:
            raise ParameterError("Curie-Weiss needs n >= 2")
        if beta < 0:
            raise ParameterError("beta must be nonnegative")
        self.n = n
        self.beta = beta
        self.pmf = curie_weiss_count_pmf(n, beta)
        self._cdf = np.cumsum(self.pmf)
        self._cdf[-1] = 1.0

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        k = int(np.searchsorted(self._cdf, rng.random(), side="right"))
        x = np.full(self.n, -1, dtype=np.int8)
        x[rng.permutation(self.n)[:k]] = 1
        return x

    def draws(self, rng: np.random.Generator, count: int) -> np.ndarray:
        k = np.searchsorted(self._cdf, rng.random(count), side="right")
        keys = rng.random((count, self.n))
        ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
        return np.where(ranks < k[:, None], 1, -1).astype(np.int8)


def sample_curie_weiss(n: int, beta: float, rng: np.random.Generator) -> np.ndarray:
    return CurieWeissSampler(n, beta).draw(rng)


def sample_curie_weiss_auxiliary(n: int, beta: float, rng: np.random.Generator,
                                 size: Optional[int] = None,
                                 grid_points: int = 20001) -> np.ndarray:
    """Curie-Weiss draws through the Gaussian auxiliary variable.

    Given ``Z = z`` the spins are i.i.d. with ``P(x_i = +1) = sigmoid(2 beta z)``;
    ``Z`` is drawn from its marginal ``exp(-n beta z^2 / 2) cosh(beta z)^n`` by
    inverting a tabulated CDF. Used as an independent cross-check of the
    exact count sampler. Returns one vector, or ``size`` rows.
    """
    count = 1 if size is None else size
    if beta == 0:
        p_plus = np.full((count, 1), 0.5)
    else:
        sd = 1.0 / math.sqrt(n * beta)
        edge = 1.0 + 10.0 * sd
        z = np.linspace(-edge, edge, grid_points)
        logd = -0.5 * n * beta * z**2 + n * np.logaddexp(beta * z, -beta * z)
        dens = np.exp(logd - logd.max())
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(z))])
        cdf /= cdf[-1]
        zval = np.interp(rng.random(count), cdf, z)
        p_plus = expit(2.0 * beta * zval)[:, None]
    x = np.where(rng.random((count, n)) < p_plus, 1, -1).astype(np.int8)
    return x[0] if size is None else x


@dataclass(frozen=True, eq=False)
class SpinPmf:
    """Exact distribution over ``{-1,+1}^n``; bit ``i`` of a state code is ``x_i = +1``."""

    n: int
    probs: np.ndarray

    def states(self) -> np.ndarray:
        return codes_to_spins(np.arange(2**self.n), self.n)

    def magnetization_pmf(self) -> np.ndarray:
        """Probability of each +1 count ``k = 0..n``."""
        counts = popcount(np.arange(2**self.n))
        return np.bincount(counts, weights=self.probs, minlength=self.n + 1)

    def prob(self, x: np.ndarray) -> float:
        return float(self.probs[spins_to_codes(np.atleast_2d(x))[0]])


def codes_to_spins(codes: np.ndarray, n: int) -> np.ndarray:
    bits = (np.asarray(codes)[:, None] >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def spins_to_codes(spins: np.ndarray) -> np.ndarray:
    spins = np.atleast_2d(spins)
    weights = np.left_shift(1, np.arange(spins.shape[1], dtype=np.int64))
    return ((spins > 0).astype(np.int64) * weights).sum(axis=1)


def popcount(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    counts = np.zeros_like(codes)
    while np.any(codes):
        counts += codes & 1
        codes = codes >> 1
    return counts


def brute_force_pmf(model: IsingModel) -> SpinPmf:
    """Exact probabilities by summing over all ``2^n`` states (test oracle)."""
    n = model.n
    if n > BRUTE_FORCE_MAX_N:
        raise SizeError(f"brute force enumeration limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    x = codes_to_spins(np.arange(2**n), n).astype(float)
    Qd = model.Q.to_dense()
    logw = 0.5 * model.beta * model.Q.beta_scale * np.einsum("si,ij,sj->s", x, Qd, x)
    return SpinPmf(n=n, probs=np.exp(logw - logsumexp(logw)))


def empirical_state_pmf(samples: np.ndarray) -> np.ndarray:
    samples = np.atleast_2d(samples)
    n = samples.shape[1]
    counts = np.bincount(spins_to_codes(samples), minlength=2**n)
    return counts / counts.sum()


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# --------------------------------------------------------------------------
# MCMC
# --------------------------------------------------------------------------

def _random_start(n: int, rng: np.random.Generator) -> np.ndarray:
    return np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)


class _UniformBuffer:
    def __init__(self, rng: np.random.Generator, chunk: int):
        self.rng = rng
        self.chunk = chunk
        self.buf = rng.random(chunk)
        self.pos = 0

    def refill(self):
        self.buf = np.concatenate([self.buf[self.pos:], self.rng.random(self.chunk)])
        self.pos = 0


class WolffChain:
    """Wolff cluster chain on a (weighted) neighbour-list graph."""

    def __init__(self, model: IsingModel, rng: np.random.Generator,
                 start: Optional[np.ndarray] = None):
        Q = model.Q
        if isinstance(Q.family, Lattice) and Q.family.dim not in (1, 2, 3):
            raise UnsupportedDimensionError(f"Wolff sampler supports dim 1-3, got {Q.family.dim}")
        self.model = model
        self.rng = rng
        self.spins = _random_start(Q.n, rng) if start is None else np.array(start, dtype=np.int8)
        if np.any(Q.weights < 0):
            raise ParameterError("Wolff updates need nonnegative couplings")
        self.p_add = -np.expm1(-2.0 * model.edge_couplings)
        self._stack = np.empty(Q.n, dtype=np.int64)
        self._uniforms = _UniformBuffer(rng, max(_UNIFORM_CHUNK, 4 * (Q.indices.size + 1)))
        self._empty = np.empty((0, Q.n), dtype=np.int8)

    def _run(self, clusters: int, record_every: int = 0, out=None) -> tuple[int, int]:
        Q = self.model.Q
        out = self._empty if out is None else out
        done = volume = n_out = 0
        ub = self._uniforms
        while done < clusters:
            k, ub.pos, vol, n_out = _kernels.wolff_clusters(
                self.spins, Q.indptr, Q.indices, self.p_add, ub.buf, ub.pos,
                clusters - done, self._stack, record_every, done, out, n_out)
            done += k
            volume += vol
            if done < clusters:
                ub.refill()
        return volume, n_out

    def burn_in(self, clusters: int, min_volume_sweeps: int = 0):
        if self.model.beta == 0:
            return
        volume, _ = self._run(clusters)
        target = min_volume_sweeps * self.model.n
        while volume < target:
            v, _ = self._run(max(64, clusters))
            volume += v

    def samples(self, count: int, every: int) -> np.ndarray:
        out = np.empty((count, self.model.n), dtype=np.int8)
        _, got = self._run(count * every, record_every=every, out=out)
        assert got == count
        return out


class GlauberChain:
    """Heat-bath single-site dynamics with a fresh random order every sweep."""

    def __init__(self, model: IsingModel, rng: np.random.Generator,
                 start: Optional[np.ndarray] = None):
        Q = model.Q
        self.model = model
        self.rng = rng
        self.spins = _random_start(Q.n, rng) if start is None else np.array(start, dtype=np.int8)
        self.couplings = model.edge_couplings
        self.field = _kernels.local_fields(self.spins, Q.indptr, Q.indices, self.couplings)
        self._empty = np.empty((0, Q.n), dtype=np.int8)
        self._batch = max(1, 200_000 // max(Q.n, 1))

    def _sweeps(self, sweeps: int, record_every: int = 0, out=None) -> int:
        Q = self.model.Q
        n = Q.n
        out = self._empty if out is None else out
        n_out = 0
        remaining = sweeps
        base = np.arange(n)
        while remaining > 0:
            k = min(remaining, self._batch)
            if record_every > 0:
                k = max(record_every, (k // record_every) * record_every)
                k = min(k, remaining)
            orders = self.rng.permuted(np.broadcast_to(base, (k, n)), axis=1)
            uniforms = self.rng.random((k, n))
            n_out = _kernels.heat_bath_sweeps(
                self.spins, self.field, Q.indptr, Q.indices, self.couplings,
                orders, uniforms, record_every, out[n_out:], 0) + n_out
            remaining -= k
        return n_out

    def burn_in(self, sweeps: int):
        self._sweeps(sweeps)

    def samples(self, count: int, every: int) -> np.ndarray:
        out = np.empty((count, self.model.n), dtype=np.int8)
        got = self._sweeps(count * every, record_every=every, out=out)
        assert got == count
        return out


def _check_plan(model: IsingModel, plan: SamplerPlan):
    if plan.method == "brute_force" and model.n > BRUTE_FORCE_MAX_N:
        raise SizeError(f"brute force sampling limited to n <= {BRUTE_FORCE_MAX_N}")
    if plan.method == "exact_cw" and not isinstance(model.Q.family, CurieWeiss):
        raise ParameterError("exact_cw sampler requires the Curie-Weiss family")


def _glauber_start(model: IsingModel, plan: SamplerPlan, replicate: int,
                   rng: np.random.Generator) -> Optional[np.ndarray]:
    if uses_two_well_start(model, plan):
        sign = 1 if replicate % 2 == 0 else -1
        return np.full(model.n, sign, dtype=np.int8)
    return None


def sample_lattice_wolff(model: IsingModel, plan: SamplerPlan,
                         rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """One Wolff draw from a uniform random start after the burn-in."""
    if not isinstance(model.Q.family, Lattice):
        raise ParameterError("sample_lattice_wolff requires a lattice interaction")
    rng = plan.rng() if rng is None else rng
    chain = WolffChain(model, rng)
    chain.burn_in(plan.resolved_burn_in(model.beta), plan.min_volume_sweeps)
    return chain.spins.copy()


def sample_glauber(model: IsingModel, plan: SamplerPlan,
                   rng: Optional[np.random.Generator] = None, replicate: int = 0) -> np.ndarray:
    """One Glauber draw after ``burn_in`` sweeps.

    Above beta = 1 on dense regular families the chain starts at all-plus for
    even ``replicate`` and all-minus for odd ones (heuristic two-well start).
    """
    rng = plan.rng() if rng is None else rng
    chain = GlauberChain(model, rng, start=_glauber_start(model, plan, replicate, rng))
    chain.burn_in(plan.resolved_burn_in(model.beta))
    return chain.spins.copy()


def sample_ising(model: IsingModel, plan: SamplerPlan, rng: np.random.Generator,
                 replicate: int = 0) -> np.ndarray:
    """Dispatch one independent draw according to ``plan.method``."""
    _check_plan(model, plan)
    if plan.method == "exact_cw":
        return CurieWeissSampler(model.n, model.beta).draw(rng)
    if plan.method == "wolff":
        chain = WolffChain(model, rng)
        chain.burn_in(plan.resolved_burn_in(model.beta), plan.min_volume_sweeps)
        return chain.spins.copy()
    if plan.method == "glauber":
        return sample_glauber(model, plan, rng, replicate)
    pmf = brute_force_pmf(model)
    code = rng.choice(pmf.probs.size, p=pmf.probs)
    return codes_to_spins(np.array([code]), model.n)[0]


def sample_stream(model: IsingModel, plan: SamplerPlan, count: int,
                  rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """``count`` kept samples from one chain (or i.i.d. for exact methods)."""
    _check_plan(model, plan)
    rng = plan.rng() if rng is None else rng
    if plan.method == "exact_cw":
        return CurieWeissSampler(model.n, model.beta).draws(rng, count)
    if plan.method == "brute_force":
        pmf = brute_force_pmf(model)
        return codes_to_spins(rng.choice(pmf.probs.size, size=count, p=pmf.probs), model.n)
    if plan.method == "wolff":
        chain = WolffChain(model, rng)
        chain.burn_in(plan.resolved_burn_in(model.beta), plan.min_volume_sweeps)
        return chain.samples(count, plan.thin)
    chain = GlauberChain(model, rng, start=_glauber_start(model, plan, 0, rng))
    chain.burn_in(plan.resolved_burn_in(model.beta))
    return chain.samples(count, plan.thin)


def with_method(plan: SamplerPlan, method: str) -> SamplerPlan:
    return replace(plan, method=method)
