"""Interaction structures for the Ising models.

Every family is stored as a symmetric, hollow coupling matrix in CSR form
(``indptr``/``indices``/``weights``). Dense arrays are produced on demand,
except for lattices above ``DENSE_LATTICE_CAP`` vertices.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ConstructionError, ParameterError

DENSE_LATTICE_CAP = 4096
REGULARITY_TOL = 1e-12
RANDOM_REGULAR_RETRIES = 1000
_MAX_REPAIR_ROUNDS = 200

# Per-edge coupling of the lattice model is beta / 4, so that the square
# lattice orders at beta_c(2) = 2 log(1 + sqrt 2) (Onsager's K_c = log(1+sqrt 2)/2).
LATTICE_BETA_SCALE = 0.25


@dataclass(frozen=True)
class Lattice:
    side: int
    dim: int = 2

    @property
    def n(self) -> int:
        return self.side**self.dim


@dataclass(frozen=True)
class CurieWeiss:
    n: int


@dataclass(frozen=True)
class CompleteBipartite:
    n: int


@dataclass(frozen=True)
class RandomRegular:
    n: int
    degree: int
    seed: int = 0


@dataclass(frozen=True, eq=False)
class ExplicitMatrix:
    values: np.ndarray
    path: Optional[str] = None

    @property
    def n(self) -> int:
        return int(np.asarray(self.values).shape[0])

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExplicitMatrix":
        """Read a whitespace-separated dense matrix, one row per line."""
        try:
            values = np.loadtxt(path, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ParameterError(f"cannot read interaction matrix {path}: {exc}") from exc
        return cls(values, path=str(path))


GraphFamily = Union[Lattice, CurieWeiss, CompleteBipartite, RandomRegular, ExplicitMatrix]

DENSE_REGULAR = (CurieWeiss, CompleteBipartite, RandomRegular)


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Symmetric hollow coupling matrix ``Q`` with CSR neighbour lists."""

    family: GraphFamily
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    beta_scale: float = 1.0
    _dense: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.weights):
            arr.setflags(write=False)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def row_sums(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n), self.degrees)
        return np.bincount(rows, weights=self.weights, minlength=self.n)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    @property
    def is_lattice(self) -> bool:
        return isinstance(self.family, Lattice)

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        if self.is_lattice and self.n > DENSE_LATTICE_CAP:
            raise ParameterError(
                f"refusing to densify a {self.n}-vertex lattice (cap {DENSE_LATTICE_CAP})"
            )
        dense = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.degrees)
        dense[rows, self.indices] = self.weights
        dense.setflags(write=False)
        object.__setattr__(self, "_dense", dense)
        return dense

    def quadratic_form(self, x: np.ndarray) -> float:
        """Return ``x^T Q x``."""
        x = np.asarray(x, dtype=float)
        rows = np.repeat(np.arange(self.n), self.degrees)
        return float(np.sum(self.weights * x[rows] * x[self.indices]))


@dataclass(frozen=True)
class AssumptionReport:
    is_regular: bool
    max_entry_times_n: float
    frobenius_sq: float
    known_spectral_gap: Optional[bool] = None

    def to_dict(self) -> dict:
        d = {
            "is_regular": self.is_regular,
            "max_entry_times_n": self.max_entry_times_n,
            "frobenius_sq": self.frobenius_sq,
        }
        if self.known_spectral_gap is not None:
            d["known_spectral_gap"] = self.known_spectral_gap
        return d


def _from_dense(family, dense: np.ndarray, beta_scale: float = 1.0) -> InteractionMatrix:
    n = dense.shape[0]
    rows, cols = np.nonzero(dense)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=n))])
    dense = np.array(dense, dtype=float)
    dense.setflags(write=False)
    return InteractionMatrix(
        family=family,
        n=n,
        indptr=indptr.astype(np.int64),
        indices=cols.astype(np.int64),
        weights=dense[rows, cols].astype(float),
        beta_scale=beta_scale,
        _dense=dense,
    )


def _from_edges(family, n: int, edges: np.ndarray, weight: float, beta_scale: float = 1.0):
    """Build CSR from an (m, 2) array of undirected edges with a common weight."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.concatenate([[0], np.cumsum(np.bincount(src, minlength=n))])
    return InteractionMatrix(
        family=family,
        n=n,
        indptr=indptr.astype(np.int64),
        indices=dst,
        weights=np.full(dst.shape, weight, dtype=float),
        beta_scale=beta_scale,
    )


def lattice_edges(side: int, dim: int) -> np.ndarray:
    """Nearest-neighbour pairs of the free-boundary box ``{0..side-1}^dim``.

    Vertices are numbered in C order of their coordinates.
    """
    shape = (side,) * dim
    index = np.arange(side**dim).reshape(shape)
    pairs = []
    for axis in range(dim):
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        lo[axis] = slice(0, side - 1)
        hi[axis] = slice(1, side)
        pairs.append(np.stack([index[tuple(lo)].ravel(), index[tuple(hi)].ravel()], axis=1))
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(pairs)


def _random_regular_edges(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    # Strict configuration model only where a simple pairing is likely
    # (P(simple) ~ exp(-(d^2-1)/4)); otherwise pair stubs with partial
    # rejection, re-pairing only the conflicting stubs.
    strict = (d * d - 1) / 4.0 < 3.0
    for _ in range(RANDOM_REGULAR_RETRIES):
        edges = _pairing_attempt(n, d, rng, strict)
        if edges is not None:
            return np.array(sorted(edges), dtype=np.int64)
    raise ConstructionError(
        f"pairing model failed {RANDOM_REGULAR_RETRIES} times for n={n}, d={d}"
    )


def _pairing_attempt(n: int, d: int, rng: np.random.Generator, strict: bool):
    edges: set = set()
    stubs = np.repeat(np.arange(n), d)
    for _ in range(_MAX_REPAIR_ROUNDS):
        if not stubs.size:
            return edges
        rng.shuffle(stubs)
        pairs = np.sort(stubs.reshape(-1, 2), axis=1)
        leftover: dict = defaultdict(int)
        for a, b in pairs.tolist():
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            elif strict:
                return None
            else:
                leftover[a] += 1
                leftover[b] += 1
        if not leftover:
            return edges
        if not _can_continue(edges, leftover):
            return None
        stubs = np.array([v for v, k in leftover.items() for _ in range(k)], dtype=np.int64)
    return None


def _can_continue(edges: set, leftover: dict) -> bool:
    nodes = sorted(leftover)
    for a, b in itertools.combinations(nodes, 2):
        if (a, b) not in edges:
            return True
    return False


def build_interaction(family: GraphFamily) -> InteractionMatrix:
    """Construct ``Q_n`` for a graph family.

    Dense-regular families are scaled so that every row sums to one; the
    lattice keeps unit couplings on nearest-neighbour pairs.
    """
    if isinstance(family, Lattice):
        if family.side < 1 or family.dim < 1:
            raise ParameterError("lattice side and dim must be positive")
        edges = lattice_edges(family.side, family.dim)
        return _from_edges(family, family.n, edges, 1.0, beta_scale=LATTICE_BETA_SCALE)

    if isinstance(family, CurieWeiss):
        n = family.n
        if n < 2:
            raise ParameterError("Curie-Weiss needs n >= 2")
        dense = (np.ones((n, n)) - np.eye(n)) / n
        return _from_dense(family, dense)

    if isinstance(family, CompleteBipartite):
        n = family.n
        if n < 2 or n % 2:
            raise ParameterError("complete bipartite graph needs an even n >= 2")
        half = n // 2
        dense = np.zeros((n, n))
        dense[:half, half:] = 2.0 / n
        dense[half:, :half] = 2.0 / n
        return _from_dense(family, dense)

    if isinstance(family, RandomRegular):
        n, d = family.n, family.degree
        if n < 2 or d < 1 or d >= n or (n * d) % 2:
            raise ParameterError(f"random regular graph needs 1 <= d < n and n*d even (n={n}, d={d})")
        rng = np.random.default_rng(family.seed)
        edges = _random_regular_edges(n, d, rng)
        return _from_edges(family, n, edges, 1.0 / d)

    if isinstance(family, ExplicitMatrix):
        values = np.asarray(family.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 2:
            raise ParameterError("explicit interaction matrix must be square with n >= 2")
        if not np.allclose(values, values.T, rtol=0, atol=1e-12):
            raise ParameterError("explicit interaction matrix must be symmetric")
        if np.any(np.diag(values) != 0):
            raise ParameterError("explicit interaction matrix must have a zero diagonal")
        return _from_dense(family, values)

    raise ParameterError(f"unknown graph family {family!r}")


def check_assumptions(Q: InteractionMatrix) -> AssumptionReport:
    """Report regularity, entry bound and Frobenius norm of ``Q``.

    ``is_regular`` means all row sums agree to ``REGULARITY_TOL``; the
    Curie-Weiss rows sum to ``1 - 1/n``, the other dense families to 1.
    """
    row_sums = Q.row_sums
    is_regular = bool(row_sums.size and np.ptp(row_sums) <= REGULARITY_TOL)
    max_entry = float(Q.weights.max()) if Q.weights.size else 0.0
    frob = float(np.sum(Q.weights**2))

    gap: Optional[bool] = None
    if isinstance(Q.family, DENSE_REGULAR):
        # lambda_1 = 1 is isolated for all built-in dense families; the
        # bipartite -1 eigenvalue is allowed.
        gap = True
    return AssumptionReport(
        is_regular=is_regular,
        max_entry_times_n=max_entry * Q.n,
        frobenius_sq=frob,
        known_spectral_gap=gap,
    )


def family_from_dict(spec: dict, base_dir: Optional[Path] = None) -> GraphFamily:
    """Parse a graph family from a config table."""
    kind = str(spec.get("family", "")).lower().replace("-", "_")
    try:
        if kind == "lattice":
            return Lattice(side=int(spec["side"]), dim=int(spec.get("dim", 2)))
        if kind in ("curie_weiss", "complete"):
            return CurieWeiss(n=int(spec["n"]))
        if kind == "complete_bipartite":
            return CompleteBipartite(n=int(spec["n"]))
        if kind == "random_regular":
            n = int(spec["n"])
            degree = spec.get("degree")
            if degree is None:
                degree = int(round(float(spec.get("degree_fraction", 0.25)) * n))
            return RandomRegular(n=n, degree=int(degree), seed=int(spec.get("graph_seed", 0)))
        if kind == "explicit":
            path = Path(spec["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ParameterError(f"interaction matrix file not found: {path}")
            return ExplicitMatrix.from_file(path)
    except KeyError as exc:
        raise ParameterError(f"graph family {kind!r} is missing field {exc}") from exc
    raise ParameterError(f"unknown graph family {spec.get('family')!r}")


def family_to_dict(family: GraphFamily) -> dict:
    if isinstance(family, Lattice):
        return {"family": "lattice", "side": family.side, "dim": family.dim}
    if isinstance(family, CurieWeiss):
        return {"family": "curie_weiss", "n": family.n}
    if isinstance(family, CompleteBipartite):
        return {"family": "complete_bipartite", "n": family.n}
    if isinstance(family, RandomRegular):
        return {"family": "random_regular", "n": family.n, "degree": family.degree,
                "graph_seed": family.seed}
    d = {"family": "explicit", "n": family.n}
    if family.path is not None:
        d["path"] = family.path
    return d


def lattice_edge_count(side: int, dim: int) -> int:
    """Closed-form count ``dim * side^(dim-1) * (side-1)``."""
    return dim * side ** (dim - 1) * (side - 1)


__all__ = [
    "AssumptionReport",
    "CompleteBipartite",
    "CurieWeiss",
    "ExplicitMatrix",
    "GraphFamily",
    "InteractionMatrix",
    "Lattice",
    "LATTICE_BETA_SCALE",
    "RandomRegular",
    "build_interaction",
    "check_assumptions",
    "family_from_dict",
    "lattice_edge_count",
    "lattice_edges",
]
