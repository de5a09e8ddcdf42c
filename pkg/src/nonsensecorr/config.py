"""Declarative experiment configs (TOML or JSON) and their resolved echo.

A document is either one experiment table, ``{"experiments": [...]}``, or
``{"preset": "<name>"}`` with optional top-level overrides. The resolved echo
(``Job.describe``) parses back to an identical job.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import tomli

from . import gaussian, graphs, ising
from .errors import ConfigError, NonsenseCorrError
from .montecarlo import ExperimentConfig, GaussianSpec, IsingSpec, ModelSpec

NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.+-]*$")

EXPERIMENT_KEYS = {
    "name", "n", "replicates", "master_seed", "statistics", "nominal_alpha",
    "ols_beta_true", "tolerances", "ks_min_p", "model_x", "model_y", "sweep",
    "histogram", "histogram_bins",
}
SWEEP_KEYS = {"beta", "beta_y"}
ISING_KEYS = {
    "type", "family", "side", "dim", "n", "degree", "degree_fraction", "graph_seed", "path",
    "beta", "sampler", "burn_in", "thin", "two_well", "min_volume_sweeps",
}
HISTOGRAM_STATS = ("scaled_t", "scaled_rho", "rho_n")


@dataclass(frozen=True, eq=False)
class Job:
    """One experiment, or a beta sweep of it when ``sweep`` is set."""

    config: ExperimentConfig
    sweep: Optional[tuple] = None
    beta_y: Optional[float] = None
    histogram: str = "scaled_rho"
    histogram_bins: int = 40

    @property
    def name(self) -> str:
        return self.config.name

    def describe(self) -> dict:
        d = self.config.describe()
        d["histogram"] = self.histogram
        d["histogram_bins"] = self.histogram_bins
        if self.sweep is not None:
            d["sweep"] = {"beta": list(self.sweep)}
            if self.beta_y is not None:
                d["sweep"]["beta_y"] = self.beta_y
        return d


def read_document(path: Union[str, Path]) -> dict:
    """Load a TOML (default) or JSON (``.json``) config file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(raw.decode("utf-8"))
        else:
            doc = tomli.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table at top level")
    return doc


def parse_document(doc: dict, base_dir: Optional[Path] = None,
                   seed: Optional[int] = None) -> list[Job]:
    """Turn a config document into jobs; ``seed`` overrides every master_seed."""
    try:
        return _parse_document(doc, base_dir, seed)
    except ConfigError:
        raise
    except (NonsenseCorrError, KeyError, TypeError, ValueError) as exc:
        msg = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
        raise ConfigError(msg) from exc


def _parse_document(doc: dict, base_dir, seed) -> list[Job]:
    doc = dict(doc)
    if "preset" in doc:
        from .presets import preset_document

        overrides = {k: v for k, v in doc.items() if k != "preset"}
        doc = preset_document(str(doc["preset"]), **overrides)
    if "experiments" in doc:
        extra = set(doc) - {"experiments"}
        if extra:
            raise ConfigError(f"unexpected top-level keys next to experiments: {sorted(extra)}")
        tables = doc["experiments"]
        if not isinstance(tables, list) or not tables:
            raise ConfigError("experiments must be a nonempty list of tables")
    else:
        tables = [doc]
    jobs = [parse_experiment(t, base_dir, seed) for t in tables]
    names = [j.name for j in jobs]
    if len(set(names)) != len(names):
        raise ConfigError(f"experiment names must be unique: {names}")
    return jobs


def parse_experiment(table: dict, base_dir: Optional[Path] = None,
                     seed: Optional[int] = None) -> Job:
    if not isinstance(table, dict):
        raise ConfigError("each experiment must be a table")
    unknown = set(table) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
    for key in ("model_x", "model_y", "replicates"):
        if key not in table:
            raise ConfigError(f"experiment is missing {key!r}")
    name = str(table.get("name", "experiment"))
    if not NAME_RE.match(name):
        raise ConfigError(f"experiment name {name!r} must be a plain file-name stem")
    n = table.get("n")
    n = int(n) if n is not None else _implied_n(table["model_x"]) or _implied_n(table["model_y"])
    if n is None:
        raise ConfigError("cannot infer n; set it at top level")
    mx = parse_model(table["model_x"], n, base_dir)
    my = parse_model(table["model_y"], n, base_dir)
    stats = table.get("statistics", ["T", "rho"])
    if isinstance(stats, str):
        stats = [stats]
    tolerances = table.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ConfigError("tolerances must be a table")
    cfg = ExperimentConfig(
        model_x=mx, model_y=my, n=n,
        replicates=int(table["replicates"]),
        master_seed=int(seed if seed is not None else table.get("master_seed", 0)),
        statistics=tuple(str(s) for s in stats),
        nominal_alpha=float(table.get("nominal_alpha", 0.05)),
        ols_beta_true=float(table.get("ols_beta_true", 0.0)),
        name=name,
        tolerances={str(k): float(v) for k, v in tolerances.items()},
        ks_min_p=float(table.get("ks_min_p", 1e-3)),
    )
    histogram = str(table.get("histogram", "scaled_rho"))
    if histogram not in HISTOGRAM_STATS:
        raise ConfigError(f"histogram must be one of {HISTOGRAM_STATS}")
    bins = int(table.get("histogram_bins", 40))
    if bins < 1:
        raise ConfigError("histogram_bins must be positive")
    sweep, beta_y = None, None
    if "sweep" in table:
        sw = table["sweep"]
        if not isinstance(sw, dict) or set(sw) - SWEEP_KEYS or "beta" not in sw:
            raise ConfigError("sweep must be a table with a beta list (and optional beta_y)")
        if not (isinstance(mx, IsingSpec) and isinstance(my, IsingSpec)):
            raise ConfigError("sweeps need Ising models on both sides")
        sweep = tuple(float(b) for b in sw["beta"])
        if len(sweep) < 2:
            raise ConfigError("sweep needs at least two betas")
        beta_y = float(sw["beta_y"]) if "beta_y" in sw else None
    return Job(cfg, sweep, beta_y, histogram, bins)


def _implied_n(model) -> Optional[int]:
    if not isinstance(model, dict):
        return None
    if str(model.get("family", "")).lower() == "lattice" and "side" in model:
        return int(model["side"]) ** int(model.get("dim", 2))
    if "n" in model:
        return int(model["n"])
    return None


def parse_model(spec: dict, n: int, base_dir: Optional[Path] = None) -> ModelSpec:
    if not isinstance(spec, dict):
        raise ConfigError("model must be a table")
    kind = str(spec.get("type", "ising")).lower()
    if kind == "ising":
        unknown = set(spec) - ISING_KEYS
        if unknown:
            raise ConfigError(f"unknown Ising model keys: {sorted(unknown)}")
        fam_spec = dict(spec)
        fam_spec.setdefault("n", n)
        if "path" in fam_spec and base_dir is not None:
            fam_spec["path"] = str((Path(base_dir) / fam_spec["path"]).resolve())
        family = graphs.family_from_dict(fam_spec)
        if family.n != n:
            raise ConfigError(f"graph has {family.n} vertices but n = {n}")
        burn = spec.get("burn_in")
        plan = ising.SamplerPlan(
            method=str(spec.get("sampler", _default_sampler(family))),
            burn_in=None if burn is None else int(burn),
            thin=int(spec.get("thin", 1)),
            min_volume_sweeps=int(spec.get("min_volume_sweeps", ising.WOLFF_MIN_VOLUME_SWEEPS)),
            two_well=bool(spec.get("two_well", True)),
        )
        if "beta" not in spec:
            raise ConfigError("Ising model needs beta")
        return IsingSpec(family, float(spec["beta"]), plan)
    if kind == "gaussian":
        source = {k: v for k, v in spec.items() if k != "type"}
        source.setdefault("covariance", "identity")
        if "path" in source and base_dir is not None:
            source["path"] = str((Path(base_dir) / source["path"]).resolve())
        model = gaussian.covariance_from_dict(source, n)
        return GaussianSpec(model, source=source)
    raise ConfigError(f"unknown model type {kind!r}")


def _default_sampler(family) -> str:
    if isinstance(family, graphs.CurieWeiss):
        return "exact_cw"
    if isinstance(family, graphs.Lattice):
        return "wolff"
    return "glauber"


def resolved_document(jobs: list[Job]) -> dict:
    return {"experiments": [j.describe() for j in jobs]}


def with_replicates(job: Job, replicates: int) -> Job:
    return replace(job, config=replace(job.config, replicates=replicates))
