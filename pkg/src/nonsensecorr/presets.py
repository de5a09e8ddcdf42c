"""Named experiment documents (figures and theorem checks) and their verifiers."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import ConfigError
from .ising import solve_magnetization

LATTICE_GRID = [0.0, 0.4, 0.8, 1.2, 1.6]
CW_CURVE_GRID = [0.0, 0.25, 0.5, 0.75, 0.9, 1.1, 1.25, 1.5, 2.0, 2.5]
CW_PAIRS = [(0.5, 0.5), (1.5, 1.5), (2.0, 0.3)]
EQUI_RHOS = [0.3, 0.7]
# Glauber sweeps for the dense-family presets (library defaults are 500 / 2000)
DENSE_BURN_IN_SUB = 100
DENSE_BURN_IN_SUPER = 200
OVERRIDABLE = {"replicates", "master_seed", "ks_min_p", "tolerances"}


def _cw(n: int, beta: float) -> dict:
    return {"type": "ising", "family": "curie_weiss", "n": n, "beta": beta, "sampler": "exact_cw"}


def _lattice(side: int, beta: float) -> dict:
    return {"type": "ising", "family": "lattice", "side": side, "dim": 2, "beta": beta,
            "sampler": "wolff"}


def _dense(family: str, n: int, beta: float) -> dict:
    d = {"type": "ising", "family": family, "n": n, "beta": beta, "sampler": "glauber",
         "burn_in": DENSE_BURN_IN_SUPER if beta > 1 else DENSE_BURN_IN_SUB}
    if family == "random_regular":
        d["degree"] = n // 4
        d["graph_seed"] = 0
    return d


def _lattice_sweep(name: str, histogram: str, replicates: int = 500) -> dict:
    return {"name": name, "n": 64 * 64, "replicates": replicates, "master_seed": 2024,
            "statistics": ["T", "rho"], "model_x": _lattice(64, 0.0),
            "model_y": _lattice(64, 0.0), "sweep": {"beta": LATTICE_GRID},
            "histogram": histogram}


def _ols_table(scenario: str, n: int = 200, replicates: int = 500) -> dict:
    power = {"type": "gaussian", "covariance": "eigenspec", "profile": "power", "p": 2.0}
    error = {
        "a": {"profile": "exponential", "q": 0.85, "sign": 1.0},
        "b": {"profile": "exponential", "q": 1.0, "sign": 1.0},
        "c": {"profile": "exponential", "q": 1.0, "sign": -1.0},
        "d": {"profile": "exponential", "q": 0.85, "sign": -1.0},
        "e": {"profile": "exponential", "q": 1.0, "sign": 1.0},
    }[scenario]
    x = {"type": "gaussian", "covariance": "identity", "variance": 1.0} if scenario == "e" else power
    return {"name": f"ols-{scenario}", "n": n, "replicates": replicates, "master_seed": 5,
            "statistics": ["OLS"], "model_x": x,
            "model_y": {"type": "gaussian", "covariance": "eigenspec", **error}}


def _cw_pairs(stats: list, prefix: str) -> dict:
    tol = {"scaled_t": 0.25, "scaled_rho": 0.15}
    return {"experiments": [
        {"name": f"{prefix}-b{b1:g}-{b2:g}", "n": 1000, "replicates": 2000, "master_seed": 7,
         "statistics": stats, "tolerances": tol, "model_x": _cw(1000, b1), "model_y": _cw(1000, b2)}
        for b1, b2 in CW_PAIRS]}


def _dense_universality() -> dict:
    runs = []
    for fam in ("complete_bipartite", "random_regular"):
        runs.append({"name": f"T3-{fam}-b0.5", "n": 800, "replicates": 1000, "master_seed": 11,
                     "statistics": ["T", "rho"],
                     "tolerances": {"scaled_t": 0.25, "scaled_rho": 0.15},
                     "model_x": _dense(fam, 800, 0.5), "model_y": _dense(fam, 800, 0.5)})
    for fam in ("complete_bipartite", "random_regular"):
        runs.append({"name": f"T3-{fam}-b1.5", "n": 800, "replicates": 1000, "master_seed": 13,
                     "statistics": ["T"], "tolerances": {"scaled_t": 0.35},
                     "model_x": _dense(fam, 800, 1.5), "model_y": _dense(fam, 800, 1.5)})
    return {"experiments": runs}


def _spike(name: str) -> dict:
    g = {"type": "gaussian", "covariance": "spike", "exponent": 2.5}
    return {"name": name, "n": 200, "replicates": 1000, "master_seed": 17,
            "statistics": ["T", "rho"], "model_x": g, "model_y": g, "histogram": "scaled_rho"}


PRESETS: dict[str, Callable[[], dict]] = {
    "figure1": lambda: {"name": "figure1", "n": 1000, "replicates": 500, "master_seed": 1,
                        "statistics": ["T", "rho"], "model_x": _cw(1000, 0.0),
                        "model_y": _cw(1000, 0.0), "sweep": {"beta": CW_CURVE_GRID},
                        "histogram": "scaled_t"},
    "figure2": lambda: _lattice_sweep("figure2", "scaled_rho"),
    "figure3": lambda: _lattice_sweep("figure3", "scaled_t"),
    "figure4": lambda: _spike("figure4"),
    "figure5": lambda: {"experiments": [_ols_table(s) for s in "abcde"]},
    "T1": lambda: _lattice_sweep("T1", "scaled_rho"),
    "T2": lambda: _cw_pairs(["T", "rho"], "T2"),
    "C3": lambda: _cw_pairs(["rho"], "C3"),
    "T3": _dense_universality,
    "T4i": lambda: {"name": "T4i", "n": 1000, "replicates": 2000, "master_seed": 19,
                    "statistics": ["rho"], "tolerances": {"scaled_rho": 0.2},
                    "model_x": {"type": "gaussian", "covariance": "sigma_squared", "sigma2": 4.0},
                    "model_y": {"type": "gaussian", "covariance": "sigma_squared", "sigma2": 4.0}},
    "T4ii": lambda: _spike("T4ii"),
    "C5": lambda: {"experiments": [
        {"name": f"C5-rho{r:g}", "n": 1000, "replicates": 2000, "master_seed": 23,
         "statistics": ["T", "rho"], "tolerances": {"scaled_t": 0.2, "scaled_rho": 0.15},
         "model_x": {"type": "gaussian", "covariance": "equicorrelation", "rho": r},
         "model_y": {"type": "gaussian", "covariance": "equicorrelation", "rho": r}}
        for r in EQUI_RHOS]},
    "T5": lambda: {"experiments": [_ols_table(s) for s in "abcde"]},
}

THEOREMS = ("T1", "T2", "C3", "T3", "T4i", "T4ii", "C5", "T5")


def preset_document(name: str, **overrides) -> dict:
    """Config document for a preset, with top-level overrides applied to every experiment."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    bad = set(overrides) - OVERRIDABLE
    if bad:
        raise ConfigError(f"preset overrides limited to {sorted(OVERRIDABLE)}, got {sorted(bad)}")
    doc = copy.deepcopy(PRESETS[name]())
    for table in doc.get("experiments", [doc]):
        for key, val in overrides.items():
            if key == "tolerances":
                table.setdefault("tolerances", {}).update(val)
            else:
                table[key] = val
    return doc


# --------------------------------------------------------------------------
# theorem verification
# --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    predicted: str
    empirical: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: predicted {self.predicted}, empirical {self.empirical}"


@dataclass
class Verification:
    theorem: str
    checks: list = field(default_factory=list)
    results: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)


def _rel_check(name: str, block: dict, target: float, rtol: float) -> Check:
    emp = block["empirical_var"]
    ok = abs(emp - target) <= rtol * target
    return Check(name, f"var {target:.6g} (+-{rtol:.0%})", f"var {emp:.6g}", ok)


def _ks_check(name: str, block: dict, min_p: float = 1e-3) -> Check:
    p = block["ks_pvalue"]
    return Check(name, f"KS p > {min_p:g}", f"p = {p:.4g} (D = {block['ks_distance']:.4f})",
                 p > min_p)


def checks_for(theorem: str, results: list) -> list[Check]:
    """Acceptance checks for a theorem preset given its run results.

    ``results`` holds one ``McReport`` per experiment, or one ``TrendReport``
    for the lattice sweep.
    """
    out: list[Check] = []
    if theorem == "T1":
        trend = results[0]
        for b, v in zip(trend.betas, trend.var_rho):
            if b >= 0.8:
                out.append(Check(f"beta={b:g} inflation", "var(sqrt(n) rho) > 1.1",
                                 f"{v:.4f}", v > 1.1))
        sds = ", ".join(f"{s:.3f}" for s in trend.sd_rho)
        out.append(Check("monotone sd", "Spearman = 1", f"{trend.spearman_rho:.3f} (sd {sds})",
                         math.isclose(trend.spearman_rho, 1.0, abs_tol=1e-12)))
        return out
    if theorem in ("T2", "C3"):
        for rep, (b1, b2) in zip(results, CW_PAIRS):
            tag = f"beta=({b1:g},{b2:g})"
            if theorem == "T2":
                target = predicted_curie_weiss_variance(b1, b2)
                out.append(_rel_check(f"{tag} sqrt(n) T_n", rep.stat("scaled_t"), target, 0.25))
                out.append(_ks_check(f"{tag} sqrt(n) T_n", rep.stat("scaled_t")))
            out.append(_rel_check(f"{tag} sqrt(n) rho_n", rep.stat("scaled_rho"), 1.0, 0.15))
            out.append(_ks_check(f"{tag} sqrt(n) rho_n", rep.stat("scaled_rho")))
        return out
    if theorem == "T3":
        m = solve_magnetization(1.5)
        for rep in results:
            name = rep.config["name"]
            if name.endswith("b0.5"):
                out.append(_rel_check(f"{name} sqrt(n) T_n", rep.stat("scaled_t"), 1.0, 0.25))
                out.append(_rel_check(f"{name} sqrt(n) rho_n", rep.stat("scaled_rho"), 1.0, 0.15))
            else:
                out.append(_rel_check(f"{name} sqrt(n) T_n", rep.stat("scaled_t"),
                                      (1 - m * m) ** 2, 0.35))
                out.append(Check(f"{name} heuristic flag", "flagged", str(rep.heuristic),
                                 rep.heuristic))
        return out
    if theorem == "T4i":
        rep = results[0]
        out.append(_rel_check("sqrt(n) rho_n", rep.stat("scaled_rho"), 4.0, 0.2))
        out.append(_ks_check("sqrt(n) rho_n a_n vs N(0,1)", rep.stat("normalized_rho")))
        return out
    if theorem == "T4ii":
        rep = results[0]
        raw = rep.stat("raw_rho")
        frac = raw["fraction_abs_above_0.8"]
        out.append(Check("|rho_n| > 0.8", ">= 0.90", f"{frac:.3f}", frac >= 0.9))
        mean = raw["empirical_mean"]
        out.append(Check("mean rho_n", "0 +- 0.06", f"{mean:+.4f}", abs(mean) <= 0.06))
        out.append(_ks_check("n T_n / lambda~_1 vs AB law", rep.stat("ab_statistic")))
        return out
    if theorem == "C5":
        for rep, r in zip(results, EQUI_RHOS):
            out.append(_rel_check(f"rho={r:g} sqrt(n) T_n", rep.stat("scaled_t"), (1 - r) ** 2, 0.2))
            out.append(_rel_check(f"rho={r:g} sqrt(n) rho_n", rep.stat("scaled_rho"), 1.0, 0.15))
        return out
    if theorem == "T5":
        bands = {"a": (None, 0.93), "b": (None, 0.93), "c": (0.95, None), "d": (0.95, None),
                 "e": (0.93, 0.97)}
        for rep in results:
            scen = rep.config["name"].split("-")[-1]
            ols = rep.stat("ols")
            cov = ols["coverage"]
            lo, hi = bands[scen]
            ok = (lo is None or (cov > lo if hi is None else cov >= lo)) and \
                 (hi is None or (cov < hi if lo is None else cov <= hi))
            want = (f"< {hi}" if lo is None else f"> {lo}" if hi is None else f"in [{lo}, {hi}]")
            out.append(Check(f"scenario ({scen}) coverage", want, f"{cov:.3f}", ok))
            out.append(Check(f"scenario ({scen}) condition", ols["condition_verdict"],
                             f"coverage {cov:.3f}", rep.verdicts["ols.direction"]))
        return out
    raise ConfigError(f"unknown theorem id {theorem!r}; choose from {THEOREMS}")


def verify(theorem: str, seed: Optional[int] = None, threads: int = 1,
           replicates: Optional[int] = None) -> Verification:
    """Run the acceptance experiment(s) for ``theorem`` and evaluate its checks."""
    from .config import parse_document
    from .montecarlo import monotonicity_sweep, run_experiment

    if theorem not in THEOREMS:
        raise ConfigError(f"unknown theorem id {theorem!r}; choose from {THEOREMS}")
    overrides = {} if replicates is None else {"replicates": replicates}
    jobs = parse_document(preset_document(theorem, **overrides), seed=seed)
    results = []
    for job in jobs:
        cfg = replace(job.config, threads=threads)
        if job.sweep is not None:
            results.append(monotonicity_sweep(job.sweep, cfg, job.beta_y))
        else:
            results.append(run_experiment(cfg))
    return Verification(theorem, checks_for(theorem, results), results)


def predicted_curie_weiss_variance(beta1: float, beta2: float) -> float:
    m1, m2 = solve_magnetization(beta1), solve_magnetization(beta2)
    return (1 - m1 * m1) * (1 - m2 * m2)
