"""Command-line front end: ``nonsensecorr {simulate,verify,ols-condition,assumptions}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, graphs, theory
from .config import Job, parse_document, read_document, resolved_document
from .errors import ConfigError, ConstructionError, ExperimentAborted, NonsenseCorrError
from .gaussian import EigenProfile
from .montecarlo import McReport, TrendReport, _jsonable, monotonicity_sweep, run_experiment
from .presets import THEOREMS, preset_document, verify

log = logging.getLogger("nonsensecorr")

OUT_DIR_ENV = "NONSENSECORR_OUT_DIR"
DEFAULT_OUT_DIR = "nonsensecorr-out"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


@dataclass
class RunManifest:
    config_path: Optional[str]
    resolved_config: dict
    tool_version: str
    timestamp: str
    outputs: list = field(default_factory=list)
    wall_clock_seconds: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True)


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# artifacts
# --------------------------------------------------------------------------

def histogram_csv(blocks: list[tuple[str, np.ndarray]], statistic: str, bins: int) -> str:
    """One histogram block per label, all on common bin edges."""
    finite = [v[np.isfinite(v)] for _, v in blocks]
    pooled = np.concatenate(finite) if finite else np.zeros(0)
    edges = np.histogram_bin_edges(pooled, bins=bins) if pooled.size else np.linspace(0, 1, bins + 1)
    lines = ["block,statistic,bin_left,bin_right,count,density"]
    for (label, _), vals in zip(blocks, finite):
        counts, _ = np.histogram(vals, bins=edges)
        widths = np.diff(edges)
        dens = counts / (max(vals.size, 1) * widths)
        for lo, hi, c, d in zip(edges[:-1], edges[1:], counts, dens):
            lines.append(f"{label},{statistic},{float(lo)!r},{float(hi)!r},{int(c)},{float(d)!r}")
    return "\n".join(lines) + "\n"


def _hist_values(report: McReport, statistic: str) -> np.ndarray:
    vals = report.replicate_values
    root = np.sqrt(report.config["n"])
    if statistic == "scaled_t":
        return root * vals[:, 0]
    if statistic == "scaled_rho":
        return root * vals[:, 1]
    return vals[:, 1]


def run_job(job: Job, threads: int, want_csv: bool, dump_spins: bool) -> dict[str, bytes]:
    """Run one job and return its artifacts as ``{file name: content}``."""
    cfg = replace(job.config, threads=threads)
    files: dict[str, bytes] = {}
    if job.sweep is not None:
        trend: TrendReport = monotonicity_sweep(job.sweep, cfg, job.beta_y)
        doc = {"config": job.describe(), "trend": trend.to_dict(),
               "reports": [r.to_dict() for r in trend.reports]}
        files[f"{job.name}.sweep.json"] = _dumps(doc).encode()
        blocks = [(f"beta={b:g}", _hist_values(r, job.histogram))
                  for b, r in zip(trend.betas, trend.reports)]
        files[f"{job.name}.histogram.csv"] = histogram_csv(
            blocks, job.histogram, job.histogram_bins).encode()
        if want_csv:
            for b, r in zip(trend.betas, trend.reports):
                files[f"{job.name}-beta{b:g}.replicates.csv"] = r.csv_text().encode()
        return files
    report = run_experiment(cfg, keep_spins=dump_spins)
    doc = report.to_dict()
    doc["config"] = job.describe()
    files[f"{job.name}.report.json"] = _dumps(doc).encode()
    if "T" in cfg.statistics or "rho" in cfg.statistics:
        files[f"{job.name}.histogram.csv"] = histogram_csv(
            [(job.name, _hist_values(report, job.histogram))], job.histogram,
            job.histogram_bins).encode()
    if want_csv:
        files[f"{job.name}.replicates.csv"] = report.csv_text().encode()
    if dump_spins and report.spins is not None:
        files[f"{job.name}.spins.bin"] = report.spin_bytes()
    return files


def _write_all(out_dir: Path, files: dict[str, bytes]) -> list[str]:
    """Write every artifact or none: stage to temporaries, then rename."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, data in files.items():
            tmp = out_dir / f".{name}.partial"
            tmp.write_bytes(data)
            staged.append((tmp, out_dir / name))
        for tmp, final in staged:
            os.replace(tmp, final)
    except OSError:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    return [str(final) for _, final in staged]


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _out_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def cmd_simulate(args) -> int:
    if bool(args.config) == bool(args.preset):
        return _fail("config", "give exactly one of --config or --preset", EXIT_CONFIG)
    try:
        if args.config:
            path = Path(args.config)
            doc = read_document(path)
            base_dir = path.resolve().parent
        else:
            base_dir = None
            doc = preset_document(args.preset)
        jobs = parse_document(doc, base_dir, seed=args.seed)
    except NonsenseCorrError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)

    files: dict[str, bytes] = {}
    timings: dict[str, float] = {}
    resolved = resolved_document(jobs)
    try:
        for job in jobs:
            start = time.perf_counter()
            log.info("running %s", job.name)
            files.update(run_job(job, args.threads, args.csv, args.dump_spins))
            timings[job.name] = round(time.perf_counter() - start, 3)
    except ExperimentAborted as exc:
        return _fail("aborted", str(exc), EXIT_ABORT)
    except ConstructionError as exc:
        return _fail("aborted", str(exc), EXIT_ABORT)
    except NonsenseCorrError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)

    out_dir = _out_dir(args)
    files["resolved_config.json"] = _dumps(resolved).encode()
    manifest = RunManifest(
        config_path=str(Path(args.config).resolve()) if args.config else f"preset:{args.preset}",
        resolved_config=resolved,
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        outputs=sorted(str(out_dir / name) for name in files) + [str(out_dir / "manifest.json")],
        wall_clock_seconds=timings,
    )
    files["manifest.json"] = (manifest.to_json() + "\n").encode()
    try:
        written = _write_all(out_dir, files)
    except OSError as exc:
        return _fail("io", f"cannot write outputs to {out_dir}: {exc.strerror}", EXIT_CONFIG)
    for name in written:
        print(name)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.theorem not in THEOREMS:
        return _fail("config", f"unknown theorem id {args.theorem!r}; choose from "
                     f"{', '.join(THEOREMS)}", EXIT_CONFIG)
    try:
        result = verify(args.theorem, seed=args.seed, threads=args.threads,
                        replicates=args.replicates)
    except ExperimentAborted as exc:
        return _fail("aborted", str(exc), EXIT_ABORT)
    except NonsenseCorrError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    for check in result.checks:
        print(check.line())
    print(f"{args.theorem}: {'PASS' if result.passed else 'FAIL'}")
    return EXIT_OK if result.passed else EXIT_FAIL


def parse_profile(text: str) -> EigenProfile:
    """``kind[:key=value,...]``, e.g. ``exponential:q=0.85,sign=-1`` or ``power:p=2``."""
    kind, _, rest = text.partition(":")
    spec: dict = {"profile": kind.strip()}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"bad profile parameter {item!r}; expected key=value")
        try:
            spec[key.strip()] = float(val)
        except ValueError as exc:
            raise ConfigError(f"profile parameter {key!r} is not a number") from exc
    return EigenProfile.from_dict(spec)


def cmd_ols_condition(args) -> int:
    try:
        f = parse_profile(args.f)
        g = parse_profile(args.g)
        rep = theory.ols_condition(f.function(args.n), g.function(args.n), args.n)
    except NonsenseCorrError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    if args.json:
        print(_dumps(rep.to_dict()), end="")
        return EXIT_OK
    print(f"f = {f.label()}, g = {g.label()}, n = {args.n}")
    print(f"int f g       = {rep.int_fg:.10g}")
    print(f"int f         = {rep.int_f:.10g}")
    print(f"int g         = {rep.int_g:.10g}")
    print(f"ratio         = {rep.ratio:.10g}")
    print(f"verdict       = {rep.verdict}")
    print(f"coverage(n)   = {rep.predicted_coverage():.4f}")
    return EXIT_OK


def cmd_assumptions(args) -> int:
    try:
        if args.config:
            path = Path(args.config)
            jobs = parse_document(read_document(path), path.resolve().parent)
            families = {}
            for job in jobs:
                for side in ("model_x", "model_y"):
                    spec = getattr(job.config, side)
                    if hasattr(spec, "family"):
                        families[f"{job.name}.{side}"] = spec.family
            if not families:
                raise ConfigError("config has no Ising models")
        else:
            if not args.family:
                raise ConfigError("give --family or --config")
            spec = {"family": args.family, "n": args.n, "side": args.side, "dim": args.dim,
                    "degree": args.degree, "graph_seed": args.graph_seed, "path": args.path}
            families = {args.family: graphs.family_from_dict(
                {k: v for k, v in spec.items() if v is not None})}
        out = {name: graphs.check_assumptions(graphs.build_interaction(fam)).to_dict()
               for name, fam in families.items()}
    except NonsenseCorrError as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    print(_dumps(out), end="")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonsensecorr", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--seed", type=int, default=None, help="override master_seed")

    sim = sub.add_parser("simulate", parents=[common], help="run experiments from a config")
    sim.add_argument("--config", help="TOML or JSON experiment config")
    sim.add_argument("--preset", help="named preset instead of a config file")
    sim.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or "
                                       f"./{DEFAULT_OUT_DIR})")
    sim.add_argument("--csv", action="store_true", help="also write per-replicate CSV")
    sim.add_argument("--dump-spins", action="store_true",
                     help="debug: raw int8 spin vectors, shape (replicates, 2, n)")
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", parents=[common], help="run a theorem's acceptance check")
    ver.add_argument("theorem", help=", ".join(THEOREMS))
    ver.add_argument("--replicates", type=int, default=None, help="override replicate count")
    ver.set_defaults(func=cmd_verify)

    ols = sub.add_parser("ols-condition", help="evaluate the OLS validity condition")
    ols.add_argument("--f", required=True, help="Sigma_X profile, e.g. power:p=2")
    ols.add_argument("--g", required=True, help="Sigma_eps profile, e.g. exponential:q=1,sign=1")
    ols.add_argument("--n", type=int, default=200, help="grid size for the Riemann sums")
    ols.add_argument("--json", action="store_true")
    ols.set_defaults(func=cmd_ols_condition)

    asm = sub.add_parser("assumptions", help="check dense-regular assumptions of a graph")
    asm.add_argument("--config", help="report on every Ising model in this config")
    asm.add_argument("--family")
    asm.add_argument("--n", type=int)
    asm.add_argument("--side", type=int)
    asm.add_argument("--dim", type=int)
    asm.add_argument("--degree", type=int)
    asm.add_argument("--graph-seed", type=int)
    asm.add_argument("--path")
    asm.set_defaults(func=cmd_assumptions)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        return _fail("config", "--threads must be >= 1", EXIT_CONFIG)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
