import json
import subprocess
import sys

import numpy as np
import pytest

from nonsensecorr import cli
from nonsensecorr.config import parse_document, read_document, resolved_document
from nonsensecorr.errors import ConfigError
from nonsensecorr.montecarlo import GaussianSpec, IsingSpec
from nonsensecorr.presets import PRESETS, preset_document

CW_TOML = """
name = "cw-small"
replicates = 200
master_seed = 7
statistics = ["T", "rho"]

[model_x]
family = "curie_weiss"
n = 200
beta = 0.5

[model_y]
family = "curie_weiss"
n = 200
beta = 1.5
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_parse_toml(tmp_path):
    jobs = parse_document(read_document(write(tmp_path, "c.toml", CW_TOML)))
    (job,) = jobs
    assert job.config.n == 200 and job.config.master_seed == 7
    assert isinstance(job.config.model_x, IsingSpec)
    assert job.config.model_x.plan.method == "exact_cw"
    assert job.config.model_y.beta == 1.5


def test_parse_json_matches_toml(tmp_path):
    toml_jobs = parse_document(read_document(write(tmp_path, "c.toml", CW_TOML)))
    doc = resolved_document(toml_jobs)
    json_jobs = parse_document(read_document(write(tmp_path, "c.json", json.dumps(doc))))
    assert resolved_document(json_jobs) == doc


def test_seed_override(tmp_path):
    (job,) = parse_document(read_document(write(tmp_path, "c.toml", CW_TOML)), seed=99)
    assert job.config.master_seed == 99


@pytest.mark.parametrize("text", [
    "replicates = 200\n[model_x]\nfamily='curie_weiss'\nn=10\nbeta=0.1\n",  # no model_y
    CW_TOML.replace("replicates = 200", "replicates = 200\nbogus = 1"),
    CW_TOML.replace('beta = 0.5', 'beta = 0.5\nwarp = 9'),
    CW_TOML.replace('name = "cw-small"', 'name = "../escape"'),
    CW_TOML.replace("replicates = 200", "replicates = 20"),
    "this is = = not toml",
])
def test_bad_configs_raise(tmp_path, text):
    with pytest.raises(ConfigError):
        parse_document(read_document(write(tmp_path, "bad.toml", text)))


def test_gaussian_model_parse():
    doc = {"name": "g", "n": 50, "replicates": 100,
           "model_x": {"type": "gaussian", "covariance": "equicorrelation", "rho": 0.3},
           "model_y": {"type": "gaussian"}}
    (job,) = parse_document(doc)
    assert isinstance(job.config.model_x, GaussianSpec)
    assert job.describe()["model_y"] == {"type": "gaussian", "covariance": "identity"}


def test_every_preset_parses():
    for name in PRESETS:
        jobs = parse_document(preset_document(name, replicates=100))
        assert jobs and all(j.config.replicates == 100 for j in jobs)
    with pytest.raises(ConfigError):
        preset_document("figure9")
    with pytest.raises(ConfigError):
        preset_document("figure2", n=10)


def test_simulate_outputs_and_echo_round_trip(tmp_path):
    cfg = write(tmp_path, "c.toml", CW_TOML)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run_cli("simulate", "--config", cfg, "--out-dir", out1, "--csv", "--dump-spins") == 0
    names = {p.name for p in out1.iterdir()}
    assert names == {"cw-small.report.json", "cw-small.histogram.csv", "cw-small.replicates.csv",
                     "cw-small.spins.bin", "resolved_config.json", "manifest.json"}
    report = json.loads((out1 / "cw-small.report.json").read_text())
    assert report["config"]["master_seed"] == 7
    assert (out1 / "cw-small.spins.bin").stat().st_size == 200 * 2 * 200
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["resolved_config"] == json.loads((out1 / "resolved_config.json").read_text())

    assert run_cli("simulate", "--config", out1 / "resolved_config.json",
                   "--out-dir", out2, "--csv", "--dump-spins", "--threads", 3) == 0
    for name in ("cw-small.report.json", "cw-small.histogram.csv", "cw-small.replicates.csv",
                 "cw-small.spins.bin", "resolved_config.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_outputs_stay_in_out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = write(tmp_path, "c.toml", CW_TOML)
    before = set(tmp_path.iterdir())
    assert run_cli("simulate", "--config", cfg, "--out-dir", tmp_path / "only") == 0
    assert set(tmp_path.iterdir()) - before == {tmp_path / "only"}


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "envdir"))
    cfg = write(tmp_path, "c.toml", CW_TOML)
    assert run_cli("simulate", "--config", cfg) == 0
    assert (tmp_path / "envdir" / "cw-small.report.json").exists()


def test_malformed_config_exit_2_no_outputs(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", "replicates = [")
    out = tmp_path / "out"
    assert run_cli("simulate", "--config", cfg, "--out-dir", out) == 2
    assert not out.exists()
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "config"


def test_abort_exit_3_no_outputs(tmp_path):
    text = CW_TOML.replace("beta = 0.5", "beta = 40").replace("beta = 1.5", "beta = 40") \
        .replace("n = 200", "n = 30")
    cfg = write(tmp_path, "hot.toml", text)
    out = tmp_path / "out"
    assert run_cli("simulate", "--config", cfg, "--out-dir", out) == 3
    assert not out.exists()


def test_partial_multi_experiment_writes_nothing(tmp_path):
    good = {"name": "ok", "n": 30, "replicates": 100,
            "model_x": {"family": "curie_weiss", "n": 30, "beta": 0.2},
            "model_y": {"family": "curie_weiss", "n": 30, "beta": 0.2}}
    bad = {**good, "name": "hot",
           "model_x": {"family": "curie_weiss", "n": 30, "beta": 40},
           "model_y": {"family": "curie_weiss", "n": 30, "beta": 40}}
    cfg = write(tmp_path, "two.json", json.dumps({"experiments": [good, bad]}))
    out = tmp_path / "out"
    assert run_cli("simulate", "--config", cfg, "--out-dir", out) == 3
    assert not out.exists()


def test_figure2_sweep_histogram_blocks(tmp_path):
    cfg = write(tmp_path, "f2.json", json.dumps({"preset": "figure2", "replicates": 100}))
    out = tmp_path / "out"
    assert run_cli("simulate", "--config", cfg, "--out-dir", out) == 0
    lines = (out / "figure2.histogram.csv").read_text().splitlines()
    assert lines[0] == "block,statistic,bin_left,bin_right,count,density"
    blocks = {}
    for line in lines[1:]:
        cells = line.split(",")
        blocks.setdefault(cells[0], []).append(int(cells[4]))
    assert list(blocks) == [f"beta={b:g}" for b in (0, 0.4, 0.8, 1.2, 1.6)]
    assert all(sum(c) == 100 for c in blocks.values())
    sweep = json.loads((out / "figure2.sweep.json").read_text())
    assert sweep["trend"]["betas"] == [0, 0.4, 0.8, 1.2, 1.6]
    sd = sweep["trend"]["sd_rho"]
    assert sd[-1] > sd[0]


def test_verify_unknown_theorem(capsys):
    assert run_cli("verify", "T99") == 2
    assert "unknown theorem" in json.loads(capsys.readouterr().err)["message"]


def test_verify_t5(capsys):
    assert run_cli("verify", "T5") == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("T5: PASS")


def test_ols_condition_cli(capsys):
    assert run_cli("ols-condition", "--f", "power:p=2", "--g", "exponential:q=1,sign=1", "--json") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "anticonservative"
    assert rep["int_fg"] == pytest.approx(np.e - 2, abs=1e-9)
    assert run_cli("ols-condition", "--f", "power:p=2", "--g", "exponential:q=1,sign=-1") == 0
    assert "verdict       = valid" in capsys.readouterr().out
    assert run_cli("ols-condition", "--f", "constant:c=2", "--g", "exponential:q=1") == 0
    assert "exact" in capsys.readouterr().out
    assert run_cli("ols-condition", "--f", "nope", "--g", "power") == 2


def test_assumptions_cli(capsys, tmp_path):
    assert run_cli("assumptions", "--family", "curie_weiss", "--n", 100) == 0
    rep = json.loads(capsys.readouterr().out)["curie_weiss"]
    assert rep["is_regular"] is True and rep["known_spectral_gap"] is True
    cfg = write(tmp_path, "c.toml", CW_TOML)
    assert run_cli("assumptions", "--config", cfg) == 0
    assert set(json.loads(capsys.readouterr().out)) == {"cw-small.model_x", "cw-small.model_y"}
    assert run_cli("assumptions", "--family", "random_regular", "--n", 5, "--degree", 3) == 2


def test_bad_arguments_exit_2():
    assert run_cli("simulate") == 2
    assert run_cli("frobnicate") == 2
    assert run_cli("simulate", "--preset", "figure4", "--threads", 0) == 2


def test_console_module_runs():
    res = subprocess.run([sys.executable, "-m", "nonsensecorr.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
