"""End-to-end runs of the command-line harness on a coarse mesh."""

import json

import numpy as np
import pytest

from emcfie import analysis, operators
from emcfie.cli import RunConfig, load_config, main

TINY_INI = """\
[run]
geometry = sphere
size = 1.0

[sweep]
h = 1.2
kappa = 2.0
kappa_prime_ratio = 1.0, 2.0
eta_scale = -1.0
eta_decades = 1

[solver]
tol = 1e-8
conv_tol = 1e-8
max_iter = 500

[quadrature]
regular_order = 2
singular_order = 3

[points]
n_points = 50
point_radius = 2.0
"""


@pytest.fixture()
def tiny_config(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI)
    return path


def test_load_config_defaults():
    assert load_config() == RunConfig()


def test_load_config_file_and_overrides(tiny_config):
    config = load_config(tiny_config)
    assert config.geometry == "sphere"
    assert config.h == (1.2,)
    assert config.kappa_prime_ratio == (1.0, 2.0)
    assert config.eta_decades == 1
    assert config.n_points == 50
    # flag overrides win; None means "not given on the command line"
    layered = load_config(tiny_config, jobs=3, out="elsewhere", tol=None)
    assert layered.jobs == 3
    assert layered.out == "elsewhere"
    assert layered.tol == 1e-8


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.ini")


def test_run_config_validation():
    with pytest.raises(ValueError, match="geometry"):
        RunConfig(geometry="torus")
    with pytest.raises(ValueError, match="non-empty"):
        RunConfig(h=())
    with pytest.raises(ValueError, match="tol"):
        RunConfig(tol=0.0)
    with pytest.raises(ValueError, match="eta_scale"):
        RunConfig(eta_scale=0.0)
    with pytest.raises(ValueError, match="jobs"):
        RunConfig(jobs=0)


def _run(tiny_config, out_dir, *argv):
    return main(["--config", str(tiny_config), "--out", str(out_dir), *argv])


def test_mesh_info_writes_meshes_and_manifest(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert _run(tiny_config, out, "mesh-info", "--mesh-out") == 0
    stdout = capsys.readouterr().out
    assert "euler" in stdout and "sphere" in stdout
    assert (out / "sphere_h1.2.mesh").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "mesh-info"
    assert manifest["status"] == "ok"
    assert manifest["config"]["h"] == [1.2]
    assert manifest["version"]


def test_convergence_rows_and_rerun_determinism(tiny_config, tmp_path):
    first = tmp_path / "run1"
    second = tmp_path / "run2"
    assert _run(tiny_config, first, "convergence") == 0
    assert _run(tiny_config, second, "convergence") == 0
    body = (first / "convergence.csv").read_bytes()
    assert body == (second / "convergence.csv").read_bytes()
    records = analysis.read_records(first / "convergence.csv")
    assert len(records) == 2  # one row per kappa'/kappa ratio
    for rec in records:
        assert rec.geom == "sphere"
        assert rec.err_h is not None and 0.0 < rec.err_h < 1.0
        assert rec.iters_cfie > 0


def test_sweep_kappa_rows(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert _run(tiny_config, out, "sweep-kappa") == 0
    records = analysis.read_records(out / "sweep_kappa.csv")
    assert len(records) == 1
    rec = records[0]
    assert rec.cond_cfie >= 1.0 and rec.cond_efie >= 1.0
    assert rec.iters_cfie > 0 and rec.iters_efie > 0
    assert rec.err_h is None


def test_sweep_eta_rows(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert _run(tiny_config, out, "sweep-eta") == 0
    records = analysis.read_records(out / "sweep_eta.csv")
    # eta_decades = 1 gives 3 magnitudes per sign
    assert len(records) == 6
    etas = [rec.eta for rec in records]
    assert len(set(etas)) == 6
    assert all(rec.cond_cfie >= 1.0 for rec in records)


def test_dump_matrices_roundtrip(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert _run(tiny_config, out, "dump-matrices") == 0
    for name in ("S", "K", "M", "Z", "C", "G"):
        block = operators.load_matrix(out / f"{name}.cdm")
        assert block.shape == (30, 30)
    assert (out / "mesh.txt").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert any(path.endswith("S.cdm") for path in manifest["outputs"])
    s_block = operators.load_matrix(out / "S.cdm")
    assert np.abs(s_block.imag).max() == 0.0


def test_mie_validate_passes(tiny_config, capsys):
    assert main(["--config", str(tiny_config), "mie-validate"]) == 0
    assert "PASS" in capsys.readouterr().out
