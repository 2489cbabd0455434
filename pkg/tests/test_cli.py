"""End-to-end runner and CLI checks on deliberately tiny problems."""

import json
import os

import numpy as np
import pytest

from ringheom import load_config, parse_config
from ringheom.cli import main
from ringheom.grid import load_block
from ringheom.runner import run_equilibrium, run_flux_scan, run_response


TINY = """\
[run]
experiment = {experiment}
output_dir = {outdir}
workers = 1

[ring]
flux = {flux}

[bath]
eta_x = 0.3
eta_y = 0.3
beta = 1.0
k_x = 1
k_y = 1

[grid]
momentum_cutoff = 16
theta_points = 8

[hierarchy]
nmax = 2

[stepping]
tol = 1e-10

[equilibrium]
window = 1.0
eps_ss = 5e-6
max_time = 80

[response]
t_max = 5.0
dt_sample = 0.25
omega_max = 4.0
omega_step = 0.1
damping = 0.1

[flux-scan]
fluxes = 0.0 0.5
"""


def tiny_config(tmp_path, experiment="equilibrium", flux=0.0):
    return TINY.format(experiment=experiment, outdir=tmp_path / "out", flux=flux)


def write_config(tmp_path, **kwargs):
    path = tmp_path / "run.cfg"
    path.write_text(tiny_config(tmp_path, **kwargs))
    return path


class TestRunEquilibrium:
    def test_produces_outputs(self, tmp_path):
        cfg = parse_config(tiny_config(tmp_path))
        paths = run_equilibrium(cfg)
        for key in ("pdf", "checkpoint", "convergence", "steps", "manifest"):
            assert os.path.exists(paths[key]), key
        header = open(paths["pdf"]).readline()
        assert cfg.config_hash in header
        manifest = json.load(open(paths["manifest"]))
        assert manifest["config_hash"] == cfg.config_hash
        assert manifest["benchmark"]["steps_accepted"] > 0

    def test_isotropic_pdf_uniform(self, tmp_path):
        cfg = parse_config(tiny_config(tmp_path))
        paths = run_equilibrium(cfg)
        rows = [
            line.split(",") for line in open(paths["pdf"]).read().splitlines()[2:]
        ]
        dist = np.array([float(r[1]) for r in rows])
        assert np.max(np.abs(dist - 1 / (2 * np.pi))) < 1e-3

    def test_checkpoint_loadable(self, tmp_path):
        cfg = parse_config(tiny_config(tmp_path))
        paths = run_equilibrium(cfg)
        ados, np_cut, m, t, dt = load_block(paths["checkpoint"])
        assert (np_cut, m) == (16, 8)
        assert ados.shape[0] == 15  # C(4+2, 2)
        assert t > 0 and dt > 0


class TestRunEquilibriumDecoupled:
    def test_decoupled_baths_stay_uniform(self, tmp_path):
        # no anisotropy source at eta = 0: the free thermal start is
        # already stationary, relaxation returns after one window
        text = tiny_config(tmp_path).replace("eta_x = 0.3", "eta_x = 0.0")
        text = text.replace("eta_y = 0.3", "eta_y = 0.0")
        cfg = parse_config(text)
        paths = run_equilibrium(cfg)
        rows = [line.split(",") for line in open(paths["pdf"]).read().splitlines()[2:]]
        dist = np.array([float(r[1]) for r in rows])
        assert np.max(np.abs(dist - 1 / (2 * np.pi))) < 1e-8
        manifest = json.load(open(paths["manifest"]))
        assert manifest["benchmark"]["steps_accepted"] > 0


class TestRunResponse:
    def test_writes_series_and_spectrum(self, tmp_path):
        cfg = parse_config(tiny_config(tmp_path, experiment="response"))
        paths = run_response(cfg)
        lines = open(paths["response"]).read().splitlines()
        assert lines[1] == "t,R"
        assert len(lines) == 2 + 21  # t = 0..5 step 0.25
        spec_lines = open(paths["spectrum"]).read().splitlines()
        assert spec_lines[1] == "omega,sigma"

    def test_reuses_equilibrium_checkpoint(self, tmp_path):
        eq_cfg = parse_config(tiny_config(tmp_path))
        eq_paths = run_equilibrium(eq_cfg)
        text = tiny_config(tmp_path, experiment="response").replace(
            "[response]\n",
            f"[response]\nequilibrium_checkpoint = {eq_paths['checkpoint']}\n",
        )
        cfg = parse_config(text)
        paths = run_response(cfg)
        assert os.path.exists(paths["spectrum"])


class TestLowTemperatureRun:
    def test_k4_low_temperature_completes(self, tmp_path):
        # four decomposition poles per axis at beta = 2.5
        text = tiny_config(tmp_path)
        text = text.replace("beta = 1.0", "beta = 2.5")
        text = text.replace("k_x = 1", "k_x = 4").replace("k_y = 1", "k_y = 4")
        text = text.replace("eta_x = 0.3", "eta_x = 0.2").replace("eta_y = 0.3", "eta_y = 0.1")
        # slower settling at low temperature and weaker coupling
        text = text.replace("eps_ss = 5e-6", "eps_ss = 2e-5")
        text = text.replace("max_time = 80", "max_time = 200")
        cfg = parse_config(text)
        paths = run_equilibrium(cfg)
        assert os.path.exists(paths["pdf"])
        manifest = json.load(open(paths["manifest"]))
        assert manifest["benchmark"]["hierarchy_size"] == 66  # C(10+2, 2)


class TestSpectrumRecompute:
    def test_regrids_existing_response(self, tmp_path):
        cfg = parse_config(tiny_config(tmp_path, experiment="response"))
        run_response(cfg)
        # same outdir, spectrum experiment: recompute sigma on a new grid
        text = tiny_config(tmp_path, experiment="spectrum").replace(
            "omega_step = 0.1", "omega_step = 0.05"
        )
        cfg2 = parse_config(text)
        paths = run_response(cfg2)
        lines = open(paths["spectrum"]).read().splitlines()
        assert len(lines) == 2 + 81  # 0 .. 4 step 0.05


class TestRunFluxScan:
    def test_table_columns_and_rows(self, tmp_path):
        cfg = parse_config(tiny_config(tmp_path, experiment="flux-scan"))
        paths = run_flux_scan(cfg)
        lines = open(paths["fluxscan"]).read().splitlines()
        assert lines[1] == "fluxbar,cos_theta,momentum,pdf_amplitude"
        assert len(lines) == 2 + 2
        first = [float(x) for x in lines[2].split(",")]
        assert first[0] == 0.0

    def test_byte_identical_reruns(self, tmp_path):
        cfg = parse_config(tiny_config(tmp_path, experiment="flux-scan"))
        first = run_flux_scan(cfg, outdir=str(tmp_path / "a"))
        second = run_flux_scan(cfg, outdir=str(tmp_path / "b"))
        b1 = open(first["fluxscan"], "rb").read()
        b2 = open(second["fluxscan"], "rb").read()
        assert b1 == b2


class TestCli:
    def test_validate_config(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["validate-config", "-c", str(path)]) == 0
        out = capsys.readouterr().out
        assert "hash=" in out

    def test_parse_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("not a config at all\n")
        assert main(["validate-config", "-c", str(path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_validation_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("[run]\nexperiment = equilibrium\n[bath]\nbeta = -1\n")
        assert main(["validate-config", "-c", str(path)]) == 3

    def test_mismatched_subcommand_rejected(self, tmp_path, capsys):
        path = write_config(tmp_path, experiment="response")
        assert main(["equilibrium", "-c", str(path)]) == 3

    def test_pade_check(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["pade-check", "-c", str(path)]) == 0
        out = capsys.readouterr().out
        assert "axis x" in out and "coth surrogate error" in out

    def test_equilibrium_run_via_cli(self, tmp_path, capsys):
        path = write_config(tmp_path)
        assert main(["equilibrium", "-c", str(path), "-o", str(tmp_path / "cli_out")]) == 0
        assert (tmp_path / "cli_out" / "pdf.csv").exists()

    def test_workers_env_override(self, tmp_path, capsys, monkeypatch):
        path = write_config(tmp_path)
        monkeypatch.setenv("RINGHEOM_WORKERS", "2")
        assert main(["validate-config", "-c", str(path)]) == 0
        monkeypatch.setenv("RINGHEOM_WORKERS", "0")
        assert main(["validate-config", "-c", str(path)]) == 3

    def test_numeric_failure_exit_code(self, tmp_path, capsys, monkeypatch):
        from ringheom import cli
        from ringheom.errors import StepUnderflow

        def boom(cfg):
            raise StepUnderflow("forced")

        monkeypatch.setattr(cli, "run_equilibrium", boom)
        path = write_config(tmp_path)
        assert main(["equilibrium", "-c", str(path)]) == 5

    def test_no_convergence_exit_code(self, tmp_path, capsys):
        text = tiny_config(tmp_path).replace("max_time = 80", "max_time = 0.5")
        text = text.replace("eps_ss = 5e-6", "eps_ss = 1e-14")
        path = tmp_path / "hard.cfg"
        path.write_text(text)
        assert main(["equilibrium", "-c", str(path)]) == 4
