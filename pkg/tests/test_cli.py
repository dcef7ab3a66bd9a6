import json

import numpy as np
import pytest

from kdvlab import cli, io, profiles
from kdvlab.spectral import LINE, h_minus1_norm


def run(tmp_path, *argv):
    return cli.run([*argv, "--out", str(tmp_path), "--jobs", "1"])


@pytest.mark.parametrize("command", sorted(cli.COMMANDS))
def test_help_for_every_subcommand(command, capsys):
    assert cli.run([command, "--help"]) == 0
    assert "--out" in capsys.readouterr().out


def test_missing_subcommand_is_usage_error():
    assert cli.run([]) == 2


def test_gen_is_deterministic(tmp_path):
    assert run(tmp_path / "a", "gen", "--seed", "1", "--n", "256", "--target-norm", "0.05") == 0
    assert run(tmp_path / "b", "gen", "--seed", "1", "--n", "256", "--target-norm", "0.05") == 0
    a, b = (tmp_path / d / "profile.json" for d in "ab")
    assert a.read_bytes() == b.read_bytes()
    assert abs(h_minus1_norm(io.load_profile(a)) - 0.05) < 1e-10


def test_gen_zero_target(tmp_path):
    assert run(tmp_path, "gen", "--seed", "0", "--target-norm", "0") == 0
    assert not np.any(io.load_profile(tmp_path / "profile.json").samples)


def test_gen_needs_seed(tmp_path):
    assert run(tmp_path, "gen") == 2


def test_gen_line_profile(tmp_path):
    assert run(tmp_path, "gen", "--seed", "2", "--geometry", "line", "--n", "512", "--half-width", "20") == 0
    q = io.load_profile(tmp_path / "profile.json")
    assert q.geometry == LINE and q.length == 40.0 and q.decays


def test_alpha_zero_profile(tmp_path, capsys):
    path = io.save_profile(tmp_path / "zero.json", profiles.zero(64))
    assert run(tmp_path, "alpha", "--profile", str(path), "--kappa", "1") == 0
    rows = (tmp_path / "alpha.csv").read_text().splitlines()
    assert rows[0] == "kappa,alpha_density,alpha_floquet,alpha_det2,kappa_alpha,comparison"
    assert float(rows[1].split(",")[1]) == pytest.approx(0.0, abs=1e-14)
    report = json.loads((tmp_path / "alpha.report.json").read_text())
    assert report["breakdowns"][0]["kappa"] == 1.0
    assert "alpha=0" in capsys.readouterr().out


def test_alpha_inadmissible_is_numeric_failure(tmp_path):
    assert run(tmp_path, "alpha", "--seed", "0", "--target-norm", "5", "--kappa", "1") == 3


def test_flow_soliton(tmp_path):
    path = io.save_profile(tmp_path / "soliton.json", profiles.soliton(4.0, n=512, half_width=20.0))
    code = run(tmp_path, "flow", "--hamiltonian", "kdv", "--profile", str(path), "--T", "1", "--dt", "1e-4",
               "--snapshot-interval", "0.25")
    assert code == 0
    header, times, snaps = io.read_trajectory(tmp_path / "flow.trajectory.csv")
    assert header["hamiltonian"] == "kdv" and times[-1] == pytest.approx(1.0)
    exact = profiles.soliton(4.0, n=512, half_width=20.0, t=1.0)
    assert np.max(np.abs(snaps[-1].samples - exact.samples)) < 1e-6
    diag = (tmp_path / "flow.diagnostics.csv").read_text().splitlines()
    assert diag[0] == "t,mass,momentum,h_kdv,alpha_1,alpha_2"
    assert len(diag) == 1 + len(times)


def test_flow_failure_keeps_partial_outputs(tmp_path):
    code = run(tmp_path, "flow", "--hamiltonian", "hk", "--kappa", "1", "--seed", "0", "--n", "64",
               "--target-norm", "1", "--T", "1e-3", "--dt", "1e-4")
    assert code == 3
    _, times, _ = io.read_trajectory(tmp_path / "flow.trajectory.csv")
    assert list(times) == [0.0]


def test_flow_without_kappa_is_config_error(tmp_path):
    assert run(tmp_path, "flow", "--hamiltonian", "hk", "--seed", "0") == 2


def test_converge_zero_profile(tmp_path):
    path = io.save_profile(tmp_path / "zero.json", profiles.zero(64))
    code = run(tmp_path, "converge", "--profile", str(path), "--kappas", "2,4", "--T", "0.01", "--dt", "1e-3",
               "--snapshots", "2")
    assert code == 0
    assert (tmp_path / "kappa_convergence.csv").exists()
    assert (tmp_path / "kappa_convergence.report.json").exists()


def test_failing_suite_exits_one(tmp_path):
    path = io.save_profile(tmp_path / "q.json", profiles.random_profile(1, n=64))
    # kappa = 1, 2 is far from the asymptotic regime, so the slope check fails
    assert run(tmp_path, "symbols", "--profile", str(path), "--kappas", "1,2") == 1
    assert run(tmp_path, "symbols", "--profile", str(path), "--kappas", "4") == 2


def test_symbols_default(tmp_path):
    assert run(tmp_path, "symbols") == 0


def test_identities_on_generated_profile(tmp_path):
    assert run(tmp_path, "identities", "--seed", "3", "--n", "128", "--kappas", "2") == 0
    assert (tmp_path / "identity_suite.report.json").exists()


def test_config_merges_under_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 4, "n": 64, "target_norm": 0.02, "name": "from_config.json"}))
    assert run(tmp_path, "gen", "--config", str(cfg), "--n", "128") == 0
    q = io.load_profile(tmp_path / "from_config.json")
    assert q.n == 128 and abs(h_minus1_norm(q) - 0.02) < 1e-12


@pytest.mark.parametrize("content", ['{"kapa": 2}', "[1, 2]", "{not json"])
def test_bad_config_exits_two(tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run(tmp_path, "alpha", "--config", str(cfg)) == 2


def test_missing_config_file(tmp_path):
    assert run(tmp_path, "alpha", "--config", str(tmp_path / "absent.json")) == 2


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    assert cli.run(["gen", "--seed", "1"]) == 0
    assert (tmp_path / "env_out" / "profile.json").exists()
