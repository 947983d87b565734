"""Command-line contracts: dispatch, exit codes, artifact files, config
round trips."""

import pytest

from pemhd.cli import main
from pemhd.diagnostics import DiagnosticsRecord
from pemhd.harness import read_fit_csv, read_sweep_csv
from pemhd import snapshot

BASE_CONFIG = """\
[grid]
L1 = 6.283185307179586
L2 = 6.283185307179586
Lz = 2.0
Nx = 8
Ny = 8
Nz = 8
dealias = 2/3

[solver]
dt = 0.02
T = 0.1
integrator = IMEX_CNAB2
output_every = 1

[init]
seed = 11
decay = 3.0
amplitude = 0.4

[sweep]
eps_list = 0.4,0.2,0.1
jobs = 1
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE_CONFIG)
    return str(path)


class TestRunCommand:
    def test_pem_run_writes_artifacts(self, config_path, tmp_path):
        out = tmp_path / "out"
        code = main(["run", "--system", "pem", "--config", config_path,
                     "--out", str(out)])
        assert code == 0
        record = DiagnosticsRecord.read_csv(out / "diagnostics.csv")
        assert len(record) == 6  # floor(T/dt) + 1 rows at output_every = 1
        final = snapshot.read_snapshot(out / "final.pemsnap")
        assert final.system == "PEM"
        assert final.t == pytest.approx(0.1)
        assert (out / "manifest").exists()

    def test_smhd_requires_eps(self, config_path, tmp_path, capsys):
        code = main(["run", "--system", "smhd", "--config", config_path,
                     "--out", str(tmp_path / "x")])
        assert code == 2
        assert "error: config" in capsys.readouterr().err

    def test_eps_from_config_section(self, tmp_path):
        cfg = tmp_path / "eps.cfg"
        cfg.write_text(BASE_CONFIG.replace("[solver]", "[solver]\neps = 0.2"))
        out = tmp_path / "out"
        assert main(["run", "--system", "smhd", "--config", str(cfg),
                     "--out", str(out)]) == 0
        final = snapshot.read_snapshot(out / "final.pemsnap")
        assert final.eps == 0.2

    def test_thin_grid_auto_derived(self, config_path, tmp_path):
        out = tmp_path / "thin"
        code = main(["run", "--system", "mhd-thin", "--config", config_path,
                     "--eps", "0.1", "--out", str(out)])
        assert code == 0
        final = snapshot.read_snapshot(out / "final.pemsnap")
        assert final.grid.Lz == pytest.approx(0.2)
        assert final.system == "MHD_THIN"

    def test_missing_seed_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "noseed.cfg"
        cfg.write_text(BASE_CONFIG.replace("seed = 11\n", ""))
        code = main(["run", "--system", "pem", "--config", str(cfg),
                     "--out", str(tmp_path / "x")])
        assert code == 2
        assert "seed" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["run", "--system", "pem", "--config",
                     str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "x")])
        assert code == 2

    def test_unknown_system_rejected_by_parser(self, config_path):
        with pytest.raises(SystemExit) as err:
            main(["run", "--system", "euler", "--config", config_path])
        assert err.value.code == 2

    def test_blowup_exit_code_and_partial_csv(self, tmp_path, capsys):
        cfg = tmp_path / "blow.cfg"
        cfg.write_text(BASE_CONFIG.replace(
            "[solver]", "[solver]\nblowup_threshold = 1e-9"))
        out = tmp_path / "out"
        code = main(["run", "--system", "pem", "--config", str(cfg),
                     "--out", str(out)])
        assert code == 1
        assert "blowup" in capsys.readouterr().err
        assert (out / "diagnostics.csv").exists()

    def test_init_snapshot_round(self, config_path, tmp_path):
        out1 = tmp_path / "first"
        assert main(["run", "--system", "pem", "--config", config_path,
                     "--out", str(out1)]) == 0
        out2 = tmp_path / "second"
        code = main(["run", "--system", "pem", "--config", config_path,
                     "--init-snapshot", str(out1 / "final.pemsnap"),
                     "--out", str(out2)])
        assert code == 0
        final = snapshot.read_snapshot(out2 / "final.pemsnap")
        assert final.t == pytest.approx(0.2)

    def test_snapshot_system_mismatch(self, config_path, tmp_path, capsys):
        out1 = tmp_path / "first"
        main(["run", "--system", "pem", "--config", config_path,
              "--out", str(out1)])
        code = main(["run", "--system", "smhd", "--config", config_path,
                     "--eps", "0.1",
                     "--init-snapshot", str(out1 / "final.pemsnap"),
                     "--out", str(tmp_path / "x")])
        assert code == 2


class TestSweepCommand:
    def test_sweep_writes_results(self, config_path, tmp_path, capsys):
        out = tmp_path / "sweep"
        code = main(["sweep", "--config", config_path, "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "slope=" in printed
        rows = read_sweep_csv(out / "sweep.csv")
        assert [r.eps for r in rows] == [0.4, 0.2, 0.1]
        fits = read_fit_csv(out / "fit.csv")
        assert set(fits) == {"l2", "h1"}

    def test_eps_list_flag_overrides(self, config_path, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--config", config_path, "--out", str(out),
                     "--eps-list", "0.5,0.25,0.125"])
        assert code == 0
        rows = read_sweep_csv(out / "sweep.csv")
        assert [r.eps for r in rows] == [0.5, 0.25, 0.125]

    def test_too_few_eps_usage_error(self, config_path, tmp_path, capsys):
        code = main(["sweep", "--config", config_path,
                     "--eps-list", "0.2,0.1", "--out", str(tmp_path / "x")])
        assert code == 2

    def test_env_jobs_override_recorded(self, config_path, tmp_path,
                                        monkeypatch):
        monkeypatch.setenv("PEMHD_JOBS", "1")
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", config_path,
                     "--out", str(out)]) == 0
        manifest = (out / "manifest").read_text()
        assert "env_pemhd_jobs = 1" in manifest


class TestVerifyCommand:
    def test_inequalities_suite(self, capsys):
        code = main(["verify", "--suite", "inequalities", "--seed", "3",
                     "--samples", "5"])
        assert code == 0
        out = capsys.readouterr().out
        assert "PASS ratios_finite" in out
        assert "empirical_constants" in out

    def test_scaling_suite(self, capsys):
        assert main(["verify", "--suite", "scaling", "--seed", "3"]) == 0
        assert "PASS scaling_eps1" in capsys.readouterr().out

    def test_energy_suite(self, capsys):
        assert main(["verify", "--suite", "energy", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "PASS budget_residual" in out and "PASS budget_order" in out

    def test_seed_required(self, capsys):
        assert main(["verify", "--suite", "scaling"]) == 2

    def test_unknown_suite_rejected(self):
        with pytest.raises(SystemExit) as err:
            main(["verify", "--suite", "bogus", "--seed", "1"])
        assert err.value.code == 2
