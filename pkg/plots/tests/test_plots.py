"""Figure generation from solver CSV artifacts.

The data/ directory holds artifacts captured from a real desk-scale
convergence sweep; synthetic CSVs below exercise the exact-slope cases.
"""

import os
import shutil

import numpy as np
import pytest

from pemhd_plots import plot_convergence, plot_energy
from pemhd_plots.cli import main
from pemhd_plots.csvio import (MalformedCsvError, read_diagnostics,
                               read_fit, read_sweep)

DATA = os.path.join(os.path.dirname(__file__), "data")


def _write_synthetic_sweep(tmp_path, eps_values, power, prefactor=0.37):
    """sweep.csv / fit.csv pair for values exactly prefactor * eps^power."""
    sweep = tmp_path / "sweep.csv"
    lines = ["eps,sup_l2_diff,sup_h1_diff,grad_diss_integral,wall_time_s,status"]
    for eps in eps_values:
        v = prefactor * eps**power
        lines.append(f"{eps!r},{v!r},{2 * v!r},0.0,1.0,ok")
    sweep.write_text("\n".join(lines) + "\n")
    fit = tmp_path / "fit.csv"
    fit.write_text(
        "norm,slope,intercept,residual\n"
        f"l2,{float(power)!r},{float(np.log(prefactor))!r},0.0\n"
        f"h1,{float(power)!r},{float(np.log(2 * prefactor))!r},0.0\n"
    )
    return sweep, fit


class TestConvergenceFigure:
    def test_real_sweep_artifacts(self, tmp_path):
        out = tmp_path / "conv.png"
        meta = plot_convergence(os.path.join(DATA, "sweep.csv"),
                                os.path.join(DATA, "fit.csv"), out)
        assert out.exists() and out.stat().st_size > 0
        assert meta["n_points"] == 8  # 4 ratios x 2 norms
        assert set(meta["lines"]) == {"l2", "h1", "guide"}

    def test_annotated_slopes_match_fit_csv_to_3_decimals(self, tmp_path):
        out = tmp_path / "conv.png"
        meta = plot_convergence(os.path.join(DATA, "sweep.csv"),
                                os.path.join(DATA, "fit.csv"), out)
        fits = read_fit(os.path.join(DATA, "fit.csv"))
        for norm in ("l2", "h1"):
            label = next(a for a in meta["annotations"]
                         if a.startswith(norm.upper()))
            annotated = float(label.split("=")[1])
            assert annotated == pytest.approx(round(fits[norm]["slope"], 3),
                                              abs=5e-4)

    def test_synthetic_slope_one_coincides_with_guide(self, tmp_path):
        sweep, fit = _write_synthetic_sweep(
            tmp_path, [0.2, 0.1, 0.05, 0.025], power=1)
        meta = plot_convergence(sweep, fit, tmp_path / "conv.png")
        span_fit, line_fit = meta["lines"]["l2"]
        span_guide, line_guide = meta["lines"]["guide"]
        np.testing.assert_array_equal(span_fit, span_guide)
        assert np.abs(np.log(line_fit) - np.log(line_guide)).max() < 1e-10

    def test_empty_ok_rows_rejected(self, tmp_path):
        sweep, fit = _write_synthetic_sweep(tmp_path, [0.2, 0.1, 0.05], 1)
        sweep.write_text(sweep.read_text().replace(",ok", ",blowup"))
        with pytest.raises(ValueError, match="no ok rows"):
            plot_convergence(sweep, fit, tmp_path / "x.png")

    def test_malformed_sweep_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("eps,nope\n0.1,2\n")
        fit = tmp_path / "fit.csv"
        shutil.copy(os.path.join(DATA, "fit.csv"), fit)
        with pytest.raises(MalformedCsvError):
            plot_convergence(bad, fit, tmp_path / "x.png")

    def test_deterministic_output_bytes(self, tmp_path):
        args = (os.path.join(DATA, "sweep.csv"), os.path.join(DATA, "fit.csv"))
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        plot_convergence(*args, a)
        plot_convergence(*args, b)
        assert a.read_bytes() == b.read_bytes()


class TestEnergyFigure:
    def test_real_diagnostics(self, tmp_path):
        out = tmp_path / "energy.png"
        meta = plot_energy(os.path.join(DATA, "diagnostics.csv"), out)
        assert out.exists() and out.stat().st_size > 0
        # a dissipative run: energy is monotone nonincreasing
        assert np.all(np.diff(meta["E"]) <= 1e-12 * meta["E"][0])

    def test_zero_trajectory_flat_lines(self, tmp_path):
        diag = tmp_path / "diag.csv"
        rows = "\n".join(f"{0.1 * i!r},0.0,0.0" for i in range(5))
        diag.write_text("t,E,D\n" + rows + "\n")
        meta = plot_energy(diag, tmp_path / "energy.png")
        assert np.abs(meta["E"]).max() == 0.0
        assert np.abs(meta["residual"]).max() == 0.0

    def test_analytic_decay_residual(self, tmp_path):
        # E = exp(-2t), D = exp(-2t): the continuum budget closes exactly,
        # so the rendered residual is just the trapezoid error
        t = np.linspace(0.0, 1.0, 101)
        diag = tmp_path / "diag.csv"
        lines = ["t,E,D"] + [
            f"{float(ti)!r},{float(np.exp(-2 * ti))!r},{float(np.exp(-2 * ti))!r}"
            for ti in t
        ]
        diag.write_text("\n".join(lines) + "\n")
        meta = plot_energy(diag, tmp_path / "energy.png")
        assert np.abs(meta["residual"]).max() < 1e-4

    def test_malformed_diagnostics_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,EE\n0,1\n")
        with pytest.raises(MalformedCsvError):
            plot_energy(bad, tmp_path / "x.png")

    def test_empty_file_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("")
        with pytest.raises(MalformedCsvError):
            plot_energy(bad, tmp_path / "x.png")


class TestCli:
    def test_convergence_command(self, tmp_path, capsys):
        out = tmp_path / "c.png"
        code = main(["convergence", os.path.join(DATA, "sweep.csv"),
                     os.path.join(DATA, "fit.csv"), str(out)])
        assert code == 0 and out.exists()
        printed = capsys.readouterr().out
        assert "slope =" in printed

    def test_energy_command(self, tmp_path):
        out = tmp_path / "e.png"
        assert main(["energy", os.path.join(DATA, "diagnostics.csv"),
                     str(out)]) == 0
        assert out.exists()

    def test_bad_input_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n")
        code = main(["convergence", str(bad), str(bad),
                     str(tmp_path / "x.png")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["convergence"])
        assert err.value.code == 2


class TestCsvReaders:
    def test_read_sweep_roundtrip(self):
        rows = read_sweep(os.path.join(DATA, "sweep.csv"))
        assert [r["eps"] for r in rows] == [0.2, 0.1, 0.05, 0.025]

    def test_read_fit_requires_rows(self, tmp_path):
        empty = tmp_path / "fit.csv"
        empty.write_text("norm,slope,intercept,residual\n")
        with pytest.raises(MalformedCsvError, match="no fit rows"):
            read_fit(empty)

    def test_read_diagnostics_ragged_row(self, tmp_path):
        bad = tmp_path / "diag.csv"
        bad.write_text("t,E,D\n0.0,1.0\n")
        with pytest.raises(MalformedCsvError, match="ragged"):
            read_diagnostics(bad)
