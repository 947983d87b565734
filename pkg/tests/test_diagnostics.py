"""Energy functionals, difference metrics, inequality evaluators, and the
diagnostics CSV schema."""

import numpy as np
import pytest

from pemhd import grid as sg
from pemhd.fields import (ScalarField, random_admissible_state,
                          scale_up, state_from_spec, zero_state)
from pemhd.diagnostics import (CSV_COLUMNS, DiagnosticsRecord,
                               difference_metrics, energy, l2_sq,
                               lemma21_ratio, lemma22_ratio, phys_l2_sq,
                               state_row)


class TestEnergy:
    def test_zero_state(self, grid16):
        assert energy(zero_state(grid16), 0.1) == (0.0, 0.0)

    def test_single_sine_mode_hand_value(self, grid16):
        # u1 = c sin(x) on (2pi)^2 x (-1,1): the integral of sin^2 is half
        # the box volume, E = c^2 |Omega| / 2 = 4 pi^2 c^2
        c = 0.7
        x, _, _ = grid16.mesh()
        zeros = np.zeros(grid16.shape, dtype=complex)
        st = state_from_spec(grid16, sg.forward(grid16, c * np.sin(x)),
                             zeros, zeros, zeros, zeros, zeros)
        e, d = energy(st, 0.3)
        assert e == pytest.approx(c**2 * 4 * np.pi**2, rel=1e-12)
        assert d == pytest.approx(c**2 * 4 * np.pi**2, rel=1e-12)  # |k| = 1

    def test_scaling_weight_consistency(self, grid16):
        # the unweighted energy of the thin-domain relabeling equals
        # eps times the weighted fixed-domain energy
        eps = 0.2
        st = random_admissible_state(grid16, 1, 3.0, 0.5, eps=eps,
                                     system="SMHD")
        e_fixed, _ = energy(st, eps)
        thin = scale_up(st, eps)
        e_thin, _ = energy(thin, 1.0)
        assert e_thin == pytest.approx(eps * e_fixed, rel=1e-12)


class TestDifferenceMetrics:
    def test_identical_states(self, grid16):
        st = random_admissible_state(grid16, 2, 3.0, 0.5, eps=0.1,
                                     system="SMHD")
        m = difference_metrics(st, st.copy())
        assert m.l2_diff == 0.0 and m.h1_diff == 0.0 and m.grad_diss == 0.0

    def test_single_mode_difference_parseval(self, grid16):
        a = 1e-3
        st = random_admissible_state(grid16, 3, 3.0, 0.5, eps=0.1,
                                     system="SMHD")
        other = st.copy()
        x, _, _ = grid16.mesh()
        other.u1 = ScalarField.from_spec(
            grid16, st.u1.spec() + sg.forward(grid16, a * np.sin(x)))
        m = difference_metrics(other, st.retag("PEM", 0.0))
        assert m.l2_diff == pytest.approx(a * np.sqrt(4 * np.pi**2),
                                          rel=1e-10)

    def test_symmetric_in_arguments(self, grid16):
        s1 = random_admissible_state(grid16, 4, 3.0, 0.5, eps=0.1,
                                     system="SMHD")
        s2 = random_admissible_state(grid16, 5, 3.0, 0.5)
        m12 = difference_metrics(s1, s2)
        m21 = difference_metrics(s2, s1)
        assert m12 == m21

    def test_triangle_inequality(self, grid16):
        sts = [random_admissible_state(grid16, s, 3.0, 0.5, eps=0.1,
                                       system="SMHD") for s in (6, 7, 8)]
        d = lambda a, b: difference_metrics(a, b).l2_diff
        assert d(sts[0], sts[2]) <= d(sts[0], sts[1]) + d(sts[1], sts[2]) + 1e-12

    def test_grid_and_time_mismatch(self, grid8, grid16):
        a = zero_state(grid8, system="SMHD", eps=0.1)
        b = zero_state(grid16, system="PEM")
        with pytest.raises(ValueError, match="grids"):
            difference_metrics(a, b)
        c = zero_state(grid8, system="PEM")
        c.t = 1.0
        with pytest.raises(ValueError, match="times"):
            difference_metrics(a, c)


class TestLemma21:
    def test_zero_beta(self, grid16):
        st = random_admissible_state(grid16, 9, 3.0, 0.5)
        lhs, rhs, ratio = lemma21_ratio(st.u1, ScalarField.zeros(grid16),
                                        st.u2)
        assert lhs == 0.0 and ratio == 0.0

    def test_constant_fields_hand_value(self, grid16):
        one = ScalarField.from_phys(grid16, np.ones(grid16.shape))
        lhs, rhs, ratio = lemma21_ratio(one, one, one)
        # z-integrals equal 2, the horizontal integral contributes |M|
        assert lhs == pytest.approx(4 * (2 * np.pi) ** 2, rel=1e-12)
        vol = (2 * np.pi) ** 2 * 2.0
        assert rhs == pytest.approx(vol ** 1.5, rel=1e-12)
        assert ratio == pytest.approx(lhs / rhs, rel=1e-14)

    def test_amplitude_homogeneity(self, grid16):
        st = random_admissible_state(grid16, 10, 3.0, 0.5)
        a, b, c = st.u1, st.b1, st.u2
        _, _, r0 = lemma21_ratio(a, b, c)
        for lam, field in ((2.5, 0), (17.0, 1), (0.125, 2)):
            fields = [a, b, c]
            fields[field] = ScalarField.from_spec(
                grid16, lam * fields[field].spec())
            _, _, r1 = lemma21_ratio(*fields)
            assert abs(r1 - r0) / abs(r0) < 1e-10

    def test_ensemble_finite(self, grid16):
        ratios = []
        for seed in range(20):
            st = random_admissible_state(grid16, 100 + seed, 3.0, 0.5)
            _, _, ratio = lemma21_ratio(st.u1, st.b1, st.u2)
            ratios.append(ratio)
        assert np.all(np.isfinite(ratios))


class TestLemma22:
    def _phi(self, grid, seed):
        st = random_admissible_state(grid, seed, 3.0, 0.5)
        return (st.u1, st.u2, st.u3), st.b1, st.b2

    def test_zero_psi(self, grid16):
        phi, q, _ = self._phi(grid16, 11)
        lhs, rhs, ratio = lemma22_ratio(phi, q, ScalarField.zeros(grid16))
        assert lhs == 0.0 and ratio == 0.0

    def test_constant_scalar_gives_zero_ratio(self, grid16):
        phi, _, psi = self._phi(grid16, 12)
        const = ScalarField.from_phys(grid16, np.full(grid16.shape, 2.0))
        lhs, rhs, ratio = lemma22_ratio(phi, const, psi)
        assert lhs < 1e-14 and rhs == 0.0 and ratio == 0.0

    def test_divergence_hypothesis_enforced(self, grid16):
        st = random_admissible_state(grid16, 13, 3.0, 0.5)
        bad = (st.u1, st.u2, st.u1)  # vertical replaced: not solenoidal
        with pytest.raises(ValueError, match="divergence"):
            lemma22_ratio(bad, st.b1, st.b2)

    def test_z0_hypothesis_enforced(self, grid16):
        x, _, z = grid16.mesh()
        phi1 = ScalarField.from_phys(grid16,
                                     np.pi * np.sin(x) * np.sin(np.pi * z))
        phi3 = ScalarField.from_phys(grid16, np.cos(x) * np.cos(np.pi * z))
        phi = (phi1, ScalarField.zeros(grid16), phi3)
        st = random_admissible_state(grid16, 14, 3.0, 0.5)
        with pytest.raises(ValueError, match="z = 0"):
            lemma22_ratio(phi, st.b1, st.b2)

    def test_mean_hypothesis_enforced(self, grid16):
        st = random_admissible_state(grid16, 15, 3.0, 0.5)
        c = st.u1.spec().copy()
        c[0, 0, 0] = 1.0
        bad = (ScalarField.from_spec(grid16, c), st.u2, st.u3)
        with pytest.raises(ValueError, match="mean"):
            lemma22_ratio(bad, st.b1, st.b2)

    def test_joint_homogeneity(self, grid16):
        phi, q, psi = self._phi(grid16, 16)
        _, _, r0 = lemma22_ratio(phi, q, psi)
        lam = 4.2
        phi_l = tuple(ScalarField.from_spec(grid16, lam * f.spec(),
                                            parity=f.parity) for f in phi)
        psi_l = ScalarField.from_spec(grid16, lam * psi.spec())
        _, _, r1 = lemma22_ratio(phi_l, q, psi_l)
        assert abs(r1 - r0) / abs(r0) < 1e-10


class TestDiagnosticsRecord:
    def _record(self, with_diff=False):
        rec = DiagnosticsRecord()
        for i in range(4):
            row = {c: float(i + j) for j, c in enumerate(CSV_COLUMNS[:10])}
            row["t"] = 0.1 * i
            if with_diff:
                row["l2_diff"] = 0.01 * i
                row["h1_diff"] = 0.02 * i
            rec.append(row)
        return rec

    def test_monotone_time_enforced(self):
        rec = self._record()
        with pytest.raises(ValueError, match="increasing"):
            rec.append({"t": 0.0, "E": 1.0})

    def test_finite_entries_enforced(self):
        rec = DiagnosticsRecord()
        with pytest.raises(ValueError, match="non-finite"):
            rec.append({"t": 0.0, "E": np.nan})

    @pytest.mark.parametrize("with_diff", [False, True])
    def test_csv_round_trip(self, tmp_path, with_diff):
        rec = self._record(with_diff)
        path = tmp_path / "diag.csv"
        rec.write_csv(path)
        back = DiagnosticsRecord.read_csv(path)
        assert back.rows == rec.rows
        header = path.read_text().splitlines()[0]
        n = 12 if with_diff else 10
        assert header == ",".join(CSV_COLUMNS[:n])

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,bogus\n0.0,1.0\n")
        with pytest.raises(ValueError, match="malformed"):
            DiagnosticsRecord.read_csv(path)

    def test_state_row_schema(self, grid16):
        st = random_admissible_state(grid16, 17, 3.0, 0.5, eps=0.1,
                                     system="SMHD")
        row = state_row(st, 0.1)
        assert list(row) == list(CSV_COLUMNS[:10])
        assert row["l2_eps_u3"] == pytest.approx(
            0.1 * np.sqrt(l2_sq(grid16, st.u3.spec())))


def test_parseval_dual_route(grid16):
    rng = np.random.default_rng(18)
    f = ScalarField.from_phys(grid16, rng.standard_normal(grid16.shape))
    assert abs(phys_l2_sq(f) - l2_sq(grid16, f.spec())) < 1e-11 * phys_l2_sq(f)
