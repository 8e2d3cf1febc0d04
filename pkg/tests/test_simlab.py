"""Tests for the Monte Carlo studies (desk-scale replicate counts)."""

import dataclasses
import math

import numpy as np
import pytest

from coverplan.simlab import (
    CoverageStudySpec,
    EnvelopeStudySpec,
    coupling_covariance,
    coverage_study_to_csv,
    exhaustive_coupling,
    run_coupling_check,
    run_coverage_study,
    run_envelope_study,
)


def rows_by(rows, **match):
    out = [r for r in rows if all(getattr(r, k) == v for k, v in match.items())]
    return out[0] if len(out) == 1 else out


SMALL_COVERAGE = CoverageStudySpec(n_cal_grid=(50, 100), reps=20_000, seed=7)


class TestCoverageStudy:
    def test_reference_row_n100(self):
        rows = run_coverage_study(SMALL_COVERAGE)
        row = rows_by(rows, n_cal=100, method="ssbc")
        assert row.u == 6
        assert row.beta_theory == pytest.approx(0.0576, abs=5e-5)
        assert row.bb_theory == pytest.approx(0.0956, abs=5e-5)
        assert row.obs == pytest.approx(row.bb_theory, abs=4 * row.mc_se)

    def test_reference_row_n50(self):
        rows = run_coverage_study(SMALL_COVERAGE)
        row = rows_by(rows, n_cal=50, method="ssbc")
        assert row.u == 2
        assert row.bb_theory == pytest.approx(0.0472, abs=1.5e-4)

    def test_obs_matches_theory_all_rows(self):
        for row in run_coverage_study(SMALL_COVERAGE):
            assert row.obs == pytest.approx(
                row.bb_theory, abs=4 * math.sqrt(max(row.bb_theory * (1 - row.bb_theory), 1e-8) / SMALL_COVERAGE.reps)
            ), (row.n_cal, row.method)

    def test_conservatism_ordering(self):
        rows = run_coverage_study(SMALL_COVERAGE)
        for n in SMALL_COVERAGE.n_cal_grid:
            obs = {m: rows_by(rows, n_cal=n, method=m).obs for m in ("nominal", "ssbc", "dkwm")}
            assert obs["dkwm"] <= obs["ssbc"] <= obs["nominal"]

    def test_determinism(self):
        a = run_coverage_study(SMALL_COVERAGE)
        b = run_coverage_study(SMALL_COVERAGE)
        assert a == b

    def test_seed_changes_obs(self):
        a = run_coverage_study(SMALL_COVERAGE)
        b = run_coverage_study(dataclasses.replace(SMALL_COVERAGE, seed=8))
        assert any(x.obs != y.obs for x, y in zip(a, b))
        assert all(x.bb_theory == y.bb_theory for x, y in zip(a, b))

    def test_degenerate_single_rep(self):
        rows = run_coverage_study(CoverageStudySpec(n_cal_grid=(50,), reps=1, seed=1))
        assert all(r.obs in (0.0, 1.0) for r in rows)

    def test_csv_export(self, tmp_path):
        rows = run_coverage_study(CoverageStudySpec(n_cal_grid=(50,), reps=100, seed=2))
        path = coverage_study_to_csv(rows, tmp_path / "coverage.csv")
        lines = path.read_text().strip().splitlines()
        assert lines[0].startswith("n_cal,method,u,alpha_grid,obs")
        assert len(lines) == 1 + len(rows)
        # dkwm rows carry alpha_cont, others leave the field empty
        nominal_line = [l for l in lines[1:] if ",nominal," in l][0]
        assert nominal_line.split(",")[7] == ""


SMALL_ENVELOPE = EnvelopeStudySpec(p_class=0.5, class1_shape=(4, 3), reps=120, seed=11)


class TestEnvelopeStudy:
    def test_containment_near_level(self):
        report = run_envelope_study(SMALL_ENVELOPE)
        for a in report.alignments:
            assert a.containment_freq >= 0.95 - 3 * max(a.mc_se, math.sqrt(0.95 * 0.05 / report.reps_used))

    def test_superset_always(self):
        report = run_envelope_study(SMALL_ENVELOPE)
        for a in report.alignments:
            assert a.superset_frac == 1.0

    def test_loo_tracks_reference(self):
        report = run_envelope_study(SMALL_ENVELOPE)
        for a in report.alignments:
            assert a.loo_inside_freq >= 0.90

    def test_determinism(self):
        assert run_envelope_study(SMALL_ENVELOPE) == run_envelope_study(SMALL_ENVELOPE)

    def test_imbalanced_geometry_runs(self):
        report = run_envelope_study(
            EnvelopeStudySpec(p_class=0.1, class1_shape=(9, 3), reps=60, seed=3)
        )
        assert report.reps_used + report.reps_skipped == 60

    def test_unknown_kpi_rejected(self):
        with pytest.raises(ValueError, match="unknown KPI"):
            run_envelope_study(EnvelopeStudySpec(kpis=("sharpe",), reps=2))


class TestCouplingCheck:
    def test_closed_form_values(self):
        assert coupling_covariance(10, 5) == pytest.approx(-5 * 5 / (100 * 9))
        assert coupling_covariance(10, 5) == pytest.approx(-0.02778, abs=5e-6)
        assert coupling_covariance(2, 1) == -0.25

    def test_mc_matches_theory(self):
        check = run_coupling_check(10, 5, reps=100_000, seed=5)
        assert abs(check.estimate - check.theory) <= 3 * check.mc_se

    def test_exhaustive_tiny_case(self):
        assert exhaustive_coupling(2, 1) == pytest.approx(-0.25)
        assert exhaustive_coupling(4, 2) == pytest.approx(coupling_covariance(4, 2))

    def test_k_equals_n_degenerate(self):
        check = run_coupling_check(6, 6, reps=2000, seed=1)
        assert check.estimate == 0.0
        assert check.theory == 0.0

    def test_determinism(self):
        a = run_coupling_check(8, 3, reps=5000, seed=9)
        b = run_coupling_check(8, 3, reps=5000, seed=9)
        assert a == b
