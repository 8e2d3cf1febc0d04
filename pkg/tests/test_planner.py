"""Tests for the sweep pipeline, dedup, Pareto filter, and menu export."""

import numpy as np
import pytest

from coverplan.audit import envelope_two_sample, outcome_masks, project, tabulate
from coverplan.conformal import PI_SI, ScoreSample, fit_thresholds
from coverplan.gridsel import ssbc_index
from coverplan.planner import (
    OUTCOME_KPIS,
    SweepSpec,
    dedup,
    export_menu,
    flag_nondominated,
    menu_columns,
    pareto_filter,
    read_menu,
    sweep,
)


def synthetic_sample(seed, n=500, p_class=0.5, shape1=(4, 3), shape0=(2, 7)):
    rng = np.random.default_rng(seed)
    y = (rng.uniform(size=n) < p_class).astype(int)
    p1 = np.where(y == 1, rng.beta(*shape1, size=n), rng.beta(*shape0, size=n))
    return ScoreSample(scores=np.column_stack([p1, 1 - p1]), labels=y,
                       prob_normalized=True)


CAL = synthetic_sample(1)
AUD = synthetic_sample(2)


def small_spec(**kw):
    base = dict(
        alpha0_grid=(0.10,), delta0_grid=(0.10,),
        alpha1_grid=(0.10,), delta1_grid=(0.10,),
        window=100, m=100, level=0.95,
    )
    base.update(kw)
    return SweepSpec(**base)


class TestSweep:
    def test_single_cell_matches_manual_pipeline(self):
        result = sweep(small_spec(), CAL, AUD)
        assert len(result.points) == 1 and not result.infeasible
        point = result.points[0]

        sel0 = ssbc_index(0.10, 0.10, CAL.class_count(0), 100)
        sel1 = ssbc_index(0.10, 0.10, CAL.class_count(1), 100)
        t = fit_thresholds(CAL, sel0, sel1)
        table = tabulate(AUD, t)
        assert point.interface == (sel0.u, sel1.u)
        assert point.thresholds == t
        assert np.array_equal(point.table.counts, table.counts)
        for mask in outcome_masks(PI_SI):
            count, rate = project(table, mask)
            assert point.counts[mask.name] == count
            assert point.rates[mask.name] == rate
            env = envelope_two_sample(count, table.n_total, 100, 0.95, 1.0)
            assert (point.envelopes[mask.name].lo, point.envelopes[mask.name].hi) == (env.lo, env.hi)

    def test_grid_matches_cellwise_recomputation(self):
        spec = small_spec(
            alpha0_grid=(0.08, 0.10, 0.15), delta0_grid=(0.05, 0.10, 0.20),
            alpha1_grid=(0.08, 0.10, 0.15), delta1_grid=(0.05, 0.10, 0.20),
        )
        result = sweep(spec, CAL, AUD)
        assert len(result.points) + len(result.infeasible) == 81
        for p in result.points[:: max(1, len(result.points) // 12)]:
            single = small_spec(
                alpha0_grid=(p.alpha0,), delta0_grid=(p.delta0,),
                alpha1_grid=(p.alpha1,), delta1_grid=(p.delta1,),
            )
            again = sweep(single, CAL, AUD).points[0]
            assert again.interface == p.interface
            assert again.rates == p.rates

    def test_infeasible_cells_collected(self):
        spec = small_spec(alpha0_grid=(0.001, 0.10), delta0_grid=(0.10,))
        result = sweep(spec, CAL, AUD)
        assert len(result.infeasible) == 1
        assert "floor" in result.infeasible[0].reason
        assert len(result.points) == 1

    def test_two_sample_requires_audit(self):
        with pytest.raises(ValueError, match="audit"):
            sweep(small_spec(), CAL, None)

    def test_loo_mode(self):
        result = sweep(small_spec(mode="loo", infl=2.0), CAL, None)
        point = result.points[0]
        assert point.table.n_total == len(CAL)
        assert all(env.source == "loo" and env.infl == 2.0
                   for env in point.envelopes.values())

    def test_conservation_on_every_point(self):
        spec = small_spec(
            alpha0_grid=(0.08, 0.15), delta0_grid=(0.10,),
            alpha1_grid=(0.08, 0.15), delta1_grid=(0.05, 0.20),
        )
        for p in sweep(spec, CAL, AUD).points:
            assert sum(p.counts[k] for k in OUTCOME_KPIS) == p.table.n_total


class TestDedup:
    def test_identical_interfaces_collapse(self):
        spec = small_spec(delta0_grid=(0.09, 0.10, 0.11))
        points = sweep(spec, CAL, AUD).points
        interfaces = {p.interface for p in points}
        reps = dedup(points)
        assert len(reps) == len(interfaces)
        assert sum(r.multiplicity for r in reps) == len(points)

    def test_all_distinct_is_identity(self):
        spec = small_spec(alpha0_grid=(0.05, 0.25))
        points = sweep(spec, CAL, AUD).points
        if len({p.interface for p in points}) == len(points):
            reps = dedup(points)
            assert len(reps) == len(points)
            assert all(r.multiplicity == 1 for r in reps)

    def test_representative_is_least_conservative(self):
        spec = small_spec(delta0_grid=(0.09, 0.10, 0.11), delta1_grid=(0.10, 0.12))
        points = sweep(spec, CAL, AUD).points
        for rep in dedup(points):
            members = [p for p in points if p.interface == rep.interface]
            best = max((p.alpha0, p.alpha1, p.delta0, p.delta1) for p in members)
            assert (rep.alpha0, rep.alpha1, rep.delta0, rep.delta1) == best
            assert rep.multiplicity == len(members)

    def test_dedup_soundness(self):
        # every member of a class shares thresholds, table, and rate vector
        spec = small_spec(delta0_grid=(0.09, 0.10, 0.11), alpha1_grid=(0.10, 0.11))
        points = sweep(spec, CAL, AUD).points
        by_iface = {}
        for p in points:
            by_iface.setdefault(p.interface, []).append(p)
        for members in by_iface.values():
            first = members[0]
            for other in members[1:]:
                assert other.thresholds == first.thresholds
                assert np.array_equal(other.table.counts, first.table.counts)
                assert other.rates == first.rates

    def test_regime_ids_sorted(self):
        spec = small_spec(alpha0_grid=(0.05, 0.10, 0.20))
        reps = dedup(sweep(spec, CAL, AUD).points)
        assert [r.regime_id for r in reps] == list(range(len(reps)))
        assert [r.interface for r in reps] == sorted(r.interface for r in reps)


def brute_force_front(values, signs):
    v = np.asarray(values) * np.asarray(signs)
    n = len(v)
    flags = np.ones(n, dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if np.all(v[j] >= v[i]) and np.any(v[j] > v[i]):
                flags[i] = False
                break
    return flags


class TestParetoFilter:
    def test_mutually_incomparable(self):
        pts = [(1, 1), (2, 0), (0, 2)]
        assert pareto_filter(pts, [-1, -1]).all()

    def test_strict_dominance(self):
        flags = pareto_filter([(1, 1), (2, 2)], [-1, -1])
        assert list(flags) == [True, False]

    def test_duplicates_survive_together(self):
        flags = pareto_filter([(1, 1), (1, 1), (0, 2)], [-1, -1])
        assert list(flags) == [True, True, True]
        flags = pareto_filter([(1, 1), (1, 1), (0, 0)], [-1, -1])
        assert list(flags) == [False, False, True]

    def test_random_clouds_match_oracle(self):
        rng = np.random.default_rng(1234)
        for trial in range(50):
            pts = rng.uniform(size=(200, 3))
            signs = rng.choice([-1, 1], size=3)
            assert np.array_equal(pareto_filter(pts, signs),
                                  brute_force_front(pts, signs)), trial

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(size=(100, 3))
        signs = [-1, -1, 1]
        flags = pareto_filter(pts, signs)
        again = pareto_filter(pts[flags], signs)
        assert again.all()

    def test_orientation_flip(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(size=(80, 3))
        signs = np.array([-1.0, 1.0, -1.0])
        flipped = pts.copy()
        flipped[:, 1] *= -1
        s2 = signs.copy()
        s2[1] *= -1
        assert np.array_equal(pareto_filter(pts, signs), pareto_filter(flipped, s2))

    def test_flag_points(self):
        spec = small_spec(alpha0_grid=(0.05, 0.10, 0.20), alpha1_grid=(0.05, 0.10, 0.20))
        reps = dedup(sweep(spec, CAL, AUD).points)
        flagged = flag_nondominated(reps, spec.kpis, spec.orientation)
        values = np.array([p.rate_vector(spec.kpis) for p in reps])
        signs = [spec.orientation[k] for k in spec.kpis]
        assert [p.nondominated for p in flagged] == list(brute_force_front(values, signs))


class TestMenuExport:
    def _menu_points(self):
        spec = small_spec(alpha0_grid=(0.05, 0.10, 0.20), delta0_grid=(0.10, 0.15))
        reps = dedup(sweep(spec, CAL, AUD).points)
        return flag_nondominated(reps, spec.kpis, spec.orientation)

    def test_header_only_for_empty(self, tmp_path):
        path = export_menu([], tmp_path / "menu.csv")
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1
        assert lines[0].split(",") == menu_columns()

    def test_round_trip(self, tmp_path):
        points = self._menu_points()
        path = export_menu(points, tmp_path / "menu.csv")
        rows = read_menu(path)
        assert len(rows) == len(points)
        for row, p in zip(rows, points):
            assert row["regime_id"] == p.regime_id
            assert row["multiplicity"] == p.multiplicity
            assert row["u0"] == p.sel0.u and row["u1"] == p.sel1.u
            assert row["tau0"] == p.thresholds.tau0  # repr round-trips exactly
            assert row["alpha_ssbc_0"] == p.sel0.alpha_grid
            for kpi in OUTCOME_KPIS:
                assert row[f"{kpi}_rate"] == p.rates[kpi]
                assert row[f"{kpi}_lo"] == p.envelopes[kpi].lo
                assert row[f"{kpi}_hi"] == p.envelopes[kpi].hi
            assert row["nondominated"] == p.nondominated

    def test_row_count_is_regime_count(self, tmp_path):
        points = self._menu_points()
        path = export_menu(points, tmp_path / "menu.csv")
        assert len(read_menu(path)) == len(points)

    def test_write_error_carries_path(self, tmp_path):
        with pytest.raises(OSError, match="no/such"):
            export_menu([], tmp_path / "no" / "such" / "menu.csv")


class TestSpecValidation:
    def test_orientation_must_cover_kpis(self):
        with pytest.raises(ValueError, match="orientation"):
            small_spec(kpis=("loss", "waste"), orientation={"loss": -1})

    def test_unknown_kpi(self):
        with pytest.raises(ValueError, match="unknown KPI"):
            small_spec(kpis=("profit",), orientation={"profit": 1})

    def test_empty_grid(self):
        with pytest.raises(ValueError, match="nonempty"):
            small_spec(alpha0_grid=())

    def test_bad_mode(self):
        with pytest.raises(ValueError, match="mode"):
            small_spec(mode="bootstrap")
