"""Tests for cost-coherence verdicts and pricing envelopes."""

import numpy as np
import pytest

from coverplan.audit import RegionLabelTable
from coverplan.conformal import REGIONS
from coverplan.costs import (
    ACTIONS,
    COMMIT0,
    COMMIT1,
    COMMIT_ON_SINGLETONS,
    REJECT,
    Convention,
    CostRates,
    check_convention,
    coherent_action,
    pricing_envelope,
    region_risks,
    rejection_band_limit,
)


def table_with(cells):
    counts = np.zeros((4, 2), dtype=int)
    for (region, y), c in cells.items():
        counts[REGIONS.index(region), y] = c
    return RegionLabelTable(counts=counts, n_total=int(counts.sum()))


class TestRegionRisks:
    def test_pure_class0_region(self):
        assert region_risks(0.0, CostRates(1, 1, 0.3)) == (0.0, 1.0, 0.3)

    def test_mixed_region(self):
        assert region_risks(0.5, CostRates(2, 1, 0.4)) == (1.0, 0.5, 0.4)

    def test_ratio_form(self):
        # lam = 1, rho = 0.2 at eta = 0.9
        assert region_risks(0.9, CostRates(1, 1, 0.2)) == pytest.approx((0.9, 0.1, 0.2))

    def test_domain(self):
        with pytest.raises(ValueError):
            region_risks(1.5, CostRates(1, 1))
        with pytest.raises(ValueError):
            CostRates(0, 1)
        with pytest.raises(ValueError):
            CostRates(1, 1, -0.1)


class TestCoherentAction:
    def test_high_eta_commits_1(self):
        # (1 - eta) = 0.1 beats eta*lam = 0.9 and rho = 0.2
        assert coherent_action(0.9, CostRates(1, 1, 0.2)) == (COMMIT1,)

    def test_three_way_tie(self):
        assert coherent_action(0.5, CostRates(1, 1, 0.5)) == ACTIONS

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            eta = float(rng.uniform())
            costs = CostRates(float(rng.uniform(0.1, 5)), float(rng.uniform(0.1, 5)),
                              float(rng.uniform(0, 3)))
            risks = dict(zip(ACTIONS, region_risks(eta, costs)))
            best = min(risks.values())
            want = tuple(a for a in ACTIONS if risks[a] == best)
            assert coherent_action(eta, costs) == want

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            eta = float(rng.uniform())
            c01, c10, c_rej = rng.uniform(0.1, 4, 3)
            scale = float(rng.uniform(0.01, 100))
            a = coherent_action(eta, CostRates(c01, c10, c_rej))
            b = coherent_action(eta, CostRates(scale * c01, scale * c10, scale * c_rej))
            assert a == b


class TestCheckConvention:
    def test_paper_style_singleton_case(self):
        # eta_01 = 0.9, lam = 1, rho = 0.2: committing 1 on r01 is coherent
        # since 0.9 >= max(1/(1+lam), 1-rho) = max(0.5, 0.8)
        table = table_with({("r01", 0): 1, ("r01", 1): 9, ("r10", 0): 10})
        report = check_convention(table, COMMIT_ON_SINGLETONS, CostRates(1, 1, 0.2))
        assert report.verdict("r01").coherent

    def test_incoherent_mixed_singleton(self):
        # eta_10 = 0.6 violates eta_10 <= min(1/(1+lam), rho/lam) = min(0.5, 0.2)
        table = table_with({("r10", 0): 4, ("r10", 1): 6, ("r01", 1): 10})
        report = check_convention(table, COMMIT_ON_SINGLETONS, CostRates(1, 1, 0.2))
        assert not report.verdict("r10").coherent
        assert not report.coherent

    def test_empty_region_vacuous(self):
        table = table_with({("r10", 0): 5, ("r01", 1): 5})
        report = check_convention(table, COMMIT_ON_SINGLETONS, CostRates(1, 1, 0.2))
        v = report.verdict("r00")
        assert not v.occupied and v.coherent

    def test_consistency_with_coherent_action(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            counts = rng.integers(0, 20, size=(4, 2))
            if counts.sum() == 0:
                continue
            table = RegionLabelTable(counts=counts, n_total=int(counts.sum()))
            conv = Convention("random", {r: ACTIONS[rng.integers(0, 3)] for r in REGIONS})
            costs = CostRates(*rng.uniform(0.2, 4, 2), float(rng.uniform(0, 2)))
            report = check_convention(table, conv, costs)
            for v in report.verdicts:
                if not v.occupied:
                    assert v.coherent
                    continue
                assert v.coherent == (conv(v.region) in coherent_action(v.eta, costs))

    def test_expected_cost(self):
        table = table_with({("r10", 0): 6, ("r10", 1): 2, ("r11", 0): 1, ("r11", 1): 1})
        costs = CostRates(2, 1, 0.5)
        report = check_convention(table, COMMIT_ON_SINGLETONS, costs)
        # commit0 on r10: 2 wrong of 10 at c01=2; reject on r11: 2 of 10 at 0.5
        assert report.expected_cost == pytest.approx((2 * 2 + 2 * 0.5) / 10)

    def test_scale_invariance_of_verdicts(self):
        rng = np.random.default_rng(5)
        counts = rng.integers(0, 30, size=(4, 2))
        table = RegionLabelTable(counts=counts, n_total=int(counts.sum()))
        for scale in (0.25, 1, 7.5):
            base = check_convention(table, COMMIT_ON_SINGLETONS, CostRates(1.2, 0.8, 0.3))
            scaled = check_convention(
                table, COMMIT_ON_SINGLETONS, CostRates(1.2 * scale, 0.8 * scale, 0.3 * scale)
            )
            for a, b in zip(base.verdicts, scaled.verdicts):
                assert a.coherent == b.coherent


class TestPricingEnvelope:
    def test_rejection_band_at_lam_one(self):
        table = table_with({("r11", 0): 5, ("r11", 1): 5})
        conv = Convention("all_reject", {r: REJECT for r in REGIONS})
        lam = np.array([1.0])
        rho = np.linspace(0, 1, 21)
        env = pricing_envelope(table, conv, lam, rho)
        feasible_rhos = rho[env.intersection[0]]
        assert feasible_rhos.max() <= 0.5 + 1e-9
        # above lam/(1+lam) the band flag trips
        assert env.rejection_band_violated[0, rho > 0.5].all()
        assert not env.rejection_band_violated[0, rho < 0.5].any()

    def test_all_reject_eta_half(self):
        # eta = 0.5 everywhere, lam = 1: reject coherent iff rho <= 0.5
        table = table_with({("r10", 0): 1, ("r10", 1): 1, ("r01", 0): 1, ("r01", 1): 1})
        conv = Convention("all_reject", {r: REJECT for r in REGIONS})
        lam = np.array([1.0])
        rho = np.linspace(0, 1, 41)
        env = pricing_envelope(table, conv, lam, rho)
        want = rho <= 0.5 + 1e-12
        assert np.array_equal(env.intersection[0], want)

    def test_mutually_exclusive_constraints_empty(self):
        # commit1 on a pure-0 region demands rho >= 1 and lam <= 0: empty wedge
        table = table_with({("r10", 0): 10})
        conv = Convention("bad", {"r10": COMMIT1, "r01": COMMIT0, "r11": REJECT, "r00": REJECT})
        env = pricing_envelope(table, conv,
                               np.geomspace(0.1, 10, 21), np.linspace(0, 0.9, 21))
        assert not env.intersection.any()

    def test_lattice_matches_verdicts(self):
        # every feasible lattice point agrees with a direct risk comparison
        rng = np.random.default_rng(12)
        counts = rng.integers(1, 25, size=(4, 2))
        table = RegionLabelTable(counts=counts, n_total=int(counts.sum()))
        env = pricing_envelope(table, COMMIT_ON_SINGLETONS,
                               np.geomspace(0.2, 5, 9), np.linspace(0.01, 0.99, 9))
        for i, lam in enumerate(env.lam_grid):
            for j, rho in enumerate(env.rho_grid):
                report = check_convention(table, COMMIT_ON_SINGLETONS,
                                          CostRates(lam, 1.0, rho))
                assert env.intersection[i, j] == report.coherent, (lam, rho)

    def test_rejection_band_identity(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            c01, c10 = rng.uniform(0.1, 5, 2)
            c_rej = float(rng.uniform(0, 3))
            costs = CostRates(c01, c10, c_rej)
            lhs = c_rej <= c01 * c10 / (c01 + c10)
            rhs = costs.rho <= rejection_band_limit(costs.lam) + 1e-12
            assert lhs == rhs

    def test_totality_required(self):
        with pytest.raises(ValueError):
            Convention("partial", {"r10": COMMIT0})
        with pytest.raises(ValueError):
            Convention("weird", {"r10": "punt", "r01": COMMIT0, "r11": REJECT, "r00": REJECT})
