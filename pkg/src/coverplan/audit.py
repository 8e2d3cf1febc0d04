"""Region-label auditing and finite-window predictive envelopes.

The audit split is classified once under frozen thresholds into a 4x2
region-label count table. That table is the reusable sufficient summary:
every linear operational rate (coverage, commitment, abstention, decisive
error, ...) is a sum of selected cells, picked out by a binary mask, and
each projected count induces an exact Beta-Binomial predictive envelope for
the matching count over a future deployment window.

When no audit split exists, a leave-one-out surrogate classifies each
calibration point under thresholds refit without it; pooled fold events play
the role of audit counts, optionally widened by an inflation factor that
shrinks the effective sample size without moving the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import (
    REGIONS,
    InsufficientClassData,
    Policy,
    ScoreSample,
    Thresholds,
    fit_thresholds,
    region_codes,
)
from .dists import predictive_interval
from .gridsel import GridSelection, Infeasible
from .conformal import select_index

__all__ = [
    "EmptyAudit",
    "RegionLabelTable",
    "KpiMask",
    "PredictiveEnvelope",
    "LooSummary",
    "tabulate",
    "project",
    "builtin_masks",
    "outcome_masks",
    "purity",
    "envelope_two_sample",
    "loo_region_table",
    "loo_counts",
    "loo_fold_rates",
    "envelope_loo",
    "hoeffding_envelope",
    "loo_variance_diag",
]


class EmptyAudit(ValueError):
    """Tabulation was asked for on an empty sample."""


@dataclass(frozen=True)
class RegionLabelTable:
    """Counts K[r, y] over the four regions by the two labels.

    Rows follow :data:`coverplan.conformal.REGIONS` order
    (r10, r11, r01, r00); columns are labels 0 and 1.
    """

    counts: np.ndarray
    n_total: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=int)
        if counts.shape != (4, 2):
            raise ValueError(f"counts must be 4x2, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        if counts.sum() != self.n_total:
            raise ValueError(f"counts sum to {counts.sum()}, expected n_total={self.n_total}")
        if self.n_total <= 0:
            raise EmptyAudit("region-label table needs at least one row")
        object.__setattr__(self, "counts", counts)

    @property
    def probs(self) -> np.ndarray:
        """Cell frequencies K[r, y] / n_total."""
        return self.counts / self.n_total

    def region_mass(self, region: str) -> float:
        return float(self.counts[REGIONS.index(region)].sum()) / self.n_total

    def label_frequency(self, region: str, label: int) -> float | None:
        """Within-region frequency of ``label``; None when the region is empty."""
        row = self.counts[REGIONS.index(region)]
        total = row.sum()
        if total == 0:
            return None
        return float(row[label]) / float(total)


@dataclass(frozen=True)
class KpiMask:
    """A 4x2 binary cell selector defining one linear operational rate."""

    name: str
    cells: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != (4, 2):
            raise ValueError(f"mask cells must be 4x2, got {cells.shape}")
        object.__setattr__(self, "cells", cells)


@dataclass(frozen=True)
class PredictiveEnvelope:
    """Equal-tailed interval for a KPI count over a future window of size m."""

    kpi: str
    m: int
    point: float
    lo: int
    hi: int
    level: float
    source: str  # "two_sample" | "loo" | "hoeffding"
    infl: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.lo <= self.hi <= self.m:
            raise ValueError(f"envelope endpoints out of order: {self.lo}..{self.hi} of {self.m}")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")

    def contains(self, count: int) -> bool:
        return self.lo <= count <= self.hi

    @property
    def width(self) -> int:
        return self.hi - self.lo


@dataclass(frozen=True)
class LooSummary:
    """Pooled leave-one-out event count for one KPI."""

    kpi: str
    n_loo: int
    n: int
    fold_rates: tuple | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.n_loo <= self.n:
            raise ValueError(f"n_loo={self.n_loo} outside [0, {self.n}]")

    @property
    def rate(self) -> float:
        return self.n_loo / self.n


def tabulate(sample: ScoreSample, t: Thresholds) -> RegionLabelTable:
    """Exact region-label counts of ``sample`` under frozen thresholds.

    The sample must be disjoint from the calibration data that produced the
    thresholds (caller contract) for the counts to support exchangeable
    predictive envelopes.
    """
    if len(sample) == 0:
        raise EmptyAudit("cannot tabulate an empty sample")
    codes = region_codes(sample.scores, t)
    counts = np.zeros((4, 2), dtype=int)
    np.add.at(counts, (codes, sample.labels), 1)
    return RegionLabelTable(counts=counts, n_total=len(sample))


def project(table: RegionLabelTable, mask: KpiMask) -> tuple[int, float]:
    """Masked cell sum and its rate: the KPI count and frequency on the audit."""
    count = int(table.counts[mask.cells].sum())
    return count, count / table.n_total


def _mask_from_predicate(name: str, pred) -> KpiMask:
    cells = np.zeros((4, 2), dtype=bool)
    for r, region in enumerate(REGIONS):
        for y in (0, 1):
            cells[r, y] = bool(pred(region, y))
    return KpiMask(name=name, cells=cells)


def builtin_masks(policy: Policy) -> list[KpiMask]:
    """The standard KPI masks induced by a deployment policy.

    Emits coverage, singleton (total and per reported class), doublet,
    abstention, wrong-singleton (decisive error), missed-positive and
    hedged-positive masks, each as a pure cell selector.
    """
    out = [
        _mask_from_predicate("coverage", lambda r, y: y in policy(r)),
        _mask_from_predicate("singleton", lambda r, y: len(policy(r)) == 1),
        _mask_from_predicate("singleton_0", lambda r, y: policy(r) == {0}),
        _mask_from_predicate("singleton_1", lambda r, y: policy(r) == {1}),
        _mask_from_predicate("doublet", lambda r, y: len(policy(r)) == 2),
        _mask_from_predicate("abstention", lambda r, y: len(policy(r)) == 0),
        _mask_from_predicate(
            "wrong_singleton", lambda r, y: len(policy(r)) == 1 and y not in policy(r)
        ),
        _mask_from_predicate("missed_positive", lambda r, y: y == 1 and policy(r) == {0}),
        _mask_from_predicate("hedged_positive", lambda r, y: y == 1 and len(policy(r)) == 2),
    ]
    return out


def outcome_masks(policy: Policy) -> list[KpiMask]:
    """Six joint outcome masks that partition all mass under any policy.

    Per true label: committed-correct, committed-wrong, and deferred (no
    singleton commitment). Their counts always sum to the table total, which
    is the conservation identity swept menus are checked against.
    """
    def committed(r):
        return len(policy(r)) == 1

    return [
        _mask_from_predicate("correct0", lambda r, y: y == 0 and policy(r) == {0}),
        _mask_from_predicate("waste", lambda r, y: y == 0 and policy(r) == {1}),
        _mask_from_predicate("hedge0", lambda r, y: y == 0 and not committed(r)),
        _mask_from_predicate("correct1", lambda r, y: y == 1 and policy(r) == {1}),
        _mask_from_predicate("loss", lambda r, y: y == 1 and policy(r) == {0}),
        _mask_from_predicate("hedge1", lambda r, y: y == 1 and not committed(r)),
    ]


def purity(table: RegionLabelTable, region: str, label: int) -> float | None:
    """Within-region frequency of ``label``; None (undefined) on empty regions."""
    if region not in REGIONS:
        raise ValueError(f"unknown region {region!r}")
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    return table.label_frequency(region, label)


def _bb_envelope(kpi: str, k_eff: float, n_eff: float, m: int, level: float,
                 offset: float, source: str, infl: float, point: float) -> PredictiveEnvelope:
    a = k_eff + offset
    b = (n_eff - k_eff) + offset
    lo, hi = predictive_interval(level, m, a, b)
    return PredictiveEnvelope(kpi=kpi, m=m, point=point, lo=lo, hi=hi,
                              level=level, source=source, infl=infl)


def envelope_two_sample(count: int, n_audit: int, m: int, level: float = 0.95,
                        offset: float = 1.0, kpi: str = "") -> PredictiveEnvelope:
    """Predictive envelope for a future m-window count from audit evidence.

    The window count is Beta-Binomial(m; count + offset, n_audit - count +
    offset); the point estimate is the plug-in m * count / n_audit.
    """
    if not 0 <= count <= n_audit:
        raise ValueError(f"count={count} outside [0, {n_audit}]")
    if m < 1:
        raise ValueError(f"window size must be >= 1, got m={m}")
    if offset <= 0:
        raise ValueError(f"offset must be positive, got {offset}")
    return _bb_envelope(kpi, float(count), float(n_audit), m, level, offset,
                        "two_sample", 1.0, m * count / n_audit)


def _reduced_index(sel: GridSelection, n_reduced: int, refit_index: bool) -> int:
    if n_reduced < 1:
        raise InsufficientClassData(
            f"leave-one-out fold leaves no calibration point (class size {n_reduced + 1})"
        )
    if not refit_index:
        return min(sel.u, n_reduced)
    reduced = select_index(sel.method, sel.alpha_star, sel.delta, n_reduced, sel.window)
    if isinstance(reduced, Infeasible):
        raise InsufficientClassData(
            f"selection {sel.method} infeasible at reduced class size {n_reduced}"
        )
    return reduced.u


def _loo_taus(sample: ScoreSample, sel0: GridSelection, sel1: GridSelection,
              refit_index: bool) -> tuple[np.ndarray, np.ndarray]:
    """Per-item thresholds (tau0, tau1) of the rule fit without that item.

    Removing item i only moves its own class's threshold; the other class
    keeps its full-sample value. For the reduced class, the new order
    statistic is read off the full sorted array with a rank shift, so each
    fold costs O(1) after one sort per class.
    """
    deployed = fit_thresholds(sample, sel0, sel1)
    tau = np.tile([deployed.tau0, deployed.tau1], (len(sample), 1))
    for y, sel in ((0, sel0), (1, sel1)):
        members = np.flatnonzero(sample.labels == y)
        cls = sample.scores[members, y]
        n_y = len(cls)
        u_red = _reduced_index(sel, n_y - 1, refit_index)
        k_red = n_y - u_red  # = (n_y - 1) + 1 - u_red
        order = np.argsort(cls, kind="stable")
        sorted_cls = cls[order]
        ranks = np.empty(n_y, dtype=int)
        ranks[order] = np.arange(n_y)
        # dropping sorted position p shifts later entries down one slot
        idx = np.where(k_red - 1 < ranks, k_red - 1, k_red)
        tau[members, y] = sorted_cls[idx]
    return tau[:, 0], tau[:, 1]


def loo_region_table(sample: ScoreSample, sel0: GridSelection, sel1: GridSelection,
                     refit_index: bool = True) -> RegionLabelTable:
    """Pooled leave-one-out region-label events as a count table.

    Each calibration item is classified under thresholds refit on the sample
    minus that item; by default grid indices are re-derived by the same
    selection rule at the reduced class size (``refit_index=False`` freezes
    the deployed index instead).
    """
    if len(sample) == 0:
        raise EmptyAudit("cannot run leave-one-out on an empty sample")
    tau0, tau1 = _loo_taus(sample, sel0, sel1, refit_index)
    b0 = sample.scores[:, 0] <= tau0
    b1 = sample.scores[:, 1] <= tau1
    codes = np.full(len(sample), 3, dtype=int)
    codes[b0 & ~b1] = 0
    codes[b0 & b1] = 1
    codes[~b0 & b1] = 2
    counts = np.zeros((4, 2), dtype=int)
    np.add.at(counts, (codes, sample.labels), 1)
    return RegionLabelTable(counts=counts, n_total=len(sample))


def loo_counts(sample: ScoreSample, sel0: GridSelection, sel1: GridSelection,
               masks: list[KpiMask], refit_index: bool = True,
               with_fold_rates: bool = False) -> list[LooSummary]:
    """Pooled leave-one-out success counts for each KPI mask.

    With ``with_fold_rates=True`` each summary also carries the KPI rate of
    every fold's rule evaluated on the whole sample, the input to
    :func:`loo_variance_diag`.
    """
    table = loo_region_table(sample, sel0, sel1, refit_index)
    out = []
    fold_rates = loo_fold_rates(sample, sel0, sel1, masks, refit_index) if with_fold_rates else None
    for j, mask in enumerate(masks):
        n_loo, _ = project(table, mask)
        rates = tuple(fold_rates[j]) if fold_rates is not None else None
        out.append(LooSummary(kpi=mask.name, n_loo=n_loo, n=len(sample), fold_rates=rates))
    return out


def loo_fold_rates(sample: ScoreSample, sel0: GridSelection, sel1: GridSelection,
                   masks: list[KpiMask], refit_index: bool = True) -> list[np.ndarray]:
    """KPI rate of each fold's rule applied to the full sample (one rate per fold)."""
    tau0, tau1 = _loo_taus(sample, sel0, sel1, refit_index)
    s0 = sample.scores[:, [0]]  # items x 1
    s1 = sample.scores[:, [1]]
    b0 = s0 <= tau0[None, :]  # items x folds
    b1 = s1 <= tau1[None, :]
    codes = np.full(b0.shape, 3, dtype=int)
    codes[b0 & ~b1] = 0
    codes[b0 & b1] = 1
    codes[~b0 & b1] = 2
    labels = sample.labels[:, None]
    out = []
    for mask in masks:
        hit = mask.cells[codes, labels]
        out.append(hit.mean(axis=0))
    return out


def envelope_loo(summary: LooSummary, m: int, level: float = 0.95,
                 infl: float = 1.0, offset: float = 1.0) -> PredictiveEnvelope:
    """Predictive envelope from pooled leave-one-out evidence.

    Inflation shrinks the effective evidence to n/infl successes-and-trials
    (shapes may be fractional), widening the interval monotonically while the
    pooled mean stays put; infl=1 coincides with the two-sample construction
    on (n_loo, n).
    """
    if infl < 1.0:
        raise ValueError(f"infl must be >= 1, got {infl}")
    if m < 1:
        raise ValueError(f"window size must be >= 1, got m={m}")
    if offset <= 0:
        raise ValueError(f"offset must be positive, got {offset}")
    n_eff = summary.n / infl
    k_eff = summary.n_loo / infl
    return _bb_envelope(summary.kpi, k_eff, n_eff, m, level, offset,
                        "loo", infl, m * summary.rate)


def hoeffding_envelope(rate: float, m: int, budget: float) -> tuple[float, float]:
    """Worst-case rate band: the window rate stays within sqrt(ln(2/budget)/(2m))
    of the proxy rate except with probability ``budget``."""
    if m < 1:
        raise ValueError(f"window size must be >= 1, got m={m}")
    if not 0.0 < budget < 1.0:
        raise ValueError(f"budget must lie in (0, 1), got {budget}")
    eps = math.sqrt(math.log(2.0 / budget) / (2.0 * m))
    return max(0.0, rate - eps), min(1.0, rate + eps)


def loo_variance_diag(fold_rates) -> tuple[float, float]:
    """Mean and unbiased sample variance of per-fold rates."""
    rates = np.asarray(fold_rates, dtype=float)
    if rates.ndim != 1 or len(rates) < 2:
        raise ValueError("need at least two fold rates")
    return float(rates.mean()), float(rates.var(ddof=1))
