"""Sweeping coverage requests into a deduplicated, Pareto-filtered menu.

A sweep walks the (alpha0, delta0, alpha1, delta1) request lattice, maps
each cell through exact grid selection to a realized interface (u0, u1),
audits the induced region-label table, and attaches the six joint outcome
rates with finite-window envelopes. Distinct requests frequently collapse to
the same realized interface, so the menu keeps one representative per
(u0, u1) class (the least conservative request) with its multiplicity, then
flags the oriented-Pareto nondominated regimes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .audit import (
    LooSummary,
    envelope_loo,
    envelope_two_sample,
    loo_region_table,
    outcome_masks,
    project,
    tabulate,
)
from .conformal import (
    BUILTIN_POLICIES,
    Policy,
    ScoreSample,
    Thresholds,
    fit_thresholds,
    regime_of,
    select_index,
)
from .gridsel import GridSelection, Infeasible

__all__ = [
    "OUTCOME_KPIS",
    "SweepSpec",
    "OperatingPoint",
    "SweepResult",
    "sweep",
    "dedup",
    "pareto_filter",
    "export_menu",
    "read_menu",
    "MENU_BASE_COLUMNS",
]

# fixed export order; matches audit.outcome_masks
OUTCOME_KPIS = ("correct0", "waste", "hedge0", "correct1", "loss", "hedge1")

DEFAULT_ORIENTATION = {"loss": -1, "hedge1": -1, "correct1": +1}

MENU_BASE_COLUMNS = [
    "regime_id", "multiplicity",
    "alpha0", "delta0", "alpha1", "delta1",
    "alpha_ssbc_0", "alpha_ssbc_1",
    "u0", "u1", "tau0", "tau1", "regime",
]


@dataclass(frozen=True)
class SweepSpec:
    """Request lattice plus the policy, window, and orientation settings."""

    alpha0_grid: tuple
    delta0_grid: tuple
    alpha1_grid: tuple
    delta1_grid: tuple
    window: int | None = 100
    policy: str = "si"
    m: int = 100
    level: float = 0.95
    kpis: tuple = ("loss", "hedge1", "correct1")
    orientation: dict = field(default_factory=lambda: dict(DEFAULT_ORIENTATION))
    mode: str = "two_sample"
    infl: float = 1.0
    offset: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha0_grid", "delta0_grid", "alpha1_grid", "delta1_grid"):
            grid = tuple(getattr(self, name))
            if not grid:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, grid)
        object.__setattr__(self, "kpis", tuple(self.kpis))
        missing = [k for k in self.kpis if k not in self.orientation]
        if missing:
            raise ValueError(f"orientation missing for KPIs {missing}")
        unknown = [k for k in self.kpis if k not in OUTCOME_KPIS]
        if unknown:
            raise ValueError(f"unknown KPIs {unknown}; available: {OUTCOME_KPIS}")
        if any(s not in (-1, 1) for s in self.orientation.values()):
            raise ValueError("orientation signs must be +1 or -1")
        if self.mode not in ("two_sample", "loo"):
            raise ValueError(f"mode must be 'two_sample' or 'loo', got {self.mode!r}")

    def resolve_policy(self) -> Policy:
        if isinstance(self.policy, Policy):
            return self.policy
        return BUILTIN_POLICIES[self.policy]


@dataclass
class OperatingPoint:
    """One realized calibration setting with its audited operational profile."""

    alpha0: float
    delta0: float
    alpha1: float
    delta1: float
    sel0: GridSelection
    sel1: GridSelection
    thresholds: Thresholds
    regime: str
    table: RegionLabelTable
    counts: dict
    rates: dict
    envelopes: dict
    nondominated: bool | None = None
    regime_id: int | None = None
    multiplicity: int = 1
    requests: tuple = ()

    @property
    def interface(self) -> tuple[int, int]:
        return (self.sel0.u, self.sel1.u)

    def rate_vector(self, kpis) -> np.ndarray:
        return np.array([self.rates[k] for k in kpis], dtype=float)


@dataclass(frozen=True)
class InfeasibleCell:
    request: tuple
    reason: str


@dataclass
class SweepResult:
    points: list
    infeasible: list
    spec: SweepSpec


@lru_cache(maxsize=None)
def _cached_index(method: str, alpha: float, delta: float, n: int, window):
    return select_index(method, alpha, delta, n, window)


def _point_for_request(request, spec: SweepSpec, cal: ScoreSample,
                       audit_sample: ScoreSample | None) -> OperatingPoint | InfeasibleCell:
    a0, d0, a1, d1 = request
    sels = []
    for cls, alpha, delta in ((0, a0, d0), (1, a1, d1)):
        sel = _cached_index("ssbc", alpha, delta, cal.class_count(cls), spec.window)
        if isinstance(sel, Infeasible):
            return InfeasibleCell(
                request=request,
                reason=f"class {cls}: alpha={alpha} below floor {sel.floor:.4f} at n={sel.n_cal}",
            )
        sels.append(sel)
    sel0, sel1 = sels
    thresholds = fit_thresholds(cal, sel0, sel1)
    policy = spec.resolve_policy()
    if spec.mode == "two_sample":
        table = tabulate(audit_sample, thresholds)
    else:
        table = loo_region_table(cal, sel0, sel1)
    counts, rates, envelopes = {}, {}, {}
    for mask in outcome_masks(policy):
        count, rate = project(table, mask)
        counts[mask.name] = count
        rates[mask.name] = rate
        if spec.mode == "two_sample":
            envelopes[mask.name] = envelope_two_sample(
                count, table.n_total, spec.m, spec.level, spec.offset, kpi=mask.name
            )
        else:
            summary = LooSummary(kpi=mask.name, n_loo=count, n=table.n_total)
            envelopes[mask.name] = envelope_loo(
                summary, spec.m, spec.level, spec.infl, spec.offset
            )
    total = sum(counts.values())
    if total != table.n_total:
        raise AssertionError(
            f"outcome masks failed to partition mass: {total} != {table.n_total}"
        )
    return OperatingPoint(
        alpha0=a0, delta0=d0, alpha1=a1, delta1=d1,
        sel0=sel0, sel1=sel1, thresholds=thresholds,
        regime=regime_of(thresholds), table=table,
        counts=counts, rates=rates, envelopes=envelopes,
        requests=(request,),
    )


def sweep(spec: SweepSpec, cal: ScoreSample,
          audit_sample: ScoreSample | None = None) -> SweepResult:
    """Evaluate every request cell; infeasible cells are recorded, not fatal."""
    if spec.mode == "two_sample":
        if audit_sample is None:
            raise ValueError("two_sample mode needs an audit sample (or use mode='loo')")
        if len(audit_sample) == 0:
            raise ValueError("audit sample is empty")
    points, infeasible = [], []
    for a0 in spec.alpha0_grid:
        for d0 in spec.delta0_grid:
            for a1 in spec.alpha1_grid:
                for d1 in spec.delta1_grid:
                    result = _point_for_request((a0, d0, a1, d1), spec, cal, audit_sample)
                    if isinstance(result, InfeasibleCell):
                        infeasible.append(result)
                    else:
                        points.append(result)
    return SweepResult(points=points, infeasible=infeasible, spec=spec)


def dedup(points: list) -> list:
    """One representative per realized interface (u0, u1).

    The representative is the least conservative member: lexicographically
    largest (alpha0, alpha1), then largest (delta0, delta1). Multiplicity and
    the collapsed request list are recorded; regime ids are assigned in
    (u0, u1) order.
    """
    groups: dict[tuple, list] = {}
    for p in points:
        groups.setdefault(p.interface, []).append(p)
    reps = []
    for rid, key in enumerate(sorted(groups)):
        members = groups[key]
        rep = max(members, key=lambda p: (p.alpha0, p.alpha1, p.delta0, p.delta1))
        rep = replace_point(rep,
                            multiplicity=len(members),
                            regime_id=rid,
                            requests=tuple(sorted(r for m in members for r in m.requests)))
        reps.append(rep)
    return reps


def replace_point(p: OperatingPoint, **changes) -> OperatingPoint:
    return replace(p, **changes)


def pareto_filter(values, orientation_signs) -> np.ndarray:
    """Nondominated flags for a matrix of oriented KPI values.

    A row is dominated when some other row is weakly better in every
    oriented coordinate and strictly better in at least one; identical rows
    survive together. Implemented as a vectorized row sweep that skips rows
    already known to be dominated (safe by transitivity of dominance).
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError(f"values must be 2-d, got shape {v.shape}")
    signs = np.asarray(orientation_signs, dtype=float)
    if signs.shape != (v.shape[1],):
        raise ValueError("one orientation sign per KPI column is required")
    v = v * signs  # larger is better everywhere now
    n = len(v)
    nd = np.ones(n, dtype=bool)
    for i in range(n):
        if not nd[i]:
            continue
        beaten = np.all(v <= v[i], axis=1) & np.any(v < v[i], axis=1)
        nd &= ~beaten
    return nd


def flag_nondominated(points: list, kpis, orientation: dict) -> list:
    """Return points with their ``nondominated`` flag set for this orientation."""
    if not points:
        return []
    values = np.array([p.rate_vector(kpis) for p in points])
    signs = [orientation[k] for k in kpis]
    flags = pareto_filter(values, signs)
    return [replace_point(p, nondominated=bool(f)) for p, f in zip(points, flags)]


def menu_columns() -> list:
    cols = list(MENU_BASE_COLUMNS)
    for kpi in OUTCOME_KPIS:
        cols += [f"{kpi}_rate", f"{kpi}_lo", f"{kpi}_hi"]
    cols.append("nondominated")
    return cols


def export_menu(points: list, path) -> Path:
    """Write the menu CSV: UTF-8, header row, '.' decimals, rows by regime id."""
    path = Path(path)
    rows = sorted(points, key=lambda p: (p.regime_id if p.regime_id is not None else 0))
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(menu_columns())
            for p in rows:
                record = [
                    p.regime_id, p.multiplicity,
                    repr(p.alpha0), repr(p.delta0), repr(p.alpha1), repr(p.delta1),
                    repr(p.sel0.alpha_grid), repr(p.sel1.alpha_grid),
                    p.sel0.u, p.sel1.u,
                    repr(p.thresholds.tau0), repr(p.thresholds.tau1),
                    p.regime,
                ]
                for kpi in OUTCOME_KPIS:
                    env = p.envelopes[kpi]
                    record += [repr(p.rates[kpi]), env.lo, env.hi]
                record.append("true" if p.nondominated else "false")
                writer.writerow(record)
    except OSError as exc:
        raise OSError(f"failed to write menu to {path}: {exc}") from exc
    return path


def read_menu(path) -> list[dict]:
    """Parse a menu CSV back into typed row dicts (floats via repr round-trip)."""
    path = Path(path)
    int_cols = {"regime_id", "multiplicity", "u0", "u1"}
    int_suffix = ("_lo", "_hi")
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for raw in reader:
                row = {}
                for key, val in raw.items():
                    if key in int_cols or key.endswith(int_suffix):
                        row[key] = int(val)
                    elif key == "regime":
                        row[key] = val
                    elif key == "nondominated":
                        row[key] = val == "true"
                    else:
                        row[key] = float(val)
                rows.append(row)
    except OSError as exc:
        raise OSError(f"failed to read menu from {path}: {exc}") from exc
    return rows
