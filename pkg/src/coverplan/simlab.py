"""Seeded Monte Carlo studies validating the calibration and envelope laws.

Three studies, each deterministic for a fixed (spec, seed):

* coverage: draws calibration sets from a heavy-tailed score model, selects
  grid indices under each rule, and measures how often empirical coverage
  over a finite window falls strictly below the target, against the exact
  Beta / Beta-Binomial theory columns.
* envelopes: draws paired calibration/audit sets from a controlled Beta
  probability model and checks that two-sample predictive envelopes contain
  realized future-window counts at their nominal level, and that pooled
  leave-one-out evidence tracks the two-sample reference.
* coupling: estimates the pairwise covariance of threshold-crossing
  indicators conditional on the realized order-statistic threshold, against
  its closed form k(k-n) / (n^2 (n-1)).

Replicate substreams are spawned from a single root seed, so serial and
parallel execution orders agree.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from pathlib import Path

import numpy as np

from .audit import builtin_masks, envelope_loo, envelope_two_sample, loo_region_table, project, tabulate
from .conformal import PI_SI, ScoreSample, fit_thresholds
from .dists import beta_cdf, betabinom_cdf
from .gridsel import GridSelection, Infeasible, dkwm_index, nominal_index, ssbc_index, strict_count_threshold

__all__ = [
    "CoverageStudySpec",
    "CoverageStudyRow",
    "run_coverage_study",
    "coverage_study_to_csv",
    "EnvelopeStudySpec",
    "EnvelopeStudyReport",
    "KpiAlignment",
    "run_envelope_study",
    "draw_beta_model_sample",
    "CouplingCheck",
    "run_coupling_check",
    "coupling_covariance",
    "exhaustive_coupling",
]

_CHUNK = 20_000


# ---------------------------------------------------------------------------
# coverage study

@dataclass(frozen=True)
class CoverageStudySpec:
    """Grid of calibration sizes and index rules to stress."""

    n_cal_grid: tuple = (50, 75, 100, 150, 200, 250, 300, 500)
    methods: tuple = ("nominal", "ssbc", "dkwm")
    alpha_star: float = 0.10
    delta: float = 0.10
    m_infer: int = 100
    reps: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        object.__setattr__(self, "n_cal_grid", tuple(self.n_cal_grid))
        object.__setattr__(self, "methods", tuple(self.methods))


@dataclass(frozen=True)
class CoverageStudyRow:
    n_cal: int
    method: str
    u: int
    alpha_grid: float
    obs: float
    beta_theory: float
    bb_theory: float
    alpha_cont: float | None
    mc_se: float


_SELECT = {"nominal": nominal_index, "dkwm": dkwm_index, "ssbc": ssbc_index}


def _abs_cauchy(rng: np.random.Generator, shape) -> np.ndarray:
    # |Cauchy| via the tangent of a uniform half-angle
    return np.tan(0.5 * math.pi * rng.uniform(size=shape))


def _abs_cauchy_cdf(x: np.ndarray) -> np.ndarray:
    return (2.0 / math.pi) * np.arctan(x)


def run_coverage_study(spec: CoverageStudySpec) -> list[CoverageStudyRow]:
    """Observed finite-window violation rates against exact theory, per (n, method).

    Per replicate, a calibration set of heavy-tailed scores fixes the
    threshold at the method's order statistic; the induced coverage
    probability then drives a Binomial window draw, and a violation is the
    strict event {window coverage < 1 - alpha_star}.
    """
    x_star = strict_count_threshold(spec.alpha_star, spec.m_infer)
    children = np.random.SeedSequence(spec.seed).spawn(len(spec.n_cal_grid))
    rows = []
    for n_cal, child in zip(spec.n_cal_grid, children):
        sels: dict[str, GridSelection] = {}
        for method in spec.methods:
            sel = _SELECT[method](spec.alpha_star, spec.delta, n_cal,
                                  spec.m_infer if method == "ssbc" else None)
            if isinstance(sel, Infeasible):
                raise ValueError(f"{method} infeasible at n={n_cal}: floor {sel.floor:.4f}")
            sels[method] = sel
        ks = sorted({s.k for s in sels.values()})
        rng = np.random.default_rng(child)
        viol = {method: 0 for method in spec.methods}
        done = 0
        while done < spec.reps:
            block = min(_CHUNK, spec.reps - done)
            scores = _abs_cauchy(rng, (block, n_cal))
            part = np.partition(scores, kth=[k - 1 for k in ks], axis=1)
            for method in spec.methods:
                tau = part[:, sels[method].k - 1]
                p_cov = _abs_cauchy_cdf(tau)
                s_m = rng.binomial(spec.m_infer, p_cov)
                viol[method] += int((s_m < x_star).sum())
            done += block
        for method in spec.methods:
            sel = sels[method]
            obs = viol[method] / spec.reps
            rows.append(CoverageStudyRow(
                n_cal=n_cal,
                method=method,
                u=sel.u,
                alpha_grid=sel.alpha_grid,
                obs=obs,
                beta_theory=beta_cdf(1.0 - spec.alpha_star, sel.k, sel.u),
                bb_theory=betabinom_cdf(x_star - 1, spec.m_infer, sel.k, sel.u),
                alpha_cont=sel.alpha_cont,
                mc_se=math.sqrt(max(obs * (1.0 - obs), 1e-12) / spec.reps),
            ))
    return rows


def coverage_study_to_csv(rows: list[CoverageStudyRow], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_cal", "method", "u", "alpha_grid", "obs",
                         "beta_theory", "bb_theory", "alpha_cont", "mc_se"])
        for r in rows:
            writer.writerow([
                r.n_cal, r.method, r.u, repr(r.alpha_grid), repr(r.obs),
                repr(r.beta_theory), repr(r.bb_theory),
                "" if r.alpha_cont is None else repr(r.alpha_cont),
                repr(r.mc_se),
            ])
    return path


# ---------------------------------------------------------------------------
# envelope study

@dataclass(frozen=True)
class EnvelopeStudySpec:
    """One geometry of the controlled Beta probability model."""

    p_class: float = 0.10
    class1_shape: tuple = (4, 3)
    class0_shape: tuple = (2, 7)
    n: int = 500
    alpha: float = 0.10
    delta: float = 0.10
    window: int = 100  # grid-selection window
    m: int = 100       # future deployment window
    level: float = 0.95
    infl_levels: tuple = (1.0, 2.0)
    kpis: tuple = ("singleton", "wrong_singleton")
    reps: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if any(s <= 0 for s in (*self.class1_shape, *self.class0_shape)):
            raise ValueError("Beta shapes must be positive")
        object.__setattr__(self, "infl_levels", tuple(self.infl_levels))
        object.__setattr__(self, "kpis", tuple(self.kpis))


@dataclass(frozen=True)
class KpiAlignment:
    """Per-KPI alignment summary across replicates."""

    kpi: str
    containment_freq: float      # future count inside the two-sample envelope
    loo_inside_freq: float       # LOO point (infl=1) inside the two-sample envelope
    superset_frac: float         # higher-infl interval contains lower-infl one
    mean_center_offset: float    # mean (loo rate - audit rate)
    mc_se: float                 # binomial SE of containment_freq


@dataclass(frozen=True)
class EnvelopeStudyReport:
    spec: EnvelopeStudySpec
    alignments: tuple
    reps_used: int
    reps_skipped: int

    def alignment(self, kpi: str) -> KpiAlignment:
        return next(a for a in self.alignments if a.kpi == kpi)


def draw_beta_model_sample(rng: np.random.Generator, spec: EnvelopeStudySpec,
                           size: int) -> ScoreSample:
    """Labels Bernoulli(p_class); class-1 probability drawn from the class's Beta."""
    y = (rng.uniform(size=size) < spec.p_class).astype(int)
    p1 = np.where(y == 1,
                  rng.beta(*spec.class1_shape, size=size),
                  rng.beta(*spec.class0_shape, size=size))
    return ScoreSample(scores=np.column_stack([p1, 1.0 - p1]), labels=y,
                       prob_normalized=True)


@lru_cache(maxsize=None)
def _ssbc_cached(alpha: float, delta: float, n: int, window: int | None):
    return ssbc_index(alpha, delta, n, window)


def run_envelope_study(spec: EnvelopeStudySpec) -> EnvelopeStudyReport:
    """Two-sample envelope calibration and LOO alignment over seeded replicates.

    Each replicate draws an independent calibration set, audit set (same
    size), and future window; rare replicates where a class is too small for
    the request are skipped and counted.
    """
    masks = [m for m in builtin_masks(PI_SI) if m.name in spec.kpis]
    if len(masks) != len(spec.kpis):
        known = [m.name for m in builtin_masks(PI_SI)]
        raise ValueError(f"unknown KPIs {set(spec.kpis) - set(known)}")
    infls = sorted(spec.infl_levels)
    children = np.random.SeedSequence(spec.seed).spawn(spec.reps)
    contain = {k: 0 for k in spec.kpis}
    loo_inside = {k: 0 for k in spec.kpis}
    superset = {k: 0 for k in spec.kpis}
    offsets = {k: 0.0 for k in spec.kpis}
    used = skipped = 0
    for child in children:
        rng = np.random.default_rng(child)
        cal = draw_beta_model_sample(rng, spec, spec.n)
        audit_set = draw_beta_model_sample(rng, spec, spec.n)
        future = draw_beta_model_sample(rng, spec, spec.m)
        sels = []
        for cls in (0, 1):
            sel = _ssbc_cached(spec.alpha, spec.delta, cal.class_count(cls), spec.window)
            if isinstance(sel, Infeasible):
                sel = None
            sels.append(sel)
        if None in sels or min(cal.class_count(0), cal.class_count(1)) < 2:
            skipped += 1
            continue
        thresholds = fit_thresholds(cal, *sels)
        audit_table = tabulate(audit_set, thresholds)
        future_table = tabulate(future, thresholds)
        loo_table = loo_region_table(cal, *sels)
        used += 1
        for mask in masks:
            count_audit, rate_audit = project(audit_table, mask)
            env = envelope_two_sample(count_audit, audit_table.n_total, spec.m,
                                      spec.level, kpi=mask.name)
            count_future, _ = project(future_table, mask)
            if env.contains(count_future):
                contain[mask.name] += 1
            n_loo, rate_loo = project(loo_table, mask)
            from .audit import LooSummary

            summary = LooSummary(kpi=mask.name, n_loo=n_loo, n=loo_table.n_total)
            loo_point = spec.m * summary.rate
            if env.lo <= loo_point <= env.hi:
                loo_inside[mask.name] += 1
            loo_envs = [envelope_loo(summary, spec.m, spec.level, infl) for infl in infls]
            if all(hi.lo <= lo.lo and hi.hi >= lo.hi
                   for lo, hi in zip(loo_envs, loo_envs[1:])):
                superset[mask.name] += 1
            offsets[mask.name] += rate_loo - rate_audit
    if used == 0:
        raise RuntimeError("every replicate was skipped; request is infeasible for this model")
    alignments = []
    for kpi in spec.kpis:
        freq = contain[kpi] / used
        alignments.append(KpiAlignment(
            kpi=kpi,
            containment_freq=freq,
            loo_inside_freq=loo_inside[kpi] / used,
            superset_frac=superset[kpi] / used,
            mean_center_offset=offsets[kpi] / used,
            mc_se=math.sqrt(max(freq * (1 - freq), 1e-12) / used),
        ))
    return EnvelopeStudyReport(spec=spec, alignments=tuple(alignments),
                               reps_used=used, reps_skipped=skipped)


# ---------------------------------------------------------------------------
# coupling check

def coupling_covariance(n: int, k: int) -> float:
    """Closed-form pairwise covariance of crossing indicators given the threshold."""
    if not 1 <= k <= n or n < 2:
        raise ValueError(f"need 1 <= k <= n and n >= 2, got n={n}, k={k}")
    return k * (k - n) / (n**2 * (n - 1))


@dataclass(frozen=True)
class CouplingCheck:
    n: int
    k: int
    reps: int
    estimate: float
    theory: float
    mc_se: float


def run_coupling_check(n: int, k: int, reps: int = 200_000, seed: int = 0) -> CouplingCheck:
    """Permutation estimate of the conditional indicator covariance.

    A fixed distinct score multiset is randomly permuted; conditioning on
    the realized threshold (the k-th smallest, constant for a fixed
    multiset) leaves exactly k crossing indicators set, and the estimate is
    the empirical covariance of the first two coordinates.
    """
    theory = coupling_covariance(n, k)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    base = np.tile(np.arange(n), (reps, 1))
    perms = rng.permuted(base, axis=1)
    # scores are 0..n-1; threshold is the k-th smallest value, k-1
    ind = perms[:, :2] <= (k - 1)
    i1 = ind[:, 0].astype(float)
    i2 = ind[:, 1].astype(float)
    prod_centered = (i1 - i1.mean()) * (i2 - i2.mean())
    estimate = float(prod_centered.mean())
    mc_se = float(prod_centered.std(ddof=1) / math.sqrt(reps))
    return CouplingCheck(n=n, k=k, reps=reps, estimate=estimate, theory=theory,
                         mc_se=mc_se)


def exhaustive_coupling(n: int, k: int) -> float:
    """Exact covariance by enumerating every permutation (tiny n only)."""
    vals = list(range(n))
    i1s, i2s = [], []
    for perm in permutations(vals):
        i1s.append(1.0 if perm[0] <= k - 1 else 0.0)
        i2s.append(1.0 if perm[1] <= k - 1 else 0.0)
    i1 = np.array(i1s)
    i2 = np.array(i2s)
    return float(((i1 - i1.mean()) * (i2 - i2.mean())).mean())
