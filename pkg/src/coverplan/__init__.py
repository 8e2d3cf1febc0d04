"""Deployment planning toolkit for split-conformal classifiers.

Calibrate a binary class-conditional conformal rule with exact small-sample
coverage semantics, audit the induced region-label behavior once, attach
finite-window Beta-Binomial envelopes to operational rates, screen
region-wired conventions for cost-coherence, and sweep coverage requests
into a deduplicated Pareto menu of operating regimes.
"""

from .audit import (
    EmptyAudit,
    KpiMask,
    LooSummary,
    PredictiveEnvelope,
    RegionLabelTable,
    builtin_masks,
    envelope_loo,
    envelope_two_sample,
    hoeffding_envelope,
    loo_counts,
    loo_region_table,
    loo_variance_diag,
    outcome_masks,
    project,
    purity,
    tabulate,
)
from .conformal import (
    PI_CR,
    PI_SE,
    PI_SI,
    REGIONS,
    InsufficientClassData,
    MondrianConformalClassifier,
    Policy,
    ScoreSample,
    Thresholds,
    apply_policy,
    fit_thresholds,
    region_of,
    region_triggered,
    regime_of,
)
from .costs import (
    COMMIT_ON_SINGLETONS,
    Convention,
    CostRates,
    check_convention,
    coherent_action,
    pricing_envelope,
    region_risks,
)
from .dists import (
    beta_cdf,
    beta_tail,
    betabinom_cdf,
    betabinom_pmf,
    betabinom_quantile,
    predictive_interval,
)
from .gridsel import (
    GridSelection,
    Infeasible,
    dkwm_index,
    feasibility_floor,
    nominal_index,
    semantic_map,
    ssbc_index,
)
from .planner import (
    OUTCOME_KPIS,
    OperatingPoint,
    SweepSpec,
    dedup,
    export_menu,
    flag_nondominated,
    pareto_filter,
    read_menu,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "beta_cdf", "beta_tail", "betabinom_cdf", "betabinom_pmf",
    "betabinom_quantile", "predictive_interval",
    "GridSelection", "Infeasible", "nominal_index", "dkwm_index", "ssbc_index",
    "feasibility_floor", "semantic_map",
    "REGIONS", "ScoreSample", "Thresholds", "Policy", "PI_SI", "PI_CR", "PI_SE",
    "region_triggered", "fit_thresholds", "region_of", "apply_policy",
    "regime_of", "InsufficientClassData", "MondrianConformalClassifier",
    "EmptyAudit", "RegionLabelTable", "KpiMask", "PredictiveEnvelope",
    "LooSummary", "tabulate", "project", "builtin_masks", "outcome_masks",
    "purity", "envelope_two_sample", "loo_region_table", "loo_counts",
    "envelope_loo", "hoeffding_envelope", "loo_variance_diag",
    "CostRates", "Convention", "COMMIT_ON_SINGLETONS", "region_risks",
    "coherent_action", "check_convention", "pricing_envelope",
    "SweepSpec", "OperatingPoint", "OUTCOME_KPIS", "sweep", "dedup",
    "pareto_filter", "flag_nondominated", "export_menu", "read_menu",
]
