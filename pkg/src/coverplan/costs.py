"""Cost-coherence screening of region-wired action conventions.

A convention maps each region to one of three actions (commit to 0, commit
to 1, reject). Given the audited within-region label frequencies and Chow
costs (false negative c01, false positive c10, rejection c_rej), the
convention is coherent when its prescribed action minimizes conditional
risk in every mass-bearing region; empty regions are vacuously coherent.

Because only action comparisons matter, everything reduces to the two cost
ratios lam = c01/c10 and rho = c_rej/c10, and each region's coherent set is an
intersection of half-planes in the (lam, rho) plane -- the inverse pricing
view: given the wiring, which prices make it rational?
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audit import RegionLabelTable
from .conformal import REGIONS

__all__ = [
    "ACTIONS",
    "COMMIT0",
    "COMMIT1",
    "REJECT",
    "CostRates",
    "Convention",
    "COMMIT_ON_SINGLETONS",
    "CoherenceWedge",
    "PricingEnvelope",
    "region_risks",
    "coherent_action",
    "check_convention",
    "pricing_envelope",
    "rejection_band_limit",
]

COMMIT0 = "commit0"
COMMIT1 = "commit1"
REJECT = "reject"
ACTIONS = (COMMIT0, COMMIT1, REJECT)


@dataclass(frozen=True)
class CostRates:
    """Chow-style consequence prices; correct commitments cost nothing."""

    c01: float  # false negative: commit 0 when the label is 1
    c10: float  # false positive: commit 1 when the label is 0
    c_rej: float = 0.0

    def __post_init__(self) -> None:
        if self.c01 <= 0 or self.c10 <= 0:
            raise ValueError("error costs c01 and c10 must be positive")
        if self.c_rej < 0:
            raise ValueError("rejection cost must be nonnegative")

    @property
    def lam(self) -> float:
        return self.c01 / self.c10

    @property
    def rho(self) -> float:
        return self.c_rej / self.c10


@dataclass(frozen=True)
class Convention:
    """Total map from regions to actions."""

    name: str
    mapping: dict = field(repr=False)

    def __post_init__(self) -> None:
        missing = [r for r in REGIONS if r not in self.mapping]
        if missing:
            raise ValueError(f"convention {self.name!r} is missing regions {missing}")
        bad = {a for a in self.mapping.values() if a not in ACTIONS}
        if bad:
            raise ValueError(f"unknown actions {bad}; allowed: {ACTIONS}")
        object.__setattr__(self, "mapping", dict(self.mapping))

    def __call__(self, region: str) -> str:
        return self.mapping[region]

    def rejects_somewhere(self, table: RegionLabelTable) -> bool:
        return any(
            self(r) == REJECT and table.region_mass(r) > 0 for r in REGIONS
        )


# commit on singleton support, defer on doublet or empty
COMMIT_ON_SINGLETONS = Convention(
    "commit_on_singletons",
    {"r10": COMMIT0, "r01": COMMIT1, "r11": REJECT, "r00": REJECT},
)


def region_risks(eta: float, costs: CostRates) -> tuple[float, float, float]:
    """Conditional risks (commit0, commit1, reject) at label-1 frequency eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return eta * costs.c01, (1.0 - eta) * costs.c10, costs.c_rej


def coherent_action(eta: float, costs: CostRates) -> tuple[str, ...]:
    """All risk-minimizing actions at eta (ties reported together)."""
    risks = region_risks(eta, costs)
    best = min(risks)
    return tuple(a for a, r in zip(ACTIONS, risks) if r == best)


@dataclass(frozen=True)
class RegionVerdict:
    region: str
    action: str
    occupied: bool
    coherent: bool
    eta: float | None
    risks: tuple | None


@dataclass(frozen=True)
class ConventionReport:
    verdicts: tuple
    coherent: bool
    expected_cost: float

    def verdict(self, region: str) -> RegionVerdict:
        return next(v for v in self.verdicts if v.region == region)


def check_convention(table: RegionLabelTable, conv: Convention, costs: CostRates) -> ConventionReport:
    """Per-region coherence verdicts and the convention's expected cost.

    Empty regions pass vacuously; the global flag is the conjunction over
    occupied regions. The expected cost sums L(action, y) over the cell
    frequencies.
    """
    verdicts = []
    total_cost = 0.0
    loss = {  # L(action, y)
        COMMIT0: (0.0, costs.c01),
        COMMIT1: (costs.c10, 0.0),
        REJECT: (costs.c_rej, costs.c_rej),
    }
    for region in REGIONS:
        action = conv(region)
        p0, p1 = table.probs[REGIONS.index(region)]
        total_cost += loss[action][0] * p0 + loss[action][1] * p1
        eta = table.label_frequency(region, 1)
        if eta is None:
            verdicts.append(RegionVerdict(region, action, False, True, None, None))
            continue
        risks = region_risks(eta, costs)
        ok = action in coherent_action(eta, costs)
        verdicts.append(RegionVerdict(region, action, True, ok, eta, risks))
    global_ok = all(v.coherent for v in verdicts if v.occupied)
    return ConventionReport(verdicts=tuple(verdicts), coherent=global_ok,
                            expected_cost=total_cost)


def _half_planes(action: str, eta: float) -> list[tuple[str, float, float, float]]:
    """Coherence constraints for one action at eta as (label, c0, c_lam, c_rho)
    with the convention: satisfied iff c0 + c_lam*lam + c_rho*rho >= 0."""
    if action == COMMIT0:
        return [
            ("eta*lam <= 1-eta", 1.0 - eta, -eta, 0.0),
            ("eta*lam <= rho", 0.0, -eta, 1.0),
        ]
    if action == COMMIT1:
        return [
            ("eta*lam >= 1-eta", -(1.0 - eta), eta, 0.0),
            ("rho >= 1-eta", -(1.0 - eta), 0.0, 1.0),
        ]
    return [
        ("rho <= eta*lam", 0.0, eta, -1.0),
        ("rho <= 1-eta", 1.0 - eta, 0.0, -1.0),
    ]


@dataclass(frozen=True)
class CoherenceWedge:
    """Feasible (lam, rho) set for one region's prescribed action."""

    region: str
    action: str
    eta: float
    constraints: tuple  # of (label, c0, c_lam, c_rho)
    feasible: np.ndarray = field(repr=False)  # lam x rho bitmap


@dataclass(frozen=True)
class PricingEnvelope:
    """Lattice view of where a convention is coherent, region by region."""

    lam_grid: np.ndarray
    rho_grid: np.ndarray
    wedges: tuple  # one CoherenceWedge per occupied region
    intersection: np.ndarray = field(repr=False)
    union: np.ndarray = field(repr=False)
    rejection_band_violated: np.ndarray = field(repr=False)


def default_lam_grid() -> np.ndarray:
    return np.geomspace(0.1, 10.0, 41)


def default_rho_grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, 41)


def rejection_band_limit(lam: float) -> float:
    """Largest rho at which rejecting can ever be coherent: lam / (1 + lam)."""
    return lam / (1.0 + lam)


def pricing_envelope(table: RegionLabelTable, conv: Convention,
                     lam_grid=None, rho_grid=None) -> PricingEnvelope:
    """Evaluate the convention's coherence wedges over a (lam, rho) lattice.

    Each occupied region contributes a wedge (intersection of its action's
    half-planes); the envelope is their intersection, possibly empty. Lattice
    points where the convention rejects on occupied mass but rho exceeds
    lam/(1+lam) are additionally flagged: there the rejection band is empty,
    so no within-region frequency could make rejection coherent.
    """
    lam = np.asarray(default_lam_grid() if lam_grid is None else lam_grid, dtype=float)
    rho = np.asarray(default_rho_grid() if rho_grid is None else rho_grid, dtype=float)
    if lam.ndim != 1 or rho.ndim != 1 or len(lam) == 0 or len(rho) == 0:
        raise ValueError("lam and rho grids must be nonempty 1-d arrays")
    if (lam <= 0).any():
        raise ValueError("lam grid must be positive")
    if (rho < 0).any():
        raise ValueError("rho grid must be nonnegative")
    ll = lam[:, None]
    rr = rho[None, :]
    wedges = []
    intersection = np.ones((len(lam), len(rho)), dtype=bool)
    union = np.zeros_like(intersection)
    rejects = False
    for region in REGIONS:
        eta = table.label_frequency(region, 1)
        if eta is None:
            continue  # vacuously coherent, contributes no wedge
        action = conv(region)
        if action == REJECT:
            rejects = True
        constraints = _half_planes(action, eta)
        feas = np.ones_like(intersection)
        for _, c0, c_lam, c_rho in constraints:
            feas &= (c0 + c_lam * ll + c_rho * rr) >= -1e-12
        wedges.append(CoherenceWedge(region=region, action=action, eta=eta,
                                     constraints=tuple(constraints), feasible=feas))
        intersection &= feas
        union |= feas
    if not wedges:
        union = np.ones_like(intersection)
    band_violated = (
        (rr > rejection_band_limit(ll)) if rejects else np.zeros_like(intersection)
    )
    return PricingEnvelope(lam_grid=lam, rho_grid=rho, wedges=tuple(wedges),
                           intersection=intersection, union=union,
                           rejection_band_violated=np.broadcast_to(band_violated, intersection.shape).copy())
