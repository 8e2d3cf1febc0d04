"""Class-conditional split-conformal calibration and the binary region map.

Calibration fixes one threshold per class as an order statistic of that
class's nonconformity scores. The two thresholds partition score space into
four regions, named by the pair of indicator bits (s0 <= tau0, s1 <= tau1):

    r10  singleton-0 support    r11  both thresholds met (doublet)
    r01  singleton-1 support    r00  neither met (abstention)

A deployment policy is a total map from regions to reported label sets;
everything downstream (auditing, envelopes, cost screening) consumes only
the region label, never the raw scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_labels, check_scores, prob_to_scores
from .gridsel import GridSelection, Infeasible, dkwm_index, nominal_index, ssbc_index

__all__ = [
    "REGIONS",
    "REGION_INDEX",
    "InsufficientClassData",
    "ScoreSample",
    "Thresholds",
    "Policy",
    "PI_SI",
    "PI_CR",
    "PI_SE",
    "region_triggered",
    "fit_thresholds",
    "region_of",
    "region_codes",
    "region_bits",
    "apply_policy",
    "regime_of",
    "MondrianConformalClassifier",
]

REGIONS = ("r10", "r11", "r01", "r00")
REGION_INDEX = {name: i for i, name in enumerate(REGIONS)}

# (bit0, bit1) -> region name
_BITS_TO_REGION = {(1, 0): "r10", (1, 1): "r11", (0, 1): "r01", (0, 0): "r00"}

_REGIME_TOL = 1e-9


class InsufficientClassData(ValueError):
    """A class has fewer calibration points than the requested grid index needs."""


@dataclass(frozen=True)
class ScoreSample:
    """Per-item nonconformity score pairs (s0, s1) with binary labels.

    ``prob_normalized`` records that scores came from a probability model
    (s0 + s1 = 1 per item), which activates the regime geometry of
    :func:`regime_of`.
    """

    scores: np.ndarray
    labels: np.ndarray
    prob_normalized: bool = False

    def __post_init__(self) -> None:
        scores = check_scores(self.scores)
        labels = check_labels(self.labels)
        if len(scores) != len(labels):
            raise ValueError(
                f"scores and labels disagree in length: {len(scores)} vs {len(labels)}"
            )
        if self.prob_normalized and len(scores):
            gap = np.abs(scores.sum(axis=1) - 1.0).max()
            if gap > 1e-9:
                raise ValueError(
                    f"prob_normalized sample has |s0 + s1 - 1| up to {gap:.3g}"
                )
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_probs(cls, probs, labels) -> "ScoreSample":
        """Build a sample from predicted probabilities via s_y = 1 - P(y|x)."""
        return cls(scores=prob_to_scores(probs), labels=labels, prob_normalized=True)

    def class_count(self, y: int) -> int:
        return int((self.labels == y).sum())

    def class_scores(self, y: int) -> np.ndarray:
        """True-class nonconformity scores s(x, y) for items with label y."""
        return self.scores[self.labels == y, y]


@dataclass(frozen=True)
class Thresholds:
    """Deployed per-class thresholds with the indices that produced them."""

    tau0: float
    tau1: float
    u0: int
    u1: int
    n0: int
    n1: int

    @property
    def k0(self) -> int:
        return self.n0 + 1 - self.u0

    @property
    def k1(self) -> int:
        return self.n1 + 1 - self.u1


@dataclass(frozen=True)
class Policy:
    """Total map from the four regions to reported label sets."""

    name: str
    mapping: dict = field(repr=False)

    def __post_init__(self) -> None:
        missing = [r for r in REGIONS if r not in self.mapping]
        if missing:
            raise ValueError(f"policy {self.name!r} is missing regions {missing}")
        norm = {r: frozenset(self.mapping[r]) for r in REGIONS}
        for r, labels in norm.items():
            if not labels <= {0, 1}:
                raise ValueError(f"policy maps {r} to non-binary labels {set(labels)}")
        object.__setattr__(self, "mapping", norm)

    def __call__(self, region: str) -> frozenset:
        return self.mapping[region]


# set inclusion: report every class whose threshold test passes
PI_SI = Policy("si", {"r10": {0}, "r11": {0, 1}, "r01": {1}, "r00": frozenset()})
# commit-reject: commit on singleton support, abstain on doublet or empty
PI_CR = Policy("cr", {"r10": {0}, "r01": {1}, "r11": frozenset(), "r00": frozenset()})
# set exclusion: report the complement of the inclusion set
PI_SE = Policy("se", {"r10": {1}, "r11": frozenset(), "r01": {0}, "r00": {0, 1}})

BUILTIN_POLICIES = {"si": PI_SI, "cr": PI_CR, "se": PI_SE}


def region_triggered(trigger: set, label: int, name: str | None = None) -> Policy:
    """Commit to ``label`` on regions in ``trigger``; abstain elsewhere."""
    mapping = {r: ({label} if r in trigger else frozenset()) for r in REGIONS}
    return Policy(name or f"trigger->{label}", mapping)


def _order_statistic(sorted_scores: np.ndarray, k: int) -> float:
    # deterministic, non-interpolated: k-th smallest value, ties kept as-is
    return float(sorted_scores[k - 1])


def fit_thresholds(sample: ScoreSample, sel0: GridSelection, sel1: GridSelection) -> Thresholds:
    """Per-class thresholds tau_y = k_y-th smallest class-y score, k_y = n_y + 1 - u_y.

    Raises :class:`InsufficientClassData` when a class holds fewer points
    than the selection's grid index requires (the selection must have been
    made at the class's actual count).
    """
    taus = []
    counts = []
    for y, sel in ((0, sel0), (1, sel1)):
        cls = np.sort(sample.class_scores(y))
        n_y = len(cls)
        if n_y < max(sel.u, 1):
            raise InsufficientClassData(
                f"class {y} has {n_y} points, fewer than grid index u={sel.u} requires"
            )
        taus.append(_order_statistic(cls, n_y + 1 - sel.u))
        counts.append(n_y)
    return Thresholds(tau0=taus[0], tau1=taus[1], u0=sel0.u, u1=sel1.u,
                      n0=counts[0], n1=counts[1])


def region_of(s0: float, s1: float, t: Thresholds) -> str:
    """Region name for one score pair; comparisons are non-strict."""
    return _BITS_TO_REGION[(int(s0 <= t.tau0), int(s1 <= t.tau1))]


def region_codes(scores: np.ndarray, t: Thresholds) -> np.ndarray:
    """Vectorized region row-indices (into REGIONS) for an (n, 2) score array."""
    scores = check_scores(scores)
    b0 = scores[:, 0] <= t.tau0
    b1 = scores[:, 1] <= t.tau1
    # r10=0, r11=1, r01=2, r00=3
    out = np.full(len(scores), 3, dtype=int)
    out[b0 & ~b1] = 0
    out[b0 & b1] = 1
    out[~b0 & b1] = 2
    return out


def region_bits(score_vector, taus) -> tuple:
    """Generic K-class region label: the tuple of per-class threshold bits."""
    score_vector = np.asarray(score_vector, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if score_vector.shape != taus.shape:
        raise ValueError("score vector and thresholds must have matching length")
    return tuple(int(s <= t) for s, t in zip(score_vector, taus))


def apply_policy(policy: Policy, region: str) -> frozenset:
    return policy(region)


def regime_of(t: Thresholds) -> str:
    """Which side of the tau0 + tau1 = 1 boundary the thresholds sit on.

    Meaningful for probability-normalized scores: above the boundary the
    doublet region can carry mass and the empty region cannot ("hedging");
    below, the reverse ("rejection"); at the boundary only singletons occur.
    """
    s = t.tau0 + t.tau1
    if s > 1.0 + _REGIME_TOL:
        return "hedging"
    if s < 1.0 - _REGIME_TOL:
        return "rejection"
    return "boundary"


_SELECTORS = {"nominal": nominal_index, "dkwm": dkwm_index, "ssbc": ssbc_index}


def select_index(method: str, alpha: float, delta: float, n_cal: int,
                 window: int | None = None) -> GridSelection | Infeasible:
    """Dispatch to one of the grid-index selection rules by name."""
    try:
        rule = _SELECTORS[method]
    except KeyError:
        raise ValueError(f"unknown selection method {method!r}; pick from {sorted(_SELECTORS)}")
    return rule(alpha, delta, n_cal, window)


class MondrianConformalClassifier(BaseEstimator):
    """Binary class-conditional conformal calibrator with PAC-style grid selection.

    Fits one threshold per class on calibration data and afterwards maps new
    probability (or score) rows to regions and prediction sets under a fixed
    deployment policy.

    Parameters
    ----------
    alpha0, alpha1 : float, default=0.1
        Target miscoverage per class.
    delta0, delta1 : float, default=0.1
        Confidence risk per class (ignored by ``method="nominal"``).
    method : {"ssbc", "nominal", "dkwm"}, default="ssbc"
        Grid-index selection rule.
    window : int or None, default=None
        Finite deployment-window size for the ssbc rule; None targets the
        long-run coverage law.
    policy : {"si", "cr", "se"} or Policy, default="si"
        Deployment policy used by :meth:`predict` / :meth:`predict_set`.
    input_kind : {"prob", "score"}, default="prob"
        Whether X rows are predicted probabilities (mapped through
        s_y = 1 - P(y|x)) or already per-class nonconformity scores.

    Attributes
    ----------
    selection0_, selection1_ : GridSelection
        Realized grid indices per class.
    thresholds_ : Thresholds
        Deployed thresholds.
    regime_ : str
        Hedging / rejection / boundary tag of the fitted thresholds.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> p1 = np.clip(rng.normal(0.7, 0.2, 400), 0.01, 0.99)
    >>> y = (rng.uniform(size=400) < p1).astype(int)
    >>> clf = MondrianConformalClassifier(window=100).fit(p1, y)
    >>> sets = clf.predict(p1[:5])
    """

    def __init__(self, alpha0: float = 0.1, delta0: float = 0.1,
                 alpha1: float = 0.1, delta1: float = 0.1,
                 method: str = "ssbc", window: int | None = None,
                 policy="si", input_kind: str = "prob"):
        self.alpha0 = alpha0
        self.delta0 = delta0
        self.alpha1 = alpha1
        self.delta1 = delta1
        self.method = method
        self.window = window
        self.policy = policy
        self.input_kind = input_kind

    def _resolve_policy(self) -> Policy:
        if isinstance(self.policy, Policy):
            return self.policy
        try:
            return BUILTIN_POLICIES[self.policy]
        except KeyError:
            raise ValueError(f"unknown policy {self.policy!r}; pick from {sorted(BUILTIN_POLICIES)}")

    def _as_sample(self, X, y) -> ScoreSample:
        if self.input_kind == "prob":
            return ScoreSample.from_probs(X, y)
        if self.input_kind == "score":
            return ScoreSample(scores=X, labels=y)
        raise ValueError(f"input_kind must be 'prob' or 'score', got {self.input_kind!r}")

    def _as_scores(self, X) -> np.ndarray:
        if self.input_kind == "prob":
            return prob_to_scores(X)
        return check_scores(X)

    def fit(self, X, y) -> "MondrianConformalClassifier":
        """Select per-class grid indices and fit the deployed thresholds."""
        sample = self._as_sample(X, y)
        self._resolve_policy()
        sels = []
        for cls, alpha, delta in ((0, self.alpha0, self.delta0), (1, self.alpha1, self.delta1)):
            n_y = sample.class_count(cls)
            if n_y < 1:
                raise InsufficientClassData(f"no calibration points for class {cls}")
            sel = select_index(self.method, alpha, delta, n_y, self.window)
            if isinstance(sel, Infeasible):
                raise ValueError(
                    f"request (alpha={alpha}, delta={delta}) infeasible for class {cls} "
                    f"at n={n_y}: needs alpha >= {sel.floor:.4f}"
                )
            sels.append(sel)
        self.selection0_, self.selection1_ = sels
        self.thresholds_ = fit_thresholds(sample, *sels)
        self.regime_ = regime_of(self.thresholds_)
        self.calibration_sample_ = sample
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "thresholds_"):
            raise AttributeError("estimator is not fitted; call fit first")

    def predict_region(self, X) -> np.ndarray:
        """Region name per row."""
        self._check_fitted()
        codes = region_codes(self._as_scores(X), self.thresholds_)
        return np.array(REGIONS, dtype=object)[codes]

    def predict_set(self, X) -> np.ndarray:
        """Boolean (n, 2) membership matrix of the policy's reported label sets."""
        self._check_fitted()
        policy = self._resolve_policy()
        codes = region_codes(self._as_scores(X), self.thresholds_)
        table = np.zeros((len(REGIONS), 2), dtype=bool)
        for r, name in enumerate(REGIONS):
            for lbl in policy(name):
                table[r, lbl] = True
        return table[codes]

    def predict(self, X) -> np.ndarray:
        """Reported label sets as an object array of frozensets."""
        self._check_fitted()
        policy = self._resolve_policy()
        codes = region_codes(self._as_scores(X), self.thresholds_)
        sets = np.array([policy(name) for name in REGIONS], dtype=object)
        return sets[codes]
