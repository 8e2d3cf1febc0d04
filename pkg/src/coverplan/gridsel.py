"""Grid-index selection for split-conformal calibration.

Maps a user coverage request (target miscoverage ``alpha_star``, confidence
risk ``delta``) onto the discrete conformal grid u in {1..n_cal} under three
rules:

* ``nominal_index`` -- the plain split-conformal grid point.
* ``dkwm_index`` -- a conservative shift of the request by the two-sided
  empirical-cdf deviation constant sqrt(ln(2/delta) / (2 n)).
* ``ssbc_index`` -- the least conservative grid point whose exact
  coverage-law tail meets the (alpha_star, delta) constraint, either for the
  long-run coverage probability (Beta tail, infinite window) or for empirical
  coverage over a finite deployment window of size m (Beta-Binomial tail).

All selections carry their provenance so downstream consumers can re-derive
them at other calibration sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dists import beta_tail, betabinom_tail

__all__ = [
    "GridSelection",
    "Infeasible",
    "nominal_index",
    "dkwm_index",
    "ssbc_index",
    "feasibility_floor",
    "semantic_map",
    "strict_count_threshold",
]

# snap tolerance for (1 - alpha) * m landing on an integer count
_COUNT_SNAP = 1e-9
# slack on the tail comparison so a request sitting exactly on the
# feasibility boundary counts as feasible under floating-point evaluation
_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class GridSelection:
    """A chosen conformal grid index with its provenance.

    Attributes
    ----------
    u : int
        Miscoverage grid index, 1 <= u <= n_cal.
    n_cal : int
        Calibration size the index was selected for.
    method : str
        One of ``"nominal"``, ``"dkwm"``, ``"ssbc"``.
    alpha_star, delta : float
        The request that produced this selection (delta is carried but unused
        by the nominal rule).
    window : int or None
        Finite deployment-window size m, or None for the infinite-window
        (long-run coverage) regime.
    alpha_cont : float or None
        The shifted continuous request reported by the dkwm rule.
    """

    u: int
    n_cal: int
    method: str
    alpha_star: float
    delta: float
    window: int | None = None
    alpha_cont: float | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.u <= self.n_cal:
            raise ValueError(f"u={self.u} outside grid [1, {self.n_cal}]")

    @property
    def k(self) -> int:
        """Order-statistic index; u + k = n_cal + 1."""
        return self.n_cal + 1 - self.u

    @property
    def alpha_grid(self) -> float:
        """Discrete miscoverage level u / (n_cal + 1)."""
        return self.u / (self.n_cal + 1)


@dataclass(frozen=True)
class Infeasible:
    """Distinguished no-grid-point-qualifies result (not a fault)."""

    alpha_star: float
    delta: float
    n_cal: int
    window: int | None
    floor: float  # infinite-window feasibility floor 1 - delta**(1/n)

    def __bool__(self) -> bool:
        return False


def _check_request(alpha_star: float, delta: float, n_cal: int, window: int | None) -> None:
    if not 0.0 < alpha_star < 1.0:
        raise ValueError(f"alpha_star must lie in (0, 1), got {alpha_star}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n_cal < 1:
        raise ValueError(f"n_cal must be >= 1, got {n_cal}")
    if window is not None and window < 1:
        raise ValueError(f"window must be >= 1, got {window}")


def strict_count_threshold(alpha_star: float, m: int) -> int:
    """Smallest count x with x/m >= 1 - alpha_star.

    The guarantee event over an m-window is {S_m >= x}; its complement
    {S_m < x} is the strict empirical-coverage violation. The product
    (1 - alpha_star) * m is snapped to the nearest integer before the
    ceiling so that exact integer boundaries (e.g. 0.9 * 100) do not drift
    across the threshold under floating-point evaluation.
    """
    t = (1.0 - alpha_star) * m
    nearest = round(t)
    if abs(t - nearest) < _COUNT_SNAP:
        t = float(nearest)
    return int(math.ceil(t))


def nominal_index(alpha_star: float, delta: float, n_cal: int, window: int | None = None) -> GridSelection:
    """Plain split-conformal grid point u = floor(alpha_star * (n_cal + 1)), clamped to the grid."""
    _check_request(alpha_star, delta, n_cal, window)
    u = int(math.floor(alpha_star * (n_cal + 1)))
    u = min(max(u, 1), n_cal)
    return GridSelection(u=u, n_cal=n_cal, method="nominal", alpha_star=alpha_star,
                         delta=delta, window=window)


def dkwm_index(alpha_star: float, delta: float, n_cal: int, window: int | None = None) -> GridSelection:
    """Conservative grid point via the two-sided empirical-cdf deviation bound.

    Shifts the request by eps = sqrt(ln(2/delta) / (2 n_cal)) and floors the
    shifted level onto the grid; a nonpositive shifted level clamps to u = 1.
    The shifted level is reported alongside as ``alpha_cont``.
    """
    _check_request(alpha_star, delta, n_cal, window)
    eps = math.sqrt(math.log(2.0 / delta) / (2.0 * n_cal))
    alpha_cont = alpha_star - eps
    u = int(math.floor(alpha_cont * (n_cal + 1)))
    u = min(max(u, 1), n_cal)
    return GridSelection(u=u, n_cal=n_cal, method="dkwm", alpha_star=alpha_star,
                         delta=delta, window=window, alpha_cont=alpha_cont)


def _tail_ok(u: int, alpha_star: float, delta: float, n_cal: int, window: int | None) -> bool:
    a = n_cal + 1 - u
    b = u
    if window is None:
        p_tail = beta_tail(1.0 - alpha_star, a, b)
    else:
        x_star = strict_count_threshold(alpha_star, window)
        if x_star > window:
            return False  # the guarantee event is impossible on this window
        p_tail = betabinom_tail(x_star, window, a, b)
    return p_tail >= 1.0 - delta - _TAIL_TOL


def ssbc_index(alpha_star: float, delta: float, n_cal: int, window: int | None = None) -> GridSelection | Infeasible:
    """Largest grid index u whose exact coverage-law tail meets the request.

    Infinite window: P(Z >= 1 - alpha_star) >= 1 - delta with
    Z ~ Beta(n_cal + 1 - u, u). Finite window m: P(S_m >= x*) >= 1 - delta
    with S_m ~ BetaBinomial(m; n_cal + 1 - u, u) and x* the strict count
    threshold. Returns :class:`Infeasible` when no grid point qualifies.

    The admissible set is a prefix {1, .., u*} of the grid (the coverage law
    is stochastically decreasing in u), so the scan stops at the first
    failing index.
    """
    _check_request(alpha_star, delta, n_cal, window)
    u_star = -1
    for u in range(1, n_cal + 1):
        if _tail_ok(u, alpha_star, delta, n_cal, window):
            u_star = u
        else:
            break
    if u_star < 0:
        return Infeasible(alpha_star=alpha_star, delta=delta, n_cal=n_cal,
                          window=window, floor=feasibility_floor(delta, n_cal))
    return GridSelection(u=u_star, n_cal=n_cal, method="ssbc", alpha_star=alpha_star,
                         delta=delta, window=window)


def feasibility_floor(delta: float, n_cal: int) -> float:
    """Smallest infinite-window target 1 - delta**(1/n_cal) servable at u = 1."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n_cal < 1:
        raise ValueError(f"n_cal must be >= 1, got {n_cal}")
    return 1.0 - delta ** (1.0 / n_cal)


def semantic_map(alpha_grid, delta_grid, n_cal: int, window: int | None = None):
    """Effective grid level alpha_adj = u*/(n_cal+1) over a request lattice.

    Returns a float matrix of shape (len(alpha_grid), len(delta_grid)) where
    cell (i, j) holds the effective level selected for request
    (alpha_grid[i], delta_grid[j]), or NaN where the request is infeasible.
    Along each column (fixed delta), alpha_adj is nondecreasing in the
    requested alpha.
    """
    import numpy as np

    alphas = list(alpha_grid)
    deltas = list(delta_grid)
    if not alphas or not deltas:
        raise ValueError("request grids must be nonempty")
    for grid, name in ((alphas, "alpha_grid"), (deltas, "delta_grid")):
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"{name} must be strictly increasing")
    out = np.full((len(alphas), len(deltas)), np.nan)
    for i, a in enumerate(alphas):
        for j, d in enumerate(deltas):
            sel = ssbc_index(a, d, n_cal, window)
            if isinstance(sel, GridSelection):
                out[i, j] = sel.alpha_grid
    return out
