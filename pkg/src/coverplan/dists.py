"""Exact Beta and Beta-Binomial tail kernels.

Scalar, deterministic, dependency-light primitives used by every other
module: the regularized incomplete Beta function (continued fraction with
the usual symmetry switch), Beta-Binomial pmf/cdf computed in log space,
discrete quantiles, and equal-tailed predictive intervals on counts.
"""

from __future__ import annotations

import math

__all__ = [
    "beta_cdf",
    "beta_tail",
    "betabinom_logpmf",
    "betabinom_pmf",
    "betabinom_cdf",
    "betabinom_tail",
    "betabinom_quantile",
    "predictive_interval",
]

_CF_MAX_ITER = 1000
_CF_EPS = 1e-16
_FPMIN = 1e-300
# slack absorbing summation roundoff when a quantile lands exactly on a cdf step
_Q_EPS = 1e-12


def _check_shapes(a: float, b: float) -> None:
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")


def _check_window(m: int) -> None:
    if m < 0 or int(m) != m:
        raise ValueError(f"window size must be a nonnegative integer, got m={m}")


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for I_x(a, b), evaluated with Lentz's method.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for i in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * i
        # even step
        aa = i * (b - i) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + i) * (qab + i) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def beta_cdf(t: float, a: float, b: float) -> float:
    """Regularized incomplete Beta function I_t(a, b) = P(Z <= t), Z ~ Beta(a, b).

    The continued fraction converges fastest for t < (a+1)/(a+b+2); above that
    point the symmetric identity I_t(a, b) = 1 - I_{1-t}(b, a) is used.
    """
    _check_shapes(a, b)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 1.0
    ln_front = a * math.log(t) + b * math.log1p(-t) - _log_beta(a, b)
    if t < (a + 1.0) / (a + b + 2.0):
        return math.exp(ln_front) * _betacf(a, b, t) / a
    return 1.0 - math.exp(ln_front) * _betacf(b, a, 1.0 - t) / b


def beta_tail(t: float, a: float, b: float) -> float:
    """Upper tail P(Z >= t) for Z ~ Beta(a, b), computed on the stable branch."""
    _check_shapes(a, b)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return 1.0
    if t == 1.0:
        return 0.0
    # P(Z >= t) = I_{1-t}(b, a); route through the branch that avoids 1 - x.
    ln_front = a * math.log(t) + b * math.log1p(-t) - _log_beta(a, b)
    if t < (a + 1.0) / (a + b + 2.0):
        return 1.0 - math.exp(ln_front) * _betacf(a, b, t) / a
    return math.exp(ln_front) * _betacf(b, a, 1.0 - t) / b


def betabinom_logpmf(x: int, m: int, a: float, b: float) -> float:
    """Log pmf of S ~ BetaBinomial(m; a, b) at integer x, -inf outside support."""
    _check_shapes(a, b)
    _check_window(m)
    if x < 0 or x > m:
        return -math.inf
    return (
        math.lgamma(m + 1)
        - math.lgamma(x + 1)
        - math.lgamma(m - x + 1)
        + _log_beta(x + a, m - x + b)
        - _log_beta(a, b)
    )


def betabinom_pmf(x: int, m: int, a: float, b: float) -> float:
    lp = betabinom_logpmf(x, m, a, b)
    return 0.0 if lp == -math.inf else math.exp(lp)


def betabinom_cdf(x: int, m: int, a: float, b: float) -> float:
    """P(S <= x) for S ~ BetaBinomial(m; a, b).

    The pmf terms are exponentiated log-gamma differences, summed over
    whichever tail holds fewer terms; all terms are positive so the sum
    never cancels, and the complement subtraction touches only the small
    tail mass.
    """
    _check_shapes(a, b)
    _check_window(m)
    x = math.floor(x)
    if x < 0:
        return 0.0
    if x >= m:
        return 1.0
    n_lower = x + 1
    n_upper = m - x
    if n_lower <= n_upper:
        s = 0.0
        for i in range(0, x + 1):
            s += betabinom_pmf(i, m, a, b)
        return min(s, 1.0)
    s = 0.0
    for i in range(x + 1, m + 1):
        s += betabinom_pmf(i, m, a, b)
    return max(1.0 - s, 0.0)


def betabinom_tail(x: int, m: int, a: float, b: float) -> float:
    """P(S >= x) for S ~ BetaBinomial(m; a, b), summed from the upper side."""
    _check_shapes(a, b)
    _check_window(m)
    x = math.ceil(x)
    if x <= 0:
        return 1.0
    if x > m:
        return 0.0
    n_upper = m - x + 1
    n_lower = x
    if n_upper <= n_lower:
        s = 0.0
        for i in range(x, m + 1):
            s += betabinom_pmf(i, m, a, b)
        return min(s, 1.0)
    s = 0.0
    for i in range(0, x):
        s += betabinom_pmf(i, m, a, b)
    return max(1.0 - s, 0.0)


def betabinom_quantile(q: float, m: int, a: float, b: float) -> int:
    """Smallest integer x with P(S <= x) >= q for S ~ BetaBinomial(m; a, b).

    Brackets the answer by exponential doubling, then binary-searches the
    discrete support; exact on the grid, O(log m) cdf evaluations after
    bracketing.
    """
    _check_shapes(a, b)
    _check_window(m)
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    qx = q - _Q_EPS
    if betabinom_cdf(0, m, a, b) >= qx:
        return 0
    lo = 0  # cdf(lo) < qx
    hi = 1
    while hi < m and betabinom_cdf(hi, m, a, b) < qx:
        lo = hi
        hi = min(2 * hi, m)
    # invariant: cdf(lo) < qx <= cdf(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if betabinom_cdf(mid, m, a, b) >= qx:
            hi = mid
        else:
            lo = mid
    return hi


def predictive_interval(level: float, m: int, a: float, b: float) -> tuple[int, int]:
    """Equal-tailed predictive interval [lo, hi] on counts out of m.

    lo and hi are the (1-level)/2 and 1-(1-level)/2 quantiles of
    BetaBinomial(m; a, b); discreteness makes the realized coverage of the
    interval at least `level`.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    half = (1.0 - level) / 2.0
    lo = betabinom_quantile(half, m, a, b)
    hi = betabinom_quantile(1.0 - half, m, a, b)
    return lo, hi
