"""
Reliability measures and distributional summaries of the GEMO family
moments, MGF, probability weighted moments, residual / past lifetimes,
conditional moments, entropies and order-statistic densities.

Integrals over [0, ∞) are split at GEMO quantiles so each QUADPACK piece
sees a well-scaled integrand; the last finite breakpoint is where the
survival mass drops to 1e-12 and the remainder is an infinite-range piece
whose contribution is logged.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special

from utils.baselines import BaselineKind
from utils.errors import NumericalError, ParameterDomainError
from utils.gemo_core import (
    GemoParams,
    gemo_cdf,
    gemo_isf,
    gemo_logpdf,
    gemo_logsf,
    gemo_quantile,
)
from utils.quadrature import integrate_pieces

logger = logging.getLogger(__name__)

# Survival mass beyond the last finite breakpoint
TAIL_MASS = 1e-12
LOG_TAIL_MASS = float(np.log(TAIL_MASS))

# log Ḡ(t) below this counts as underflow for conditional quantities
LOG_SF_UNDERFLOW = -700.0

# Largest exponent of e^{tx} g(x) before the MGF overflows
LOG_MGF_OVERFLOW = 700.0

# Breakpoint doublings allowed while chasing the decay of e^{tx} Ḡ(x)
MAX_DOUBLINGS = 64

# Probability levels at which integration ranges are split
PROBABILITY_LADDER = (
    1e-8, 1e-4, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99,
    1 - 1e-4, 1 - 1e-6, 1 - 1e-8, 1 - 1e-10,
)

DEFAULT_PERCENTILES = (0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)


class ReliabilityRow(NamedTuple):
    percentile: float
    time: float
    mrl: float
    mpl: float


@dataclass(frozen=True)
class ReliabilityTable:
    """Times at requested percentiles with their mean residual and mean past lifetimes"""

    rows: Tuple[ReliabilityRow, ...]
    params: GemoParams

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row._asdict() for row in self.rows], columns=list(ReliabilityRow._fields))


# ============================================
# INTEGRATION HELPERS
# ============================================

def upper_limit(p: GemoParams, log_tail: float = LOG_TAIL_MASS) -> float:
    """x with log Ḡ(x) = log_tail, the last finite integration breakpoint"""
    return float(gemo_isf(p, log_tail))


def _ladder_points(p: GemoParams) -> List[float]:
    points = np.asarray(gemo_quantile(p, np.array(PROBABILITY_LADDER))).tolist()
    return points + [upper_limit(p)]


def _tail_points(p: GemoParams, log_sf_t: float) -> List[float]:
    """Quantiles of the conditional law of X given X > t"""
    levels = log_sf_t + np.log1p(-np.array(PROBABILITY_LADDER))
    return np.asarray(gemo_isf(p, levels)).tolist() + [upper_limit(p, log_sf_t + LOG_TAIL_MASS)]


def limiting_hazard(p: GemoParams) -> float:
    """
    lim h(x) as x → ∞

    Ḡ behaves like α^β F̄^{βγ} in the upper tail, so the limit is βγ times
    the baseline's limiting hazard.
    """
    kind, params = p.baseline.kind, p.baseline.params
    if kind is BaselineKind.EXPONENTIAL:
        base = params[0]
    elif kind is BaselineKind.WEIBULL:
        shape, scale = params
        base = np.inf if shape > 1 else (1.0 / scale if shape == 1 else 0.0)
    elif kind is BaselineKind.GAMMA:
        base = params[1]
    else:
        base = 0.0
    return float(p.beta * p.gamma * base)


def _check_nonneg_int(value, name: str) -> int:
    if int(value) != value or value < 0:
        raise ParameterDomainError(f"{name} must be a nonnegative integer, got {value}")
    return int(value)


def _check_moment_exists(p: GemoParams, order: float):
    """Lomax tails are polynomial: Ḡ(x) ~ x^{-θβγ}, so moments of order ≥ θβγ diverge"""
    if p.baseline.kind is BaselineKind.LOMAX:
        tail_index = p.baseline.params[1] * p.beta * p.gamma
        if order >= tail_index:
            raise NumericalError(
                f"moment of order {order} does not exist (tail index {tail_index:.6g})",
                {"order": order, "tail_index": tail_index},
            )


def _tail_log_sf(p: GemoParams, t: float) -> float:
    log_sf_t = float(gemo_logsf(p, t))
    if log_sf_t < LOG_SF_UNDERFLOW:
        raise NumericalError(
            f"survival at t={t:.6g} underflows (log sf {log_sf_t:.6g})",
            {"t": t, "log_sf": log_sf_t},
        )
    return log_sf_t


# ============================================
# MOMENTS
# ============================================

def raw_moment(p: GemoParams, r: int) -> float:
    """
    r-th raw moment E(X^r) = ∫ x^r g(x) dx

    Args:
        p: Family parameters
        r: Order, at least 1

    Returns:
        The moment
    """
    if int(r) != r or r < 1:
        raise ParameterDomainError(f"moment order must be a positive integer, got {r}")
    _check_moment_exists(p, r)

    def integrand(x: float) -> float:
        if x <= 0:
            return 0.0
        return float(np.exp(r * np.log(x) + gemo_logpdf(p, x)))

    return integrate_pieces(integrand, 0.0, np.inf, _ladder_points(p), what=f"raw moment {r}")


def mean(p: GemoParams) -> float:
    """E(X)"""
    return raw_moment(p, 1)


def mgf(p: GemoParams, t: float) -> float:
    """
    Moment generating function M(t) = E(e^{tX})

    Finite exactly for t below the limiting hazard; t at or above it raises
    NumericalError, as does a value too large to represent.
    """
    t = float(t)
    if t == 0.0:
        return 1.0
    if t > 0:
        limit = limiting_hazard(p)
        if t >= limit:
            raise NumericalError(
                f"moment generating function diverges at t={t:.6g} (limiting hazard {limit:.6g})",
                {"t": t, "limiting_hazard": limit},
            )

    def integrand(x: float) -> float:
        value = t * x + float(gemo_logpdf(p, x))
        return float(np.exp(value)) if np.isfinite(value) else 0.0

    return integrate_pieces(integrand, 0.0, np.inf, _mgf_points(p, t), what=f"mgf({t:g})")


def _mgf_points(p: GemoParams, t: float) -> List[float]:
    """Ladder points, extended by doubling until e^{tx} Ḡ(x) has decayed by the tail mass"""
    points = _ladder_points(p)
    if t < 0:
        return points

    def log_weighted_sf(x: float) -> float:
        return t * x + float(gemo_logsf(p, x))

    peak = max(log_weighted_sf(x) for x in points)
    x = points[-1]
    for _ in range(MAX_DOUBLINGS):
        value = log_weighted_sf(x)
        peak = max(peak, value)
        if peak > LOG_MGF_OVERFLOW:
            raise NumericalError(f"mgf({t:g}) overflows", {"t": t, "log_peak": peak})
        if not value >= peak + LOG_TAIL_MASS:
            return points
        x *= 2.0
        points.append(x)
    raise NumericalError(f"mgf({t:g}) integrand does not decay", {"t": t, "x": x})


def pwm(p: GemoParams, l: int, j: int, k: int) -> float:
    """Probability weighted moment E[X^l G(X)^j (1 - G(X))^k]"""
    l = _check_nonneg_int(l, "l")
    j = _check_nonneg_int(j, "j")
    k = _check_nonneg_int(k, "k")
    _check_moment_exists(p, l)

    def integrand(x: float) -> float:
        if x <= 0:
            return 0.0
        log_sf = float(gemo_logsf(p, x))
        cdf = -np.expm1(log_sf)
        log_terms = special.xlogy(l, x) + special.xlogy(j, cdf) + (k * log_sf if k else 0.0)
        return float(np.exp(log_terms + gemo_logpdf(p, x)))

    return integrate_pieces(integrand, 0.0, np.inf, _ladder_points(p), what=f"pwm({l},{j},{k})")


# ============================================
# RESIDUAL AND PAST LIFETIMES
# ============================================

def mean_residual_life(p: GemoParams, t: float) -> float:
    """
    Mean residual life μ(t) = E[X - t | X > t] = ∫_t^∞ Ḡ(x) dx / Ḡ(t)

    Args:
        p: Family parameters
        t: Age, nonnegative

    Returns:
        Expected remaining lifetime
    """
    t = float(t)
    if t < 0:
        raise ParameterDomainError(f"t must be nonnegative, got {t}")
    _check_moment_exists(p, 1)
    log_sf_t = _tail_log_sf(p, t)

    def integrand(x: float) -> float:
        return float(np.exp(gemo_logsf(p, x) - log_sf_t))

    return integrate_pieces(integrand, t, np.inf, _tail_points(p, log_sf_t), what=f"mrl({t:g})")


def mean_past_lifetime(p: GemoParams, t: float) -> float:
    """
    Mean past lifetime k(t) = E[t - X | X <= t] = ∫_0^t G(x) dx / G(t)
    """
    t = float(t)
    cdf_t = float(gemo_cdf(p, t)) if t > 0 else 0.0
    if not cdf_t > 0:
        raise ParameterDomainError(f"mean past lifetime needs G(t) > 0, got t={t}")

    def integrand(x: float) -> float:
        return float(gemo_cdf(p, x)) / cdf_t

    value = integrate_pieces(integrand, 0.0, t, _ladder_points(p), what=f"mpl({t:g})")
    return min(max(value, 0.0), t)


def conditional_moment(p: GemoParams, n: int, t: float) -> float:
    """E(X^n | X >= t) = ∫_t^∞ x^n g(x) dx / Ḡ(t)"""
    n = _check_nonneg_int(n, "n")
    t = float(t)
    if t < 0:
        raise ParameterDomainError(f"t must be nonnegative, got {t}")
    _check_moment_exists(p, n)
    log_sf_t = _tail_log_sf(p, t)

    def integrand(x: float) -> float:
        if x <= 0:
            return 0.0
        return float(np.exp(special.xlogy(n, x) + gemo_logpdf(p, x) - log_sf_t))

    return integrate_pieces(integrand, t, np.inf, _tail_points(p, log_sf_t), what=f"conditional moment {n} at {t:g}")


# ============================================
# ENTROPY
# ============================================

def varma_entropy(p: GemoParams, a: float, b: float) -> float:
    """
    Varma entropy H(a, b) = log(∫ g^{a+b-1} dx) / (b - a)

    Requires b >= 1, b - 1 < a < b and a + b != 2 (the Shannon limit).
    """
    a, b = float(a), float(b)
    if not b >= 1:
        raise ParameterDomainError(f"Varma entropy needs b >= 1, got b={b}")
    if not b - 1 < a < b:
        raise ParameterDomainError(f"Varma entropy needs b - 1 < a < b, got a={a}, b={b}")
    if a + b == 2:
        raise ParameterDomainError("a + b = 2 is the Shannon limit; use shannon_entropy")
    power = a + b - 1.0
    # g^c decays like Ḡ^c in the tail, so a small power needs a deeper last breakpoint
    points = _ladder_points(p) + [upper_limit(p, LOG_TAIL_MASS / min(power, 1.0))]

    def integrand(x: float) -> float:
        return float(np.exp(power * gemo_logpdf(p, x)))

    integral = integrate_pieces(integrand, 0.0, np.inf, points, what="varma integral")
    if not integral > 0:
        raise NumericalError("Varma integral is not positive", {"integral": integral})
    return float(np.log(integral) / (b - a))


def shannon_entropy(p: GemoParams) -> float:
    """Differential entropy -∫ g log g dx"""

    def integrand(x: float) -> float:
        lp = float(gemo_logpdf(p, x))
        if not np.isfinite(lp):
            return 0.0
        return -np.exp(lp) * lp

    return integrate_pieces(integrand, 0.0, np.inf, _ladder_points(p), what="shannon entropy")


# ============================================
# ORDER STATISTICS
# ============================================

def order_statistic_pdf(p: GemoParams, r: int, n: int, x):
    """
    Density of the r-th smallest of n independent draws

    g(x) G(x)^{r-1} (1 - G(x))^{n-r} / B(r, n - r + 1)
    """
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"n must be a positive integer, got {n}")
    if int(r) != r or not 1 <= r <= n:
        raise ParameterDomainError(f"order r must satisfy 1 <= r <= n, got r={r}, n={n}")
    log_sf = np.asarray(gemo_logsf(p, x), dtype=float)
    cdf = -np.expm1(log_sf)
    with np.errstate(divide='ignore', invalid='ignore'):
        log_density = (
            np.asarray(gemo_logpdf(p, x), dtype=float)
            + special.xlogy(r - 1, cdf)
            + ((n - r) * log_sf if n > r else 0.0)
            - special.betaln(r, n - r + 1)
        )
        out = np.exp(log_density)
    out = np.where(np.isnan(out), 0.0, out)
    if np.ndim(x) == 0:
        return float(out)
    return out


# ============================================
# TABLES
# ============================================

def reliability_table(p: GemoParams, percentiles: Optional[Sequence[float]] = None) -> ReliabilityTable:
    """
    Time, MRL and MPL at each percentile

    Args:
        p: Family parameters
        percentiles: Probability levels in (0, 1); DEFAULT_PERCENTILES when omitted

    Returns:
        ReliabilityTable with rows in increasing percentile order
    """
    levels = sorted(set(float(u) for u in (percentiles or DEFAULT_PERCENTILES)))
    rows = []
    for u in levels:
        t = float(gemo_quantile(p, u))
        rows.append(ReliabilityRow(u, t, mean_residual_life(p, t), mean_past_lifetime(p, t)))
        logger.debug("reliability row u=%g t=%.6g mrl=%.6g mpl=%.6g", *rows[-1])
    return ReliabilityTable(tuple(rows), p)
