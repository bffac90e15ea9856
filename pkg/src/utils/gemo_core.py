"""
The GEMO transform of a baseline distribution
cdf, pdf, survival, hazard, quantile, sampling and the binomial series
expansion of the density, generic over any BaselineModel.

With F̄ the baseline survival function the family survival function is

    Ḡ(x) = [ α F̄(x)^γ / (1 - (1 - α) F̄(x)^γ) ]^β

and everything below is evaluated from its logarithm.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from utils.baselines import (
    ArrayLike,
    BaselineModel,
    baseline_isf,
    baseline_logpdf,
    baseline_logsf,
    baseline_quantile,
    _check_open_unit,
    _result,
)
from utils.errors import ParameterDomainError, SeriesConvergenceError

SHAPE_NAMES = ("alpha", "beta", "gamma")


@dataclass(frozen=True)
class GemoParams:
    """
    Full GEMO parameter vector θ = (α, β, γ, ξ)

    Args:
        alpha: Marshall-Olkin tilt α > 0
        beta: Outer exponent β > 0
        gamma: Inner exponent γ > 0
        baseline: Baseline distribution carrying ξ
    """

    alpha: float
    beta: float
    gamma: float
    baseline: BaselineModel

    def __post_init__(self):
        for name in SHAPE_NAMES:
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise ParameterDomainError(f"{name} must be a finite positive number, got {value}")
            object.__setattr__(self, name, value)
        if not isinstance(self.baseline, BaselineModel):
            raise ParameterDomainError("baseline must be a BaselineModel")

    @classmethod
    def identity(cls, baseline: BaselineModel) -> "GemoParams":
        """α = β = γ = 1, for which the family reduces to the baseline"""
        return cls(1.0, 1.0, 1.0, baseline)

    @property
    def names(self) -> Tuple[str, ...]:
        return SHAPE_NAMES + self.baseline.param_names

    @property
    def param_count(self) -> int:
        return 3 + self.baseline.param_count

    @property
    def positive_mask(self) -> Tuple[bool, ...]:
        return (True, True, True) + self.baseline.positive_mask

    @property
    def is_identity(self) -> bool:
        return self.alpha == 1.0 and self.beta == 1.0 and self.gamma == 1.0

    def to_vector(self) -> np.ndarray:
        return np.array((self.alpha, self.beta, self.gamma) + self.baseline.params)

    def with_vector(self, values: Iterable[float]) -> "GemoParams":
        values = [float(v) for v in values]
        return type(self)(values[0], values[1], values[2], self.baseline.with_params(values[3:]))

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.names, self.to_vector().tolist()))


@dataclass(frozen=True)
class SeriesWeights:
    """Truncated weights w_0..w_J of the binomial series for the density"""

    weights: np.ndarray = field(repr=False)
    truncation_index: int
    tail_bound: float


# ============================================
# EVALUATION
# ============================================

def _log_bracket_terms(p: GemoParams, log_sf_base: np.ndarray) -> np.ndarray:
    """log(1 - (1 - α) F̄^γ), written as log1p((α - 1) F̄^γ)"""
    s = np.exp(p.gamma * log_sf_base)
    return np.log1p((p.alpha - 1.0) * s)


def gemo_logsf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    """log Ḡ(x); 0 at and below the lower support bound"""
    ls = np.asarray(baseline_logsf(p.baseline, x), dtype=float)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        out = p.beta * (np.log(p.alpha) + p.gamma * ls - _log_bracket_terms(p, ls))
    out = np.where(np.isneginf(ls), -np.inf, out)
    out = np.where(ls == 0.0, 0.0, out)
    return _result(out, x)


def gemo_sf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    """Survival function Ḡ(x)"""
    return _result(np.exp(np.asarray(gemo_logsf(p, x))), x)


def gemo_cdf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    """Distribution function G(x) = 1 - Ḡ(x)"""
    return _result(-np.expm1(np.asarray(gemo_logsf(p, x))), x)


def gemo_logpdf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    """
    Log density

    log g = log β + log γ + β log α + log f + (βγ - 1) log F̄ - (β + 1) log(1 - (1 - α) F̄^γ)

    Returns -inf outside the open support.
    """
    lf = np.asarray(baseline_logpdf(p.baseline, x), dtype=float)
    ls = np.asarray(baseline_logsf(p.baseline, x), dtype=float)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        out = (
            np.log(p.beta) + np.log(p.gamma) + p.beta * np.log(p.alpha)
            + lf
            + (p.beta * p.gamma - 1.0) * ls
            - (p.beta + 1.0) * _log_bracket_terms(p, ls)
        )
    out = np.where(np.isneginf(lf), -np.inf, out)
    out = np.where(np.isnan(out), -np.inf, out)
    return _result(out, x)


def gemo_pdf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    """Density g(x)"""
    return _result(np.exp(np.asarray(gemo_logpdf(p, x))), x)


def gemo_hrf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    """
    Hazard rate g(x) / Ḡ(x), evaluated as exp(log g - log Ḡ)

    Once Ḡ(x) underflows to zero the hazard is reported as +inf.
    """
    lp = np.asarray(gemo_logpdf(p, x), dtype=float)
    ls = np.asarray(gemo_logsf(p, x), dtype=float)
    with np.errstate(over='ignore', invalid='ignore'):
        h = np.exp(lp - ls)
    h = np.where(np.isneginf(ls), np.inf, h)
    h = np.where(np.isneginf(lp) & ~np.isneginf(ls), 0.0, h)
    return _result(h, x)


# ============================================
# QUANTILES AND SAMPLING
# ============================================

def _invert_baseline(baseline: BaselineModel, log_sf_base: np.ndarray) -> np.ndarray:
    """Baseline point with log F̄ = log_sf_base, choosing the accurate branch per tail"""
    L = np.asarray(log_sf_base, dtype=float)
    u_base = -np.expm1(L)
    out = np.zeros(L.shape)
    lower = (u_base > 0) & (u_base < 0.5)
    upper = u_base >= 0.5
    if np.any(lower):
        out[lower] = baseline_quantile(baseline, u_base[lower])
    if np.any(upper):
        out[upper] = baseline_isf(baseline, L[upper])
    return out


def gemo_isf(p: GemoParams, log_sf: ArrayLike) -> ArrayLike:
    """
    Inverse survival: x with log Ḡ(x) = log_sf

    With v = Ḡ^{1/β} the baseline survival is [v / (α + (1 - α) v)]^{1/γ},
    and the outer inverse is the BASELINE quantile.
    """
    ls = np.asarray(log_sf, dtype=float)
    if np.any(ls > 0):
        raise ParameterDomainError("log_sf must be <= 0")
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        log_v = ls / p.beta
        log_w = log_v - np.log1p((1.0 - p.alpha) * np.expm1(log_v))
        log_sf_base = log_w / p.gamma
    return _result(_invert_baseline(p.baseline, log_sf_base), log_sf)


def gemo_quantile(p: GemoParams, u: ArrayLike) -> ArrayLike:
    """
    Quantile function Q(u)

    Args:
        p: Family parameters
        u: Probability level(s) in (0, 1)

    Returns:
        x with G(x) = u
    """
    u_arr = np.asarray(u, dtype=float)
    _check_open_unit(u_arr)
    return _result(np.asarray(gemo_isf(p, np.log1p(-u_arr))), u)


def gemo_sample(p: GemoParams, n: int, seed: int) -> np.ndarray:
    """
    Inverse-transform sample of size n from a seeded PCG64 generator

    Args:
        p: Family parameters
        n: Sample size, at least 1
        seed: Generator seed; equal seeds give equal samples

    Returns:
        Array of n positive draws
    """
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"sample size must be a positive integer, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(int(n))
    u = np.where(u > 0, u, np.finfo(float).tiny)
    return np.asarray(gemo_quantile(p, u))


# ============================================
# SERIES EXPANSION
# ============================================

def series_weights(p: GemoParams, tol: float = 1e-12, max_terms: int = 200_000) -> SeriesWeights:
    """
    Weights of g(x) = βγα^β f(x) Σ_j w_j F̄(x)^{γ(β+j)-1}

    w_j = Γ(β+j+1) / (Γ(β+1) j!) · (1 - α)^j, the generalized binomial
    expansion of [1 - (1 - α) F̄^γ]^{-(β+1)}. Only valid for |1 - α| < 1.
    """
    q = 1.0 - p.alpha
    if abs(q) >= 1.0:
        raise SeriesConvergenceError(
            f"binomial series needs |1 - alpha| < 1, got alpha={p.alpha}",
            {"alpha": p.alpha},
        )
    if not tol > 0:
        raise ParameterDomainError(f"tol must be positive, got {tol}")

    weights = [1.0]
    if q == 0.0:
        return SeriesWeights(np.array(weights), 0, 0.0)

    j = 0
    tail = np.inf
    while j < max_terms:
        # Ratio |w_{j+1} / w_j|; it decreases toward |q|, so it bounds all later ratios
        ratio = abs(q) * (p.beta + j + 1.0) / (j + 1.0)
        if ratio < 1.0:
            tail = abs(weights[-1]) * ratio / (1.0 - ratio)
            if tail < tol:
                break
        weights.append(weights[-1] * q * (p.beta + j + 1.0) / (j + 1.0))
        j += 1
    else:
        raise SeriesConvergenceError(
            f"series did not reach tol={tol} within {max_terms} terms",
            {"alpha": p.alpha, "beta": p.beta, "tail_bound": tail},
        )
    return SeriesWeights(np.array(weights), j, float(tail))


def series_pdf(p: GemoParams, x: ArrayLike, weights: Optional[SeriesWeights] = None) -> ArrayLike:
    """Density evaluated from the truncated binomial series"""
    if weights is None:
        weights = series_weights(p)
    lf = np.asarray(baseline_logpdf(p.baseline, x), dtype=float)
    ls = np.asarray(baseline_logsf(p.baseline, x), dtype=float)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        lead = (
            np.log(p.beta) + np.log(p.gamma) + p.beta * np.log(p.alpha)
            + lf + (p.gamma * p.beta - 1.0) * ls
        )
        s = np.exp(p.gamma * ls)
        out = np.exp(lead) * P.polyval(s, weights.weights)
    out = np.where(np.isneginf(lf), 0.0, out)
    return _result(out, x)
