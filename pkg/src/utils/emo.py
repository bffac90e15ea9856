"""
The exponentiated Marshall-Olkin (EMO) comparator family
Same baselines and parameter layout as GEMO; γ moves from the baseline
survival to a power of the distribution function:

    G(x) = [1 - (α F̄(x) / (1 - (1 - α) F̄(x)))^β]^γ

At γ = 1 the two families coincide. The model_* functions dispatch on the
parameter type so likelihood, fit statistics and curves work for either.
"""

from dataclasses import dataclass

import numpy as np

from utils.baselines import ArrayLike, baseline_logsf, _check_open_unit, _result
from utils.errors import ParameterDomainError
from utils.gemo_core import (
    GemoParams,
    gemo_cdf,
    gemo_hrf,
    gemo_isf,
    gemo_logpdf,
    gemo_logsf,
    gemo_pdf,
    gemo_quantile,
    gemo_sample,
    gemo_sf,
)

FAMILIES = ("gemo", "emo")


@dataclass(frozen=True)
class EmoParams(GemoParams):
    """
    EMO parameter vector θ = (α, β, γ, ξ)

    alpha and beta act as in GEMO; gamma is the outer exponent of the cdf.
    """


def params_class(family: str):
    """GemoParams or EmoParams by family name"""
    family = str(family).lower()
    if family not in FAMILIES:
        raise ParameterDomainError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    return EmoParams if family == "emo" else GemoParams


def family_of(p: GemoParams) -> str:
    return "emo" if isinstance(p, EmoParams) else "gemo"


def _inner(p: EmoParams) -> GemoParams:
    """GEMO law with γ = 1 whose cdf is raised to the power γ"""
    return GemoParams(p.alpha, p.beta, 1.0, p.baseline)


def _log1mexp(a: np.ndarray) -> np.ndarray:
    """log(1 - e^a) for a <= 0"""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(a < -np.log(2.0), np.log1p(-np.exp(a)), np.log(-np.expm1(a)))


# ============================================
# EVALUATION
# ============================================

def emo_logcdf(p: EmoParams, x: ArrayLike) -> ArrayLike:
    """γ log H(x), H the inner GEMO cdf"""
    ls = np.asarray(gemo_logsf(_inner(p), x), dtype=float)
    return _result(p.gamma * _log1mexp(ls), x)


def emo_cdf(p: EmoParams, x: ArrayLike) -> ArrayLike:
    return _result(np.exp(np.asarray(emo_logcdf(p, x))), x)


def emo_logsf(p: EmoParams, x: ArrayLike) -> ArrayLike:
    return _result(_log1mexp(np.asarray(emo_logcdf(p, x), dtype=float)), x)


def emo_sf(p: EmoParams, x: ArrayLike) -> ArrayLike:
    return _result(np.exp(np.asarray(emo_logsf(p, x))), x)


def emo_logpdf(p: EmoParams, x: ArrayLike) -> ArrayLike:
    """log γ + (γ - 1) log H + log h, h the inner GEMO density"""
    inner = _inner(p)
    lp = np.asarray(gemo_logpdf(inner, x), dtype=float)
    log_h = _log1mexp(np.asarray(gemo_logsf(inner, x), dtype=float))
    with np.errstate(invalid='ignore'):
        out = np.log(p.gamma) + (p.gamma - 1.0) * log_h + lp
    out = np.where(np.isneginf(lp) | np.isnan(out), -np.inf, out)
    return _result(out, x)


def emo_pdf(p: EmoParams, x: ArrayLike) -> ArrayLike:
    return _result(np.exp(np.asarray(emo_logpdf(p, x))), x)


def emo_hrf(p: EmoParams, x: ArrayLike) -> ArrayLike:
    lp = np.asarray(emo_logpdf(p, x), dtype=float)
    ls = np.asarray(emo_logsf(p, x), dtype=float)
    with np.errstate(over='ignore', invalid='ignore'):
        h = np.exp(lp - ls)
    h = np.where(np.isneginf(ls), np.inf, h)
    h = np.where(np.isneginf(lp) & ~np.isneginf(ls), 0.0, h)
    return _result(h, x)


def emo_quantile(p: EmoParams, u: ArrayLike) -> ArrayLike:
    """Q(u) = H^{-1}(u^{1/γ})"""
    u_arr = np.asarray(u, dtype=float)
    _check_open_unit(u_arr)
    log_sf_inner = _log1mexp(np.log(u_arr) / p.gamma)
    return _result(np.asarray(gemo_isf(_inner(p), log_sf_inner)), u)


def emo_sample(p: EmoParams, n: int, seed: int) -> np.ndarray:
    """Inverse-transform sample from a seeded PCG64 generator"""
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"sample size must be a positive integer, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(int(n))
    u = np.where(u > 0, u, np.finfo(float).tiny)
    return np.asarray(emo_quantile(p, u))


def score_emo(p: EmoParams, x: np.ndarray) -> np.ndarray:
    """
    Analytic (∂ℓ/∂α, ∂ℓ/∂β, ∂ℓ/∂γ)

    With m the Marshall-Olkin survival, S = m^β and H = 1 - S:
    ∂/∂γ log g = 1/γ + log H, and the α, β terms of the inner density are
    scaled by 1 - (γ - 1) S/H.
    """
    x = np.asarray(x, dtype=float)
    a, b, g = p.alpha, p.beta, p.gamma
    ls = np.asarray(baseline_logsf(p.baseline, x), dtype=float)
    s = np.exp(ls)
    d = 1.0 + (a - 1.0) * s
    log_m = np.log(a) + ls - np.log(d)
    log_h = _log1mexp(b * log_m)
    weight = 1.0 - (g - 1.0) * np.exp(b * log_m - log_h)

    d_alpha = np.sum(b * weight * (1.0 / a - s / d) - s / d)
    d_beta = np.sum(1.0 / b + weight * log_m)
    d_gamma = np.sum(1.0 / g + log_h)
    return np.array([d_alpha, d_beta, d_gamma])


# ============================================
# DISPATCH
# ============================================

def model_logpdf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    return emo_logpdf(p, x) if isinstance(p, EmoParams) else gemo_logpdf(p, x)


def model_pdf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    return emo_pdf(p, x) if isinstance(p, EmoParams) else gemo_pdf(p, x)


def model_cdf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    return emo_cdf(p, x) if isinstance(p, EmoParams) else gemo_cdf(p, x)


def model_sf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    return emo_sf(p, x) if isinstance(p, EmoParams) else gemo_sf(p, x)


def model_hrf(p: GemoParams, x: ArrayLike) -> ArrayLike:
    return emo_hrf(p, x) if isinstance(p, EmoParams) else gemo_hrf(p, x)


def model_quantile(p: GemoParams, u: ArrayLike) -> ArrayLike:
    return emo_quantile(p, u) if isinstance(p, EmoParams) else gemo_quantile(p, u)


def model_sample(p: GemoParams, n: int, seed: int) -> np.ndarray:
    return emo_sample(p, n, seed) if isinstance(p, EmoParams) else gemo_sample(p, n, seed)
