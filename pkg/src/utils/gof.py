"""
Goodness-of-fit and model-selection statistics
AIC, plug-in Kolmogorov-Smirnov and Anderson-Darling, the scaled TTT transform
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

import numpy as np
import pandas as pd

from utils.data_loader import Dataset
from utils.errors import DataError, ParameterDomainError
from utils.emo import model_cdf
from utils.gemo_core import GemoParams
from utils.inference import FitResult, log_likelihood

logger = logging.getLogger(__name__)

# Probabilities are clamped to [AD_CLAMP, 1 - AD_CLAMP] before taking logs
AD_CLAMP = 1e-15

# Distance from the diagonal within which a TTT curve reads as constant hazard
TTT_TOLERANCE = 0.02

# Absolute tolerance when auditing printed AIC values (published to 4 decimals)
AIC_AUDIT_TOLERANCE = 0.01


@dataclass(frozen=True)
class GofReport:
    model_name: str
    k: int
    loglik: float
    aic: float
    ks: float
    ad: float

    def as_dict(self) -> dict:
        return {
            'model': self.model_name,
            'k': self.k,
            'loglik': self.loglik,
            'aic': self.aic,
            'ks': self.ks,
            'ad': self.ad,
        }


def aic(loglik: float, k: int) -> float:
    """Akaike information criterion 2k - 2ℓ"""
    if int(k) != k or k < 1:
        raise ParameterDomainError(f"k must be a positive integer, got {k}")
    return 2.0 * k - 2.0 * loglik


def _sorted_values(data: Union[Dataset, Iterable[float]]) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.sorted
    return np.sort(np.asarray(data, dtype=float).ravel())


# ============================================
# EDF STATISTICS
# ============================================

def ks_from_probabilities(u: Iterable[float]) -> float:
    """KS distance of probability-transformed observations from the uniform cdf"""
    u = np.sort(np.asarray(u, dtype=float))
    n = u.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def ad_from_probabilities(u: Iterable[float]) -> float:
    """
    Anderson-Darling A² of probability-transformed observations

    A² = -n - (1/n) Σ (2i - 1)[ln u_(i) + ln(1 - u_(n+1-i))]
    """
    u = np.sort(np.asarray(u, dtype=float))
    n = u.size
    clamped = np.clip(u, AD_CLAMP, 1.0 - AD_CLAMP)
    n_clamped = int(np.sum(clamped != u))
    if n_clamped:
        logger.warning("Anderson-Darling: clamped %d probabilit%s to [%g, 1 - %g]",
                       n_clamped, "y" if n_clamped == 1 else "ies", AD_CLAMP, AD_CLAMP)
    i = np.arange(1, n + 1)
    terms = (2 * i - 1) * (np.log(clamped) + np.log1p(-clamped[::-1]))
    return float(-n - terms.sum() / n)


def ks_statistic(p: GemoParams, data: Union[Dataset, Iterable[float]]) -> float:
    """Plug-in KS distance between the empirical cdf and the model cdf"""
    return ks_from_probabilities(model_cdf(p, _sorted_values(data)))


def ad_statistic(p: GemoParams, data: Union[Dataset, Iterable[float]]) -> float:
    """Plug-in Anderson-Darling A² against the model cdf"""
    return ad_from_probabilities(model_cdf(p, _sorted_values(data)))


def gof_report(
    source: Union[FitResult, GemoParams],
    data: Dataset,
    k: Optional[int] = None,
    model_name: Optional[str] = None,
) -> GofReport:
    """
    ℓ, AIC, KS and AD for a fit (or for fixed parameters with k free parameters)

    Args:
        source: FitResult, or GemoParams together with k
        data: Observations the statistics are computed on
        k: Free-parameter count; taken from the fit when source is a FitResult
        model_name: Label for the report row
    """
    if isinstance(source, FitResult):
        params = source.params
        k = source.k if k is None else k
        loglik = source.loglik
    else:
        if k is None:
            raise ParameterDomainError("k is required when reporting on fixed parameters")
        params = source
        loglik = log_likelihood(params, data)
    name = model_name or params.baseline.kind.value
    return GofReport(name, int(k), loglik, aic(loglik, k), ks_statistic(params, data), ad_statistic(params, data))


# ============================================
# TOTAL TIME ON TEST
# ============================================

def ttt_transform(data: Union[Dataset, Iterable[float]]) -> np.ndarray:
    """
    Scaled total-time-on-test curve

    Args:
        data: Lifetimes, at least two

    Returns:
        Array of shape (n + 1, 2) with rows (i/n, T_i), starting at (0, 0)
        and ending at (1, 1)
    """
    x = _sorted_values(data)
    n = x.size
    if n < 2:
        raise DataError(f"TTT transform needs at least 2 observations, got {n}")
    i = np.arange(1, n + 1)
    ttt = (np.cumsum(x) + (n - i) * x) / x.sum()
    curve = np.zeros((n + 1, 2))
    curve[1:, 0] = i / n
    curve[1:, 1] = ttt
    return curve


def ttt_shape(data: Union[Dataset, Iterable[float]], tol: float = TTT_TOLERANCE) -> str:
    """
    Hazard shape suggested by the TTT curve

    Above the diagonal throughout means increasing hazard (concave curve),
    below means decreasing, below-then-above means bathtub and
    above-then-below means upside-down bathtub.

    Returns:
        One of "increasing", "decreasing", "bathtub", "upside_down_bathtub", "constant"
    """
    curve = ttt_transform(data)
    gap = curve[1:-1, 1] - curve[1:-1, 0]
    signs = np.sign(gap[np.abs(gap) > tol])
    if signs.size == 0:
        return "constant"
    first, last = signs[0], signs[-1]
    if first > 0 and last > 0:
        return "increasing"
    if first < 0 and last < 0:
        return "decreasing"
    if first < 0:
        return "bathtub"
    return "upside_down_bathtub"


# ============================================
# PUBLISHED TABLE AUDIT
# ============================================

def audit_aic(rows: Union[pd.DataFrame, Iterable[Mapping]], tol: float = AIC_AUDIT_TOLERANCE) -> pd.DataFrame:
    """
    Recompute AIC = 2k - 2ℓ for published rows and flag mismatches

    Args:
        rows: Records with model, dataset, loglik, k and aic (the printed value)
        tol: Absolute tolerance for agreement

    Returns:
        DataFrame with model, dataset, loglik, k, aic_printed, aic_computed,
        difference and consistent columns
    """
    df = pd.DataFrame(rows).copy()
    df = df.rename(columns={'aic': 'aic_printed'})
    df['aic_computed'] = [aic(ll, int(k)) for ll, k in zip(df['loglik'], df['k'])]
    df['difference'] = df['aic_printed'] - df['aic_computed']
    df['consistent'] = df['difference'].abs() <= tol
    for _, row in df[~df['consistent']].iterrows():
        logger.warning(
            "%s / %s: printed AIC %.4f but 2k - 2ℓ = %.4f",
            row['model'], row['dataset'], row['aic_printed'], row['aic_computed'],
        )
    return df[['model', 'dataset', 'loglik', 'k', 'aic_printed', 'aic_computed', 'difference', 'consistent']]
