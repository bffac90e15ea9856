"""
Maximum-likelihood inference for the GEMO family and its EMO comparator
log-likelihood, analytic score, observed information, multi-start BFGS fitting,
asymptotic confidence intervals and likelihood-ratio tests.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, optimize, special, stats

from utils.baselines import BaselineKind, BaselineModel, PARAM_NAMES, baseline_logsf, coerce_kind
from utils.data_loader import Dataset
from utils.errors import ConvergenceError, NumericalError, ParameterDomainError, UsageError
from utils.emo import EmoParams, family_of, model_logpdf, params_class, score_emo
from utils.gemo_core import SHAPE_NAMES, GemoParams

logger = logging.getLogger(__name__)

# Objective value returned where the log-likelihood is not finite
PENALTY = 1e12

# Information matrices above this condition number indicate a likelihood ridge
RIDGE_CONDITION = 1e8

# Scaled gradient norm accepted as a stationary point
GRADIENT_TOL = 1e-6

_EPS = np.finfo(float).eps
_SCORE_STEP = np.cbrt(_EPS)
_SECOND_DIFF_STEP = _EPS ** 0.25

DataLike = Union[Dataset, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class InitStrategy:
    """
    Multi-start settings for fit

    Args:
        n_starts: Number of BFGS runs (start 0 is the anchor itself)
        seed: Seed of the perturbation generator
        spread: Starts are drawn log-uniformly within ×[1/spread, spread] of the anchor
        max_iter: BFGS iteration cap per run
        gtol: BFGS gradient tolerance
        anchor: Starting point; None runs a baseline-only pre-fit
    """

    n_starts: int = 20
    seed: int = 0
    spread: float = 5.0
    max_iter: int = 500
    gtol: float = 1e-8
    anchor: Optional[GemoParams] = None

    def __post_init__(self):
        if int(self.n_starts) != self.n_starts or self.n_starts < 1:
            raise UsageError(f"n_starts must be a positive integer, got {self.n_starts}")
        if not self.spread >= 1:
            raise UsageError(f"spread must be >= 1, got {self.spread}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise UsageError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.gtol > 0:
            raise UsageError(f"gtol must be positive, got {self.gtol}")


@dataclass(frozen=True)
class FitResult:
    """
    Outcome of a maximum-likelihood fit

    covariance is the full (p+3)×(p+3) inverse observed information, with
    zero rows and columns for fixed coordinates; std_errors holds the free
    coordinates only.
    """

    params: GemoParams
    free_mask: Tuple[bool, ...]
    loglik: float
    covariance: np.ndarray = field(repr=False)
    std_errors: Dict[str, float]
    converged: bool
    n_starts: int
    gradient_norm: float
    condition_number: float = float('nan')
    ridge_warning: bool = False
    hessian_singular: bool = False
    label: str = "data"
    n: int = 0
    diagnostics: Dict[str, object] = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        """Number of free parameters"""
        return int(sum(self.free_mask))

    @property
    def names(self) -> Tuple[str, ...]:
        return self.params.names

    @property
    def free_names(self) -> Tuple[str, ...]:
        return tuple(name for name, free in zip(self.names, self.free_mask) if free)

    @property
    def estimates(self) -> Dict[str, float]:
        return self.params.as_dict()


class ConfidenceInterval(NamedTuple):
    estimate: float
    lower: float
    upper: float
    std_error: float
    log_scale: bool


@dataclass(frozen=True)
class LikelihoodRatioResult:
    statistic: float
    df: int
    p_value: float
    critical_value: float
    reject: bool
    level: float


def _values(data: DataLike) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0 or np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ParameterDomainError("data must be a non-empty sequence of positive lifetimes")
    return x


# ============================================
# LIKELIHOOD AND DERIVATIVES
# ============================================

def log_likelihood(p: GemoParams, data: DataLike) -> float:
    """
    Log-likelihood Σ log g(x_i)

    Returns -inf (without raising) when some observation has zero density.
    """
    x = _values(data)
    total = float(np.sum(np.asarray(model_logpdf(p, x))))
    if np.isnan(total):
        return -np.inf
    return total


def _score_terms(p: GemoParams, x: np.ndarray):
    ls = np.asarray(baseline_logsf(p.baseline, x), dtype=float)
    s = np.exp(p.gamma * ls)
    d = 1.0 + (p.alpha - 1.0) * s
    return ls, s, d


def score_gemo(p: GemoParams, data: DataLike) -> np.ndarray:
    """
    Analytic (∂ℓ/∂α, ∂ℓ/∂β, ∂ℓ/∂γ)

    Baseline-parameter derivatives are not part of this vector.
    """
    x = _values(data)
    n = x.size
    a, b, g = p.alpha, p.beta, p.gamma
    ls, s, d = _score_terms(p, x)

    d_alpha = n * b / a - (b + 1.0) * np.sum(s / d)
    d_beta = n / b + n * np.log(a) + g * np.sum(ls) - np.sum(np.log1p((a - 1.0) * s))
    d_gamma = n / g + b * np.sum(ls) - (b + 1.0) * np.sum((a - 1.0) * s * ls / d)
    return np.array([d_alpha, d_beta, d_gamma])


def shape_score(p: GemoParams, data: DataLike) -> np.ndarray:
    """(∂ℓ/∂α, ∂ℓ/∂β, ∂ℓ/∂γ) for either family"""
    x = _values(data)
    if isinstance(p, EmoParams):
        return score_emo(p, x)
    return score_gemo(p, x)


def analytic_hessian_entries(p: GemoParams, data: DataLike) -> Dict[Tuple[str, str], float]:
    """Closed-form second derivatives ∂²ℓ/∂α², ∂²ℓ/∂β² and ∂²ℓ/∂α∂β"""
    x = _values(data)
    n = x.size
    a, b = p.alpha, p.beta
    _, s, d = _score_terms(p, x)
    return {
        ("alpha", "alpha"): float(-n * b / a ** 2 + (b + 1.0) * np.sum((s / d) ** 2)),
        ("beta", "beta"): float(-n / b ** 2),
        ("alpha", "beta"): float(n / a - np.sum(s / d)),
    }


def _step(value: float, base: float, positive: bool) -> float:
    h = base * max(1.0, abs(value))
    if positive:
        h = min(h, 0.5 * value)
    return h


def _loglik_at(template: GemoParams, vec: np.ndarray, x: np.ndarray) -> float:
    try:
        candidate = template.with_vector(vec)
    except ParameterDomainError:
        return -np.inf
    return log_likelihood(candidate, x)


def observed_information(p: GemoParams, data: DataLike) -> np.ndarray:
    """
    Observed information -∂²ℓ/∂θ∂θᵀ over all p+3 coordinates

    Rows involving α, β or γ are centered differences of the analytic score
    (step cbrt(ε)·max(1, |θ|)); the baseline block uses centered second
    differences of ℓ (step ε^{1/4}·max(1, |θ|)).

    Raises:
        NumericalError: a Hessian entry is not finite
    """
    x = _values(data)
    theta = p.to_vector()
    positive = p.positive_mask
    dim = theta.size
    hess = np.zeros((dim, dim))

    # Score rows: d(score_i)/dθ_j
    for j in range(dim):
        h = _step(theta[j], _SCORE_STEP, positive[j])
        up, down = theta.copy(), theta.copy()
        up[j] += h
        down[j] -= h
        hess[:3, j] = (shape_score(p.with_vector(up), x) - shape_score(p.with_vector(down), x)) / (2.0 * h)

    # Baseline block from ℓ alone
    base = list(range(3, dim))
    steps = {j: _step(theta[j], _SECOND_DIFF_STEP, positive[j]) for j in base}
    ll0 = log_likelihood(p, x)
    for i in base:
        for j in base:
            if j < i:
                continue
            hi, hj = steps[i], steps[j]
            if i == j:
                up, down = theta.copy(), theta.copy()
                up[i] += hi
                down[i] -= hi
                value = (_loglik_at(p, up, x) - 2.0 * ll0 + _loglik_at(p, down, x)) / hi ** 2
            else:
                corners = []
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    v = theta.copy()
                    v[i] += si * hi
                    v[j] += sj * hj
                    corners.append(_loglik_at(p, v, x))
                value = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * hi * hj)
            hess[i, j] = hess[j, i] = value

    # Mirror the score rows into the columns and average the overlap
    hess[3:, :3] = hess[:3, 3:].T
    hess = 0.5 * (hess + hess.T)

    bad = np.argwhere(~np.isfinite(hess))
    if bad.size:
        i, j = bad[0]
        names = p.names
        raise NumericalError(
            f"non-finite Hessian entry ({names[i]}, {names[j]})",
            {"row": names[i], "column": names[j]},
        )
    return -hess


# ============================================
# FITTING
# ============================================

def moment_start(x: np.ndarray, kind: Union[str, BaselineKind]) -> BaselineModel:
    """Method-of-moments starting values for the baseline parameters"""
    kind = coerce_kind(kind)
    m = float(np.mean(x))
    v = max(float(np.var(x)), 1e-12 * m * m)

    if kind is BaselineKind.EXPONENTIAL:
        params = (1.0 / m,)
    elif kind is BaselineKind.WEIBULL:
        shape = (np.sqrt(v) / m) ** -1.086
        params = (shape, m / special.gamma(1.0 + 1.0 / shape))
    elif kind is BaselineKind.GAMMA:
        params = (m * m / v, m / v)
    elif kind is BaselineKind.LOMAX:
        shape = 2.0 * v / (v - m * m) if v > m * m else 3.0
        params = (m * (shape - 1.0), shape)
    else:
        logs = np.log(x)
        params = (float(logs.mean()), max(float(logs.std()), 1e-3))
    return BaselineModel(kind, params)


class _Objective:
    """-ℓ/n over the free coordinates in unconstrained space"""

    def __init__(self, template: GemoParams, free: np.ndarray, x: np.ndarray):
        self.template = template
        self.free = free
        self.x = x
        self.n = x.size
        self.theta0 = template.to_vector()
        self.positive = np.array(template.positive_mask)[free]

    def natural(self, z: np.ndarray) -> np.ndarray:
        theta = self.theta0.copy()
        with np.errstate(over='ignore'):
            theta[self.free] = np.where(self.positive, np.exp(z), z)
        return theta

    def internal(self, theta: np.ndarray) -> np.ndarray:
        sub = theta[self.free]
        return np.where(self.positive, np.log(np.where(self.positive, sub, 1.0)), sub)

    def loglik(self, z: np.ndarray) -> float:
        return _loglik_at(self.template, self.natural(z), self.x)

    def __call__(self, z: np.ndarray) -> float:
        ll = self.loglik(z)
        if not np.isfinite(ll):
            return PENALTY
        return -ll / self.n

    def gradient(self, z: np.ndarray) -> np.ndarray:
        theta = self.natural(z)
        try:
            p = self.template.with_vector(theta)
        except ParameterDomainError:
            return np.zeros_like(z)
        grad = np.zeros_like(z, dtype=float)
        free_idx = np.flatnonzero(self.free)
        scores = None
        for pos, coord in enumerate(free_idx):
            if coord < 3:
                if scores is None:
                    scores = shape_score(p, self.x)
                # Chain rule through the log transform
                grad[pos] = -scores[coord] * theta[coord] / self.n
            else:
                h = _SCORE_STEP * max(1.0, abs(z[pos]))
                up, down = z.copy(), z.copy()
                up[pos] += h
                down[pos] -= h
                grad[pos] = (self(up) - self(down)) / (2.0 * h)
        if not np.all(np.isfinite(grad)):
            return np.zeros_like(z)
        return grad


def _run_bfgs(objective: _Objective, z0: np.ndarray, strategy: InitStrategy) -> optimize.OptimizeResult:
    with np.errstate(all='ignore'):
        return optimize.minimize(
            objective,
            z0,
            jac=objective.gradient,
            method='BFGS',
            options={'gtol': strategy.gtol, 'maxiter': strategy.max_iter},
        )


def _covariance(info: np.ndarray, free: np.ndarray) -> Tuple[np.ndarray, float, bool]:
    """Invert the free block of the information; pseudo-inverse when it is not positive definite"""
    sub = info[np.ix_(free, free)]
    condition = float(np.linalg.cond(sub))
    singular = False
    try:
        factor = linalg.cho_factor(sub)
        cov_sub = linalg.cho_solve(factor, np.eye(sub.shape[0]))
    except linalg.LinAlgError:
        singular = True
        cov_sub = linalg.pinv(sub)
    cov_sub = 0.5 * (cov_sub + cov_sub.T)
    if np.any(np.diag(cov_sub) < 0):
        singular = True

    cov = np.zeros_like(info)
    cov[np.ix_(free, free)] = cov_sub
    return cov, condition, singular


def fit(
    data: Dataset,
    kind: Union[str, BaselineKind],
    free_mask: Optional[Sequence[bool]] = None,
    init_strategy: Optional[InitStrategy] = None,
    fixed_values: Optional[Mapping[str, float]] = None,
    family: str = "gemo",
) -> FitResult:
    """
    Maximize the log-likelihood over the free coordinates

    Args:
        data: Lifetimes to fit
        kind: Baseline kind
        free_mask: One flag per coordinate (α, β, γ, baseline...); all free when omitted
        init_strategy: Multi-start settings
        fixed_values: Values for fixed coordinates by name; fixed α, β, γ
            default to 1 and fixed baseline coordinates to the pre-fit
        family: "gemo", or "emo" for the exponentiated Marshall-Olkin comparator

    Returns:
        FitResult for the best run (highest ℓ, then lowest start index)

    Raises:
        UsageError: no free coordinate, an unknown name in fixed_values, or an
            anchor of another baseline or family
        ConvergenceError: no start reached a finite log-likelihood
    """
    strategy = init_strategy or InitStrategy()
    kind = coerce_kind(kind)
    try:
        family_class = params_class(family)
    except ParameterDomainError as e:
        raise UsageError(str(e))
    x = data.values
    names = SHAPE_NAMES + PARAM_NAMES[kind]
    free = np.ones(len(names), dtype=bool) if free_mask is None else np.array(free_mask, dtype=bool)
    if free.size != len(names):
        raise UsageError(f"free_mask needs {len(names)} flags for {kind.value}, got {free.size}")
    if not free.any():
        raise UsageError("at least one coordinate must be free")
    fixed_values = dict(fixed_values or {})
    unknown = set(fixed_values) - set(names)
    if unknown:
        raise UsageError(f"unknown parameter(s) for {kind.value}: {', '.join(sorted(unknown))}")

    anchor = strategy.anchor
    if anchor is None:
        anchor = _baseline_prefit(x, kind, strategy)
    elif anchor.baseline.kind is not kind:
        raise UsageError("anchor baseline does not match the requested kind")
    elif type(anchor) is not family_class:
        raise UsageError(f"anchor is not a {family} parameter vector")

    theta0 = anchor.to_vector()
    for i, name in enumerate(names):
        if name in fixed_values:
            theta0[i] = float(fixed_values[name])
    template = family_class(1.0, 1.0, 1.0, anchor.baseline).with_vector(theta0)

    logger.info(
        "Fitting %s-%s (free: %s) to %s, n=%d, %d start(s)",
        family, kind.value, ", ".join(n for n, f in zip(names, free) if f), data.label, data.n, strategy.n_starts,
    )
    objective = _Objective(template, free, x)
    z_anchor = objective.internal(theta0)

    rng = np.random.default_rng(strategy.seed)
    offsets = rng.uniform(-1.0, 1.0, size=(strategy.n_starts, z_anchor.size)) * np.log(strategy.spread)
    offsets[0] = 0.0

    best = None
    best_ll = -np.inf
    best_index = -1
    start_logliks: List[float] = []
    for index, offset in enumerate(offsets):
        res = _run_bfgs(objective, z_anchor + offset, strategy)
        ll = objective.loglik(res.x)
        start_logliks.append(ll)
        logger.debug("start %d: loglik=%.6f nit=%d %s", index, ll, res.nit, res.message)
        if not res.success:
            logger.debug("start %d did not report success: %s", index, res.message)
        if np.isfinite(ll) and ll > best_ll:
            best, best_ll, best_index = res, ll, index

    if best is None:
        raise ConvergenceError(
            f"no start reached a finite log-likelihood for {kind.value}",
            best=None,
            diagnostics={"start_logliks": start_logliks},
        )

    polished = _run_bfgs(objective, best.x, strategy)
    polished_ll = objective.loglik(polished.x)
    if np.isfinite(polished_ll) and polished_ll >= best_ll:
        best, best_ll = polished, polished_ll

    theta_hat = objective.natural(best.x)
    params = template.with_vector(theta_hat)
    gradient_norm = float(np.linalg.norm(objective.gradient(best.x)))
    converged = bool(best.success or gradient_norm <= GRADIENT_TOL)
    if not converged:
        logger.warning("best start %d stopped with gradient norm %.3g: %s", best_index, gradient_norm, best.message)

    hessian_singular = False
    try:
        info = observed_information(params, x)
        covariance, condition, hessian_singular = _covariance(info, free)
    except NumericalError as e:
        logger.warning("observed information unavailable: %s", e)
        covariance = np.full((len(names), len(names)), np.nan)
        condition = float('inf')
        hessian_singular = True
    ridge = bool(condition > RIDGE_CONDITION)
    if ridge:
        logger.warning(
            "information matrix condition number %.3g exceeds %.0e: likelihood ridge, standard errors unreliable",
            condition, RIDGE_CONDITION,
        )
    if hessian_singular:
        logger.warning("observed information is not positive definite; covariance from pseudo-inverse")

    diag = np.diag(covariance)
    std_errors = {
        name: float(np.sqrt(diag[i])) if diag[i] >= 0 else float('nan')
        for i, name in enumerate(names) if free[i]
    }
    logger.info("Best start %d of %d: loglik=%.6f", best_index, strategy.n_starts, best_ll)

    return FitResult(
        params=params,
        free_mask=tuple(bool(f) for f in free),
        loglik=float(best_ll),
        covariance=covariance,
        std_errors=std_errors,
        converged=converged,
        n_starts=strategy.n_starts,
        gradient_norm=gradient_norm,
        condition_number=condition,
        ridge_warning=ridge,
        hessian_singular=hessian_singular,
        label=data.label,
        n=data.n,
        diagnostics={
            "best_start": best_index,
            "iterations": int(best.nit),
            "message": str(best.message),
            "start_logliks": start_logliks,
        },
    )


def _baseline_prefit(x: np.ndarray, kind: BaselineKind, strategy: InitStrategy) -> GemoParams:
    """Fit the baseline alone (α = β = γ = 1) from method-of-moments starts"""
    template = GemoParams.identity(moment_start(x, kind))
    free = np.array([False, False, False] + [True] * template.baseline.param_count)
    objective = _Objective(template, free, x)
    res = _run_bfgs(objective, objective.internal(template.to_vector()), strategy)
    ll = objective.loglik(res.x)
    if not np.isfinite(ll):
        logger.warning("baseline pre-fit failed for %s; anchoring at moment estimates", kind.value)
        return template
    anchor = template.with_vector(objective.natural(res.x))
    logger.debug("baseline pre-fit %s: %s loglik=%.6f", kind.value, anchor.baseline.as_dict(), ll)
    return anchor


# ============================================
# CONFIDENCE INTERVALS AND TESTS
# ============================================

def asymptotic_ci(fit_result: FitResult, level: float = 0.95, log_scale: bool = False) -> Dict[str, ConfidenceInterval]:
    """
    Wald intervals θ̂ ± z_{a/2}·SE for the free coordinates

    Args:
        fit_result: Fit with a usable covariance
        level: Confidence level in (0, 1)
        log_scale: Build the interval for log θ and map back (positive
            coordinates only; others stay on the natural scale)

    Returns:
        Interval per free parameter name
    """
    if not 0 < level < 1:
        raise ParameterDomainError(f"level must lie in (0, 1), got {level}")
    z = float(stats.norm.ppf(1.0 - (1.0 - level) / 2.0))
    estimates = fit_result.estimates
    positive = dict(zip(fit_result.names, fit_result.params.positive_mask))

    intervals = {}
    for name, se in fit_result.std_errors.items():
        if not np.isfinite(se):
            raise NumericalError(f"no standard error for {name}; covariance unavailable", {"parameter": name})
        est = estimates[name]
        if log_scale and positive[name]:
            half = z * se / est
            intervals[name] = ConfidenceInterval(est, est * np.exp(-half), est * np.exp(half), se, True)
        else:
            intervals[name] = ConfidenceInterval(est, est - z * se, est + z * se, se, False)
    return intervals


def is_nested(full: FitResult, restricted: FitResult) -> bool:
    """
    True when restricted fixes a superset of full's fixed coordinates at the same values

    GEMO and EMO share their γ = 1 members, so across families the
    restricted model must also hold γ at 1.
    """
    if full.params.baseline.kind is not restricted.params.baseline.kind:
        return False
    if family_of(full.params) != family_of(restricted.params):
        if restricted.free_mask[2] or restricted.params.gamma != 1.0:
            return False
    full_free = np.array(full.free_mask)
    restricted_free = np.array(restricted.free_mask)
    if np.any(restricted_free & ~full_free):
        return False
    both_fixed = ~full_free & ~restricted_free
    return bool(np.allclose(full.params.to_vector()[both_fixed], restricted.params.to_vector()[both_fixed]))


def likelihood_ratio_test(full: FitResult, restricted: FitResult, level: float = 0.05) -> LikelihoodRatioResult:
    """
    LRT = 2(ℓ_full - ℓ_restricted) against χ²_q, q = number of constrained coordinates

    Raises:
        UsageError: the restricted model is not nested in the full one
    """
    if not is_nested(full, restricted):
        raise UsageError("likelihood ratio test needs the restricted model nested in the full model")
    if not 0 < level < 1:
        raise ParameterDomainError(f"level must lie in (0, 1), got {level}")
    df = int(np.sum(np.array(full.free_mask) & ~np.array(restricted.free_mask)))
    statistic = 2.0 * (full.loglik - restricted.loglik)
    if statistic < -2e-6:
        logger.warning("full model log-likelihood below the restricted one by %.3g", -statistic / 2.0)
    statistic = max(statistic, 0.0)

    if df == 0:
        return LikelihoodRatioResult(statistic, 0, 1.0, 0.0, False, level)
    p_value = float(stats.chi2.sf(statistic, df))
    critical = float(stats.chi2.isf(level, df))
    return LikelihoodRatioResult(statistic, df, p_value, critical, bool(statistic > critical), level)
