"""
Baseline lifetime distributions for the GEMO family
Exponential, Weibull, Gamma, Lomax and Log-Normal, with the special-function
kernels they need. Every function accepts scalars or numpy arrays.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np
from scipy import special

from utils.errors import ParameterDomainError

ArrayLike = Union[float, np.ndarray]

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_SQRT2 = np.sqrt(2.0)


class BaselineKind(str, Enum):
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    GAMMA = "gamma"
    LOMAX = "lomax"
    LOGNORMAL = "lognormal"


def coerce_kind(kind: Union[str, BaselineKind]) -> BaselineKind:
    """Accept a BaselineKind or a case-insensitive name"""
    if isinstance(kind, BaselineKind):
        return kind
    try:
        return BaselineKind(str(kind).strip().lower())
    except ValueError:
        raise ParameterDomainError(f"unknown baseline kind: {kind!r}")


# Parameter names in the order they are stored
PARAM_NAMES: Dict[BaselineKind, Tuple[str, ...]] = {
    BaselineKind.EXPONENTIAL: ("lambda",),
    BaselineKind.WEIBULL: ("lambda", "theta"),   # shape, scale
    BaselineKind.GAMMA: ("lambda", "theta"),     # shape, rate
    BaselineKind.LOMAX: ("lambda", "theta"),     # scale, shape
    BaselineKind.LOGNORMAL: ("mu", "sigma"),
}

# Which parameters must be strictly positive
POSITIVE: Dict[BaselineKind, Tuple[bool, ...]] = {
    BaselineKind.EXPONENTIAL: (True,),
    BaselineKind.WEIBULL: (True, True),
    BaselineKind.GAMMA: (True, True),
    BaselineKind.LOMAX: (True, True),
    BaselineKind.LOGNORMAL: (False, True),
}


@dataclass(frozen=True)
class BaselineModel:
    """
    One of the five baseline distributions with its parameter vector

    Args:
        kind: Baseline family (a BaselineKind or its name)
        params: Parameter values in PARAM_NAMES order
    """

    kind: BaselineKind
    params: Tuple[float, ...]

    def __post_init__(self):
        kind = coerce_kind(self.kind)
        params = tuple(float(v) for v in np.atleast_1d(self.params))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", params)

        names = PARAM_NAMES[kind]
        if len(params) != len(names):
            raise ParameterDomainError(
                f"{kind.value} takes {len(names)} parameter(s), got {len(params)}"
            )
        for name, value, positive in zip(names, params, POSITIVE[kind]):
            if not np.isfinite(value):
                raise ParameterDomainError(f"{kind.value} parameter {name} must be finite, got {value}")
            if positive and value <= 0:
                raise ParameterDomainError(f"{kind.value} parameter {name} must be > 0, got {value}")

    @property
    def param_names(self) -> Tuple[str, ...]:
        return PARAM_NAMES[self.kind]

    @property
    def param_count(self) -> int:
        return len(self.params)

    @property
    def positive_mask(self) -> Tuple[bool, ...]:
        return POSITIVE[self.kind]

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.param_names, self.params))

    def with_params(self, values: Iterable[float]) -> "BaselineModel":
        return BaselineModel(self.kind, tuple(values))

    @classmethod
    def from_mapping(cls, kind: Union[str, BaselineKind], values: Mapping[str, float]) -> "BaselineModel":
        """Build a model from {"lambda": ..., "theta": ...} style keyword values"""
        kind = coerce_kind(kind)
        missing = [name for name in PARAM_NAMES[kind] if name not in values]
        if missing:
            raise ParameterDomainError(f"{kind.value} is missing parameter(s): {', '.join(missing)}")
        return cls(kind, tuple(float(values[name]) for name in PARAM_NAMES[kind]))


def _result(values: np.ndarray, like) -> ArrayLike:
    """Return a float for scalar input, an array otherwise"""
    if np.ndim(like) == 0:
        return float(values)
    return values


def _check_open_unit(u: np.ndarray, name: str = "u"):
    if not np.all((u > 0) & (u < 1)):
        raise ParameterDomainError(f"{name} must lie in the open interval (0, 1)")


# ============================================
# SPECIAL-FUNCTION KERNELS
# ============================================

def reg_lower_gamma(s: float, z: ArrayLike) -> ArrayLike:
    """
    Regularized lower incomplete gamma P(s, z) = γ(s, z) / Γ(s)

    Args:
        s: Shape, strictly positive
        z: Argument(s), nonnegative

    Returns:
        Value(s) in [0, 1]
    """
    z_arr = np.asarray(z, dtype=float)
    if not s > 0:
        raise ParameterDomainError(f"reg_lower_gamma requires s > 0, got {s}")
    if np.any(z_arr < 0):
        raise ParameterDomainError("reg_lower_gamma requires z >= 0")
    return _result(special.gammainc(s, z_arr), z)


def error_function(z: ArrayLike) -> ArrayLike:
    """Error function erf(z)"""
    z_arr = np.asarray(z, dtype=float)
    return _result(special.erf(z_arr), z)


def inverse_error_function(y: ArrayLike) -> ArrayLike:
    """
    Inverse of the error function on (-1, 1)

    scipy's erfinv gives the starting point; one Newton step polishes it.
    """
    y_arr = np.asarray(y, dtype=float)
    if not np.all(np.abs(y_arr) < 1):
        raise ParameterDomainError("inverse_error_function requires |y| < 1")
    x = special.erfinv(y_arr)
    deriv = 2.0 / np.sqrt(np.pi) * np.exp(-x * x)
    x = x - (special.erf(x) - y_arr) / deriv
    return _result(x, y)


# ============================================
# BASELINE EVALUATION
# ============================================

def baseline_logpdf(model: BaselineModel, x: ArrayLike) -> ArrayLike:
    """
    Log density of the baseline, computed directly (not as log of the pdf)

    Returns -inf for x <= 0.
    """
    x_arr = np.asarray(x, dtype=float)
    out = np.full(x_arr.shape, -np.inf)
    pos = x_arr > 0
    xp = x_arr[pos]
    kind, params = model.kind, model.params

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        if kind is BaselineKind.EXPONENTIAL:
            (lam,) = params
            lp = np.log(lam) - lam * xp
        elif kind is BaselineKind.WEIBULL:
            shape, scale = params
            z = xp / scale
            lp = np.log(shape / scale) + (shape - 1.0) * np.log(z) - z ** shape
        elif kind is BaselineKind.GAMMA:
            shape, rate = params
            lp = shape * np.log(rate) + (shape - 1.0) * np.log(xp) - rate * xp - special.gammaln(shape)
        elif kind is BaselineKind.LOMAX:
            scale, shape = params
            lp = np.log(shape / scale) - (shape + 1.0) * np.log1p(xp / scale)
        else:
            mu, sigma = params
            z = (np.log(xp) - mu) / sigma
            lp = -np.log(xp) - np.log(sigma) - _LOG_SQRT_2PI - 0.5 * z * z

    out[pos] = lp
    return _result(out, x)


def baseline_pdf(model: BaselineModel, x: ArrayLike) -> ArrayLike:
    """Baseline density f(x); 0 for x <= 0"""
    return _result(np.exp(np.asarray(baseline_logpdf(model, x))), x)


def baseline_logsf(model: BaselineModel, x: ArrayLike) -> ArrayLike:
    """
    Log survival log F̄(x), accurate far into the upper tail

    Returns 0 for x <= 0.
    """
    x_arr = np.asarray(x, dtype=float)
    out = np.zeros(x_arr.shape)
    pos = x_arr > 0
    xp = x_arr[pos]
    kind, params = model.kind, model.params

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        if kind is BaselineKind.EXPONENTIAL:
            (lam,) = params
            ls = -lam * xp
        elif kind is BaselineKind.WEIBULL:
            shape, scale = params
            ls = -(xp / scale) ** shape
        elif kind is BaselineKind.GAMMA:
            shape, rate = params
            z = rate * xp
            q = special.gammaincc(shape, z)
            # Leading term of the asymptotic expansion once Q(s, z) underflows
            asymptotic = (shape - 1.0) * np.log(z) - z - special.gammaln(shape)
            ls = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), asymptotic)
        elif kind is BaselineKind.LOMAX:
            scale, shape = params
            ls = -shape * np.log1p(xp / scale)
        else:
            mu, sigma = params
            ls = special.log_ndtr(-(np.log(xp) - mu) / sigma)

    out[pos] = ls
    return _result(out, x)


def baseline_sf(model: BaselineModel, x: ArrayLike) -> ArrayLike:
    """Baseline survival F̄(x); 1 for x <= 0"""
    return _result(np.exp(np.asarray(baseline_logsf(model, x))), x)


def baseline_cdf(model: BaselineModel, x: ArrayLike) -> ArrayLike:
    """Baseline cdf F(x); 0 for x <= 0"""
    x_arr = np.asarray(x, dtype=float)
    out = np.zeros(x_arr.shape)
    pos = x_arr > 0
    xp = x_arr[pos]
    kind, params = model.kind, model.params

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        if kind is BaselineKind.EXPONENTIAL:
            (lam,) = params
            F = -np.expm1(-lam * xp)
        elif kind is BaselineKind.WEIBULL:
            shape, scale = params
            F = -np.expm1(-(xp / scale) ** shape)
        elif kind is BaselineKind.GAMMA:
            shape, rate = params
            F = special.gammainc(shape, rate * xp)
        elif kind is BaselineKind.LOMAX:
            scale, shape = params
            F = -np.expm1(-shape * np.log1p(xp / scale))
        else:
            mu, sigma = params
            F = 0.5 + 0.5 * special.erf((np.log(xp) - mu) / (_SQRT2 * sigma))

    out[pos] = F
    return _result(out, x)


def _gamma_quantile(shape: float, rate: float, u: np.ndarray) -> np.ndarray:
    """Inverse regularized incomplete gamma, polished by bracketed Newton steps"""
    x = special.gammaincinv(shape, u) / rate
    for _ in range(3):
        resid = special.gammainc(shape, rate * x) - u
        with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
            dens = np.exp(shape * np.log(rate) + (shape - 1.0) * np.log(x) - rate * x - special.gammaln(shape))
            step = np.where(dens > 0, resid / dens, 0.0)
        candidate = x - step
        # Keep the iterate inside (0, inf); halve toward zero when Newton overshoots
        candidate = np.where(candidate > 0, candidate, 0.5 * x)
        better = np.abs(special.gammainc(shape, rate * candidate) - u) < np.abs(resid)
        x = np.where(better, candidate, x)
    return x


def baseline_quantile(model: BaselineModel, u: ArrayLike) -> ArrayLike:
    """
    Baseline quantile F^{-1}(u)

    Args:
        model: Baseline distribution
        u: Probability level(s) in (0, 1)

    Returns:
        Positive quantile(s)
    """
    u_arr = np.asarray(u, dtype=float)
    _check_open_unit(u_arr)
    kind, params = model.kind, model.params

    if kind is BaselineKind.EXPONENTIAL:
        (lam,) = params
        x = -np.log1p(-u_arr) / lam
    elif kind is BaselineKind.WEIBULL:
        shape, scale = params
        x = scale * (-np.log1p(-u_arr)) ** (1.0 / shape)
    elif kind is BaselineKind.GAMMA:
        shape, rate = params
        x = _gamma_quantile(shape, rate, u_arr)
    elif kind is BaselineKind.LOMAX:
        scale, shape = params
        x = scale * np.expm1(-np.log1p(-u_arr) / shape)
    else:
        mu, sigma = params
        x = np.exp(mu + _SQRT2 * sigma * np.asarray(inverse_error_function(2.0 * u_arr - 1.0)))

    return _result(x, u)


def baseline_isf(model: BaselineModel, log_sf: ArrayLike) -> ArrayLike:
    """
    Inverse survival from a log-survival level: x with log F̄(x) = log_sf

    Working from the log level keeps far upper-tail quantiles exact
    (e.g. the 1 - 1e-12 point used as an integration limit).
    """
    ls = np.asarray(log_sf, dtype=float)
    if np.any(ls > 0):
        raise ParameterDomainError("log_sf must be <= 0")
    kind, params = model.kind, model.params

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        if kind is BaselineKind.EXPONENTIAL:
            (lam,) = params
            x = -ls / lam
        elif kind is BaselineKind.WEIBULL:
            shape, scale = params
            x = scale * (-ls) ** (1.0 / shape)
        elif kind is BaselineKind.GAMMA:
            shape, rate = params
            x = _gamma_isf(shape, ls) / rate
        elif kind is BaselineKind.LOMAX:
            scale, shape = params
            x = scale * np.expm1(-ls / shape)
        else:
            mu, sigma = params
            x = np.exp(mu - sigma * special.ndtri_exp(ls))

    return _result(x, log_sf)


def _gamma_isf(shape: float, log_q: np.ndarray) -> np.ndarray:
    """Solve log Q(shape, z) = log_q for z"""
    q = np.exp(log_q)
    z = special.gammainccinv(shape, q)
    underflow = ~(q > 0)
    if np.any(underflow):
        # Fixed point of z = -log_q + (s - 1) log z - log Γ(s) (upper-tail asymptotics)
        target = -np.asarray(log_q)[underflow] - special.gammaln(shape)
        zt = np.maximum(-np.asarray(log_q)[underflow], 1.0)
        for _ in range(50):
            zt = target + (shape - 1.0) * np.log(zt)
        z = np.array(z, dtype=float)
        z[underflow] = zt
    return z
