"""
Adaptive quadrature over a range split at breakpoints
Thin wrapper over QUADPACK (scipy.integrate.quad) with the toolkit's tolerances
"""

import logging
from typing import Callable, Iterable, List, Sequence

import numpy as np
from scipy import integrate

from config import get_quad_abs_tol, get_quad_tol
from utils.errors import NumericalError

logger = logging.getLogger(__name__)

# QUADPACK subinterval limit per piece
SUBDIVISION_LIMIT = 200

# Pieces on (0, ∞) wider than this ratio are split once per decade
DECADE_RATIO = 10.0

# QUADPACK messages that are never accepted, whatever the error estimate says
_FATAL_MESSAGES = ("divergent", "invalid")


def split_points(a: float, b: float, points: Iterable[float]) -> Sequence[float]:
    """Sorted, de-duplicated edges a < p_1 < ... < b"""
    inner = sorted({float(p) for p in points if a < p < b and np.isfinite(p)})
    return [a] + inner + [b]


def refine_decades(edges: Sequence[float]) -> List[float]:
    """Insert powers of ten into every finite positive piece spanning more than a decade"""
    out = [edges[0]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo > 0 and np.isfinite(hi) and hi / lo > DECADE_RATIO:
            first = np.ceil(np.log10(lo) + 1e-9)
            last = np.floor(np.log10(hi) - 1e-9)
            out.extend(10.0 ** np.arange(first, last + 1))
        out.append(hi)
    return out


def integrate_pieces(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Iterable[float] = (),
    what: str = "integral",
) -> float:
    """
    Integrate func over [a, b], one QUADPACK call per piece

    Args:
        func: Scalar integrand
        a: Lower limit (finite)
        b: Upper limit; +inf integrates the last piece to infinity
        points: Interior breakpoints (outside points are ignored)
        what: Name used in error messages and logs

    Returns:
        Value of the integral

    Raises:
        NumericalError: when QUADPACK reports failure on a piece and its
            error estimate exceeds the requested tolerance
    """
    if not np.isfinite(a) or np.isnan(b) or b == -np.inf:
        raise NumericalError(f"{what}: lower limit must be finite and upper limit not -inf", {"a": a, "b": b})
    if b <= a:
        return 0.0

    edges = refine_decades(split_points(a, b, points))
    n_pieces = len(edges) - 1
    epsrel = get_quad_tol()
    epsabs = get_quad_abs_tol() / n_pieces

    total = 0.0
    total_err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        result = integrate.quad(
            func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=SUBDIVISION_LIMIT, full_output=1
        )
        value, abserr = result[0], result[1]
        message = str(result[3]) if len(result) > 3 else ""

        if not np.isfinite(value):
            raise NumericalError(
                f"{what}: non-finite value on [{lo:.6g}, {hi:.6g}]",
                {"lo": lo, "hi": hi, "value": value},
            )
        if len(result) > 3:
            fatal = any(word in message.lower() for word in _FATAL_MESSAGES)
            tolerance = 100.0 * max(epsabs, epsrel * abs(value))
            if fatal or abserr > tolerance:
                raise NumericalError(
                    f"{what}: quadrature failed on [{lo:.6g}, {hi:.6g}]: {message}",
                    {"lo": lo, "hi": hi, "value": value, "abserr": abserr},
                )
            logger.debug("%s: accepted piece [%g, %g] with abserr %.3g (%s)", what, lo, hi, abserr, message)
        if np.isinf(hi):
            logger.debug("%s: tail beyond %.6g contributes %.3g (abserr %.3g)", what, lo, value, abserr)
        total += value
        total_err += abserr

    logger.debug("%s = %.12g (abserr %.3g, %d pieces)", what, total, total_err, n_pieces)
    return total
