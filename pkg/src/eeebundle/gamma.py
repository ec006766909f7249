"""Upper incomplete Gamma function.

Series expansion below ``x < s + 1``, modified Lentz continued fraction above,
plus an exact finite-sum path for integer orders up to 64.
"""

from __future__ import annotations

import math

import numpy as np

EPS = 1e-12
MAX_ITER = 10_000
TINY = 1e-300
INTEGER_ORDER_LIMIT = 64


class GammaConvergenceError(ArithmeticError):
    """Raised when the series or continued fraction fails to converge."""


def _lower_series(s: float, x: float) -> float:
    # regularized P(s, x) by series
    term = 1.0 / s
    total = term
    a = s
    for _ in range(MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * EPS:
            return total * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise GammaConvergenceError(f"series did not converge for s={s}, x={x}")


def _upper_fraction(s: float, x: float) -> float:
    # regularized Q(s, x) by continued fraction
    b = x + 1.0 - s
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h * math.exp(-x + s * math.log(x) - math.lgamma(s))
    raise GammaConvergenceError(f"continued fraction did not converge for s={s}, x={x}")


def _is_small_integer(s) -> bool:
    return float(s).is_integer() and 1 <= s <= INTEGER_ORDER_LIMIT


def _q_integer(n: int, x):
    # Q(n, x) = exp(-x) * sum_{k<n} x^k / k!, exact for integer n
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, n):
        term = term * x / k
        total = total + term
    return np.exp(-x) * total


def _q_scalar(s: float, x: float) -> float:
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0
    if x < s + 1.0:
        return 1.0 - _lower_series(s, x)
    return _upper_fraction(s, x)


def gammaincc(s, x):
    """Regularized upper incomplete Gamma ``Q(s, x) = Gamma(s, x) / Gamma(s)``.

    Accepts scalar or array ``x``; ``s`` must be a positive scalar.
    """
    if s <= 0:
        raise ValueError(f"order must be positive, got {s}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("x must be non-negative")
    if _is_small_integer(s):
        out = _q_integer(int(s), xa)
    else:
        out = np.vectorize(_q_scalar, otypes=[float])(float(s), xa)
    return float(out) if out.ndim == 0 else out


def gamma_upper(s, x):
    """Unregularized upper incomplete Gamma ``Gamma(s, x)``."""
    q = gammaincc(s, x)
    if _is_small_integer(s):
        scale = float(math.factorial(int(s) - 1))
    else:
        scale = math.gamma(s)
    return q * scale
