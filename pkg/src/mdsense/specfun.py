"""Scalar special functions used throughout the package.

Thin, validated wrappers over :mod:`scipy.special` plus a few pieces scipy
does not cover directly (log of K_nu in its overflow region, integer
double factorials, Gamma ratios that stay exact for large arguments).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = [
    "gamma",
    "log_gamma",
    "gamma_ratio",
    "bessel_k",
    "log_bessel_k",
    "gaussian_q",
    "inverse_gaussian_q",
    "double_factorial",
    "binomial",
]


def _require_finite(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return x


def gamma(x: float) -> float:
    """Gamma function for real ``x > 0``."""
    x = _require_finite("x", x)
    if x <= 0.0:
        raise ValueError(f"gamma is only defined here for x > 0, got {x!r}")
    return float(special.gamma(x))


def log_gamma(x: float) -> float:
    x = _require_finite("x", x)
    if x <= 0.0:
        raise ValueError(f"log_gamma is only defined here for x > 0, got {x!r}")
    return float(special.gammaln(x))


def gamma_ratio(x: float, shift: float) -> float:
    """Return Gamma(x + shift) / Gamma(x) for x > 0, shift >= 0.

    Integer shifts use the rising factorial directly, which stays exact when
    ``x`` is huge (log-Gamma differencing loses ~log(x) * eps there).
    """
    x = _require_finite("x", x)
    if x <= 0.0:
        raise ValueError(f"x must be positive, got {x!r}")
    if shift < 0:
        raise ValueError(f"shift must be non-negative, got {shift!r}")
    if float(shift).is_integer():
        out = 1.0
        for j in range(int(shift)):
            out *= x + j
        return out
    return math.exp(special.gammaln(x + shift) - special.gammaln(x))


def _log_k_small_z(order: float, x: float) -> float:
    # Leading part of K_nu(x) for x**2 << nu, i.e. where K_nu overflows:
    # K_nu(x) ~ 1/2 (x/2)^-nu sum_k (-1)^k Gamma(nu-k) (x^2/4)^k / k!
    q = 0.25 * x * x
    total = 0.0
    term = 1.0
    k = 0
    while k < order:
        if k > 0:
            term *= -q / (k * (order - k))
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
        k += 1
    return math.log(0.5) + special.gammaln(order) - order * math.log(0.5 * x) + math.log(total)


def _order(order: float) -> float:
    order = abs(_require_finite("order", order))
    # scipy's kv returns NaN for subnormal orders; K is even and flat in nu there
    return 0.0 if order < 1e-300 else order


def bessel_k(order: float, x: float) -> float:
    """Modified Bessel function of the second kind, K_order(x), for x > 0.

    Underflows to 0.0 for large ``x``; returns ``inf`` where the true value
    exceeds the double range.
    """
    order = _order(order)
    x = _require_finite("x", x)
    if x <= 0.0:
        raise ValueError(f"bessel_k requires x > 0, got {x!r}")
    return float(special.kv(order, x))


def log_bessel_k(order: float, x: float) -> float:
    """Natural log of K_order(x), finite across the whole (order, x) range."""
    order = _order(order)
    x = _require_finite("x", x)
    if x <= 0.0:
        raise ValueError(f"log_bessel_k requires x > 0, got {x!r}")
    scaled = float(special.kve(order, x))
    if 0.0 < scaled < math.inf:
        return math.log(scaled) - x
    return _log_k_small_z(order, x)


def gaussian_q(x: float) -> float:
    """Standard normal upper-tail probability P[Z > x]."""
    x = float(x)
    if math.isnan(x):
        raise ValueError("gaussian_q of NaN")
    return float(0.5 * special.erfc(x / math.sqrt(2.0)))


def inverse_gaussian_q(p: float) -> float:
    """Return x such that Q(x) = p, for 0 < p < 1."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"inverse_gaussian_q requires 0 < p < 1, got {p!r}")
    # ndtri is accurate in the lower tail, so work with whichever tail is small.
    if p <= 0.5:
        x = -float(special.ndtri(p))
    else:
        x = float(special.ndtri(1.0 - p))
    for _ in range(3):
        # Newton on Q(x) - p; Q'(x) = -phi(x)
        phi = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if phi == 0.0:
            break
        step = (gaussian_q(x) - p) / phi
        x += step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1."""
    if int(n) != n:
        raise ValueError(f"double_factorial needs an integer, got {n!r}")
    n = int(n)
    if n < -1:
        raise ValueError(f"double_factorial requires n >= -1, got {n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def binomial(n: int, k: int) -> int:
    if k < 0 or n < 0:
        raise ValueError("binomial requires non-negative arguments")
    return math.comb(int(n), int(k))

