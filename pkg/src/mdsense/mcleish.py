"""McLeish (variance-gamma) noise: density, moments, sampling and fitting.

Conventions
-----------
``variance`` is the total power of the complex noise, E|w|^2.  Each
quadrature carries half of it.  The density below is the marginal of a
single quadrature on the real line; it integrates to one over R and its
second moment is ``variance / 2``.  Its Bessel order is ``v - 1/2``: that is
what the scale mixture below integrates to, and it is the only choice that
normalises for every v.

Sampling draws the two quadratures independently, each as a Gaussian scale
mixture ``sqrt(G * variance / (2 v)) * Z`` with ``G ~ Gamma(v, 1)``.  With
independent mixers the complex ratio E|w|^4 / (E|w|^2)^2 equals
``2 + 3 / (2 v)``::

    E[X^2] = s,  E[X^4] = 3 s^2 (1 + 1/v)          (s = variance / 2)
    E|w|^4 = 2 E[X^4] + 2 E[X^2]^2 = s^2 (8 + 6/v)
    E|w|^4 / (E|w|^2)^2 = (8 + 6/v) / 4 = 2 + 3/(2v)

Sharing one mixer across both quadratures instead gives ``2 + 2/v``, which
does not reproduce the H0 moment law the detector is built on.

``non_gaussianity = inf`` is accepted everywhere and means Gaussian noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun

__all__ = [
    "McLeishParams",
    "DegenerateInputError",
    "pdf_real_component",
    "pdf_reference_form",
    "real_moment",
    "sample_ccs",
    "sample_real",
    "fit_params",
    "sample_kurtosis",
]


class DegenerateInputError(ValueError):
    """Raised when a buffer carries no usable information (e.g. all zeros)."""


@dataclass(frozen=True)
class McLeishParams:
    variance: float
    non_gaussianity: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ValueError(f"variance must be positive and finite, got {self.variance!r}")
        if math.isnan(self.non_gaussianity) or self.non_gaussianity <= 0:
            raise ValueError(f"non_gaussianity must be > 0, got {self.non_gaussianity!r}")

    @property
    def is_gaussian(self) -> bool:
        return math.isinf(self.non_gaussianity)

    @property
    def kurtosis(self) -> float:
        """Kurtosis of one quadrature, 3 + 3/v."""
        return 3.0 + 3.0 / self.non_gaussianity

    @classmethod
    def from_kurtosis(cls, variance: float, kurtosis: float) -> "McLeishParams":
        if kurtosis <= 3.0:
            return cls(variance, math.inf)
        return cls(variance, 3.0 / (kurtosis - 3.0))


def _pdf_vec(xa: np.ndarray, log_val_fn) -> np.ndarray:
    flat = xa.ravel()
    out = np.array([math.exp(log_val_fn(xi)) for xi in flat])
    return out.reshape(xa.shape)


def pdf_real_component(x, params: McLeishParams):
    """Density of one quadrature at ``x`` (scalar or array).

    With ``s = variance / 2`` and ``tau = s / v`` the Gaussian-Gamma mixture
    integrates to::

        f(x) = 2 / (Gamma(v) sqrt(2 pi tau)) * u^(v - 1/2) K_{v - 1/2}(2 u),
        u = |x| / sqrt(2 tau)

    which at v = 1 is the Laplacian exp(-2|x| / sqrt(variance)) / sqrt(variance).
    The density is finite at the origin for v > 1/2 and diverges there for
    v <= 1/2, in which case ``x == 0`` is rejected.
    """
    v = params.non_gaussianity
    s = params.variance / 2.0
    xa = np.abs(np.asarray(x, dtype=float))
    if params.is_gaussian:
        out = np.exp(-xa**2 / (2 * s)) / math.sqrt(2 * math.pi * s)
        return out if out.ndim else float(out)
    if v <= 0.5 and np.any(xa == 0.0):
        raise ValueError("McLeish density is singular at x = 0 for v <= 1/2")

    tau = s / v
    order = v - 0.5
    log_norm = math.log(2.0) - specfun.log_gamma(v) - 0.5 * math.log(2 * math.pi * tau)
    scale = math.sqrt(2 * tau)

    def log_val(xi: float) -> float:
        if xi == 0.0:
            # u^a K_a(2u) -> Gamma(a) / 2 as u -> 0
            return log_norm + specfun.log_gamma(order) - math.log(2.0)
        u = xi / scale
        return log_norm + order * math.log(u) + specfun.log_bessel_k(order, 2 * u)

    out = _pdf_vec(xa, log_val)
    return out if out.ndim else float(out)


def pdf_reference_form(x, params: McLeishParams):
    """The closed form commonly quoted for McLeish noise, evaluated as written.

    ``2 sqrt(v) |x|^(v-1) / (sqrt(2 variance) pi Gamma(v)) K_{v-1}(sqrt(2v/variance) |x|)``.
    It coincides with a normalised density only at v = 1 (its integral over
    the real line is 1/2 at v = 2 and 1/4 at v = 3, and it is not integrable
    for v <= 1/2), so it is kept for reference and is not used elsewhere.
    """
    v = params.non_gaussianity
    var = params.variance
    if params.is_gaussian:
        raise ValueError("the reference form has no v = inf limit")
    xa = np.abs(np.asarray(x, dtype=float))
    if v <= 1.0 and np.any(xa == 0.0):
        raise ValueError("reference form is singular at x = 0 for v <= 1")
    c = math.sqrt(2.0 * v / var)
    log_norm = math.log(2.0 * math.sqrt(v)) - math.log(math.sqrt(2.0 * var) * math.pi) - specfun.log_gamma(v)

    def log_val(xi: float) -> float:
        if xi == 0.0:
            # |x|^(v-1) K_{v-1}(c|x|) -> Gamma(v-1) 2^(v-2) c^(1-v)
            return log_norm + specfun.log_gamma(v - 1.0) + (v - 2.0) * math.log(2.0) + (1.0 - v) * math.log(c)
        return log_norm + (v - 1.0) * math.log(xi) + specfun.log_bessel_k(v - 1.0, c * xi)

    out = _pdf_vec(xa, log_val)
    return out if out.ndim else float(out)


def real_moment(n: int, component_variance: float, v: float) -> float:
    """E[X^n] for a real McLeish variate with the given variance and v.

    Odd orders vanish by symmetry.  For even n the Gamma ratios collapse to
    ``(n-1)!! * s^(n/2) * prod_{j < n/2} (1 + j/v)``.
    """
    if int(n) != n or n < 0:
        raise ValueError(f"moment order must be a non-negative integer, got {n!r}")
    n = int(n)
    if n % 2:
        return 0.0
    if component_variance <= 0:
        raise ValueError("component_variance must be positive")
    if not v > 0:
        raise ValueError("v must be positive")
    out = specfun.double_factorial(n - 1) * component_variance ** (n // 2)
    if not math.isinf(v):
        for j in range(n // 2):
            out *= 1.0 + j / v
    return float(out)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_real(params: McLeishParams, size, seed=None, *, component_variance: float | None = None) -> np.ndarray:
    """Real McLeish variates with variance ``component_variance``.

    Defaults to ``params.variance / 2`` (one quadrature of the complex noise).
    """
    rng = _as_rng(seed)
    s = params.variance / 2.0 if component_variance is None else component_variance
    z = rng.standard_normal(size)
    if params.is_gaussian:
        return math.sqrt(s) * z
    v = params.non_gaussianity
    g = rng.gamma(v, 1.0, size)
    return np.sqrt(g * (s / v)) * z


def sample_ccs(params: McLeishParams, count: int, seed=None) -> np.ndarray:
    """``count`` i.i.d. circularly-symmetric complex McLeish samples.

    ``seed`` may be an int, a SeedSequence or a Generator; the output is a
    deterministic function of it.
    """
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    rng = _as_rng(seed)
    count = int(count)
    if params.is_gaussian:
        z = rng.standard_normal((2, count))
        s = math.sqrt(params.variance / 2.0)
        return s * z[0] + 1j * (s * z[1])
    v = params.non_gaussianity
    g = rng.gamma(v, 1.0, (2, count))
    z = rng.standard_normal((2, count))
    x = np.sqrt(g * (params.variance / (2.0 * v))) * z
    return x[0] + 1j * x[1]


def sample_kurtosis(x: np.ndarray) -> float:
    """Non-excess kurtosis E[x^4] / E[x^2]^2 of a zero-mean real sample."""
    x = np.asarray(x, dtype=float)
    m2 = np.mean(x * x)
    if m2 == 0.0:
        raise DegenerateInputError("zero second moment")
    return float(np.mean(x**4) / m2**2)


def fit_params(buffer) -> McLeishParams:
    """Fit (variance, v) to zero-mean complex noise samples.

    The kurtosis is pooled over both quadratures.  A kurtosis at or below
    the Gaussian value returns ``non_gaussianity = inf``.
    """
    w = np.asarray(buffer, dtype=complex)
    if w.ndim != 1 or w.size < 4:
        raise ValueError("need at least 4 samples to fit McLeish parameters")
    if not np.all(np.isfinite(w)):
        raise ValueError("buffer contains non-finite samples")
    variance = float(np.mean(np.abs(w) ** 2))
    if variance == 0.0:
        raise DegenerateInputError("buffer has zero power")
    quad = np.concatenate([w.real, w.imag])
    return McLeishParams.from_kurtosis(variance, sample_kurtosis(quad))
