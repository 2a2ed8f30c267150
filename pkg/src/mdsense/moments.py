"""Closed-form moments of the received signal y = h s + w.

``s`` is real and uniform over ``M`` equally spaced levels in [-s_p, s_p],
``h`` is CN(0, sigma_h^2) and ``w`` is McLeish noise (see :mod:`mcleish`).

Two routes to the absolute moments of |y| are provided:

* :func:`abs_moments_from_real` maps moments of Re{y} to moments of |y|
  assuming Re{y} and Im{y} are independent.  That holds under H0 and for
  constant-modulus symbols (BPSK) but not otherwise: both quadratures of
  ``h s`` share ``|s|``.
* :func:`abs_moments` conditions on the symbol level first.  Given ``|s|``
  the quadratures of ``y`` are independent, so the independent-quadrature
  map is exact per level and the result is averaged over levels.  The two
  routes agree whenever every level has the same magnitude.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .mcleish import McLeishParams

__all__ = [
    "Hypothesis",
    "SignalModel",
    "RealMomentSet",
    "MomentSet",
    "constellation_levels",
    "constellation_moment",
    "fading_real_moment",
    "noise_real_moment",
    "received_real_moment",
    "real_moment_set",
    "abs_moments_from_real",
    "abs_moments",
]


class Hypothesis(enum.Enum):
    H0 = 0
    H1 = 1

    @classmethod
    def parse(cls, value) -> "Hypothesis":
        if isinstance(value, cls):
            return value
        return cls[str(value).upper()]


@dataclass(frozen=True)
class SignalModel:
    """Transmit constellation and fading statistics.

    ``levels_per_dimension`` is M (2 for BPSK, 4 for the 16-QAM curves);
    ``amplitude`` is the peak level s_p, so SNR = s_p^2 / sigma_w^2.
    """

    levels_per_dimension: int = 2
    amplitude: float = 1.0
    fading_variance: float = 1.0

    def __post_init__(self) -> None:
        if int(self.levels_per_dimension) != self.levels_per_dimension or self.levels_per_dimension < 2:
            raise ValueError("levels_per_dimension must be an integer >= 2")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if not self.fading_variance > 0:
            raise ValueError("fading_variance must be positive")

    @classmethod
    def from_snr_db(cls, snr_db: float, noise_variance: float, levels_per_dimension: int = 2,
                    fading_variance: float = 1.0) -> "SignalModel":
        amplitude = math.sqrt(noise_variance * 10.0 ** (snr_db / 10.0))
        return cls(levels_per_dimension, amplitude, fading_variance)


@dataclass(frozen=True)
class RealMomentSet:
    m2: float
    m4: float
    m6: float
    m8: float

    def __post_init__(self) -> None:
        _check_moment_chain(self.m2, self.m4, self.m6)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.m2, self.m4, self.m6, self.m8)


@dataclass(frozen=True)
class MomentSet:
    """Absolute moments E|y|^n for n = 2, 4, 6, 8."""

    mu2: float
    mu4: float
    mu6: float
    mu8: float

    def __post_init__(self) -> None:
        _check_moment_chain(self.mu2, self.mu4, self.mu6)
        if not self.mu8 > 0:
            raise ValueError("8th moment must be positive")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu2, self.mu4, self.mu6, self.mu8)

    def scaled(self, c: float) -> "MomentSet":
        """Moments of c * y."""
        return MomentSet(self.mu2 * c**2, self.mu4 * c**4, self.mu6 * c**6, self.mu8 * c**8)

    @property
    def ratio(self) -> float:
        """mu4 / mu2^2, i.e. minus the test statistic's limit."""
        return self.mu4 / self.mu2**2


def _check_moment_chain(a2: float, a4: float, a6: float, rtol: float = 1e-12) -> None:
    if not a2 > 0:
        raise ValueError("second moment must be positive")
    if a4 < 0 or a6 < 0:
        raise ValueError("even moments must be non-negative")
    if a2 * a2 > a4 * (1 + rtol) or a4 * a4 > a2 * a6 * (1 + rtol):
        raise ValueError("moments do not form a valid moment sequence")


def constellation_levels(model: SignalModel) -> np.ndarray:
    m = model.levels_per_dimension
    return (m - 2 * np.arange(m) - 1) / (m - 1) * model.amplitude


def constellation_moment(n: int, model: SignalModel) -> float:
    """n-th moment of a symbol drawn uniformly from the M levels."""
    if n < 0:
        raise ValueError("moment order must be non-negative")
    if n == 0:
        return 1.0
    m = model.levels_per_dimension
    total = sum((-1) ** n * (m - 2 * l - 1) ** n for l in range(m))
    return float(total) * model.amplitude**n / (m * (m - 1) ** n)


def fading_real_moment(n: int, model: SignalModel) -> float:
    """E[Re{h}^n] with Re{h} ~ N(0, sigma_h^2 / 2)."""
    if n < 0:
        raise ValueError("moment order must be non-negative")
    if n % 2:
        return 0.0
    return specfun.double_factorial(n - 1) * (model.fading_variance / 2.0) ** (n // 2)


def noise_real_moment(k: int, noise: McLeishParams) -> float:
    """E[Re{w}^k] in Gamma-function form.

    Uses Gamma(v + k/2) / Gamma(v) * Gamma((1+k)/2) / Gamma(1/2) * (sigma_w^2/v)^(k/2).
    """
    if k % 2:
        return 0.0
    if k == 0:
        return 1.0
    v = noise.non_gaussianity
    half_gamma = math.exp(specfun.log_gamma((1 + k) / 2.0) - specfun.log_gamma(0.5))
    if math.isinf(v):
        return half_gamma * (2.0 * noise.variance / 2.0) ** (k / 2)
    return specfun.gamma_ratio(v, k / 2) * half_gamma * (noise.variance / v) ** (k / 2)


def _real_moment_given_amplitude(n: int, amplitude: float, fading_variance: float,
                                 noise: McLeishParams) -> float:
    # Re{y} = a Re{h} + Re{w} for a fixed real symbol a
    total = 0.0
    for k in range(0, n + 1, 2):
        j = n - k
        if j % 2:
            continue
        sig = specfun.double_factorial(j - 1) * (fading_variance / 2.0) ** (j // 2) * amplitude**j
        total += specfun.binomial(n, k) * noise_real_moment(k, noise) * sig
    return total


def received_real_moment(n: int, model: SignalModel | None, noise: McLeishParams,
                         hypothesis: Hypothesis = Hypothesis.H1) -> float:
    """E[Re{y}^n]; odd orders return 0.  Under H0 only the pure-noise term survives."""
    if n < 0:
        raise ValueError("moment order must be non-negative")
    if n % 2:
        return 0.0
    if Hypothesis.parse(hypothesis) is Hypothesis.H0:
        return noise_real_moment(n, noise)
    if model is None:
        raise ValueError("H1 moments need a SignalModel")
    total = 0.0
    for k in range(n + 1):
        if k % 2:
            continue
        total += (
            specfun.binomial(n, k)
            * noise_real_moment(k, noise)
            * fading_real_moment(n - k, model)
            * constellation_moment(n - k, model)
        )
    return total


def real_moment_set(model: SignalModel | None, noise: McLeishParams,
                    hypothesis: Hypothesis = Hypothesis.H1) -> RealMomentSet:
    return RealMomentSet(*(received_real_moment(n, model, noise, hypothesis) for n in (2, 4, 6, 8)))


def abs_moments_from_real(m: RealMomentSet) -> MomentSet:
    """|y| moments from Re{y} moments, valid for i.i.d. independent quadratures."""
    m2, m4, m6, m8 = m.as_tuple()
    return MomentSet(
        2.0 * m2,
        2.0 * (m4 + m2 * m2),
        2.0 * m6 + 6.0 * m4 * m2,
        2.0 * m8 + 8.0 * m6 * m2 + 6.0 * m4 * m4,
    )


def abs_moments(model: SignalModel | None, noise: McLeishParams,
                hypothesis: Hypothesis = Hypothesis.H1) -> MomentSet:
    """Exact E|y|^n, n = 2..8, under the given hypothesis."""
    if Hypothesis.parse(hypothesis) is Hypothesis.H0:
        return abs_moments_from_real(real_moment_set(None, noise, Hypothesis.H0))
    if model is None:
        raise ValueError("H1 moments need a SignalModel")
    acc = np.zeros(4)
    levels = np.abs(constellation_levels(model))
    for a in levels:
        per_level = RealMomentSet(*(
            _real_moment_given_amplitude(n, float(a), model.fading_variance, noise) for n in (2, 4, 6, 8)
        ))
        acc += abs_moments_from_real(per_level).as_tuple()
    acc /= len(levels)
    return MomentSet(*map(float, acc))
