"""Monte-Carlo engine: signal chains, noise uncertainty, trials and curves.

Every trial draws from its own generator seeded by
``SeedSequence(master_seed, spawn_key=(hypothesis, trial))``, so results do
not depend on trial order or on how trials are split across workers.
Uncertainty draws use a separate key, which means MD and ED batches built
from the same seed see identical sample buffers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import detector
from .mcleish import McLeishParams, sample_ccs
from .moments import Hypothesis, SignalModel, constellation_levels

__all__ = [
    "Modulation",
    "Detector",
    "SrrcSpec",
    "TxSpec",
    "ChannelSpec",
    "UncertaintySpec",
    "TrialBatch",
    "BatchResult",
    "CurvePoint",
    "Scenario",
    "srrc_taps",
    "shape_symbols",
    "gen_received",
    "apply_noise_uncertainty",
    "trial_statistics",
    "run_batch",
    "roc_curve",
    "pd_vs_snr",
    "binomial_ci_halfwidth",
]


class Modulation(enum.Enum):
    BPSK = 2
    QAM16 = 4

    @property
    def levels(self) -> int:
        return self.value

    @classmethod
    def parse(cls, value) -> "Modulation":
        if isinstance(value, cls):
            return value
        return cls[str(value).upper()]


class Detector(enum.Enum):
    MD = "md"
    ED = "ed"

    @classmethod
    def parse(cls, value) -> "Detector":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class SrrcSpec:
    """Pulse shaping for the oversampled chain.

    ``matched_filter`` cascades the receive SRRC with the transmit one on the
    signal path.  ``filter_noise`` also passes the noise through the receive
    filter; that colours and Gaussianises it, so the H0 closed forms no
    longer apply (kept for sensitivity runs only).  ``decimate`` keeps one
    sample per symbol (at the symbol instants) instead of all F.
    """

    rolloff: float = 0.2
    oversampling: int = 4
    span_taps: int | None = None
    matched_filter: bool = True
    filter_noise: bool = False
    decimate: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in (0, 1]")
        if int(self.oversampling) != self.oversampling or self.oversampling < 1:
            raise ValueError("oversampling must be a positive integer")
        if self.span_taps is not None and (self.span_taps < 1 or self.span_taps % 2 == 0):
            raise ValueError("span_taps must be a positive odd integer")

    @property
    def taps_length(self) -> int:
        return 4 * self.oversampling + 1 if self.span_taps is None else self.span_taps


@dataclass(frozen=True)
class TxSpec:
    modulation: Modulation = Modulation.BPSK
    amplitude: float = 1.0
    pulse_shaping: SrrcSpec | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "modulation", Modulation.parse(self.modulation))
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    def signal_model(self, fading_variance: float = 1.0) -> SignalModel:
        return SignalModel(self.modulation.levels, self.amplitude, fading_variance)

    def with_snr_db(self, snr_db: float, noise_variance: float) -> "TxSpec":
        return replace(self, amplitude=math.sqrt(noise_variance * 10.0 ** (snr_db / 10.0)))


@dataclass(frozen=True)
class ChannelSpec:
    fading_variance: float = 1.0

    def __post_init__(self) -> None:
        if not self.fading_variance > 0:
            raise ValueError("fading_variance must be positive")


@dataclass(frozen=True)
class UncertaintySpec:
    """Noise-power uncertainty seen by the energy detector.

    With ``worst_case_threshold`` the ED raises its threshold so that the
    false-alarm target holds for every beta in [-L, L] dB; by default it
    trusts whatever power it was handed.
    """

    half_range_db: float = 0.0
    worst_case_threshold: bool = False

    def __post_init__(self) -> None:
        if not self.half_range_db >= 0:
            raise ValueError("half_range_db must be non-negative")


@dataclass(frozen=True)
class TrialBatch:
    trials: int = 10_000
    samples_per_trial: int = 1000
    master_seed: int = 0
    detector: Detector = Detector.MD
    hypothesis: Hypothesis = Hypothesis.H1
    pf_target: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "detector", Detector.parse(self.detector))
        object.__setattr__(self, "hypothesis", Hypothesis.parse(self.hypothesis))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.samples_per_trial < 4:
            raise ValueError("samples_per_trial must be >= 4")
        if not 0.0 < self.pf_target < 1.0:
            raise ValueError("pf_target must lie in (0, 1)")


@dataclass(frozen=True)
class BatchResult:
    rate: float
    ci_halfwidth: float
    detections: int
    trials: int


@dataclass(frozen=True)
class CurvePoint:
    x: float
    pd: float
    pf_empirical: float
    ci_halfwidth: float


@dataclass(frozen=True)
class Scenario:
    """Everything fixed across the points of one curve."""

    tx: TxSpec = field(default_factory=TxSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    noise: McLeishParams = field(default_factory=lambda: McLeishParams(1.0, 1.0))
    uncertainty: UncertaintySpec = field(default_factory=UncertaintySpec)
    detector: Detector = Detector.MD
    samples_per_trial: int = 1000
    trials: int = 10_000
    master_seed: int = 0
    pf_target: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "detector", Detector.parse(self.detector))

    def batch(self, hypothesis: Hypothesis, pf_target: float | None = None) -> TrialBatch:
        return TrialBatch(self.trials, self.samples_per_trial, self.master_seed, self.detector,
                          hypothesis, self.pf_target if pf_target is None else pf_target)


def srrc_taps(rolloff: float = 0.2, oversampling: int = 4, span_taps: int | None = None) -> np.ndarray:
    """Unit-energy square-root raised-cosine taps, centred, symmetric."""
    spec = SrrcSpec(rolloff, oversampling, span_taps)
    b = spec.rolloff
    length = spec.taps_length
    t = (np.arange(length) - (length - 1) / 2) / spec.oversampling
    h = np.empty(length)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[i] = 1.0 - b + 4.0 * b / math.pi
        elif abs(abs(ti) - 1.0 / (4.0 * b)) < 1e-12:
            h[i] = b / math.sqrt(2.0) * (
                (1 + 2 / math.pi) * math.sin(math.pi / (4 * b)) + (1 - 2 / math.pi) * math.cos(math.pi / (4 * b))
            )
        else:
            h[i] = (math.sin(math.pi * ti * (1 - b)) + 4 * b * ti * math.cos(math.pi * ti * (1 + b))) / (
                math.pi * ti * (1 - (4 * b * ti) ** 2)
            )
    return h / math.sqrt(np.sum(h * h))


def _pulse(spec: SrrcSpec) -> np.ndarray:
    taps = srrc_taps(spec.rolloff, spec.oversampling, spec.span_taps)
    pulse = np.convolve(taps, taps) if spec.matched_filter else taps
    # scale so that E|x|^2 per output sample equals E[s^2]
    return pulse * math.sqrt(spec.oversampling / np.sum(pulse * pulse))


def shape_symbols(symbols: np.ndarray, spec: SrrcSpec, count: int) -> np.ndarray:
    """Oversample and pulse-shape ``symbols``; return ``count`` steady-state samples."""
    pulse = _pulse(spec)
    up = np.zeros(len(symbols) * spec.oversampling)
    up[:: spec.oversampling] = symbols
    full = np.convolve(up, pulse)
    start = len(pulse) - 1
    if start + count > len(full) - (len(pulse) - 1):
        raise ValueError("not enough symbols for the requested sample count")
    return full[start:start + count]


def _symbols_needed(spec: SrrcSpec, count: int) -> int:
    pulse_len = 2 * spec.taps_length - 1 if spec.matched_filter else spec.taps_length
    return -(-count // spec.oversampling) + 2 * (-(-pulse_len // spec.oversampling)) + 1


def gen_received(tx: TxSpec, ch: ChannelSpec, noise: McLeishParams, hypothesis: Hypothesis,
                 n: int, seed=None) -> np.ndarray:
    """One buffer of ``n`` received samples, y = h x + w (x = 0 under H0)."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    hypothesis = Hypothesis.parse(hypothesis)
    shaping = tx.pulse_shaping
    w = sample_ccs(noise, n, rng)
    if shaping is not None and shaping.filter_noise:
        # noise is drawn at sample rate ahead of the receive filter
        taps = srrc_taps(shaping.rolloff, shaping.oversampling, shaping.span_taps)
        extra = sample_ccs(noise, len(taps) - 1, rng)
        w = np.convolve(np.concatenate([extra, w]), taps, mode="valid")
    if hypothesis is Hypothesis.H0:
        return w
    levels = constellation_levels(tx.signal_model(ch.fading_variance))
    if shaping is None:
        x = rng.choice(levels, n)
    elif shaping.decimate:
        step = shaping.oversampling
        s = rng.choice(levels, _symbols_needed(shaping, n * step))
        x = shape_symbols(s, shaping, n * step)[::step]
    else:
        s = rng.choice(levels, _symbols_needed(shaping, n))
        x = shape_symbols(s, shaping, n)
    h = rng.standard_normal((2, n)) * math.sqrt(ch.fading_variance / 2.0)
    return (h[0] + 1j * h[1]) * x + w


def apply_noise_uncertainty(spec: UncertaintySpec, true_power: float, seed=None) -> float:
    """Assumed noise power true_power * 10^(beta_dB/10), beta_dB ~ U(-L, L)."""
    if spec.half_range_db == 0.0:
        return float(true_power)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    beta_db = rng.uniform(-spec.half_range_db, spec.half_range_db)
    return float(true_power * 10.0 ** (beta_db / 10.0))


def _trial_seed(master_seed: int, hypothesis: Hypothesis, trial: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(hypothesis.value, trial, stream))


def _statistics_chunk(args) -> np.ndarray:
    scen, hypothesis, start, stop, detectors = args
    out = np.empty((len(detectors), stop - start))
    v = scen.noise.non_gaussianity
    for j, trial in enumerate(range(start, stop)):
        rng = np.random.default_rng(_trial_seed(scen.master_seed, hypothesis, trial))
        y = gen_received(scen.tx, scen.channel, scen.noise, hypothesis, scen.samples_per_trial, rng)
        for d, det in enumerate(detectors):
            if det is Detector.MD:
                out[d, j] = detector.decision_statistic(y, v)
            else:
                beta_rng = np.random.default_rng(_trial_seed(scen.master_seed, hypothesis, trial, 1))
                assumed = apply_noise_uncertainty(scen.uncertainty, scen.noise.variance, beta_rng)
                out[d, j] = detector.ed_statistic(y, assumed)
    return out


def trial_statistics(scen: Scenario, hypothesis: Hypothesis, detectors=None, workers: int = 1) -> np.ndarray:
    """Per-trial detector statistics, shape ``(len(detectors), trials)``.

    Results are identical for any ``workers`` value.
    """
    hypothesis = Hypothesis.parse(hypothesis)
    detectors = tuple(Detector.parse(d) for d in (detectors or (scen.detector,)))
    if workers <= 1 or scen.trials < 2 * workers:
        return _statistics_chunk((scen, hypothesis, 0, scen.trials, detectors))
    bounds = np.linspace(0, scen.trials, workers + 1).astype(int)
    jobs = [(scen, hypothesis, int(a), int(b), detectors) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_statistics_chunk, jobs))
    return np.concatenate(parts, axis=1)


def threshold_for(scen: Scenario, det: Detector, pf_target: float) -> float:
    """Decision threshold the given detector uses at ``pf_target``."""
    if Detector.parse(det) is Detector.MD:
        return detector.md_threshold(pf_target, scen.noise.non_gaussianity)
    # the ED threshold does not depend on the assumed power once normalised
    cfg = detector.EdConfig(scen.noise.variance, scen.noise, scen.samples_per_trial, pf_target)
    lam = detector.ed_threshold(cfg)
    if scen.uncertainty.worst_case_threshold:
        # true power may be up to 10^(L/10) times the assumed one
        lam *= 10.0 ** (scen.uncertainty.half_range_db / 10.0)
    return lam


def binomial_ci_halfwidth(rate: float, trials: int, z: float = 1.959963984540054) -> float:
    """Normal-approximation 95% half-width, with the rate kept off 0 and 1."""
    p = min(max(rate, 0.5 / trials), 1.0 - 0.5 / trials)
    return z * math.sqrt(p * (1.0 - p) / trials)


def run_batch(batch: TrialBatch, tx: TxSpec, ch: ChannelSpec, noise: McLeishParams,
              uncertainty: UncertaintySpec | None = None, workers: int = 1) -> BatchResult:
    """Fraction of trials decided H1, with its 95% CI half-width."""
    scen = Scenario(tx, ch, noise, uncertainty or UncertaintySpec(), batch.detector,
                    batch.samples_per_trial, batch.trials, batch.master_seed, batch.pf_target)
    stats = trial_statistics(scen, batch.hypothesis, workers=workers)[0]
    lam = threshold_for(scen, batch.detector, batch.pf_target)
    hits = int(np.count_nonzero(stats > lam))
    rate = hits / batch.trials
    return BatchResult(rate, binomial_ci_halfwidth(rate, batch.trials), hits, batch.trials)


def roc_curve(pf_grid, scen: Scenario, workers: int = 1) -> list[CurvePoint]:
    """Empirical Pd (and companion Pf) at each target false-alarm rate.

    Each point equals ``run_batch`` at that target with the scenario's seed;
    the buffers are generated once and reused across the grid.
    """
    pf_grid = [float(p) for p in pf_grid]
    if not pf_grid:
        raise ValueError("empty pf grid")
    s1 = trial_statistics(scen, Hypothesis.H1, workers=workers)[0]
    s0 = trial_statistics(scen, Hypothesis.H0, workers=workers)[0]
    out = []
    for p in pf_grid:
        lam = threshold_for(scen, scen.detector, p)
        pd = float(np.mean(s1 > lam))
        out.append(CurvePoint(p, pd, float(np.mean(s0 > lam)), binomial_ci_halfwidth(pd, scen.trials)))
    return out


def pd_vs_snr(snr_grid_db, scen: Scenario, workers: int = 1) -> list[CurvePoint]:
    """Empirical Pd at each SNR (dB) for the scenario's fixed pf_target."""
    snr_grid_db = [float(s) for s in snr_grid_db]
    if not snr_grid_db:
        raise ValueError("empty SNR grid")
    lam = threshold_for(scen, scen.detector, scen.pf_target)
    s0 = trial_statistics(scen, Hypothesis.H0, workers=workers)[0]
    pf_emp = float(np.mean(s0 > lam))
    out = []
    for snr in snr_grid_db:
        point = replace(scen, tx=scen.tx.with_snr_db(snr, scen.noise.variance))
        s1 = trial_statistics(point, Hypothesis.H1, workers=workers)[0]
        pd = float(np.mean(s1 > lam))
        out.append(CurvePoint(snr, pd, pf_emp, binomial_ci_halfwidth(pd, scen.trials)))
    return out
