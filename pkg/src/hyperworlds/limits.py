"""Relative-frequency and randomness limit experiments over branch weights.

For K repeated two-outcome measurements the branch weight of a binary
outcome string depends only on its one-count, so the measure of any
relative-frequency event is an exact binomial sum; it is evaluated in log
space with compensated summation.  A brute-force enumerator over all 2^K
strings (K <= 20) provides the independent cross-check and handles
arbitrary string predicates.

Sequences of outcomes are sampled i.i.d. from the branch measure (the
product-measure structure of repeated measurements licenses this), with a
per-sequence generator spawned deterministically from the master seed.
The randomness battery applies four classical tests, all adjusted to an
arbitrary Bernoulli bias p: a one-count z-test, a runs test, a
block-frequency chi-square, and a compression proxy measuring the
empirical block-coding gap against the ideal code for bias p.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import gammaln, gammaincc

from .errors import ConfigError
from .worlds import BranchDecomposition, BranchMeasureQuery, branch_measure
from .statespace import StatePreset
from .worlds import analytic_position_measure

BRUTE_FORCE_MAX_K = 20


@dataclass(frozen=True)
class RepeatedExperiment:
    """K repetitions of one measurement: a Bernoulli bias or a full branch table."""

    repetitions: int
    bias: Optional[float] = None
    branches: Optional[BranchDecomposition] = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if (self.bias is None) == (self.branches is None):
            raise ConfigError("specify exactly one of bias or branches")
        if self.bias is not None and not (0.0 <= self.bias <= 1.0):
            raise ConfigError(f"bias must lie in [0, 1], got {self.bias}")

    @classmethod
    def spin(cls, repetitions: int, bias: float) -> "RepeatedExperiment":
        return cls(repetitions=repetitions, bias=bias)

    @classmethod
    def continuous(
        cls, repetitions: int, branches: BranchDecomposition
    ) -> "RepeatedExperiment":
        return cls(repetitions=repetitions, branches=branches)


@dataclass(frozen=True)
class FrequencyLawReport:
    """Measure of the branches whose relative frequency is within eps of p."""

    repetitions: int
    bias: float
    epsilon: float
    measure: float
    method: str


def frequency_law_measure(
    repetitions: int, bias: float, epsilon: float
) -> FrequencyLawReport:
    """Exact branch measure of { |ones/K - p| < eps } via a binomial sum.

    The frequency window is strict on both sides.  Terms are accumulated in
    log space with compensated summation, so the result is overflow-safe for
    any K.
    """
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")
    if not (0.0 < bias <= 1.0):
        raise ConfigError(f"bias must lie in (0, 1], got {bias}")
    if not (0.0 < epsilon <= 1.0):
        raise ConfigError(f"epsilon must lie in (0, 1], got {epsilon}")
    k = np.arange(repetitions + 1, dtype=float)
    mask = np.abs(k / repetitions - bias) < epsilon
    if bias == 1.0:
        measure = 1.0 if mask[-1] else 0.0
    else:
        log_pmf = (
            gammaln(repetitions + 1.0)
            - gammaln(k + 1.0)
            - gammaln(repetitions - k + 1.0)
            + k * math.log(bias)
            + (repetitions - k) * math.log1p(-bias)
        )
        selected = log_pmf[mask]
        if selected.size == 0:
            measure = 0.0
        else:
            peak = float(selected.max())
            measure = math.exp(peak) * math.fsum(np.exp(selected - peak).tolist())
    return FrequencyLawReport(
        repetitions=repetitions,
        bias=bias,
        epsilon=epsilon,
        measure=min(measure, 1.0),
        method="exact-binomial",
    )


def frequency_law_measure_by_enumeration(
    repetitions: int, bias: float, epsilon: float
) -> FrequencyLawReport:
    """Same window measure as :func:`frequency_law_measure`, by 2^K enumeration."""
    measure = brute_force_branch_measure(
        repetitions,
        bias,
        lambda bits: abs(sum(bits) / repetitions - bias) < epsilon,
    )
    return FrequencyLawReport(
        repetitions=repetitions,
        bias=bias,
        epsilon=epsilon,
        measure=measure,
        method="brute-force",
    )


def frequency_law_measure_sampled(
    repetitions: int,
    bias: float,
    epsilon: float,
    sample_count: int,
    seed: int,
) -> FrequencyLawReport:
    """Monte Carlo estimate of the window measure from sampled sequences."""
    sequences = sample_branches(
        RepeatedExperiment.spin(repetitions, bias), sample_count, seed
    )
    freqs = sequences.mean(axis=1)
    measure = float(np.mean(np.abs(freqs - bias) < epsilon))
    return FrequencyLawReport(
        repetitions=repetitions,
        bias=bias,
        epsilon=epsilon,
        measure=measure,
        method="sampled",
    )


def brute_force_branch_measure(
    repetitions: int,
    bias: float,
    predicate: Callable[[tuple[int, ...]], bool],
) -> float:
    """Sum of branch weights over all 2^K outcome strings satisfying the predicate.

    The reference path for small K: enumerates every string explicitly.
    """
    if not (1 <= repetitions <= BRUTE_FORCE_MAX_K):
        raise ConfigError(
            f"brute force enumeration is capped at K <= {BRUTE_FORCE_MAX_K}, "
            f"got {repetitions}"
        )
    if not (0.0 <= bias <= 1.0):
        raise ConfigError(f"bias must lie in [0, 1], got {bias}")
    weight_by_ones = [
        bias**ones * (1.0 - bias) ** (repetitions - ones)
        for ones in range(repetitions + 1)
    ]
    terms = (
        weight_by_ones[sum(bits)]
        for bits in itertools.product((0, 1), repeat=repetitions)
        if predicate(bits)
    )
    return math.fsum(terms)


def sample_branches(
    experiment: RepeatedExperiment, count: int, seed: int
) -> np.ndarray:
    """Draw ``count`` outcome sequences of length K, reproducibly.

    Spin experiments yield 0/1 arrays; continuous experiments yield indices
    into the branch table (inverse CDF over the outcome-sorted weights).
    Each sequence uses its own generator spawned from the master seed, so
    results are identical regardless of evaluation order.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    k = experiment.repetitions
    streams = np.random.SeedSequence(seed).spawn(count)
    out = np.empty((count, k), dtype=np.int64)
    if experiment.bias is not None:
        for row, stream in enumerate(streams):
            rng = np.random.Generator(np.random.PCG64(stream))
            out[row] = rng.random(k) < experiment.bias
    else:
        weights = experiment.branches.weights
        total = weights.sum()
        cdf = np.cumsum(weights / total)
        cdf[-1] = 1.0
        for row, stream in enumerate(streams):
            rng = np.random.Generator(np.random.PCG64(stream))
            out[row] = np.searchsorted(cdf, rng.random(k), side="right")
    return out


# --------------------------------------------------------------------------
# randomness battery


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    passed: bool


@dataclass(frozen=True)
class RandomnessReport:
    """Outcome of the four-test battery on one binary sequence."""

    results: tuple[TestResult, ...]
    bias: float
    significance: float
    length: int

    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failed(self) -> list[str]:
        return [r.name for r in self.results if not r.passed]


def _monobit(bits: np.ndarray, p: float) -> tuple[float, float]:
    n = bits.size
    ones = int(bits.sum())
    z = (ones - n * p) / math.sqrt(n * p * (1.0 - p))
    return z, math.erfc(abs(z) / math.sqrt(2.0))


def _runs(bits: np.ndarray, p: float) -> tuple[float, float]:
    n = bits.size
    transitions = int(np.count_nonzero(np.diff(bits)))
    q = 2.0 * p * (1.0 - p)
    mean = (n - 1) * q
    # adjacent transition indicators correlate: E[T_i T_{i+1}] = q/2
    var = (n - 1) * q * (1.0 - q) + 2.0 * (n - 2) * (q / 2.0 - q * q)
    if var <= 0:
        return math.inf, 0.0
    z = (transitions - mean) / math.sqrt(var)
    return z, math.erfc(abs(z) / math.sqrt(2.0))


def _block_frequency(bits: np.ndarray, p: float, block: int = 32) -> tuple[float, float]:
    n_blocks = bits.size // block
    counts = bits[: n_blocks * block].reshape(n_blocks, block).sum(axis=1)
    chi2 = float(((counts - block * p) ** 2).sum() / (block * p * (1.0 - p)))
    return chi2, float(gammaincc(n_blocks / 2.0, chi2 / 2.0))


def _compression_proxy(bits: np.ndarray, p: float, block: int = 4) -> tuple[float, float]:
    """Empirical coding gap of block patterns against the ideal code for bias p.

    The statistic is the Kullback-Leibler divergence (bits per block) of the
    observed pattern frequencies from the Bernoulli(p) product distribution;
    2*n*ln2*KL is asymptotically chi-square with 2^block - 1 degrees of
    freedom.  Zero gap means the sequence compresses no better and no worse
    than ideal for its bias.
    """
    n_blocks = bits.size // block
    patterns = bits[: n_blocks * block].reshape(n_blocks, block)
    codes = patterns @ (1 << np.arange(block - 1, -1, -1))
    observed = np.bincount(codes, minlength=1 << block).astype(float)
    ones_per_code = np.array(
        [bin(c).count("1") for c in range(1 << block)], dtype=float
    )
    log_expected = ones_per_code * math.log(p) + (block - ones_per_code) * math.log1p(-p)
    freq = observed / n_blocks
    nonzero = freq > 0
    kl = float(
        (freq[nonzero] * (np.log(freq[nonzero]) - log_expected[nonzero])).sum()
    ) / math.log(2.0)
    g_stat = 2.0 * n_blocks * math.log(2.0) * kl
    dof = (1 << block) - 1
    return kl, float(gammaincc(dof / 2.0, g_stat / 2.0))


def randomness_battery(
    sequence: Union[np.ndarray, Sequence[int]],
    bias: float,
    significance: float = 0.01,
) -> RandomnessReport:
    """Run the four-test battery on a binary sequence with Bernoulli bias ``bias``.

    A test passes when its p-value is at least ``significance``.  Sequences
    must have at least 100 entries for the asymptotic null distributions to
    apply.
    """
    bits = np.asarray(sequence, dtype=np.int64)
    if bits.ndim != 1 or bits.size < 100:
        raise ConfigError("randomness battery needs a 1-d sequence of length >= 100")
    if not (0.0 < bias < 1.0):
        raise ConfigError(f"bias must lie in (0, 1), got {bias}")
    if not np.isin(bits, (0, 1)).all():
        raise ConfigError("sequence entries must be 0 or 1")
    tests = (
        ("monobit", _monobit),
        ("runs", _runs),
        ("block-frequency", _block_frequency),
        ("compression-proxy", _compression_proxy),
    )
    results = []
    for name, fn in tests:
        stat, p_value = fn(bits, bias)
        results.append(
            TestResult(
                name=name,
                statistic=float(stat),
                p_value=float(p_value),
                passed=bool(p_value >= significance),
            )
        )
    return RandomnessReport(
        results=tuple(results),
        bias=bias,
        significance=significance,
        length=bits.size,
    )


# --------------------------------------------------------------------------
# continuous-spectrum frequency law


@dataclass(frozen=True)
class ContinuousFrequencyReport:
    """Empirical landing frequencies against the analytic spectral measure."""

    repetitions: int
    sample_count: int
    seed: int
    delta: float
    intervals: tuple[tuple[float, float], ...]
    analytic: tuple[float, ...]
    branch: tuple[float, ...]
    empirical: np.ndarray  # shape (sample_count, n_intervals)

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.empirical - np.array(self.analytic))

    @property
    def sampling_deviations(self) -> np.ndarray:
        """Deviations from the internal branch measure: the pure sampling factor.

        Converges to zero as K grows, unlike :attr:`deviations`, which bottoms
        out at the fixed-dimension gap between branch and analytic measures.
        """
        return np.abs(self.empirical - np.array(self.branch))

    @property
    def max_deviation_per_interval(self) -> np.ndarray:
        return self.deviations.max(axis=0)

    @property
    def median_sup_deviation(self) -> float:
        """Median over samples of the per-sample sup over intervals."""
        return float(np.median(self.deviations.max(axis=1)))

    @property
    def median_sup_sampling_deviation(self) -> float:
        return float(np.median(self.sampling_deviations.max(axis=1)))

    def rows(self):
        maxdev = self.max_deviation_per_interval
        meddev = np.median(self.deviations, axis=0)
        return [
            (lo, hi, a, b, float(mx), float(md))
            for (lo, hi), a, b, mx, md in zip(
                self.intervals, self.analytic, self.branch, maxdev, meddev
            )
        ]


def continuous_frequency_law(
    bd: BranchDecomposition,
    preset: Optional[StatePreset],
    repetitions: int,
    interval_family: Sequence[tuple[float, float]],
    delta: float,
    sample_count: int,
    seed: int,
) -> ContinuousFrequencyReport:
    """Sample outcome sequences and compare landing frequencies per interval.

    For each sampled length-K sequence and each interval F, the empirical
    fraction of outcomes in the delta-fattened F is compared against the
    analytic measure of F for the embedded preset (which must support an
    analytic position measure).  With ``preset=None`` the internal branch
    measure itself serves as the reference.
    """
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")
    intervals = tuple((float(lo), float(hi)) for lo, hi in interval_family)
    branch = tuple(
        branch_measure(bd, BranchMeasureQuery(intervals=(interval,), delta=delta))
        for interval in intervals
    )
    if preset is None:
        analytic = branch
    else:
        analytic = tuple(
            analytic_position_measure(preset, bd.spec.space, interval)
            for interval in intervals
        )
    experiment = RepeatedExperiment.continuous(repetitions, bd)
    samples = sample_branches(experiment, sample_count, seed)
    landed = bd.outcomes[samples]  # (sample_count, K) outcome values
    empirical = np.empty((sample_count, len(intervals)))
    for j, interval in enumerate(intervals):
        query = BranchMeasureQuery(intervals=(interval,), delta=delta)
        mask = query.contains(landed.ravel()).reshape(landed.shape)
        empirical[:, j] = mask.mean(axis=1)
    return ContinuousFrequencyReport(
        repetitions=repetitions,
        sample_count=sample_count,
        seed=seed,
        delta=delta,
        intervals=intervals,
        analytic=analytic,
        branch=branch,
        empirical=empirical,
    )
