"""Monte Carlo engine: sample path lengths, standardize, and test normality.

The simulated statistic follows the oracle's convention: it is the trie's
external path length minus n, i.e. depth is counted below the level that
resolves each string's initial state.  That makes sample means directly
comparable to `exact_moments.mean_for_initial` and keeps every centered or
scaled quantity unchanged (the shift is deterministic).

All randomness is counter based: replicate r of a run with master seed s uses
sub-seed mix(s, r), so results are independent of execution order and thread
count.  The distributional fixed-point map T is realized by resampling: it
combines independent draws from two clouds with coefficients whose squares
sum to one, so a pair of standard normal clouds is (statistically) a fixed
point, and iterating from anything else contracts toward it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from trielab.exact_moments import MomentTable, mean_for_initial, variance_for_initial
from trielab.markov_source import MarkovChain, replicate_seeds, stream_seeds, uniform_block
from trielab.trie import DepthExceeded, batch_external_path_lengths


class EmptyCloud(ValueError):
    """Operation requires at least one sample."""


class BadScale(ValueError):
    """Standardization scale must be a positive finite number."""


class SingularFit(ValueError):
    """Variance-growth regression needs >= 4 distinct grid points."""


_INITIAL_MODES = ("delta0", "delta1", "mu")
_STANDARDIZATIONS = ("oracle", "asymptotic")


@dataclass(frozen=True)
class SimulationConfig:
    """One Monte Carlo run: m tries of n strings each.

    `initial` picks the first-symbol law: "delta0"/"delta1" force it, "mu"
    draws it from the chain's mu.  `standardization` selects the scale used
    downstream: the oracle-exact standard deviation or the asymptotic
    sqrt(sigma^2 n log n).
    """

    chain: MarkovChain
    n: int
    m: int
    seed: int
    initial: str = "mu"
    standardization: str = "asymptotic"

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.initial not in _INITIAL_MODES:
            raise ValueError(f"initial must be one of {_INITIAL_MODES}")
        if self.standardization not in _STANDARDIZATIONS:
            raise ValueError(f"standardization must be one of {_STANDARDIZATIONS}")

    @property
    def forced_initial(self) -> int | None:
        return {"delta0": 0, "delta1": 1, "mu": None}[self.initial]


class EmpiricalCloud:
    """Sample cloud with moment summaries and acceptance flags."""

    def __init__(self, samples):
        self.samples = np.asarray(samples, dtype=np.float64)

    @property
    def size(self) -> int:
        return self.samples.size

    def mean(self) -> float:
        self._require_nonempty()
        return float(self.samples.mean())

    def variance(self) -> float:
        self._require_nonempty()
        return float(self.samples.var(ddof=1)) if self.size > 1 else 0.0

    def skewness(self) -> float:
        self._require_nonempty()
        c = self.samples - self.samples.mean()
        m2 = float(np.mean(c * c))
        if m2 == 0.0:
            return 0.0
        return float(np.mean(c**3)) / m2**1.5

    def excess_kurtosis(self) -> float:
        self._require_nonempty()
        c = self.samples - self.samples.mean()
        m2 = float(np.mean(c * c))
        if m2 == 0.0:
            return 0.0
        return float(np.mean(c**4)) / (m2 * m2) - 3.0

    def summary(self) -> dict:
        """Moment summary plus soft pass flags at the 4/sqrt(m) scale.

        The flags describe a standardized cloud (mean near 0, variance near
        1); on raw clouds they are still reported but not meaningful.
        """
        m = self.size
        mean = self.mean()
        var = self.variance()
        ks = ks_distance(self)
        return {
            "count": m,
            "mean": mean,
            "var": var,
            "skew": self.skewness(),
            "kurt": self.excess_kurtosis(),
            "ks": ks,
            "mean_ok": bool(abs(mean) <= 4.0 / math.sqrt(m)),
            "var_ok": bool(abs(var - 1.0) <= 8.0 / math.sqrt(m)),
            "ks_ok": bool(ks <= 0.05),
        }

    def _require_nonempty(self):
        if self.size == 0:
            raise EmptyCloud("cloud has no samples")


def simulate_epl(config: SimulationConfig, threads: int = 0) -> EmpiricalCloud:
    """m independent path-length samples; replicate r depends only on (seed, r).

    Thread-parallel over replicate blocks; the counter-based seeding makes
    the output identical for any thread count.
    """
    m, n = config.m, config.n
    seeds = replicate_seeds(config.seed, np.arange(m))
    sizes = np.full(m, n, dtype=np.int64)
    if threads == 0:
        threads = min(os.cpu_count() or 1, 8)
    threads = max(1, min(threads, m))
    raw = np.empty(m, dtype=np.int64)
    ranges = [
        (start, min(start + math.ceil(m / threads), m))
        for start in range(0, m, math.ceil(m / threads))
    ]

    def run_block(block):
        start, stop = block
        try:
            raw[start:stop] = batch_external_path_lengths(
                config.chain,
                sizes[start:stop],
                seeds[start:stop],
                forced_initial=config.forced_initial,
            )
        except DepthExceeded as err:
            raise DepthExceeded(
                err.indices, err.depth, replicate=start + (err.replicate or 0)
            ) from None

    if threads == 1:
        for block in ranges:
            run_block(block)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for job in [pool.submit(run_block, b) for b in ranges]:
                job.result()
    shift = n if n >= 2 else 0
    return EmpiricalCloud(raw - shift)


def simulate_epl_poisson(
    chain: MarkovChain, lam: float, m: int, seed: int, initial: str = "mu"
) -> EmpiricalCloud:
    """Path lengths of tries over Poisson(lam)-many strings, one draw per replicate."""
    sizes = np.random.default_rng(seed).poisson(lam, m).astype(np.int64)
    seeds = replicate_seeds(seed, np.arange(m))
    forced = {"delta0": 0, "delta1": 1, "mu": None}[initial]
    raw = batch_external_path_lengths(chain, sizes, seeds, forced_initial=forced)
    return EmpiricalCloud(raw - np.where(sizes >= 2, sizes, 0))


def standardize(cloud: EmpiricalCloud, center: float, scale: float) -> EmpiricalCloud:
    """Elementwise (x - center) / scale."""
    if not (np.isfinite(scale) and scale > 0.0):
        raise BadScale(f"scale must be positive and finite, got {scale}")
    return EmpiricalCloud((cloud.samples - center) / scale)


def standardization_parameters(
    config: SimulationConfig, table: MomentTable, sigma2: float
) -> tuple[float, float]:
    """(center, scale) for the configured mode; center is always the exact mean."""
    chain, n = config.chain, config.n
    if config.initial == "mu":
        center = mean_for_initial(chain, table, n)
        exact_var = variance_for_initial(chain, table, n)
    else:
        i = 0 if config.initial == "delta0" else 1
        center = float(table.nu[i][n])
        exact_var = float(table.var[i][n])
    if config.standardization == "oracle":
        scale = math.sqrt(exact_var)
    else:
        scale = math.sqrt(sigma2 * n * math.log(n))
    return center, scale


def ks_distance(cloud: EmpiricalCloud) -> float:
    """sup_x |empirical CDF - Phi(x)|, evaluated at the sample points."""
    if cloud.size == 0:
        raise EmptyCloud("cloud has no samples")
    x = np.sort(cloud.samples)
    m = x.size
    cdf = ndtr(x)
    grid = np.arange(1, m + 1) / m
    return float(np.max(np.maximum(grid - cdf, cdf - (grid - 1.0 / m))))


def ks_two_sample(a: EmpiricalCloud, b: EmpiricalCloud) -> float:
    """sup_x |empirical CDF of a - empirical CDF of b|."""
    if a.size == 0 or b.size == 0:
        raise EmptyCloud("both clouds must be nonempty")
    xa, xb = np.sort(a.samples), np.sort(b.samples)
    allx = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, allx, side="right") / xa.size
    fb = np.searchsorted(xb, allx, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def apply_T(
    cloud0: EmpiricalCloud, cloud1: EmpiricalCloud, chain: MarkovChain, seed: int
) -> tuple[EmpiricalCloud, EmpiricalCloud]:
    """One resampling step of the distributional map.

    Output samples combine independent with-replacement draws W0, W1 from the
    two clouds as (sqrt(p00) W0 + sqrt(p01) W1, sqrt(p10) W0 + sqrt(p11) W1);
    each coefficient pair has squares summing to 1, so centered unit-variance
    inputs keep zero mean exactly and unit variance in expectation.
    """
    if cloud0.size == 0 or cloud1.size == 0:
        raise EmptyCloud("both clouds must be nonempty")

    def draws(salt: int, count: int, source: np.ndarray) -> np.ndarray:
        u = uniform_block(stream_seeds(seed, salt), 0, count)
        return source[(u * source.size).astype(np.int64)]

    out0 = math.sqrt(chain.p00) * draws(0, cloud0.size, cloud0.samples) + math.sqrt(
        chain.p01
    ) * draws(1, cloud0.size, cloud1.samples)
    out1 = math.sqrt(chain.p10) * draws(2, cloud1.size, cloud0.samples) + math.sqrt(
        chain.p11
    ) * draws(3, cloud1.size, cloud1.samples)
    return EmpiricalCloud(out0), EmpiricalCloud(out1)


@dataclass(frozen=True)
class VarianceFit:
    """Least-squares var(n) ~ a n log n + b n over a grid of sizes."""

    a: float
    b: float
    residual: float


def fit_growth_values(ns, values) -> VarianceFit:
    """Fit the two-term growth model to explicit (n, value) pairs."""
    ns = np.asarray(ns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if ns.size < 4 or np.unique(ns).size < 2:
        raise SingularFit("need >= 4 grid points with at least 2 distinct sizes")
    design = np.column_stack([ns * np.log(ns), ns])
    coef, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
    if rank < 2:
        raise SingularFit("design matrix is rank deficient")
    resid = float(np.linalg.norm(design @ coef - values))
    return VarianceFit(float(coef[0]), float(coef[1]), resid)


def fit_variance_growth(table: MomentTable, grid) -> VarianceFit:
    """Growth fit of the oracle variance for the table's chain over `grid`."""
    grid = [int(n) for n in grid]
    if any(n < 2 or n > table.N for n in grid):
        raise ValueError(f"grid must lie within [2, {table.N}]")
    values = [variance_for_initial(table.chain, table, n) for n in grid]
    return fit_growth_values(grid, values)


def uniform_cloud(m: int, seed: int, salt: int = 100) -> EmpiricalCloud:
    """Standardized uniform samples (mean 0, variance 1), counter seeded."""
    u = uniform_block(stream_seeds(seed, salt), 0, m)
    return EmpiricalCloud((u - 0.5) * math.sqrt(12.0))
