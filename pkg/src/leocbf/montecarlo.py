"""Brute-force stochastic-geometry simulator used as the oracle for the analytics.

Trials run in fixed-size blocks.  Block ``i`` draws from its own stream
``SeedSequence(seed, spawn_key=(i,))``; blocks are reduced in index order, so
results are bit-identical for any number of worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from .geometry import SphereGeometry, to_ring
from .interference import KM

BLOCK_SIZE = 8192
MIN_TRIALS = 1000
Z95 = 1.96


class InsufficientTrialsError(RuntimeError):
    """A conditioned estimate kept fewer trials than required."""

    def __init__(self, kept, needed=MIN_TRIALS):
        super().__init__(f"only {kept} conditioned trials kept, need at least {needed}")
        self.kept = kept
        self.needed = needed


@dataclass(frozen=True)
class ConstellationSample:
    visible_distances: np.ndarray     # metres, ascending
    total_visible: int
    sample_mode: str


@dataclass(frozen=True)
class ConstellationBatch:
    """Many trials at once: ``distances`` (km) is sorted within each trial."""

    counts: np.ndarray
    distances: np.ndarray
    sample_mode: str

    @property
    def offsets(self):
        return np.concatenate(([0], np.cumsum(self.counts)))

    def trial(self, i):
        o = self.offsets
        return ConstellationSample(KM * self.distances[o[i]:o[i + 1]], int(self.counts[i]),
                                   self.sample_mode)


@dataclass(frozen=True)
class McEstimate:
    value: float
    trials: int
    half_width_95: float

    @classmethod
    def from_hits(cls, hits, trials):
        if trials <= 0:
            raise ValueError("trials must be positive")
        p = hits / trials
        return cls(p, int(trials), Z95 * math.sqrt(p * (1.0 - p) / trials))

    def contains(self, x, slack=0.0):
        return abs(x - self.value) <= self.half_width_95 + slack


@dataclass(frozen=True)
class SimulationParams:
    geometry: SphereGeometry
    lam: float                 # satellites per km^2 of orbit sphere
    budget: object             # LinkBudget
    fading: object             # FadingParams
    K: int
    mode: str = "ring"

    def __post_init__(self):
        if self.mode not in ("ring", "sphere"):
            raise ValueError("mode must be 'ring' or 'sphere'")
        if self.K < 1:
            raise ValueError("K must be >= 1")


@dataclass(frozen=True)
class TrialOutcomes:
    """Per-trial results; SINR is 0 when nothing is visible, delta is nan if undefined."""

    count: np.ndarray
    sinr: np.ndarray
    delta: np.ndarray
    r1: np.ndarray
    rK: np.ndarray
    K: int

    @property
    def trials(self):
        return self.count.size


def block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _sort_ragged(counts, values):
    trial = np.repeat(np.arange(counts.size), counts)
    order = np.lexsort((values, trial))
    return values[order]


def sample_constellations(geom, lam, n, rng, mode="ring"):
    """Draw ``n`` independent constellations seen from the typical station."""
    if mode == "ring":
        ring = to_ring(geom, lam)
        counts = rng.poisson(ring.mean_count, size=n)
        u = rng.random(counts.sum())
        r2 = ring.r_min ** 2 + u * (ring.r_max ** 2 - ring.r_min ** 2)
        d = np.sqrt(r2)
    elif mode == "sphere":
        rs, re = geom.orbit_radius, geom.earth_radius
        total = rng.poisson(4.0 * math.pi * rs * rs * lam, size=n)
        # uniform on the sphere: height is uniform on [-R_S, R_S]
        z = rng.uniform(-rs, rs, size=total.sum())
        keep = z >= re + geom.min_visibility_altitude
        trial = np.repeat(np.arange(n), total)
        counts = np.bincount(trial[keep], minlength=n)
        d = np.sqrt(np.maximum(rs * rs + re * re - 2.0 * re * z[keep], 0.0))
    else:
        raise ValueError("mode must be 'ring' or 'sphere'")
    return ConstellationBatch(counts, _sort_ragged(counts, d), mode)


def sample_constellation(geom, lam, mode="ring", rng=None):
    rng = np.random.default_rng() if rng is None else rng
    return sample_constellations(geom, lam, 1, rng, mode).trial(0)


def sample_channel_power(fading, rng, size=None):
    """Shadowed-Rician power: pick an Erlang component, then draw it."""
    cw = np.cumsum(fading.weights)
    z = np.minimum(np.searchsorted(cw / cw[-1], rng.random(size), side="right"), fading.m - 1)
    return rng.gamma(z + 1.0, 1.0 / fading.rate)


def _first_of_rank(counts, rank):
    """Flat index of the element at ``rank`` (0-based) in each trial, -1 if absent."""
    off = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return np.where(counts > rank, off + rank, -1)


def realize_batch(batch, budget, fading, K, rng, serving_power=None):
    """SINR, relative distance and count for every trial in ``batch``.

    ``serving_power`` overrides the fresh serving-link fading draw (test hook).
    """
    counts = batch.counts
    n = counts.size
    d = batch.distances
    alpha = budget.alpha
    rank = np.arange(d.size) - np.repeat(np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    trial = np.repeat(np.arange(n), counts)

    h = sample_channel_power(fading, rng, size=d.size)
    gain = h * (KM * d) ** (-alpha)
    interf = np.bincount(trial, weights=np.where(rank >= K, budget.gbar * gain, 0.0), minlength=n)

    i1 = _first_of_rank(counts, 0)
    iK = _first_of_rank(counts, max(K, 2) - 1)
    r1 = np.where(i1 >= 0, d[np.maximum(i1, 0)], np.nan)
    rk = np.where(iK >= 0, d[np.maximum(iK, 0)], np.nan)
    if serving_power is None:
        h1 = sample_channel_power(fading, rng, size=n)
    else:
        h1 = np.full(n, float(serving_power))
    with np.errstate(invalid="ignore"):
        signal = h1 * (KM * r1) ** (-alpha)
        sinr = np.where(counts > 0, signal / (interf + budget.noise_norm), 0.0)
        delta = r1 / rk
    return TrialOutcomes(counts, sinr, delta, r1, rk if K > 1 else r1, K)


def realize_sinr(sample, budget, fading, K, rng, serving_power=None):
    """Single-constellation version: returns ``(sinr, delta, visible)``."""
    batch = ConstellationBatch(np.array([sample.total_visible]),
                               np.asarray(sample.visible_distances, dtype=float) / KM,
                               sample.sample_mode)
    out = realize_batch(batch, budget, fading, K, rng, serving_power)
    return float(out.sinr[0]), float(out.delta[0]), int(out.count[0])


def _run_block(params, seed, block, n):
    rng = block_rng(seed, block)
    batch = sample_constellations(params.geometry, params.lam, n, rng, params.mode)
    return realize_batch(batch, params.budget, params.fading, params.K, rng)


def simulate(params, trials, seed=0, threads=1, block_size=BLOCK_SIZE):
    """Run ``trials`` independent trials; output independent of ``threads``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    nblocks = -(-trials // block_size)
    sizes = [min(block_size, trials - i * block_size) for i in range(nblocks)]
    if threads <= 1:
        parts = [_run_block(params, seed, i, s) for i, s in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda a: _run_block(params, seed, *a), enumerate(sizes)))
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])
    return TrialOutcomes(cat("count"), cat("sinr"), cat("delta"), cat("r1"), cat("rK"), params.K)


def condition_mask(outcomes, delta_condition=None, branch="all"):
    """Trials kept by a conditioning rule.

    ``branch``: ``"all"`` keeps everything, ``"few"`` keeps 1..K-1 visible,
    ``"many"`` keeps at least K visible (at least 2 when K = 1, so delta exists).
    A ``delta_condition = (center, halfwidth)`` implies ``"many"``.
    """
    c = outcomes.count
    K = outcomes.K
    if delta_condition is not None:
        branch = "many"
    if branch == "all":
        mask = np.ones(c.size, bool)
    elif branch == "few":
        mask = (c >= 1) & (c <= K - 1)
    elif branch == "many":
        mask = c >= max(K, 2) if delta_condition is not None else c >= K
    else:
        raise ValueError("branch must be 'all', 'few' or 'many'")
    if delta_condition is not None:
        center, hw = delta_condition
        mask &= np.abs(outcomes.delta - center) <= hw
    return mask


def coverage_from_outcomes(outcomes, gamma, delta_condition=None, branch="all",
                           min_trials=MIN_TRIALS):
    """Empirical P[SINR >= gamma] over the kept trials, one estimate per gamma."""
    mask = condition_mask(outcomes, delta_condition, branch)
    kept = int(mask.sum())
    if kept < min_trials:
        raise InsufficientTrialsError(kept, min_trials)
    s = np.sort(outcomes.sinr[mask])
    gam = np.atleast_1d(np.asarray(gamma, dtype=float))
    hits = kept - np.searchsorted(s, gam, side="left")
    return [McEstimate.from_hits(int(k), kept) for k in hits]


def estimate_coverage(params, gamma, trials, delta_condition=None, seed=0, threads=1,
                      branch="all"):
    """Monte Carlo coverage estimates over a target-SINR grid."""
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}")
    out = simulate(params, trials, seed, threads)
    return coverage_from_outcomes(out, gamma, delta_condition, branch)


def ergodic_se_mc(outcomes):
    """Mean of log2(1 + SINR), zero when nothing is visible; ``(mean, standard error)``."""
    x = np.log2(1.0 + outcomes.sinr)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def interference_laplace_mc(ring, budget, fading, s, rK, n, rng):
    """Empirical E[exp(-s (I + noise))] for interferers beyond ``rK``; ``(mean, standard error)``."""
    mu = ring.density * math.pi * (ring.r_max ** 2 - rK ** 2)
    counts = rng.poisson(mu, size=n)
    total = counts.sum()
    r = np.sqrt(rK ** 2 + rng.random(total) * (ring.r_max ** 2 - rK ** 2))
    h = sample_channel_power(fading, rng, size=total)
    trial = np.repeat(np.arange(n), counts)
    interf = np.bincount(trial, weights=budget.gbar * h * (KM * r) ** (-budget.alpha),
                         minlength=n)
    x = np.exp(-s * (interf + budget.noise_norm))
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: Optional[np.ndarray]       # None marks insufficient data
    n: int

    @property
    def insufficient(self):
        return self.counts is None


def _hist(values, edges, min_count):
    if values.size < max(min_count, 1):
        return Histogram(edges, None, int(values.size))
    c, _ = np.histogram(values, bins=edges)
    return Histogram(edges, c, int(values.size))


def empirical_distance_stats(params, trials, bins=40, delta_condition=(0.7, 0.01), seed=0,
                             threads=1, min_count=1):
    """Histograms of r1 given few visible, rK given many and a delta bin, delta given many."""
    ring = to_ring(params.geometry, params.lam)
    out = simulate(params, trials, seed, threads)
    K = params.K
    few = condition_mask(out, branch="few")
    many = condition_mask(out, branch="many")
    dmask = condition_mask(out, delta_condition) if K > 1 else np.zeros_like(many)
    rk_lo = ring.r_min / delta_condition[0] if delta_condition else ring.r_min
    return {
        "nearest_few": _hist(out.r1[few], np.linspace(ring.r_min, ring.r_max, bins + 1), min_count),
        "kth_many_delta": _hist(out.rK[dmask], np.linspace(min(rk_lo, ring.r_max), ring.r_max,
                                                           bins + 1), min_count),
        "delta_many": _hist(out.delta[many], np.linspace(ring.r_min / ring.r_max, 1.0, bins + 1),
                            min_count),
    }
