"""Coverage probability, ergodic spectral efficiency and the best cluster size.

Coverage splits by the visible count: nothing visible is an outage; with
1..K-1 visible every satellite sits in the cluster, so only noise remains
(SNR branch); with at least K visible the out-of-cluster satellites beyond
the K-th nearest interfere (SINR branch).

Target SINRs are linear and may be arrays; results broadcast over them.
"""
from dataclasses import dataclass, replace
import math
from typing import Optional

import numpy as np

from . import distributions as dist
from .interference import KM, scaled_laplace_series, exponent_terms
from .quadrature import QuadratureError, integrate
from .special import alzer_kappa, channel_power_ccdf

FEW_RTOL = 1e-8
MANY_RTOL = 1e-7
MARGINAL_RTOL = 1e-6
SE_RTOL = 1e-6
SE_COVERAGE_FLOOR = 1e-6
SE_TAIL_BOUND = 1e-5

CONDITIONINGS = ("joint", "truncated")
DEFAULT_CONDITIONING = "joint"


@dataclass(frozen=True)
class CoverageResult:
    probability: np.ndarray
    few: np.ndarray             # coverage given 1..K-1 visible (SNR)
    many: np.ndarray            # coverage given >= K visible (SINR)
    weights: dist.CountProbabilities


@dataclass(frozen=True)
class CoverageQuery:
    """What to evaluate: target SINR grid, mode and optional relative distance."""

    gamma: np.ndarray
    mode: str = "exact"
    delta: Optional[float] = None
    kappa: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if np.any(g <= 0):
            raise ValueError("target SINR must be positive")
        if self.mode not in ("exact", "approx", "marginal"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode != "marginal" and self.delta is None:
            raise ValueError(f"mode {self.mode!r} needs a relative distance")
        object.__setattr__(self, "gamma", g)


def _outs(x):
    return float(x) if np.ndim(x) == 0 else x


def _signal_scale(fading, budget, gamma, dist_km):
    """Laplace argument (beta - c) * gamma * d^alpha with d in metres."""
    return fading.rate * gamma * (KM * dist_km) ** budget.alpha


def snr_coverage_few(ring, budget, fading, K, gamma, rtol=FEW_RTOL):
    """P[SNR >= gamma | 1 <= visible <= K-1]."""
    gamma = np.asarray(gamma, dtype=float)
    g_f = gamma.ravel()

    def integrand(r1, idx):
        thr = g_f[idx][:, None] * (KM * r1) ** budget.alpha * budget.noise_norm
        return channel_power_ccdf(fading, thr) * dist.nearest_pdf_given_few(ring, K, r1)

    out = integrate(integrand, np.full(g_f.shape, ring.r_min), ring.r_max, rtol=rtol, atol=1e-12)
    return _outs(np.clip(out.reshape(gamma.shape), 0.0, 1.0))


def rk_density(ring, K, delta, rK, conditioning=DEFAULT_CONDITIONING):
    """Density of the K-th distance used inside the SINR branch.

    ``"truncated"`` restricts the K-th distance to at least ``r_min/delta``;
    ``"joint"`` conditions on the relative distance exactly.  For K = 1 both
    give the nearest-distance density given at least one visible.
    """
    if conditioning == "truncated":
        return dist.kth_pdf_given_many(ring, K, delta, rK)
    if conditioning == "joint":
        return dist.kth_pdf_given_delta_exact(ring, K, delta, rK)
    raise ValueError(f"conditioning must be one of {CONDITIONINGS}")


def conditional_sinr_given_rk(ring, budget, fading, delta, gamma, rK):
    """P[SINR >= gamma | K-th distance rK, relative distance delta].

    ``sum_z w_z sum_{v<=z} (-s)^v L^(v)(s) / v!`` at ``s = (beta-c) gamma (delta rK)^alpha``.
    """
    s = _signal_scale(fading, budget, gamma, delta * rK)
    series = scaled_laplace_series(ring, budget, fading, s, rK, fading.m - 1)
    return np.cumsum(series, axis=-1) @ fading.weights


def sinr_coverage_many(ring, budget, fading, K, delta, gamma, rtol=MANY_RTOL,
                       conditioning=DEFAULT_CONDITIONING):
    """P[SINR >= gamma | at least K visible, relative distance delta]."""
    delta, gamma = np.broadcast_arrays(np.asarray(delta, dtype=float),
                                       np.asarray(gamma, dtype=float))
    shape = delta.shape
    d_f = delta.ravel()
    g_f = gamma.ravel()

    def integrand(rK, idx):
        d = d_f[idx][:, None]
        inner = conditional_sinr_given_rk(ring, budget, fading, d, g_f[idx][:, None], rK)
        return inner * rk_density(ring, K, d, rK, conditioning)

    out = integrate(integrand, ring.r_min / d_f, ring.r_max, rtol=rtol, atol=1e-12)
    return _outs(np.clip(out.reshape(shape), 0.0, 1.0))


def coverage_cond_delta(ring, budget, fading, K, delta, gamma, conditioning=DEFAULT_CONDITIONING):
    """Coverage for a given relative in-cluster distance (count-mixed)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    w = dist.count_probabilities(ring, K)
    gamma = np.asarray(gamma, dtype=float)
    if K == 1:
        # no in-cluster nulling: serve the nearest, interference beyond it
        few = np.zeros_like(gamma)
        many = np.asarray(sinr_coverage_many(ring, budget, fading, 1, 1.0, gamma,
                                             conditioning="truncated"))
    else:
        few = np.asarray(snr_coverage_few(ring, budget, fading, K, gamma))
        many = np.asarray(sinr_coverage_many(ring, budget, fading, K, delta, gamma,
                                             conditioning=conditioning))
    prob = w.p_one_to_Km1 * few + w.p_geq_K * many
    return CoverageResult(_outs(prob), _outs(few), _outs(many), w)


def _kappas(fading, kappa):
    if kappa is None:
        return np.array([alzer_kappa(z) for z in range(fading.m)])
    k = np.broadcast_to(np.asarray(kappa, dtype=float), (fading.m,)).copy()
    for z in range(fading.m):
        if not alzer_kappa(z) - 1e-12 <= k[z] <= 1.0 + 1e-12:
            raise ValueError(
                f"kappa[{z}]={k[z]} outside [{alzer_kappa(z):.6g}, 1]")
    return k


def approx_sinr_given_rk(ring, budget, fading, delta, gamma, rK, kappa=None):
    """Alzer-type approximation of P[SINR >= gamma | rK, delta] using Laplace values only.

    ``1 - sum_z w_z sum_l C(z+1,l) (-1)^l L(l kappa_z s)``; the l = 0 term is
    cancelled analytically against the leading one.
    """
    kap = _kappas(fading, kappa)
    s = _signal_scale(fading, budget, gamma, delta * rK)
    total = 0.0
    for z in range(fading.m):
        ls = np.arange(1, z + 2)
        coef = np.array([math.comb(z + 1, l) * (-1) ** (l + 1) for l in ls], dtype=float)
        args = np.multiply.outer(s * kap[z], ls.astype(float))
        rr = np.broadcast_to(np.asarray(rK, dtype=float)[..., None], args.shape)
        lap = np.exp(exponent_terms(ring, budget, fading, args, rr, 0)[..., 0])
        total = total + fading.weights[z] * (lap @ coef)
    return total


def coverage_cond_delta_approx(ring, budget, fading, K, delta, gamma, kappa=None,
                               rtol=MANY_RTOL, conditioning=DEFAULT_CONDITIONING):
    """Approximate SINR-branch coverage given at least K visible and ``delta``.

    ``kappa`` holds one value per mixture order in ``[((z+1)!)^(-1/(z+1)), 1]``;
    ``None`` picks the lower end of every bracket.
    """
    kap = _kappas(fading, kappa)
    delta, gamma = np.broadcast_arrays(np.asarray(delta, dtype=float),
                                       np.asarray(gamma, dtype=float))
    shape = delta.shape
    d_f = delta.ravel()
    g_f = gamma.ravel()

    def integrand(rK, idx):
        d = d_f[idx][:, None]
        inner = approx_sinr_given_rk(ring, budget, fading, d, g_f[idx][:, None], rK, kap)
        return inner * rk_density(ring, K, d, rK, conditioning)

    out = integrate(integrand, ring.r_min / d_f, ring.r_max, rtol=rtol, atol=1e-12)
    return _outs(out.reshape(shape))


def coverage_approx_mixed(ring, budget, fading, K, delta, gamma, kappa=None,
                          conditioning=DEFAULT_CONDITIONING):
    """Count-mixed coverage with the SINR branch replaced by its approximation."""
    w = dist.count_probabilities(ring, K)
    few = np.asarray(snr_coverage_few(ring, budget, fading, K, gamma))
    many = np.asarray(coverage_cond_delta_approx(ring, budget, fading, K, delta, gamma,
                                                 kappa, conditioning=conditioning))
    prob = w.p_one_to_Km1 * few + w.p_geq_K * many
    return CoverageResult(_outs(prob), _outs(few), _outs(many), w)


def sinr_coverage_many_marginal(ring, budget, fading, K, gamma, rtol=MARGINAL_RTOL,
                                inner_rtol=MANY_RTOL, conditioning=DEFAULT_CONDITIONING):
    """SINR-branch coverage averaged over the relative distance density."""
    gamma = np.asarray(gamma, dtype=float)
    g_f = gamma.ravel()
    lo = ring.r_min / ring.r_max

    def integrand(x, idx):
        many = sinr_coverage_many(ring, budget, fading, K, x, g_f[idx][:, None],
                                  rtol=inner_rtol, conditioning=conditioning)
        return np.asarray(many) * dist.delta_pdf(ring, K, x)

    out = integrate(integrand, np.full(g_f.shape, lo), 1.0, rtol=rtol, atol=1e-10)
    return _outs(np.clip(out.reshape(gamma.shape), 0.0, 1.0))


def coverage_marginal(ring, budget, fading, K, gamma, conditioning=DEFAULT_CONDITIONING):
    """Coverage averaged over all in-cluster geometries."""
    if K == 1:
        return coverage_cond_delta(ring, budget, fading, 1, 1.0, gamma)
    w = dist.count_probabilities(ring, K)
    few = np.asarray(snr_coverage_few(ring, budget, fading, K, gamma))
    many = np.asarray(sinr_coverage_many_marginal(ring, budget, fading, K, gamma,
                                                  conditioning=conditioning))
    prob = w.p_one_to_Km1 * few + w.p_geq_K * many
    return CoverageResult(_outs(prob), _outs(few), _outs(many), w)


def rate_threshold(rate, bandwidth):
    """SINR needed for ``rate`` bit/s over ``bandwidth`` Hz."""
    if np.any(np.asarray(rate) < 0) or bandwidth <= 0:
        raise ValueError("need rate >= 0 and bandwidth > 0")
    return np.expm1(np.asarray(rate, dtype=float) / bandwidth * math.log(2.0))


def rate_coverage(ring, budget, fading, K, rate, bandwidth, conditioning=DEFAULT_CONDITIONING):
    """P[W log2(1 + SINR) >= rate]."""
    gamma = rate_threshold(rate, bandwidth)
    return coverage_marginal(ring, budget, fading, K, gamma, conditioning).probability


def ergodic_se(ring, budget, fading, K, conditioning=DEFAULT_CONDITIONING, rtol=SE_RTOL):
    """Ergodic spectral efficiency in bit/s/Hz.

    With ``y = log2(1 + gamma)`` the integral becomes ``int_0^inf P(2^y - 1) dy``.
    It is truncated where coverage falls below 1e-6, and the remainder
    over one further decade of SINR is bounded explicitly.
    """
    def cov(y):
        return np.asarray(coverage_marginal(ring, budget, fading, K, np.expm1(y * math.log(2.0)),
                                            conditioning).probability)

    y_max = 4.0
    while float(cov(y_max)) >= SE_COVERAGE_FLOOR:
        y_max *= 1.5
        if y_max > 200:
            raise QuadratureError("coverage does not decay; SINR tail unbounded")
    g_max = 2.0 ** y_max - 1.0
    tail = float(cov(y_max)) * math.log2((1.0 + 10.0 * g_max) / (1.0 + g_max))
    if tail > SE_TAIL_BOUND:
        raise QuadratureError(f"ergodic SE tail bound {tail:.3g} exceeds {SE_TAIL_BOUND}")
    val = integrate(lambda y, idx: cov(y), 0.0, y_max, rtol=rtol, atol=1e-9)
    return float(val)


def ergodic_se_sweep(ring, radio, fading, ks=None, conditioning=DEFAULT_CONDITIONING):
    """Ergodic SE for each cluster size, link budget rebuilt per K."""
    ks = range(1, radio.n_t + 1) if ks is None else ks
    return {K: ergodic_se(ring, radio.budget(K), fading, K, conditioning) for K in ks}


def optimal_cluster_size(ring, radio, fading, n_t=None, conditioning=DEFAULT_CONDITIONING):
    """Cluster size in 1..N_t maximizing ergodic SE; ties go to the smaller K.

    Returns ``(K_star, {K: se})``.
    """
    if n_t is not None and n_t != radio.n_t:
        radio = replace(radio, n_t=n_t)
    if radio.n_t < 1:
        raise ValueError("N_t must be >= 1")
    se = ergodic_se_sweep(ring, radio, fading, conditioning=conditioning)
    best = 1
    for K in sorted(se):
        if se[K] > se[best]:
            best = K
    return best, se
