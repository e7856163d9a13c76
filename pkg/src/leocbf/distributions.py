"""Visible-count probabilities and in-cluster distance distributions.

Every function takes a :class:`~leocbf.geometry.RingGeometry` and works in
its length unit.  Densities are vectorized over their evaluation point and
vanish outside their support.  Throughout, ``mu_r`` is the mean number of
points closer than ``r`` and ``nu_r`` the mean number between ``r`` and the
outer rim.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gammainc

from .special import poisson_tail_sums

MAX_CLUSTER_SIZE = 64


@dataclass(frozen=True)
class CountProbabilities:
    p_zero: float
    p_one_to_Km1: float
    p_geq_K: float


@dataclass(frozen=True)
class ClusterGeometry:
    K: int
    delta: float

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")


def _check_K(K, minimum=1):
    if int(K) != K or not minimum <= K <= MAX_CLUSTER_SIZE:
        raise ValueError(f"K must be an integer in {minimum}..{MAX_CLUSTER_SIZE}")
    return int(K)


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def _poisson_cdf(n, mean):
    """P[Poisson(mean) <= n] for integer n (empty sum when n < 0)."""
    mean = np.asarray(mean, dtype=float)
    if n < 0:
        return np.zeros_like(mean)
    if np.max(mean, initial=0.0) > 30:
        # log-space terms to avoid exp underflow against large powers
        v = np.arange(n + 1)
        logs = v * np.log(np.maximum(mean[..., None], 1e-300)) - mean[..., None] \
            - np.array([math.lgamma(k + 1) for k in v])
        out = np.exp(logs).sum(axis=-1)
        return np.where(mean == 0, 1.0, out)
    return poisson_tail_sums(mean, n).sum(axis=-1)


def _poisson_upper(n, mean):
    """P[Poisson(mean) >= n]; equals 1 for n <= 0."""
    mean = np.asarray(mean, dtype=float)
    if n <= 0:
        return np.ones_like(mean)
    return gammainc(n, mean)


def _radial_means(ring, r):
    r = np.asarray(r, dtype=float)
    lp = ring.lam_pi
    mu_r = lp * (r * r - ring.r_min ** 2)
    nu_r = lp * (ring.r_max ** 2 - r * r)
    return mu_r, nu_r


def count_probabilities(ring, K):
    """Poisson masses of the visible count: 0, 1..K-1, and at least K."""
    K = _check_K(K)
    mu = ring.mean_count
    p_zero = math.exp(-mu)
    p_low = float(_poisson_cdf(K - 1, mu)) - p_zero if K > 1 else 0.0
    p_low = max(p_low, 0.0)
    return CountProbabilities(p_zero, p_low, max(1.0 - p_zero - p_low, 0.0))


def nearest_pdf_given_few(ring, K, r1):
    """Density of the nearest distance given 1 <= visible count <= K-1."""
    K = _check_K(K, 2)
    r1 = np.asarray(r1, dtype=float)
    lp = ring.lam_pi
    _, nu = _radial_means(ring, r1)
    nu = np.maximum(nu, 0.0)
    mu = ring.mean_count
    num = np.zeros_like(r1)
    term = np.ones_like(r1)
    for u in range(1, K):
        if u > 1:
            term = term * nu / (u - 1)
        num = num + term
    den = 0.0
    t = 1.0
    for n in range(1, K):
        t *= mu / n
        den += t
    out = 2.0 * lp * r1 * num / den
    inside = (r1 >= ring.r_min) & (r1 <= ring.r_max)
    return _scalar(np.where(inside, out, 0.0))


def nearest_ccdf_given_few(ring, K, r1):
    K = _check_K(K, 2)
    r1 = np.clip(np.asarray(r1, dtype=float), ring.r_min, ring.r_max)
    _, nu = _radial_means(ring, r1)
    mu = ring.mean_count
    num = np.zeros_like(r1)
    den = 0.0
    tn = np.ones_like(r1)
    td = 1.0
    for u in range(1, K):
        tn = tn * nu / u
        td *= mu / u
        num = num + tn
        den += td
    return _scalar(num / den)


def _joint_tail(ring, K, r):
    """P[count >= K, K-th distance > r] = sum_j P[j inside r] P[>= K-j beyond r]."""
    r = np.clip(np.asarray(r, dtype=float), ring.r_min, ring.r_max)
    mu_r, nu_r = _radial_means(ring, r)
    inner = poisson_tail_sums(mu_r, K - 1)
    # e^{-mu_r} - e^{-mu} sum_{w<K-j} nu^w/w!  ==  e^{-mu_r} P[Poisson(nu_r) >= K-j]
    total = np.zeros_like(r)
    for j in range(K):
        total = total + inner[..., j] * _poisson_upper(K - j, nu_r)
    return total


def kth_normalizer(ring, K, delta):
    """Joint probability of at least K visible and K-th distance >= r_min/delta."""
    K = _check_K(K)
    delta = np.asarray(delta, dtype=float)
    return _scalar(_joint_tail(ring, K, ring.r_min / delta))


def kth_pdf_given_many(ring, K, delta, rK):
    """Density of the K-th nearest distance given count >= K and the relative distance.

    The conditioning on ``delta`` is carried by restricting the K-th distance
    to at least ``r_min/delta``.  The derivative of the conditional tail
    telescopes to ``2 lam pi r e^{-mu_r} mu_r^(K-1)/(K-1)!`` over the normalizer.
    """
    K = _check_K(K)
    delta = np.asarray(delta, dtype=float)
    rK = np.asarray(rK, dtype=float)
    r = np.clip(rK, ring.r_min, ring.r_max)
    mu_r, _ = _radial_means(ring, r)
    num = 2.0 * ring.lam_pi * r * poisson_tail_sums(np.maximum(mu_r, 0.0), K - 1)[..., K - 1]
    v = _joint_tail(ring, K, ring.r_min / delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(v > 0, num / v, 0.0)
    inside = (rK >= ring.r_min / delta) & (rK <= ring.r_max)
    return _scalar(np.where(inside, out, 0.0))


def _kth_pdf_termwise(ring, K, delta, rK):
    """Term-by-term derivative of the conditional tail; loses accuracy deep in the tail."""
    K = _check_K(K)
    delta = np.asarray(delta, dtype=float)
    rK = np.asarray(rK, dtype=float)
    lp = ring.lam_pi
    r = np.clip(rK, ring.r_min, ring.r_max)
    mu_r, nu_r = _radial_means(ring, r)
    e_mu_r = np.exp(-mu_r)
    e_mu = math.exp(-ring.mean_count)
    nu_pow = poisson_tail_sums(np.maximum(nu_r, 0.0), K)
    nu_pow = nu_pow * np.exp(np.maximum(nu_r, 0.0))[..., None]   # nu^t/t!
    mu_pow = poisson_tail_sums(mu_r, K) * np.exp(mu_r)[..., None]   # mu_r^i/i!
    total = np.zeros(np.broadcast(r, delta).shape)
    for i in range(K):
        n_t = K - i - 1
        tail = nu_pow[..., : n_t + 1].sum(axis=-1)
        if i > 0:
            # 2 r i (lam pi)^i (r^2 - rmin^2)^(i-1) / i!  ==  2 lam pi r mu_r^(i-1)/(i-1)!
            first = 2.0 * lp * r * mu_pow[..., i - 1] * (e_mu * tail - e_mu_r)
        else:
            first = 0.0
        deriv_tail = nu_pow[..., :n_t].sum(axis=-1) if n_t >= 1 else 0.0
        second = mu_pow[..., i] * (2.0 * math.pi * ring.density * r * e_mu_r
                                   - 2.0 * lp * r * e_mu * deriv_tail)
        total = total + first + second
    v = _joint_tail(ring, K, ring.r_min / delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(v > 0, total / v, 0.0)
    inside = (rK >= ring.r_min / delta) & (rK <= ring.r_max)
    return _scalar(np.where(inside, np.maximum(out, 0.0), 0.0))


def kth_ccdf_given_many(ring, K, delta, rK):
    K = _check_K(K)
    delta = np.asarray(delta, dtype=float)
    rK = np.asarray(rK, dtype=float)
    lo = ring.r_min / delta
    v = _joint_tail(ring, K, lo)
    tail = _joint_tail(ring, K, np.maximum(rK, lo))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(v > 0, tail / v, 0.0)
    out = np.where(rK <= lo, 1.0, out)
    return _scalar(np.clip(out, 0.0, 1.0))


def kth_pdf_unconditional(ring, K, rK):
    """Density of the K-th nearest distance restricted to count >= K (mass P[count >= K])."""
    K = _check_K(K)
    rK = np.asarray(rK, dtype=float)
    mu_r, _ = _radial_means(ring, rK)
    mu_r = np.maximum(mu_r, 0.0)
    out = 2.0 * ring.lam_pi * rK * poisson_tail_sums(mu_r, K - 1)[..., K - 1]
    inside = (rK >= ring.r_min) & (rK <= ring.r_max)
    return _scalar(np.where(inside, out, 0.0))


def nearest_pdf_any(ring, r1):
    """Nearest-distance density given at least one visible satellite."""
    r1 = np.asarray(r1, dtype=float)
    lp = ring.lam_pi
    out = 2.0 * lp * math.exp(lp * ring.r_min ** 2) * r1 * np.exp(-lp * r1 * r1) \
        / -math.expm1(-ring.mean_count)
    inside = (r1 >= ring.r_min) & (r1 <= ring.r_max)
    return _scalar(np.where(inside, out, 0.0))


def delta_pdf(ring, K, x):
    """Density of the relative distance d_1/d_K given at least K visible."""
    K = _check_K(K, 2)
    x = np.asarray(x, dtype=float)
    lp = ring.lam_pi
    lo_x = ring.r_min / ring.r_max
    xs = np.clip(x, lo_x, 1.0)
    u_lo = lp * ring.r_min ** 2 / (xs * xs)
    u_hi = lp * ring.r_max ** 2
    shift = lp * ring.r_min ** 2
    # e^{shift} Gamma(K, u) = (K-1)! e^{-(u - shift)} sum_v u^v/v!
    gam = math.factorial(K - 1) * (
        np.exp(-(u_lo - shift)) * _partial_exp(u_lo, K - 1)
        - math.exp(-(u_hi - shift)) * _partial_exp(u_hi, K - 1)
    )
    p_many = count_probabilities(ring, K).p_geq_K
    out = 2.0 * xs * (1.0 - xs * xs) ** (K - 2) * gam / (math.factorial(K - 2) * p_many)
    inside = (x >= lo_x) & (x <= 1.0)
    return _scalar(np.where(inside, np.maximum(out, 0.0), 0.0))


def _partial_exp(u, n):
    """sum_{v<=n} u^v / v!"""
    u = np.asarray(u, dtype=float)
    term = np.ones_like(u)
    total = np.ones_like(u)
    for v in range(1, n + 1):
        term = term * u / v
        total = total + term
    return total


def delta_cdf(ring, K, x):
    """P[delta <= x | count >= K], from the joint density integrated in closed form."""
    K = _check_K(K, 2)
    x = np.clip(np.asarray(x, dtype=float), ring.r_min / ring.r_max, 1.0)
    lp = ring.lam_pi
    shift = lp * ring.r_min ** 2
    u0 = lp * ring.r_min ** 2 * (1.0 / (x * x) - 1.0)
    u1 = ring.mean_count
    # int_{u0}^{u1} e^{-u} u^{K-1} du = Gamma(K,u0) - Gamma(K,u1)
    first = math.factorial(K - 1) * (np.exp(-u0) * _partial_exp(u0, K - 1)
                                     - math.exp(-u1) * _partial_exp(u1, K - 1))
    t0 = lp * ring.r_min ** 2 / (x * x)
    t1 = lp * ring.r_max ** 2
    second = (1.0 - x * x) ** (K - 1) * math.factorial(K - 1) * (
        np.exp(-(t0 - shift)) * _partial_exp(t0, K - 1)
        - math.exp(-(t1 - shift)) * _partial_exp(t1, K - 1))
    p_many = count_probabilities(ring, K).p_geq_K
    return _scalar((first - second) / (math.factorial(K - 1) * p_many))


def joint_pdf_d1_dK(ring, K, r1, rK):
    """Joint density of nearest and K-th nearest distances given count >= K."""
    K = _check_K(K, 2)
    r1 = np.asarray(r1, dtype=float)
    rK = np.asarray(rK, dtype=float)
    lp = ring.lam_pi
    p_many = count_probabilities(ring, K).p_geq_K
    gap = np.maximum(rK * rK - r1 * r1, 0.0)
    out = 4.0 * lp ** K * r1 * rK * gap ** (K - 2) * np.exp(-lp * (rK * rK - ring.r_min ** 2)) \
        / (math.factorial(K - 2) * p_many)
    inside = (ring.r_min <= r1) & (r1 <= rK) & (rK <= ring.r_max)
    return _scalar(np.where(inside, out, 0.0))


def kth_pdf_given_delta_exact(ring, K, delta, rK):
    """Density of the K-th distance given the relative distance exactly (from the joint density).

    Proportional to ``rK^(2K-1) exp(-lam pi rK^2)`` on ``[r_min/delta, r_max]``.
    """
    K = _check_K(K)
    delta = np.asarray(delta, dtype=float)
    rK = np.asarray(rK, dtype=float)
    lp = ring.lam_pi
    lo = ring.r_min / delta
    u_lo = lp * lo ** 2
    u_hi = lp * ring.r_max ** 2
    u = lp * rK ** 2
    # 2 lp r u^{K-1} e^{-u} / (Gamma(K, u_lo) - Gamma(K, u_hi)), scaled by e^{u_lo}
    norm = math.factorial(K - 1) * (_partial_exp(u_lo, K - 1)
                                    - np.exp(-(u_hi - u_lo)) * _partial_exp(u_hi, K - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2.0 * lp * rK * u ** (K - 1) * np.exp(-(u - u_lo)) / norm
    inside = (rK >= lo) & (rK <= ring.r_max) & (norm > 0)
    return _scalar(np.where(inside, out, 0.0))
