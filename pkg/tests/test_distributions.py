import math

import numpy as np
import pytest
from scipy import integrate as si, stats
from scipy.special import gammainc

from leocbf.distributions import (_kth_pdf_termwise, count_probabilities, delta_cdf, delta_pdf,
                                  joint_pdf_d1_dK, kth_ccdf_given_many, kth_normalizer,
                                  kth_pdf_given_delta_exact, kth_pdf_given_many,
                                  kth_pdf_unconditional, nearest_ccdf_given_few,
                                  nearest_pdf_any, nearest_pdf_given_few)
from leocbf.geometry import density_for_mean_count
from leocbf.montecarlo import block_rng, sample_constellations

MEANS = [2.0, 5.0, 10.0]


def _quad(f, a, b):
    return si.quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)[0]


def _first_and_kth(batch, K):
    o = batch.offsets[:-1]
    c = batch.counts
    r1 = np.where(c >= 1, batch.distances[np.minimum(o, batch.distances.size - 1)], np.nan)
    idx = np.minimum(o + K - 1, batch.distances.size - 1)
    rK = np.where(c >= K, batch.distances[idx], np.nan)
    return c, r1, rK


def _draw(geom, lam, trials, mode, K, seed, block=50_000):
    parts = [_first_and_kth(sample_constellations(geom, lam, min(block, trials - s),
                                                  block_rng(seed, i), mode), K)
             for i, s in enumerate(range(0, trials, block))]
    return [np.concatenate(p) for p in zip(*parts)]


def _chi2_pvalue(samples, edges, probs):
    """Pearson chi-square with adjacent bins pooled until every expectation is >= 5."""
    observed, _ = np.histogram(samples, bins=edges)
    expected = probs / probs.sum() * observed.sum()
    obs_p, exp_p = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= 5:
            obs_p.append(o_acc)
            exp_p.append(e_acc)
            o_acc = e_acc = 0.0
    obs_p[-1] += o_acc
    exp_p[-1] += e_acc
    return stats.chisquare(obs_p, exp_p).pvalue


@pytest.mark.parametrize("mu", MEANS)
@pytest.mark.parametrize("K", [1, 2, 4, 8])
def test_count_probabilities_partition(ring_for, mu, K):
    p = count_probabilities(ring_for(mu), K)
    assert math.isclose(p.p_zero + p.p_one_to_Km1 + p.p_geq_K, 1.0, rel_tol=1e-14)
    assert math.isclose(p.p_geq_K, stats.poisson.sf(K - 1, mu), rel_tol=1e-10)
    if K == 1:
        assert p.p_one_to_Km1 == 0.0


def test_nearest_few_uniform_in_area_for_pairs(ring5):
    r = np.linspace(ring5.r_min, ring5.r_max, 9)
    ref = 2 * r / (ring5.r_max ** 2 - ring5.r_min ** 2)
    assert np.allclose(nearest_pdf_given_few(ring5, 2, r), ref, rtol=1e-12)


@pytest.mark.parametrize("mu", MEANS)
@pytest.mark.parametrize("K", [2, 3, 5])
def test_nearest_few_normalized_and_ccdf(ring_for, mu, K):
    ring = ring_for(mu)
    total = _quad(lambda r: nearest_pdf_given_few(ring, K, r), ring.r_min, ring.r_max)
    assert math.isclose(total, 1.0, rel_tol=1e-6)
    for r in np.linspace(ring.r_min, ring.r_max, 7):
        tail = _quad(lambda t: nearest_pdf_given_few(ring, K, t), r, ring.r_max)
        assert math.isclose(nearest_ccdf_given_few(ring, K, r), tail, abs_tol=1e-9)


@pytest.mark.parametrize("mu", MEANS)
@pytest.mark.parametrize("K", [1, 2, 4, 8])
def test_kth_normalizer_limits(ring_for, mu, K):
    ring = ring_for(mu)
    assert math.isclose(kth_normalizer(ring, K, 1.0), count_probabilities(ring, K).p_geq_K,
                        rel_tol=1e-12)
    assert kth_normalizer(ring, K, ring.r_min / ring.r_max) == pytest.approx(0.0, abs=1e-15)
    v = kth_normalizer(ring, K, np.linspace(0.3, 1.0, 15))
    assert np.all(np.diff(v) >= -1e-15)


@pytest.mark.parametrize("mu", MEANS)
@pytest.mark.parametrize("K", [1, 2, 4, 8])
@pytest.mark.parametrize("delta", [0.3, 0.6, 0.9, 1.0])
def test_kth_given_many_normalized(ring_for, mu, K, delta):
    ring = ring_for(mu)
    lo = ring.r_min / delta
    total = _quad(lambda r: kth_pdf_given_many(ring, K, delta, r), lo, ring.r_max)
    assert math.isclose(total, 1.0, rel_tol=1e-6)


@pytest.mark.parametrize("K", [2, 4, 8])
def test_kth_pdf_is_minus_ccdf_derivative(ring5, K):
    delta = 0.7
    lo = ring5.r_min / delta
    r = np.linspace(lo + 5.0, ring5.r_max - 5.0, 50)
    eps = 1e-3
    deriv = (kth_ccdf_given_many(ring5, K, delta, r + eps)
             - kth_ccdf_given_many(ring5, K, delta, r - eps)) / (2 * eps)
    assert np.allclose(-deriv, kth_pdf_given_many(ring5, K, delta, r), rtol=1e-5, atol=1e-12)
    for x in r[::10]:
        tail = _quad(lambda t: kth_pdf_given_many(ring5, K, delta, t), x, ring5.r_max)
        assert math.isclose(kth_ccdf_given_many(ring5, K, delta, x), tail, abs_tol=1e-7)


@pytest.mark.parametrize("mu", MEANS)
@pytest.mark.parametrize("K", [2, 3, 6])
def test_kth_closed_form_matches_termwise(ring_for, mu, K):
    ring = ring_for(mu)
    delta = 0.55
    r = np.linspace(ring.r_min / delta, ring.r_max, 40)
    a = kth_pdf_given_many(ring, K, delta, r)
    b = _kth_pdf_termwise(ring, K, delta, r)
    assert np.allclose(a, b, rtol=1e-8, atol=1e-12 * a.max())


def test_single_cluster_reduces_to_nearest_any(ring5):
    r = np.linspace(ring5.r_min, ring5.r_max, 30)
    assert np.allclose(kth_pdf_given_many(ring5, 1, 1.0, r), nearest_pdf_any(ring5, r), rtol=1e-12)


@pytest.mark.parametrize("K", [1, 3, 7])
def test_unconditional_kth_mass(ring5, K):
    total = _quad(lambda r: kth_pdf_unconditional(ring5, K, r), ring5.r_min, ring5.r_max)
    assert math.isclose(total, count_probabilities(ring5, K).p_geq_K, rel_tol=1e-7)


@pytest.mark.parametrize("mu", MEANS)
@pytest.mark.parametrize("K", [2, 3, 5, 10])
def test_delta_pdf_and_cdf(ring_for, mu, K):
    ring = ring_for(mu)
    lo = ring.r_min / ring.r_max
    assert math.isclose(_quad(lambda x: delta_pdf(ring, K, x), lo, 1.0), 1.0, rel_tol=1e-6)
    assert delta_cdf(ring, K, lo) == pytest.approx(0.0, abs=1e-10)
    assert delta_cdf(ring, K, 1.0) == pytest.approx(1.0, abs=1e-10)
    x = np.linspace(lo, 1.0, 21)
    steps = np.diff(delta_cdf(ring, K, x))
    ref = [_quad(lambda t: delta_pdf(ring, K, t), a, b) for a, b in zip(x[:-1], x[1:])]
    assert np.allclose(steps, ref, rtol=1e-7, atol=1e-10)


@pytest.mark.parametrize("mu", [5.0, 10.0])
@pytest.mark.parametrize("K", [2, 4])
def test_joint_density_normalized_and_marginal(ring_for, mu, K):
    ring = ring_for(mu)
    total = si.dblquad(lambda r1, rK: joint_pdf_d1_dK(ring, K, r1, rK), ring.r_min, ring.r_max,
                       lambda rK: ring.r_min, lambda rK: rK, epsabs=1e-12, epsrel=1e-10)[0]
    assert math.isclose(total, 1.0, rel_tol=1e-6)
    # the relative distance x = r1/rK has density int f(x rK, rK) rK drK
    for x in np.linspace(ring.r_min / ring.r_max + 0.01, 0.99, 20):
        m = _quad(lambda rK: joint_pdf_d1_dK(ring, K, x * rK, rK) * rK, ring.r_min / x, ring.r_max)
        assert math.isclose(m, delta_pdf(ring, K, x), rel_tol=1e-6)


@pytest.mark.parametrize("K", [2, 3, 6])
@pytest.mark.parametrize("delta", [0.4, 0.7, 0.95])
def test_exact_kth_given_delta_is_joint_slice(ring5, K, delta):
    lo = ring5.r_min / delta
    total = _quad(lambda r: kth_pdf_given_delta_exact(ring5, K, delta, r), lo, ring5.r_max)
    assert math.isclose(total, 1.0, rel_tol=1e-7)
    r = np.linspace(lo, ring5.r_max, 25)
    ref = joint_pdf_d1_dK(ring5, K, delta * r, r) * r / delta_pdf(ring5, K, delta)
    assert np.allclose(kth_pdf_given_delta_exact(ring5, K, delta, r), ref, rtol=1e-9)


def test_invalid_cluster_sizes(ring5):
    for bad in (0, 2.5, 65):
        with pytest.raises(ValueError):
            count_probabilities(ring5, bad)
    with pytest.raises(ValueError):
        delta_pdf(ring5, 1, 0.5)
    with pytest.raises(ValueError):
        nearest_pdf_given_few(ring5, 1, 600.0)


# --- agreement with simulated constellations -------------------------------------------------


@pytest.mark.parametrize("K", [2, 3])
def test_nearest_given_few_matches_sphere_sampling(geom, ring_for, K):
    ring = ring_for(2.0)
    lam = density_for_mean_count(geom, 2.0)
    c, r1, _ = _draw(geom, lam, 400_000, "sphere", K, seed=11)
    few = (c >= 1) & (c < K)
    assert few.sum() > 100_000
    edges = np.linspace(ring.r_min, ring.r_max, 41)
    probs = -np.diff(nearest_ccdf_given_few(ring, K, edges))
    assert _chi2_pvalue(r1[few], edges, probs) > 0.01


@pytest.mark.parametrize("K", [2, 4])
def test_delta_matches_sampling(geom, ring_for, K):
    ring = ring_for(5.0)
    lam = density_for_mean_count(geom, 5.0)
    c, r1, rK = _draw(geom, lam, 200_000, "ring", K, seed=12)
    many = c >= K
    edges = np.linspace(ring.r_min / ring.r_max, 1.0, 41)
    probs = np.diff(delta_cdf(ring, K, edges))
    assert _chi2_pvalue(r1[many] / rK[many], edges, probs) > 0.01


@pytest.mark.parametrize("K", [2, 3])
def test_kth_given_many_matches_its_construction(geom, ring_for, K):
    # count >= K and K-th distance beyond r_min/delta
    ring = ring_for(5.0)
    lam = density_for_mean_count(geom, 5.0)
    delta = 0.7
    c, _, rK = _draw(geom, lam, 300_000, "ring", K, seed=13)
    keep = (c >= K) & (rK >= ring.r_min / delta)
    edges = np.linspace(ring.r_min / delta, ring.r_max, 41)
    probs = -np.diff(kth_ccdf_given_many(ring, K, delta, edges))
    assert _chi2_pvalue(rK[keep], edges, probs) > 0.01


@pytest.mark.parametrize("K", [2, 3])
def test_kth_given_delta_bin_matches_sampling(geom, ring_for, K):
    ring = ring_for(5.0)
    lam = density_for_mean_count(geom, 5.0)
    d0, half = 0.7, 0.01
    c, r1, rK = _draw(geom, lam, 2_000_000, "ring", K, seed=14)
    many = c >= K
    dl = np.where(many, r1 / np.where(many, rK, 1.0), np.nan)
    keep = np.abs(dl - d0) <= half
    assert keep.sum() > 20_000
    edges = np.linspace(ring.r_min / (d0 + half), ring.r_max, 41)
    # mixture of the exact conditional over the delta bin, weighted by its density
    lp = ring.lam_pi
    u_edges = lp * edges ** 2
    probs = np.zeros(edges.size - 1)
    for d in np.linspace(d0 - half, d0 + half, 81):
        u_lo = lp * (ring.r_min / d) ** 2
        cdf = gammainc(K, np.clip(u_edges, u_lo, lp * ring.r_max ** 2))
        probs += delta_pdf(ring, K, d) * np.diff(cdf) / (gammainc(K, lp * ring.r_max ** 2)
                                                         - gammainc(K, u_lo))
    assert _chi2_pvalue(rK[keep], edges, probs) > 0.01
