import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leocbf.geometry import (RingGeometry, SphereGeometry, cap_area_within, density_for_mean_count,
                             to_ring, visible_cap_area)


def test_cap_area_default_orbit(geom):
    assert math.isclose(visible_cap_area(geom), 2 * math.pi * 500 * 6871, rel_tol=1e-15)
    assert math.isclose(visible_cap_area(geom), 2.1587e7, rel_tol=1e-4)


def test_derived_radii(geom):
    assert geom.r_min == 500.0
    assert math.isclose(geom.r_max, math.sqrt(6871 ** 2 - 6371 ** 2), rel_tol=1e-15)


def test_cap_area_degenerates_when_cut_at_orbit():
    g = SphereGeometry(6371.0, 6871.0, 500.0 - 1e-9)
    assert visible_cap_area(g) < 1e-3


def test_cap_area_endpoints(geom):
    assert cap_area_within(geom, geom.r_min) == 0.0
    assert math.isclose(cap_area_within(geom, geom.r_max), visible_cap_area(geom), rel_tol=1e-12)


def test_cap_area_rejects_outside(geom):
    with pytest.raises(ValueError):
        cap_area_within(geom, geom.r_min - 1.0)
    with pytest.raises(ValueError):
        cap_area_within(geom, geom.r_max + 1.0)


def test_density_for_fig3(geom):
    lam = density_for_mean_count(geom, 5)
    assert math.isclose(lam, 2.3162e-7, rel_tol=1e-4)


def test_ring_identity_degenerate_radius():
    g = SphereGeometry(6371.0, 6371.0 + 1e-9)
    assert math.isclose(to_ring(g, 3e-7).density, 3e-7, rel_tol=1e-9)


@pytest.mark.parametrize("h_e", [0.0, 50.0, 300.0])
def test_replacement_identity_on_grid(h_e):
    g = SphereGeometry(6371.0, 6871.0, h_e)
    lam = 4e-7
    ring = to_ring(g, lam)
    r = np.random.default_rng(1).uniform(g.r_min, g.r_max, 100)
    cap = lam * cap_area_within(g, r)
    ann = ring.density * ring.area_within(r)
    assert np.allclose(cap, ann, rtol=1e-12, atol=1e-15)
    # identical void probabilities
    assert np.allclose(np.exp(-cap), np.exp(-ann), rtol=1e-12)
    assert math.isclose(ring.mean_count, lam * visible_cap_area(g), rel_tol=1e-12)


@settings(max_examples=50, deadline=None)
@given(alt=st.floats(200, 2000), frac=st.floats(0, 0.9), u=st.floats(0, 1))
def test_cap_area_monotone_and_matches_ring(alt, frac, u):
    g = SphereGeometry.from_altitude(alt, min_visibility_altitude=frac * alt)
    r = g.r_min + u * (g.r_max - g.r_min)
    a = cap_area_within(g, r)
    assert 0.0 <= a <= visible_cap_area(g) * (1 + 1e-12)
    assert math.isclose(a, g.orbit_radius / g.earth_radius * math.pi * (r * r - g.r_min ** 2),
                        rel_tol=1e-9, abs_tol=1e-6)


def test_invalid_geometry():
    with pytest.raises(ValueError):
        SphereGeometry(6371.0, 6000.0)
    with pytest.raises(ValueError):
        SphereGeometry(6371.0, 6871.0, 600.0)
    with pytest.raises(ValueError):
        RingGeometry(10.0, 5.0, 1.0)
    with pytest.raises(ValueError):
        to_ring(SphereGeometry(), -1.0)
