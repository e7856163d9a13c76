"""Visible spherical cap and its equivalent planar annulus.

All lengths are kilometres and intensities are per square kilometre.
"""
from dataclasses import dataclass
import math

import numpy as np

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class SphereGeometry:
    """Earth sphere, satellite sphere and the visibility cut height."""

    earth_radius: float = EARTH_RADIUS_KM
    orbit_radius: float = EARTH_RADIUS_KM + 500.0
    min_visibility_altitude: float = 0.0

    def __post_init__(self):
        if not self.earth_radius > 0:
            raise ValueError("earth_radius must be positive")
        if not self.orbit_radius > self.earth_radius:
            raise ValueError("orbit_radius must exceed earth_radius")
        if not 0 <= self.min_visibility_altitude < self.orbit_radius - self.earth_radius:
            raise ValueError("min_visibility_altitude must lie in [0, R_S - R_E)")

    @classmethod
    def from_altitude(cls, altitude, earth_radius=EARTH_RADIUS_KM, min_visibility_altitude=0.0):
        return cls(earth_radius, earth_radius + altitude, min_visibility_altitude)

    @property
    def r_min(self):
        """Distance to a satellite straight overhead."""
        return self.orbit_radius - self.earth_radius

    @property
    def r_max(self):
        """Distance to a satellite on the rim of the visible cap."""
        rs, re, he = self.orbit_radius, self.earth_radius, self.min_visibility_altitude
        return math.sqrt(rs * rs - re * re - 2.0 * re * he)

    @property
    def sphere_area(self):
        return 4.0 * math.pi * self.orbit_radius ** 2

    def cut_height(self, r):
        """Height above the station of the plane bounding the cap of radius ``r``."""
        rs, re = self.orbit_radius, self.earth_radius
        return ((rs * rs - re * re) - np.asarray(r, dtype=float) ** 2) / (2.0 * re)


@dataclass(frozen=True)
class RingGeometry:
    """Planar annulus carrying a homogeneous PPP of intensity ``density``."""

    inner_radius: float
    outer_radius: float
    density: float

    def __post_init__(self):
        if not 0 <= self.inner_radius <= self.outer_radius:
            raise ValueError("need 0 <= inner_radius <= outer_radius")
        if self.density < 0:
            raise ValueError("density must be nonnegative")

    @property
    def r_min(self):
        return self.inner_radius

    @property
    def r_max(self):
        return self.outer_radius

    @property
    def area(self):
        return math.pi * (self.outer_radius ** 2 - self.inner_radius ** 2)

    @property
    def mean_count(self):
        """Expected number of visible satellites."""
        return self.density * self.area

    @property
    def lam_pi(self):
        return self.density * math.pi

    def area_within(self, r):
        return math.pi * (np.asarray(r, dtype=float) ** 2 - self.inner_radius ** 2)

    def with_mean_count(self, mean_count):
        """Same annulus with the density rescaled to the given visible mean."""
        return RingGeometry(self.inner_radius, self.outer_radius, mean_count / self.area)


def visible_cap_area(geom):
    """Area of the visible spherical cap (Archimedes' hat-box theorem)."""
    return 2.0 * math.pi * (geom.r_min - geom.min_visibility_altitude) * geom.orbit_radius


def cap_area_within(geom, r):
    """Area of the part of the cap within distance ``r`` of the station."""
    r_arr = np.asarray(r, dtype=float)
    tol = 1e-9 * geom.r_max
    if np.any(r_arr < geom.r_min - tol) or np.any(r_arr > geom.r_max + tol):
        raise ValueError(f"r must lie in [{geom.r_min}, {geom.r_max}] km")
    area = 2.0 * math.pi * (geom.r_min - geom.cut_height(r_arr)) * geom.orbit_radius
    area = np.maximum(area, 0.0)
    return float(area) if area.ndim == 0 else area


def to_ring(geom, lam):
    """Replace the cap process of intensity ``lam`` by its planar annulus twin."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return RingGeometry(geom.r_min, geom.r_max, lam * geom.orbit_radius / geom.earth_radius)


def density_for_mean_count(geom, mean_count):
    """Sphere intensity giving ``mean_count`` visible satellites on average."""
    return mean_count / visible_cap_area(geom)
