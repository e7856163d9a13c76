"""
How many satellites should cooperate?
=====================================

Nulling K - 1 in-cluster interferers costs K - 1 of the N_t antenna degrees
of freedom, so the serving gain drops to N_t - K + 1.  The ergodic spectral
efficiency picks the balance; the best K grows with density and antennas.
"""

from leocbf import (FadingParams, RadioConfig, SphereGeometry, density_for_mean_count,
                    optimal_cluster_size, to_ring)

geom = SphereGeometry.from_altitude(500.0)
fading = FadingParams(1, 0.063, 8.97e-4)
densities = (2.0, 5.0, 10.0, 20.0)

###############################################################################
# Spectral efficiency against cluster size at one density.

ring = to_ring(geom, density_for_mean_count(geom, 5.0))
k_star, se = optimal_cluster_size(ring, RadioConfig(n_t=8), fading)
for K, v in se.items():
    print(f"K={K}: {v:.3f} bit/s/Hz" + ("  <- best" if K == k_star else ""))

###############################################################################
# Best cluster size across densities and array sizes.

print("\nN_t  " + "  ".join(f"{mu:>5g}" for mu in densities))
for n_t in (4, 8, 16):
    row = [optimal_cluster_size(to_ring(geom, density_for_mean_count(geom, mu)),
                                RadioConfig(n_t=n_t), fading)[0] for mu in densities]
    print(f"{n_t:3d}  " + "  ".join(f"{k:5d}" for k in row))
