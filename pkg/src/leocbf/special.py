"""Shadowed-Rician fading coefficients and the special functions they need.

For integer Nakagami ``m`` the channel power ``H`` has density

    f_H(h) = sum_{z<m} zeta(z) h^z exp(-(beta - c) h),

a finite mixture of Erlang densities with shapes ``z + 1`` and common rate
``beta - c``.  Everything downstream works with the mixture weights.
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

MAX_NAKAGAMI_M = 20


def pochhammer(x, z):
    """Rising factorial ``x (x+1) ... (x+z-1)``."""
    if z < 0 or int(z) != z:
        raise ValueError("z must be a nonnegative integer")
    out = 1.0
    for k in range(int(z)):
        out *= x + k
    return out


def upper_incomplete_gamma(a, x):
    """Gamma(a, x) for integer ``a >= 1`` via its finite sum; ``x`` may be an array."""
    if a < 1 or int(a) != a:
        raise ValueError("a must be a positive integer")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    term = np.ones_like(x)
    total = np.ones_like(x)
    for v in range(1, int(a)):
        term = term * x / v
        total = total + term
    out = math.factorial(int(a) - 1) * np.exp(-x) * total
    return float(out) if out.ndim == 0 else out


def poisson_tail_sums(x, n):
    """``exp(-x) x^v / v!`` for v = 0..n, stacked on the last axis."""
    x = np.asarray(x, dtype=float)
    terms = np.empty(x.shape + (n + 1,))
    terms[..., 0] = np.exp(-x)
    for v in range(1, n + 1):
        terms[..., v] = terms[..., v - 1] * x / v
    return terms


def confluent_1f1(a, b, x, rtol=1e-12, max_terms=100000):
    """Kummer's function 1F1(a; b; x) by direct series summation."""
    if b <= 0 and float(b).is_integer():
        raise ValueError("b must not be a nonpositive integer")
    term = 1.0
    total = 1.0
    for k in range(max_terms):
        term *= (a + k) * x / ((b + k) * (k + 1))
        total += term
        if term == 0.0 or abs(term) <= rtol * abs(total):
            return total
    raise ArithmeticError(f"1F1({a}; {b}; {x}) did not converge in {max_terms} terms")


@dataclass(frozen=True)
class FadingParams:
    """Shadowed-Rician parameters: Nakagami ``m``, half scatter power ``b``, LOS power ``omega``."""

    m: int
    b: float
    omega: float

    def __post_init__(self):
        if int(self.m) != self.m or not 1 <= self.m <= MAX_NAKAGAMI_M:
            raise ValueError(f"m must be an integer in 1..{MAX_NAKAGAMI_M}")
        if not self.b > 0:
            raise ValueError("b must be positive")
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        object.__setattr__(self, "m", int(self.m))

    @property
    def beta(self):
        return 1.0 / (2.0 * self.b)

    @property
    def c_fad(self):
        return self.omega / (2.0 * self.b * (2.0 * self.b * self.m + self.omega))

    @property
    def rate(self):
        """Common Erlang rate ``beta - c_fad``."""
        return self.beta - self.c_fad

    @property
    def mean_power(self):
        return 2.0 * self.b + self.omega

    @cached_property
    def zeta(self):
        return np.array([zeta_coeff(self, z) for z in range(self.m)])

    @cached_property
    def weights(self):
        """Erlang mixture weights ``zeta(z) z! / (beta - c)^(z+1)``."""
        return np.array([
            self.zeta[z] * math.factorial(z) / self.rate ** (z + 1) for z in range(self.m)
        ])


def zeta_coeff(f, z):
    if not 0 <= z <= f.m - 1 or int(z) != z:
        raise ValueError(f"z must be an integer in 0..{f.m - 1}")
    two_bm = 2.0 * f.b * f.m
    lead = (two_bm / (two_bm + f.omega)) ** f.m * f.beta
    return lead * (-1) ** z * pochhammer(1 - f.m, z) * f.c_fad ** z / math.factorial(z) ** 2


def erlang_mixture_weights(f):
    """List of ``(weight, shape, rate)`` triples describing the power density."""
    return [(float(w), z + 1, f.rate) for z, w in enumerate(f.weights)]


def channel_power_pdf(f, h):
    h = np.asarray(h, dtype=float)
    powers = h[..., None] ** np.arange(f.m)
    out = np.where(h >= 0, (powers @ f.zeta) * np.exp(-f.rate * h), 0.0)
    return float(out) if out.ndim == 0 else out


def channel_power_ccdf(f, h):
    """P[H > h]: mixture of Erlang tails."""
    h = np.asarray(h, dtype=float)
    terms = poisson_tail_sums(f.rate * np.maximum(h, 0.0), f.m - 1)
    out = np.cumsum(terms, axis=-1) @ f.weights
    out = np.where(h <= 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


def amplitude_pdf(f, x):
    """Density of the complex channel amplitude magnitude, written with 1F1."""
    x = float(x)
    two_bm = 2.0 * f.b * f.m
    arg = f.omega * x * x / (2.0 * f.b * (two_bm + f.omega))
    return (two_bm / (two_bm + f.omega)) ** f.m * x / f.b * math.exp(-x * x / (2.0 * f.b)) \
        * confluent_1f1(f.m, 1.0, arg)


def alzer_kappa(z):
    """Lower admissible approximation parameter ``((z+1)!)^(-1/(z+1))``."""
    return math.factorial(z + 1) ** (-1.0 / (z + 1))
