"""Link budget and the Laplace transform of out-of-cluster interference plus noise.

Geometry arrives in kilometres; path loss is evaluated on metres because the
free-space constant folded into the normalized noise is metre based.
"""
from dataclasses import dataclass
import math
from typing import Optional

import numpy as np

from .quadrature import integrate

SPEED_OF_LIGHT = 299792458.0
KM = 1e3

LAPLACE_RTOL = 1e-9


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(x_dbm):
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def beamforming_gain_db(g0_db, n_t, K):
    """Main-lobe transmit gain left after nulling ``K - 1`` in-cluster directions."""
    if not 1 <= K <= n_t:
        raise ValueError(f"cluster size K={K} needs 1 <= K <= N_t={n_t}")
    return g0_db + 10.0 * math.log10(n_t - K + 1)


@dataclass(frozen=True)
class LinkBudget:
    tx_power: float          # W
    noise_power: float       # W
    serving_gain: float      # linear, includes free-space constant
    gbar: float              # interferer gain relative to serving gain
    alpha: float = 2.0

    def __post_init__(self):
        if not (self.tx_power > 0 and self.noise_power > 0 and self.serving_gain > 0):
            raise ValueError("tx_power, noise_power and serving_gain must be positive")
        if not 0 <= self.gbar <= 1:
            raise ValueError("gbar must lie in [0, 1]")
        if self.alpha < 2:
            raise ValueError("alpha must be >= 2")

    @property
    def noise_norm(self):
        """sigma^2 / (P G_1), in metre^-alpha units."""
        return self.noise_power / (self.tx_power * self.serving_gain)


@dataclass(frozen=True)
class RadioConfig:
    """Radio parameters in the units engineers quote them.

    ``grx_main_dbi = None`` gives the station the same array as the
    satellite: ``G0 + 10 log10(N_r)`` with ``N_r = N_t`` unless set.
    """

    n_t: int = 16
    tx_power_dbm: float = 43.0
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 100e6
    g0_dbi: float = 20.0
    grx_main_dbi: Optional[float] = None
    carrier_hz: float = 13.5e9
    gbar: float = 0.1
    alpha: float = 2.0
    n_r: Optional[int] = None

    def __post_init__(self):
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise ValueError("n_t must be a positive integer")
        if self.n_r is not None and (int(self.n_r) != self.n_r or self.n_r < 1):
            raise ValueError("n_r must be a positive integer")
        if not (self.bandwidth_hz > 0 and self.carrier_hz > 0):
            raise ValueError("bandwidth_hz and carrier_hz must be positive")

    @property
    def rx_gain_db(self):
        if self.grx_main_dbi is not None:
            return self.grx_main_dbi
        return self.g0_dbi + 10.0 * math.log10(self.n_r or self.n_t)

    def serving_gain_db(self, K):
        fspl = 20.0 * math.log10(SPEED_OF_LIGHT / (4.0 * math.pi * self.carrier_hz))
        return beamforming_gain_db(self.g0_dbi, self.n_t, K) + self.rx_gain_db + fspl

    def budget(self, K):
        noise_w = float(dbm_to_watt(self.noise_psd_dbm_hz)) * self.bandwidth_hz
        return LinkBudget(
            tx_power=float(dbm_to_watt(self.tx_power_dbm)),
            noise_power=noise_w,
            serving_gain=float(db_to_linear(self.serving_gain_db(K))),
            gbar=self.gbar,
            alpha=self.alpha,
        )


def _path_gain(budget, v_km):
    return budget.gbar * (KM * v_km) ** (-budget.alpha)


def exponent_terms(ring, budget, fading, s, rK, nmax, scale=None, rtol=LAPLACE_RTOL):
    """Exponent ``g(s)`` and its scaled derivatives ``(-scale)^j g^(j)(s)``, j = 1..nmax.

    ``s`` and ``rK`` broadcast together.  Returns an array with trailing axis
    of length ``nmax + 1``: entry 0 is ``g(s)`` and entry j is
    ``(-scale)^j d^j g / ds^j``, which is nonnegative.  With ``scale = s``
    every entry stays of order one, whatever the path-loss units.
    """
    s, rK = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(rK, dtype=float))
    shape = s.shape
    s_f = s.ravel()
    scale_f = np.ones_like(s_f) if scale is None else np.broadcast_to(
        np.asarray(scale, dtype=float), shape).ravel()
    w = fading.weights
    a = fading.rate
    zs = np.arange(fading.m)
    orders = np.arange(1, nmax + 1)
    # (z+1)_j for each z and j >= 1
    rising = np.array([[math.prod(range(z + 1, z + 1 + j)) for j in orders] for z in zs])
    rising = rising.reshape(fading.m, nmax)

    def integrand(v, idx):
        x = _path_gain(budget, v)
        sx = s_f[idx][:, None] * x
        lg = np.log1p(sx / a)                       # log(D / a), D = a + s x
        decay = np.exp(-np.multiply.outer(lg, zs + 1))   # (a/D)^{z+1}
        out = np.empty(v.shape + (nmax + 1,))
        # 1 - sum_z w_z (a/D)^{z+1}, written with expm1 against cancellation
        out[..., 0] = -np.expm1(-np.multiply.outer(lg, zs + 1)) @ w
        if nmax:
            ratio = scale_f[idx][:, None] * x / (a + sx)     # scale x / D
            pw = ratio[..., None] ** orders
            out[..., 1:] = np.einsum("...z,zj,...j->...j", decay * w, rising, pw)
        return out * v[..., None]

    vals = integrate(integrand, rK.ravel(), ring.r_max, rtol=rtol, atol=0.0)
    lam2pi = 2.0 * math.pi * ring.density
    res = lam2pi * vals
    res[:, 0] = -s_f * budget.noise_norm - res[:, 0]
    if nmax:
        res[:, 1] += scale_f * budget.noise_norm
    return res.reshape(shape + (nmax + 1,))


def laplace_exponent(ring, budget, fading, s, rK):
    """g(s) = log of the Laplace transform of interference beyond ``rK`` plus noise."""
    _check_args(ring, s, rK)
    out = exponent_terms(ring, budget, fading, s, rK, 0)[..., 0]
    return float(out) if out.ndim == 0 else out


def laplace(ring, budget, fading, s, rK):
    out = np.exp(laplace_exponent(ring, budget, fading, s, rK))
    return float(out) if np.ndim(out) == 0 else out


def scaled_laplace_series(ring, budget, fading, s, rK, nmax):
    """``T_n = (-s)^n L^(n)(s) / n!`` for n = 0..nmax, all nonnegative.

    Uses the exponential-composition recurrence
    ``L^(n) = sum_j C(n-1, j) g^(j+1) L^(n-1-j)`` rewritten for the
    scaled quantities.
    """
    terms = exponent_terms(ring, budget, fading, s, rK, nmax, scale=s)
    return _compose(terms, nmax)


def _compose(terms, nmax):
    out = np.empty(terms.shape)
    out[..., 0] = np.exp(terms[..., 0])
    for n in range(1, nmax + 1):
        acc = 0.0
        for j in range(n):
            acc = acc + terms[..., j + 1] / math.factorial(j) * out[..., n - 1 - j]
        out[..., n] = acc / n
    return out


def laplace_derivative(ring, budget, fading, v, s, rK):
    """v-th derivative of the Laplace transform with respect to ``s``."""
    if not 0 <= v <= fading.m - 1 or int(v) != v:
        raise ValueError(f"derivative order must be an integer in 0..{fading.m - 1}")
    _check_args(ring, s, rK)
    v = int(v)
    terms = exponent_terms(ring, budget, fading, s, rK, v)
    series = _compose(terms, v)            # (-1)^n L^(n) / n!
    out = (-1) ** v * math.factorial(v) * series[..., v]
    return float(out) if np.ndim(out) == 0 else out


def _check_args(ring, s, rK):
    if np.any(np.asarray(s) < 0):
        raise ValueError("s must be nonnegative")
    rK = np.asarray(rK, dtype=float)
    tol = 1e-9 * ring.r_max
    if np.any(rK < ring.r_min - tol) or np.any(rK > ring.r_max + tol):
        raise ValueError("rK must lie inside the annulus")
