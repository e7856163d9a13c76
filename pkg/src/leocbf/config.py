"""Experiment configuration: a flat INI file with fixed sections and keys.

Unknown sections or keys are errors, so a typo never silently falls back
to a default.  ``[fading]`` has no defaults and must be given.
"""
import configparser
from dataclasses import dataclass, field, replace
import hashlib
import math

import numpy as np

from .geometry import SphereGeometry, density_for_mean_count, to_ring, visible_cap_area
from .interference import RadioConfig
from .special import FadingParams


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


_SCHEMA = {
    "geometry": {"earth_radius_km": 6371.0, "altitude_km": 500.0,
                 "min_visibility_altitude_km": 0.0},
    "fading": {"m": None, "b": None, "omega": None},
    "radio": {"tx_power_dbm": 43.0, "noise_psd_dbm_hz": -174.0, "bandwidth_hz": 100e6,
              "g0_dbi": 20.0, "grx_main_dbi": "array", "carrier_hz": 13.5e9,
              "gbar": 0.1, "alpha": 2.0, "n_r": "n_t"},
    "network": {"mean_count": 5.0, "lam": None, "n_t": 16, "k": 2},
    "run": {"gamma_db": "-10:20:7", "delta": "0.5 0.7 0.9", "trials": 100000,
            "seed": 0, "mode": "exact", "densities": "2 5 10 20"},
}
REQUIRED_SECTIONS = ("fading",)


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: SphereGeometry
    fading: FadingParams
    radio: RadioConfig
    mean_count: float
    K: int
    gamma_db: np.ndarray
    deltas: tuple
    trials: int = 100000
    seed: int = 0
    mode: str = "exact"
    densities: tuple = (2.0, 5.0, 10.0, 20.0)
    text: str = field(default="", compare=False)

    @property
    def lam(self):
        return density_for_mean_count(self.geometry, self.mean_count)

    @property
    def ring(self):
        return to_ring(self.geometry, self.lam)

    def budget(self, K=None):
        return self.radio.budget(self.K if K is None else K)

    def with_mean_count(self, mean_count):
        return replace(self, mean_count=float(mean_count))

    def canonical(self):
        """Resolved values, one ``section.key = value`` per line, sorted."""
        g, f, r = self.geometry, self.fading, self.radio
        items = {
            "geometry.earth_radius_km": g.earth_radius,
            "geometry.altitude_km": g.orbit_radius - g.earth_radius,
            "geometry.min_visibility_altitude_km": g.min_visibility_altitude,
            "fading.m": f.m, "fading.b": f.b, "fading.omega": f.omega,
            "radio.tx_power_dbm": r.tx_power_dbm, "radio.noise_psd_dbm_hz": r.noise_psd_dbm_hz,
            "radio.bandwidth_hz": r.bandwidth_hz, "radio.g0_dbi": r.g0_dbi,
            "radio.grx_main_dbi": r.rx_gain_db, "radio.carrier_hz": r.carrier_hz,
            "radio.gbar": r.gbar, "radio.alpha": r.alpha,
            "network.mean_count": self.mean_count, "network.n_t": r.n_t, "network.k": self.K,
            "run.gamma_db": " ".join(repr(float(x)) for x in self.gamma_db),
            "run.delta": " ".join(repr(float(x)) for x in self.deltas),
            "run.trials": self.trials, "run.seed": self.seed, "run.mode": self.mode,
            "run.densities": " ".join(repr(float(x)) for x in self.densities),
        }
        return "\n".join(f"{k} = {items[k]!r}" for k in sorted(items))

    @property
    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _num(section, key, raw, kind=float):
    try:
        val = kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(val):
        raise ConfigError(f"[{section}] {key}: must be finite")
    return val


def _floats(section, key, raw):
    parts = raw.replace(",", " ").split()
    if not parts:
        raise ConfigError(f"[{section}] {key}: empty list")
    return tuple(_num(section, key, p) for p in parts)


def parse_gamma_db(raw):
    """``start:stop:count`` (inclusive, evenly spaced) or an explicit list."""
    raw = str(raw).strip()
    if ":" in raw:
        bits = raw.split(":")
        if len(bits) != 3:
            raise ConfigError("[run] gamma_db: range form is start:stop:count")
        lo, hi = _num("run", "gamma_db", bits[0]), _num("run", "gamma_db", bits[1])
        n = _num("run", "gamma_db", bits[2], int)
        if n < 1:
            raise ConfigError("[run] gamma_db: count must be >= 1")
        return np.linspace(lo, hi, n)
    return np.array(_floats("run", "gamma_db", raw))


def _positive(section, key, val, strict=True):
    if (val <= 0) if strict else (val < 0):
        raise ConfigError(f"[{section}] {key}: must be {'positive' if strict else 'nonnegative'}")
    return val


def parse_config(text):
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"[{sec}] unknown key {key!r}")
    for sec in REQUIRED_SECTIONS:
        if not cp.has_section(sec):
            raise ConfigError(f"missing [{sec}] section")

    def get(sec, key):
        if cp.has_section(sec) and key in cp[sec]:
            return cp[sec][key].strip()
        default = _SCHEMA[sec][key]
        if default is None and sec in REQUIRED_SECTIONS:
            raise ConfigError(f"[{sec}] {key}: required")
        return default

    try:
        geom = SphereGeometry.from_altitude(
            _positive("geometry", "altitude_km", _num("geometry", "altitude_km", get("geometry", "altitude_km"))),
            earth_radius=_num("geometry", "earth_radius_km", get("geometry", "earth_radius_km")),
            min_visibility_altitude=_num("geometry", "min_visibility_altitude_km",
                                         get("geometry", "min_visibility_altitude_km")))
    except ValueError as e:
        raise ConfigError(f"[geometry] {e}") from None
    try:
        fading = FadingParams(_num("fading", "m", get("fading", "m"), int),
                              _num("fading", "b", get("fading", "b")),
                              _num("fading", "omega", get("fading", "omega")))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"[fading] {e}") from None

    n_t = _num("network", "n_t", get("network", "n_t"), int)
    if n_t < 1:
        raise ConfigError("[network] n_t: must be >= 1")
    K = _num("network", "k", get("network", "k"), int)
    if not 1 <= K <= n_t:
        raise ConfigError(f"[network] k: need 1 <= k <= n_t = {n_t}")
    grx_raw = get("radio", "grx_main_dbi")
    grx = None if grx_raw == "array" else _num("radio", "grx_main_dbi", grx_raw)
    n_r_raw = get("radio", "n_r")
    n_r = None if n_r_raw == "n_t" else _num("radio", "n_r", n_r_raw, int)
    vals = {k: _num("radio", k, get("radio", k)) for k in
            ("tx_power_dbm", "noise_psd_dbm_hz", "bandwidth_hz", "g0_dbi", "carrier_hz", "gbar", "alpha")}
    _positive("radio", "bandwidth_hz", vals["bandwidth_hz"])
    _positive("radio", "carrier_hz", vals["carrier_hz"])
    if not 0 <= vals["gbar"] <= 1:
        raise ConfigError("[radio] gbar: must lie in [0, 1]")
    if vals["alpha"] < 2:
        raise ConfigError("[radio] alpha: must be >= 2")
    try:
        radio = RadioConfig(n_t=n_t, grx_main_dbi=grx, n_r=n_r, **vals)
    except ValueError as e:
        raise ConfigError(f"[radio] {e}") from None

    lam_raw = get("network", "lam")
    if lam_raw is not None and cp.has_section("network") and "mean_count" in cp["network"]:
        raise ConfigError("[network] give either mean_count or lam, not both")
    if lam_raw is not None:
        mean_count = _positive("network", "lam", _num("network", "lam", lam_raw)) * visible_cap_area(geom)
    else:
        mean_count = _positive("network", "mean_count", _num("network", "mean_count", get("network", "mean_count")))

    gamma_db = parse_gamma_db(get("run", "gamma_db"))
    deltas = _floats("run", "delta", get("run", "delta"))
    lo = geom.r_min / geom.r_max
    for d in deltas:
        if not lo <= d <= 1:
            raise ConfigError(f"[run] delta: {d} outside [{lo:.4f}, 1]")
    trials = _num("run", "trials", get("run", "trials"), int)
    if trials < 1:
        raise ConfigError("[run] trials: must be >= 1")
    mode = get("run", "mode")
    if mode not in ("exact", "approx", "marginal"):
        raise ConfigError(f"[run] mode: unknown mode {mode!r}")
    densities = tuple(_positive("run", "densities", d) for d in _floats("run", "densities", get("run", "densities")))
    return ExperimentConfig(geom, fading, radio, mean_count, K, gamma_db, deltas, trials,
                            _num("run", "seed", get("run", "seed"), int), mode, densities, text)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config(text)
