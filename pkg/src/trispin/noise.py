"""Reproducible stochastic noise: quasi-static hyperfine fields, 1/f^alpha
traces, and quasi-static charge noise on gate voltages.

Every sampler is a pure function of (master seed, shot index); shots can be
evaluated in any order or in parallel without changing results.
"""

from dataclasses import dataclass

import numpy as np

from .device import DeviceParams, exchange_from_voltages
from .dynamics import LocalFields

__all__ = [
    "HyperfineModel",
    "ChargeNoiseModel",
    "NoiseRealization",
    "sample_realization",
    "sample_realizations",
    "one_over_f_trace",
    "effective_exchange_noise",
]


@dataclass(frozen=True)
class HyperfineModel:
    """Local-field noise: per-axis standard deviation sigma_b in MHz.

    mode 'quasi-static' freezes each of the nine components within a shot;
    'trajectory' additionally colors them in time with a 1/f^alpha spectrum
    restricted to band_hz.
    """

    sigma_mhz: float
    mode: str = "quasi-static"
    alpha: float = 1.0
    band_hz: tuple = (1e2, 1e5)

    def __post_init__(self):
        if self.sigma_mhz < 0:
            raise ValueError("sigma_mhz must be >= 0")
        if self.mode not in ("quasi-static", "trajectory"):
            raise ValueError(f"unknown hyperfine mode {self.mode!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not self.band_hz[0] < self.band_hz[1]:
            raise ValueError("band must satisfy f_min < f_max")


@dataclass(frozen=True)
class ChargeNoiseModel:
    """Quasi-static voltage offset per physical gate, sigma in volts."""

    sigma_volts: float

    def __post_init__(self):
        if self.sigma_volts < 0:
            raise ValueError("sigma_volts must be >= 0")


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    fields: LocalFields
    voltage_offsets: np.ndarray
    shot: int
    seed_key: tuple


def _rng_for(seed, shot):
    return np.random.default_rng([int(seed), int(shot)])


def sample_realization(hyperfine, charge, seed, shot) -> NoiseRealization:
    """One shot's quasi-static noise; deterministic in (seed, shot)."""
    rng = _rng_for(seed, shot)
    b = rng.standard_normal((3, 3)) * (hyperfine.sigma_mhz if hyperfine else 0.0)
    dv = rng.standard_normal(3) * (charge.sigma_volts if charge else 0.0)
    return NoiseRealization(
        fields=LocalFields(b),
        voltage_offsets=dv,
        shot=int(shot),
        seed_key=(int(seed), int(shot)),
    )


def sample_realizations(hyperfine, charge, seed, shots):
    """Stack of per-shot samples: (shots, 9) field components, (shots, 3) offsets."""
    b = np.empty((shots, 9))
    dv = np.empty((shots, 3))
    for k in range(shots):
        r = sample_realization(hyperfine, charge, seed, k)
        b[k] = r.fields.b.reshape(9)
        dv[k] = r.voltage_offsets
    return b, dv


def one_over_f_trace(alpha, band_hz, duration_s, dt_s, seed, sigma_mhz=1.0):
    """Gaussian time series with PSD proportional to 1/f^alpha inside band_hz.

    Zero mean; scaled so the expected RMS equals sigma_mhz. Frequencies
    outside [f_min, f_max] carry no power (truncated band). Requires
    dt < 1/(2 f_max) so the band fits under Nyquist.
    """
    f_min, f_max = band_hz
    if not (0 < f_min < f_max):
        raise ValueError("band must satisfy 0 < f_min < f_max")
    if dt_s >= 1.0 / (2.0 * f_max):
        raise ValueError("dt too coarse for the requested band")
    n = int(round(duration_s / dt_s))
    if n < 2:
        raise ValueError("trace needs at least two samples")
    freqs = np.fft.rfftfreq(n, dt_s)
    weights = np.zeros_like(freqs)
    in_band = (freqs >= f_min) & (freqs <= f_max)
    weights[in_band] = freqs[in_band] ** (-alpha / 2.0)
    if not np.any(in_band):
        raise ValueError("band contains no resolvable frequencies; extend duration")
    weights[0] = 0.0
    if n % 2 == 0:
        weights[-1] = 0.0  # Nyquist stays empty (band ends below it)
    rng = np.random.default_rng([int(seed), 0x1F])
    z = rng.standard_normal(len(freqs)) + 1j * rng.standard_normal(len(freqs))
    x = np.fft.irfft(z * weights, n=n)
    # each interior bin k contributes (2/n) Re(z_k w_k e^{i theta}) with
    # unit-variance real and imaginary parts, so Var(x) = (4/n^2) sum w^2
    var = 4.0 * np.sum(weights**2) / n**2
    if var <= 0.0:
        return np.zeros(n)
    return x * (sigma_mhz / np.sqrt(var))


def effective_exchange_noise(params: DeviceParams, v, dv):
    """Exchange configuration at v + dv through the device model.

    The exponential law makes d ln J = C dv / v0: fractional exchange noise is
    independent of J while absolute noise grows proportionally to J.
    """
    cfg, _ = exchange_from_voltages(params, np.asarray(v, float) + np.asarray(dv, float))
    return cfg
