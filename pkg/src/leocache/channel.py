"""ISL and downlink rate models, including Weibull rain attenuation.

The ISL rate is a classic Eb/N0 link budget; the downlink is a Shannon
capacity over a rain-faded free-space channel.  Every dB-specified
parameter is converted to linear exactly once when the budget object is
built, so the rate formulas below work purely in linear units.
"""
import math
from dataclasses import dataclass, field

import numpy as np

BOLTZMANN_J_K = 1.380649e-23
LIGHT_SPEED_M_S = 2.998e8


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError(f"dB of non-positive value: {x}")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class LinkBudget:
    """Radio parameters for both the ISL and the downlink.

    Units per field: powers in W, gains in dB, noise temperature in dBK,
    Eb/N0 and margin in dB, frequency in Hz, wavelength in m, bandwidth in
    Hz, noise power in W.
    """

    tx_power_w: float = 5.0
    tx_gain_db: float = 20.0
    rx_gain_db: float = 20.0
    noise_temp_dbk: float = 25.0
    ebn0_req_db: float = 9.6
    link_margin_db: float = 3.0
    carrier_freq_hz: float = 23e9
    wavelength_m: float = 0.015
    bandwidth_hz: float = 4e8
    noise_power_w: float = 1e-20
    boltzmann_j_k: float = BOLTZMANN_J_K
    light_speed_m_s: float = LIGHT_SPEED_M_S
    # linear views, filled in __post_init__
    tx_gain_lin: float = field(init=False, repr=False)
    rx_gain_lin: float = field(init=False, repr=False)
    noise_temp_k: float = field(init=False, repr=False)
    ebn0_req_lin: float = field(init=False, repr=False)
    link_margin_lin: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("tx_power_w", "bandwidth_hz", "noise_power_w", "carrier_freq_hz"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        object.__setattr__(self, "tx_gain_lin", db_to_linear(self.tx_gain_db))
        object.__setattr__(self, "rx_gain_lin", db_to_linear(self.rx_gain_db))
        object.__setattr__(self, "noise_temp_k", db_to_linear(self.noise_temp_dbk))
        object.__setattr__(self, "ebn0_req_lin", db_to_linear(self.ebn0_req_db))
        object.__setattr__(self, "link_margin_lin", db_to_linear(self.link_margin_db))


@dataclass(frozen=True)
class RainModel:
    """Weibull rain attenuation in dB: shape k, scale in dB."""

    shape: float = 0.8
    scale_db: float = 2.0
    enabled: bool = True

    def __post_init__(self):
        if self.shape <= 0:
            raise ValueError(f"rain shape must be > 0, got {self.shape}")
        if self.scale_db < 0:
            raise ValueError(f"rain scale_db must be >= 0, got {self.scale_db}")


def fspl(distance_m: float, freq_hz: float) -> float:
    """Free-space path gain (c / 4*pi*H*f)^2, dimensionless linear."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    if freq_hz <= 0:
        raise ValueError(f"frequency must be positive, got {freq_hz}")
    return (LIGHT_SPEED_M_S / (4.0 * math.pi * distance_m * freq_hz)) ** 2


def isl_rate(budget: LinkBudget, distance_m: float) -> float:
    """Achievable inter-satellite rate in bits/s at the given range."""
    loss = fspl(distance_m, budget.carrier_freq_hz)
    num = budget.tx_power_w * budget.tx_gain_lin * budget.rx_gain_lin * loss
    den = (
        budget.boltzmann_j_k
        * budget.noise_temp_k
        * budget.ebn0_req_lin
        * budget.link_margin_lin
    )
    return num / den


def sample_rain(model: RainModel, rng: np.random.Generator) -> float:
    """One Weibull rain-attenuation draw in dB (inverse-CDF sampling)."""
    if not model.enabled or model.scale_db == 0.0:
        return 0.0
    u = rng.random()
    return model.scale_db * (-math.log1p(-u)) ** (1.0 / model.shape)


def downlink_gain(budget: LinkBudget, distance_m: float, rain_db: float = 0.0) -> float:
    """Linear power gain of the satellite-to-ground channel."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    if rain_db < 0:
        raise ValueError(f"rain attenuation must be >= 0 dB, got {rain_db}")
    geometric = (
        budget.tx_gain_lin
        * budget.rx_gain_lin
        * budget.wavelength_m**2
        / (4.0 * math.pi * distance_m) ** 2
    )
    return geometric * 10.0 ** (-rain_db / 10.0)


def downlink_rate(budget: LinkBudget, gain: float, bandwidth_hz: float | None = None) -> float:
    """Shannon rate of the downlink in bits/s.

    ``bandwidth_hz`` overrides the budget bandwidth; the per-request OFDM
    split passes W / (concurrent requests) here.
    """
    if gain < 0:
        raise ValueError(f"gain must be >= 0, got {gain}")
    w = budget.bandwidth_hz if bandwidth_hz is None else bandwidth_hz
    snr = budget.tx_power_w * gain / (w * budget.noise_power_w)
    return w * math.log2(1.0 + snr)


def slant_range_m(altitude_km: float, elevation_deg: float,
                  earth_radius_km: float = 6371.0) -> float:
    """Distance from a ground user to a satellite seen at the given elevation."""
    if not 0.0 < elevation_deg <= 90.0:
        raise ValueError(f"elevation_deg must be in (0, 90], got {elevation_deg}")
    re = earth_radius_km * 1e3
    r = (earth_radius_km + altitude_km) * 1e3
    e = math.radians(elevation_deg)
    return math.sqrt(r**2 - (re * math.cos(e)) ** 2) - re * math.sin(e)
