"""Air-to-ground propagation and achievable-rate model.

The link model combines an elevation-angle logistic line-of-sight probability
with inverse-square spreading and LoS/NLoS excess attenuation, and evaluates
the achievable uplink rate as Shannon capacity over the averaged channel.
Inverting the rate at a design LoS probability yields the maximum service
distance used to build per-user coverage spheres.

All quantities are linear SI internally (W, Hz, m, bit/s); dBm/dBi/dB are
accepted only at construction helpers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point3

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Largest demand/bandwidth ratio (bit/s/Hz) before 2**x overflows a double.
_MAX_SPECTRAL_EFFICIENCY = 1000.0


class ChannelDomainError(ValueError):
    """Link geometry or rate target outside the model's domain."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    if watt <= 0:
        raise ValueError(f"power must be positive, got {watt} W")
    return 10.0 * math.log10(watt) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Radio and environment constants for the air-to-ground model.

    Defaults follow an 802.11ac-style setup in the 5 GHz band: 20 dBm
    transmit power, 0 dBi antennas, and a -85 dBm noise floor interpreted
    as total noise over a 20 MHz channel (hence the spectral density
    default). ``c1``/``c2`` are the urban constants of the elevation-angle
    LoS model; ``mu_los``/``mu_nlos`` are the canonical urban excess
    attenuation factors (1 dB / 20 dB).
    """

    carrier_frequency_hz: float = 5.25e9
    tx_power_w: float = dbm_to_watt(20.0)
    tx_antenna_gain: float = 1.0
    rx_antenna_gain: float = 1.0
    noise_spectral_density: float = dbm_to_watt(-85.0) / 20e6  # W/Hz
    c1: float = 9.6
    c2: float = 0.28
    mu_los: float = db_to_linear(1.0)
    mu_nlos: float = db_to_linear(20.0)
    los_threshold: float = 0.9
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.carrier_frequency_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.tx_power_w <= 0:
            raise ValueError("tx power must be positive")
        if self.noise_spectral_density <= 0:
            raise ValueError("noise spectral density must be positive")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("LoS model constants c1, c2 must be positive")
        if self.mu_los < 1.0:
            raise ValueError("mu_los must be >= 1 (no gain from attenuation)")
        if self.mu_nlos < self.mu_los:
            raise ValueError("mu_nlos must be >= mu_los")
        if not 0.0 < self.los_threshold < 1.0:
            raise ValueError("los_threshold must lie strictly in (0, 1)")

    @property
    def k0(self) -> float:
        """Free-space constant (4*pi*f/c)^2, dimensionless for d in meters."""
        return (4.0 * math.pi * self.carrier_frequency_hz / self.speed_of_light) ** 2


@dataclass(frozen=True)
class LinkBudget:
    """Per-link evaluation of the full model at one geometry."""

    distance_m: float
    elevation_deg: float
    p_los: float
    p_nlos: float
    gain: float
    rate_bps: float
    bandwidth_hz: float


# ---------------------------------------------------------------------------
# Array kernels. These carry the actual formulas; the scalar operations wrap
# them so every consumer (validators, swarm fitness) computes identical bits.
# ---------------------------------------------------------------------------

def los_probability_kernel(elevation_deg, c1, c2):
    return 1.0 / (1.0 + c1 * np.exp(-c2 * (elevation_deg - c1)))


def attenuation_bracket(p_los, params: ChannelParams):
    return p_los * params.mu_los + (1.0 - p_los) * params.mu_nlos


def gain_kernel(distance, elevation_deg, params: ChannelParams):
    p_los = los_probability_kernel(elevation_deg, params.c1, params.c2)
    return 1.0 / (params.k0 * distance ** 2 * attenuation_bracket(p_los, params))


def snr_hz_kernel(gain, params: ChannelParams):
    """Received power over noise density: P*Gt*Gr*gain/N0, in Hz."""
    return params.tx_power_w * params.tx_antenna_gain * params.rx_antenna_gain * gain \
        / params.noise_spectral_density


def rate_kernel(gain, bandwidth_hz, params: ChannelParams):
    return bandwidth_hz * np.log2(1.0 + snr_hz_kernel(gain, params) / bandwidth_hz)


# ---------------------------------------------------------------------------
# Scalar operations on explicit geometries.
# ---------------------------------------------------------------------------

def path_distance(a: Point3, b: Point3) -> float:
    """Euclidean distance in meters between two points."""
    return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))


def _checked_geometry(ue: Point3, uav: Point3) -> tuple[float, float]:
    d = path_distance(ue, uav)
    if d <= 0.0:
        raise ChannelDomainError("coincident UE and UAV (zero link distance)")
    if uav.z <= ue.z:
        raise ChannelDomainError(
            f"UAV altitude {uav.z} m not above UE altitude {ue.z} m; "
            "the elevation model is undefined at or below the horizon"
        )
    sin_elev = min((uav.z - ue.z) / d, 1.0)
    return d, float(np.degrees(np.arcsin(sin_elev)))


def elevation_angle_deg(ue: Point3, uav: Point3) -> float:
    """Elevation of the UAV as seen from the UE, in degrees in (0, 90]."""
    return _checked_geometry(ue, uav)[1]


def los_probability(ue: Point3, uav: Point3, params: ChannelParams) -> float:
    """Line-of-sight probability of the UE->UAV link, strictly in (0, 1)."""
    _, elev = _checked_geometry(ue, uav)
    return float(los_probability_kernel(elev, params.c1, params.c2))


def channel_gain(ue: Point3, uav: Point3, params: ChannelParams) -> float:
    """Average linear channel gain (free-space spreading x LoS/NLoS mix)."""
    d, elev = _checked_geometry(ue, uav)
    return float(gain_kernel(d, elev, params))


def link_rate(ue: Point3, uav: Point3, bandwidth_hz: float, params: ChannelParams) -> float:
    """Achievable rate in bit/s over the given bandwidth."""
    if bandwidth_hz <= 0:
        raise ChannelDomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    d, elev = _checked_geometry(ue, uav)
    return float(rate_kernel(gain_kernel(d, elev, params), bandwidth_hz, params))


def link_budget(ue: Point3, uav: Point3, bandwidth_hz: float, params: ChannelParams) -> LinkBudget:
    """Evaluate the whole chain at one geometry; p_nlos is the exact complement."""
    if bandwidth_hz <= 0:
        raise ChannelDomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    d, elev = _checked_geometry(ue, uav)
    p_los = float(los_probability_kernel(elev, params.c1, params.c2))
    gain = float(gain_kernel(d, elev, params))
    rate = float(rate_kernel(gain, bandwidth_hz, params))
    return LinkBudget(
        distance_m=d,
        elevation_deg=elev,
        p_los=p_los,
        p_nlos=1.0 - p_los,
        gain=gain,
        rate_bps=rate,
        bandwidth_hz=bandwidth_hz,
    )


def max_service_distance(demand_bps: float, bandwidth_hz: float, params: ChannelParams) -> float:
    """Largest UE-UAV distance at which the demand is satisfiable.

    The LoS mix in the gain depends on the (unknown) elevation angle, so it
    is evaluated at the fixed design probability ``params.los_threshold``.
    The result is a conservative closed form: any position within this
    distance whose realized LoS probability meets the threshold achieves at
    least ``demand_bps`` over ``bandwidth_hz``.
    """
    if demand_bps <= 0:
        raise ChannelDomainError(f"demand must be positive, got {demand_bps}")
    if bandwidth_hz <= 0:
        raise ChannelDomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    spectral = demand_bps / bandwidth_hz
    if not math.isfinite(spectral) or spectral > _MAX_SPECTRAL_EFFICIENCY:
        raise ChannelDomainError(
            f"demand/bandwidth = {spectral} bit/s/Hz overflows the rate inversion"
        )
    a = 1.0 / (params.k0 * attenuation_bracket(params.los_threshold, params))
    numerator = a * params.tx_power_w * params.tx_antenna_gain * params.rx_antenna_gain
    denominator = params.noise_spectral_density * bandwidth_hz * (2.0 ** spectral - 1.0)
    return math.sqrt(numerator / denominator)


def min_bandwidth_for_demand(
    ue: Point3,
    uav: Point3,
    demand_bps: float,
    params: ChannelParams,
    b_max_hz: float,
    grid_hz: float = 1e3,
) -> float | None:
    """Smallest bandwidth on the grid meeting the demand at this geometry.

    Returns None when even ``b_max_hz`` cannot deliver the demand. The rate
    is strictly increasing in bandwidth, so a bisection over grid indices
    finds the first sufficient multiple of ``grid_hz``.
    """
    if demand_bps <= 0:
        raise ChannelDomainError(f"demand must be positive, got {demand_bps}")
    d, elev = _checked_geometry(ue, uav)
    gain = gain_kernel(d, elev, params)
    k_max = int(b_max_hz // grid_hz)
    if k_max < 1:
        return None
    if float(rate_kernel(gain, k_max * grid_hz, params)) < demand_bps:
        return None
    lo, hi = 1, k_max
    while lo < hi:
        mid = (lo + hi) // 2
        if float(rate_kernel(gain, mid * grid_hz, params)) >= demand_bps:
            hi = mid
        else:
            lo = mid + 1
    return lo * grid_hz
