"""Analytic Walker-constellation propagation and the 4-neighbor ISL grid.

Satellites fly circular orbits in P evenly spaced planes of Q slots each.
Positions are propagated in closed form (no ephemeris files): true anomaly
advances at the circular-orbit rate, planes are spread uniformly in RAAN,
and Earth rotation is applied to obtain ECEF coordinates.  All functions
are pure in (config, t) and safe to call concurrently.
"""
import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_KM = 6371.0
EARTH_MU_KM3_S2 = 398600.4418
EARTH_ROTATION_RAD_S = 7.2921159e-5  # sidereal rate


@dataclass(frozen=True)
class ConstellationConfig:
    """Walker grid geometry. Angles in degrees, altitude in km."""

    planes: int
    sats_per_plane: int
    altitude_km: float
    inclination_deg: float
    phasing_offset_deg: float = 0.0
    epoch_s: float = 0.0
    earth_radius_km: float = EARTH_RADIUS_KM
    mu_km3_s2: float = EARTH_MU_KM3_S2

    def __post_init__(self):
        if self.planes < 1:
            raise ValueError(f"planes must be >= 1, got {self.planes}")
        if self.sats_per_plane < 3:
            raise ValueError(
                f"sats_per_plane must be >= 3 for well-defined ring neighbors, "
                f"got {self.sats_per_plane}"
            )
        if not 0.0 <= self.inclination_deg <= 180.0:
            raise ValueError(f"inclination_deg out of [0, 180]: {self.inclination_deg}")
        if self.altitude_km <= 0:
            raise ValueError(f"altitude_km must be positive, got {self.altitude_km}")

    @property
    def num_sats(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def orbit_radius_km(self) -> float:
        return self.earth_radius_km + self.altitude_km

    @property
    def angular_rate_rad_s(self) -> float:
        return math.sqrt(self.mu_km3_s2 / self.orbit_radius_km**3)

    @property
    def orbital_period_s(self) -> float:
        return 2.0 * math.pi / self.angular_rate_rad_s

    def sat_id(self, plane: int, slot: int) -> int:
        return plane * self.sats_per_plane + slot

    def plane_slot(self, sat_id: int) -> tuple[int, int]:
        return divmod(sat_id, self.sats_per_plane)


@dataclass(frozen=True)
class SatelliteState:
    """One satellite at one instant: ECEF position (km) plus a geodetic view."""

    sat_id: int
    position_km: np.ndarray  # ECEF, shape (3,)
    lat_deg: float
    lon_deg: float
    alt_km: float


def propagate(cfg: ConstellationConfig, t: float) -> list[SatelliteState]:
    """Return the state of every satellite at time ``t`` seconds past epoch 0.

    Plane p sits at RAAN p*(360/P); slot q starts at in-plane anomaly
    q*(360/Q) + p*phasing_offset and advances at the circular-orbit rate.
    The spherical-Earth geodetic values are derived from the ECEF position.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    r = cfg.orbit_radius_km
    inc = math.radians(cfg.inclination_deg)
    cos_i, sin_i = math.cos(inc), math.sin(inc)
    t_abs = cfg.epoch_s + t
    theta_e = EARTH_ROTATION_RAD_S * t_abs
    cos_e, sin_e = math.cos(theta_e), math.sin(theta_e)
    omega_t = cfg.angular_rate_rad_s * t_abs

    states = []
    for p in range(cfg.planes):
        raan = 2.0 * math.pi * p / cfg.planes
        cos_o, sin_o = math.cos(raan), math.sin(raan)
        for q in range(cfg.sats_per_plane):
            u = (
                2.0 * math.pi * q / cfg.sats_per_plane
                + math.radians(cfg.phasing_offset_deg) * p
                + omega_t
            )
            cos_u, sin_u = math.cos(u), math.sin(u)
            # Orbit plane -> ECI (circular orbit: argument of latitude u).
            x = r * (cos_o * cos_u - sin_o * cos_i * sin_u)
            y = r * (sin_o * cos_u + cos_o * cos_i * sin_u)
            z = r * (sin_i * sin_u)
            # ECI -> ECEF: rotate by the accumulated Earth angle.
            xe = x * cos_e + y * sin_e
            ye = -x * sin_e + y * cos_e
            ze = z
            lat = math.degrees(math.asin(max(-1.0, min(1.0, ze / r))))
            lon = math.degrees(math.atan2(ye, xe))
            states.append(
                SatelliteState(
                    sat_id=cfg.sat_id(p, q),
                    position_km=np.array([xe, ye, ze]),
                    lat_deg=lat,
                    lon_deg=lon,
                    alt_km=r - cfg.earth_radius_km,
                )
            )
    return states


def isl_neighbors(cfg: ConstellationConfig, sat_id: int) -> set[int]:
    """Grid neighbors of a satellite: ring neighbors in-plane, same slot in
    adjacent planes.  Degenerate constellations (P < 3) yield fewer than four
    distinct neighbors; self-links are never returned.
    """
    if not 0 <= sat_id < cfg.num_sats:
        raise ValueError(f"sat_id {sat_id} out of range for {cfg.num_sats} satellites")
    p, q = cfg.plane_slot(sat_id)
    candidates = {
        cfg.sat_id(p, (q + 1) % cfg.sats_per_plane),
        cfg.sat_id(p, (q - 1) % cfg.sats_per_plane),
        cfg.sat_id((p + 1) % cfg.planes, q),
        cfg.sat_id((p - 1) % cfg.planes, q),
    }
    candidates.discard(sat_id)
    return candidates


def distance_km(a: SatelliteState, b: SatelliteState) -> float:
    """Euclidean ECEF distance between two satellites, km."""
    return float(np.linalg.norm(a.position_km - b.position_km))
