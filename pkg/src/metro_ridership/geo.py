"""Great-circle helpers on a spherical Earth."""

from __future__ import annotations

import numpy as np

# IUGG mean Earth radius
EARTH_RADIUS_KM = 6371.0088
EARTH_RADIUS_M = EARTH_RADIUS_KM * 1000.0


def haversine_km(lat1, lon1, lat2, lon2):
    """Haversine distance in kilometres.

    Accepts scalars or numpy arrays (broadcast); returns the same shape.
    """
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2.0) ** 2
    # clip guards against a drifting slightly above 1 for antipodal points
    c = 2.0 * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    dist = EARTH_RADIUS_KM * c
    return float(dist) if np.ndim(dist) == 0 else dist


def haversine_m(lat1, lon1, lat2, lon2):
    d = haversine_km(lat1, lon1, lat2, lon2)
    return d * 1000.0


def offset_north(lat: float, lon: float, meters: float) -> tuple[float, float]:
    """Point `meters` due north along the meridian (exact inverse of haversine)."""
    return lat + np.degrees(meters / EARTH_RADIUS_M), lon
