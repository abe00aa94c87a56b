"""Great-circle geometry over tower coordinates.

All distances are kilometres on a sphere of mean earth radius.  Tower layouts
in this domain are a few thousand sites at most, so nearest-neighbor search
is a chunked brute-force scan rather than a spatial index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import TowerSet

EARTH_RADIUS_KM = 6371.0088
DEFAULT_ISOLATION_RADIUS_KM = 15.0


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance between coordinate pairs, in km.

    Accepts scalars or broadcastable arrays of decimal degrees.  The
    arcsin-of-sqrt form is numerically stable for nearby points, which is
    where tower spacing lives.
    """
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(x, dtype=float)) for x in (lat1, lon1, lat2, lon2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    # Rounding can push h a hair past 1 for near-antipodal pairs.
    h = np.minimum(h, 1.0)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h))


def pairwise_km(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    """Full n x n distance matrix.  Diagonal is exactly zero."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    d = haversine_km(lat[:, None], lon[:, None], lat[None, :], lon[None, :])
    np.fill_diagonal(d, 0.0)
    return d


def nearest_neighbor_km(lat: np.ndarray, lon: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Distance from each tower to its nearest other tower.

    Requires at least two towers.  Duplicate coordinates yield a nearest
    neighbor distance of zero, which is legitimate (co-sited sectors).
    """
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    n = len(lat)
    if n < 2:
        raise ValueError("nearest-neighbor distances need at least two towers")
    out = np.empty(n)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        block = haversine_km(lat[lo:hi, None], lon[lo:hi, None], lat[None, :], lon[None, :])
        block[np.arange(lo, hi) - lo, np.arange(lo, hi)] = np.inf
        out[lo:hi] = block.min(axis=1)
    return out


def fraction_within(distances_km: np.ndarray, threshold_km: float) -> float:
    """Fraction of entries at or below the threshold."""
    distances_km = np.asarray(distances_km, dtype=float)
    if len(distances_km) == 0:
        raise ValueError("empty distance array")
    return float(np.count_nonzero(distances_km <= threshold_km) / len(distances_km))


@dataclass(frozen=True)
class TowerNNStats:
    """Nearest-neighbor distance per tower plus a banded cumulative view.

    ``band_cdf`` pairs each band's upper edge (km) with the cumulative
    fraction of towers whose nearest neighbor lies at or below it; an open
    infinity band is always appended so the last fraction is exactly 1.
    """

    nn_km: dict[str, float]
    band_cdf: tuple[tuple[float, float], ...]


def nearest_neighbor_stats(tower_set: TowerSet, bands: list[float]) -> TowerNNStats:
    """Per-tower nearest-neighbor distances and their band CDF.

    ``bands`` are strictly increasing upper edges in km.  Counting uses
    inclusive <=, matching statements like "within 250 m".
    """
    if len(tower_set) < 2:
        raise ValueError("nearest-neighbor statistics need at least two towers")
    edges = [float(b) for b in bands]
    if any(b <= a for a, b in zip(edges, edges[1:])) or any(e <= 0 for e in edges):
        raise ValueError("band edges must be positive and strictly increasing")
    nn = nearest_neighbor_km(tower_set.lat, tower_set.lon)
    cdf = [(edge, fraction_within(nn, edge)) for edge in edges]
    cdf.append((float("inf"), 1.0))
    return TowerNNStats(
        nn_km={cid: float(d) for cid, d in zip(tower_set.cell_ids, nn)},
        band_cdf=tuple(cdf),
    )


def isolated_towers(
    tower_set: TowerSet, radius_km: float = DEFAULT_ISOLATION_RADIUS_KM
) -> frozenset[str]:
    """Towers with no other tower inside ``radius_km`` (strictly beyond it).

    A tower whose nearest neighbor sits at exactly the radius is not
    isolated: "within a radius" reads as inclusive membership.
    """
    if radius_km <= 0:
        raise ValueError("isolation radius must be positive")
    nn = nearest_neighbor_km(tower_set.lat, tower_set.lon)
    return frozenset(
        cid for cid, d in zip(tower_set.cell_ids, nn) if d > radius_km
    )
