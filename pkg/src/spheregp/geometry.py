"""
Points on the unit sphere, great-circle distance and point-set generators.

Angles are radians everywhere inside the package; degrees only appear at
the I/O boundary (see :mod:`spheregp.io`). Longitudes are canonicalized
into ``[-pi, pi)`` and latitudes must lie in ``[-pi/2, pi/2]``.

A pole is any point with ``|lat| == pi/2`` exactly. Its stored longitude is
kept (it may carry meaning for the caller) but is ignored by equality,
hashing and every distance computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import DataError

__all__ = [
    "EARTH_RADIUS_KM",
    "HALF_PI",
    "SpherePoint",
    "Point2D",
    "GridSpec",
    "canonical_lon",
    "wrap_lon_lag",
    "great_circle",
    "great_circle_distance",
    "same_site",
    "as_lonlat",
    "to_points",
    "shift",
    "generate_grid",
    "uniform_sphere",
    "euclidean_point",
]

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi
EARTH_RADIUS_KM = 6371.0


def canonical_lon(lon):
    """Map longitude(s) into ``[-pi, pi)``. Works on scalars and arrays."""
    if np.ndim(lon) == 0:
        out = math.fmod(float(lon) + math.pi, TWO_PI)
        if out < 0.0:
            out += TWO_PI
        out -= math.pi
        # fmod round-off can land exactly on +pi
        return -math.pi if out >= math.pi else out
    lon = np.asarray(lon, dtype=float)
    out = np.mod(lon + math.pi, TWO_PI) - math.pi
    return np.where(out >= math.pi, -math.pi, out)


def wrap_lon_lag(lon_a, lon_b):
    """Absolute longitude lag wrapped into ``[0, pi]``.

    Symmetric in its arguments bit for bit.
    """
    lag = np.abs(np.asarray(lon_a, dtype=float) - np.asarray(lon_b, dtype=float))
    lag = np.mod(lag, TWO_PI)
    return np.where(lag > math.pi, TWO_PI - lag, lag)


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """A point on the unit sphere, ``lon`` and ``lat`` in radians."""

    lon: float
    lat: float

    def __post_init__(self):
        lon = float(self.lon)
        lat = float(self.lat)
        if not (math.isfinite(lon) and math.isfinite(lat)):
            raise DataError(f"non-finite coordinates ({lon}, {lat})")
        if not -HALF_PI <= lat <= HALF_PI:
            raise DataError(f"latitude {lat} outside [-pi/2, pi/2]")
        object.__setattr__(self, "lon", canonical_lon(lon))
        object.__setattr__(self, "lat", lat)

    @classmethod
    def from_degrees(cls, lon_deg: float, lat_deg: float) -> "SpherePoint":
        return cls(math.radians(lon_deg), math.radians(lat_deg))

    @property
    def is_pole(self) -> bool:
        return abs(self.lat) == HALF_PI

    def __eq__(self, other):
        if not isinstance(other, SpherePoint):
            return NotImplemented
        if self.lat != other.lat:
            return False
        return self.is_pole or self.lon == other.lon

    def __hash__(self):
        if self.is_pole:
            return hash(("pole", self.lat))
        return hash((self.lon, self.lat))

    def degrees(self):
        """Return ``(lon_deg, lat_deg)``."""
        return math.degrees(self.lon), math.degrees(self.lat)


def shift(point: SpherePoint, delta: float) -> SpherePoint:
    """Rotate a point about the polar axis by ``delta`` radians of longitude."""
    return SpherePoint(point.lon + delta, point.lat)


def as_lonlat(sites):
    """Return ``(lon, lat)`` float arrays from points or an ``(n, 2)`` array.

    ``sites`` is either a sequence of :class:`SpherePoint` or array-like with
    columns ``(lon, lat)`` in radians. Array input is validated and its
    longitudes canonicalized.
    """
    if isinstance(sites, tuple) and len(sites) == 2 and isinstance(sites[0], np.ndarray):
        lon, lat = sites
    elif len(sites) and isinstance(sites[0], SpherePoint):
        lon = np.fromiter((p.lon for p in sites), float, len(sites))
        lat = np.fromiter((p.lat for p in sites), float, len(sites))
        return lon, lat
    else:
        arr = np.asarray(sites, dtype=float)
        if arr.size == 0:
            return np.empty(0), np.empty(0)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DataError("sites must be SpherePoints or an (n, 2) array of (lon, lat)")
        lon, lat = arr[:, 0], arr[:, 1]
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    if not (np.all(np.isfinite(lon)) and np.all(np.isfinite(lat))):
        raise DataError("non-finite site coordinates")
    if np.any(np.abs(lat) > HALF_PI):
        raise DataError("latitude outside [-pi/2, pi/2]")
    return canonical_lon(lon), lat


def to_points(lon, lat) -> list:
    return [SpherePoint(a, b) for a, b in zip(np.ravel(lon), np.ravel(lat))]


def same_site(lon_a, lat_a, lon_b, lat_b):
    """Elementwise pole-aware exact coincidence test (broadcasting)."""
    lat_a = np.asarray(lat_a, dtype=float)
    lat_b = np.asarray(lat_b, dtype=float)
    same_lat = lat_a == lat_b
    return same_lat & ((np.asarray(lon_a) == np.asarray(lon_b)) | (np.abs(lat_a) == HALF_PI))


def great_circle(lon_a, lat_a, lon_b, lat_b):
    """Vectorized great-circle distance on the unit sphere.

    Uses the spherical law of cosines with the cosine clamped to ``[-1, 1]``.
    Coincident sites get exactly zero (the clamped formula leaves a residue
    of order 1e-8 there).
    """
    lon_a = np.asarray(lon_a, dtype=float)
    lat_a = np.asarray(lat_a, dtype=float)
    lon_b = np.asarray(lon_b, dtype=float)
    lat_b = np.asarray(lat_b, dtype=float)
    cos_lon = np.cos(lon_b - lon_a)
    # pole longitudes are arbitrary; cos(lat)=6e-17 there, so pin it
    cos_lat_a = np.where(np.abs(lat_a) == HALF_PI, 0.0, np.cos(lat_a))
    cos_lat_b = np.where(np.abs(lat_b) == HALF_PI, 0.0, np.cos(lat_b))
    inner = np.sin(lat_a) * np.sin(lat_b) + cos_lat_a * cos_lat_b * cos_lon
    d = np.arccos(np.clip(inner, -1.0, 1.0))
    return np.where(same_site(lon_a, lat_a, lon_b, lat_b), 0.0, d)


def great_circle_distance(x: SpherePoint, y: SpherePoint) -> float:
    """Great-circle distance between two points, in radians within ``[0, pi]``.

    >>> round(great_circle_distance(SpherePoint(0, 0), SpherePoint(math.pi / 2, 0)), 12)
    1.570796326795
    """
    return float(great_circle(x.lon, x.lat, y.lon, y.lat))


def uniform_sphere(n: int, rng: np.random.Generator, exclude_poles: bool = False):
    """Draw ``n`` points uniformly on the sphere, returned as ``(lon, lat)``.

    Area-preserving inverse transform: longitude uniform, sin(latitude)
    uniform.
    """
    lon = canonical_lon(rng.uniform(-math.pi, math.pi, n))
    lat = np.arcsin(rng.uniform(-1.0, 1.0, n))
    if exclude_poles:
        while np.any(bad := np.abs(lat) == HALF_PI):
            lat[bad] = np.arcsin(rng.uniform(-1.0, 1.0, int(bad.sum())))
    return lon, lat


# ---------------------------------------------------------------------------
# Grids


_GRID_KINDS = ("regular_lonlat", "reduced_gaussian_like", "fibonacci")


@dataclass(frozen=True)
class GridSpec:
    """Description of a deterministic point set.

    ``regular_lonlat``
        ``n_lat`` equispaced interior latitude rings (poles excluded) times
        ``n_lon`` longitudes starting at ``-pi``.
    ``reduced_gaussian_like``
        The same interior rings plus one point at each pole. The ring at
        latitude ``phi`` holds ``max(4, ceil(n_eq * cos(phi)))`` points,
        where ``n_eq`` is ``n_lon`` or is derived from ``spacing_km``.
        If only ``spacing_km`` is given, ``n_lat`` follows from it too.
    ``fibonacci``
        ``n_points`` points on a golden-angle spiral.
    """

    kind: str
    n_lat: Optional[int] = None
    n_lon: Optional[int] = None
    spacing_km: Optional[float] = None
    n_points: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _GRID_KINDS:
            raise DataError(f"unknown grid kind {self.kind!r}; expected one of {_GRID_KINDS}")
        for name in ("n_lat", "n_lon", "n_points"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 1):
                raise DataError(f"grid {name} must be an integer >= 1, got {v}")
        if self.spacing_km is not None and not (self.spacing_km > 0 and math.isfinite(self.spacing_km)):
            raise DataError(f"grid spacing_km must be > 0, got {self.spacing_km}")
        if self.kind == "regular_lonlat" and (self.n_lat is None or self.n_lon is None):
            raise DataError("regular_lonlat grid needs n_lat and n_lon")
        if self.kind == "reduced_gaussian_like":
            if self.n_lon is None and self.spacing_km is None:
                raise DataError("reduced_gaussian_like grid needs n_lon or spacing_km")
            if self.n_lat is None and self.spacing_km is None:
                raise DataError("reduced_gaussian_like grid needs n_lat or spacing_km")
        if self.kind == "fibonacci" and self.n_points is None:
            raise DataError("fibonacci grid needs n_points")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"kind:key=value,key=value"``, e.g. ``"fibonacci:n_points=50"``.

        ``regular`` and ``reduced`` are accepted as short kind names.
        """
        kind, _, rest = text.strip().partition(":")
        kind = {"regular": "regular_lonlat", "reduced": "reduced_gaussian_like"}.get(kind, kind)
        kwargs = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, value = item.partition("=")
            if not eq or key not in ("n_lat", "n_lon", "spacing_km", "n_points"):
                raise DataError(f"bad grid parameter {item!r}")
            try:
                kwargs[key] = float(value) if key == "spacing_km" else int(value)
            except ValueError as exc:
                raise DataError(f"bad grid parameter {item!r}") from exc
        return cls(kind, **kwargs)


def _interior_lats(n_lat: int) -> np.ndarray:
    return -HALF_PI + np.arange(1, n_lat + 1) * (math.pi / (n_lat + 1))


def _ring_lons(m: int) -> np.ndarray:
    return -math.pi + np.arange(m) * (TWO_PI / m)


def ring_count(n_eq: int, lat: float) -> int:
    """Points on a reduced-grid ring at ``lat`` given ``n_eq`` at the equator."""
    # the 1e-9 guards against cos(pi/3) = 0.5000000000000001 style round-up
    return max(4, math.ceil(n_eq * math.cos(lat) - 1e-9))


def generate_grid(spec: GridSpec) -> list:
    """Deterministic, duplicate-free list of :class:`SpherePoint` for ``spec``."""
    lon, lat = grid_lonlat(spec)
    return to_points(lon, lat)


def grid_lonlat(spec: GridSpec):
    """Same as :func:`generate_grid` but returns ``(lon, lat)`` arrays."""
    if spec.kind == "regular_lonlat":
        lats = _interior_lats(spec.n_lat)
        lons = _ring_lons(spec.n_lon)
        lat, lon = np.meshgrid(lats, lons, indexing="ij")
        return lon.ravel(), lat.ravel()

    if spec.kind == "reduced_gaussian_like":
        if spec.n_lon is not None:
            n_eq = spec.n_lon
        else:
            spacing = spec.spacing_km / EARTH_RADIUS_KM
            n_eq = max(4, math.ceil(TWO_PI / spacing - 1e-9))
        if spec.n_lat is not None:
            n_lat = spec.n_lat
        else:
            n_lat = max(1, round(math.pi * EARTH_RADIUS_KM / spec.spacing_km) - 1)
        lon_parts = [np.array([0.0])]
        lat_parts = [np.array([-HALF_PI])]
        for phi in _interior_lats(n_lat):
            m = ring_count(n_eq, phi)
            lon_parts.append(_ring_lons(m))
            lat_parts.append(np.full(m, phi))
        lon_parts.append(np.array([0.0]))
        lat_parts.append(np.array([HALF_PI]))
        return np.concatenate(lon_parts), np.concatenate(lat_parts)

    n = spec.n_points
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    golden = math.pi * (3.0 - math.sqrt(5.0))
    return canonical_lon(k * golden), np.arcsin(z)


# ---------------------------------------------------------------------------
# Euclidean support points


@dataclass(frozen=True)
class Point2D:
    x1: float
    x2: float


def euclidean_point(coords: Sequence[float]) -> Point2D:
    """Wrap a finite pair of planar coordinates."""
    x1, x2 = (float(c) for c in coords)
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise DataError(f"non-finite planar coordinates {coords!r}")
    return Point2D(x1, x2)

