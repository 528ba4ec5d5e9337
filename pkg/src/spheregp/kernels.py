"""
Covariance functions on the sphere.

Families
--------
Isotropic (depend on the great-circle distance ``d`` only), all of the form
``sigma * g(d)`` with ``g(0) = 1``:

* ``iso_exponential``          ``g = exp(-d / r_iso)``
* ``iso_powered_exponential``  ``g = exp(-(d / r_iso) ** alpha)``, ``0 < alpha <= 1``
* ``iso_spherical``            ``g = 1 - 1.5 t + 0.5 t**3`` for ``t = d / r_iso < 1``, else 0
* ``chordal_matern``           Matérn correlation of the chordal distance ``2 sin(d / 2)``

Latitude-only correlations (no variance of their own):

* ``lat_exponential``          ``exp(-|lat_x - lat_y| / r_lat)``
* ``lat_powered_exponential``  ``exp(-(|lat_x - lat_y| / r_lat) ** alpha_lat)``

Composite and reference kernels:

* ``axisym_product``     isotropic child times latitude child. Axially
  symmetric, latitudinally reversible, and continuous at the poles.
* ``separable_lonlat``   ``sigma * exp(-|dlat| / r_lat) * exp(-|dlon| / r_lon)``
  with the longitude lag wrapped into ``[0, pi]``. It has no value at a pole.
* ``euclidean_aniso_exp``  ``sigma * exp(-|dx1| / r1) * exp(-|dx2| / r2)`` on
  the plane.

``sigma`` is the variance, i.e. the value at zero lag. Every top-level spec
also carries a nugget, added only where the two points coincide exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import special

from .exceptions import KernelSpecError, PoleUndefinedError
from .geometry import (
    HALF_PI,
    Point2D,
    SpherePoint,
    great_circle,
    same_site,
    wrap_lon_lag,
)

ISO_FAMILIES = {
    "iso_exponential": ("sigma", "r_iso"),
    "iso_powered_exponential": ("sigma", "r_iso", "alpha"),
    "iso_spherical": ("sigma", "r_iso"),
    "chordal_matern": ("sigma", "r_iso", "nu"),
}
LAT_FAMILIES = {
    "lat_exponential": ("r_lat",),
    "lat_powered_exponential": ("r_lat", "alpha_lat"),
}
OTHER_FAMILIES = {
    "axisym_product": (),
    "separable_lonlat": ("sigma", "r_lon", "r_lat"),
    "euclidean_aniso_exp": ("sigma", "r1", "r2"),
}
FAMILIES = {**ISO_FAMILIES, **LAT_FAMILIES, **OTHER_FAMILIES}

# fitting boxes; alpha's lower bound is exclusive
_RANGE_BOUNDS = (1e-4, 1e4)
BOUNDS = {
    "sigma": (1e-8, 1e8),
    "r_iso": _RANGE_BOUNDS,
    "r_lat": _RANGE_BOUNDS,
    "r_lon": _RANGE_BOUNDS,
    "r1": _RANGE_BOUNDS,
    "r2": _RANGE_BOUNDS,
    "alpha": (0.0, 1.0),
    "alpha_lat": (0.0, 1.0),
    "nu": (0.05, 5.0),
}
NUGGET_MAX_RATIO = 10.0


def _check_value(family, name, value):
    if not math.isfinite(value):
        raise KernelSpecError(f"{family}: parameter {name} is not finite ({value})")
    if name.startswith("alpha"):
        if not 0.0 < value <= 1.0:
            raise KernelSpecError(f"{family}: {name} must lie in (0, 1], got {value}")
    elif value <= 0.0:
        raise KernelSpecError(f"{family}: {name} must be > 0, got {value}")


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of a covariance function.

    Use the factory functions (:func:`iso_exponential`,
    :func:`make_axisym_product`, ...) rather than building it by hand.
    """

    family: str
    params: dict = field(default_factory=dict)
    children: tuple = ()
    nugget: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelSpecError(f"unknown kernel family {self.family!r}")
        params = {k: float(v) for k, v in self.params.items()}
        expected = FAMILIES[self.family]
        if set(params) != set(expected):
            raise KernelSpecError(
                f"{self.family} expects parameters {list(expected)}, got {sorted(params)}"
            )
        # canonical key order makes dict equality and JSON output stable
        params = {k: params[k] for k in expected}
        for name, value in params.items():
            _check_value(self.family, name, value)
        object.__setattr__(self, "params", params)

        children = tuple(self.children)
        if self.family == "axisym_product":
            if len(children) != 2:
                raise KernelSpecError("axisym_product needs exactly (iso_child, lat_child)")
            iso, lat = children
            if not isinstance(iso, KernelSpec) or iso.family not in ISO_FAMILIES:
                raise KernelSpecError(f"axisym_product: first child must be isotropic, got {getattr(iso, 'family', iso)!r}")
            if not isinstance(lat, KernelSpec) or lat.family not in LAT_FAMILIES:
                raise KernelSpecError(f"axisym_product: second child must be a latitude family, got {getattr(lat, 'family', lat)!r}")
            if iso.nugget or lat.nugget:
                raise KernelSpecError("axisym_product children cannot carry a nugget")
        elif children:
            raise KernelSpecError(f"{self.family} takes no children")
        object.__setattr__(self, "children", children)

        nugget = float(self.nugget)
        if not (math.isfinite(nugget) and nugget >= 0.0):
            raise KernelSpecError(f"nugget must be finite and >= 0, got {nugget}")
        if nugget and self.family in LAT_FAMILIES:
            raise KernelSpecError("latitude correlations cannot carry a nugget")
        object.__setattr__(self, "nugget", nugget)

    # -- introspection -----------------------------------------------------

    @property
    def variance(self) -> float:
        """Kernel value at zero lag, nugget excluded."""
        if self.family == "axisym_product":
            return self.children[0].params["sigma"]
        return self.params.get("sigma", 1.0)

    @property
    def label(self) -> str:
        if self.family == "axisym_product":
            return f"axisym_product({self.children[0].family},{self.children[1].family})"
        return self.family

    @property
    def is_spherical(self) -> bool:
        """True when the kernel is evaluable on sphere points."""
        return self.family not in LAT_FAMILIES and self.family != "euclidean_aniso_exp"

    # -- serialization -----------------------------------------------------

    def to_dict(self, top_level: bool = True) -> dict:
        params = dict(self.params)
        if top_level and self.family not in LAT_FAMILIES:
            params["nugget"] = self.nugget
        return {
            "family": self.family,
            "params": params,
            "children": [c.to_dict(top_level=False) for c in self.children],
        }

    @classmethod
    def from_dict(cls, obj) -> "KernelSpec":
        if not isinstance(obj, dict) or "family" not in obj:
            raise KernelSpecError("kernel JSON must be an object with a 'family' field")
        params = obj.get("params", {})
        if not isinstance(params, dict):
            raise KernelSpecError("kernel 'params' must be an object")
        params = dict(params)
        nugget = params.pop("nugget", 0.0)
        try:
            children = tuple(cls.from_dict(c) for c in obj.get("children", []))
        except TypeError as exc:
            raise KernelSpecError("kernel 'children' must be a list") from exc
        try:
            return cls(obj["family"], params, children, nugget)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, KernelSpecError):
                raise
            raise KernelSpecError(f"bad kernel JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# Factories


def iso_exponential(sigma=1.0, r_iso=1.0, nugget=0.0):
    return KernelSpec("iso_exponential", {"sigma": sigma, "r_iso": r_iso}, nugget=nugget)


def iso_powered_exponential(sigma=1.0, r_iso=1.0, alpha=1.0, nugget=0.0):
    return KernelSpec(
        "iso_powered_exponential", {"sigma": sigma, "r_iso": r_iso, "alpha": alpha}, nugget=nugget
    )


def iso_spherical(sigma=1.0, r_iso=1.0, nugget=0.0):
    return KernelSpec("iso_spherical", {"sigma": sigma, "r_iso": r_iso}, nugget=nugget)


def chordal_matern(sigma=1.0, r_iso=1.0, nu=0.5, nugget=0.0):
    return KernelSpec("chordal_matern", {"sigma": sigma, "r_iso": r_iso, "nu": nu}, nugget=nugget)


def lat_exponential(r_lat=1.0):
    return KernelSpec("lat_exponential", {"r_lat": r_lat})


def lat_powered_exponential(r_lat=1.0, alpha_lat=1.0):
    return KernelSpec("lat_powered_exponential", {"r_lat": r_lat, "alpha_lat": alpha_lat})


def separable_lonlat(sigma=1.0, r_lon=1.0, r_lat=1.0, nugget=0.0):
    return KernelSpec(
        "separable_lonlat", {"sigma": sigma, "r_lon": r_lon, "r_lat": r_lat}, nugget=nugget
    )


def euclidean_aniso_exp(sigma=1.0, r1=1.0, r2=1.0):
    return KernelSpec("euclidean_aniso_exp", {"sigma": sigma, "r1": r1, "r2": r2})


def make_axisym_product(iso_child: KernelSpec, lat_child: KernelSpec, nugget=None) -> KernelSpec:
    """Multiply an isotropic covariance by a latitude-only correlation.

    The result is a valid covariance (Schur product of two positive
    definite kernels), stationary in longitude, symmetric under swapping
    the two latitudes, and continuous everywhere including the poles.

    A nugget on ``iso_child`` is moved up to the product unless ``nugget``
    is given explicitly.
    """
    if not isinstance(iso_child, KernelSpec) or iso_child.family not in ISO_FAMILIES:
        raise KernelSpecError(f"iso_child must be an isotropic family, got {getattr(iso_child, 'family', iso_child)!r}")
    if not isinstance(lat_child, KernelSpec) or lat_child.family not in LAT_FAMILIES:
        raise KernelSpecError(f"lat_child must be a latitude family, got {getattr(lat_child, 'family', lat_child)!r}")
    if nugget is None:
        nugget = iso_child.nugget
    return KernelSpec("axisym_product", {}, (replace(iso_child, nugget=0.0), lat_child), nugget)


def axisym_exp_product(sigma=1.0, r_iso=1.0, r_lat=1.0, nugget=0.0) -> KernelSpec:
    """``sigma * exp(-d / r_iso) * exp(-|dlat| / r_lat)``."""
    return make_axisym_product(iso_exponential(sigma, r_iso), lat_exponential(r_lat), nugget)


# ---------------------------------------------------------------------------
# Vectorized evaluation


class PairGeometry:
    """Lazily computed lags between two broadcast-compatible point arrays.

    Building it once and reusing it across parameter values is what makes
    likelihood evaluation cheap inside the fitter.
    """

    def __init__(self, lon_a, lat_a, lon_b, lat_b):
        self.lon_a = np.asarray(lon_a, dtype=float)
        self.lat_a = np.asarray(lat_a, dtype=float)
        self.lon_b = np.asarray(lon_b, dtype=float)
        self.lat_b = np.asarray(lat_b, dtype=float)

    @classmethod
    def outer(cls, lon_a, lat_a, lon_b, lat_b):
        """All pairs: entry ``(i, j)`` relates ``a[i]`` to ``b[j]``."""
        return cls(
            np.asarray(lon_a, dtype=float)[:, None],
            np.asarray(lat_a, dtype=float)[:, None],
            np.asarray(lon_b, dtype=float)[None, :],
            np.asarray(lat_b, dtype=float)[None, :],
        )

    @cached_property
    def dist(self):
        return great_circle(self.lon_a, self.lat_a, self.lon_b, self.lat_b)

    @cached_property
    def dlat(self):
        return np.abs(self.lat_a - self.lat_b)

    @cached_property
    def dlon(self):
        return wrap_lon_lag(self.lon_a, self.lon_b)

    @cached_property
    def same(self):
        return same_site(self.lon_a, self.lat_a, self.lon_b, self.lat_b)

    @cached_property
    def shape(self):
        return np.broadcast_shapes(
            self.lon_a.shape, self.lat_a.shape, self.lon_b.shape, self.lat_b.shape
        )

    def pole_pairs(self):
        """Broadcast mask of pairs where either point is a pole."""
        mask = (np.abs(self.lat_a) == HALF_PI) | (np.abs(self.lat_b) == HALF_PI)
        return np.broadcast_to(mask, self.shape)


def iso_correlation(spec: KernelSpec, d):
    """Correlation ``g(d)`` of an isotropic family (no sigma, no nugget)."""
    p = spec.params
    r = p["r_iso"]
    fam = spec.family
    if fam == "iso_exponential":
        return np.exp(-d / r)
    if fam == "iso_powered_exponential":
        return np.exp(-((d / r) ** p["alpha"]))
    if fam == "iso_spherical":
        t = d / r
        return np.where(t < 1.0, 1.0 - 1.5 * t + 0.5 * t**3, 0.0)
    if fam == "chordal_matern":
        return matern_correlation(2.0 * np.sin(0.5 * d) / r, p["nu"])
    raise KernelSpecError(f"{fam} is not an isotropic family")


def matern_correlation(h, nu):
    """Matérn correlation ``2^(1-nu)/Gamma(nu) (sqrt(2 nu) h)^nu K_nu(sqrt(2 nu) h)``.

    ``h`` is the scaled distance (distance over range). ``nu = 1/2`` gives
    ``exp(-h)``.
    """
    t = np.sqrt(2.0 * nu) * np.asarray(h, dtype=float)
    small = t < 1e-12
    ts = np.where(small, 1.0, t)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        logc = (1.0 - nu) * math.log(2.0) - special.gammaln(nu)
        val = np.exp(logc + nu * np.log(ts)) * special.kv(nu, ts)
    val = np.where(np.isfinite(val), val, 0.0)
    return np.where(small, 1.0, np.minimum(val, 1.0))


def lat_correlation(spec: KernelSpec, dlat):
    """Correlation of a latitude family at absolute latitude lag ``dlat``."""
    p = spec.params
    if spec.family == "lat_exponential":
        return np.exp(-dlat / p["r_lat"])
    if spec.family == "lat_powered_exponential":
        return np.exp(-((dlat / p["r_lat"]) ** p["alpha_lat"]))
    raise KernelSpecError(f"{spec.family} is not a latitude family")


def covariance_from_geometry(spec: KernelSpec, geom: PairGeometry, with_nugget: bool = True):
    """Evaluate ``spec`` on every pair described by ``geom``.

    Raises
    ------
    PoleUndefinedError
        For ``separable_lonlat`` when any pair involves a pole. The message
        names the offending broadcast index.
    """
    fam = spec.family
    if fam in ISO_FAMILIES:
        val = spec.params["sigma"] * iso_correlation(spec, geom.dist)
    elif fam == "axisym_product":
        iso, lat = spec.children
        val = iso.params["sigma"] * iso_correlation(iso, geom.dist) * lat_correlation(lat, geom.dlat)
    elif fam == "separable_lonlat":
        poles = geom.pole_pairs()
        if poles.any():
            idx = tuple(int(i) for i in np.argwhere(poles)[0])
            raise PoleUndefinedError(f"separable_lonlat, pair index {idx}")
        p = spec.params
        val = p["sigma"] * np.exp(-geom.dlat / p["r_lat"]) * np.exp(-geom.dlon / p["r_lon"])
    elif fam in LAT_FAMILIES:
        raise KernelSpecError(f"{fam} is a latitude correlation; evaluate it with eval_lat")
    else:
        raise KernelSpecError(f"{fam} is defined on the plane; use eval_euclidean_aniso")
    val = np.broadcast_to(val, geom.shape).astype(float, copy=True)
    if with_nugget and spec.nugget:
        val = val + spec.nugget * np.broadcast_to(geom.same, geom.shape)
    return val


def covariance(spec: KernelSpec, lon_a, lat_a, lon_b, lat_b, with_nugget: bool = True):
    """Elementwise covariance between broadcast-compatible coordinate arrays."""
    return covariance_from_geometry(spec, PairGeometry(lon_a, lat_a, lon_b, lat_b), with_nugget)


# ---------------------------------------------------------------------------
# Point-level evaluators


def eval_iso(spec: KernelSpec, x: SpherePoint, y: SpherePoint) -> float:
    if spec.family not in ISO_FAMILIES:
        raise KernelSpecError(f"{spec.family} is not an isotropic family")
    d = great_circle(x.lon, x.lat, y.lon, y.lat)
    return float(spec.params["sigma"] * iso_correlation(spec, d))


def eval_lat(spec: KernelSpec, lat_x: float, lat_y: float) -> float:
    if spec.family not in LAT_FAMILIES:
        raise KernelSpecError(f"{spec.family} is not a latitude family")
    for v in (lat_x, lat_y):
        if not -HALF_PI <= v <= HALF_PI:
            raise KernelSpecError(f"latitude {v} outside [-pi/2, pi/2]")
    return float(lat_correlation(spec, abs(lat_x - lat_y)))


def eval_separable_lonlat(spec: KernelSpec, x: SpherePoint, y: SpherePoint) -> float:
    if spec.family != "separable_lonlat":
        raise KernelSpecError(f"expected separable_lonlat, got {spec.family}")
    return float(covariance(spec, x.lon, x.lat, y.lon, y.lat, with_nugget=False))


def eval_euclidean_aniso(spec: KernelSpec, x: Point2D, y: Point2D) -> float:
    if spec.family != "euclidean_aniso_exp":
        raise KernelSpecError(f"expected euclidean_aniso_exp, got {spec.family}")
    p = spec.params
    return p["sigma"] * math.exp(-abs(x.x1 - y.x1) / p["r1"]) * math.exp(-abs(x.x2 - y.x2) / p["r2"])


def eval(spec: KernelSpec, x: SpherePoint, y: SpherePoint) -> float:  # noqa: A001
    """Covariance between two sphere points, nugget included on coincidence."""
    return float(covariance(spec, x.lon, x.lat, y.lon, y.lat))


# ---------------------------------------------------------------------------
# Flat parameter access for the fitter


class Param(NamedTuple):
    name: str
    value: float
    lower: float
    upper: float


def _leaf_bounds(spec: KernelSpec, name: str):
    lo, hi = BOUNDS[name]
    if spec.family == "iso_spherical" and name == "r_iso":
        # spherical model is only known to be valid on S^2 for ranges up to pi
        hi = math.pi
    return lo, hi


def param_vector(spec: KernelSpec) -> list:
    """Ordered ``Param(name, value, lower, upper)`` entries.

    Order: isotropic child (or the family's own parameters), then the
    latitude child, then ``nugget``. For the exponential product this is
    ``sigma, r_iso, r_lat, nugget``. The nugget upper bound is
    ``10 * sigma``.
    """
    leaves = spec.children if spec.family == "axisym_product" else (spec,)
    out = []
    for leaf in leaves:
        for name, value in leaf.params.items():
            out.append(Param(name, value, *_leaf_bounds(leaf, name)))
    if spec.family not in LAT_FAMILIES:
        out.append(Param("nugget", spec.nugget, 0.0, NUGGET_MAX_RATIO * spec.variance))
    return out


def param_names(spec: KernelSpec) -> list:
    return [p.name for p in param_vector(spec)]


def set_params(spec: KernelSpec, values) -> KernelSpec:
    """Inverse of :func:`param_vector`: rebuild ``spec`` with new values."""
    values = [float(v) for v in values]
    template = param_vector(spec)
    if len(values) != len(template):
        raise KernelSpecError(f"expected {len(template)} parameter values, got {len(values)}")

    named = dict(zip((p.name for p in template), values))
    leaves = spec.children if spec.family == "axisym_product" else (spec,)
    new_leaves = []
    for leaf in leaves:
        params = {}
        for name in leaf.params:
            v = named[name]
            lo, hi = _leaf_bounds(leaf, name)
            if not lo <= v <= hi or (name.startswith("alpha") and v <= 0.0):
                raise KernelSpecError(f"{leaf.family}: {name}={v} outside bounds [{lo}, {hi}]")
            params[name] = v
        new_leaves.append(replace(leaf, params=params))

    if spec.family == "axisym_product":
        new = replace(spec, children=tuple(new_leaves))
    else:
        new = new_leaves[0]
    if "nugget" in named:
        tau2 = named["nugget"]
        if not 0.0 <= tau2 <= NUGGET_MAX_RATIO * new.variance:
            raise KernelSpecError(f"nugget={tau2} outside [0, {NUGGET_MAX_RATIO} * sigma]")
        new = replace(new, nugget=tau2)
    return new
