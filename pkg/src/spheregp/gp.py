"""
Dense Gaussian-process machinery on the sphere.

All fields are zero-mean. The covariance matrix of the observations is
``K + tau2 * I`` (the nugget only enters at coincident sites), it is
factorized once with a Cholesky decomposition, and kriging, likelihood and
simulation all reuse that factor. Everything is exact dense linear algebra,
O(n^3) in the number of sites.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DataError, NotPositiveDefiniteError, NumericalError, PoleUndefinedError
from .geometry import as_lonlat, same_site, to_points
from .kernels import KernelSpec, PairGeometry, covariance, covariance_from_geometry

log = logging.getLogger(__name__)

# diagonal scale below which a covariance matrix is treated as identically zero
_DEGENERATE_SCALE = 1e-20


class Dataset:
    """Observed scalar values at sites on the sphere.

    Parameters
    ----------
    sites : sequence of SpherePoint or (n, 2) array of (lon, lat) radians
    values : sequence of float
    name : str, optional
    """

    def __init__(self, sites, values, name: Optional[str] = None):
        lon, lat = as_lonlat(sites)
        values = np.asarray(values, dtype=float).ravel()
        if lon.size == 0:
            raise DataError("dataset needs at least one site")
        if values.size != lon.size:
            raise DataError(f"{lon.size} sites but {values.size} values")
        if not np.all(np.isfinite(values)):
            raise DataError("dataset values must be finite")
        for arr in (lon, lat, values):
            arr.flags.writeable = False
        self.lon = lon
        self.lat = lat
        self.values = values
        self.name = name

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"Dataset(n={len(self)}, name={self.name!r})"

    @property
    def sites(self) -> list:
        return to_points(self.lon, self.lat)

    @property
    def has_duplicates(self) -> bool:
        same = same_site(self.lon[:, None], self.lat[:, None], self.lon[None, :], self.lat[None, :])
        return bool(np.triu(same, k=1).any())

    def fingerprint(self) -> str:
        """Content hash of coordinates and values."""
        h = hashlib.sha256()
        for arr in (self.lon, self.lat, self.values):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset((self.lon[idx], self.lat[idx]), self.values[idx], self.name)

    def with_values(self, values) -> "Dataset":
        return Dataset((self.lon, self.lat), values, self.name)


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal jitter ladder, relative to the kernel variance.

    The declared matrix is tried first; then ``start * sigma``, multiplied
    by ``factor`` until ``stop * sigma`` has been tried.
    """

    start: float = 1e-10
    factor: float = 10.0
    stop: float = 1e-4

    def levels(self, variance: float):
        yield 0.0
        rel = self.start
        while rel <= self.stop * (1 + 1e-9):
            yield rel * variance
            rel *= self.factor


DEFAULT_JITTER = JitterPolicy()
NO_JITTER = JitterPolicy(start=1.0, stop=0.0)


def factorize(K: np.ndarray, variance: float, policy: JitterPolicy = DEFAULT_JITTER):
    """Lower Cholesky factor of ``K``, escalating diagonal jitter on failure.

    Returns ``(L, jitter)``.
    """
    n = K.shape[0]
    if not np.all(np.isfinite(K)):
        raise NotPositiveDefiniteError("covariance matrix has non-finite entries")
    degenerate = n > 0 and float(np.max(np.abs(np.diag(K)))) < _DEGENERATE_SCALE
    tried = 0.0
    for jitter in policy.levels(variance):
        tried = jitter
        if degenerate:
            continue
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n) if jitter else K)
        except np.linalg.LinAlgError:
            continue
        if jitter:
            log.debug("cholesky needed jitter %.3g", jitter)
        return L, jitter
    raise NotPositiveDefiniteError(
        f"covariance not positive definite at these parameters (tried jitter up to {tried:.3g})"
    )


def assemble_covariance(spec: KernelSpec, sites_a, sites_b, with_nugget: bool = True) -> np.ndarray:
    """Matrix of ``eval(spec, a_i, b_j)``; nugget added at coincident pairs."""
    lon_a, lat_a = as_lonlat(sites_a)
    lon_b, lat_b = as_lonlat(sites_b)
    geom = PairGeometry.outer(lon_a, lat_a, lon_b, lat_b)
    try:
        return covariance_from_geometry(spec, geom, with_nugget)
    except PoleUndefinedError:
        bad = np.argwhere(geom.pole_pairs())[0]
        raise PoleUndefinedError(f"{spec.family} between sites_a[{bad[0]}] and sites_b[{bad[1]}]") from None


def observation_covariance(spec: KernelSpec, sites, geometry: Optional[PairGeometry] = None) -> np.ndarray:
    """``K(X, X) + tau2 I`` for one set of observation sites.

    The nugget is per observation, so two stations sharing coordinates get
    it on their own diagonal entries only.
    """
    if geometry is None:
        lon, lat = as_lonlat(sites)
        geometry = PairGeometry.outer(lon, lat, lon, lat)
    try:
        K = covariance_from_geometry(spec, geometry, with_nugget=False)
    except PoleUndefinedError:
        bad = np.argwhere(geometry.pole_pairs())[0]
        raise PoleUndefinedError(f"{spec.family} between sites[{bad[0]}] and sites[{bad[1]}]") from None
    if spec.nugget:
        K[np.diag_indices_from(K)] += spec.nugget
    return K


@dataclass(frozen=True, eq=False)
class GpModel:
    """A kernel bound to a dataset, with the factorized covariance."""

    spec: KernelSpec
    data: Dataset
    chol: np.ndarray
    alpha: np.ndarray
    log_det: float
    jitter: float = 0.0

    def krige(self, targets):
        return krige(self, targets)

    @property
    def log_likelihood(self) -> float:
        y = self.data.values
        return -0.5 * (y.size * math.log(2.0 * math.pi) + self.log_det + float(y @ self.alpha))


def _check_duplicates(spec, data):
    if spec.nugget == 0.0 and data.has_duplicates:
        raise DataError("dataset has duplicate sites; a positive nugget is required")


def _model_from_matrix(spec, data, K, policy):
    L, jitter = factorize(K, spec.variance, policy)
    z = solve_triangular(L, data.values, lower=True)
    alpha = solve_triangular(L.T, z, lower=False)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    for arr in (L, alpha):
        arr.flags.writeable = False
    return GpModel(spec, data, L, alpha, log_det, jitter)


def build_model(spec: KernelSpec, data: Dataset, jitter_policy: JitterPolicy = DEFAULT_JITTER) -> GpModel:
    """Factorize ``K(X, X) + tau2 I`` for ``data`` and solve for the weights."""
    _check_duplicates(spec, data)
    K = observation_covariance(spec, (data.lon, data.lat))
    return _model_from_matrix(spec, data, K, jitter_policy)


class PredictionResult(NamedTuple):
    mean: float
    variance: float


def krige_arrays(model: GpModel, targets):
    """Kriging mean and variance at ``targets`` as two arrays.

    The prediction is for the latent, noise-free field: the nugget is left
    out of the cross-covariances and of the prior variance at the targets.
    """
    lon_t, lat_t = as_lonlat(targets)
    if lon_t.size == 0:
        return np.empty(0), np.empty(0)
    spec, data = model.spec, model.data
    k_star = assemble_covariance(spec, (data.lon, data.lat), (lon_t, lat_t), with_nugget=False)
    prior = covariance(spec, lon_t, lat_t, lon_t, lat_t, with_nugget=False)
    mean = k_star.T @ model.alpha
    v = solve_triangular(model.chol, k_star, lower=True)
    var = prior - np.einsum("ij,ij->j", v, v)
    tol = 1e-10 * max(1.0, spec.variance)
    if np.any(var < -tol):
        raise NumericalError(f"negative kriging variance {var.min():.3g}; covariance is ill-conditioned")
    return mean, np.maximum(var, 0.0)


def krige(model: GpModel, targets) -> list:
    """Kriging predictions as a list of ``PredictionResult(mean, variance)``."""
    mean, var = krige_arrays(model, targets)
    return [PredictionResult(float(m), float(v)) for m, v in zip(mean, var)]


def log_likelihood(
    spec: KernelSpec,
    data: Dataset,
    geometry: Optional[PairGeometry] = None,
    jitter_policy: JitterPolicy = DEFAULT_JITTER,
) -> float:
    """Zero-mean Gaussian log-likelihood of ``data`` under ``spec``.

    Returns ``-inf`` when the covariance cannot be factorized. ``geometry``
    may carry precomputed pairwise lags for ``data`` (the fitter does this).
    """
    _check_duplicates(spec, data)
    K = observation_covariance(spec, (data.lon, data.lat), geometry)
    try:
        model = _model_from_matrix(spec, data, K, jitter_policy)
    except NotPositiveDefiniteError:
        return -math.inf
    return model.log_likelihood


# ---------------------------------------------------------------------------
# Simulation


def standard_normal(seed: int, size: int) -> np.ndarray:
    """``size`` i.i.d. N(0, 1) variates from a seeded Philox stream.

    Uniforms come from the Philox4x64 counter-based generator and are
    mapped through Box-Muller, so the stream depends only on ``seed``.
    """
    if size == 0:
        return np.empty(0)
    m = (size + 1) // 2
    u = np.random.Generator(np.random.Philox(int(seed))).random((2, m))
    radius = np.sqrt(-2.0 * np.log1p(-u[0]))  # 1 - u in (0, 1]
    angle = 2.0 * math.pi * u[1]
    return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:size]


def simulate(
    spec: KernelSpec,
    sites,
    seed: int,
    n_draws: int = 1,
    jitter_policy: JitterPolicy = DEFAULT_JITTER,
) -> np.ndarray:
    """Unconditional draws, shape ``(n_draws, n_sites)``.

    Each draw is ``L z`` with ``L`` the Cholesky factor of
    ``K(X, X) + tau2 I``.
    """
    if n_draws < 0:
        raise DataError("n_draws must be >= 0")
    lon, lat = as_lonlat(sites)
    if n_draws == 0:
        return np.empty((0, lon.size))
    K = observation_covariance(spec, (lon, lat))
    L, _ = factorize(K, spec.variance, jitter_policy)
    z = standard_normal(seed, n_draws * lon.size).reshape(n_draws, lon.size)
    return z @ L.T
