"""
Empirical checks of covariance properties, and model comparison.

Every check accepts either a :class:`~spheregp.kernels.KernelSpec` or a
plain callable ``k(lon_a, lat_a, lon_b, lat_b) -> array`` (broadcasting),
so that deliberately broken kernels can be pushed through the same code
as negative controls. All randomness is seeded; reruns are identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from .exceptions import DataError, PoleUndefinedError, SphereGPError
from .fit import FitConfig, fit_mle
from .geometry import HALF_PI, SpherePoint, as_lonlat, canonical_lon, uniform_sphere, wrap_lon_lag
from .gp import Dataset, build_model, krige_arrays
from .kernels import KernelSpec, covariance, param_vector, set_params

KernelLike = Union[KernelSpec, Callable]

DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.001)
DEFAULT_CHECKS = ("positive_definite", "axial_symmetry", "latitudinal_reversibility", "pole_continuity")


@dataclass
class DiagnosticReport:
    """Outcome of one check.

    ``passed`` is true exactly when ``statistic`` is on the passing side of
    ``threshold``; ``direction`` says which side that is (``"<="`` or
    ``"<"``).
    """

    check_name: str
    passed: bool
    statistic: float
    threshold: float
    direction: str = "<="
    details: list = field(default_factory=list)

    def to_dict(self):
        return {
            "check_name": self.check_name,
            "passed": bool(self.passed),
            "statistic": _json_float(self.statistic),
            "threshold": self.threshold,
            "direction": self.direction,
            "details": self.details,
        }


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _as_function(kernel: KernelLike):
    if isinstance(kernel, KernelSpec):
        return lambda la, pa, lb, pb: covariance(kernel, la, pa, lb, pb)
    return kernel


def _scale(kernel: KernelLike) -> float:
    if isinstance(kernel, KernelSpec):
        return kernel.variance
    v = float(np.asarray(kernel(0.0, 0.0, 0.0, 0.0)))
    return abs(v) if v else 1.0


def _avoids_poles(kernel):
    return not isinstance(kernel, KernelSpec) or kernel.family == "separable_lonlat"


def _rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


# ---------------------------------------------------------------------------
# Positive definiteness


def random_params(spec: KernelSpec, rng: np.random.Generator) -> KernelSpec:
    """Same family as ``spec`` with randomly drawn parameters and no nugget.

    Variances are log-uniform on [0.1, 10], ranges log-uniform on
    [0.05, 3] radians, exponents uniform on [0.1, 1] and Matérn smoothness
    uniform on [0.1, 2.5].
    """
    values = []
    for p in param_vector(spec):
        if p.name == "sigma":
            v = math.exp(rng.uniform(math.log(0.1), math.log(10.0)))
        elif p.name.startswith("r"):
            v = math.exp(rng.uniform(math.log(0.05), math.log(3.0)))
        elif p.name.startswith("alpha"):
            v = rng.uniform(0.1, 1.0)
        elif p.name == "nu":
            v = rng.uniform(0.1, 2.5)
        else:  # nugget
            v = 0.0
        values.append(v)
    return set_params(spec, values)


def check_positive_definite(
    kernel: KernelLike,
    n_trials: int = 50,
    n_points: int = 60,
    seed: int = 0,
    jitter: float = 1e-10,
    randomize: bool = True,
) -> DiagnosticReport:
    """Cholesky-factorize Gram matrices on random point sets.

    Each trial draws ``n_points`` uniform points (never a pole for the
    separable baseline or for callables) and, for a spec with
    ``randomize=True``, fresh parameters from :func:`random_params`. A trial
    fails if the Gram matrix is asymmetric beyond ``1e-12 * variance`` or if its Cholesky
    factorization with ``jitter * variance`` on the diagonal fails.

    statistic: number of failed trials; passes when it is 0.
    """
    if n_points < 2:
        raise DataError("n_points must be >= 2")
    rng = _rng(seed)
    failures = []
    for trial in range(n_trials):
        lon, lat = uniform_sphere(n_points, rng, exclude_poles=_avoids_poles(kernel))
        k = random_params(kernel, rng) if (randomize and isinstance(kernel, KernelSpec)) else kernel
        K = np.asarray(_as_function(k)(lon[:, None], lat[:, None], lon[None, :], lat[None, :]), dtype=float)
        scale = _scale(k)
        reason = None
        if np.max(np.abs(K - K.T)) > 1e-12 * scale:
            reason = "asymmetric"
        else:
            try:
                np.linalg.cholesky(K + jitter * scale * np.eye(n_points))
            except np.linalg.LinAlgError:
                reason = "cholesky failed"
        if reason:
            failures.append({
                "trial": trial,
                "reason": reason,
                "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (K + K.T))[0]),
                "kernel": k.to_dict() if isinstance(k, KernelSpec) else getattr(k, "__name__", "callable"),
            })
    return DiagnosticReport("positive_definite", not failures, len(failures), 0, "<=", failures[:5])


# ---------------------------------------------------------------------------
# Symmetry checks


def check_axial_symmetry(kernel: KernelLike, n_trials: int = 1000, seed: int = 0,
                         threshold: float = 1e-12) -> DiagnosticReport:
    """Invariance under a common longitude rotation.

    statistic: ``max |K(shift(x), shift(y)) - K(x, y)|`` over random pairs and
    shifts, divided by the kernel variance.
    """
    rng = _rng(seed)
    f = _as_function(kernel)
    lon_x, lat_x = uniform_sphere(n_trials, rng, exclude_poles=True)
    lon_y, lat_y = uniform_sphere(n_trials, rng, exclude_poles=True)
    delta = rng.uniform(-math.pi, math.pi, n_trials)
    k0 = np.asarray(f(lon_x, lat_x, lon_y, lat_y), dtype=float)
    k1 = np.asarray(f(canonical_lon(lon_x + delta), lat_x, canonical_lon(lon_y + delta), lat_y), dtype=float)
    dev = np.abs(k1 - k0) / _scale(kernel)
    i = int(np.argmax(dev))
    stat = float(dev[i])
    witness = {
        "x": [float(lon_x[i]), float(lat_x[i])],
        "y": [float(lon_y[i]), float(lat_y[i])],
        "shift": float(delta[i]),
        "values": [float(k0[i]), float(k1[i])],
    }
    return DiagnosticReport("axial_symmetry", stat <= threshold, stat, threshold, "<=", [witness])


def check_latitudinal_reversibility(kernel: KernelLike, n_trials: int = 1000, seed: int = 0,
                                    threshold: float = 1e-12) -> DiagnosticReport:
    """Symmetry under swapping the two latitudes at a fixed longitude lag.

    statistic: ``max |F(dlon, lat_x, lat_y) - F(dlon, lat_y, lat_x)|`` divided by
    the kernel variance.
    """
    rng = _rng(seed)
    f = _as_function(kernel)
    lon0 = rng.uniform(-math.pi, math.pi, n_trials)
    dlon = rng.uniform(-math.pi, math.pi, n_trials)
    _, lat_x = uniform_sphere(n_trials, rng, exclude_poles=True)
    _, lat_y = uniform_sphere(n_trials, rng, exclude_poles=True)
    lon1 = canonical_lon(lon0 + dlon)
    a = np.asarray(f(lon0, lat_x, lon1, lat_y), dtype=float)
    b = np.asarray(f(lon0, lat_y, lon1, lat_x), dtype=float)
    dev = np.abs(a - b) / _scale(kernel)
    i = int(np.argmax(dev))
    stat = float(dev[i])
    witness = {
        "dlon": float(dlon[i]),
        "lats": [float(lat_x[i]), float(lat_y[i])],
        "values": [float(a[i]), float(b[i])],
    }
    return DiagnosticReport("latitudinal_reversibility", stat <= threshold, stat, threshold, "<=", [witness])


# ---------------------------------------------------------------------------
# Pole continuity


class ProbeRow(NamedTuple):
    epsilon: float
    spread: float
    pole_gap: Optional[float]
    note: str = ""


def pole_continuity_probe(
    kernel: KernelLike,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    n_longitudes: int = 72,
    reference: SpherePoint = SpherePoint(0.0, 0.5),
) -> list:
    """Approach the north pole along ``n_longitudes`` meridians.

    For each ``eps`` the kernel is evaluated between ``reference`` and the
    points ``(lon_j, pi/2 - eps)``, ``lon_j = -pi + 2 pi j / n``. ``spread`` is
    max minus min over ``j``. ``pole_gap`` is ``|K(pole, reference) - mean_j|``,
    or ``None`` with ``note="undefined at pole"`` when the kernel has no
    value at the pole.
    """
    eps = np.asarray(epsilons, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise DataError("epsilons must be positive and strictly decreasing")
    if n_longitudes < 2:
        raise DataError("n_longitudes must be >= 2")
    f = _as_function(kernel)
    lons = -math.pi + np.arange(n_longitudes) * (2.0 * math.pi / n_longitudes)
    try:
        at_pole = float(np.asarray(f(0.0, HALF_PI, reference.lon, reference.lat)))
        note = ""
    except PoleUndefinedError:
        at_pole, note = None, "undefined at pole"
    rows = []
    for e in eps:
        vals = np.asarray(f(lons, HALF_PI - e, reference.lon, reference.lat), dtype=float)
        vals = np.broadcast_to(vals, lons.shape)
        gap = None if at_pole is None else abs(at_pole - float(vals.mean()))
        rows.append(ProbeRow(float(e), float(vals.max() - vals.min()), gap, note))
    return rows


def separable_spread_limit(spec: KernelSpec, reference: SpherePoint) -> float:
    """Limit of the separable kernel's probe spread as ``eps -> 0``.

    ``sigma exp(-|pi/2 - lat_ref| / r_lat) (1 - exp(-pi / r_lon))``, assuming
    the probe longitudes include the reference longitude and its antipode.
    """
    p = spec.params
    return p["sigma"] * math.exp(-abs(HALF_PI - reference.lat) / p["r_lat"]) * (1.0 - math.exp(-math.pi / p["r_lon"]))


def check_pole_continuity(kernel: KernelLike, epsilons=DEFAULT_EPSILONS, n_longitudes: int = 72,
                          reference: SpherePoint = SpherePoint(0.0, 0.5),
                          threshold: float = 1e-3) -> DiagnosticReport:
    """Pass when the probe spread at the smallest ``eps``, relative to the
    variance, is below ``threshold`` and the spread never grows as ``eps``
    shrinks (1e-12 slack).
    """
    rows = pole_continuity_probe(kernel, epsilons, n_longitudes, reference)
    scale = _scale(kernel)
    spreads = [r.spread for r in rows]
    monotone = all(b <= a + 1e-12 for a, b in zip(spreads, spreads[1:]))
    stat = spreads[-1] / scale
    details = [r._asdict() for r in rows]
    details.append({"monotone": monotone})
    return DiagnosticReport("pole_continuity", bool(stat < threshold and monotone), stat, threshold, "<", details)


def run_checks(kernel: KernelLike, checks=DEFAULT_CHECKS, seed: int = 0) -> list:
    """Run named checks with their default settings."""
    table = {
        "positive_definite": lambda: check_positive_definite(kernel, seed=seed),
        "axial_symmetry": lambda: check_axial_symmetry(kernel, seed=seed),
        "latitudinal_reversibility": lambda: check_latitudinal_reversibility(kernel, seed=seed),
        "pole_continuity": lambda: check_pole_continuity(kernel),
    }
    unknown = [c for c in checks if c not in table]
    if unknown:
        raise DataError(f"unknown checks {unknown}; available: {list(table)}")
    return [table[c]() for c in checks]


# ---------------------------------------------------------------------------
# Cross-validation


def fold_assignment(n: int, k_folds: int, seed: int) -> np.ndarray:
    """Fold index per site: a seeded permutation dealt round-robin."""
    if k_folds < 2 or n < k_folds:
        raise DataError(f"need 2 <= k_folds <= n, got k_folds={k_folds}, n={n}")
    perm = _rng(seed).permutation(n)
    folds = np.empty(n, dtype=int)
    folds[perm] = np.arange(n) % k_folds
    return folds


def gaussian_log_score(y, mean, var):
    return -0.5 * (np.log(2.0 * math.pi * var) + (y - mean) ** 2 / var)


def gaussian_crps(y, mean, var):
    """Closed-form CRPS of N(mean, var) at ``y`` (lower is better)."""
    sd = np.sqrt(var)
    z = (y - mean) / sd
    return sd * (z * (2.0 * norm.cdf(z) - 1.0) + 2.0 * norm.pdf(z) - 1.0 / math.sqrt(math.pi))


class ScoreRow(NamedTuple):
    label: str
    status: str
    rmse: Optional[float]
    mean_log_score: Optional[float]
    mean_crps: Optional[float]
    n_predictions: int
    message: str = ""


@dataclass
class Scorecard:
    rows: list
    records: list
    k_folds: int
    seed: int

    def to_dict(self):
        return {
            "k_folds": self.k_folds,
            "seed": self.seed,
            "rows": [{k: _json_float(v) if isinstance(v, float) else v for k, v in r._asdict().items()}
                     for r in self.rows],
            "records": self.records,
        }


def cross_validate(templates, data: Dataset, k_folds: int = 5, config: FitConfig = FitConfig(),
                   seed: int = 0) -> Scorecard:
    """K-fold cross-validation of several kernel templates on one dataset.

    Each template is refitted on every training split and scored on the
    held-out sites with the Gaussian predictive distribution of the noisy
    observation (kriging variance plus nugget). A template whose fit fails
    on any fold is marked ``failed``; the others are unaffected.
    """
    folds = fold_assignment(len(data), k_folds, seed)
    y = data.values
    rows, records = [], []
    for t_idx, template in enumerate(templates):
        mean = np.empty(len(data))
        var = np.empty(len(data))
        try:
            for f in range(k_folds):
                test = np.flatnonzero(folds == f)
                train = np.flatnonzero(folds != f)
                fitted = fit_mle(template, data.subset(train), config)
                model = build_model(fitted.best_spec, data.subset(train))
                m, v = krige_arrays(model, (data.lon[test], data.lat[test]))
                mean[test] = m
                var[test] = np.maximum(v + fitted.best_spec.nugget, 1e-12 * fitted.best_spec.variance)
        except (SphereGPError, np.linalg.LinAlgError) as exc:
            rows.append(ScoreRow(template.label, "failed", None, None, None, 0, str(exc)))
            continue
        ls = gaussian_log_score(y, mean, var)
        cr = gaussian_crps(y, mean, var)
        rows.append(ScoreRow(
            template.label, "ok",
            float(np.sqrt(np.mean((y - mean) ** 2))), float(ls.mean()), float(cr.mean()), len(data),
        ))
        for i in range(len(data)):
            records.append({
                "template": t_idx, "site": i, "fold": int(folds[i]),
                "value": float(y[i]), "mean": float(mean[i]), "variance": float(var[i]),
                "log_score": float(ls[i]), "crps": float(cr[i]),
            })
    return Scorecard(rows, records, k_folds, seed)


# ---------------------------------------------------------------------------
# Empirical covariogram


class CovariogramRow(NamedTuple):
    band: tuple
    lon_lag: tuple
    lat_lag: tuple
    covariance: float  # nan when count == 0
    count: int


def _bin_index(values, edges):
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.where(values == edges[-1], len(edges) - 2, idx)
    return np.where((values < edges[0]) | (values > edges[-1]), -1, idx)


def empirical_covariogram(
    draws,
    sites,
    bands=(-HALF_PI, HALF_PI),
    lon_edges=None,
    lat_edges=None,
) -> list:
    """Moment estimate of covariance binned by longitude and latitude lag.

    The per-site sample covariance of the draws (divisor ``n_draws - 1``)
    is averaged over site pairs ``i < j`` falling in the same bin. A pair is
    assigned to the latitude band holding its mean latitude, to the lon-lag
    bin of its wrapped longitude lag in ``[0, pi]``, and to the lat-lag bin of
    its signed lag ``lat_j - lat_i``. Bins are ``[lo, hi)`` except the last,
    which is closed. Defaults: 12 lon-lag bins over ``[0, pi]`` and 24
    lat-lag bins over ``[-pi, pi]``. Empty bins have ``covariance = nan``.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise DataError("need a (n_draws >= 2, n_sites) array of draws")
    lon, lat = as_lonlat(sites)
    if draws.shape[1] != lon.size:
        raise DataError("draws and sites disagree on the number of sites")
    bands = np.asarray(bands, dtype=float)
    lon_edges = np.linspace(0.0, math.pi, 13) if lon_edges is None else np.asarray(lon_edges, float)
    lat_edges = np.linspace(-math.pi, math.pi, 25) if lat_edges is None else np.asarray(lat_edges, float)

    centered = draws - draws.mean(axis=0)
    cov = centered.T @ centered / (draws.shape[0] - 1)
    i, j = np.triu_indices(lon.size, k=1)
    b = _bin_index(0.5 * (lat[i] + lat[j]), bands)
    p = _bin_index(wrap_lon_lag(lon[i], lon[j]), lon_edges)
    q = _bin_index(lat[j] - lat[i], lat_edges)
    ok = (b >= 0) & (p >= 0) & (q >= 0)
    shape = (bands.size - 1, lon_edges.size - 1, lat_edges.size - 1)
    flat = np.ravel_multi_index((b[ok], p[ok], q[ok]), shape)
    size = int(np.prod(shape))
    counts = np.bincount(flat, minlength=size)
    sums = np.bincount(flat, weights=cov[i[ok], j[ok]], minlength=size)

    rows = []
    for idx in range(size):
        bb, pp, qq = np.unravel_index(idx, shape)
        c = int(counts[idx])
        rows.append(CovariogramRow(
            (float(bands[bb]), float(bands[bb + 1])),
            (float(lon_edges[pp]), float(lon_edges[pp + 1])),
            (float(lat_edges[qq]), float(lat_edges[qq + 1])),
            float(sums[idx] / c) if c else math.nan,
            c,
        ))
    return rows
