"""
Maximum-likelihood fitting of kernel parameters.

The search runs a Nelder-Mead simplex in an unconstrained space: positive
parameters are log-transformed, and the two intrinsically bounded ones
(powered-exponential exponents in (0, 1] and the nugget in [0, 10 sigma])
are logit-transformed. Parameter boxes are enforced on decoding. Several
restarts are run from jittered copies of a moment-based starting point and
the best one wins.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import expit, logit

from .exceptions import DataError, FitError, KernelSpecError
from .gp import Dataset, log_likelihood
from .kernels import NUGGET_MAX_RATIO, KernelSpec, PairGeometry, param_vector, set_params

log = logging.getLogger(__name__)

_LOGIT_CLIP = 40.0


# ---------------------------------------------------------------------------
# Nelder-Mead


class SimplexResult(NamedTuple):
    x: np.ndarray
    fun: float
    n_evals: int
    n_iters: int
    converged: bool
    trace: list


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0,
    step: float = 0.5,
    max_iters: int = 500,
    tol_f: float = 1e-8,
) -> SimplexResult:
    """Minimize ``f`` with the Nelder-Mead simplex method.

    ``f`` may return ``inf`` for infeasible points; they are simply ranked
    last. The run is declared converged when, over the last full cycle of
    ``dim + 1`` iterations, both the improvement of the best value and the
    spread between best and worst vertex are below
    ``tol_f * max(|f_best|, 1)``.

    ``trace`` holds ``(iteration, best value so far)``.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    n_evals = 0

    def call(x):
        nonlocal n_evals
        n_evals += 1
        v = f(x)
        return v if math.isfinite(v) else math.inf

    simplex = np.vstack([x0] + [x0 + step * e for e in np.eye(dim)])
    fvals = np.array([call(x) for x in simplex])
    if dim == 0:
        return SimplexResult(x0, fvals[0], n_evals, 0, True, [(0, fvals[0])])

    trace = []
    cycle_best = fvals.min()
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        fb, fs, fw = fvals[0], fvals[-2], fvals[-1]
        centroid = simplex[:-1].mean(axis=0)
        xw = simplex[-1]

        xr = centroid + (centroid - xw)
        fr = call(xr)
        if fr < fb:
            xe = centroid + 2.0 * (centroid - xw)
            fe = call(xe)
            simplex[-1], fvals[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fw:
                xc = centroid + 0.5 * (xr - centroid)
                fc = call(xc)
                accept = fc <= fr
            else:
                xc = centroid + 0.5 * (xw - centroid)
                fc = call(xc)
                accept = fc < fw
            if accept:
                simplex[-1], fvals[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                fvals[1:] = [call(x) for x in simplex[1:]]

        best = fvals.min()
        trace.append((it, float(best)))
        if it % (dim + 1) == 0 and math.isfinite(best):
            scale = max(abs(best), 1.0)
            spread = fvals.max() - best
            if cycle_best - best <= tol_f * scale and spread <= tol_f * scale:
                converged = True
                break
            cycle_best = best

    i = int(np.argmin(fvals))
    return SimplexResult(simplex[i].copy(), float(fvals[i]), n_evals, it, converged, trace)


# ---------------------------------------------------------------------------
# Parameter transform


class ParamTransform:
    """Map the free parameters of a template to and from unconstrained space."""

    def __init__(self, template: KernelSpec, fixed=()):
        self.template = template
        self.params = param_vector(template)
        names = [p.name for p in self.params]
        unknown = set(fixed) - set(names)
        if unknown:
            raise KernelSpecError(f"fixed_params not in {template.label}: {sorted(unknown)}")
        self.names = names
        self.free = [i for i, n in enumerate(names) if n not in fixed]
        self._sigma_idx = names.index("sigma") if "sigma" in names else None

    @property
    def free_names(self):
        return [self.names[i] for i in self.free]

    @staticmethod
    def _kind(name):
        if name == "nugget" or name.startswith("alpha"):
            return "logit"
        return "log"

    def _nugget_cap(self, values):
        sigma = values[self._sigma_idx] if self._sigma_idx is not None else 1.0
        return NUGGET_MAX_RATIO * sigma

    def encode(self, values) -> np.ndarray:
        """Full parameter list -> unconstrained vector of the free ones."""
        values = [float(v) for v in values]
        out = []
        for i in self.free:
            name, v = self.names[i], values[i]
            if self._kind(name) == "log":
                out.append(math.log(v))
            else:
                frac = v / self._nugget_cap(values) if name == "nugget" else v
                with np.errstate(divide="ignore"):
                    out.append(float(np.clip(logit(frac), -_LOGIT_CLIP, _LOGIT_CLIP)))
        return np.array(out)

    def decode(self, u) -> list:
        """Unconstrained vector -> full parameter list (fixed ones from the template)."""
        values = [p.value for p in self.params]
        for k, i in enumerate(self.free):
            p = self.params[i]
            if self._kind(p.name) == "log":
                values[i] = float(np.clip(math.exp(min(u[k], 700.0)), p.lower, p.upper))
            else:
                frac = float(expit(np.clip(u[k], -_LOGIT_CLIP, _LOGIT_CLIP)))
                values[i] = frac * self._nugget_cap(values) if p.name == "nugget" else frac
        return values

    def to_spec(self, u) -> KernelSpec:
        return set_params(self.template, self.decode(u))


# ---------------------------------------------------------------------------
# Fitting


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 500
    tol_f: float = 1e-8
    n_restarts: int = 4
    seed: int = 0
    fixed_params: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not all(isinstance(v, (int, float)) for v in (self.max_iters, self.tol_f, self.n_restarts, self.seed)):
            raise DataError("FitConfig numeric fields must be numbers")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise DataError("max_iters must be an integer >= 1")
        if not self.tol_f > 0:
            raise DataError("tol_f must be > 0")
        if int(self.n_restarts) != self.n_restarts or self.n_restarts < 1:
            raise DataError("n_restarts must be an integer >= 1")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DataError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "fixed_params", frozenset(self.fixed_params))

    def to_dict(self):
        return {
            "max_iters": self.max_iters,
            "tol_f": self.tol_f,
            "n_restarts": self.n_restarts,
            "seed": self.seed,
            "fixed_params": sorted(self.fixed_params),
        }

    @classmethod
    def from_dict(cls, obj):
        unknown = set(obj) - {"max_iters", "tol_f", "n_restarts", "seed", "fixed_params"}
        if unknown:
            raise DataError(f"unknown FitConfig fields: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise DataError(f"bad FitConfig: {exc}") from None


@dataclass(frozen=True, eq=False)
class FitResult:
    best_spec: KernelSpec
    log_likelihood: float
    n_evals: int
    converged: bool
    trace: list
    restart_results: list
    n_params: int
    data_fingerprint: str = ""

    @property
    def aic(self) -> float:
        return 2.0 * self.n_params - 2.0 * self.log_likelihood

    def to_dict(self):
        return {
            "best_spec": self.best_spec.to_dict(),
            "log_likelihood": self.log_likelihood,
            "n_evals": self.n_evals,
            "converged": self.converged,
            "trace": [[i, v] for i, v in self.trace],
            "restart_results": self.restart_results,
            "n_params": self.n_params,
            "data_fingerprint": self.data_fingerprint,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            KernelSpec.from_dict(obj["best_spec"]),
            float(obj["log_likelihood"]),
            int(obj["n_evals"]),
            bool(obj["converged"]),
            [(int(i), float(v)) for i, v in obj["trace"]],
            list(obj["restart_results"]),
            int(obj["n_params"]),
            obj.get("data_fingerprint", ""),
        )


def _median_offdiag(m):
    n = m.shape[0]
    if n < 2:
        return None
    return float(np.median(m[np.triu_indices(n, k=1)]))


def initial_values(template: KernelSpec, data: Dataset, geom: Optional[PairGeometry] = None) -> list:
    """Moment-based starting point for every parameter of ``template``.

    sigma from the sample variance, ranges from median pairwise lags,
    nugget at 1e-3 sigma. Values are clipped into the fitting box.
    """
    if geom is None:
        geom = PairGeometry.outer(data.lon, data.lat, data.lon, data.lat)
    y = data.values
    sigma0 = float(np.var(y)) if y.size > 1 else float(y[0] ** 2)
    if not sigma0 > 1e-8:
        sigma0 = 1.0
    guesses = {
        "sigma": sigma0,
        "r_iso": _median_offdiag(geom.dist),
        "r_lat": _median_offdiag(np.broadcast_to(geom.dlat, geom.shape)),
        "r_lon": _median_offdiag(geom.dlon),
        "alpha": 0.9,
        "alpha_lat": 0.9,
        "nu": 1.0,
        "nugget": 1e-3 * sigma0,
    }
    out = []
    sigma = sigma0
    for p in param_vector(template):
        g = guesses.get(p.name)
        if g is None or not g > 0:
            g = 1.0
        if p.name == "sigma":
            sigma = g
        hi = NUGGET_MAX_RATIO * sigma if p.name == "nugget" else p.upper
        out.append(float(min(max(g, p.lower if p.lower > 0 else 1e-12), hi)))
    return out


def fit_mle(template: KernelSpec, data: Dataset, config: FitConfig = FitConfig(), initial=None) -> FitResult:
    """Fit the free parameters of ``template`` to ``data`` by maximum likelihood.

    Parameters listed in ``config.fixed_params`` keep the template's values.
    The others start from :func:`initial_values` (or from ``initial``, a
    spec of the same shape) on restart 0 and from Gaussian perturbations of
    scale 0.5 in transformed space on later restarts.

    Raises
    ------
    FitError
        If every restart only ever saw parameters with a non-positive-definite
        covariance.
    """
    if not template.is_spherical:
        raise KernelSpecError(f"{template.family} cannot be fitted to sphere data")
    geom = PairGeometry.outer(data.lon, data.lat, data.lon, data.lat)
    transform = ParamTransform(template, config.fixed_params)

    start = initial_values(template, data, geom)
    if initial is not None:
        start = [p.value for p in param_vector(initial)]
    for i, p in enumerate(transform.params):
        if i not in transform.free:
            start[i] = p.value
    u0 = transform.encode(start)

    def objective(u):
        try:
            spec = transform.to_spec(u)
        except KernelSpecError:
            # a fixed nugget can exceed the 10 * sigma cap for small sigma
            return math.inf
        return -log_likelihood(spec, data, geom)

    rng = np.random.Generator(np.random.Philox(config.seed))
    runs = []
    for r in range(config.n_restarts):
        ur = u0 if r == 0 else u0 + rng.normal(0.0, 0.5, u0.size)
        res = nelder_mead(objective, ur, max_iters=config.max_iters, tol_f=config.tol_f)
        runs.append(res)
        log.debug("restart %d: -logL=%.6g evals=%d converged=%s", r, res.fun, res.n_evals, res.converged)

    finite = [i for i, r in enumerate(runs) if math.isfinite(r.fun)]
    if not finite:
        raise FitError(f"every restart of {template.label} stayed in non-positive-definite regions")
    best_idx = min(finite, key=lambda i: (runs[i].fun, i))
    best = runs[best_idx]
    best_spec = transform.to_spec(best.x)
    ll = log_likelihood(best_spec, data)

    summaries = []
    for i, r in enumerate(runs):
        values = transform.decode(r.x)
        summaries.append({
            "restart": i,
            "log_likelihood": -r.fun if math.isfinite(r.fun) else None,
            "n_evals": r.n_evals,
            "converged": r.converged,
            "params": dict(zip(transform.names, values)),
        })
    return FitResult(
        best_spec=best_spec,
        log_likelihood=ll,
        n_evals=sum(r.n_evals for r in runs),
        converged=best.converged,
        trace=[(i, -v) for i, v in best.trace],
        restart_results=summaries,
        n_params=len(transform.free),
        data_fingerprint=data.fingerprint(),
    )


class ComparisonRow(NamedTuple):
    label: str
    log_likelihood: float
    n_params: int
    aic: float


def profile_compare(results) -> list:
    """Rank fitted models by AIC (ascending; ties: fewer parameters, then label)."""
    results = list(results)
    prints = {r.data_fingerprint for r in results}
    if len(prints) > 1:
        raise DataError("profile_compare needs fits on the same dataset")
    rows = [ComparisonRow(r.best_spec.label, r.log_likelihood, r.n_params, r.aic) for r in results]
    return sorted(rows, key=lambda row: (row.aic, row.n_params, row.label))
