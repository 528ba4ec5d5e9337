"""Gaussian-process geostatistics on the sphere with axially symmetric kernels."""

from .exceptions import (
    DataError,
    FitError,
    KernelSpecError,
    NotPositiveDefiniteError,
    NumericalError,
    PoleUndefinedError,
    SphereGPError,
)
from .geometry import GridSpec, Point2D, SpherePoint, generate_grid, great_circle_distance
from .gp import Dataset, GpModel, build_model, krige, log_likelihood, observation_covariance, simulate
from .kernels import KernelSpec, axisym_exp_product, make_axisym_product
from .fit import FitConfig, FitResult, fit_mle, profile_compare

__version__ = "0.1.0"

__all__ = [
    "DataError", "FitError", "KernelSpecError", "NotPositiveDefiniteError", "NumericalError",
    "PoleUndefinedError", "SphereGPError", "GridSpec", "Point2D", "SpherePoint", "generate_grid",
    "great_circle_distance", "Dataset", "GpModel", "build_model", "krige", "log_likelihood",
    "observation_covariance", "simulate", "KernelSpec", "axisym_exp_product", "make_axisym_product", "FitConfig",
    "FitResult", "fit_mle", "profile_compare",
]
