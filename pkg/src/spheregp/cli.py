"""
Command-line interface: ``spheregp <command> ...``.

Commands
--------
simulate   draw fields on a grid and write them as a station CSV
fit        maximum-likelihood fit of a kernel template to station data
predict    krige a fitted model at target sites
diagnose   run kernel property checks and write a JSON report
crossval   k-fold cross-validation scorecard for several templates

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Set ``SPHEREGP_LOG`` to ``quiet``, ``info`` (default) or ``debug``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import DEFAULT_CHECKS, cross_validate, run_checks
from .exceptions import DataError, KernelSpecError, NumericalError
from .fit import FitConfig, fit_mle
from .geometry import GridSpec, grid_lonlat
from .gp import build_model, krige, simulate
from .io import (
    dump_json,
    file_sha256,
    load_json,
    read_stations,
    read_targets,
    write_predictions,
    write_stations,
)
from .kernels import KernelSpec

log = logging.getLogger("spheregp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _configure_logging():
    level = os.environ.get("SPHEREGP_LOG", "info").lower()
    levels = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level, logging.INFO), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _load_kernel(text) -> KernelSpec:
    return KernelSpec.from_dict(load_json(text))


def _load_dataset(path, allow_nugget, center):
    data = read_stations(path, allow_nugget=allow_nugget)
    mean = float(np.mean(data.values)) if center else 0.0
    if center:
        data = data.with_values(data.values - mean)
    return data, mean


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(args):
    spec = _load_kernel(args.kernel)
    lon, lat = grid_lonlat(GridSpec.parse(args.grid))
    draws = simulate(spec, (lon, lat), args.seed, args.draws)
    write_stations(args.out, lon, lat, draws[0] if args.draws == 1 else draws)
    log.info("wrote %d draw(s) at %d sites to %s", args.draws, lon.size, args.out)
    return EXIT_OK


def cmd_fit(args):
    template = _load_kernel(args.kernel_template)
    config = FitConfig.from_dict(load_json(args.config)) if args.config else FitConfig()
    data, mean = _load_dataset(args.data, args.allow_nugget, args.center)
    result = fit_mle(template, data, config)
    log.info("fit %s: logL=%.6f converged=%s", template.label, result.log_likelihood, result.converged)
    dump_json({
        "model": {
            "kernel": result.best_spec.to_dict(),
            "data_path": str(args.data),
            "data_sha256": file_sha256(args.data),
            "center": bool(args.center),
            "mean": mean,
            "allow_nugget": bool(args.allow_nugget),
        },
        "config": config.to_dict(),
        "fit": result.to_dict(),
    }, args.out)
    return EXIT_OK


def cmd_predict(args):
    obj = load_json(args.model)
    model = obj.get("model") if isinstance(obj, dict) else None
    if not isinstance(model, dict) or "kernel" not in model:
        raise DataError(f"{args.model}: not a fitted model file")
    digest = file_sha256(args.data)
    if model.get("data_sha256") and model["data_sha256"] != digest:
        raise DataError(f"{args.data} does not match the dataset the model was fitted on (hash mismatch)")
    spec = KernelSpec.from_dict(model["kernel"])
    data, mean = _load_dataset(args.data, model.get("allow_nugget", False), model.get("center", False))
    if Path(args.targets).is_file():
        targets = read_targets(args.targets)
    else:
        targets = grid_lonlat(GridSpec.parse(args.targets))
    gpm = build_model(spec, data)
    results = [(m + mean, v) for m, v in krige(gpm, targets)]
    write_predictions(args.out, targets, results)
    log.info("wrote %d predictions to %s", len(results), args.out)
    return EXIT_OK


def cmd_diagnose(args):
    spec = _load_kernel(args.kernel)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    reports = run_checks(spec, checks, seed=args.seed)
    dump_json({
        "kernel": spec.to_dict(),
        "seed": args.seed,
        "all_passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }, args.out)
    for r in reports:
        log.info("%-26s %s  statistic=%.3g threshold=%.3g", r.check_name, "PASS" if r.passed else "FAIL",
                 r.statistic, r.threshold)
    return EXIT_OK


def cmd_crossval(args):
    raw = load_json(args.templates)
    if not isinstance(raw, list) or not raw:
        raise DataError("--templates must be a non-empty JSON list of kernel specs")
    templates = [KernelSpec.from_dict(t) for t in raw]
    config = FitConfig.from_dict(load_json(args.config)) if args.config else FitConfig()
    data, _ = _load_dataset(args.data, args.allow_nugget, args.center)
    card = cross_validate(templates, data, args.folds, config, seed=args.seed)
    dump_json(card.to_dict(), args.out)
    for row in card.rows:
        log.info("%-45s %s log-score=%s", row.label, row.status, row.mean_log_score)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="spheregp", description="Gaussian-process geostatistics on the sphere.")
    p.add_argument("--version", action="version", version=f"spheregp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate fields on a grid")
    s.add_argument("--kernel", required=True, help="kernel JSON (file or inline)")
    s.add_argument("--grid", required=True, help='e.g. "fibonacci:n_points=50" or "reduced:n_lat=16,n_lon=27"')
    s.add_argument("--seed", type=_u64, required=True)
    s.add_argument("--draws", type=_positive_int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    def data_flags(q):
        q.add_argument("--data", required=True, help="station CSV")
        q.add_argument("--center", action="store_true", help="subtract the sample mean before fitting")
        q.add_argument("--allow-nugget", action="store_true", help="keep stations sharing coordinates")

    f = sub.add_parser("fit", help="maximum-likelihood fit")
    f.add_argument("--kernel-template", required=True)
    f.add_argument("--config", help="FitConfig JSON")
    f.add_argument("--out", required=True)
    data_flags(f)
    f.set_defaults(func=cmd_fit)

    r = sub.add_parser("predict", help="krige a fitted model")
    r.add_argument("--model", required=True, help="JSON written by 'fit'")
    r.add_argument("--data", required=True)
    r.add_argument("--targets", required=True, help="CSV with lon_deg,lat_deg or a grid spec")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_predict)

    d = sub.add_parser("diagnose", help="kernel property checks")
    d.add_argument("--kernel", required=True)
    d.add_argument("--checks", default=",".join(DEFAULT_CHECKS))
    d.add_argument("--seed", type=_u64, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_diagnose)

    c = sub.add_parser("crossval", help="k-fold cross-validation")
    c.add_argument("--templates", required=True, help="JSON list of kernel templates")
    c.add_argument("--folds", type=int, default=5)
    c.add_argument("--seed", type=_u64, default=0)
    c.add_argument("--config", help="FitConfig JSON")
    c.add_argument("--out", required=True)
    data_flags(c)
    c.set_defaults(func=cmd_crossval)
    return p


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (DataError, KernelSpecError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except NumericalError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
