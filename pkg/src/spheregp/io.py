"""
CSV and JSON input/output.

Station CSV
    ``station_id,lat_deg,lon_deg,value[,level]`` with a header line, UTF-8,
    comma separated, ``.`` decimals. ``level`` is opaque metadata.
Prediction CSV
    ``lon_deg,lat_deg,mean,variance``.

Degrees live only in files; everything returned is in radians. Numbers are
written with 12 significant digits using Python's locale-independent
formatting, one ``\\n`` per line.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import DataError
from .geometry import SpherePoint, as_lonlat
from .gp import Dataset

STATION_HEADER = ["station_id", "lat_deg", "lon_deg", "value"]
PREDICTION_HEADER = ["lon_deg", "lat_deg", "mean", "variance"]


def fmt(v: float) -> str:
    return f"{float(v):.12g}"


class StationRecord(NamedTuple):
    station_id: str
    lat_deg: float
    lon_deg: float
    value: float
    level: Optional[str] = None


def _float(text, what, line):
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"line {line}: {what} is not a number: {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"line {line}: {what} is not finite")
    return v


def read_station_records(path) -> list:
    """Parse and validate a station CSV into :class:`StationRecord` rows."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header not in (STATION_HEADER, STATION_HEADER + ["level"]):
            raise DataError(f"{path}: line 1: expected header {','.join(STATION_HEADER)}[,level], got {','.join(header)}")
        width = len(header)
        records, keys = [], set()
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise DataError(f"{path}: line {line}: expected {width} fields, got {len(row)}")
            sid = row[0].strip()
            if not sid:
                raise DataError(f"{path}: line {line}: empty station_id")
            lat = _float(row[1], "lat_deg", line)
            lon = _float(row[2], "lon_deg", line)
            value = _float(row[3], "value", line)
            if not -90.0 <= lat <= 90.0:
                raise DataError(f"{path}: line {line}: lat_deg {lat} outside [-90, 90]")
            if not -180.0 <= lon <= 180.0:
                raise DataError(f"{path}: line {line}: lon_deg {lon} outside [-180, 180]")
            level = row[4].strip() if width == 5 else None
            if (sid, level) in keys:
                raise DataError(f"{path}: line {line}: duplicate station {sid!r} at level {level!r}")
            keys.add((sid, level))
            records.append(StationRecord(sid, lat, lon, value, level))
    if not records:
        raise DataError(f"{path}: no data rows")
    return records


def read_stations(path, allow_nugget: bool = False) -> Dataset:
    """Load a station CSV as a :class:`Dataset` (radians).

    Two rows at the same coordinates are an error unless ``allow_nugget``;
    such data can only be modelled with a positive nugget.
    """
    records = read_station_records(path)
    points = [SpherePoint.from_degrees(r.lon_deg, r.lat_deg) for r in records]
    if not allow_nugget:
        seen = {}
        for r, p in zip(records, points):
            if p in seen:
                raise DataError(
                    f"{path}: station {r.station_id!r} duplicates the site of {seen[p]!r} "
                    "(use --allow-nugget to keep both)"
                )
            seen[p] = r.station_id
    return Dataset(points, [r.value for r in records], name=Path(path).stem)


def write_stations(path, lon, lat, values, ids=None, level=None):
    """Write sites (radians) and one or more value columns as a station CSV.

    ``values`` may be 1-d (one ``value`` column) or ``(n_draws, n_sites)``,
    in which case the columns are ``value_0, value_1, ...``.
    """
    values = np.asarray(values, dtype=float)
    lon, lat = as_lonlat((np.asarray(lon, float), np.asarray(lat, float)))
    if ids is None:
        ids = [f"S{i:04d}" for i in range(lon.size)]
    if values.ndim == 1:
        cols, table = ["value"], values[:, None]
    else:
        cols = [f"value_{k}" for k in range(values.shape[0])]
        table = values.T
    header = ["station_id", "lat_deg", "lon_deg"] + cols + (["level"] if level is not None else [])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(lon.size):
            row = [ids[i], fmt(math.degrees(lat[i])), fmt(math.degrees(lon[i]))]
            row += [fmt(v) for v in table[i]]
            if level is not None:
                row.append(level)
            w.writerow(row)


def read_targets(path):
    """``(lon, lat)`` in radians from any CSV with ``lon_deg`` and ``lat_deg`` columns."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"lon_deg", "lat_deg"} <= {f.strip() for f in reader.fieldnames}:
            raise DataError(f"{path}: needs lon_deg and lat_deg columns")
        lon, lat = [], []
        for row in reader:
            row = {k.strip(): v for k, v in row.items()}
            line = reader.line_num
            lo = _float(row["lon_deg"], "lon_deg", line)
            la = _float(row["lat_deg"], "lat_deg", line)
            if not (-180.0 <= lo <= 180.0 and -90.0 <= la <= 90.0):
                raise DataError(f"{path}: line {line}: coordinate out of range")
            lon.append(math.radians(lo))
            lat.append(math.radians(la))
    return as_lonlat((np.array(lon), np.array(lat)))


def write_predictions(path, targets, results):
    """Write ``lon_deg,lat_deg,mean,variance`` rows in target order."""
    lon, lat = as_lonlat(targets)
    results = list(results)
    if len(results) != lon.size:
        raise DataError(f"{lon.size} targets but {len(results)} predictions")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_HEADER)
        for lo, la, (mean, var) in zip(lon, lat, results):
            w.writerow([fmt(math.degrees(lo)), fmt(math.degrees(la)), fmt(mean), fmt(var)])


def read_predictions(path) -> list:
    """Rows of a prediction CSV as tuples of floats."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PREDICTION_HEADER:
            raise DataError(f"{path}: not a prediction file")
        return [tuple(float(v) for v in row) for row in reader]


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_json(text_or_path):
    """Parse inline JSON (starting with ``{`` or ``[``) or read a JSON file."""
    text = str(text_or_path).strip()
    try:
        if text[:1] in "{[":
            return json.loads(text)
        return json.loads(Path(text).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON in {text_or_path!r}: {exc}") from None


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def bundled_stations_path() -> Path:
    """Path of the bundled 50-station synthetic CSV (radiosonde-shaped)."""
    from importlib.resources import files

    return Path(str(files("spheregp") / "data" / "synthetic_stations.csv"))
