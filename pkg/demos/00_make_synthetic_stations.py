"""
Regenerate the bundled synthetic station file
==============================================

``spheregp/data/synthetic_stations.csv`` mimics a small radiosonde network:
50 stations on a Fibonacci spiral, one value per station at the 500 hPa
level. Values are a draw from an anisotropic axially symmetric field
(longer correlation east-west than north-south) plus a climatological mean
of 250 K, so the file is useful for exercising ``--center``.

Run from the repository root::

    python demos/00_make_synthetic_stations.py
"""

from pathlib import Path

import spheregp
from spheregp import kernels
from spheregp.geometry import GridSpec, grid_lonlat
from spheregp.gp import simulate
from spheregp.io import write_stations

truth = kernels.axisym_exp_product(sigma=4.0, r_iso=0.9, r_lat=0.4, nugget=0.05)
lon, lat = grid_lonlat(GridSpec("fibonacci", n_points=50))
values = 250.0 + simulate(truth, (lon, lat), seed=2019, n_draws=1)[0]

out = Path(spheregp.__file__).parent / "data" / "synthetic_stations.csv"
ids = [f"ST{i + 1:03d}" for i in range(lon.size)]
write_stations(out, lon, lat, values, ids=ids, level="500hPa")
print(f"wrote {out}")
