"""
Kriging the station network
===========================

Fit-free kriging with a hand-picked axially symmetric kernel on the bundled
synthetic station file. The mean is removed first (the field model is
zero-mean) and added back to the predictions.
"""

import numpy as np

from spheregp import kernels
from spheregp.geometry import GridSpec, grid_lonlat
from spheregp.gp import build_model, krige_arrays
from spheregp.io import bundled_stations_path, read_stations

data = read_stations(bundled_stations_path())
mu = data.values.mean()
centered = data.with_values(data.values - mu)
print(data)

spec = kernels.axisym_exp_product(sigma=4.0, r_iso=0.9, r_lat=0.4, nugget=0.05)
model = build_model(spec, centered)
print(f"log-likelihood {model.log_likelihood:.3f}, jitter used {model.jitter:g}")

###############################################################################
# Predict on a coarse regular grid

lon, lat = grid_lonlat(GridSpec("regular_lonlat", n_lat=7, n_lon=12))
mean, var = krige_arrays(model, (lon, lat))
mean += mu
for la in np.unique(lat):
    row = lat == la
    cells = " ".join(f"{m:6.1f}" for m in mean[row])
    print(f"lat {np.degrees(la):6.1f}  {cells}")

###############################################################################
# Kriging variance is small near stations and returns to the prior far away

print(f"variance range {var.min():.3f} .. {var.max():.3f} (prior {spec.variance:.1f})")

# At a station the latent prediction differs from the noisy value by at
# most a few nugget standard deviations.
m0, v0 = krige_arrays(model, (data.lon[:3], data.lat[:3]))
print("at stations:", np.round(m0 + mu - data.values[:3], 3), np.round(v0, 4))
