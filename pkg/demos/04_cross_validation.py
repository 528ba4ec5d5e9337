"""
Cross-validated scoring
=======================

Held-out predictive performance complements AIC. Every template is refitted
on each training split and scored on the held-out stations with RMSE, the
mean Gaussian log predictive density (higher is better) and the CRPS
(lower is better).
"""

from spheregp import kernels
from spheregp.diagnostics import cross_validate
from spheregp.fit import FitConfig
from spheregp.io import bundled_stations_path, read_stations

data = read_stations(bundled_stations_path())
data = data.with_values(data.values - data.values.mean())

templates = [kernels.iso_exponential(nugget=0.1), kernels.axisym_exp_product(nugget=0.1)]
card = cross_validate(templates, data, k_folds=5, config=FitConfig(seed=0, n_restarts=1), seed=0)

print(f"{'template':48s} {'status':6s} {'rmse':>7s} {'logscore':>9s} {'crps':>7s}")
for r in card.rows:
    if r.status == "ok":
        print(f"{r.label:48s} {r.status:6s} {r.rmse:7.3f} {r.mean_log_score:9.3f} {r.mean_crps:7.3f}")
    else:
        print(f"{r.label:48s} {r.status:6s} {r.message}")
