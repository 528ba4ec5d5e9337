"""
Command-line walkthrough
========================

The same pipeline as the other demos, driven through ``spheregp``
subcommands in a scratch directory. Each call below is equivalent to::

    spheregp fit --data stations.csv --center --kernel-template product.json \\
        --config cfg.json --out model.json
    spheregp predict --model model.json --data stations.csv \\
        --targets "regular:n_lat=5,n_lon=8" --out pred.csv
    spheregp diagnose --kernel product.json --out report.json
"""

import json
import shutil
import tempfile
from pathlib import Path

from spheregp import kernels
from spheregp.cli import main
from spheregp.io import bundled_stations_path

work = Path(tempfile.mkdtemp(prefix="spheregp-demo-"))
shutil.copy(bundled_stations_path(), work / "stations.csv")
(work / "product.json").write_text(json.dumps(kernels.axisym_exp_product(nugget=0.05).to_dict()))
(work / "cfg.json").write_text(json.dumps({"seed": 1, "n_restarts": 2, "fixed_params": ["nugget"]}))


def run(*argv):
    code = main([str(a) for a in argv])
    print(f"$ spheregp {argv[0]} ...  -> exit {code}")
    return code


run("fit", "--data", work / "stations.csv", "--center", "--kernel-template", work / "product.json",
    "--config", work / "cfg.json", "--out", work / "model.json")
model = json.loads((work / "model.json").read_text())
print(f"log-likelihood {model['fit']['log_likelihood']:.3f}, converged {model['fit']['converged']}")

run("predict", "--model", work / "model.json", "--data", work / "stations.csv",
    "--targets", "regular:n_lat=5,n_lon=8", "--out", work / "pred.csv")
print("".join((work / "pred.csv").read_text().splitlines(keepends=True)[:4]))

run("diagnose", "--kernel", work / "product.json", "--out", work / "report.json")
for rep in json.loads((work / "report.json").read_text())["reports"]:
    print(f"  {rep['check_name']:28s} {rep['passed']}")

# A latitude out of range is a data error (exit 2), not a traceback.
(work / "bad.csv").write_text("station_id,lat_deg,lon_deg,value\nA,95,10,1.0\n")
run("fit", "--data", work / "bad.csv", "--kernel-template", work / "product.json", "--out", work / "x.json")

shutil.rmtree(work)
