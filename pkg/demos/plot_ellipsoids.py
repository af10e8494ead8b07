"""End-to-end CLI workflow: CSV export, estimation, SVG plot.

Simulates a dataset, writes it in the y,x1..xd,p1..pM CSV interchange
format, then drives the `mixreg estimate` and `mixreg plot` subcommands
to produce demo_output/ellipsoids.svg with one panel per method.
"""

import csv
import json
import os

import numpy as np

from mixreg import experiment_config, gen_sample
from mixreg.cli import main

OUT = "demo_output"
os.makedirs(OUT, exist_ok=True)

cfg = experiment_config(1, n=5000)
s = gen_sample(cfg, np.random.default_rng(3))

data_csv = os.path.join(OUT, "data.csv")
with open(data_csv, "w", newline="") as fh:
    w = csv.writer(fh)
    d, M = s.dims.d, s.dims.M
    w.writerow(["y"] + [f"x{i+1}" for i in range(d)] + [f"p{m+1}" for m in range(M)])
    for j in range(s.dims.n):
        w.writerow(format(v, ".17g") for v in (s.Y[j], *s.X[j], *s.P[j]))

with open(os.path.join(OUT, "estimate.json"), "w") as fh:
    json.dump({"csv": data_csv, "alpha": 0.05}, fh)
main(["estimate", "--config", os.path.join(OUT, "estimate.json"),
      "--output-dir", OUT, "--em"])

with open(os.path.join(OUT, "plot.json"), "w") as fh:
    json.dump({"estimates": os.path.join(OUT, "estimates.json")}, fh)
main(["plot", "--config", os.path.join(OUT, "plot.json"), "--output-dir", OUT])

print(f"see {OUT}/ellipsoids.svg")
