"""Energy and force error of tabulated copper against the exact network.

    python3 demos/tabulation_accuracy.py [--configs 10]
"""

import argparse

from dpcompress import gen_model
from dpcompress.validate import validate

ap = argparse.ArgumentParser()
ap.add_argument("--configs", type=int, default=10)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

model = gen_model("copper-like", args.seed)
rep = validate(model, (0.1, 0.05, 0.01, 0.005, 0.001), n_configs=args.configs, seed=args.seed)
print(f"{'h':>7} {'RMSE_E [eV/atom]':>17} {'RMSE_F [eV/A]':>15}")
for h, e, f in rep.rows():
    print(f"{h:>7g} {e:>17.3e} {f:>15.3e}")
print(f"log-log slopes: energy {rep.slope_e:.2f}, force {rep.slope_f:.2f}")
# Values converge as h^6 and derivatives as h^5, so forces trail energies by one order.
