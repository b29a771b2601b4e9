"""Microcanonical run of 108-atom copper on the tabulated model.

    python3 demos/nve_copper.py [--steps 200] [--workers 2]
"""

import argparse

from dpcompress import compress_model, gen_model
from dpcompress.md import MDConfig, energy_drift, energy_fluctuation, run_md
from dpcompress.presets import get_preset, reference_config

ap = argparse.ArgumentParser()
ap.add_argument("--steps", type=int, default=200)
ap.add_argument("--workers", type=int, default=1)
args = ap.parse_args()

model = gen_model("copper-like", 0)
tables = compress_model(model, 0.001)
config = reference_config(get_preset("copper-like"), jitter=0.05, seed=7)
md = MDConfig(dt=1.0, n_steps=args.steps, thermo_every=50, seed=3, n_workers=args.workers)

print(f"{'step':>6} {'E_total [eV]':>14} {'T [K]':>8} {'P [bar]':>10}")
res = run_md(config, md, model, tables,
             on_thermo=lambda r, _: print(f"{r.step:>6} {r.etotal:>14.6f} {r.T:>8.1f} {r.P:>10.0f}"))
print(f"{res.n_evaluations} evaluations, {res.n_rebuilds} neighbor-list builds")
print(f"drift {energy_drift(res.energy_history):.1e} and max fluctuation "
      f"{energy_fluctuation(res.energy_history):.1e} of the mean kinetic energy")
