"""Fused versus dense descriptor: agreement, work skipped and memory held.

    python3 demos/fused_descriptor.py
"""

import tracemalloc

import numpy as np

from dpcompress import build_neighbor_list, compress_model, gen_config, gen_model
from dpcompress.envmat import build_environment_matrix
from dpcompress.evaluate import dense_descriptor
from dpcompress.fused import flop_report, fused_descriptor

model = gen_model("copper-like", 0)
tables = compress_model(model, 0.001)
config = gen_config("fcc", 3.634, (3, 3, 3), jitter=0.1, seed=1)
env = build_environment_matrix(config, build_neighbor_list(config, model.rcut), model)


def peak(fn, *args):
    tracemalloc.start()
    out = fn(*args)
    size = tracemalloc.get_traced_memory()[1]
    tracemalloc.stop()
    return out, size


(Df, ws), fused_mem = peak(fused_descriptor, env, tables, model.M_lt)
(Dd, _, _), dense_mem = peak(dense_descriptor, env, [t.evaluate for t in tables], model.M_lt)

print(f"atoms {len(env)}, padded width N_m {env.nmax}, real neighbors {int(env.n_real.sum())}")
print(f"max |D_fused - D_dense| / max |D| = {np.abs(Df - Dd).max() / np.abs(Dd).max():.1e}")
print(f"table rows evaluated: fused {ws.n_evals}, dense {env.nmax * len(env)}")
print(f"peak memory: fused {fused_mem / 2**20:.1f} MiB, dense {dense_mem / 2**20:.1f} MiB")
r = flop_report(len(env), env.nmax, model.d1)
print(f"embedding FLOPs per row: network {r['original'] // (len(env) * env.nmax)}, "
      f"table {r['tabulated'] // (len(env) * env.nmax)} ({100 * r['savings']:.2f}% saved)")
