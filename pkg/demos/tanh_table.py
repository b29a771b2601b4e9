"""Accuracy of the piecewise-quadratic tanh table.

    python3 demos/tanh_table.py
"""

import numpy as np

from dpcompress.compress import build_tanh_table, eval_tanh

x = np.linspace(-8.0, 8.0, 1_000_000)
for k in (6, 8, 10):
    table = build_tanh_table(2.0 ** -k)
    err = np.abs(eval_tanh(table, x) - np.tanh(x)).max()
    print(f"h = 2^-{k:<3} intervals {table.n:>5}  max error {err:.2e}")
table = build_tanh_table()
print("odd symmetry exact:", bool(np.array_equal(eval_tanh(table, -x), -eval_tanh(table, x))))
print("tanh(8) kept:", eval_tanh(table, 8.0), " beyond 8:", eval_tanh(table, 8.0 + 1e-12))
