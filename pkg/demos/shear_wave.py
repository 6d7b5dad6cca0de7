"""Shear-wave decay on D2Q9 for a few grids and relaxation rates.

Usage: python demos/shear_wave.py [resolution ...]   (default 32 64)
"""

import sys

from lbmexpand.scheme import builtin
from lbmexpand.sim import shear_wave_benchmark

spec = builtin("d2q9")
sizes = [int(x) for x in sys.argv[1:]] or [32, 64]
print(f"{'n':>5} {'sigma_x':>8} {'measured nu':>14} {'predicted nu':>14} {'rel err':>10} {'R^2':>9}")
for n in sizes:
    for sx in (0.3, 0.5, 0.8):
        r = shear_wave_benchmark(spec, n, 1e-3, {"sigma_x": sx})
        print(f"{n:5d} {sx:8.2f} {r.measured:14.8e} {r.predicted:14.8e} {r.rel_error:10.2e} {r.r2:9.6f}")
