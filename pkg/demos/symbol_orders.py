"""Defect of the truncated symbol series against the exact amplification matrix.

Prints one table per number of retained terms for the D1Q3 scheme and the
D2Q9 scheme linearized about rest.
"""

from fractions import Fraction

from lbmexpand.expand import taylor_expand_linear
from lbmexpand.fourier import order_check
from lbmexpand.scheme import builtin, linearize

CASES = [
    (builtin("d1q3"), (2.5,)),
    (linearize(builtin("d2q9"), [Fraction(1), 0, 0]), (2.0, 1.3)),
]

for spec, k in CASES:
    lin = taylor_expand_linear(spec, 4)
    print(f"== {spec.name}, k = {k}")
    for m in (1, 2, 3, 4):
        chk = order_check(spec, lin, k, terms=m)
        defects = " ".join(f"{e:9.2e}" for e in chk.defects)
        print(f"  terms={m}  slope={chk.slope:5.2f}  {defects}")
