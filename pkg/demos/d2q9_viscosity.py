"""Derive the D2Q9 equivalent equations and print the viscosities.

Usage: python demos/d2q9_viscosity.py [out.tex]
"""

import sys

from lbmexpand.expand import taylor_expand
from lbmexpand.render import to_text
from lbmexpand.report import expansion_latex, transport_coefficients
from lbmexpand.scheme import builtin


def main(argv):
    spec = builtin("d2q9")
    exp = taylor_expand(spec, 2)
    names = spec.naming()
    for k, v in transport_coefficients(exp).items():
        print(f"{k:>5} = {to_text(v, names)}")
    print(f"Gamma_1[Jx] = {to_text(exp.gammas[0][1], names)}")
    if argv:
        with open(argv[0], "w") as fh:
            fh.write(expansion_latex(exp))
        print(f"LaTeX written to {argv[0]}")


if __name__ == "__main__":
    main(sys.argv[1:])
