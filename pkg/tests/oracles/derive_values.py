"""Recompute the frozen reference values in ``tests/frozen.py``.

Uses only the standard library (exact rationals where possible) so it shares
no code with the package. Run ``python tests/oracles/derive_values.py``.
"""

import math
from fractions import Fraction as Fr


def swap(f1, f2):
    # Werner parameters multiply under a swap
    x = (4 * f1 - 1) / 3 * ((4 * f2 - 1) / 3)
    return Fr(1, 4) + Fr(3, 4) * x


def chain(fs):
    out = fs[0]
    for f in fs[1:]:
        out = swap(out, f)
    return out


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def main():
    vals = {}
    vals["swap_09_09"] = float(swap(Fr(9, 10), Fr(9, 10)))
    vals["chain_095_x3"] = float(chain([Fr(95, 100)] * 3))
    vals["multiplexed_01_10"] = 1 - 0.9 ** 10
    vals["e2e_095_098_095"] = float(chain([Fr(95, 100), Fr(98, 100), Fr(95, 100)]))
    vals["h2_01"] = h2(0.1)
    vals["keyfrac_09"] = 1 - 2 * h2(0.1)
    vals["h2_025"] = h2(0.25)
    vals["feff_09_095"] = float((9 * Fr(9, 10) - Fr(95, 100) - 2) / (4 * Fr(95, 100) - 1))
    fl = Fr(1, 4) + Fr(3, 4) * ((4 * Fr(98, 100) - 1) / 3) ** 2
    vals["g_098_098_l2"] = float(Fr(17, 10) - (4 * fl * fl - 2 * fl))
    # symmetric closed forms: x^(l1+l2) = (4/9)(1/4 + f_eff), eta^(l1+l2) = eta_Th / eta*
    x = (4 / 9 * (0.25 + 1.7)) ** 0.25
    vals["sym_fidelity_l2"] = (1 + 3 * x) / 4
    x1 = (4 / 9 * (0.25 + 1.7)) ** 0.5
    vals["sym_fidelity_l1"] = (1 + 3 * x1) / 4
    vals["sym_probability_l2"] = 0.016 ** 0.25
    # probability at which 1e6 * eta * (1 - 2 h(0.1)) reaches 1e3
    vals["qkd_crossing"] = 1e3 / (1e6 * (1 - 2 * h2(0.1)))
    vals["keyrate_inter_098"] = 1e6 * 0.25 * (1 - 2 * h2(1 - float(chain([Fr(98, 100), Fr(1), Fr(98, 100)]))))
    for k in sorted(vals):
        print(f"{k} = {vals[k]!r}")


if __name__ == "__main__":
    main()
