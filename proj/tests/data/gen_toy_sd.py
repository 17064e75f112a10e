#!/usr/bin/env python3
"""Generate the rotationally invariant single-j toy interaction used by the tests.

One j = 5/2 orbital per species (12 modes). The two-body force is a scalar
sum of angular-momentum projectors V = sum_J V_J sum_M |JM><JM| with
species-dependent strengths, so every matrix element comes out of
Clebsch-Gordan coefficients and the ground state carries exact rotational
degeneracies. Antisymmetrized m-scheme elements feed the TBME directive
directly: vbar_abcd = M_abcd - M_abdc.
"""

from fractions import Fraction

import sympy
from sympy.physics.quantum.cg import CG

J2 = Fraction(5, 2)  # single-particle j

# Projector strengths per total J: pairing inside each species plus a
# quadrupole-like proton-neutron attraction.
V_PP = {0: -1.5}
V_NN = {0: -1.5}
V_PN = {0: -0.4, 2: -0.9, 4: 0.6}

MS = [Fraction(5, 2), Fraction(3, 2), Fraction(1, 2), Fraction(-1, 2), Fraction(-3, 2), Fraction(-5, 2)]


def mode_index(species, m):
    return (0 if species == "p" else 6) + MS.index(m)


def cg(m1, m2, j, m):
    return float(CG(sympy.Rational(5, 2), sympy.Rational(m1), sympy.Rational(5, 2),
                    sympy.Rational(m2), int(j), sympy.Rational(m)).doit())


def strengths(sa, sb):
    if sa == "p" and sb == "p":
        return V_PP
    if sa == "n" and sb == "n":
        return V_NN
    return V_PN


def pair_element(a, b, c, d):
    """<ab|V|cd> for product states, species-aware, no antisymmetrization."""
    (sa, ma), (sb, mb), (sc, mc), (sd, md) = a, b, c, d
    if sorted([sa, sb]) != sorted([sc, sd]):
        return 0.0
    if ma + mb != mc + md:
        return 0.0
    v = strengths(sa, sb)
    # The bra and ket pair couplings must refer to the same species order.
    if (sa, sb) != (sc, sd):
        return 0.0
    total = 0.0
    m = ma + mb
    for j, vj in v.items():
        if abs(m) > j:
            continue
        total += vj * cg(ma, mb, j, m) * cg(mc, md, j, m)
    return total


def main():
    states = [("p", m) for m in MS] + [("n", m) for m in MS]
    lines = ["# single-j toy: one 0d5/2 orbital per species, scalar projector force"]
    for sp, m in states:
        lines.append(f"MODE {mode_index(sp, m)} 5 {int(2 * m)} {-1 if sp == 'p' else 1} d52{sp}")
    seen = set()
    for ia, a in enumerate(states):
        for ib, b in enumerate(states):
            if ib <= ia:
                continue
            for ic, c in enumerate(states):
                for idx, d in enumerate(states):
                    if idx <= ic:
                        continue
                    if (ia, ib) > (ic, idx):
                        continue
                    vbar = pair_element(a, b, c, d) - pair_element(a, b, d, c)
                    if abs(vbar) < 1e-14:
                        continue
                    key = (ia, ib, ic, idx)
                    if key in seen:
                        continue
                    seen.add(key)
                    lines.append(f"TBME {ia} {ib} {ic} {idx} {vbar:.15g}")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
