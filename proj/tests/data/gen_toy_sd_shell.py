#!/usr/bin/env python3
"""Full sd-shell-geometry toy (d5/2 + s1/2 + d3/2 per species, 24 modes).

Synthetic but structurally faithful: realistic-looking single-particle
energies, J=0 pairing inside every orbital with cross-orbital pair scattering,
and a quadrupole-like proton-neutron projector inside d5/2. All two-body terms
are scalar projector sums built from Clebsch-Gordan coefficients, so the
spectrum carries exact rotational multiplets. Intended for neutron-rich
occupations (for example 2 valence protons and 10 valence neutrons at
twice_jz = 0), where the proton-neutron Schmidt spectrum shows one dominant
value followed by a five-fold degenerate multiplet.
"""

from fractions import Fraction

import sympy
from sympy.physics.quantum.cg import CG

ORBITALS = [("d52", Fraction(5, 2), -3.3), ("s12", Fraction(1, 2), -2.4), ("d32", Fraction(3, 2), -1.2)]
V_PAIR = -0.9   # J=0 pairing inside each orbital
V_SCATTER = -0.5  # J=0 pair scattering between orbitals
V_PN_2 = -0.55  # J=2 proton-neutron projector inside d5/2
V_PN_4 = 0.3


def cg(j1, m1, j2, m2, j, m):
    return float(CG(sympy.Rational(j1), sympy.Rational(m1), sympy.Rational(j2),
                    sympy.Rational(m2), int(j), sympy.Rational(m)).doit())


def main():
    states = []
    for sp in ("p", "n"):
        for name, j, spe in ORBITALS:
            for k in range(int(2 * j) + 1):
                m = j - k
                states.append((sp, name, j, m, spe))
    index = {st[:4]: i for i, st in enumerate(states)}

    lines = ["# sd-shell-geometry toy: scalar projector forces over d5/2, s1/2, d3/2"]
    for i, (sp, name, j, m, spe) in enumerate(states):
        lines.append(f"MODE {i} {int(2 * j)} {int(2 * m)} {-1 if sp == 'p' else 1} {name}{sp}")
    for i, (sp, name, j, m, spe) in enumerate(states):
        if spe != 0.0:
            lines.append(f"SPE {i} {spe}")

    tbme = {}

    def add(a, b, c, d, v):
        if abs(v) < 1e-14:
            return
        ia, ib, ic, idx = index[a], index[b], index[c], index[d]
        sign = 1.0
        if ia > ib:
            ia, ib, sign = ib, ia, -sign
        if ic > idx:
            ic, idx, sign = idx, ic, -sign
        if (ia, ib) > (ic, idx):
            ia, ib, ic, idx = ic, idx, ia, ib
        tbme[(ia, ib, ic, idx)] = tbme.get((ia, ib, ic, idx), 0.0) + sign * v

    def pair0(sp, name, j):
        out = []
        k = 0
        m = j
        while m > 0:
            out.append(((sp, name, j, m), (sp, name, j, -m), cg(j, m, j, -m, 0, 0)))
            m -= 1
            k += 1
        return out

    for sp in ("p", "n"):
        pairs = {name: pair0(sp, name, j) for name, j, _ in ORBITALS}
        names = [name for name, _, _ in ORBITALS]
        for a in names:
            for b in names:
                strength = V_PAIR if a == b else V_SCATTER
                for (a1, b1, c1) in pairs[a]:
                    for (a2, b2, c2) in pairs[b]:
                        add(a1, b1, a2, b2, 2.0 * strength * c1 * c2)

    D = Fraction(5, 2)
    dms = [D - k for k in range(6)]
    for J, VJ in ((2, V_PN_2), (4, V_PN_4)):
        for m1 in dms:
            for m2 in dms:
                for m3 in dms:
                    for m4 in dms:
                        if m1 + m2 != m3 + m4 or abs(m1 + m2) > J:
                            continue
                        v = VJ * cg(D, m1, D, m2, J, m1 + m2) * cg(D, m3, D, m4, J, m3 + m4)
                        add(("p", "d52", D, m1), ("n", "d52", D, m2),
                            ("p", "d52", D, m3), ("n", "d52", D, m4), v)

    for (i, j, k, l), v in sorted(tbme.items()):
        if abs(v) > 1e-14:
            lines.append(f"TBME {i} {j} {k} {l} {v:.15g}")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
