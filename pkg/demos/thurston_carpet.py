"""Thurston's p-map and the critical exponent bound.

For the carpet group the spectral radius of T_p crosses 1 near
log 6 / log 3, which bounds the conformal dimension from below.
For the mating the radius at p = 2 is exactly 1.
"""
import math

from selfsim import registry
from selfsim.machine import Machine
from selfsim.thurston import ClassBasis, pc_lower_bound, spectral_radius, thurston_structure, verdict_at


def basis(key):
    e = registry.get(key)
    return ClassBasis([e.group.word(r) for r in e.basis], 6, list(e.basis))


def scan(key, ps):
    m = Machine(registry.get(key).group)
    st = thurston_structure(m, basis(key))
    print(f"{key}: basis {list(registry.get(key).basis)}")
    for p in ps:
        rho = spectral_radius(st.matrix(p))
        print(f"  p={p:.2f}  rho = {rho:.6f}   {verdict_at(p, rho)}")
    return m, st


if __name__ == "__main__":
    m, st = scan("sierpinski_carpet", [1.0, 1.5, 2.0, 2.5])
    b = pc_lower_bound(m, basis("sierpinski_carpet"), (1.0, 2.5), structure=st)
    print(f"  p* = {b.p_star:.5f}, log6/log3 = {math.log(6) / math.log(3):.5f}")
    scan("shishikura_tan_mating", [2.0])
