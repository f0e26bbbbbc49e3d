"""Capacity between two tiles across levels of the Schreier graphs.

On the Basilica and the Sierpinski carpet the 2-capacity between a pair of
disjoint tiles decays with the level. The odometer is the exact baseline:
between vertex 0 and its antipode the capacity is 2^(1-n).
"""
from selfsim import registry
from selfsim.machine import Machine
from selfsim.nucleus import compute_nucleus
from selfsim.potential import CapacityProblem, capacity2, capacity_decay_scan
from selfsim.randwalk import uniform_symmetric
from selfsim.schreier import level_graph


def odometer_baseline():
    m = Machine(registry.get("odometer").group)
    w = {"a": 0.5, "a^-1": 0.5}
    for n in range(3, 9):
        cap = capacity2(CapacityProblem(level_graph(m, n, w), [0], [1])).capacity
        print(f"  n={n}  Cap2 = {cap:.6f}  (2^(1-n) = {2.0 ** (1 - n):.6f})")


def tile_decay(key, levels=range(3, 8)):
    entry = registry.get(key)
    m = Machine(entry.group)
    u_a, u_b = (tuple(int(c) for c in t) for t in entry.tiles)
    weights = uniform_symmetric(m).weights(m)
    rows = capacity_decay_scan(m, compute_nucleus(m), weights, u_a, u_b, levels)
    for r in rows:
        print(f"  n={r['level']}  Cap2 = {r['capacity']:.6f}")
    print(f"  last/first = {rows[-1]['capacity'] / rows[0]['capacity']:.3f}")


if __name__ == "__main__":
    print("odometer, vertex 0 against its antipode")
    odometer_baseline()
    for key in ("basilica", "sierpinski_carpet"):
        print(f"{key}, tiles {registry.get(key).tiles}")
        tile_decay(key)
