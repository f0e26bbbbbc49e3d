"""Heuristic Liouville evidence: Basilica against the fragmented example.

Section lengths per level shrink on the Basilica, while on the fragmented
group the orbit walk escapes the starting point with positive probability.
"""
from selfsim import registry
from selfsim.contraction import ball
from selfsim.machine import Machine
from selfsim.randwalk import orbit_walk, simulate_sections, uniform_symmetric
from selfsim.words import EpPoint


def sections(key, t=2 ** 12, trials=32):
    m = Machine(registry.get(key).group)
    st = simulate_sections(m, uniform_symmetric(m), t, [2, 4, 6], trials, seed=0, table=ball(m, 8))
    print(f"{key}: mean normalized section length at t={t}")
    for row in st.rows():
        if row["t"] == t:
            print(f"  level {row['level']}: {row['mean']:.4f} +- {row['stderr']:.4f}")


def escape(key, t=10_000, trials=1000):
    e = registry.get(key)
    m = Machine(e.group)
    mu = uniform_symmetric(m, list(e.measure) or None)
    r = orbit_walk(m, mu, EpPoint((), (0,)), t, trials, seed=0)
    print(f"{key}: P(no return to 0^inf by t={t}) = {r.no_return:.4f} +- {r.stderr:.4f}")


if __name__ == "__main__":
    sections("basilica")
    escape("odometer")
    escape("nonliouville_fragmented")
