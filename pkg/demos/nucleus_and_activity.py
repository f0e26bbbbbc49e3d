"""Nuclei and activity growth for the built-in groups.

Contracting groups have a finite nucleus: every element's sections
eventually land in it. Activity growth separates bounded automata
(Grigorchuk, Basilica) from the exponentially active ones.
"""
from selfsim import registry
from selfsim.machine import Machine
from selfsim.nucleus import activity_class, compute_nucleus


def main():
    for key in registry.list_keys():
        m = Machine(registry.get(key).group)
        nuc = compute_nucleus(m)
        acts = {g.name: str(activity_class(m, g.name)) for g in m.group.generators}
        print(f"{key:28s} |N| = {nuc.size:3d}  " + " ".join(f"{k}:{v}" for k, v in acts.items()))


if __name__ == "__main__":
    main()
