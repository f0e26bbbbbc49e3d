"""Nucleus, contraction certificate, portraits and activity growth."""
from __future__ import annotations

from dataclasses import dataclass, field

from .dsl import GroupDef, Word
from .machine import Budget, Inconclusive, Machine, bfs_ball, strongly_connected


class NotContracting(Exception):
    """Carries an element ``g`` and a word ``v`` with ``g(v) = v``, ``g|_v = g``
    and ``g`` of infinite order (no order found within the budget).  Then all
    powers of ``g`` recur as their own sections, so no finite nucleus exists."""

    def __init__(self, state: int, loop: tuple[int, ...], word: Word | None = None):
        super().__init__(f"state {state} is its own section along {loop} and has no finite order")
        self.state = state
        self.loop = loop
        self.word = word


@dataclass
class Nucleus:
    states: frozenset[int]
    machine: Machine
    depth: int = 0
    iterations: int = 0

    @property
    def contains_identity(self) -> bool:
        return 0 in self.states

    @property
    def size(self) -> int:
        return len(self.states)

    def __contains__(self, s: int) -> bool:
        return s in self.states

    def sorted_states(self) -> list[int]:
        return sorted(self.states)


def _recurrent(machine: Machine, roots) -> set[int]:
    """States lying on, or reachable from, a cycle of the section graph below ``roots``."""
    nodes = {}
    todo = list(roots)
    while todo:
        s = todo.pop()
        if s in nodes:
            continue
        nodes[s] = machine.sec[s]
        todo.extend(machine.sec[s])
    cyclic = set()
    for comp in strongly_connected({s: list(secs) for s, secs in nodes.items()}):
        if len(comp) > 1 or comp[0] in nodes[comp[0]]:
            cyclic.update(comp)
    out = set()
    todo = list(cyclic)
    while todo:
        s = todo.pop()
        if s not in out:
            out.add(s)
            todo.extend(machine.sec[s])
    return out


def _fixed_loop(machine: Machine, s: int) -> tuple[int, ...] | None:
    """Shortest nonempty ``v`` with ``s(v) = v`` and ``s|_v = s``, if any."""
    perm, sec = machine.perm, machine.sec
    seen = {s: ()}
    frontier = [s]
    while frontier:
        nxt = []
        for t in frontier:
            for x in range(machine.d):
                if perm[t][x] != x:
                    continue
                u = sec[t][x]
                v = seen[t] + (x,)
                if u == s:
                    return v
                if u not in seen:
                    seen[u] = v
                    nxt.append(u)
        frontier = nxt
    return None


def _absorb_depth(machine: Machine, s: int, states) -> int:
    level = {s}
    for k in range(machine.budget.max_depth + 1):
        if level <= states:
            return k
        level = {t for u in level for t in machine.sec[u]}
    raise Inconclusive("depth", "product sections did not enter the nucleus")


def compute_nucleus(group_or_machine, budget: Budget | None = None) -> Nucleus:
    """Smallest set absorbing all deep sections.

    Starts from the recurrent sections of the generators and repeatedly adds
    the recurrent sections of pairwise products until nothing new appears.
    Raises :class:`NotContracting` or :class:`Inconclusive`.
    """
    machine = _machine(group_or_machine, budget)
    budget = machine.budget
    gens = [machine.letter(c) for k in range(1, machine.group.size + 1) for c in (k, -k)]
    states = _recurrent(machine, gens) | {0}
    checked: set[int] = set()
    iterations = 0
    while True:
        iterations += 1
        for s in sorted(states - checked):
            loop = _fixed_loop(machine, s)
            if loop is not None and s != 0 and machine.order(s, budget.order_budget) is None:
                raise NotContracting(s, loop)
            checked.add(s)
        ordered = sorted(states)
        products = {machine.product(s, t) for s in ordered for t in ordered}
        new = _recurrent(machine, products) - states
        if not new:
            break
        states |= new
        if len(states) > budget.max_nucleus_size:
            raise Inconclusive("nucleus_size", f"nucleus candidate exceeded {budget.max_nucleus_size} states")
    states = frozenset(states)
    depth = max(_absorb_depth(machine, p, states) for p in products)
    return Nucleus(states, machine, depth, iterations)


def is_contracting(group_or_machine, budget: Budget | None = None):
    """``("Yes", nucleus)``, ``("No", witness)`` or ``("Inconclusive", dimension)``."""
    try:
        return "Yes", compute_nucleus(group_or_machine, budget)
    except NotContracting as exc:
        return "No", exc
    except Inconclusive as exc:
        return "Inconclusive", exc.dimension


def _machine(group_or_machine, budget) -> Machine:
    if isinstance(group_or_machine, Machine):
        return group_or_machine
    return Machine(group_or_machine, budget)


def nucleus_words(nucleus: Nucleus, radius: int = 8) -> dict[int, Word]:
    """Shortest word for each nucleus state found in the ball of ``radius``."""
    out: dict[int, Word] = {}
    want = set(nucleus.states)
    for s, _, w in bfs_ball(nucleus.machine, radius, nucleus.machine.budget.max_states):
        if s in want and s not in out:
            out[s] = w
            if len(out) == len(want):
                break
    return out


def nucleus_json(nucleus: Nucleus, radius: int = 8) -> dict:
    m = nucleus.machine
    names = nucleus_words(nucleus, radius)
    rows = []
    for s in nucleus.sorted_states():
        w = names.get(s)
        rows.append({
            "id": s,
            "perm": list(m.perm[s]),
            "sections": list(m.sec[s]),
            "shortest_word": m.group.format(w) if w is not None else None,
        })
    return {"size": nucleus.size, "states": rows, "depth": nucleus.depth, "status": "contracting"}


# --- portraits -----------------------------------------------------------------

@dataclass
class Portrait:
    inner: frozenset          # words whose section is outside the nucleus
    leaves: dict              # word -> nucleus state id
    perms: dict = field(default_factory=dict)  # inner word -> level-1 permutation

    @property
    def depth(self) -> int:
        return max((len(v) for v in self.leaves), default=0)

    def level_count(self, n: int) -> int:
        """``|P(g) ∩ X^n|`` where ``P(g)`` is the set of leaves."""
        return sum(1 for v in self.leaves if len(v) == n)

    def act(self, machine: Machine, w) -> tuple[int, ...]:
        """Rebuild the action from the portrait alone."""
        v: tuple[int, ...] = ()
        out = []
        w = tuple(w)
        while v in self.perms and len(v) < len(w):
            y = self.perms[v][w[len(v)]]
            out.append(y)
            v = v + (w[len(v)],)
        if v in self.perms:
            return tuple(out)
        return tuple(out) + machine.act_id(self.leaves[v], w[len(v):])


def portrait(machine: Machine, g, nucleus: Nucleus) -> Portrait:
    s = machine.canonical(g) if isinstance(g, tuple) else int(g)
    inner, leaves, perms = set(), {}, {}
    stack = [((), s)]
    while stack:
        v, t = stack.pop()
        if t in nucleus.states:
            leaves[v] = t
            continue
        if len(v) >= machine.budget.max_depth:
            raise Inconclusive("depth", "portrait deeper than the depth budget")
        inner.add(v)
        perms[v] = machine.perm[t]
        for x in reversed(range(machine.d)):
            stack.append((v + (x,), machine.sec[t][x]))
    return Portrait(frozenset(inner), leaves, perms)


# --- activity growth ----------------------------------------------------------

@dataclass(frozen=True)
class ActivityClass:
    tag: str                  # Finitary, Bounded, Polynomial or Exponential
    degree: int | None = None
    witness: str = ""

    def __str__(self) -> str:
        return f"Polynomial({self.degree})" if self.tag == "Polynomial" else self.tag


def activity_class_state(machine: Machine, s: int) -> ActivityClass:
    states = [t for t in machine.reachable(s) if t != 0]
    edges = {t: [u for u in machine.sec[t] if u != 0] for t in states}
    comps = strongly_connected(edges)  # children first
    comp_of = {t: i for i, comp in enumerate(comps) for t in comp}
    cyclic = []
    for i, comp in enumerate(comps):
        members = set(comp)
        inside = {t: sum(1 for u in edges[t] if u in members) for t in comp}
        if len(comp) == 1 and inside[comp[0]] == 0:
            cyclic.append(False)
            continue
        if any(k > 1 for k in inside.values()):
            t = next(t for t, k in inside.items() if k > 1)
            return ActivityClass("Exponential", None,
                                 f"state {t} has {inside[t]} sections inside its strongly connected component of size {len(comp)}")
        cyclic.append(True)
    # longest chain of cycles, children first so successors are already known
    chain = [0] * len(comps)
    for i, comp in enumerate(comps):
        best = 0
        for t in comp:
            for u in edges[t]:
                j = comp_of[u]
                if j != i:
                    best = max(best, chain[j])
        chain[i] = best + (1 if cyclic[i] else 0)
    c = chain[comp_of[s]] if s != 0 else 0
    n_cycles = sum(cyclic)
    witness = f"{n_cycles} simple cycle(s); longest chain of cycles has {c}"
    if c == 0:
        return ActivityClass("Finitary", None, witness)
    if c == 1:
        return ActivityClass("Bounded", 0, witness)
    return ActivityClass("Polynomial", c - 1, witness)


def activity_class(group_or_machine, gen: str, budget: Budget | None = None) -> ActivityClass:
    machine = _machine(group_or_machine, budget)
    return activity_class_state(machine, machine.letter(machine.group.index(gen) + 1))


# --- self-replication -------------------------------------------------------------

def self_replicating_check(group_or_machine, budget: Budget | None = None, radius: int = 6):
    """``("Yes", witnesses)`` or ``("Inconclusive", missing pairs)``.

    ``witnesses[(x, y)]`` is a word ``g`` with ``g(x) = y`` and ``g|_x = e``.
    """
    machine = _machine(group_or_machine, budget)
    d = machine.d
    found: dict[tuple[int, int], Word] = {}
    try:
        for s, _, w in bfs_ball(machine, radius, machine.budget.max_states // 2):
            for x in range(d):
                if machine.sec[s][x] == 0:
                    found.setdefault((x, machine.perm[s][x]), w)
            if len(found) == d * d:
                return "Yes", found
    except Inconclusive:
        pass
    missing = [(x, y) for x in range(d) for y in range(d) if (x, y) not in found]
    return "Inconclusive", missing
