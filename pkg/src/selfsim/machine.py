"""Canonical finite-state realization of a self-similar group.

Every element that has been looked at gets an integer id in a single
minimized Mealy machine: ``perm[id]`` is its level-1 permutation and
``sec[id]`` the ids of its sections.  The machine is kept minimal at all
times (no two ids are bisimilar), so two elements are equal exactly when
their ids coincide.

New elements (products, inverses, generator words) are expanded lazily into
a graph of pending nodes.  Pending nodes are resolved strongly connected
component by component in reverse topological order: an acyclic node is
hash-consed on ``(perm, section ids)``; a cyclic component is first matched
coinductively against existing states and otherwise split by partition
refinement and added as fresh states.
"""
from __future__ import annotations

import os
import threading
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum

from . import words as W
from .dsl import GroupDef, Word, inverse_word
from .words import EpPoint


def _default_states() -> int:
    return int(os.environ.get("SELFSIM_BUDGET_STATES", 200_000))


@dataclass
class Budget:
    max_states: int = field(default_factory=_default_states)
    max_depth: int = 64
    max_nucleus_size: int = 10_000
    conj_radius: int = 6
    order_budget: int = 64


class Inconclusive(Exception):
    """A computation ran out of budget; ``dimension`` names which one."""

    def __init__(self, dimension: str, message: str = ""):
        super().__init__(message or f"budget exhausted: {dimension}")
        self.dimension = dimension


class Verdict(Enum):
    EQUAL = "Equal"
    NOT_EQUAL = "NotEqual"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class EqualityResult:
    verdict: Verdict
    witness: tuple[int, ...] | None = None
    bisimulation: frozenset | None = None
    dimension: str | None = None


@dataclass(frozen=True)
class CanonicalState:
    id: int
    perm: tuple[int, ...]
    section_ids: tuple[int, ...]


IDENTITY = 0


class Machine:
    def __init__(self, group: GroupDef, budget: Budget | None = None):
        self.group = group
        self.budget = budget or Budget()
        self.d = d = group.alphabet_size
        ident = tuple(range(d))
        self.perm: list[tuple[int, ...]] = [ident]
        self.sec: list[tuple[int, ...]] = [(0,) * d]
        self._key: dict = {(ident, (0,) * d): 0}
        self._by_perm: dict = defaultdict(list)
        self._by_child: dict = defaultdict(list)
        self._index_state(0)
        self._prod: dict = {}
        self._inv: dict = {0: 0}
        self._words: dict = {(): 0}
        self._lock = threading.RLock()
        with self._lock:
            for k in range(1, group.size + 1):
                for c in (k, -k):
                    self._words[(c,)] = self._explore(("w", (c,)), self._expand_word, self._words, lambda key: key[1])

    # -- bookkeeping ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.perm)

    def _index_state(self, s: int) -> None:
        p = self.perm[s]
        self._by_perm[p].append(s)
        for x, t in enumerate(self.sec[s]):
            self._by_child[(p, x, t)].append(s)

    def _new_state(self, perm, secs) -> int:
        if len(self.perm) >= self.budget.max_states:
            raise Inconclusive("states", f"machine exceeded {self.budget.max_states} states")
        s = len(self.perm)
        self.perm.append(perm)
        self.sec.append(secs)
        self._key[(perm, secs)] = s
        self._index_state(s)
        return s

    def state(self, s: int) -> CanonicalState:
        return CanonicalState(s, self.perm[s], self.sec[s])

    # -- expansion of pending nodes -----------------------------------------

    def _expand_word(self, key):
        word = key[1]
        perm = []
        children = []
        for x in range(self.d):
            y, w = W.first_level(self.group, word, x)
            perm.append(y)
            r = self._words.get(w)
            children.append(r if r is not None else ("w", w))
        return tuple(perm), children

    def _expand_product(self, key):
        a, b = key
        pa, pb = self.perm[a], self.perm[b]
        sa, sb = self.sec[a], self.sec[b]
        perm = tuple(pa[y] for y in pb)
        children = []
        for x in range(self.d):
            u, v = sa[pb[x]], sb[x]
            if u == 0:
                children.append(v)
            elif v == 0:
                children.append(u)
            else:
                r = self._prod.get((u, v))
                children.append(r if r is not None else (u, v))
        return perm, children

    def _expand_inverse(self, key):
        u = key[1]
        p = self.perm[u]
        pinv = [0] * self.d
        for x, y in enumerate(p):
            pinv[y] = x
        children = []
        for x in range(self.d):
            w = self.sec[u][pinv[x]]
            r = self._inv.get(w)
            children.append(r if r is not None else ("i", w))
        return tuple(pinv), children

    def _explore(self, root, expand, memo, memo_key):
        """Expand pending nodes reachable from ``root`` and resolve them.

        Resolved ids are written to ``memo[memo_key(node)]``.  Returns the id
        of ``root``.
        """
        nodes: dict = {}
        queue = deque([(root, 0)])
        while queue:
            key, depth = queue.popleft()
            if key in nodes:
                continue
            if depth > self.budget.max_depth:
                raise Inconclusive("depth", f"expansion deeper than {self.budget.max_depth}")
            if len(nodes) + len(self.perm) >= self.budget.max_states:
                raise Inconclusive("states", f"machine exceeded {self.budget.max_states} states")
            nodes[key] = expand(key)
            for c in nodes[key][1]:
                if not isinstance(c, int) and c not in nodes:
                    queue.append((c, depth + 1))
        resolved: dict = {}
        for comp in _tarjan(nodes):
            self._resolve_component(comp, nodes, resolved)
        for key, s in resolved.items():
            memo[memo_key(key)] = s
        return resolved[root]

    def _resolve_component(self, comp, nodes, resolved) -> None:
        members = set(comp)

        def rid(c):
            return c if isinstance(c, int) else resolved.get(c)

        if len(comp) == 1:
            (u,) = comp
            perm, children = nodes[u]
            if all(isinstance(c, int) or c not in members for c in children):
                secs = tuple(rid(c) for c in children)
                s = self._key.get((perm, secs))
                resolved[u] = s if s is not None else self._new_state(perm, secs)
                return

        match = self._match_existing(comp, members, nodes, resolved)
        if match is not None:
            resolved.update(match)
            return

        # Fresh cyclic component: split by partition refinement.
        block = {}
        sig0 = {}
        for u in comp:
            perm, children = nodes[u]
            sig = (perm, tuple(None if c in members and not isinstance(c, int) else rid(c) for c in children))
            block[u] = sig0.setdefault(sig, len(sig0))
        nblocks = len(sig0)
        while True:
            sigs = {}
            new = {}
            for u in comp:
                children = nodes[u][1]
                sig = (block[u], tuple(block[c] if not isinstance(c, int) and c in members else -1 for c in children))
                new[u] = sigs.setdefault(sig, len(sigs))
            block = new
            if len(sigs) == nblocks:
                break
            nblocks = len(sigs)
        rep = {}
        for u in comp:
            rep.setdefault(block[u], u)
        if len(self.perm) + len(rep) > self.budget.max_states:
            raise Inconclusive("states", f"machine exceeded {self.budget.max_states} states")
        ids = {}
        for b, u in rep.items():
            ids[b] = len(self.perm)
            self.perm.append(nodes[u][0])
            self.sec.append(None)
        for b, u in rep.items():
            s = ids[b]
            perm, children = nodes[u]
            secs = tuple(ids[block[c]] if not isinstance(c, int) and c in members else rid(c) for c in children)
            self.sec[s] = secs
            self._key[(perm, secs)] = s
            self._index_state(s)
        for u in comp:
            resolved[u] = ids[block[u]]

    def _match_existing(self, comp, members, nodes, resolved):
        u = comp[0]
        perm, children = nodes[u]
        candidates = None
        for x, c in enumerate(children):
            if isinstance(c, int) or c not in members:
                cid = c if isinstance(c, int) else resolved[c]
                candidates = self._by_child.get((perm, x, cid), ())
                break
        if candidates is None:
            candidates = self._by_perm.get(perm, ())
        for s in candidates:
            match = {u: s}
            todo = [u]
            ok = True
            while todo and ok:
                a = todo.pop()
                b = match[a]
                pa, ca = nodes[a]
                if self.perm[b] != pa:
                    ok = False
                    break
                sb = self.sec[b]
                for x, c in enumerate(ca):
                    t = sb[x]
                    if isinstance(c, int) or c not in members:
                        cid = c if isinstance(c, int) else resolved[c]
                        if cid != t:
                            ok = False
                            break
                    elif c in match:
                        if match[c] != t:
                            ok = False
                            break
                    else:
                        match[c] = t
                        todo.append(c)
            if ok:
                return match
        return None

    # -- group operations on ids ---------------------------------------------

    def letter(self, c: int) -> int:
        return self._words[(c,)]

    def product(self, s: int, t: int) -> int:
        """Id of ``s * t`` (``t`` acts first)."""
        if s == 0:
            return t
        if t == 0:
            return s
        r = self._prod.get((s, t))
        if r is not None:
            return r
        with self._lock:
            return self._explore((s, t), self._expand_product, self._prod, lambda key: key)

    def inverse(self, s: int) -> int:
        r = self._inv.get(s)
        if r is not None:
            return r
        with self._lock:
            r = self._explore(("i", s), self._expand_inverse, self._inv, lambda key: key[1])
            self._inv[r] = s
            return r

    def power(self, s: int, k: int) -> int:
        if k < 0:
            s, k = self.inverse(s), -k
        result = 0
        while k:
            if k & 1:
                result = self.product(result, s)
            s = self.product(s, s)
            k >>= 1
        return result

    def canonical(self, word: Word) -> int:
        r = self._words.get(word)
        if r is not None:
            return r
        s = 0
        for c in word:
            s = self.product(s, self._words[(c,)])
        if len(word) <= 16:
            self._words[word] = s
        return s

    def canonical_state(self, word: Word) -> CanonicalState:
        return self.state(self.canonical(word))

    def order(self, s: int, limit: int | None = None) -> int | None:
        """Order of ``s`` if it is at most ``limit``, else None."""
        limit = limit or self.budget.order_budget
        t = s
        for m in range(1, limit + 1):
            if t == 0:
                return m
            t = self.product(t, s)
        return None

    def conjugate(self, w: int, s: int) -> int:
        return self.product(self.product(w, s), self.inverse(w))

    def reachable(self, s: int) -> list[int]:
        seen = {s}
        order = [s]
        i = 0
        while i < len(order):
            for t in self.sec[order[i]]:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
            i += 1
        return order

    def section_id(self, s: int, v) -> int:
        for x in v:
            s = self.sec[s][x]
        return s

    def act_id(self, s: int, w) -> tuple[int, ...]:
        out = []
        for x in w:
            out.append(self.perm[s][x])
            s = self.sec[s][x]
        return tuple(out)

    def distinguishing_word(self, s: int, t: int) -> tuple[int, ...] | None:
        """Shortest input word on which ``s`` and ``t`` act differently."""
        if s == t:
            return None
        seen = {(s, t): ()}
        queue = deque([(s, t)])
        while queue:
            a, b = queue.popleft()
            path = seen[(a, b)]
            pa, pb = self.perm[a], self.perm[b]
            for x in range(self.d):
                if pa[x] != pb[x]:
                    return path + (x,)
            for x in range(self.d):
                pair = (self.sec[a][x], self.sec[b][x])
                if pair[0] != pair[1] and pair not in seen:
                    seen[pair] = path + (x,)
                    queue.append(pair)
        raise AssertionError("distinct canonical states must be distinguishable")

    # -- boundary ------------------------------------------------------------

    def act_boundary_id(self, s: int, p: EpPoint) -> EpPoint:
        out = list(self.act_id(s, p.prefix))
        s = self.section_id(s, p.prefix)
        seen: dict[int, int] = {}
        blocks = []
        v = p.period
        limit = max(self.budget.max_states, 1)
        while s not in seen:
            if len(blocks) > limit:
                raise Inconclusive("depth", "no section cycle along the period")
            seen[s] = len(blocks)
            blocks.append(self.act_id(s, v))
            s = self.section_id(s, v)
        j = seen[s]
        for b in blocks[:j]:
            out.extend(b)
        period = tuple(y for b in blocks[j:] for y in b)
        return EpPoint(tuple(out), period)


# --- word-level API -----------------------------------------------------------

def equals(machine: Machine, g: Word, h: Word) -> EqualityResult:
    """Decide ``g == h``; NotEqual carries a witness word, Equal the bisimulation."""
    try:
        sg = machine.canonical(g)
        sh = machine.canonical(h)
    except Inconclusive as exc:
        return EqualityResult(Verdict.INCONCLUSIVE, dimension=exc.dimension)
    if sg == sh:
        pairs = frozenset((s, s) for s in machine.reachable(sg))
        return EqualityResult(Verdict.EQUAL, bisimulation=pairs)
    return EqualityResult(Verdict.NOT_EQUAL, witness=machine.distinguishing_word(sg, sh))


def is_trivial(machine: Machine, g: Word) -> bool:
    return machine.canonical(g) == IDENTITY


def act(machine: Machine, g: Word, w) -> tuple[int, ...]:
    return machine.act_id(machine.canonical(g), w)


def act_boundary(machine: Machine, g: Word, p: EpPoint) -> EpPoint:
    return machine.act_boundary_id(machine.canonical(g), p)


def inverse(g: Word) -> Word:
    return inverse_word(g)


def section(group: GroupDef, g: Word, v) -> Word:
    return W.section(group, g, v)


def _tarjan(nodes: dict) -> list[list]:
    """SCCs of the pending-node graph; resolved (int) children are ignored."""
    return strongly_connected({v: [c for c in node[1] if not isinstance(c, int)] for v, node in nodes.items()})


def strongly_connected(graph: dict) -> list[list]:
    """Strongly connected components of ``graph`` (node -> successors), children first."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list = []
    counter = 0
    for root in graph:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work[-1]
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            children = graph[v]
            recurse = False
            while i < len(children):
                c = children[i]
                i += 1
                if c not in index:
                    work[-1] = (v, i)
                    work.append((c, 0))
                    recurse = True
                    break
                if c in on_stack:
                    low[v] = min(low[v], index[c])
            if recurse:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def symmetric_generators(machine: Machine) -> list[tuple[int, int]]:
    """(letter code, state id) for generators and their inverses, deduplicated."""
    out = []
    seen = set()
    for k in range(1, machine.group.size + 1):
        for c in (k, -k):
            s = machine.letter(c)
            if s != 0 and s not in seen:
                seen.add(s)
                out.append((c, s))
    return out


def bfs_ball(machine: Machine, radius: int, max_size: int | None = None):
    """Yield ``(state, length, word)`` for the ball, in BFS order.

    Words are shortest with ties broken by generator declaration order.
    """
    gens = symmetric_generators(machine)
    seen = {0}
    frontier = [(0, ())]
    yield 0, 0, ()
    for r in range(1, radius + 1):
        nxt = []
        for s, w in frontier:
            for c, g in gens:
                t = machine.product(s, g)
                if t not in seen:
                    seen.add(t)
                    nxt.append((t, w + (c,)))
                    yield t, r, w + (c,)
                    if max_size is not None and len(seen) >= max_size:
                        return
        frontier = nxt
        if not frontier:
            return
