"""Finite level graphs: Schreier graphs, tile adjacency, self-similarity complex.

A word ``x1 x2 ... xn`` is the vertex ``sum x_i d^(n-i)``, i.e. words are
indexed lexicographically with the first letter most significant.
"""
from __future__ import annotations

import io
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .dsl import Word
from .machine import Machine
from .nucleus import Nucleus

MAX_VERTICES = 2 ** 24


class MemoryBudget(Exception):
    pass


class LengthMismatch(ValueError):
    pass


_CACHE: "weakref.WeakKeyDictionary[Machine, dict]" = weakref.WeakKeyDictionary()


def _check_size(d: int, n: int, cap: int = MAX_VERTICES) -> int:
    size = d ** n
    if size > cap:
        raise MemoryBudget(f"{d}^{n} = {size} vertices exceeds the cap of {cap}")
    return size


def level_permutation(machine: Machine, s: int, n: int) -> np.ndarray:
    """Action of state ``s`` on ``X^n`` as an index array."""
    cache = _CACHE.setdefault(machine, {})
    key = (s, n)
    hit = cache.get(key)
    if hit is not None:
        return hit
    d = machine.d
    if n == 0:
        out = np.zeros(1, dtype=np.int64)
    elif s == 0:
        out = np.arange(d ** n, dtype=np.int64)
    else:
        block = d ** (n - 1)
        parts = [machine.perm[s][x] * block + level_permutation(machine, machine.sec[s][x], n - 1)
                 for x in range(d)]
        out = np.concatenate(parts)
    out.flags.writeable = False
    cache[key] = out
    return out


def word_to_index(w, d: int) -> int:
    i = 0
    for x in w:
        i = i * d + x
    return i


def index_to_word(i: int, d: int, n: int) -> tuple[int, ...]:
    out = [0] * n
    for k in range(n - 1, -1, -1):
        i, out[k] = divmod(i, d)
    return tuple(out)


def suffix_cylinder(u, d: int, n: int) -> np.ndarray:
    """Indices of all words of length ``n`` ending with ``u``."""
    u = tuple(u)
    k = len(u)
    if k > n:
        raise LengthMismatch(f"suffix of length {k} longer than level {n}")
    return np.arange(d ** (n - k), dtype=np.int64) * d ** k + word_to_index(u, d)


@dataclass
class LevelGraph:
    level: int
    d: int
    src: np.ndarray
    dst: np.ndarray
    label: np.ndarray         # index into ``labels``
    weight: np.ndarray
    labels: list[str]
    n_vertices: int = 0
    offsets: list[int] = field(default_factory=list)  # per-level offsets for multi-level graphs

    def __post_init__(self):
        if not self.n_vertices:
            self.n_vertices = self.d ** self.level

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def vertex_name(self, i: int) -> str:
        if not self.offsets:
            return "".join(map(str, index_to_word(i, self.d, self.level))) or "ε"
        k = max(j for j, off in enumerate(self.offsets) if off <= i)
        return "".join(map(str, index_to_word(i - self.offsets[k], self.d, k))) or "ε"

    def transition_matrix(self):
        """Sparse ``W[v, w] = sum of weights of edges v -> w``."""
        n = self.n_vertices
        return coo_matrix((self.weight, (self.src, self.dst)), shape=(n, n)).tocsr()

    def conductance(self):
        """Symmetrized weights ``(W + W^T) / 2`` without the diagonal."""
        w = self.transition_matrix()
        c = ((w + w.T) * 0.5).tocoo()
        keep = c.row != c.col
        n = self.n_vertices
        return coo_matrix((c.data[keep], (c.row[keep], c.col[keep])), shape=(n, n)).tocsr()

    def adjacency(self):
        """Undirected 0/1 adjacency without loops."""
        n = self.n_vertices
        keep = self.src != self.dst
        a = coo_matrix((np.ones(int(keep.sum())), (self.src[keep], self.dst[keep])), shape=(n, n)).tocsr()
        a = a + a.T
        a.data[:] = 1.0
        return a


def _label_states(machine: Machine, labels) -> tuple[list[str], list[int]]:
    names, states = [], []
    for lab in labels:
        w = machine.group.word(lab) if isinstance(lab, str) else tuple(lab)
        names.append(lab if isinstance(lab, str) else machine.group.format(w))
        states.append(machine.canonical(w))
    return names, states


def level_graph(machine: Machine, n: int, weights: dict | None = None, cap: int = MAX_VERTICES) -> LevelGraph:
    """Schreier graph of level ``n``: one edge ``v -> g(v)`` per label and vertex.

    ``weights`` maps labels (generator names or words such as ``"a^-1"``)
    to nonnegative weights; by default every generator gets weight 1.
    """
    if n < 0:
        raise ValueError("level must be nonnegative")
    size = _check_size(machine.d, n, cap)
    if weights is None:
        weights = {name: 1.0 for name in machine.group.names}
    if any(w < 0 for w in weights.values()):
        raise ValueError("weights must be nonnegative")
    names, states = _label_states(machine, list(weights))
    base = np.arange(size, dtype=np.int64)
    src, dst, lab, wt = [], [], [], []
    for i, (name, s) in enumerate(zip(names, states)):
        src.append(base)
        dst.append(level_permutation(machine, s, n))
        lab.append(np.full(size, i, dtype=np.int32))
        wt.append(np.full(size, float(weights[list(weights)[i]])))
    return LevelGraph(n, machine.d, np.concatenate(src), np.concatenate(dst),
                      np.concatenate(lab), np.concatenate(wt), names)


@dataclass
class TileGraph:
    level: int
    pairs: np.ndarray         # shape (m, 2), sorted, unique

    def adjacent(self, u: int, v: int) -> bool:
        i = np.searchsorted(self.pairs[:, 0], u, side="left")
        j = np.searchsorted(self.pairs[:, 0], u, side="right")
        return bool(np.any(self.pairs[i:j, 1] == v))


def tile_graph(machine: Machine, nucleus: Nucleus, n: int, cap: int = MAX_VERTICES) -> TileGraph:
    """Tiles of level ``n`` indexed by ``X^n``; ``u ~ v`` iff a nucleus state maps ``u`` to ``v``."""
    size = _check_size(machine.d, n, cap)
    base = np.arange(size, dtype=np.int64)
    pairs = np.concatenate([np.stack([base, level_permutation(machine, s, n)], axis=1)
                            for s in nucleus.sorted_states()])
    pairs = np.unique(pairs, axis=0)
    return TileGraph(n, pairs)


def tiles_disjoint(machine: Machine, nucleus: Nucleus, u, v) -> bool:
    u, v = tuple(u), tuple(v)
    if len(u) != len(v):
        raise LengthMismatch(f"words of lengths {len(u)} and {len(v)}")
    return all(machine.act_id(s, u) != v for s in nucleus.sorted_states())


def ss_complex(machine: Machine, nucleus: Nucleus, n_max: int, cap: int = MAX_VERTICES) -> LevelGraph:
    """Self-similarity complex truncated to words of length at most ``n_max``.

    Vertical edges ``v -- xv`` carry label ``"|x"``; horizontal edges
    ``v -- s(v)`` carry the nucleus state label ``"n<id>"``.
    """
    d = machine.d
    offsets = [0]
    for k in range(n_max):
        offsets.append(offsets[-1] + d ** k)
    total = offsets[-1] + d ** n_max
    if total > cap:
        raise MemoryBudget(f"{total} vertices exceeds the cap of {cap}")
    states = nucleus.sorted_states()
    labels = [f"|{x}" for x in range(d)] + [f"n{s}" for s in states]
    src, dst, lab = [], [], []
    for k in range(n_max + 1):
        base = np.arange(d ** k, dtype=np.int64)
        for j, s in enumerate(states):
            src.append(offsets[k] + base)
            dst.append(offsets[k] + level_permutation(machine, s, k))
            lab.append(np.full(d ** k, d + j, dtype=np.int32))
        if k < n_max:
            for x in range(d):
                src.append(offsets[k] + base)
                dst.append(offsets[k + 1] + x * d ** k + base)
                lab.append(np.full(d ** k, x, dtype=np.int32))
    src = np.concatenate(src)
    return LevelGraph(n_max, d, src, np.concatenate(dst), np.concatenate(lab),
                      np.ones(len(src)), labels, n_vertices=total, offsets=offsets)


# --- statistics -----------------------------------------------------------------

def _ecc(adj, v: int) -> np.ndarray:
    return shortest_path(adj, unweighted=True, directed=False, indices=[v])[0]


def _component_diameter(adj, members: np.ndarray) -> int:
    """Exact diameter of one component by iterative fringe upper bounds."""
    if len(members) == 1:
        return 0
    # double sweep to find a central start vertex
    dist = _ecc(adj, int(members[0]))
    a = int(members[np.argmax(dist[members])])
    da = _ecc(adj, a)
    b = int(members[np.argmax(da[members])])
    db = _ecc(adj, b)
    path_len = int(da[b])
    mid = members[(da[members] + db[members] == path_len) & (da[members] == path_len // 2)]
    u = int(mid[0]) if len(mid) else a
    du = _ecc(adj, u)
    levels = du[members].astype(np.int64)
    lb = max(path_len, int(levels.max()))
    for i in range(int(levels.max()), 0, -1):
        ring = members[levels == i]
        for start in range(0, len(ring), 256):
            dist = shortest_path(adj, unweighted=True, directed=False, indices=ring[start:start + 256])
            lb = max(lb, int(dist[:, members].max()))
        if lb >= 2 * (i - 1):
            return lb
    return lb


def graph_stats(g: LevelGraph, exact_limit: int = 2 ** 16, seeds: int = 32, seed: int = 0) -> dict:
    """Components, diameter (largest over components) and counts, on the undirected simple graph."""
    adj = g.adjacency()
    ncomp, comp = connected_components(adj, directed=False)
    diam = 0
    exact = g.n_vertices <= exact_limit
    if exact:
        for c in range(ncomp):
            diam = max(diam, _component_diameter(adj, np.flatnonzero(comp == c)))
    else:
        rng = np.random.default_rng(seed)
        for v in rng.choice(g.n_vertices, size=min(seeds, g.n_vertices), replace=False):
            dist = _ecc(adj, int(v))
            far = int(np.argmax(np.where(np.isfinite(dist), dist, -1)))
            dist2 = _ecc(adj, far)
            diam = max(diam, int(np.max(dist2[np.isfinite(dist2)])))
    return {"vertices": g.n_vertices, "edges": g.n_edges, "components": int(ncomp),
            "diameter": int(diam), "diameter_exact": exact}


# --- export -----------------------------------------------------------------

def to_csv(g: LevelGraph) -> str:
    out = io.StringIO()
    out.write("src,dst,label,weight\n")
    for s, t, l, w in zip(g.src.tolist(), g.dst.tolist(), g.label.tolist(), g.weight.tolist()):
        out.write(f"{g.vertex_name(s)},{g.vertex_name(t)},{g.labels[l]},{w:.12g}\n")
    return out.getvalue()


def to_dot(g: LevelGraph, name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    for v in range(g.n_vertices):
        lines.append(f'  {v} [label="{g.vertex_name(v)}"];')
    for s, t, l, w in zip(g.src.tolist(), g.dst.tolist(), g.label.tolist(), g.weight.tolist()):
        lines.append(f'  {s} -> {t} [label="{g.labels[l]}", weight={w:.12g}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(g: LevelGraph) -> dict:
    return {
        "level": g.level,
        "vertices": [g.vertex_name(v) for v in range(g.n_vertices)],
        "edges": [[s, t, g.labels[l], w] for s, t, l, w in
                  zip(g.src.tolist(), g.dst.tolist(), g.label.tolist(), g.weight.tolist())],
    }


def tiles_to_dot(t: TileGraph, d: int) -> str:
    lines = ["graph tiles {"]
    for u, v in t.pairs.tolist():
        if u < v:
            a = "".join(map(str, index_to_word(u, d, t.level)))
            b = "".join(map(str, index_to_word(v, d, t.level)))
            lines.append(f'  "{a}" -- "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def level_section_ids(machine: Machine, s: int, n: int) -> np.ndarray:
    """Section state ids of ``s`` at every word of length ``n``, lexicographic order."""
    cache = _CACHE.setdefault(machine, {})
    key = ("sec", s, n)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if n == 0:
        out = np.array([s], dtype=np.int64)
    elif s == 0:
        out = np.zeros(machine.d ** n, dtype=np.int64)
    else:
        out = np.concatenate([level_section_ids(machine, machine.sec[s][x], n - 1) for x in range(machine.d)])
    out.flags.writeable = False
    cache[key] = out
    return out
