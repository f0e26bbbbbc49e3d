"""Thurston's p-map on a tracked basis of conjugacy classes.

For an element ``g`` and each cycle ``x1 -> ... -> xk -> x1`` of its
level-1 permutation, ``T_p [g]`` collects ``k^(1-p) [(g^k)|_{x1}]``; classes
of finite order count as zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import words as W
from .dsl import Generator, GroupDef, Word, reduce_word
from .machine import Budget, Inconclusive, Machine, strongly_connected, symmetric_generators


class PartialBasis(Exception):
    def __init__(self, unresolved):
        super().__init__(f"{len(unresolved)} section class(es) not matched to the basis")
        self.unresolved = unresolved


class NonConvergence(Exception):
    def __init__(self, bracket):
        super().__init__(f"power iteration did not converge; bracket {bracket}")
        self.bracket = bracket


# --- cycles ------------------------------------------------------------------

def cycle_structure(group: GroupDef, g: Word, starts: dict | None = None) -> list[tuple[int, int, Word]]:
    """``(k, x1, (g^k)|_{x1})`` for every cycle of ``g`` on ``X``, fixed points included.

    Each cycle starts at its least letter unless ``starts`` maps that least
    letter to another letter of the same cycle.
    """
    perm = W.level_perm(group, g)
    seen = set()
    out = []
    for x in range(group.alphabet_size):
        if x in seen:
            continue
        cyc = [x]
        y = perm[x]
        while y != x:
            cyc.append(y)
            y = perm[y]
        seen.update(cyc)
        start = x if starts is None else starts.get(x, x)
        k = len(cyc)
        out.append((k, start, W.section(group, W.power(g, k), (start,))))
    return out


# --- basis and classification ----------------------------------------------------------

@dataclass
class ClassBasis:
    reps: list[Word]
    conj_radius: int = 6
    names: list[str] = field(default_factory=list)


@dataclass
class Classification:
    kind: str                  # "index", "zero" or "unresolved"
    index: int | None = None
    how: str = ""
    conjugator: Word | None = None


class Classifier:
    """Matches elements to basis classes.

    The conjugator ball is grown one radius at a time and shared by all
    queries, so a match at small radius never pays for the full budget.
    """

    def __init__(self, machine: Machine, basis: ClassBasis, budget: Budget | None = None,
                 validate_radius: int = 2):
        self.machine = machine
        self.basis = basis
        self.budget = budget or machine.budget
        self.rep_states = [machine.canonical(reduce_word(w)) for w in basis.reps]
        self.warnings: list[str] = []
        self.canon = list(range(len(basis.reps)))  # class representative index per rep
        self.lookup: dict[int, tuple[int, str]] = {}
        for i in range(len(basis.reps)):
            if machine.order(self.rep_states[i], self.budget.order_budget) is not None:
                self.warnings.append(f"basis element {i} has finite order")
        for i, s in enumerate(self.rep_states):
            self.lookup.setdefault(s, (i, "exact"))
        for i, w in enumerate(basis.reps):
            for r in range(1, len(w)):
                t = machine.canonical(reduce_word(w[r:] + w[:r]))
                self.lookup.setdefault(t, (i, "rotation"))
        self._gens = symmetric_generators(machine)
        self._layers: list[list[tuple[int, Word]]] = [[(0, ())]]
        self._seen = {0}
        # conjugate basis elements are merged into the earliest one
        radius = min(validate_radius, basis.conj_radius)
        for j in range(len(basis.reps)):
            c = self._search(self.rep_states[j], radius, exclude=j)
            if c is not None and c.index < j:
                self.canon[j] = self.canon[c.index]
                self.warnings.append(f"basis elements {c.index} and {j} are conjugate")

    def _layer(self, r: int) -> list[tuple[int, Word]]:
        m = self.machine
        while len(self._layers) <= r:
            nxt = []
            for s, w in self._layers[-1]:
                for c, g in self._gens:
                    t = m.product(s, g)
                    if t not in self._seen:
                        self._seen.add(t)
                        nxt.append((t, w + (c,)))
            self._layers.append(nxt)
        return self._layers[r]

    def _search(self, s: int, radius: int, exclude: int | None = None) -> Classification | None:
        m = self.machine
        for r in range(radius + 1):
            try:
                layer = self._layer(r)
            except Inconclusive:
                self.warnings.append(f"conjugator search stopped at radius {r - 1} (state budget)")
                return None
            for s0, w in layer:
                t = s if s0 == 0 else m.conjugate(s0, s)
                hit = self.lookup.get(t)
                if hit is not None and hit[0] != exclude:
                    return Classification("index", hit[0], "exact" if r == 0 else "conjugate", w)
        return None

    def classify(self, h: Word) -> Classification:
        m = self.machine
        h = reduce_word(h)
        s = m.canonical(h)
        if s == 0 or m.order(s, self.budget.order_budget) is not None:
            return Classification("zero", how="finite order")
        hit = self.lookup.get(s)
        if hit is not None:
            return Classification("index", self.canon[hit[0]], hit[1], ())
        for r in range(1, len(h)):
            t = m.canonical(reduce_word(h[r:] + h[:r]))
            hit = self.lookup.get(t)
            if hit is not None:
                return Classification("index", self.canon[hit[0]], "rotation", ())
        c = self._search(s, self.basis.conj_radius)
        if c is None:
            return Classification("unresolved")
        c.index = self.canon[c.index]
        return c


def classify_section(machine: Machine, h: Word, basis: ClassBasis, budget: Budget | None = None) -> Classification:
    return Classifier(machine, basis, budget).classify(h)


# --- the matrix -------------------------------------------------------------------------

@dataclass
class ThurstonStructure:
    """Cycle data independent of ``p``: entries ``(row, column, cycle length)``."""
    size: int
    entries: list[tuple[int, int, int]]
    unresolved: list[tuple[int, Word]]
    warnings: list[str]
    details: list[dict]

    def matrix(self, p: float) -> np.ndarray:
        m = np.zeros((self.size, self.size))
        for i, j, k in self.entries:
            m[i, j] += float(k) ** (1.0 - p)
        return m


@dataclass
class ThurstonMatrix:
    p: float
    M: np.ndarray
    unresolved: list[tuple[int, Word]]
    warnings: list[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.unresolved)


def thurston_structure(machine: Machine, basis: ClassBasis, budget: Budget | None = None) -> ThurstonStructure:
    clf = Classifier(machine, basis, budget)
    group = machine.group
    entries, unresolved, details = [], [], []
    for j, g in enumerate(basis.reps):
        for k, x, sec in cycle_structure(group, reduce_word(g)):
            c = clf.classify(sec)
            details.append({"column": j, "cycle_length": k, "start": x, "section": group.format(sec),
                            "class": c.kind, "index": c.index, "how": c.how})
            if c.kind == "index":
                entries.append((c.index, j, k))
            elif c.kind == "unresolved":
                unresolved.append((j, sec))
    return ThurstonStructure(len(basis.reps), entries, unresolved, clf.warnings, details)


def thurston_matrix(machine: Machine, basis: ClassBasis, p: float, budget: Budget | None = None) -> ThurstonMatrix:
    st = thurston_structure(machine, basis, budget)
    return ThurstonMatrix(p, st.matrix(p), st.unresolved, st.warnings)


# --- spectral radius -------------------------------------------------------------------

def _irreducible_radius(a: np.ndarray, tol: float, maxiter: int) -> float:
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])
    if not a.any():
        return 0.0
    b = a + np.eye(n)  # primitive, same Perron vector, radius shifted by 1
    x = np.ones(n)
    lo, hi = 0.0, math.inf
    for _ in range(maxiter):
        y = b @ x
        ratios = y / x
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * hi:
            return 0.5 * (lo + hi) - 1.0
        x = y / np.linalg.norm(y)
    raise NonConvergence((lo - 1.0, hi - 1.0))


def spectral_radius(m, tol: float = 1e-10, maxiter: int = 100_000) -> float:
    """Perron root of a nonnegative matrix, blockwise over strongly connected components."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("square matrix required")
    if (a < 0).any():
        raise ValueError("matrix must be nonnegative")
    n = a.shape[0]
    if n == 0:
        return 0.0
    graph = {i: [j for j in range(n) if a[i, j] > 0] for i in range(n)}
    best = 0.0
    for comp in strongly_connected(graph):
        idx = np.array(sorted(comp))
        best = max(best, _irreducible_radius(a[np.ix_(idx, idx)], tol, maxiter))
    return best


# --- critical exponent bound ------------------------------------------------------------------

@dataclass
class PcBound:
    p_star: float | None
    bracket: tuple[float, float] | None
    rho_at_ends: tuple[float, float]
    verdict: str
    unresolved: list = field(default_factory=list)


def pc_lower_bound(machine: Machine, basis: ClassBasis, p_range=(1.0, 3.0), tol: float = 1e-3,
                   budget: Budget | None = None, structure: ThurstonStructure | None = None) -> PcBound:
    """``p* = inf{p : rho(T_p) < 1}`` by bisection; then ``p_c >= p*`` and ``ARdim >= p*``."""
    st = structure or thurston_structure(machine, basis, budget)
    if st.unresolved:
        raise PartialBasis(st.unresolved)
    lo, hi = map(float, p_range)
    r_lo = spectral_radius(st.matrix(lo))
    r_hi = spectral_radius(st.matrix(hi))
    if r_lo < 1.0:
        return PcBound(lo, (lo, lo), (r_lo, r_hi), f"rho < 1 already at p = {lo:g}; no bound above it")
    if r_hi >= 1.0:
        return PcBound(None, None, (r_lo, r_hi), f"rho >= 1 on the whole range; p_c >= {hi:g}, ARdim >= {hi:g}")
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if spectral_radius(st.matrix(mid)) < 1.0:
            b = mid
        else:
            a = mid
    p = 0.5 * (a + b)
    return PcBound(p, (a, b), (r_lo, r_hi), f"p_c >= {p:.4f}, ARdim >= {p:.4f}")


def verdict_at(p: float, rho: float, tol: float = 1e-9) -> str:
    """Conclusion at a single exponent: ``rho(T_p) >= 1`` gives ``p_c >= p`` and ``ARdim >= p``."""
    if rho >= 1.0 - tol:
        return f"rho >= 1 at p = {p:g}: p_c >= {p:g}, ARdim >= {p:g}"
    return f"rho < 1 at p = {p:g}: no bound from this exponent"


# --- tensor powers ------------------------------------------------------------------

def tensor_square(group: GroupDef) -> GroupDef:
    """The same group acting on the alphabet ``X^2`` (letter ``(x, y)`` is ``x*d + y``)."""
    d = group.alphabet_size
    gens = []
    for i, gen in enumerate(group.generators):
        word = (i + 1,)
        perm, secs = [], []
        for x in range(d):
            for y in range(d):
                img = W.act(group, word, (x, y))
                perm.append(img[0] * d + img[1])
                secs.append(W.section(group, word, (x, y)))
        gens.append(Generator(gen.name, tuple(perm), tuple(secs)))
    return GroupDef(d * d, tuple(gens))
