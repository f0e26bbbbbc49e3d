"""Word lengths, contraction coefficients and section tail sums."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import words as W
from .dsl import Word
from .machine import Inconclusive, Machine, bfs_ball
from .nucleus import Nucleus


@dataclass
class BallTable:
    radius: int
    lengths: dict[int, int]          # state id -> word length
    words: dict[int, Word]           # state id -> a shortest word
    spheres: list[int]
    complete: bool = True

    def __len__(self) -> int:
        return len(self.lengths)

    def __contains__(self, s: int) -> bool:
        return s in self.lengths

    def length(self, s: int) -> int | None:
        return self.lengths.get(s)

    def outer(self, min_length: float | None = None) -> list[int]:
        """States with ``l(g) >= min_length`` (default ``R/2``)."""
        cut = self.radius / 2 if min_length is None else min_length
        return [s for s, l in self.lengths.items() if l >= cut]


def ball(machine: Machine, radius: int, max_size: int | None = None) -> BallTable:
    """Exact lengths by breadth-first search over the symmetric generating set."""
    lengths, words, spheres = {}, {}, [0] * (radius + 1)
    complete = True
    limit = max_size or machine.budget.max_states
    try:
        for s, r, w in bfs_ball(machine, radius, limit):
            lengths[s] = r
            words[s] = w
            spheres[r] += 1
        if len(lengths) >= limit:
            complete = False
    except Inconclusive:
        complete = False
    return BallTable(radius, lengths, words, spheres, complete)


def level_sections(machine: Machine, s: int, n: int) -> list[int]:
    """Sections of ``s`` at all words of length ``n``, in lexicographic order."""
    layer = [s]
    for _ in range(n):
        layer = [t for u in layer for t in machine.sec[u]]
    return layer


@dataclass
class EtaEstimate:
    p: float
    n: int
    radius: int
    value: float
    root: float
    argmax: Word | None
    considered: int
    flagged: int
    table: list = field(default_factory=list)


def _norm(values, p: float) -> float:
    if math.isinf(p):
        return float(max(values))
    return float(sum(v ** p for v in values) ** (1.0 / p))


def _section_lengths(machine: Machine, table: BallTable, s: int, n: int):
    """Section lengths at level ``n``; unknown ones replaced by reduced word length."""
    out, flagged = [], False
    secs = level_sections(machine, s, n)
    for i, t in enumerate(secs):
        l = table.lengths.get(t)
        if l is None:
            flagged = True
            v = []
            j = i
            for _ in range(n):
                j, x = divmod(j, machine.d)
                v.append(x)
            l = len(W.section(machine.group, table.words[s], tuple(reversed(v))))
        out.append(l)
    return out, flagged


def eta_estimate(machine: Machine, p: float, n: int, table: BallTable,
                 min_length: float | None = None) -> EtaEstimate:
    """``max (sum_v l(g|_v)^p)^(1/p) / l(g)`` over elements with ``l(g) >= min_length``.

    The default cut is half the radius.  A cut closer to the radius trades
    sample size for less bias from the additive constant in section lengths.
    """
    best, arg, flagged, considered = 0.0, None, 0, 0
    for s in table.outer(min_length):
        l = table.lengths[s]
        if l == 0:
            continue
        lens, flag = _section_lengths(machine, table, s, n)
        flagged += flag
        considered += 1
        val = _norm(lens, p) / l
        if val > best:
            best, arg = val, table.words[s]
    root = best ** (1.0 / n) if n > 0 else best
    return EtaEstimate(p, n, table.radius, best, root, arg, considered, flagged)


@dataclass
class CriticalScan:
    rows: list[EtaEstimate]
    p_hat: float | None          # smallest scanned p with root < 1 - margin
    p_interp: float | None       # where the root crosses 1, by linear interpolation
    margin: float


def critical_exponent_scan(machine: Machine, ps, n: int, table: BallTable, margin: float = 0.02,
                           min_length: float | None = None) -> CriticalScan:
    rows = [eta_estimate(machine, p, n, table, min_length) for p in sorted(ps)]
    p_hat = next((r.p for r in rows if r.root < 1 - margin), None)
    p_interp = None
    for a, b in zip(rows, rows[1:]):
        if abs(a.root - 1.0) < 1e-12:
            p_interp = a.p
            break
        if a.root > 1.0 > b.root and not math.isinf(b.p):
            t = (a.root - 1.0) / (a.root - b.root)
            p_interp = a.p + t * (b.p - a.p)
            break
    if p_interp is None and rows and rows[0].root < 1.0:
        p_interp = rows[0].p
    return CriticalScan(rows, p_hat, p_interp, margin)


def section_tail_sum(machine: Machine, g, p: float, threshold: float, depth: int, table: BallTable,
                     nucleus: Nucleus | None = None) -> float:
    """Sum of ``l(g|_v)^p`` over ``|v| <= depth`` with ``l(g|_v) >= threshold``.

    Descent stops below sections that lie in the nucleus.
    """
    s = machine.canonical(g) if isinstance(g, tuple) else int(g)
    word = g if isinstance(g, tuple) else table.words.get(s)
    total = 0.0
    stack = [(s, word, 0)]
    while stack:
        t, w, k = stack.pop()
        l = table.lengths.get(t)
        if l is None:
            if w is None:
                raise Inconclusive("radius", "section length outside the ball table")
            l = len(w)
        if l >= threshold:
            total += l ** p
        if k == depth or (nucleus is not None and t in nucleus.states):
            continue
        for x in range(machine.d):
            child_word = W.first_level(machine.group, w, x)[1] if w is not None else None
            stack.append((machine.sec[t][x], child_word, k + 1))
    return total
