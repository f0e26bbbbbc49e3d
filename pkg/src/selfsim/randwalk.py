"""Random walks: measures, section-length statistics, traverses and orbit walks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import words as W
from .dsl import Word, inverse_word, reduce_word
from .machine import Inconclusive, Machine
from .schreier import level_permutation, level_section_ids, word_to_index
from .words import EpPoint


class NotSymmetric(ValueError):
    pass


class BadParams(ValueError):
    pass


# --- measures ------------------------------------------------------------------

@dataclass
class Measure:
    kind: str
    atoms: list[tuple[Word, float]]
    params: dict = field(default_factory=dict)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms], dtype=float)

    def weights(self, machine: Machine) -> dict[str, float]:
        """Label -> mass, suitable for :func:`selfsim.schreier.level_graph`."""
        out: dict[str, float] = {}
        for w, p in self.atoms:
            label = machine.group.format(w)
            out[label] = out.get(label, 0.0) + p
        return out

    def moment(self, p: float) -> float:
        return float(sum(prob * len(w) ** p for w, prob in self.atoms))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        cum = np.cumsum(self.probs)
        k = np.searchsorted(cum, rng.random(size), side="right")
        return np.minimum(k, len(self.atoms) - 1)


def _merge(atoms) -> list[tuple[Word, float]]:
    out: dict[Word, float] = {}
    for w, p in atoms:
        w = reduce_word(w)
        out[w] = out.get(w, 0.0) + p
    return sorted(out.items(), key=lambda a: (len(a[0]), [abs(c) * 2 + (c < 0) for c in a[0]]))


def uniform_symmetric(machine: Machine, generators=None) -> Measure:
    """Uniform on the generators and their inverses; involutions appear once."""
    group = machine.group
    names = list(generators) if generators else group.names
    atoms = []
    for name in names:
        c = group.index(name) + 1
        if machine.letter(c) == machine.letter(-c):
            atoms.append((c,))
        else:
            atoms.extend([(c,), (-c,)])
    p = 1.0 / len(atoms)
    return validate(machine, Measure("UniformSymmetric", [(w, p) for w in atoms], {"generators": names}))


def lazy(base: Measure, alpha: float, machine: Machine | None = None) -> Measure:
    if not 0.0 <= alpha < 1.0:
        raise BadParams("hold probability must lie in [0, 1)")
    atoms = [((), alpha)] + [(w, (1.0 - alpha) * p) for w, p in base.atoms]
    m = Measure("Lazy", _merge(atoms), {"alpha": alpha, "base": base.kind})
    return validate(machine, m) if machine is not None else m


def heavy_tail(machine: Machine, beta: float, radius: int, words_per_radius: int = 4, seed: int = 0) -> Measure:
    """``P(radius k) ∝ (1+k)^-(1+beta)`` for ``1 <= k <= radius``, uniform over a
    symmetric set of random reduced words of length ``k``."""
    if beta <= 0 or radius < 1 or words_per_radius < 1:
        raise BadParams("need beta > 0, radius >= 1 and words_per_radius >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    m = machine.group.size
    letters = [c for k in range(1, m + 1) for c in (k, -k)]
    masses = np.array([(1.0 + k) ** -(1.0 + beta) for k in range(1, radius + 1)])
    masses /= masses.sum()
    atoms = []
    for k, mass in zip(range(1, radius + 1), masses):
        chosen = set()
        for _ in range(words_per_radius):
            w: list[int] = []
            while len(w) < k:
                c = letters[rng.integers(len(letters))]
                if not w or w[-1] != -c:
                    w.append(c)
            chosen.add(tuple(w))
            chosen.add(inverse_word(tuple(w)))
        for w in sorted(chosen):
            atoms.append((w, mass / len(chosen)))
    return validate(machine, Measure("HeavyTail", _merge(atoms),
                                     {"beta": beta, "radius": radius, "words_per_radius": words_per_radius}))


def validate(machine: Machine | None, measure: Measure) -> Measure:
    total = sum(p for _, p in measure.atoms)
    if abs(total - 1.0) > 1e-12:
        raise BadParams(f"probabilities sum to {total!r}")
    if any(p < 0 for _, p in measure.atoms):
        raise BadParams("negative probability")
    mass = dict(measure.atoms)
    if all(abs(mass.get(inverse_word(w), 0.0) - p) <= 1e-12 for w, p in measure.atoms):
        return measure
    if machine is None:
        raise NotSymmetric("measure is not formally symmetric")
    by_state: dict[int, float] = {}
    for w, p in measure.atoms:
        s = machine.canonical(w)
        by_state[s] = by_state.get(s, 0.0) + p
    for s, p in by_state.items():
        if abs(by_state.get(machine.inverse(s), 0.0) - p) > 1e-12:
            raise NotSymmetric(f"mass of state {s} differs from the mass of its inverse")
    return measure


def build_measure(machine: Machine, kind: str = "uniform", **params) -> Measure:
    kind = kind.lower()
    if kind in ("uniform", "uniformsymmetric"):
        return uniform_symmetric(machine, params.get("generators"))
    if kind == "lazy":
        base = uniform_symmetric(machine, params.get("generators"))
        return lazy(base, float(params.get("alpha", 0.5)), machine)
    if kind in ("heavytail", "heavy_tail"):
        return heavy_tail(machine, float(params.get("beta", 2.5)), int(params.get("radius", 64)),
                          int(params.get("words_per_radius", 4)), int(params.get("seed", 0)))
    raise BadParams(f"unknown measure kind {kind!r}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


# --- section statistics -------------------------------------------------------

class SectionLengths:
    """Sections of a group word, level by level, as products of short pieces.

    A section is kept as a list of machine states whose lengths are exact
    (from a ball table); adjacent pieces are multiplied together whenever
    the product stays inside the table.  The sum of piece lengths is an
    upper bound for the section length, and it is exact for single pieces.
    Without a table every piece is a single generator letter, which gives
    the freely reduced word length.
    """

    def __init__(self, machine: Machine, table=None):
        self.machine = machine
        self.table = table
        self.radius = table.radius if table is not None else 1
        self.lengths: dict[int, int] = dict(table.lengths) if table is not None else {0: 0}
        self._words = table.words if table is not None else {}
        for k in range(1, machine.group.size + 1):
            for c in (k, -k):
                s = machine.letter(c)
                self.lengths.setdefault(s, 1)
        self._exhausted = False

    def _length(self, s: int, parent: int, x: int) -> tuple[int, bool]:
        l = self.lengths.get(s)
        if l is not None:
            return l, True
        # outside the table: bound by the word-level section of the parent's word
        w = self._words.get(parent)
        if w is None:
            return self.lengths[parent] * self._max_section(), False
        return len(W.section(self.machine.group, w, (x,))), False

    def _max_section(self) -> int:
        g = self.machine.group
        return max(1, max(len(W.letter_section(g, c, x)) for k in range(1, g.size + 1) for c in (k, -k)
                          for x in range(self.machine.d)))

    def merge(self, pieces: list[tuple[int, int, bool]]) -> list[tuple[int, int, bool]]:
        """Multiply neighbours while the product stays within the table radius."""
        m = self.machine
        stack: list[tuple[int, int, bool]] = []
        for q in pieces:
            while stack and not self._exhausted and q[2] and stack[-1][2] \
                    and stack[-1][1] + q[1] <= self.radius:
                try:
                    r = m.product(stack[-1][0], q[0])
                except Inconclusive:
                    self._exhausted = True
                    break
                l = self.lengths.get(r)
                if l is None:
                    break
                stack.pop()
                q = (r, l, True)
            if q[0] != 0:
                stack.append(q)
        return stack

    def pieces(self, g: Word) -> list[tuple[int, int, bool]]:
        m = self.machine
        return self.merge([(m.letter(c), 1, True) for c in g])

    def split(self, pieces) -> list[list[tuple[int, int, bool]]]:
        """All first-level sections of the product of ``pieces``."""
        m = self.machine
        out = []
        for x in range(m.d):
            secs = []
            y = x
            for s, _, _ in reversed(pieces):
                t = m.sec[s][y]
                if t != 0:
                    l, exact = self._length(t, s, y)
                    secs.append((t, l, exact))
                y = m.perm[s][y]
            secs.reverse()
            out.append(self.merge(secs))
        return out

    def level_sums(self, g: Word, levels) -> dict[int, tuple[float, int, int]]:
        """For each level ``n``: ``(sum of length bounds, nonempty sections, inexact sections)``."""
        levels = sorted(set(levels))
        out = {}
        layer = [self.pieces(g)]
        depth = 0
        for n in levels:
            while depth < n:
                layer = [sec for p in layer if p for sec in self.split(p)]
                depth += 1
            total, count, fallback = 0, 0, 0
            for p in layer:
                if not p:
                    continue
                total += sum(l for _, l, _ in p)
                count += 1
                fallback += len(p) > 1 or not p[0][2]
            out[n] = (total, count, fallback)
        return out


def _prepend(rev: list[int], w: Word) -> None:
    """Left-multiply the word stored reversed in ``rev`` by ``w``."""
    for c in reversed(w):
        if rev and rev[-1] == -c:
            rev.pop()
        else:
            rev.append(c)


@dataclass
class SectionStats:
    levels: list[int]
    checkpoints: list[int]
    mean: dict                    # (level, t) -> mean of (1/t) sum_v l(g_t|_v)
    stderr: dict
    fallback_fraction: dict
    trials: int
    word_length: dict             # t -> mean reduced length of g_t

    def rows(self) -> list[dict]:
        out = []
        for t in self.checkpoints:
            for n in self.levels:
                out.append({"statistic": "section_length_rate", "level": n, "t": t,
                            "mean": self.mean[(n, t)], "stderr": self.stderr[(n, t)],
                            "fallback_fraction": self.fallback_fraction[(n, t)]})
        return out


def simulate_sections(machine: Machine, measure: Measure, t_max: int, levels, trials: int, seed: int = 0,
                      checkpoints=None, table=None) -> SectionStats:
    """Estimate ``(1/t) E[sum_{v in X^n} l(g_t|_v)]`` for ``g_t = s_t ... s_1``."""
    levels = sorted(set(levels))
    checkpoints = sorted(set(checkpoints or [t_max]))
    rng = _rng(seed)
    lengths = SectionLengths(machine, table)
    atoms = [w for w, _ in measure.atoms]
    draws = measure.sample(rng, (t_max, trials)) if t_max > 0 else np.zeros((0, trials), dtype=np.int64)
    samples = {key: [] for key in ((n, t) for n in levels for t in checkpoints)}
    fallbacks = {key: [0, 0] for key in samples}
    wl = {t: [] for t in checkpoints}
    for trial in range(trials):
        rev: list[int] = []
        col = draws[:, trial]
        t = 0
        for cp in checkpoints:
            while t < cp:
                _prepend(rev, atoms[col[t]])
                t += 1
            g = tuple(reversed(rev))
            wl[cp].append(len(g))
            if cp == 0:
                for n in levels:
                    samples[(n, cp)].append(0.0)
                continue
            for n, (total, count, fb) in lengths.level_sums(g, levels).items():
                samples[(n, cp)].append(total / cp)
                fallbacks[(n, cp)][0] += fb
                fallbacks[(n, cp)][1] += count
    mean, stderr, frac = {}, {}, {}
    for key, vals in samples.items():
        a = np.asarray(vals, dtype=float)
        mean[key] = float(a.mean()) if len(a) else 0.0
        stderr[key] = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
        fb, cnt = fallbacks[key]
        frac[key] = fb / cnt if cnt else 0.0
    return SectionStats(levels, checkpoints, mean, stderr, frac, trials,
                        {t: float(np.mean(v)) for t, v in wl.items()})


# --- traverses ----------------------------------------------------------------------

def count_traverses(machine: Machine, word: Word, n: int, A, B) -> int:
    """Traverses of level ``n`` from ``A`` to ``B`` along ``s_t ... s_1``.

    ``word`` is the product ``s_t * ... * s_1`` (its last letter acts first).
    A traverse is a time ``j`` and a trajectory whose position at ``j`` lies
    in ``B`` while its most recent earlier visit to ``A ∪ B`` was in ``A``.
    """
    size = machine.d ** n
    A = np.unique(np.asarray(A, dtype=np.int64))
    B = np.unique(np.asarray(B, dtype=np.int64))
    if np.intersect1d(A, B).size:
        raise ValueError("A and B must be disjoint")
    tag = np.zeros(size, dtype=np.int8)
    tag[A] = 1
    tag[B] = 2
    pos = np.arange(size, dtype=np.int64)
    last = tag[pos].copy()
    total = 0
    perms = {}
    for c in reversed(word):
        if c not in perms:
            perms[c] = level_permutation(machine, machine.letter(c), n)
        pos = perms[c][pos]
        now = tag[pos]
        total += int(np.count_nonzero((now == 2) & (last == 1)))
        last = np.where(now > 0, now, last)
    return total


def traverse_rate(machine: Machine, measure: Measure, n: int, A, B, t: int, trials: int, seed: int = 0) -> dict:
    """Mean of ``tau_n / t`` for walk words ``s_t ... s_1`` sampled from ``measure``."""
    rng = _rng(seed)
    atoms = [w for w, _ in measure.atoms]
    draws = measure.sample(rng, (trials, t))
    vals = []
    for row in draws:
        word: list[int] = []
        for k in reversed(row):
            word.extend(atoms[k])
        vals.append(count_traverses(machine, tuple(word), n, A, B) / t)
    a = np.asarray(vals)
    return {"level": n, "t": t, "mean": float(a.mean()),
            "stderr": float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0}


# --- orbit walks ------------------------------------------------------------------

@dataclass
class OrbitResult:
    trials: int
    returned: int
    no_return: float
    stderr: float
    distinct_mean: float
    discarded: int
    t_max: int

    @property
    def return_frequency(self) -> float:
        return 1.0 - self.no_return


def _prefix_depth(d: int, cap: int = 2 ** 18) -> int:
    k = 1
    while d ** (k + 1) <= cap:
        k += 1
    return k


def orbit_walk(machine: Machine, measure: Measure, p0: EpPoint, t_max: int, trials: int, seed: int = 0,
               depth: int | None = None) -> OrbitResult:
    """Walk ``x_t = s_t(x_{t-1})`` on the orbit of ``p0``; records returns to ``p0``.

    A point is stored exactly as (its first ``depth`` letters, the remaining
    tail); only the tail needs interning, and it changes rarely.
    """
    d = machine.d
    L = depth or _prefix_depth(d)
    states = [machine.canonical(w) for w, _ in measure.atoms]
    perms = np.stack([level_permutation(machine, s, L) for s in states])
    secs = np.stack([level_section_ids(machine, s, L) for s in states])
    tails: list[EpPoint] = []
    tail_id: dict[EpPoint, int] = {}

    def intern(p: EpPoint) -> int:
        i = tail_id.get(p)
        if i is None:
            i = tail_id[p] = len(tails)
            tails.append(p)
        return i

    def split(p: EpPoint) -> tuple[int, int]:
        head = p.truncate(L)
        tail = p
        for _ in range(L):
            tail = tail.tail()
        return word_to_index(head, d), intern(tail)

    act_cache: dict[tuple[int, int], int] = {}

    def act_tail(s: int, z: int) -> int:
        key = (s, z)
        r = act_cache.get(key)
        if r is None:
            r = act_cache[key] = intern(machine.act_boundary_id(s, tails[z]))
        return r

    start_prefix, start_tail = split(p0)
    rng = _rng(seed)
    prefix = np.full(trials, start_prefix, dtype=np.int64)
    tail = np.full(trials, start_tail, dtype=np.int64)
    returned = np.zeros(trials, dtype=bool)
    discarded = np.zeros(trials, dtype=bool)
    visited = [set() for _ in range(trials)] if trials * t_max <= 2_000_000 else None
    active = np.arange(trials)
    cum = np.cumsum(measure.probs)
    chunk = 256
    t = 0
    while t < t_max and len(active):
        steps = min(chunk, t_max - t)
        u = rng.random((steps, trials))
        for r in range(steps):
            k = np.minimum(np.searchsorted(cum, u[r, active], side="right"), len(states) - 1)
            pre = prefix[active]
            sec = secs[k, pre]
            prefix[active] = perms[k, pre]
            moving = np.flatnonzero(sec != 0)
            for i in moving.tolist():
                a = active[i]
                try:
                    tail[a] = act_tail(int(sec[i]), int(tail[a]))
                except Inconclusive:
                    discarded[a] = True
            if visited is not None:
                for a in active.tolist():
                    visited[a].add((int(prefix[a]), int(tail[a])))
            home = (prefix[active] == start_prefix) & (tail[active] == start_tail)
            returned[active[home]] = True
            active = active[~home & ~discarded[active]]
        t += steps
    kept = ~discarded
    n = int(kept.sum())
    p_no = float(1.0 - returned[kept].mean()) if n else float("nan")
    se = math.sqrt(p_no * (1 - p_no) / n) if n else float("nan")
    distinct = float(np.mean([len(v) for v in visited])) if visited is not None else float("nan")
    return OrbitResult(trials, int(returned[kept].sum()), p_no, se, distinct, int(discarded.sum()), t_max)


# --- report -----------------------------------------------------------------------

def _fit_rate(xs, ys) -> float | None:
    """Slope of log(y) against x; None when any value is nonpositive."""
    if len(xs) < 2 or any(y <= 0 for y in ys):
        return None
    return float(np.polyfit(np.asarray(xs, float), np.log(np.asarray(ys, float)), 1)[0])


def assemble_report(capacity_series: list[dict] | None, sections: SectionStats | None,
                     traverses: list[dict] | None = None, orbit: OrbitResult | None = None) -> dict:
    """Put the diagnostics side by side; the verdict is a heuristic label only."""
    out: dict = {"label": "HEURISTIC"}
    evidence, against = [], []
    if capacity_series:
        xs = [r["level"] for r in capacity_series]
        ys = [r["capacity"] for r in capacity_series]
        rate = _fit_rate(xs, ys)
        ratio = ys[-1] / ys[0] if ys[0] > 0 else None
        decays = ratio is not None and ratio < 0.5 and all(b < a for a, b in zip(ys, ys[1:]))
        out["capacity"] = {"series": capacity_series, "log_rate": rate, "last_over_first": ratio, "decays": decays}
        (evidence if decays else against).append("capacity decay" if decays else "no capacity decay")
    if sections is not None:
        t = sections.checkpoints[-1]
        vals = [sections.mean[(n, t)] for n in sections.levels]
        rate = _fit_rate(sections.levels, vals)
        decreasing = all(b < a for a, b in zip(vals, vals[1:]))
        out["sections"] = {"levels": sections.levels, "t": t, "values": vals, "log_rate": rate,
                           "decreasing": decreasing,
                           "fallback_fraction": [sections.fallback_fraction[(n, t)] for n in sections.levels]}
        (evidence if decreasing else against).append(
            "section statistic decreasing" if decreasing else "section statistic not decreasing")
    if traverses:
        xs = [r["level"] for r in traverses]
        ys = [r["mean"] for r in traverses]
        out["traverses"] = {"series": traverses, "log_rate": _fit_rate(xs, ys),
                            "decreasing": all(b <= a for a, b in zip(ys, ys[1:]))}
    if orbit is not None:
        transient = orbit.no_return - 3 * orbit.stderr > 0.05
        out["orbit"] = {"no_return": orbit.no_return, "stderr": orbit.stderr, "t_max": orbit.t_max,
                        "transient": transient}
        if transient:
            against.append("orbit walk transient")
    if against and not evidence:
        verdict = "no Liouville evidence"
    elif evidence and not against:
        verdict = "Liouville evidence"
    else:
        verdict = "mixed evidence"
    out["verdict"] = verdict
    out["evidence"] = evidence
    out["against"] = against
    return out


@dataclass
class ReportConfig:
    tiles: tuple[Word, Word]
    capacity_levels: tuple[int, ...] = (3, 4, 5, 6, 7)
    section_levels: tuple[int, ...] = (2, 4, 6)
    section_t: int = 2 ** 12
    section_trials: int = 32
    traverse_levels: tuple[int, ...] = (2, 3, 4)
    traverse_t: int = 256
    traverse_trials: int = 16
    orbit_t: int = 0
    orbit_trials: int = 0
    table_radius: int = 8
    table_size: int = 50_000
    seed: int = 0


def liouville_report(machine: Machine, measure: Measure, config: ReportConfig) -> dict:
    """Capacity decay, section statistic, traverse rates and (optionally) an orbit walk."""
    from .contraction import ball
    from .nucleus import compute_nucleus
    from .potential import capacity_decay_scan
    from .schreier import suffix_cylinder

    nucleus = compute_nucleus(machine)
    u_A, u_B = map(tuple, config.tiles)
    caps = capacity_decay_scan(machine, nucleus, measure.weights(machine), u_A, u_B, config.capacity_levels)
    table = ball(machine, config.table_radius, config.table_size)
    sections = simulate_sections(machine, measure, config.section_t, config.section_levels,
                                 config.section_trials, config.seed, table=table)
    traverses = []
    for n in config.traverse_levels:
        if n < max(len(u_A), len(u_B)):
            continue
        A, B = suffix_cylinder(u_A, machine.d, n), suffix_cylinder(u_B, machine.d, n)
        traverses.append(traverse_rate(machine, measure, n, A, B, config.traverse_t,
                                       config.traverse_trials, config.seed))
    orbit = None
    if config.orbit_t and config.orbit_trials:
        orbit = orbit_walk(machine, measure, EpPoint((), (0,)), config.orbit_t, config.orbit_trials, config.seed)
    return assemble_report(caps, sections, traverses, orbit)
