import math
import random

import numpy as np
import pytest

from selfsim import registry
from selfsim.contraction import ball
from selfsim.dsl import inverse_word
from selfsim.randwalk import (BadParams, Measure, NotSymmetric, SectionLengths, build_measure, count_traverses,
                              heavy_tail, lazy, orbit_walk, simulate_sections, uniform_symmetric, validate)
from selfsim.schreier import level_permutation
from selfsim.words import EpPoint

from conftest import builtin_machine
from oracles import brute_traverses, transition_matrix

KEYS = registry.list_keys()


def test_uniform_carpet_has_four_atoms():
    mu = uniform_symmetric(builtin_machine("sierpinski_carpet"))
    assert [(w, p) for w, p in mu.atoms] == [((1,), .25), ((2,), .25), ((3,), .25), ((4,), .25)]


def test_lazy_odometer():
    m = builtin_machine("odometer")
    mu = lazy(uniform_symmetric(m), 0.5, m)
    assert dict(mu.atoms) == {(): 0.5, (1,): 0.25, (-1,): 0.25}


def test_heavy_tail_moments():
    m = builtin_machine("basilica")
    mu = heavy_tail(m, 2.5, 64)
    assert sum(p for _, p in mu.atoms) == pytest.approx(1.0, abs=1e-12)
    assert max(len(w) for w, _ in mu.atoms) == 64
    # P(radius k) proportional to (1+k)^-(1+beta); second moment finite, bounded by the series
    z = sum((1 + k) ** -3.5 for k in range(1, 65))
    assert mu.moment(2.0) == pytest.approx(sum(k * k * (1 + k) ** -3.5 for k in range(1, 65)) / z, rel=1e-9)
    mass = dict(mu.atoms)
    assert all(mass[inverse_word(w)] == p for w, p in mu.atoms)


def test_measure_validation():
    m = builtin_machine("odometer")
    with pytest.raises(BadParams):
        lazy(uniform_symmetric(m), 1.0)
    with pytest.raises(BadParams):
        build_measure(m, "heavytail", beta=-1)
    with pytest.raises(BadParams):
        validate(m, Measure("x", [((1,), 0.6), ((-1,), 0.5)]))
    with pytest.raises(NotSymmetric):
        validate(m, Measure("x", [((1,), 0.5), ((1, 1), 0.5)]))
    # not formally symmetric, but a = a^-1 in the carpet group
    carpet = builtin_machine("sierpinski_carpet")
    validate(carpet, Measure("x", [((1,), 0.5), ((-2,), 0.5)]))


def test_sampler_frequencies():
    m = builtin_machine("basilica")
    mu = lazy(uniform_symmetric(m), 0.2, m)
    rng = np.random.default_rng(0)
    n = 10 ** 6
    counts = np.bincount(mu.sample(rng, n), minlength=len(mu.atoms))
    for c, p in zip(counts, mu.probs):
        assert abs(c - n * p) <= 4 * math.sqrt(n * p * (1 - p))


@pytest.mark.parametrize("key", ["basilica", "sierpinski_carpet", "grigorchuk"])
def test_walk_graph_consistency(key):
    m = builtin_machine(key)
    mu = uniform_symmetric(m)
    n = 3 if m.d == 2 else 2
    P = transition_matrix(m.group, mu.weights(m), n)
    perms = np.stack([level_permutation(m, m.canonical(w), n) for w, _ in mu.atoms])
    rng = np.random.default_rng(1)
    draws = 200_000
    for v in (0, m.d ** n - 1):
        k = mu.sample(rng, draws)
        counts = np.bincount(perms[k, v], minlength=m.d ** n)
        expected = P[v] * draws
        sel = expected > 0
        assert counts[~sel].sum() == 0
        chi2 = float(((counts[sel] - expected[sel]) ** 2 / expected[sel]).sum())
        dof = max(int(sel.sum()) - 1, 1)
        assert (chi2 - dof) / math.sqrt(2 * dof) < 4


def test_traverse_examples():
    m = builtin_machine("odometer")
    a4 = (1,) * 4
    target = int(level_permutation(m, m.power(m.letter(1), 4), 3)[0])
    assert count_traverses(m, a4, 3, [0], [target]) == 1
    carpet = builtin_machine("sierpinski_carpet")
    # a fixes letters 2, 3, 4 and 7 (and everything below them)
    assert count_traverses(carpet, (1, 1, 1), 1, [2, 3], [0, 1, 5]) == 0


@pytest.mark.parametrize("key", KEYS)
def test_traverses_match_brute_force(key):
    m = builtin_machine(key)
    rng = random.Random(key)
    size = m.group.size
    for _ in range(1000):
        n = rng.randint(1, 4 if m.d <= 2 else (3 if m.d <= 4 else 2))
        V = m.d ** n
        word = tuple(rng.choice([k, -k]) for k in rng.choices(range(1, size + 1), k=rng.randint(0, 12)))
        verts = list(range(V))
        rng.shuffle(verts)
        a = rng.randint(1, max(1, V // 3))
        b = rng.randint(1, max(1, V // 3))
        A, B = verts[:a], verts[a:a + b]
        if not B:
            continue
        perms = [level_permutation(m, m.letter(c), n) for c in reversed(word)]
        assert count_traverses(m, word, n, A, B) == brute_traverses(perms, A, B)


def test_section_statistic_at_zero():
    m = builtin_machine("basilica")
    st = simulate_sections(m, uniform_symmetric(m), 0, [1, 2], 4, checkpoints=[0])
    assert st.mean[(1, 0)] == 0 and st.mean[(2, 0)] == 0


def test_odometer_statistic_is_level_independent():
    # sections of a^k at any level have lengths summing to |k|
    m = builtin_machine("odometer")
    table = ball(m, 16)
    sl = SectionLengths(m, table)
    for k in (1, 5, 37, 100):
        sums = sl.level_sums((1,) * k, [0, 1, 3, 5])
        assert all(total == k for total, _, _ in sums.values())
    st = simulate_sections(m, uniform_symmetric(m), 400, [1, 3, 5], 64, seed=2, checkpoints=[400], table=table)
    vals = [st.mean[(n, 400)] for n in (1, 3, 5)]
    assert vals[0] == vals[1] == vals[2]
    assert vals[0] == pytest.approx(st.word_length[400] / 400)


@pytest.mark.parametrize("key", ["basilica", "grigorchuk", "sierpinski_carpet"])
def test_section_lengths_bound_exact_lengths(key):
    m = builtin_machine(key)
    table = ball(m, 8)
    sl = SectionLengths(m, table)
    rng = random.Random(5)
    for _ in range(50):
        w = tuple(rng.choice([k, -k]) for k in rng.choices(range(1, m.group.size + 1), k=rng.randint(1, 4)))
        s = m.canonical(w)
        for n in (1, 2):
            layer = [s]
            for _ in range(n):
                layer = [t for u in layer for t in m.sec[u]]
            exact = sum(table.lengths[t] for t in layer)
            total, _, inexact = sl.level_sums(w, [n])[n]
            assert total >= exact
            if inexact == 0:
                assert total == exact


def test_hierarchy_consistency():
    m = builtin_machine("basilica")
    sl = SectionLengths(m, ball(m, 8))
    rng = random.Random(9)
    w = tuple(rng.choice([1, -1, 2, -2]) for _ in range(300))
    direct = sl.level_sums(w, [3])[3][0]
    pieces = sl.pieces(w)
    layer = [pieces]
    for _ in range(3):
        layer = [q for p in layer if p for q in sl.split(p)]
    assert direct == sum(l for p in layer for _, l, _ in p)


def test_basilica_statistic_decreases():
    m = builtin_machine("basilica")
    st = simulate_sections(m, uniform_symmetric(m), 1024, [2, 4, 6], 16, seed=0, table=ball(m, 8))
    vals = [st.mean[(n, 1024)] for n in (2, 4, 6)]
    assert vals[0] > vals[1] > vals[2]
    rows = st.rows()
    assert set(rows[0]) == {"statistic", "level", "t", "mean", "stderr", "fallback_fraction"}


def test_simulation_is_reproducible():
    m = builtin_machine("grigorchuk")
    mu = uniform_symmetric(m)
    a = simulate_sections(m, mu, 200, [1, 2], 8, seed=3)
    b = simulate_sections(m, mu, 200, [1, 2], 8, seed=3)
    assert a.mean == b.mean


def test_orbit_walk_identity_measure():
    m = builtin_machine("odometer")
    r = orbit_walk(m, Measure("id", [((), 1.0)]), EpPoint((), (0,)), 10, 5)
    assert r.return_frequency == 1.0


def test_orbit_walk_matches_direct_simulation():
    # same random increments, positions recomputed with act_boundary
    m = builtin_machine("basilica")
    mu = uniform_symmetric(m)
    p0 = EpPoint((), (0,))
    from selfsim.randwalk import _rng
    rng = _rng(11)
    u = rng.random((256, 20))
    cum = np.cumsum(mu.probs)
    returned = 0
    for trial in range(20):
        p = p0
        for t in range(40):
            k = min(int(np.searchsorted(cum, u[t, trial], side="right")), len(mu.atoms) - 1)
            p = m.act_boundary_id(m.canonical(mu.atoms[k][0]), p)
            if p == p0:
                returned += 1
                break
    r = orbit_walk(m, mu, p0, 40, 20, seed=11)
    assert r.returned == returned


def test_orbit_walk_contrast_small():
    nl = builtin_machine("nonliouville_fragmented")
    mu = uniform_symmetric(nl, list(registry.get("nonliouville_fragmented").measure))
    far = orbit_walk(nl, mu, EpPoint((), (0,)), 2000, 300, seed=0)
    od = builtin_machine("odometer")
    near = orbit_walk(od, uniform_symmetric(od), EpPoint((), (0,)), 2000, 300, seed=0)
    assert far.no_return > near.no_return + 0.1
