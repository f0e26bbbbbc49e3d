import math

import numpy as np
import pytest

from selfsim import registry
from selfsim import words as W
from selfsim.machine import Budget
from selfsim.thurston import (ClassBasis, Classifier, NonConvergence, PartialBasis, classify_section, cycle_structure,
                              pc_lower_bound, spectral_radius, tensor_square, thurston_matrix, thurston_structure,
                              verdict_at)
from selfsim.machine import Machine

from conftest import builtin_machine


def _basis(key, reps=None):
    g = registry.get(key).group
    reps = reps or list(registry.get(key).basis)
    return ClassBasis([g.word(r) for r in reps], 6, reps)


def test_cycle_structure_examples():
    od = registry.get("odometer").group
    assert cycle_structure(od, (1,)) == [(2, 0, (1,))]
    carpet = registry.get("sierpinski_carpet").group
    cyc = cycle_structure(carpet, carpet.word("a*c"))
    assert sorted(k for k, _, _ in cyc) == [1, 1, 3, 3]
    assert cycle_structure(carpet, ()) == [(1, x, ()) for x in range(8)]


def test_cycle_structure_against_permutation_oracle():
    for key in registry.list_keys():
        g = registry.get(key).group
        for w in [(1,), (1, 2), (-1, 2, 1)] if g.size > 1 else [(1,), (1, 1)]:
            perm = W.level_perm(g, w)
            for k, x, sec in cycle_structure(g, w):
                y, steps = x, 0
                while True:
                    y = perm[y]
                    steps += 1
                    if y == x:
                        break
                assert steps == k
                assert sec == W.section(g, W.power(w, k), (x,))


@pytest.mark.parametrize("key", ["odometer", "sierpinski_carpet", "shishikura_tan_mating", "basilica"])
def test_start_point_independence(key):
    m = builtin_machine(key)
    g = m.group
    reps = list(registry.get(key).basis) or ["a*b"]
    clf = Classifier(m, ClassBasis([g.word(r) for r in reps], 6, reps))
    for rep in reps:
        w = g.word(rep)
        base = cycle_structure(g, w)
        for k, x, _ in base:
            perm = W.level_perm(g, w)
            cyc = [x]
            while perm[cyc[-1]] != x:
                cyc.append(perm[cyc[-1]])
            ref = clf.classify(W.section(g, W.power(w, k), (x,)))
            for y in cyc[1:]:
                other = clf.classify(W.section(g, W.power(w, k), (y,)))
                assert (other.kind, other.index) == (ref.kind, ref.index)


def test_classify_examples():
    carpet = builtin_machine("sierpinski_carpet")
    g = carpet.group
    c = classify_section(carpet, g.word("a*b"), _basis("sierpinski_carpet"))
    assert c.kind == "zero"
    od = builtin_machine("odometer")
    c = classify_section(od, (1,), _basis("odometer"))
    assert (c.kind, c.index) == ("index", 0)


def test_odometer_matrix():
    m = builtin_machine("odometer")
    for p in (1.0, 2.0, 3.0, 1.7):
        M = thurston_matrix(m, _basis("odometer"), p).M
        assert M.shape == (1, 1) and M[0, 0] == pytest.approx(2 ** (1 - p), abs=1e-12)


def test_carpet_matrix():
    m = builtin_machine("sierpinski_carpet")
    for p in (1.0, 1.5, 2.0):
        tm = thurston_matrix(m, _basis("sierpinski_carpet"), p)
        assert not tm.partial
        assert tm.M[0, 0] == pytest.approx(2 * 3 ** (1 - p), abs=1e-12)
        assert spectral_radius(tm.M) == pytest.approx(2 * 3 ** (1 - p), abs=1e-9)


def test_mating_matrix_matches_listed_action():
    m = builtin_machine("shishikura_tan_mating")
    tm = thurston_matrix(m, _basis("shishikura_tan_mating"), 2.0)
    want = np.zeros((4, 4))
    # columns: images of x, x^-1, y, y^-1
    want[3, 0] = 0.5
    want[2, 1] = 0.5
    want[0, 2], want[3, 2] = 1.0, 0.5
    want[1, 3], want[2, 3] = 1.0, 0.5
    assert not tm.partial
    assert np.allclose(tm.M, want)
    assert spectral_radius(tm.M) == pytest.approx(1.0, abs=1e-6)
    assert "ARdim >= 2" in verdict_at(2.0, spectral_radius(tm.M))


def test_spectral_radius_oracle():
    rng = np.random.default_rng(0)
    assert spectral_radius(np.zeros((3, 3))) == 0.0
    assert spectral_radius([[0.5]]) == 0.5
    for _ in range(30):
        n = int(rng.integers(1, 7))
        M = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
        assert spectral_radius(M) == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-8, abs=1e-10)
    # reducible with a periodic block
    M = np.array([[0, 2, 0], [2, 0, 0], [1, 1, 0.5]])
    assert spectral_radius(M) == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(NonConvergence):
        spectral_radius(rng.random((5, 5)), tol=1e-300, maxiter=3)


def test_pc_lower_bound():
    od = pc_lower_bound(builtin_machine("odometer"), _basis("odometer"))
    assert od.p_star == pytest.approx(1.0, abs=1e-3)
    carpet = pc_lower_bound(builtin_machine("sierpinski_carpet"), _basis("sierpinski_carpet"), (1.0, 2.5))
    assert carpet.p_star == pytest.approx(math.log(6) / math.log(3), abs=1e-3)


def test_partial_basis():
    m = builtin_machine("sierpinski_carpet")
    basis = ClassBasis([m.group.word("a*c")], conj_radius=0)
    st = thurston_structure(m, basis, Budget(conj_radius=0))
    if st.unresolved:
        with pytest.raises(PartialBasis):
            pc_lower_bound(m, basis, structure=st)
    # the conjugate rep c*a shows up unresolved when not tracked at radius 0
    assert all(isinstance(j, int) for j, _ in st.unresolved)


def test_iterate_law():
    for key in ("odometer", "sierpinski_carpet"):
        g = registry.get(key).group
        g2 = tensor_square(g)
        m2 = Machine(g2)
        basis = _basis(key)
        for p in (1.0, 1.5, 2.0, 3.0):
            M = thurston_matrix(builtin_machine(key), basis, p).M
            M2 = thurston_matrix(m2, basis, p).M
            assert np.abs(M2 - M @ M).max() <= 1e-9
