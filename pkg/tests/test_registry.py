import pytest

from selfsim import registry
from selfsim import words as W
from selfsim.dsl import parse_group, print_group
from selfsim.machine import is_trivial
from selfsim.nucleus import compute_nucleus, is_contracting
from selfsim.schreier import tiles_disjoint
from selfsim.thurston import Classifier, ClassBasis

from conftest import builtin_machine


def test_keys():
    assert registry.list_keys() == ["odometer", "grigorchuk", "basilica", "img_z2_minus_1_16z2",
                                    "shishikura_tan_mating", "sierpinski_carpet", "nonliouville_fragmented"]
    with pytest.raises(registry.UnknownKey):
        registry.get("nope")


@pytest.mark.parametrize("key", registry.list_keys())
def test_entry_loads_and_reverifies(key):
    e = registry.get(key)
    assert e.provenance
    assert parse_group(e.text) == e.group
    assert parse_group(print_group(e.group)) == e.group
    if e.notes.get("contracting"):
        assert is_contracting(builtin_machine(key))[0] == "Yes"
    m = builtin_machine(key)
    if e.tiles:
        u, v = (tuple(int(c) for c in t) for t in e.tiles)
        assert tiles_disjoint(m, compute_nucleus(m), u, v)
    for w in e.basis:
        e.group.word(w)
    for name in e.measure:
        e.group.index(name)


def test_carpet_entry():
    g = registry.get("sierpinski_carpet").group
    assert g.alphabet_size == 8 and g.size == 4


def test_img_entry():
    g = registry.get("img_z2_minus_1_16z2").group
    m = builtin_machine("img_z2_minus_1_16z2")
    assert g.alphabet_size == 4 and g.names == ["a", "b", "c"]
    a = g.generators[0]
    assert a.perm == (0, 1, 2, 3)
    assert [g.format(s) for s in a.sections] == ["b", "e", "c", "e"]
    assert g.generators[1].perm == (3, 2, 1, 0)
    c = g.generators[2]
    assert c.perm == (1, 0, 3, 2)
    for k in (1, 2, 3):
        assert is_trivial(m, (k, k))
    # sections (a, a, e, e); the file may spell the second one a^-1
    assert [m.canonical(s) for s in c.sections] == [m.letter(1)] * 2 + [0, 0]


def test_nonliouville_entry():
    g = registry.get("nonliouville_fragmented").group
    assert g.alphabet_size == 8
    assert g.names == [f"a{i}" for i in range(8)] + ["b", "c"]
    m = builtin_machine("nonliouville_fragmented")
    # a0 is fragmented into the product b*c
    assert m.canonical(g.word("b*c")) == m.canonical(g.word("a0"))


def test_mating_basis_is_four_distinct_classes():
    m = builtin_machine("shishikura_tan_mating")
    e = registry.get("shishikura_tan_mating")
    clf = Classifier(m, ClassBasis([e.group.word(w) for w in e.basis], 6, list(e.basis)))
    assert clf.canon == [0, 1, 2, 3]


def test_grigorchuk_and_basilica_recursions():
    g = registry.get("grigorchuk").group
    assert W.act(g, (1,), (0, 1)) == (1, 1)
    assert [g.format(s) for s in g.generators[1].sections] == ["a", "c"]
    b = registry.get("basilica").group
    assert b.generators[0].perm == (1, 0) and [b.format(s) for s in b.generators[0].sections] == ["b", "e"]
