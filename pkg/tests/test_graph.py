import itertools
import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasgraph.errors import IndexOutOfRange
from sasgraph.graph import (
    Graph,
    GraphClass,
    PartialMap,
    SignedCond,
    TotalAut,
    all_graphs,
    canonical_code,
    check_partial_automorphism,
    classify,
    complete,
    enumerate_partial_automorphisms,
    find_extension,
    gamma_one,
    homogeneity_defect,
    is_extensional,
    saturation_check,
    squares,
)

GOLDEN = Path(__file__).parent / "golden"


@st.composite
def graphs(draw, max_left=4, max_right=4):
    nl = draw(st.integers(1, max_left))
    nr = draw(st.integers(1, max_right))
    adj = tuple(draw(st.integers(0, (1 << nl) - 1)) for _ in range(nr))
    return Graph(nl, tuple((i + 1,) for i in range(nr)), adj)


def brute_squares(g):
    n = 0
    for a, b in itertools.combinations(range(g.left_size), 2):
        for u, v in itertools.combinations(range(g.right_size), 2):
            if all(g.has_edge(x, w) for x in (a, b) for w in (u, v)):
                n += 1
    return n


# --- construction -----------------------------------------------------------


def test_gamma_one_shape():
    g = gamma_one()
    assert g.left_size == 2
    assert g.right_labels == ((1,), (2,))
    assert g.edges() == [(0, 0), (1, 1)]


def test_empty_side_rejected():
    with pytest.raises(ValueError):
        Graph(0, ((1,),), (0,))
    with pytest.raises(ValueError):
        Graph(2, (), ())


def test_duplicate_labels_rejected():
    with pytest.raises(ValueError):
        Graph(1, ((1,), (1,)), (0, 1))


def test_from_edges_out_of_range():
    with pytest.raises(IndexOutOfRange):
        Graph.from_edges(2, 2, [(2, 0)])


def test_partial_map_must_be_injective():
    with pytest.raises(ValueError):
        PartialMap(((0, 1), (1, 1)), ())


# --- partial automorphisms ------------------------------------------------


def test_empty_map_is_partial_automorphism():
    for g in (gamma_one(), complete(2, 3)):
        assert check_partial_automorphism(g, PartialMap())


def test_gamma_one_partial_maps():
    g = gamma_one()
    assert check_partial_automorphism(g, PartialMap.of({0: 1}, {0: 1}))
    assert not check_partial_automorphism(g, PartialMap.of({0: 1}, {0: 0}))


def test_partial_map_out_of_range():
    with pytest.raises(IndexOutOfRange):
        check_partial_automorphism(gamma_one(), PartialMap.of({0: 2}))


def test_enumerate_examples():
    g = gamma_one()
    assert list(enumerate_partial_automorphisms(g, 0)) == [PartialMap()]
    assert len(list(enumerate_partial_automorphisms(g, 1))) == 9
    k11 = complete(1, 1)
    assert len(list(enumerate_partial_automorphisms(k11, 2))) == 4


@given(graphs(3, 3), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_enumerate_unique_smallest_first(g, cap):
    maps = list(enumerate_partial_automorphisms(g, cap))
    assert len(set(maps)) == len(maps)
    sizes = [len(m) for m in maps]
    assert sizes == sorted(sizes)
    assert all(check_partial_automorphism(g, m) for m in maps)
    # independent count: every injective side-respecting map passing the edge test
    count = 0
    for kl in range(0, min(cap, g.left_size) + 1):
        for kr in range(0, min(cap - kl, g.right_size) + 1):
            for dl in itertools.combinations(range(g.left_size), kl):
                for il in itertools.permutations(range(g.left_size), kl):
                    for dr in itertools.combinations(range(g.right_size), kr):
                        for ir in itertools.permutations(range(g.right_size), kr):
                            if all(
                                g.has_edge(x, u) == g.has_edge(y, v)
                                for x, y in zip(dl, il)
                                for u, v in zip(dr, ir)
                            ):
                                count += 1
    assert count == len(maps)


@given(graphs(3, 3))
@settings(max_examples=40, deadline=None)
def test_find_extension_is_automorphism(g):
    for p in enumerate_partial_automorphisms(g, 2):
        t = find_extension(g, p)
        if t is None:
            continue
        assert t.is_automorphism_of(g)
        assert check_partial_automorphism(g, t.as_partial())
        assert all(t.left_perm[x] == y for x, y in p.left)
        assert all(t.right_perm[u] == v for u, v in p.right)


def test_total_aut_group_laws():
    a = TotalAut((1, 0, 2), (2, 0, 1))
    b = TotalAut((0, 2, 1), (1, 0, 2))
    assert a.compose(a.inverse()) == TotalAut((0, 1, 2), (0, 1, 2))
    ab = a.compose(b)
    assert all(ab.left_perm[x] == a.left_perm[b.left_perm[x]] for x in range(3))


# --- classification ---------------------------------------------------------


def test_classify_examples():
    assert classify(complete(2, 2)).kind is GraphClass.COMPLETE
    lab = classify(gamma_one())
    assert lab.kind is GraphClass.PERFECT_MATCHING and lab.extensional
    g = Graph.from_edges(2, 2, [(0, 0), (0, 1), (1, 0)])
    lab = classify(g)
    assert lab.kind is GraphClass.OTHER and lab.extensional


def test_one_by_one_graphs():
    assert classify(Graph(1, ((1,),), (0,))).kind is GraphClass.EMPTY
    assert classify(Graph(1, ((1,),), (1,))).kind is GraphClass.COMPLETE


SWAP = {
    GraphClass.EMPTY: GraphClass.COMPLETE,
    GraphClass.COMPLETE: GraphClass.EMPTY,
    GraphClass.PERFECT_MATCHING: GraphClass.CO_MATCHING,
    GraphClass.CO_MATCHING: GraphClass.PERFECT_MATCHING,
    GraphClass.OTHER: GraphClass.OTHER,
}


def _complement_ok(g):
    a, b = classify(g).kind, classify(g.complement()).kind
    if a is GraphClass.PERFECT_MATCHING and b is GraphClass.PERFECT_MATCHING:
        return True  # 2x2: the complement of a matching is a matching
    return b is SWAP[a]


def test_complement_swaps_classes_exhaustive_small():
    for nl in range(1, 4):
        for nr in range(1, 4):
            for g in all_graphs(nl, nr):
                assert _complement_ok(g)


@given(graphs(4, 4))
@settings(max_examples=200, deadline=None)
def test_complement_swaps_classes_4x4(g):
    assert _complement_ok(g)


def test_extensional_flag():
    assert is_extensional(gamma_one())
    assert not is_extensional(complete(2, 2))


def test_homogeneity_defect_examples():
    assert homogeneity_defect(complete(2, 3), 5) == []
    assert homogeneity_defect(gamma_one(), 4) == []
    one_edge = Graph.from_edges(2, 2, [(0, 0)])
    defect = homogeneity_defect(one_edge, 4)
    assert PartialMap.of({0: 1}) in defect


def test_classification_golden_list():
    golden = json.loads((GOLDEN / "homogeneous_up_to_3x3.json").read_text())
    for nl in range(1, 4):
        for nr in range(1, 4):
            found = set()
            for g in all_graphs(nl, nr):
                if not homogeneity_defect(g, nl + nr):
                    found.add((tuple(canonical_code(g)[2]), classify(g).kind.value))
            pinned = {(tuple(e["code"]), e["class"]) for e in golden[f"{nl}x{nr}"]}
            assert found == pinned


# --- saturation, squares, signed conditions ------------------------------


def test_saturation_examples():
    rep = saturation_check(complete(2, 2), 0, 0, 1)
    assert set(rep.failures) == {((0,), (1,)), ((1,), (0,))}
    assert saturation_check(gamma_one(), 0, 0, 1).saturated
    assert saturation_check(complete(3, 3), 0, 0, 0).saturated


@given(graphs(4, 4), st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_saturation_antitone_in_m(g, m):
    if g.left_size < 2:
        return
    a = set(saturation_check(g, 0, 0, m).failures)
    b = set(saturation_check(g, 0, 0, m + 1).failures)
    assert a <= b


def test_saturation_among_subset():
    g = Graph.from_edges(3, 2, [(0, 0), (1, 1)])
    full = saturation_check(g, 0, 0, 1)
    part = saturation_check(g, 0, 0, 1, among=[0, 1])
    assert set(part.failures) <= set(full.failures)
    assert part.saturated


def test_squares_examples():
    assert squares(complete(2, 2)) == 1
    assert squares(complete(2, 3)) == 3
    assert squares(gamma_one()) == 0


@given(graphs())
@settings(max_examples=100, deadline=None)
def test_squares_brute_force_and_transpose(g):
    assert squares(g) == brute_squares(g)
    assert squares(g) == squares(g.transpose())


@given(graphs(), st.data())
@settings(max_examples=60, deadline=None)
def test_signed_cond_witnesses(g, data):
    keys = data.draw(st.lists(st.integers(0, g.right_size - 1), unique=True, max_size=3))
    signs = data.draw(st.lists(st.booleans(), min_size=len(keys), max_size=len(keys)))
    sigma = SignedCond(tuple(zip(keys, signs)))
    expected = [
        x for x in range(g.left_size) if all(g.has_edge(x, u) == s for u, s in zip(keys, signs))
    ]
    assert sigma.witnesses(g) == expected


def test_signed_cond_rejects_duplicate_keys():
    with pytest.raises(ValueError):
        SignedCond(((0, True), (0, False)))
