import itertools
import json

import numpy as np
import pytest

from sasgraph.errors import (
    BudgetExhausted,
    ComplementarityFails,
    FunctionsAgree,
    SizeGuardExceeded,
    StreamExhausted,
)
from sasgraph.graph import Graph, SignedCond
from sasgraph.oracle import HashOracle, TowerOracle
from sasgraph.splitting import (
    AutoHandle,
    TreeParams,
    audit_split,
    audit_tree,
    certify_incompatible,
    cover_oracle,
    default_sigmas,
    disjoint_images,
    distinct_on_difference,
    extension_tree,
    independent_block,
    recheck_certificate,
    separating_condition,
    split,
    SplitTrace,
    tower_handles,
)
from sasgraph.tower import LimitMap, build_tower, lift_partial_automorphism


@pytest.fixture(scope="module")
def tower_oracle():
    return TowerOracle(build_tower(5, 3))


@pytest.fixture(scope="module")
def handles(tower_oracle):
    return tower_handles(tower_oracle, 3, seed=1)


@pytest.fixture(scope="module")
def swap(tower_oracle):
    lift = lift_partial_automorphism(tower_oracle.tower, LimitMap.of({0: 1, 1: 0}))
    return AutoHandle.from_total(tower_oracle, lift.f_bar[lift.top], "swap")


def pair_swap(x):
    return x ^ 1


# --- automorphism handles ----------------------------------------------------


def test_handles_are_automorphisms(tower_oracle, handles, swap):
    rs = [tower_oracle.right_handle(i) for i in range(0, tower_oracle.right_count, 37)]
    for h in handles + [swap]:
        assert h.spot_check(range(0, 2000, 97), rs) == []
    assert swap.apply_left(0) == 1 and swap.apply_left(1) == 0


def test_handle_group_ops(swap):
    e = swap.compose(swap.inverse())
    assert e.is_identity
    assert not swap.is_identity
    assert swap.inverse().inverse().same_as(swap)


# --- distinct_on_difference --------------------------------------------------------


def test_equal_functions_agree(tower_oracle, swap):
    with pytest.raises(FunctionsAgree):
        distinct_on_difference(tower_oracle, swap, swap)


def test_identity_against_swap(tower_oracle, swap):
    ident = AutoHandle.identity(tower_oracle)
    d = distinct_on_difference(tower_oracle, ident, swap)
    o = tower_oracle
    inside = [x for x in (0, 1) if o.edge(x, d.u) and not o.edge(x, d.v)]
    assert inside
    assert d.sample
    for y in d.sample:
        assert o.edge(y, d.u) and not o.edge(y, d.v)
        assert ident.apply_left(y) != swap.apply_left(y)


def test_excluded_handles_are_skipped(tower_oracle, swap):
    ident = AutoHandle.identity(tower_oracle)
    first = distinct_on_difference(tower_oracle, ident, swap)
    pos = tower_oracle.right_position(first.u)
    excluded = {tower_oracle.right_handle(i) for i in range(pos + 1)}
    later = distinct_on_difference(tower_oracle, ident, swap, excluded)
    assert later.u not in excluded and later.v not in excluded
    assert tower_oracle.right_position(later.u) > pos


# --- separating conditions -------------------------------------------------------


def test_single_auto_empty_condition(tower_oracle, handles):
    assert len(separating_condition(tower_oracle, handles[:1])) == 0


def test_two_autos(tower_oracle, handles):
    sigma = separating_condition(tower_oracle, handles[:2])
    assert 0 < len(sigma) <= 2


def test_three_autos_distinct(tower_oracle, handles):
    autos = handles[:3]
    sigma = separating_condition(tower_oracle, autos, check=20)
    ws = list(itertools.islice(tower_oracle.left_witness_stream(sigma, 1 << 20), 20))
    assert ws
    for y in ws:
        vals = [a.apply_left(y) for a in autos]
        assert len(set(vals)) == 3


def test_separating_respects_excluded(tower_oracle, handles):
    first = separating_condition(tower_oracle, handles[:2])
    again = separating_condition(tower_oracle, handles[:2], excluded=set(first.domain))
    assert not set(again.domain) & set(first.domain)


# --- disjoint images ---------------------------------------------------------


def test_disjoint_images_examples():
    assert disjoint_images(itertools.count(), [lambda x: 2 * x, lambda x: 2 * x + 1], 4) == [0, 1, 2, 3]
    assert disjoint_images(itertools.count(), [lambda x: x, pair_swap], 3) == [0, 2, 4]
    assert disjoint_images(iter([5, 9, 11, 20]), [lambda x: x], 3) == [5, 9, 11]
    assert disjoint_images(itertools.count(), [lambda x: x], 0) == []


def test_disjoint_images_exhaustion():
    with pytest.raises(StreamExhausted) as info:
        disjoint_images(iter([0, 1, 2]), [lambda x: x, pair_swap], 3)
    assert info.value.partial == [0, 2]


def test_disjoint_images_pairwise_check():
    gs = [lambda x: x, pair_swap, lambda x: x + 7]
    out = disjoint_images(itertools.count(), gs, 6)
    vals = [g(x) for x in out for g in gs]
    assert len(set(vals)) == len(vals)


# --- independent blocks ---------------------------------------------------------


def test_independent_block_trivial(tower_oracle):
    ident = AutoHandle.identity(tower_oracle)
    assert independent_block(tower_oracle, SignedCond(), [ident], 0) == []
    assert independent_block(tower_oracle, SignedCond(), [ident], 5) == [0, 1, 2, 3, 4]


def test_independent_block_two_autos(tower_oracle, handles):
    G = handles[:2]
    X = independent_block(tower_oracle, SignedCond(), G, 3)
    vals = [g.apply_left(x) for g in G for x in X]
    assert len(X) == 3 and len(set(vals)) == 6


# --- split ------------------------------------------------------------------------


def test_split_empty():
    o = HashOracle(1)
    trace = split(o, [AutoHandle.identity(o)], [])
    assert trace.steps == [] and trace.a == trace.b == frozenset()


def test_split_identity_only():
    o = HashOracle(1)
    ident = AutoHandle.identity(o)
    sigmas = [SignedCond(((ident, True),))] * 6
    trace = split(o, [ident], sigmas)
    assert trace.b == frozenset()
    assert set(range(6)) <= trace.a
    assert audit_split(o, trace, lambda n: n) == []


def test_split_mixed_condition():
    o = HashOracle(1)
    ident = AutoHandle.identity(o)
    u = 3
    trace = split(o, [ident], [SignedCond(((u, True), (ident, False)))], demand=lambda n: 2)
    X = trace.steps[0].X
    assert len(X) == 2
    for x in X:
        assert o.edge(x, u)
        assert x in trace.b
    assert 0 in trace.a


def test_split_rejects_foreign_auto(tower_oracle, handles):
    with pytest.raises(ValueError):
        split(tower_oracle, handles[:1], [SignedCond(((handles[1], True),))])


def test_split_tower_audit(tower_oracle, handles):
    sigmas = default_sigmas(tower_oracle, handles, 8, seed=3)
    trace = split(tower_oracle, handles, sigmas)
    assert audit_split(tower_oracle, trace, lambda n: n) == []
    assert set(range(8)) <= trace.a | trace.b
    assert not trace.a & trace.b


def test_split_partial_trace_on_budget():
    o = HashOracle(1)
    ident = AutoHandle.identity(o)
    sigmas = [SignedCond(((0, True), (1, True), (ident, True)))] * 6
    with pytest.raises((BudgetExhausted, StreamExhausted)) as info:
        split(o, [ident], sigmas, budget=8)
    assert isinstance(info.value.partial, SplitTrace)
    assert audit_split(o, info.value.partial, lambda n: n) == []


def test_split_on_cover():
    base = Graph.from_edges(6, 6, [(x, u) for x in range(6) for u in range(6) if (x + 2 * u) % 3 == 0])
    o, G = cover_oracle(base, 2, seed=1)
    trace = split(o, G, default_sigmas(o, G, 6, seed=1))
    assert audit_split(o, trace, lambda n: n) == []


# --- certificates ---------------------------------------------------------------


def test_certificate_examples():
    c = certify_incompatible(lambda x: x % 2 == 0, lambda x: x % 2 == 1, 100, "evens", "odds")
    assert c.line() == "CERT ok N=100 S=evens T=odds"
    assert recheck_certificate(c, lambda x: x % 2 == 0, lambda x: x % 2 == 1)
    assert not recheck_certificate(c, lambda x: x % 2 == 0, lambda x: x % 3 == 1)
    with pytest.raises(ComplementarityFails) as info:
        certify_incompatible(lambda x: x < 5, lambda x: x < 5, 10)
    assert info.value.x == 0


def test_certificate_from_split(tower_oracle, handles):
    trace = split(tower_oracle, handles, default_sigmas(tower_oracle, handles, 6, seed=5))
    S = trace.a
    c = certify_incompatible(lambda x: x in S, lambda x: x not in S, 64)
    assert c.probe == 64


# --- extension tree ----------------------------------------------------------------


def test_tree_depth_zero(tower_oracle, handles):
    root = extension_tree(tower_oracle, handles[:2], 0)
    assert root.children == () and root.certificate is None


def test_tree_depth_one(tower_oracle, handles):
    root = extension_tree(tower_oracle, handles[:2], 1)
    certs = [n.certificate for n in root.walk() if n.certificate]
    assert len(certs) == 1 and certs[0].probe == 64
    assert audit_tree(root, 64) == []


def test_tree_depth_three(tower_oracle, handles):
    root = extension_tree(tower_oracle, handles[:3], 3, TreeParams(seed=1))
    certs = [n.certificate for n in root.walk() if n.certificate]
    assert len(certs) == 7
    assert len(root.leaves()) == 8
    assert audit_tree(root, 64) == []
    # leaves differ on their added vertices restricted to the probe window
    xs = np.arange(64)
    sigs = {frozenset(v.member(xs).tobytes() for v in leaf.added) for leaf in root.leaves()}
    assert len(sigs) == 8
    json.dumps(root.to_json())


def test_tree_size_guard(tower_oracle, handles):
    with pytest.raises(SizeGuardExceeded):
        extension_tree(tower_oracle, handles, 5)
