import random

import pytest

from sasgraph.errors import KBudgetExceeded, NotPartialIso, NotYetPresent
from sasgraph.graph import gamma_one, saturation_check
from sasgraph.tower import (
    Branch,
    LimitMap,
    birth_stage,
    branch_index,
    build_tower,
    check_lift,
    lift_partial_automorphism,
    limit_edge,
    locally_finite_window,
    sample_limit_maps,
    top_branches,
)


@pytest.fixture(scope="module")
def t3():
    return build_tower(3, 3)


@pytest.fixture(scope="module")
def t5():
    return build_tower(5, 3)


def test_stage_one_is_gamma_one():
    t = build_tower(1)
    g = t.stage(1).graph
    assert g == gamma_one()
    assert g.right_labels == ((1,), (2,))


def test_kinds_alternate(t5):
    assert [s.kind for s in t5.stages] == ["initial", "magic", "doubled", "magic", "doubled"]


def test_doubling_rule(t5):
    for n in (3, 5):
        prev, cur = t5.stage(n - 1).graph, t5.stage(n).graph
        assert cur.right_size == 2 * prev.right_size
        assert cur.left_size == prev.left_size
        assert set(cur.right_labels) == {lab + (c,) for lab in prev.right_labels for c in (1, 2)}
        for i, lab in enumerate(cur.right_labels):
            j = prev.label_index[lab[:-1]]
            assert cur.adjacency[i] == prev.adjacency[j]


def test_magic_stage_renaming():
    t = build_tower(2, 2)
    prev, cur = t.stage(1).graph, t.stage(2).graph
    assert cur.right_labels[: prev.right_size] == tuple(lab + (1,) for lab in prev.right_labels)
    for lab in cur.right_labels[prev.right_size :]:
        assert lab[0] == 0 and len(lab) == 2


def test_rho_is_induced_and_pi_inverts(t5):
    for n in range(1, t5.depth):
        a, b = t5.stage(n).graph, t5.stage(n + 1).graph
        for u in range(a.right_size):
            ru = t5.rho(n, "right", u)
            assert b.right_labels[ru] == a.right_labels[u] + (1,)
            assert t5.pi(n, "right", ru) == u
            # induced: the old left vertices see the same column
            assert b.adjacency[ru] & ((1 << a.left_size) - 1) == a.adjacency[u]
        for x in range(min(a.left_size, 64)):
            assert t5.pi(n, "left", t5.rho(n, "left", x)) == x


def test_magic_generators_are_automorphisms(t3):
    st = t3.stage(2)
    assert st.generators
    for g in st.generators:
        assert g.is_automorphism_of(st.graph)


def test_limit_edge_examples(t3):
    assert limit_edge(t3, 0, Branch((1,))) is True
    assert limit_edge(t3, 1, Branch((1,))) is False


def test_limit_edge_not_yet_present(t3):
    with pytest.raises(NotYetPresent):
        limit_edge(t3, 10**6, Branch((1,)))
    with pytest.raises(NotYetPresent):
        limit_edge(t3, 0, Branch((7, 7, 7, 7)))


def test_edge_stability_exhaustive_depth2():
    t = build_tower(2, 3)
    g2 = t.stage(2).graph
    for x in range(g2.left_size):
        for lab in g2.right_labels:
            limit_edge(t, x, Branch(lab))


def test_edge_stability_random_pairs(t5):
    rng = random.Random(0)
    for _ in range(100):
        n = rng.randint(1, t5.depth)
        g = t5.stage(n).graph
        limit_edge(t5, rng.randrange(g.left_size), Branch(rng.choice(g.right_labels)))


def test_branch_identity_and_birth(t5):
    assert Branch((1,)) == Branch((1, 1, 1))
    assert birth_stage(t5, Branch((1,))) == 1
    assert branch_index(t5, Branch((1,)), 4) == 0
    assert len(top_branches(t5)) == t5.stage(5).right_size


def test_empty_lift_is_identity(t5):
    lift = lift_partial_automorphism(t5, LimitMap())
    assert check_lift(t5, lift) == []
    for n in range(lift.n0 + 1, t5.depth + 1):
        f = lift.f_bar[n]
        assert f.left_perm == tuple(range(len(f.left_perm)))


def test_swap_lift(t5):
    lift = lift_partial_automorphism(t5, LimitMap.of({0: 1, 1: 0}))
    assert lift.n0 == 1
    assert check_lift(t5, lift) == []
    f2 = lift.f_bar[2]
    # at stage 2 the swap must exchange the images of <1> and <2>
    i1, i2 = branch_index(t5, Branch((1,)), 2), branch_index(t5, Branch((2,)), 2)
    assert f2.right_perm[i1] == i2 and f2.right_perm[i2] == i1
    assert locally_finite_window(t5, lift, {0}) == {0, 1}


def test_fixed_branch_lift(t5):
    b = Branch((1,))
    lift = lift_partial_automorphism(t5, LimitMap.of({0: 0}, {b: b}))
    assert check_lift(t5, lift) == []
    for n in range(lift.n0, t5.depth + 1):
        i = branch_index(t5, b, n)
        f = lift.f_bar[n]
        rmap = dict(f.right) if hasattr(f, "right") else dict(enumerate(f.right_perm))
        assert rmap[i] == i


def test_lift_rejects_non_iso(t3):
    with pytest.raises(NotPartialIso):
        lift_partial_automorphism(t3, LimitMap.of({0: 1}, {Branch((1,)): Branch((1,))}))


def test_lift_k_budget():
    t = build_tower(3, 1)
    with pytest.raises(KBudgetExceeded):
        lift_partial_automorphism(t, LimitMap.of({0: 1, 1: 0}))


def test_windows(t5):
    lift = lift_partial_automorphism(t5, LimitMap())
    assert locally_finite_window(t5, lift, {0, 3}) == {0, 3}
    for f in sample_limit_maps(t5, 5, seed=2):
        lift = lift_partial_automorphism(t5, f)
        if lift.n0 == t5.depth:
            continue
        m = lift.total_stage()
        size = t5.stage(m).left_size
        if size <= 4096:
            assert locally_finite_window(t5, lift, range(size)) == set(range(size))


def test_sampled_lifts(t5):
    for f in sample_limit_maps(t5, 10, seed=7):
        assert check_lift(t5, lift_partial_automorphism(t5, f)) == []


def test_saturation_baseline(t5):
    # recorded when the tower was first built; failures must not grow
    left = [len(saturation_check(t5.stage(n).graph, 1, 1, 1, "left", among=range(4)).failures) for n in (2, 4)]
    right = [len(saturation_check(t5.stage(n).graph, 1, 1, 1, "right", among=range(6)).failures) for n in (2, 4)]
    assert left == [2, 0]
    assert right == [60, 0]


def test_manifest(t5):
    m = t5.manifest()
    assert m["depth"] == 5
    assert [s["kind"] for s in m["stages"]][:2] == ["initial", "magic"]
