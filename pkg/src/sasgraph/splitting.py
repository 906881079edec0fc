"""Splitting the left side against a family of automorphisms.

The pieces build on each other.  :func:`distinct_on_difference` finds two
right vertices ``u, v`` such that two automorphisms disagree everywhere on
``u - v``.  :func:`separating_condition` does this for every pair in a list.
:func:`disjoint_images` and :func:`independent_block` then pick points
whose images under a whole family are pairwise distinct.  :func:`split`
grows two disjoint sets ``a`` and ``b`` covering ``0..steps-1`` so that
prescribed mixed conditions keep having witnesses.  :func:`extension_tree`
iterates splits into a binary tree whose sibling extensions carry
complementarity certificates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .eppa import ho_cover, extend_in_cover
from .errors import (
    BudgetExhausted,
    ComplementarityFails,
    FunctionsAgree,
    NotPartialAutomorphism,
    SasGraphError,
    SizeGuardExceeded,
    StreamExhausted,
)
from .graph import Graph, PartialMap, SignedCond, TotalAut, check_partial_automorphism
from .oracle import AddedVertex, ExtendedOracle, GraphOracle, Oracle, TowerOracle, handle_id
from .tower import lift_partial_automorphism, sample_limit_maps

DEFAULT_BUDGET = 1 << 20
MAX_TREE_DEPTH = 4
# moved points tried before distinct_on_difference gives up
MOVED_TRIES = 64


# ---------------------------------------------------------------------------
# automorphism handles


@dataclass(frozen=True, eq=False)
class AutoHandle:
    """A total automorphism of ``oracle`` acting on naturals and right handles.

    ``left`` and ``right`` are permutation arrays over left vertices and
    right positions; ``None`` means the identity (the only option on an
    infinite side).
    """

    name: str
    oracle: Oracle = field(repr=False)
    left: np.ndarray | None = field(default=None, repr=False)
    right: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def identity(cls, oracle: Oracle) -> "AutoHandle":
        return cls("id", oracle)

    @classmethod
    def from_total(cls, oracle: Oracle, t: TotalAut, name: str) -> "AutoHandle":
        if len(t.left_perm) != oracle.left_count or len(t.right_perm) != oracle.right_count:
            raise ValueError("permutation sizes do not match the oracle")
        return cls(name, oracle, np.asarray(t.left_perm), np.asarray(t.right_perm))

    def _inverse_array(self, perm: np.ndarray) -> np.ndarray:
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        return inv

    @property
    def is_identity(self) -> bool:
        return all(
            p is None or np.array_equal(p, np.arange(len(p))) for p in (self.left, self.right)
        )

    def apply_left(self, x: int) -> int:
        self.oracle.check_left(x)
        return x if self.left is None else int(self.left[x])

    def unapply_left(self, x: int) -> int:
        self.oracle.check_left(x)
        return x if self.left is None else int(self._left_inverse[x])

    def unapply_left_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs)
        return xs if self.left is None else self._left_inverse[xs]

    def apply_right(self, r):
        if self.right is None:
            self.oracle.right_position(r)
            return r
        return self.oracle.right_handle(int(self.right[self.oracle.right_position(r)]))

    def unapply_right(self, r):
        if self.right is None:
            self.oracle.right_position(r)
            return r
        return self.oracle.right_handle(int(self._right_inverse[self.oracle.right_position(r)]))

    @property
    def _left_inverse(self) -> np.ndarray:
        cached = self.__dict__.get("_li")
        if cached is None:
            cached = self._inverse_array(self.left)
            object.__setattr__(self, "_li", cached)
        return cached

    @property
    def _right_inverse(self) -> np.ndarray:
        cached = self.__dict__.get("_ri")
        if cached is None:
            cached = self._inverse_array(self.right)
            object.__setattr__(self, "_ri", cached)
        return cached

    def inverse(self) -> "AutoHandle":
        if self.is_identity:
            return self
        name = self.name[:-3] if self.name.endswith("^-1") else self.name + "^-1"
        return AutoHandle(
            name,
            self.oracle,
            None if self.left is None else self._left_inverse,
            None if self.right is None else self._right_inverse,
        )

    def compose(self, other: "AutoHandle") -> "AutoHandle":
        """``self`` after ``other``."""
        if other.is_identity:
            return self
        if self.is_identity:
            return other

        def comp(p, q):
            if p is None:
                return q
            if q is None:
                return p
            return p[q]

        return AutoHandle(
            f"{self.name}*{other.name}",
            self.oracle,
            comp(self.left, other.left),
            comp(self.right, other.right),
        )

    def same_as(self, other: "AutoHandle") -> bool:
        def eq(p, q):
            if p is None or q is None:
                return (p is None or np.array_equal(p, np.arange(len(p)))) and (
                    q is None or np.array_equal(q, np.arange(len(q)))
                )
            return np.array_equal(p, q)

        return eq(self.left, other.left) and eq(self.right, other.right)

    def spot_check(self, xs: Iterable[int], rs: Iterable) -> list[str]:
        """Inverse and edge-preservation checks on the given points."""
        out = []
        rs = list(rs)
        for x in xs:
            if self.unapply_left(self.apply_left(x)) != x:
                out.append(f"{self.name}: unapply(apply({x})) != {x}")
            for r in rs:
                if self.oracle.edge(x, r) != self.oracle.edge(self.apply_left(x), self.apply_right(r)):
                    out.append(f"{self.name}: edge ({x}, {handle_id(r)}) not preserved")
        for r in rs:
            if self.unapply_right(self.apply_right(r)) != r:
                out.append(f"{self.name}: right inverse fails at {handle_id(r)}")
        return out


def _take(stream: Iterator, n: int) -> list:
    out = []
    if n <= 0:
        return out
    try:
        for v in stream:
            out.append(v)
            if len(out) >= n:
                break
    except BudgetExhausted:
        pass
    return out


def _left_limit(o: Oracle, budget: int) -> int:
    return budget if o.left_count is None else min(budget, o.left_count)


def _right_limit(o: Oracle, budget: int) -> int:
    return budget if o.right_count is None else min(budget, o.right_count)


# ---------------------------------------------------------------------------
# separating automorphisms


@dataclass(frozen=True)
class DifferencePair:
    u: object
    v: object
    witness: int
    sample: tuple[int, ...]


def distinct_on_difference(
    o: Oracle,
    f: AutoHandle,
    g: AutoHandle,
    excluded: Iterable = (),
    budget: int = DEFAULT_BUDGET,
    sample: int = 8,
) -> DifferencePair:
    """Right vertices ``u, v`` with ``f(x) != g(x)`` for every ``x`` in ``u - v``.

    With ``h = g^-1 f`` and a point ``x`` moved by ``h``, pick ``u`` holding
    ``x`` but neither ``h(x)`` nor ``h^-1(x)``, and put ``v = h(u)``.  Any
    ``x'`` fixed by ``h`` that lies in ``u`` also lies in ``h(u)``; the
    extra condition on ``h^-1(x)`` makes ``x`` itself a point of ``u - v``.
    """
    excluded = set(excluded)
    h = g.inverse().compose(f)
    if h.left is None:
        raise FunctionsAgree(f"{f.name} and {g.name} agree on every left vertex")
    limit = _left_limit(o, budget)
    moved = np.flatnonzero(h.left[:limit] != np.arange(min(limit, len(h.left))))
    if not len(moved):
        raise FunctionsAgree(f"{f.name} and {g.name} agree on the first {limit} left vertices")
    rlimit = _right_limit(o, budget)
    for x in map(int, moved[:MOVED_TRIES]):
        hx, hinv_x = h.apply_left(x), h.unapply_left(x)
        cand = o.right_row(x, 0, rlimit) & ~o.right_row(hx, 0, rlimit) & ~o.right_row(hinv_x, 0, rlimit)
        for i in np.flatnonzero(cand):
            u = o.right_handle(int(i))
            if u in excluded:
                continue
            try:
                v = h.apply_right(u)
            except SasGraphError:
                continue  # outside the handle's right domain
            if v in excluded:
                continue
            cond = SignedCond(((u, True), (v, False)))
            got = tuple(_take(o.left_witness_stream(cond, budget), sample))
            for y in got:
                if f.apply_left(y) == g.apply_left(y):
                    raise NotPartialAutomorphism(
                        f"{f.name}, {g.name} agree at {y} in u - v; not automorphisms"
                    )
            return DifferencePair(u, v, x, got)
    raise BudgetExhausted(
        f"no admissible right vertex among {rlimit} candidates for {min(len(moved), MOVED_TRIES)} moved points",
        found=0,
    )


def separating_condition(
    o: Oracle,
    autos: Sequence[AutoHandle],
    excluded: Iterable = (),
    budget: int = DEFAULT_BUDGET,
    check: int = 20,
) -> SignedCond:
    """A condition whose witnesses get pairwise distinct values under ``autos``.

    One :func:`distinct_on_difference` call per pair; handles already used
    are excluded from later calls so signs never clash.  The result is
    verified on its first ``check`` witnesses.
    """
    used = set(excluded)
    entries = []
    for i in range(len(autos)):
        for j in range(i + 1, len(autos)):
            d = distinct_on_difference(o, autos[i], autos[j], used, budget, sample=0)
            entries += [(d.u, True), (d.v, False)]
            used |= {d.u, d.v}
    sigma = SignedCond(tuple(entries))
    if len(autos) > 1:
        for y in _take(o.left_witness_stream(sigma, budget), check):
            vals = [a.apply_left(y) for a in autos]
            if len(set(vals)) != len(vals):
                raise NotPartialAutomorphism(f"values at {y} collide: {vals}")
    return sigma


def disjoint_images(
    B: Iterable[int], gs: Sequence[Callable[[int], int]], n: int
) -> list[int]:
    """Greedily pick ``n`` points of ``B`` with all images ``g_i(x)`` distinct.

    A point is taken unless one of its images already occurs as an image of
    a point taken before.  Raises :class:`StreamExhausted` if ``B`` ends.
    """
    chosen: list[int] = []
    images: set[int] = set()
    if n > 0:
        try:
            for x in B:
                img = [g(x) for g in gs]
                if images.isdisjoint(img):
                    chosen.append(x)
                    images.update(img)
                    if len(chosen) == n:
                        break
        except BudgetExhausted as exc:
            raise StreamExhausted(f"stream ended after {len(chosen)} of {n}: {exc}", chosen) from None
        if len(chosen) < n:
            raise StreamExhausted(f"stream ended after {len(chosen)} of {n}", chosen)
    values = [(g(x), i, x) for x in chosen for i, g in enumerate(gs)]
    if len({v for v, _, _ in values}) != len(values):
        raise NotPartialAutomorphism("image families are not injective on the chosen points")
    return chosen


def independent_block(
    o: Oracle,
    tau: SignedCond,
    G: Sequence[AutoHandle],
    n: int,
    budget: int = DEFAULT_BUDGET,
    avoid: Iterable[int] = (),
    excluded: Iterable = (),
) -> list[int]:
    """``n`` witnesses of ``tau`` on which the values ``g(x)`` are all distinct.

    A separating condition for ``G`` (kept off ``tau``'s handles) is added
    to ``tau`` before the greedy pick; points in ``avoid`` are skipped.
    """
    if n <= 0:
        return []
    sigma = separating_condition(o, G, set(excluded) | set(tau.domain), budget)
    avoid = set(avoid)
    stream = (x for x in o.left_witness_stream(tau.merge(sigma), budget) if x not in avoid)
    return disjoint_images(stream, [g.apply_left for g in G], n)


# ---------------------------------------------------------------------------
# the split


def _cond_json(sigma: SignedCond) -> list:
    out = []
    for k, s in sigma:
        name = ("auto:" + k.name) if isinstance(k, AutoHandle) else handle_id(k)
        out.append([name, "+" if s else "-"])
    return out


@dataclass(frozen=True)
class SplitStep:
    n: int
    a: tuple[int, ...]  # a_{n+1}
    b: tuple[int, ...]  # b_{n+1}
    X: tuple[int, ...]
    B: tuple[int, ...]
    sigma: SignedCond
    demand: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "a": list(self.a),
            "b": list(self.b),
            "X": list(self.X),
            "B": list(self.B),
            "sigma": _cond_json(self.sigma),
            "demand": self.demand,
        }


@dataclass
class SplitTrace:
    steps: list[SplitStep] = field(default_factory=list)

    @property
    def a(self) -> frozenset[int]:
        return frozenset(self.steps[-1].a) if self.steps else frozenset()

    @property
    def b(self) -> frozenset[int]:
        return frozenset(self.steps[-1].b) if self.steps else frozenset()

    def to_json(self) -> dict:
        return {"steps": [s.to_json() for s in self.steps]}


def _autos_of(sigma: SignedCond) -> list[tuple[AutoHandle, bool]]:
    return [(k, s) for k, s in sigma if isinstance(k, AutoHandle)]


def audit_split(o: Oracle, trace: SplitTrace, demand: Callable[[int], int]) -> list[str]:
    """Recheck conditions (i)-(iv) of every step from oracle queries."""
    problems = []
    prev_a, prev_b = frozenset(), frozenset()
    for st in trace.steps:
        a, b = frozenset(st.a), frozenset(st.b)
        if a & b:
            problems.append(f"step {st.n}: a and b meet in {sorted(a & b)}")
        if st.n not in a | b:
            problems.append(f"step {st.n}: {st.n} not placed")
        if not (prev_a <= a and prev_b <= b):
            problems.append(f"step {st.n}: sets shrank")
        if len(st.X) < demand(st.n):
            problems.append(f"step {st.n}: {len(st.X)} witnesses, {demand(st.n)} demanded")
        if set(st.X) & set(st.B):
            problems.append(f"step {st.n}: witnesses inside the excluded set")
        for x in st.X:
            for k, s in st.sigma:
                if isinstance(k, AutoHandle):
                    ok = k.unapply_left(x) in (a if s else b)
                else:
                    ok = o.edge(x, k) == s
                if not ok:
                    problems.append(f"step {st.n}: witness {x} fails {_cond_json(SignedCond(((k, s),)))}")
        prev_a, prev_b = a, b
    return problems


def split(
    o: Oracle,
    G_fin: Sequence[AutoHandle],
    sigmas: Sequence[SignedCond],
    demand: Callable[[int], int] = lambda n: n,
    budget: int = DEFAULT_BUDGET,
) -> SplitTrace:
    """Run one step per condition in ``sigmas`` and audit the result.

    At step ``n`` the point ``n`` joins ``a`` unless already placed.  With
    ``Gs`` the automorphisms named in ``sigma_n``, a block of ``demand(n)``
    witnesses of the right-handle part is chosen so that the values
    ``g^-1(x)`` are pairwise distinct and avoid every image of a placed
    point.  Each ``g^-1(x)`` then joins ``a`` or ``b`` by the sign of ``g``.
    """
    trace = SplitTrace()
    a: set[int] = set()
    b: set[int] = set()
    for n, sigma in enumerate(sigmas):
        autos = _autos_of(sigma)
        for g, _ in autos:
            if not any(g is h for h in G_fin):
                raise ValueError(f"automorphism {g.name} is not in G_fin")
        tau = sigma.restrict(lambda k: not isinstance(k, AutoHandle))
        a1, b1 = set(a), set(b)
        if n not in a1 | b1:
            a1.add(n)
        excluded = {n} | {g.apply_left(x) for g, _ in autos for x in a1 | b1}
        want = demand(n)
        try:
            X = independent_block(o, tau, [g.inverse() for g, _ in autos], want, budget, avoid=excluded)
        except (BudgetExhausted, StreamExhausted) as exc:
            exc.partial = trace
            raise
        for x in X:
            for g, s in autos:
                (a1 if s else b1).add(g.unapply_left(x))
        trace.steps.append(
            SplitStep(n, tuple(sorted(a1)), tuple(sorted(b1)), tuple(X), tuple(sorted(excluded)), sigma, want)
        )
        a, b = a1, b1
    problems = audit_split(o, trace, demand)
    if problems:
        raise NotPartialAutomorphism("split audit failed: " + "; ".join(problems))
    return trace


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Certificate:
    """``S`` and ``T`` are complementary below ``probe``.

    So no left vertex below ``probe`` is adjacent to both, and a graph
    holding both as right vertices has no witness for ``{S:+, T:+}``.
    """

    s_id: str
    t_id: str
    probe: int
    note: str = ""

    def line(self) -> str:
        return f"CERT ok N={self.probe} S={self.s_id} T={self.t_id}"

    def to_json(self) -> dict:
        return {"S": self.s_id, "T": self.t_id, "N": self.probe, "note": self.note}


def certify_incompatible(
    S: Callable[[int], bool],
    T: Callable[[int], bool],
    N: int,
    s_id: str = "S",
    t_id: str = "T",
    note: str = "",
) -> Certificate:
    for x in range(N):
        if bool(S(x)) == bool(T(x)):
            raise ComplementarityFails(x)
    return Certificate(s_id, t_id, N, note)


def recheck_certificate(c: Certificate, S: Callable[[int], bool], T: Callable[[int], bool]) -> bool:
    try:
        certify_incompatible(S, T, c.probe)
    except ComplementarityFails:
        return False
    return True


# ---------------------------------------------------------------------------
# extension tree


def image_vertex(ident: str, g: AutoHandle, members: frozenset[int], inside: bool) -> AddedVertex:
    """Right vertex ``g[S]`` (``inside``) or ``g[complement of S]``."""
    arr = np.fromiter(sorted(members), dtype=np.int64, count=len(members))

    def member(ys: np.ndarray) -> np.ndarray:
        hit = np.isin(g.unapply_left_array(np.asarray(ys)), arr)
        return hit if inside else ~hit

    return AddedVertex(ident, member, cofinite=not inside)


@dataclass
class TreeParams:
    steps: int = 8
    probe: int = 64
    budget: int = DEFAULT_BUDGET
    demand: Callable[[int], int] = lambda n: n
    seed: int = 0


@dataclass
class TreeNode:
    address: str
    oracle: Oracle = field(repr=False)
    added: tuple[AddedVertex, ...]
    generators: tuple[AutoHandle, ...]
    trace: SplitTrace | None = None
    certificate: Certificate | None = None
    children: tuple["TreeNode", ...] = ()
    note: str = "generator list carried unchanged; not closed under composition"

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self) -> list["TreeNode"]:
        return [n for n in self.walk() if not n.children]

    @property
    def family(self) -> tuple[str, ...]:
        return tuple(v.ident for v in self.added)

    def to_json(self) -> dict:
        return {
            "address": self.address,
            "added": list(self.family),
            "generators": [g.name for g in self.generators],
            "certificate": self.certificate.to_json() if self.certificate else None,
            "split": {"a": sorted(self.trace.a), "b": sorted(self.trace.b)} if self.trace else None,
            "note": self.note,
            "children": [c.to_json() for c in self.children],
        }


def default_sigmas(o: Oracle, G: Sequence[AutoHandle], steps: int, seed: int = 0) -> list[SignedCond]:
    """Deterministic mixed conditions, at most two automorphisms each.

    Each condition takes one of the first 16 base right handles with a
    random sign and automorphisms from ``G`` in rotation.  On an extended
    oracle every other condition also mentions one added vertex, with the
    sign that leaves infinitely many candidates: an added vertex is a finite
    set or the complement of one at this resolution.
    """
    rng = random.Random(seed)
    added = list(o.added) if isinstance(o, ExtendedOracle) else []
    base = _root_oracle(o)
    pool = [base.right_handle(i) for i in range(_right_limit(base, 16))]
    out = []
    for n in range(steps):
        entries = [(rng.choice(pool), rng.random() < 0.5)]
        if added and n % 2 == 1:
            v = added[(n // 2) % len(added)]
            entries.append((v, v.cofinite))
        entries.append((G[n % len(G)], n % 2 == 0))
        if len(G) > 1 and n % 3 == 2:
            entries.append((G[(n + 1) % len(G)], n % 2 == 1))
        out.append(SignedCond(tuple(entries)))
    return out


def extension_tree(o: Oracle, G: Sequence[AutoHandle], depth: int, params: TreeParams | None = None) -> TreeNode:
    """Binary tree of right-side extensions of ``o`` built by repeated splits.

    Each internal node splits the left side; child ``0`` gains the images
    ``g[S]`` of the split set, child ``1`` the images of its complement,
    for every ``g`` in the generator list.  Siblings carry a
    :class:`Certificate` for ``S`` against its complement.
    """
    params = params or TreeParams()
    if depth > MAX_TREE_DEPTH:
        raise SizeGuardExceeded(f"depth {depth} exceeds {MAX_TREE_DEPTH}")
    root = TreeNode("", o, (), tuple(G))
    _grow(root, depth, params, root)
    return root


def _grow(node: TreeNode, depth: int, params: TreeParams, root: TreeNode) -> None:
    if depth == 0:
        return
    G = list(node.generators)
    seed = params.seed * 1000003 + int("1" + node.address, 2)
    sigmas = default_sigmas(node.oracle, G, params.steps, seed)
    try:
        trace = split(node.oracle, G, sigmas, params.demand, params.budget)
    except (BudgetExhausted, StreamExhausted) as exc:
        exc.partial = {"tree": root, "at": node.address, "trace": exc.partial}
        raise
    S = trace.a
    tag = node.address or "r"
    kids = []
    for bit, inside in (("0", True), ("1", False)):
        new = tuple(
            image_vertex(f"{'S' if inside else 'N'}{tag}.{g.name}", g, S, inside) for g in G
        )
        added = new + node.added
        kids.append(TreeNode(node.address + bit, ExtendedOracle(_root_oracle(node.oracle), added), added, tuple(G)))
    s_vertex, t_vertex = kids[0].added[0], kids[1].added[0]
    node.certificate = certify_incompatible(
        s_vertex.contains,
        t_vertex.contains,
        params.probe,
        s_vertex.ident,
        t_vertex.ident,
        note=f"split of {len(trace.steps)} steps; |a|={len(trace.a)}, |b|={len(trace.b)}",
    )
    node.trace = trace
    node.children = tuple(kids)
    for kid in kids:
        _grow(kid, depth - 1, params, root)


def _root_oracle(o: Oracle) -> Oracle:
    return o.base if isinstance(o, ExtendedOracle) else o


def audit_tree(root: TreeNode, probe: int) -> list[str]:
    """Monotonicity, certificates, and leaf-family distinctness."""
    problems = []
    for node in root.walk():
        for kid in node.children:
            if not set(node.family) <= set(kid.family):
                problems.append(f"{kid.address}: family does not extend its parent")
            if not all(any(g is h for h in kid.generators) for g in node.generators):
                problems.append(f"{kid.address}: generators do not extend its parent")
        if node.children:
            c = node.certificate
            s, t = node.children[0].added[0], node.children[1].added[0]
            if c is None or not recheck_certificate(c, s.contains, t.contains):
                problems.append(f"{node.address or 'root'}: invalid certificate")
    leaves = root.leaves()
    xs = np.arange(probe)
    sigs = [frozenset(v.member(xs).tobytes() for v in leaf.added) for leaf in leaves]
    for i in range(len(leaves)):
        for j in range(i + 1, len(leaves)):
            if sigs[i] == sigs[j]:
                problems.append(f"leaves {leaves[i].address} and {leaves[j].address} coincide below {probe}")
    return problems


# ---------------------------------------------------------------------------
# ready-made automorphism families


def tower_handles(o: TowerOracle, count: int, seed: int = 0) -> list[AutoHandle]:
    """Identity plus ``count`` distinct lifts of sampled limit maps."""
    t = o.tower
    out = [AutoHandle.identity(o)]
    for f in sample_limit_maps(t, 50 * count + 50, support=2, seed=seed):
        if len(out) > count:
            break
        try:
            lift = lift_partial_automorphism(t, f)
        except SasGraphError:
            continue
        top = lift.f_bar[lift.top]
        if not isinstance(top, TotalAut):
            continue
        h = AutoHandle.from_total(o, top, f"t{len(out)}")
        if not any(h.same_as(k) for k in out):
            out.append(h)
    return out


def cover_oracle(base: Graph, count: int, seed: int = 0) -> tuple[GraphOracle, list[AutoHandle]]:
    """The full valuation cover of ``base`` with identity plus ``count`` extensions.

    The extensions come from random single-point partial automorphisms of
    ``base``.
    """
    cover = ho_cover(base, "full")
    o = GraphOracle(cover.to_graph(), name="cover")
    rng = random.Random(seed)
    out = [AutoHandle.identity(o)]
    tries = 0
    while len(out) <= count and tries < 100 * (count + 1):
        tries += 1
        if rng.random() < 0.5:
            p = PartialMap(((rng.randrange(base.left_size), rng.randrange(base.left_size)),), ())
        else:
            p = PartialMap((), ((rng.randrange(base.right_size), rng.randrange(base.right_size)),))
        if not check_partial_automorphism(base, p):
            continue
        aut = extend_in_cover(base, p)
        h = AutoHandle.from_total(o, cover.restrict(aut), f"c{len(out)}")
        if not any(h.same_as(k) for k in out):
            out.append(h)
    return o, out
