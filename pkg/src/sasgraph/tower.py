"""The staged construction of a homogeneous graph with a countable left side.

Stage 1 is the two-edge matching.  Odd stages ``n`` are followed by a
magic stage (a bounded magic closure of the append-1 copy of stage ``n``);
even stages are followed by a doubled stage in which every right label
``eta`` splits into ``eta+(1,)`` and ``eta+(2,)``.

Indices line up across stages: the append-1 embedding keeps every left
vertex and every right index where it was, a magic stage appends its new
vertices, and a doubled stage puts the ``+(2,)`` children after all the
``+(1,)`` children.  So the projection to the previous stage is the
identity on old indices (magic) or ``i mod |R_prev|`` (doubled).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .eppa import MagicClosure, k_magic_closure
from .errors import (
    KBudgetExceeded,
    NotPartialIso,
    NotYetPresent,
    SizeGuardExceeded,
    StabilityViolation,
)
from .graph import (
    Graph,
    Label,
    PartialMap,
    TotalAut,
    check_partial_automorphism,
    find_extension,
    gamma_one,
)

DEFAULT_K = 3
# left x right cells allowed in one stage
STAGE_CELL_LIMIT = 1 << 27
# separation stages up to this many left vertices try a total extension first
SMALL_STAGE_LEFT = 6


@dataclass(frozen=True, eq=False)
class Stage:
    index: int
    kind: str  # "initial" | "magic" | "doubled"
    graph: Graph
    closure: MagicClosure | None = None
    k: int | None = None

    @property
    def left_size(self) -> int:
        return self.graph.left_size

    @property
    def right_size(self) -> int:
        return self.graph.right_size

    @property
    def generators(self) -> list[TotalAut]:
        return self.closure.generators if self.closure is not None else []


@dataclass(frozen=True, eq=False)
class Tower:
    stages: tuple[Stage, ...]
    k_schedule: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.stages)

    def stage(self, n: int) -> Stage:
        if not 1 <= n <= self.depth:
            raise NotYetPresent(f"stage {n} not built (depth {self.depth})")
        return self.stages[n - 1]

    def rho(self, n: int, side: str, v: int) -> int:
        """Embedding of stage ``n`` into stage ``n+1``, on indices."""
        size = self.stage(n).left_size if side == "left" else self.stage(n).right_size
        self.stage(n + 1)
        if not 0 <= v < size:
            raise IndexError(f"{side} vertex {v} not in stage {n}")
        return v

    def pi(self, n: int, side: str, v: int) -> int | None:
        """Projection of stage ``n+1`` to stage ``n``; None off its domain."""
        prev, nxt = self.stage(n), self.stage(n + 1)
        if side == "left":
            return v if v < prev.left_size else None
        if nxt.kind == "doubled":
            return v % prev.right_size
        return v if v < prev.right_size else None

    def manifest(self) -> dict:
        return {
            "depth": self.depth,
            "k_schedule": list(self.k_schedule),
            "stages": [
                {
                    "index": s.index,
                    "kind": s.kind,
                    "left": s.left_size,
                    "right": s.right_size,
                    "k": s.k,
                    "row_space": s.closure.row_space if s.closure else None,
                    "generators": len(s.closure.cover_auts) if s.closure else 0,
                }
                for s in self.stages
            ],
        }


def _doubled(prev: Graph) -> Graph:
    labels = tuple(lab + (1,) for lab in prev.right_labels) + tuple(
        lab + (2,) for lab in prev.right_labels
    )
    return Graph(prev.left_size, labels, prev.adjacency + prev.adjacency)


def _magic(prev: Graph, n: int, k: int) -> tuple[Graph, MagicClosure]:
    base = Graph(prev.left_size, tuple(lab + (1,) for lab in prev.right_labels), prev.adjacency)
    closure = k_magic_closure(base, k)
    out = closure.graph
    fresh = out.right_size - base.right_size
    # new right vertices: first n entries zero, last entry 1, 2, ...
    labels = base.right_labels + tuple((0,) * n + (c + 1,) for c in range(fresh))
    return Graph(out.left_size, labels, out.adjacency), closure


def build_tower(num_stages: int, k_schedule: int | Sequence[int] = DEFAULT_K) -> Tower:
    """Build stages ``1..num_stages``.

    ``k_schedule`` is one k for every magic stage or one entry per magic
    stage.  Raises SizeGuardExceeded naming the first stage that is too big.
    """
    if num_stages < 1:
        raise ValueError("need at least one stage")
    n_magic = num_stages // 2
    if isinstance(k_schedule, int):
        ks = (k_schedule,) * n_magic
    else:
        ks = tuple(k_schedule)
        if len(ks) < n_magic:
            raise ValueError(f"k_schedule needs {n_magic} entries")
    stages = [Stage(1, "initial", gamma_one())]
    for n in range(1, num_stages):
        prev = stages[-1].graph
        if n % 2:
            k = ks[(n + 1) // 2 - 1]
            try:
                g, closure = _magic(prev, n, k)
            except SizeGuardExceeded as exc:
                raise SizeGuardExceeded(f"stage {n + 1}: {exc}", stage=n + 1) from exc
            stage = Stage(n + 1, "magic", g, closure, k)
        else:
            if prev.left_size * prev.right_size * 2 > STAGE_CELL_LIMIT:
                raise SizeGuardExceeded(f"stage {n + 1} exceeds the cell limit", stage=n + 1)
            stage = Stage(n + 1, "doubled", _doubled(prev))
        if stage.left_size * stage.right_size > STAGE_CELL_LIMIT:
            raise SizeGuardExceeded(f"stage {n + 1} exceeds the cell limit", stage=n + 1)
        stages.append(stage)
    return Tower(tuple(stages), ks)


# ---------------------------------------------------------------------------
# branches and the limit


@dataclass(frozen=True, eq=False)
class Branch:
    """The always-append-1 continuation of ``stem``.

    Two stems name the same branch when they differ only by trailing 1s.
    """

    stem: Label

    @property
    def key(self) -> Label:
        s = self.stem
        while s and s[-1] == 1:
            s = s[:-1]
        return s

    def __eq__(self, other):
        return isinstance(other, Branch) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Branch({self.stem!r})"

    def label_at(self, n: int) -> Label:
        if n <= len(self.stem):
            return self.stem[:n]
        return self.stem + (1,) * (n - len(self.stem))


def branch_index(t: Tower, b: Branch, n: int) -> int | None:
    """Right index of ``b`` at stage ``n``, or None if its label is absent."""
    return t.stage(n).graph.label_index.get(b.label_at(n))


def birth_stage(t: Tower, b: Branch) -> int:
    """First built stage from which ``b`` is present at every later stage."""
    first = None
    for n in range(t.depth, 0, -1):
        if branch_index(t, b, n) is None:
            break
        first = n
    if first is None:
        raise NotYetPresent(f"{b} is not present at the top stage")
    return first


def limit_edge(t: Tower, x: int, b: Branch, audit: bool = True) -> bool:
    """Edge value of ``(x, b)`` in the limit graph.

    Read at the first stage holding both; with ``audit`` every later
    stage is checked to agree.
    """
    start = birth_stage(t, b)
    while start <= t.depth and x >= t.stage(start).left_size:
        start += 1
    if start > t.depth:
        raise NotYetPresent(f"left vertex {x} beyond the built depth")
    value = t.stage(start).graph.has_edge(x, branch_index(t, b, start))
    if audit:
        for n in range(start + 1, t.depth + 1):
            if t.stage(n).graph.has_edge(x, branch_index(t, b, n)) != value:
                raise StabilityViolation(f"edge ({x}, {b}) flips at stage {n}")
    return value


def top_branches(t: Tower) -> list[Branch]:
    """Every canonical branch through the top stage, in right-index order."""
    return [Branch(lab) for lab in t.stages[-1].graph.right_labels]


# ---------------------------------------------------------------------------
# lifting


@dataclass(frozen=True)
class LimitMap:
    """A finite partial map of the limit graph: naturals and branches."""

    left: tuple[tuple[int, int], ...] = ()
    right: tuple[tuple[Branch, Branch], ...] = ()

    @classmethod
    def of(cls, left: dict[int, int] | None = None, right: dict[Branch, Branch] | None = None):
        return cls(tuple(sorted((left or {}).items())), tuple((right or {}).items()))

    def __len__(self) -> int:
        return len(self.left) + len(self.right)


@dataclass
class LiftedAut:
    """Per-stage maps ``f_bar[n]`` for ``n0 <= n <= depth``.

    ``f_bar[n0]`` is a PartialMap on stage indices; later entries are total.
    """

    source: LimitMap
    n0: int
    f_bar: dict[int, PartialMap | TotalAut] = field(default_factory=dict)
    induced: dict[int, PartialMap] = field(default_factory=dict)

    @property
    def top(self) -> int:
        return max(self.f_bar)

    def total_stage(self) -> int:
        """Least stage with a total map."""
        for n in sorted(self.f_bar):
            if isinstance(self.f_bar[n], TotalAut):
                return n
        raise NotYetPresent("no total stage built beyond the separation stage")

    def left_perm(self) -> tuple[int, ...]:
        return self.f_bar[self.top].left_perm if isinstance(self.f_bar[self.top], TotalAut) else None

    def apply_left(self, x: int) -> int:
        f = self.f_bar[self.top]
        if not isinstance(f, TotalAut) or x >= len(f.left_perm):
            raise NotYetPresent(f"lift not total on {x}")
        return f.left_perm[x]


def _induced_map(t: Tower, f: LimitMap, n: int) -> PartialMap | None:
    """The map ``f`` reads as on stage ``n``, or None if ``n`` is too shallow."""
    st = t.stage(n)
    left = []
    for x, y in f.left:
        if x >= st.left_size or y >= st.left_size:
            return None
        left.append((x, y))
    right = []
    for a, b in f.right:
        i, j = branch_index(t, a, n), branch_index(t, b, n)
        if i is None or j is None:
            return None
        right.append((i, j))
    try:
        return PartialMap(tuple(left), tuple(right))
    except ValueError:
        return None


def separation_stage(t: Tower, f: LimitMap) -> int:
    """Least stage where ``f`` is readable with all branches kept apart, bumped to odd."""
    for n in range(1, t.depth + 1):
        if _induced_map(t, f, n) is None:
            continue
        points = {b for pair in f.right for b in pair}
        if not all(n >= birth_stage(t, b) for b in points):
            continue
        n0 = n if n % 2 else n + 1
        if n0 > t.depth:
            raise NotYetPresent(f"separation stage {n0} beyond depth {t.depth}")
        return n0
    raise NotYetPresent("map not separated at any built stage")


def _check_limit_iso(t: Tower, f: LimitMap) -> None:
    dom_l = [x for x, _ in f.left]
    ran_l = [y for _, y in f.left]
    dom_r = [a for a, _ in f.right]
    ran_r = [b for _, b in f.right]
    if len(set(dom_l)) != len(dom_l) or len(set(ran_l)) != len(ran_l):
        raise NotPartialIso("left part is not injective")
    if len(set(dom_r)) != len(dom_r) or len(set(ran_r)) != len(ran_r):
        raise NotPartialIso("right part is not injective")
    for x, y in f.left:
        for a, b in f.right:
            if limit_edge(t, x, a, audit=False) != limit_edge(t, y, b, audit=False):
                raise NotPartialIso(f"edge ({x}, {a}) not preserved")


def _double_step(
    t: Tower, n: int, prev: TotalAut, f_next: PartialMap
) -> TotalAut:
    """Extend ``prev`` (total on magic stage ``n``) to doubled stage ``n+1``.

    Each pair of children goes to the children of the image; a pair is
    crossed only when the induced map demands it.
    """
    half = t.stage(n).right_size
    forced = dict(f_next.right)
    rperm = [0] * (2 * half)
    for i in range(half):
        j = prev.right_perm[i]
        if i in forced or i + half in forced:
            src = i if i in forced else i + half
            dst = forced[src]
            if dst % half != j:
                raise AssertionError("induced map disagrees with the projection")
            other_src = i + half if src == i else i
            other_dst = j + half if dst == j else j
            rperm[src], rperm[other_src] = dst, other_dst
        else:
            rperm[i], rperm[i + half] = j, j + half
    return TotalAut(prev.left_perm, tuple(rperm))


def _small_total_extension(g: Graph, p: PartialMap) -> TotalAut | None:
    """Least total automorphism of a small stage extending ``p``, if any."""
    if g.left_size > SMALL_STAGE_LEFT:
        return None
    return find_extension(g, p)


def lift_partial_automorphism(t: Tower, f: LimitMap) -> LiftedAut:
    """Lift a finite partial isomorphism of the limit through every built stage."""
    _check_limit_iso(t, f)
    n0 = separation_stage(t, f)
    lift = LiftedAut(f, n0)
    for n in range(n0, t.depth + 1):
        fn = _induced_map(t, f, n)
        lift.induced[n] = fn
    lift.f_bar[n0] = lift.induced[n0]
    for n in range(n0, t.depth):
        nxt = t.stage(n + 1)
        cur = lift.f_bar[n]
        if nxt.kind == "magic":
            if n == n0 and len(cur) > nxt.k:
                raise KBudgetExceeded(f"map of {len(cur)} points exceeds k={nxt.k} at stage {n + 1}")
            p = cur if isinstance(cur, PartialMap) else cur.as_partial()
            if isinstance(cur, PartialMap):
                # prefer a lift that keeps the old copy in place
                whole = _small_total_extension(t.stage(n).graph, cur)
                if whole is not None:
                    p = whole.as_partial()
            lift.f_bar[n + 1] = nxt.closure.extension(p)
        else:
            if not isinstance(cur, TotalAut):
                # only reachable if the separation stage is a magic stage
                raise AssertionError("doubling step needs a total map")
            lift.f_bar[n + 1] = _double_step(t, n, cur, lift.induced[n + 1])
    return lift


def check_lift(t: Tower, lift: LiftedAut) -> list[str]:
    """Every violated lifting law, as readable strings; empty when sound."""
    problems = []
    for n in sorted(lift.f_bar):
        fn = lift.f_bar[n]
        g = t.stage(n).graph
        if n > lift.n0:
            if not isinstance(fn, TotalAut):
                problems.append(f"stage {n}: not total")
                continue
            if not fn.is_automorphism_of(g):
                problems.append(f"stage {n}: not an automorphism")
            lmap, rmap = fn.left_perm, fn.right_perm
        else:
            if not check_partial_automorphism(g, fn):
                problems.append(f"stage {n}: not a partial automorphism")
            lmap, rmap = fn.left_map, fn.right_map
        ind = lift.induced[n]
        if any(lmap[x] != y for x, y in ind.left) or any(rmap[a] != b for a, b in ind.right):
            problems.append(f"stage {n}: does not extend the induced map")
        if n + 1 in lift.f_bar:
            nxt = lift.f_bar[n + 1]
            nl, nr = nxt.left_perm, nxt.right_perm
            prev_stage = t.stage(n)
            lm = lmap if isinstance(lmap, dict) else dict(enumerate(lmap))
            rm = rmap if isinstance(rmap, dict) else dict(enumerate(rmap))
            ls = np.arange(prev_stage.left_size)
            img = np.asarray(nl)[ls]
            for x in lm:
                if img[x] != lm[x]:
                    problems.append(f"stage {n}->{n + 1}: commutation fails at left {x}")
                    break
            if isinstance(lmap, tuple) and (img >= prev_stage.left_size).any():
                problems.append(f"stage {n}->{n + 1}: left side not mapped into old vertices")
            for v in range(t.stage(n + 1).right_size):
                pv = t.pi(n, "right", v)
                if pv is None or pv not in rm:
                    continue
                w = t.pi(n, "right", nr[v])
                if w != rm[pv]:
                    problems.append(f"stage {n}->{n + 1}: commutation fails at right {v}")
                    break
            if t.stage(n + 1).kind == "doubled" and isinstance(fn, TotalAut):
                half = prev_stage.right_size
                for i in range(half):
                    j = fn.right_perm[i]
                    if {nr[i], nr[i + half]} != {j, j + half}:
                        problems.append(f"stage {n + 1}: rule (*) fails at {i}")
                        break
    return problems


def locally_finite_window(t: Tower, lift: LiftedAut, A: Iterable[int]) -> set[int]:
    """Finite set containing ``A`` on which the lift acts as a permutation."""
    A = set(A)
    m = next((n for n in range(1, t.depth + 1) if all(x < t.stage(n).left_size for x in A)), None)
    if m is None:
        raise NotYetPresent("window points beyond the built depth")
    m = max(m, lift.total_stage())
    f = lift.f_bar[m]
    inv = {y: x for x, y in enumerate(f.left_perm)}
    window = set(A)
    todo = list(A)
    while todo:
        x = todo.pop()
        for y in (f.left_perm[x], inv[x]):
            if y not in window:
                window.add(y)
                todo.append(y)
    return window


def sample_limit_maps(t: Tower, count: int, support: int = 2, seed: int = 0) -> list[LimitMap]:
    """Random partial isomorphisms of the limit with at most ``support`` points.

    Each map draws its points from one randomly chosen stage, so separation
    stages spread over the whole tower.
    """
    rng = random.Random(seed)
    out = []
    attempts = 0
    while len(out) < count and attempts < 1000 * count:
        attempts += 1
        st = t.stage(rng.randint(1, t.depth))
        branches = [Branch(lab) for lab in st.graph.right_labels]
        left_pool = range(min(st.left_size, 64))
        n_left = rng.randint(0, min(support, len(left_pool)))
        n_right = rng.randint(0, min(support - n_left, len(branches)))
        xs = rng.sample(left_pool, n_left)
        ys = rng.sample(left_pool, n_left)
        ai = rng.sample(range(len(branches)), n_right)
        bi = rng.sample(range(len(branches)), n_right)
        f = LimitMap(
            tuple(sorted(zip(xs, ys))), tuple((branches[a], branches[b]) for a, b in zip(ai, bi))
        )
        try:
            _check_limit_iso(t, f)
        except NotPartialIso:
            continue
        out.append(f)
    return out
