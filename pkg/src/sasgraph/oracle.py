"""Countable bipartite graphs presented as query oracles.

An oracle answers ``edge(x, r)`` for a left natural ``x`` and a right
handle ``r``, enumerates right handles in a canonical order, and offers
witness streams: lazily scanned, budgeted searches for vertices of a
prescribed type.  :func:`back_and_forth` matches two oracles vertex by
vertex using those streams.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import BudgetExhausted, IndexOutOfRange, NotPartialIso, NotYetPresent
from .graph import Graph, SignedCond
from .tower import DEFAULT_K, Branch, Tower, branch_index, build_tower

MASK64 = (1 << 64) - 1
LEFT_MIX = 0x9E3779B97F4A7C15
RIGHT_MIX = 0xBF58476D1CE4E5B9
# candidates examined per vectorized block
CHUNK = 4096


def splitmix64(z: int) -> int:
    """One SplitMix64 output for state ``z`` (all arithmetic mod 2**64)."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_array(z: np.ndarray) -> np.ndarray:
    """Elementwise :func:`splitmix64` on a ``uint64`` array."""
    z = z.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _as_cond(sigma) -> SignedCond:
    if isinstance(sigma, SignedCond):
        return sigma
    return SignedCond.of(sigma)


class Oracle(ABC):
    """A (possibly infinite) bipartite graph answering membership queries.

    ``left_count`` and ``right_count`` are ``None`` for an infinite side.
    Subclasses supply ``edge``, ``right_handle`` and ``right_position``;
    the block queries fall back to per-vertex calls.
    """

    left_count: int | None = None
    right_count: int | None = None

    @abstractmethod
    def edge(self, x: int, r) -> bool: ...

    @abstractmethod
    def right_handle(self, i: int):
        """The ``i``-th right handle in canonical order."""

    @abstractmethod
    def right_position(self, r) -> int:
        """Inverse of :meth:`right_handle`; validates the handle."""

    def check_left(self, x: int) -> None:
        if not isinstance(x, (int, np.integer)) or x < 0:
            raise IndexOutOfRange(f"left vertex {x!r} is not a natural")
        if self.left_count is not None and x >= self.left_count:
            raise NotYetPresent(f"left vertex {x} beyond the {self.left_count} available")

    def left_column(self, r, start: int, stop: int) -> np.ndarray:
        """``edge(x, r)`` for ``start <= x < stop``."""
        return np.fromiter((self.edge(x, r) for x in range(start, stop)), bool, stop - start)

    def right_row(self, x: int, start: int, stop: int) -> np.ndarray:
        """``edge(x, right_handle(i))`` for ``start <= i < stop``."""
        return np.fromiter(
            (self.edge(x, self.right_handle(i)) for i in range(start, stop)), bool, stop - start
        )

    def left_vertices(self) -> Iterator[int]:
        x = 0
        while self.left_count is None or x < self.left_count:
            yield x
            x += 1

    def right_handles(self) -> Iterator:
        i = 0
        while self.right_count is None or i < self.right_count:
            yield self.right_handle(i)
            i += 1

    def left_witness_stream(self, sigma, budget: int) -> Iterator[int]:
        """Left vertices realizing ``sigma``, increasing.

        At most ``budget`` candidates are examined; running out of budget or
        of left vertices raises :class:`BudgetExhausted` with the hit count.
        """
        sigma = _as_cond(sigma)
        for r in sigma.domain:
            self.right_position(r)
        limit = budget if self.left_count is None else min(budget, self.left_count)
        found, start = 0, 0
        while start < limit:
            stop = min(start + CHUNK, limit)
            ok = np.ones(stop - start, bool)
            for r, sign in sigma:
                col = self.left_column(r, start, stop)
                ok &= col if sign else ~col
            for i in np.flatnonzero(ok):
                found += 1
                yield start + int(i)
            start = stop
        raise BudgetExhausted(_exhaust_reason("left", limit, budget), found=found)

    def right_witness_stream(self, pos: Iterable[int], neg: Iterable[int], budget: int) -> Iterator:
        """Right handles adjacent to all of ``pos`` and none of ``neg``."""
        pos, neg = sorted(set(pos)), sorted(set(neg))
        if set(pos) & set(neg):
            raise ValueError("pos and neg overlap")
        for x in pos + neg:
            self.check_left(x)
        limit = budget if self.right_count is None else min(budget, self.right_count)
        found, start = 0, 0
        while start < limit:
            stop = min(start + CHUNK, limit)
            ok = np.ones(stop - start, bool)
            for x in pos:
                ok &= self.right_row(x, start, stop)
            for x in neg:
                ok &= ~self.right_row(x, start, stop)
            for i in np.flatnonzero(ok):
                found += 1
                yield self.right_handle(start + int(i))
            start = stop
        raise BudgetExhausted(_exhaust_reason("right", limit, budget), found=found)


def _exhaust_reason(side: str, limit: int, budget: int) -> str:
    if limit < budget:
        return f"{side} side exhausted after {limit} candidates"
    return f"budget of {budget} {side} candidates spent"


# ---------------------------------------------------------------------------
# concrete oracles


@dataclass(frozen=True)
class HashOracle(Oracle):
    """Pseudo-random bipartite graph on naturals x naturals.

    ``edge(x, r)`` is bit 0 of
    ``SM(SM(seed ^ x*LEFT_MIX) ^ SM(r*RIGHT_MIX))`` where ``SM`` is SplitMix64.
    """

    seed: int

    def __post_init__(self):
        object.__setattr__(self, "seed", self.seed & MASK64)

    def edge(self, x: int, r: int) -> bool:
        self.check_left(x)
        self.right_position(r)
        a = splitmix64(self.seed ^ ((x * LEFT_MIX) & MASK64))
        b = splitmix64((r * RIGHT_MIX) & MASK64)
        return bool(splitmix64(a ^ b) & 1)

    def right_handle(self, i: int) -> int:
        return self.right_position(i)

    def right_position(self, r) -> int:
        if not isinstance(r, (int, np.integer)) or r < 0:
            raise IndexOutOfRange(f"right handle {r!r} is not a natural")
        return int(r)

    def _left_half(self, xs: np.ndarray) -> np.ndarray:
        return splitmix64_array(np.uint64(self.seed) ^ (xs * np.uint64(LEFT_MIX)))

    def left_column(self, r, start, stop):
        xs = np.arange(start, stop, dtype=np.uint64)
        b = np.uint64(splitmix64((self.right_position(r) * RIGHT_MIX) & MASK64))
        return (splitmix64_array(self._left_half(xs) ^ b) & np.uint64(1)).astype(bool)

    def right_row(self, x, start, stop):
        rs = np.arange(start, stop, dtype=np.uint64)
        a = np.uint64(splitmix64(self.seed ^ ((x * LEFT_MIX) & MASK64)))
        return (splitmix64_array(a ^ splitmix64_array(rs * np.uint64(RIGHT_MIX))) & np.uint64(1)).astype(
            bool
        )

    def matrix(self, n_left: int, n_right: int) -> np.ndarray:
        return np.array([self.right_row(x, 0, n_right) for x in range(n_left)], dtype=bool)


class MatrixOracle(Oracle):
    """Oracle backed by a finite adjacency matrix (left x right)."""

    def __init__(self, matrix: np.ndarray):
        self._rows = np.asarray(matrix, dtype=bool)
        self._cols = np.ascontiguousarray(self._rows.T)
        self.left_count, self.right_count = self._rows.shape

    def edge(self, x, r) -> bool:
        self.check_left(x)
        return bool(self._cols[self.right_position(r), x])

    def left_column(self, r, start, stop):
        return self._cols[self.right_position(r), start:stop]

    def right_row(self, x, start, stop):
        return self._rows[x, start:stop]


class GraphOracle(MatrixOracle):
    """A finite graph as an oracle; right handles are right indices."""

    def __init__(self, graph: Graph, name: str = "graph"):
        super().__init__(graph.matrix)
        self.graph = graph
        self.name = name

    def right_handle(self, i):
        if not 0 <= i < self.right_count:
            raise NotYetPresent(f"right index {i} beyond {self.right_count}")
        return i

    def right_position(self, r):
        if not isinstance(r, (int, np.integer)) or not 0 <= r < self.right_count:
            raise IndexOutOfRange(f"right handle {r!r} not in 0..{self.right_count - 1}")
        return int(r)


class TowerOracle(MatrixOracle):
    """The limit of a built tower, read off its top stage.

    Left vertices are the top stage's left side; right handles are the
    canonical branches through the top stage.  Edge stability makes the top
    stage agree with :func:`~sasgraph.tower.limit_edge`.  Queries past the
    built depth raise :class:`NotYetPresent`; :meth:`deepen` rebuilds.
    """

    def __init__(self, tower: Tower):
        top = tower.stages[-1].graph
        super().__init__(top.matrix)
        self.tower = tower
        self._labels = top.right_labels

    def right_handle(self, i):
        if not 0 <= i < self.right_count:
            raise NotYetPresent(f"branch index {i} beyond {self.right_count}")
        return Branch(self._labels[i])

    def right_position(self, r):
        if not isinstance(r, Branch):
            raise IndexOutOfRange(f"{r!r} is not a Branch")
        i = branch_index(self.tower, r, self.tower.depth)
        if i is None:
            raise NotYetPresent(f"{r} is absent from stage {self.tower.depth}")
        return i

    def deepen(self, extra: int = 1) -> "TowerOracle":
        depth = self.tower.depth + extra
        ks = self.tower.k_schedule or (DEFAULT_K,)
        ks = ks + (ks[-1],) * (depth // 2 - len(ks))
        return TowerOracle(build_tower(depth, ks))


@dataclass(frozen=True, eq=False)
class AddedVertex:
    """A right vertex given by a membership predicate on left naturals.

    ``member`` takes an int array and returns a bool array.  Identity is
    by ``ident``.  ``cofinite`` marks a vertex known to miss only finitely
    many left vertices.
    """

    ident: str
    member: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    cofinite: bool = False

    def __eq__(self, other):
        return isinstance(other, AddedVertex) and self.ident == other.ident

    def __hash__(self):
        return hash(("added", self.ident))

    def contains(self, x: int) -> bool:
        return bool(self.member(np.array([x]))[0])


class ExtendedOracle(Oracle):
    """``base`` with extra right vertices placed first in canonical order."""

    def __init__(self, base: Oracle, added: Iterable[AddedVertex]):
        self.base = base
        self.added = tuple(added)
        if len(set(self.added)) != len(self.added):
            raise ValueError("added vertices must have distinct identifiers")
        self._added_pos = {v: i for i, v in enumerate(self.added)}
        self.left_count = base.left_count
        k = len(self.added)
        self.right_count = None if base.right_count is None else base.right_count + k

    def edge(self, x, r) -> bool:
        self.check_left(x)
        if isinstance(r, AddedVertex):
            self.right_position(r)
            return r.contains(x)
        return self.base.edge(x, r)

    def right_handle(self, i):
        k = len(self.added)
        return self.added[i] if i < k else self.base.right_handle(i - k)

    def right_position(self, r):
        if isinstance(r, AddedVertex):
            if r not in self._added_pos:
                raise IndexOutOfRange(f"{r.ident} is not a vertex of this oracle")
            return self._added_pos[r]
        return len(self.added) + self.base.right_position(r)

    def left_column(self, r, start, stop):
        if isinstance(r, AddedVertex):
            self.right_position(r)
            return np.asarray(r.member(np.arange(start, stop)), dtype=bool)
        return self.base.left_column(r, start, stop)

    def right_row(self, x, start, stop):
        k = len(self.added)
        head = [self.added[i].contains(x) for i in range(start, min(stop, k))]
        tail = (
            self.base.right_row(x, max(start, k) - k, stop - k) if stop > k else np.zeros(0, bool)
        )
        return np.concatenate([np.array(head, dtype=bool), tail])


# ---------------------------------------------------------------------------
# back and forth


def handle_id(r) -> str:
    """Stable text name of a right handle."""
    if isinstance(r, Branch):
        return "b" + ".".join(map(str, r.key)) if r.key else "b"
    if isinstance(r, AddedVertex):
        return r.ident
    return str(r)


@dataclass(frozen=True)
class CrossMap:
    """Finite partial isomorphism between two oracles."""

    left: tuple[tuple[int, int], ...] = ()
    right: tuple[tuple[object, object], ...] = ()

    def __len__(self) -> int:
        return len(self.left) + len(self.right)

    def problems(self, a: Oracle, b: Oracle) -> list[str]:
        """Everything that stops this from being a partial isomorphism."""
        out = []
        for side, pairs in (("left", self.left), ("right", self.right)):
            src = [p for p, _ in pairs]
            dst = [q for _, q in pairs]
            if len(set(src)) != len(src) or len(set(dst)) != len(dst):
                out.append(f"{side} pairs are not injective")
        for x, y in self.left:
            for r, s in self.right:
                if a.edge(x, r) != b.edge(y, s):
                    out.append(f"edge ({x}, {handle_id(r)}) not preserved")
        return out

    def is_identity(self) -> bool:
        return all(p == q for p, q in self.left + self.right)

    def to_json(self) -> dict:
        return {
            "left": [[x, y] for x, y in self.left],
            "right": [[handle_id(r), handle_id(s)] for r, s in self.right],
        }


def _least_unmatched(items: Iterable, used: dict):
    for v in items:
        if v not in used:
            return v
    return None


def back_and_forth(a: Oracle, b: Oracle, steps: int, budget: int) -> CrossMap:
    """Grow a partial isomorphism from ``a`` to ``b`` for ``steps`` turns.

    Turns cycle through A-left, B-left, A-right, B-right.  Each turn takes
    the least vertex not yet matched on that side and pairs it with the
    first unmatched witness of its type in the other oracle.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    lf, lb, rf, rb = {}, {}, {}, {}
    order_r = []

    def snapshot() -> CrossMap:
        return CrossMap(
            tuple(sorted(lf.items())), tuple((r, rf[r]) for r in order_r)
        )

    for turn in range(steps):
        kind = turn % 4
        forward = kind in (0, 2)
        src, dst = (a, b) if forward else (b, a)
        l_src, l_dst = (lf, lb) if forward else (lb, lf)
        r_src, r_dst = (rf, rb) if forward else (rb, rf)
        if kind < 2:
            x = _least_unmatched(src.left_vertices(), l_src)
            if x is None:
                continue
            sigma = SignedCond(tuple((s, src.edge(x, r)) for r, s in r_src.items()))
            stream = dst.left_witness_stream(sigma, budget)
            what = ("left", x, {handle_id(k): v for k, v in sigma})
        else:
            r = _least_unmatched(src.right_handles(), r_src)
            if r is None:
                continue
            pos = [y for x, y in l_src.items() if src.edge(x, r)]
            neg = [y for x, y in l_src.items() if not src.edge(x, r)]
            stream = dst.right_witness_stream(pos, neg, budget)
            what = ("right", handle_id(r), {"pos": sorted(pos), "neg": sorted(neg)})
        try:
            match = next(v for v in stream if v not in (l_dst if kind < 2 else r_dst))
        except BudgetExhausted as exc:
            side = "A" if forward else "B"
            raise BudgetExhausted(
                f"turn {turn} ({side}-{what[0]}) stuck on {what[1]}: {exc}",
                found=exc.found,
                partial={"turn": turn, "vertex": what[1], "type": what[2], "map": snapshot()},
            ) from None
        v = what[1] if kind < 2 else r
        if kind < 2:
            l_src[v], l_dst[match] = match, v
        else:
            r_src[v], r_dst[match] = match, v
            order_r.append(v if forward else match)
    result = snapshot()
    bad = result.problems(a, b)
    if bad:
        raise NotPartialIso("; ".join(bad))
    return result


def golden_matrix_text(seed: int = 1, size: int = 8) -> str:
    """The ``size x size`` corner of a HashOracle as lines of '0'/'1'."""
    m = HashOracle(seed).matrix(size, size)
    return "".join("".join("1" if v else "0" for v in row) + "\n" for row in m)


def crossmap_report(m: CrossMap) -> str:
    return json.dumps(m.to_json(), sort_keys=True)
