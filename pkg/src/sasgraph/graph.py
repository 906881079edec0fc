"""Finite bipartite graphs, partial and total automorphisms, and classification.

Left vertices are the naturals ``0..left_size-1``.  Right vertices are
addressed by index; each carries a label (a tuple of naturals) so that the
tower construction can name them by finite sequences.  Adjacency is stored
per right vertex as an int bitmask over the left side.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import IndexOutOfRange

# above this many cells, whole-graph work goes through a numpy matrix
DENSE_CELLS = 1 << 12

Label = tuple[int, ...]


def bits(mask: int) -> Iterator[int]:
    """Yield the positions of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def permute_bits(mask: int, perm: Sequence[int]) -> int:
    """Image of a bit set under ``i -> perm[i]``."""
    out = 0
    for i in bits(mask):
        out |= 1 << perm[i]
    return out


@dataclass(frozen=True)
class Graph:
    left_size: int
    right_labels: tuple[Label, ...]
    adjacency: tuple[int, ...]

    def __post_init__(self):
        if self.left_size < 1 or len(self.right_labels) < 1:
            raise ValueError("both sides of a bipartite graph must be non-empty")
        if len(self.adjacency) != len(self.right_labels):
            raise ValueError("one adjacency mask per right vertex required")
        if len(set(self.right_labels)) != len(self.right_labels):
            raise ValueError("right labels must be pairwise distinct")
        full = (1 << self.left_size) - 1
        for mask in self.adjacency:
            if mask < 0 or mask & ~full:
                raise ValueError("adjacency refers to a left vertex out of range")

    @classmethod
    def from_edges(
        cls,
        left_size: int,
        right: int | Iterable[Label],
        edges: Iterable[tuple[int, int]],
    ) -> "Graph":
        """Build from an edge list of ``(left, right_index)`` pairs.

        ``right`` is either a count (labels become ``(1,), (2,), ...``) or an
        explicit label sequence.
        """
        if isinstance(right, int):
            labels = tuple((i + 1,) for i in range(right))
        else:
            labels = tuple(tuple(lab) for lab in right)
        adj = [0] * len(labels)
        for x, u in edges:
            if not (0 <= x < left_size and 0 <= u < len(labels)):
                raise IndexOutOfRange(f"edge ({x}, {u}) out of range")
            adj[u] |= 1 << x
        return cls(left_size, labels, tuple(adj))

    @property
    def right_size(self) -> int:
        return len(self.right_labels)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Boolean ``left x right`` adjacency matrix."""
        nbytes = (self.left_size + 7) // 8
        cols = np.frombuffer(
            b"".join(m.to_bytes(nbytes, "little") for m in self.adjacency), dtype=np.uint8
        ).reshape(self.right_size, nbytes)
        return np.unpackbits(cols, axis=1, bitorder="little")[:, : self.left_size].T.astype(bool)

    @cached_property
    def left_adjacency(self) -> tuple[int, ...]:
        """Per left vertex, bitmask of adjacent right indices."""
        if self.left_size * self.right_size > DENSE_CELLS:
            packed = np.packbits(self.matrix, axis=1, bitorder="little")
            return tuple(int.from_bytes(row.tobytes(), "little") for row in packed)
        rows = [0] * self.left_size
        for u, mask in enumerate(self.adjacency):
            for x in bits(mask):
                rows[x] |= 1 << u
        return tuple(rows)

    @cached_property
    def label_index(self) -> dict[Label, int]:
        return {lab: i for i, lab in enumerate(self.right_labels)}

    def has_edge(self, x: int, u: int) -> bool:
        return bool(self.adjacency[u] >> x & 1)

    def edges(self) -> list[tuple[int, int]]:
        """All edges as ``(left, right_index)`` pairs, sorted."""
        return sorted((x, u) for u, mask in enumerate(self.adjacency) for x in bits(mask))

    def num_edges(self) -> int:
        return sum(m.bit_count() for m in self.adjacency)

    def complement(self) -> "Graph":
        full = (1 << self.left_size) - 1
        return Graph(self.left_size, self.right_labels, tuple(full ^ m for m in self.adjacency))

    def transpose(self) -> "Graph":
        """Swap the sides; the old left vertices get singleton labels."""
        return Graph(
            self.right_size,
            tuple((x,) for x in range(self.left_size)),
            self.left_adjacency,
        )

    def induced(self, left: Sequence[int], right: Sequence[int]) -> "Graph":
        """Induced subgraph, renumbering ``left`` to ``0..`` in the given order."""
        pos = {x: i for i, x in enumerate(left)}
        adj = []
        for u in right:
            adj.append(sum(1 << pos[x] for x in bits(self.adjacency[u]) if x in pos))
        return Graph(len(left), tuple(self.right_labels[u] for u in right), tuple(adj))


def gamma_one() -> Graph:
    """The two-edge perfect matching that seeds the tower."""
    return Graph.from_edges(2, [(1,), (2,)], [(0, 0), (1, 1)])


def complete(n_left: int, n_right: int) -> Graph:
    return Graph.from_edges(
        n_left, n_right, [(x, u) for x in range(n_left) for u in range(n_right)]
    )


def all_graphs(n_left: int, n_right: int) -> Iterator[Graph]:
    """Every edge set on an ``n_left x n_right`` vertex set."""
    labels = tuple((i + 1,) for i in range(n_right))
    for adj in itertools.product(range(1 << n_left), repeat=n_right):
        yield Graph(n_left, labels, adj)


# ---------------------------------------------------------------------------
# maps


def _check_injective(pairs: tuple[tuple[int, int], ...], side: str) -> None:
    dom = [a for a, _ in pairs]
    ran = [b for _, b in pairs]
    if len(set(dom)) != len(dom) or len(set(ran)) != len(ran):
        raise ValueError(f"{side} part of a partial map must be injective")


@dataclass(frozen=True)
class PartialMap:
    """A finite injective map that sends left to left and right to right.

    Right vertices are given by index.  Pairs are kept sorted so that equal
    maps compare and hash equal.
    """

    left: tuple[tuple[int, int], ...] = ()
    right: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(sorted(self.left)))
        object.__setattr__(self, "right", tuple(sorted(self.right)))
        _check_injective(self.left, "left")
        _check_injective(self.right, "right")

    @classmethod
    def of(cls, left: dict[int, int] | None = None, right: dict[int, int] | None = None):
        return cls(tuple((left or {}).items()), tuple((right or {}).items()))

    @property
    def left_map(self) -> dict[int, int]:
        return dict(self.left)

    @property
    def right_map(self) -> dict[int, int]:
        return dict(self.right)

    def __len__(self) -> int:
        return len(self.left) + len(self.right)

    def inverse(self) -> "PartialMap":
        return PartialMap(
            tuple((b, a) for a, b in self.left), tuple((b, a) for a, b in self.right)
        )


@dataclass(frozen=True)
class TotalAut:
    left_perm: tuple[int, ...]
    right_perm: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.left_perm) != list(range(len(self.left_perm))):
            raise ValueError("left_perm is not a permutation")
        if sorted(self.right_perm) != list(range(len(self.right_perm))):
            raise ValueError("right_perm is not a permutation")

    @classmethod
    def identity(cls, g: Graph) -> "TotalAut":
        return cls(tuple(range(g.left_size)), tuple(range(g.right_size)))

    def as_partial(self) -> PartialMap:
        return PartialMap(tuple(enumerate(self.left_perm)), tuple(enumerate(self.right_perm)))

    def inverse(self) -> "TotalAut":
        li = [0] * len(self.left_perm)
        for a, b in enumerate(self.left_perm):
            li[b] = a
        ri = [0] * len(self.right_perm)
        for a, b in enumerate(self.right_perm):
            ri[b] = a
        return TotalAut(tuple(li), tuple(ri))

    def compose(self, other: "TotalAut") -> "TotalAut":
        """``self`` after ``other``."""
        return TotalAut(
            tuple(self.left_perm[b] for b in other.left_perm),
            tuple(self.right_perm[b] for b in other.right_perm),
        )

    def is_automorphism_of(self, g: Graph) -> bool:
        if len(self.left_perm) != g.left_size or len(self.right_perm) != g.right_size:
            return False
        if g.left_size * g.right_size > DENSE_CELLS:
            mt = g.matrix.T  # right x left, C-contiguous
            lp = np.asarray(self.left_perm)
            rp = np.asarray(self.right_perm)
            return bool(np.array_equal(np.take(mt[rp], lp, axis=1), mt))
        return all(
            permute_bits(g.adjacency[u], self.left_perm) == g.adjacency[self.right_perm[u]]
            for u in range(g.right_size)
        )


@dataclass(frozen=True)
class SignedCond:
    """Finite map from keys to signs; ``True`` asks for adjacency.

    Keys are right indices for finite graphs, right handles for oracles,
    and may include automorphism handles in the splitting engine.
    """

    entries: tuple[tuple[object, bool], ...] = ()

    def __post_init__(self):
        keys = [k for k, _ in self.entries]
        if len(set(keys)) != len(keys):
            raise ValueError("SignedCond keys must be distinct")

    @classmethod
    def of(cls, mapping: dict | None = None) -> "SignedCond":
        return cls(tuple((k, bool(v)) for k, v in (mapping or {}).items()))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def domain(self) -> list:
        return [k for k, _ in self.entries]

    def as_dict(self) -> dict:
        return dict(self.entries)

    def merge(self, other: "SignedCond") -> "SignedCond":
        return SignedCond(self.entries + other.entries)

    def restrict(self, keep) -> "SignedCond":
        return SignedCond(tuple((k, v) for k, v in self.entries if keep(k)))

    def witnesses(self, g: Graph) -> list[int]:
        """Left vertices of ``g`` realizing the condition (keys are right indices)."""
        mask = (1 << g.left_size) - 1
        for u, sign in self.entries:
            mask &= g.adjacency[u] if sign else ~g.adjacency[u]
        return list(bits(mask))


def _in_range(g: Graph, p: PartialMap) -> None:
    for a, b in p.left:
        if not (0 <= a < g.left_size and 0 <= b < g.left_size):
            raise IndexOutOfRange(f"left pair ({a}, {b}) outside 0..{g.left_size - 1}")
    for a, b in p.right:
        if not (0 <= a < g.right_size and 0 <= b < g.right_size):
            raise IndexOutOfRange(f"right pair ({a}, {b}) outside 0..{g.right_size - 1}")


def check_partial_automorphism(g: Graph, p: PartialMap) -> bool:
    """True iff ``p`` preserves edges and non-edges between its points."""
    _in_range(g, p)
    for u, v in p.right:
        src, dst = g.adjacency[u], g.adjacency[v]
        for x, y in p.left:
            if (src >> x & 1) != (dst >> y & 1):
                return False
    return True


def find_extension(g: Graph, p: PartialMap) -> TotalAut | None:
    """Lexicographically least total automorphism extending ``p``, if any.

    Left permutations are tried in lexicographic order; for each, the right
    side is completed greedily, which is exact because right vertices with
    the same neighbourhood are interchangeable.
    """
    _in_range(g, p)
    lmap, rmap = p.left_map, p.right_map
    free_dom = [x for x in range(g.left_size) if x not in lmap]
    free_ran = sorted(set(range(g.left_size)) - set(lmap.values()))
    rfree_dom = [u for u in range(g.right_size) if u not in rmap]
    rfree_ran = sorted(set(range(g.right_size)) - set(rmap.values()))
    for images in itertools.permutations(free_ran):
        perm = [0] * g.left_size
        for x, y in lmap.items():
            perm[x] = y
        for x, y in zip(free_dom, images):
            perm[x] = y
        if any(permute_bits(g.adjacency[u], perm) != g.adjacency[v] for u, v in rmap.items()):
            continue
        rperm = [0] * g.right_size
        for u, v in rmap.items():
            rperm[u] = v
        unused = list(rfree_ran)
        ok = True
        for u in rfree_dom:
            want = permute_bits(g.adjacency[u], perm)
            for i, v in enumerate(unused):
                if g.adjacency[v] == want:
                    rperm[u] = v
                    del unused[i]
                    break
            else:
                ok = False
                break
        if ok:
            return TotalAut(tuple(perm), tuple(rperm))
    return None


def _injections(n: int, size: int) -> Iterator[tuple[tuple[int, int], ...]]:
    for dom in itertools.combinations(range(n), size):
        for ran in itertools.permutations(range(n), size):
            yield tuple(zip(dom, ran))


def enumerate_partial_automorphisms(g: Graph, cap: int) -> Iterator[PartialMap]:
    """Every partial automorphism with at most ``cap`` points, smallest first.

    Within one size, maps with more left points come first.
    """
    for size in range(cap + 1):
        for n_left in range(min(size, g.left_size), -1, -1):
            n_right = size - n_left
            if n_right > g.right_size:
                continue
            right_maps = list(_injections(g.right_size, n_right))
            for lp in _injections(g.left_size, n_left):
                for rp in right_maps:
                    ok = True
                    for u, v in rp:
                        src, dst = g.adjacency[u], g.adjacency[v]
                        if any((src >> x & 1) != (dst >> y & 1) for x, y in lp):
                            ok = False
                            break
                    if ok:
                        yield PartialMap(lp, rp)


def homogeneity_defect(g: Graph, cap: int) -> list[PartialMap]:
    """Partial automorphisms with ``<= cap`` points that extend to nothing."""
    return [p for p in enumerate_partial_automorphisms(g, cap) if find_extension(g, p) is None]


# ---------------------------------------------------------------------------
# classification


class GraphClass(str, enum.Enum):
    EMPTY = "Empty"
    COMPLETE = "Complete"
    PERFECT_MATCHING = "PerfectMatching"
    CO_MATCHING = "CoMatching"
    OTHER = "Other"


@dataclass(frozen=True)
class ClassLabel:
    kind: GraphClass
    extensional: bool
    homogeneous_cap: int | None = None
    homogeneous: bool | None = None


def _is_perfect_matching(g: Graph) -> bool:
    return all(m.bit_count() == 1 for m in g.adjacency) and all(
        m.bit_count() == 1 for m in g.left_adjacency
    )


def is_extensional(g: Graph) -> bool:
    return len(set(g.adjacency)) == g.right_size and len(set(g.left_adjacency)) == g.left_size


def classify(g: Graph, cap: int | None = None) -> ClassLabel:
    """Sort ``g`` into the finite homogeneous families, or Other.

    With ``cap`` given, also decide homogeneity for maps of at most ``cap``
    points by brute force.
    """
    n_edges = g.num_edges()
    if n_edges == 0:
        kind = GraphClass.EMPTY
    elif n_edges == g.left_size * g.right_size:
        kind = GraphClass.COMPLETE
    elif _is_perfect_matching(g):
        kind = GraphClass.PERFECT_MATCHING
    elif _is_perfect_matching(g.complement()):
        kind = GraphClass.CO_MATCHING
    else:
        kind = GraphClass.OTHER
    homogeneous = None
    if cap is not None:
        homogeneous = not homogeneity_defect(g, cap)
    return ClassLabel(kind, is_extensional(g), cap, homogeneous)


# ---------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class SaturationReport:
    k: int
    l: int
    m: int
    side: str
    failures: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    @property
    def saturated(self) -> bool:
        return not self.failures


def saturation_check(
    g: Graph, k: int, l: int, m: int, side: str = "left", among: Sequence[int] | None = None
) -> SaturationReport:
    """Count witnesses for every positive/negative tuple on ``side``.

    A tuple is ``k+1`` distinct vertices that must all be adjacent to the
    witness plus ``l+1`` further vertices that must all be non-adjacent.
    Witnesses live on the opposite side.  Tuples with fewer than ``m``
    witnesses are reported.  ``among`` restricts the tuple vertices to a
    subset, which keeps large graphs tractable.
    """
    if side == "left":
        rows, n_tuple, n_wit = g.left_adjacency, g.left_size, g.right_size
    elif side == "right":
        rows, n_tuple, n_wit = g.adjacency, g.right_size, g.left_size
    else:
        raise ValueError(f"side must be 'left' or 'right', not {side!r}")
    pool = sorted(set(range(n_tuple) if among is None else among))
    if pool and not (0 <= pool[0] and pool[-1] < n_tuple):
        raise IndexOutOfRange("saturation subset outside the tuple side")
    if k < 0 or l < 0 or k + l + 2 > len(pool):
        raise ValueError("need k+l+2 distinct vertices on the tuple side")
    full = (1 << n_wit) - 1
    failures = []
    for pos in itertools.combinations(pool, k + 1):
        common = full
        for x in pos:
            common &= rows[x]
        rest = [y for y in pool if y not in pos]
        for neg in itertools.combinations(rest, l + 1):
            wit = common
            for y in neg:
                wit &= ~rows[y]
            if wit.bit_count() < m:
                failures.append((pos, neg))
    return SaturationReport(k, l, m, side, tuple(failures))


def squares(g: Graph) -> int:
    """Number of 4-cycles."""
    rows = g.left_adjacency
    return sum(
        comb((rows[a] & rows[b]).bit_count(), 2)
        for a, b in itertools.combinations(range(g.left_size), 2)
    )


def canonical_code(g: Graph) -> tuple[int, int, tuple[int, ...]]:
    """Isomorphism invariant: least sorted adjacency tuple over left permutations.

    Brute force; intended for graphs with at most four vertices per side.
    """
    best = None
    for perm in itertools.permutations(range(g.left_size)):
        code = tuple(sorted(permute_bits(m, perm) for m in g.adjacency))
        if best is None or code < best:
            best = code
    return (g.left_size, g.right_size, best)
