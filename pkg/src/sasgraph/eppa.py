"""Valuation covers: finite magic extensions with closed-form automorphisms.

A left cover vertex is a pair ``(x, chi)`` with ``chi`` a bit valuation of
the base right side; a right cover vertex is ``(u, psi)`` with ``psi`` a
valuation of the base left side.  ``(x, chi) ~ (u, psi)`` iff
``chi(u) xor psi(x) == 1``.

Vertices are encoded as ints: left ``x << |R| | chi``, right ``u << |L| | psi``.

A pair (side-respecting base permutation, flip matrix) acts on the cover by
permuting bases and xoring the flip bit of the *target* base pair into both
facing coordinates, so adjacency is preserved by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BaseMismatch, NotPartialAutomorphism, SizeGuardExceeded
from .graph import (
    Graph,
    PartialMap,
    TotalAut,
    bits,
    check_partial_automorphism,
    enumerate_partial_automorphisms,
    permute_bits,
)

FULL_COVER_LIMIT = 12
# code tables are dense arrays indexed by vertex code
CODE_TABLE_LIMIT = 1 << 22

CoverVertex = tuple[int, int]  # (base vertex, valuation)


def _invert(perm: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for a, b in enumerate(perm):
        inv[b] = a
    return tuple(inv)


def permute_bits_array(values: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    out = np.zeros_like(values)
    for i, j in enumerate(perm):
        out |= ((values >> i) & 1) << j
    return out


@dataclass(frozen=True)
class CoverAut:
    """Automorphism of the valuation cover of a fixed base graph.

    ``flips[X]`` is a bitmask over base right vertices: bit ``U`` is the flip
    applied on the target base pair ``(X, U)``.
    """

    base_left: tuple[int, ...]
    base_right: tuple[int, ...]
    flips: tuple[int, ...]

    @classmethod
    def identity(cls, g: Graph) -> "CoverAut":
        return cls(tuple(range(g.left_size)), tuple(range(g.right_size)), (0,) * g.left_size)

    @cached_property
    def columns(self) -> tuple[int, ...]:
        """Flip matrix read by right base vertex: bitmask over left bases."""
        cols = [0] * len(self.base_right)
        for x, row in enumerate(self.flips):
            for u in bits(row):
                cols[u] |= 1 << x
        return tuple(cols)

    def act_left(self, v: CoverVertex) -> CoverVertex:
        x, chi = v
        nx = self.base_left[x]
        return nx, permute_bits(chi, self.base_right) ^ self.flips[nx]

    def act_right(self, v: CoverVertex) -> CoverVertex:
        u, psi = v
        nu = self.base_right[u]
        return nu, permute_bits(psi, self.base_left) ^ self.columns[nu]

    def act_left_codes(self, codes: np.ndarray) -> np.ndarray:
        nr = len(self.base_right)
        xs = codes >> nr
        nx = np.asarray(self.base_left, dtype=np.int64)[xs]
        chi = permute_bits_array(codes & ((1 << nr) - 1), self.base_right)
        chi ^= np.asarray(self.flips, dtype=np.int64)[nx]
        return (nx << nr) | chi

    def act_right_codes(self, codes: np.ndarray) -> np.ndarray:
        nl = len(self.base_left)
        us = codes >> nl
        nu = np.asarray(self.base_right, dtype=np.int64)[us]
        psi = permute_bits_array(codes & ((1 << nl) - 1), self.base_left)
        psi ^= np.asarray(self.columns, dtype=np.int64)[nu]
        return (nu << nl) | psi

    def _same_base(self, other: "CoverAut") -> None:
        if (len(self.base_left), len(self.base_right)) != (
            len(other.base_left),
            len(other.base_right),
        ):
            raise BaseMismatch("cover automorphisms over different base graphs")

    def compose(self, other: "CoverAut") -> "CoverAut":
        """``self`` after ``other``."""
        self._same_base(other)
        inv_l = _invert(self.base_left)
        flips = tuple(
            self.flips[X] ^ permute_bits(other.flips[inv_l[X]], self.base_right)
            for X in range(len(self.flips))
        )
        return CoverAut(
            tuple(self.base_left[b] for b in other.base_left),
            tuple(self.base_right[b] for b in other.base_right),
            flips,
        )

    def inverse(self) -> "CoverAut":
        inv_r = _invert(self.base_right)
        flips = tuple(
            permute_bits(self.flips[self.base_left[X]], inv_r) for X in range(len(self.flips))
        )
        return CoverAut(_invert(self.base_left), inv_r, flips)

    def is_identity(self) -> bool:
        return (
            self.base_left == tuple(range(len(self.base_left)))
            and self.base_right == tuple(range(len(self.base_right)))
            and not any(self.flips)
        )


def cover_group_op(a: CoverAut, b: CoverAut | None = None, which: str = "compose") -> CoverAut:
    if which == "compose":
        if b is None:
            raise ValueError("compose needs two operands")
        a._same_base(b)
        return a.compose(b)
    if which == "invert":
        return a.inverse()
    raise ValueError(f"unknown group operation {which!r}")


def _code_table(codes: np.ndarray, size: int) -> np.ndarray:
    table = np.full(size, -1, dtype=np.int64)
    table[codes] = np.arange(len(codes), dtype=np.int64)
    return table


@dataclass(frozen=True, eq=False)
class CoverGraph:
    """A set of cover vertices over ``base`` with the induced XOR adjacency.

    Base left vertex ``x`` is embedded at position ``embed_left[x]``, base
    right ``u`` at ``embed_right[u]``.
    """

    base: Graph
    left_codes: np.ndarray
    right_codes: np.ndarray
    embed_left: tuple[int, ...]
    embed_right: tuple[int, ...]
    full: bool = False

    @property
    def _nl(self) -> int:
        return self.base.left_size

    @property
    def _nr(self) -> int:
        return self.base.right_size

    @property
    def left(self) -> list[CoverVertex]:
        nr = self._nr
        return [(c >> nr, c & ((1 << nr) - 1)) for c in self.left_codes.tolist()]

    @property
    def right(self) -> list[CoverVertex]:
        nl = self._nl
        return [(c >> nl, c & ((1 << nl) - 1)) for c in self.right_codes.tolist()]

    @property
    def left_size(self) -> int:
        return len(self.left_codes)

    @property
    def right_size(self) -> int:
        return len(self.right_codes)

    @cached_property
    def _left_table(self) -> np.ndarray:
        return _code_table(self.left_codes, self._nl << self._nr)

    @cached_property
    def _right_table(self) -> np.ndarray:
        return _code_table(self.right_codes, self._nr << self._nl)

    def left_position(self, v: CoverVertex) -> int:
        x, chi = v
        return int(self._left_table[(x << self._nr) | chi])

    def right_position(self, v: CoverVertex) -> int:
        u, psi = v
        return int(self._right_table[(u << self._nl) | psi])

    @staticmethod
    def adjacent(lv: CoverVertex, rv: CoverVertex) -> bool:
        (x, chi), (u, psi) = lv, rv
        return bool((chi >> u & 1) ^ (psi >> x & 1))

    @cached_property
    def adjacency_matrix(self) -> np.ndarray:
        nl, nr = self._nl, self._nr
        xs = self.left_codes >> nr
        us = self.right_codes >> nl
        chi_bits = ((self.left_codes[:, None] >> np.arange(nr)) & 1).astype(np.uint8)
        psi_bits = ((self.right_codes[:, None] >> np.arange(nl)) & 1).astype(np.uint8)
        out = chi_bits[:, us]
        out ^= psi_bits[:, xs].T
        return out.view(bool)

    def num_edges(self) -> int:
        return int(self.adjacency_matrix.sum())

    def to_graph(self) -> Graph:
        """The cover as a plain graph; right labels are ``(u, psi)``."""
        return graph_from_matrix(self.adjacency_matrix, tuple(self.right))

    def image_positions(self, aut: CoverAut) -> tuple[np.ndarray, np.ndarray] | None:
        """Positions of the images of every vertex, or None if some leave the set."""
        self.base_check(aut)
        left = self._left_table[aut.act_left_codes(self.left_codes)]
        right = self._right_table[aut.act_right_codes(self.right_codes)]
        if (left < 0).any() or (right < 0).any():
            return None
        return left, right

    def restrict(self, aut: CoverAut) -> TotalAut:
        img = self.image_positions(aut)
        if img is None:
            raise ValueError("cover automorphism does not preserve this vertex set")
        return TotalAut(tuple(img[0].tolist()), tuple(img[1].tolist()))

    def verify(self, aut: CoverAut) -> bool:
        """Brute-force check that ``aut`` is an automorphism of this vertex set."""
        img = self.image_positions(aut)
        if img is None:
            return False
        left, right = img
        if len(np.unique(left)) != len(left) or len(np.unique(right)) != len(right):
            return False
        a = self.adjacency_matrix
        return bool(np.array_equal(a[np.ix_(left, right)], a))

    def base_check(self, aut: CoverAut) -> None:
        if (len(aut.base_left), len(aut.base_right)) != (self._nl, self._nr):
            raise BaseMismatch("cover automorphism over a different base")

    def agrees_on_embedding(self, aut: CoverAut, p: PartialMap) -> bool:
        """Embedded points of ``dom p`` go to the embedded images."""
        left, right = self.left, self.right
        for x, y in p.left:
            if aut.act_left(left[self.embed_left[x]]) != left[self.embed_left[y]]:
                return False
        for u, v in p.right:
            if aut.act_right(right[self.embed_right[u]]) != right[self.embed_right[v]]:
                return False
        return True


def graph_from_matrix(matrix: np.ndarray, right_labels) -> Graph:
    """Graph whose adjacency is the boolean ``left x right`` matrix."""
    packed = np.packbits(matrix, axis=0, bitorder="little")
    adj = tuple(int.from_bytes(packed[:, j].tobytes(), "little") for j in range(matrix.shape[1]))
    return Graph(matrix.shape[0], tuple(right_labels), adj)


def embedded_left(g: Graph, x: int) -> CoverVertex:
    return x, g.left_adjacency[x]


def embedded_right(g: Graph, u: int) -> CoverVertex:
    return u, 0


def _embedded_codes(g: Graph) -> tuple[list[int], list[int]]:
    nl, nr = g.left_size, g.right_size
    return (
        [(x << nr) | g.left_adjacency[x] for x in range(nl)],
        [u << nl for u in range(nr)],
    )


def _check_code_space(g: Graph) -> None:
    if (g.left_size << g.right_size) > CODE_TABLE_LIMIT or (
        g.right_size << g.left_size
    ) > CODE_TABLE_LIMIT:
        raise SizeGuardExceeded(f"cover of a {g.left_size}x{g.right_size} base is too large")


def _full_cover(g: Graph) -> CoverGraph:
    if g.left_size > FULL_COVER_LIMIT or g.right_size > FULL_COVER_LIMIT:
        raise SizeGuardExceeded(
            f"full cover of a {g.left_size}x{g.right_size} base exceeds {FULL_COVER_LIMIT} per side"
        )
    left = np.arange(g.left_size << g.right_size, dtype=np.int64)
    right = np.arange(g.right_size << g.left_size, dtype=np.int64)
    el, er = _embedded_codes(g)
    return CoverGraph(g, left, right, tuple(el), tuple(er), full=True)


def _orbit_cover(g: Graph, generators: Sequence[CoverAut]) -> CoverGraph:
    _check_code_space(g)
    moves = []
    for a in generators:
        moves.append(a)
        moves.append(a.inverse())
    el, er = _embedded_codes(g)

    def close(start: list[int], act) -> np.ndarray:
        order = list(dict.fromkeys(start))
        seen = set(order)
        frontier = np.asarray(order, dtype=np.int64)
        while len(frontier):
            fresh = []
            for a in moves:
                for c in act(a, frontier).tolist():
                    if c not in seen:
                        seen.add(c)
                        order.append(c)
                        fresh.append(c)
            frontier = np.asarray(fresh, dtype=np.int64)
        return np.asarray(order, dtype=np.int64)

    left = close(el, lambda a, f: a.act_left_codes(f))
    right = close(er, lambda a, f: a.act_right_codes(f))
    pos_l = {c: i for i, c in enumerate(left.tolist())}
    embed_l = tuple(pos_l[c] for c in el)
    return CoverGraph(g, left, right, embed_l, tuple(range(g.right_size)))


def ho_cover(g: Graph, mode: str = "full", generators: Sequence[CoverAut] = ()) -> CoverGraph:
    """Valuation cover of ``g``.

    ``mode="full"`` materialises every (base, valuation) pair;
    ``mode="orbit"`` keeps only the orbit of the embedded copy under the
    group generated by ``generators`` and their inverses, in BFS order.
    """
    if mode == "full":
        return _full_cover(g)
    if mode == "orbit":
        return _orbit_cover(g, generators)
    raise ValueError(f"unknown cover mode {mode!r}")


def _min_completion(n: int, fixed: dict[int, int]) -> tuple[int, ...]:
    free = iter(sorted(set(range(n)) - set(fixed.values())))
    return tuple(fixed[i] if i in fixed else next(free) for i in range(n))


def extend_in_cover(g: Graph, p: PartialMap) -> CoverAut:
    """Cover automorphism sending each embedded ``v`` in ``dom p`` to embedded ``p(v)``.

    Base parts are completed to the lexicographically least permutations.
    Flip rows are forced only at the left targets of ``p``; the remaining
    bits are 0.
    """
    if not check_partial_automorphism(g, p):
        raise NotPartialAutomorphism("map does not preserve edges and non-edges")
    lperm = _min_completion(g.left_size, p.left_map)
    rperm = _min_completion(g.right_size, p.right_map)
    rows = g.left_adjacency
    flips = [0] * g.left_size
    for x, y in p.left:
        flips[y] = permute_bits(rows[x], rperm) ^ rows[y]
    return CoverAut(lperm, rperm, tuple(flips))


# ---------------------------------------------------------------------------
# bounded closures

# S_R-invariant subspaces of GF(2)^R: zero, span of all-ones, even weight, all
ROW_SPACES = ("zero", "ones", "even", "full")


def _invariant_span(rows, n: int) -> str:
    ones = (1 << n) - 1
    nonconst = any(r not in (0, ones) for r in rows)
    odd = any(r.bit_count() % 2 for r in rows)
    if nonconst:
        return "full" if odd else "even"
    if ones in rows:
        return "ones"
    return "zero"


def flip_row_space(g: Graph, k: int) -> str:
    """Smallest S_R-invariant row space holding every flip row of ``extend_in_cover(g, p)``, ``|p| <= k``."""
    if k < 1 or g.left_size < 2:
        rows = {0}
    else:
        adj = g.left_adjacency
        rows = {adj[x] ^ adj[y] for x in range(g.left_size) for y in range(g.left_size)}
    space = _invariant_span(rows, g.right_size)
    if space in ("zero", "ones") and k >= 2:
        # every row is N(x).q ^ N(y); exhaust the maps that carry right points
        rows = set(rows)
        for p in enumerate_partial_automorphisms(g, k):
            if p.left and p.right:
                rows.update(extend_in_cover(g, p).flips)
        space = _invariant_span(rows, g.right_size)
    return space


def in_row_space(row: int, space: str, n: int) -> bool:
    if space == "full":
        return True
    if space == "even":
        return row.bit_count() % 2 == 0
    if space == "ones":
        return row in (0, (1 << n) - 1)
    return row == 0


def closure_generators(g: Graph, space: str, permute: bool = True) -> list[CoverAut]:
    """Small generating set of (row space)^L x| (S_L x S_R)."""
    nl, nr = g.left_size, g.right_size
    ident_l, ident_r = tuple(range(nl)), tuple(range(nr))
    zero = (0,) * nl
    gens = []
    if permute:
        for i in range(nl - 1):
            perm = list(ident_l)
            perm[i], perm[i + 1] = perm[i + 1], perm[i]
            gens.append(CoverAut(tuple(perm), ident_r, zero))
        for j in range(nr - 1):
            perm = list(ident_r)
            perm[j], perm[j + 1] = perm[j + 1], perm[j]
            gens.append(CoverAut(ident_l, tuple(perm), zero))
    row = {"full": 1, "even": 3 if nr > 1 else 0, "ones": (1 << nr) - 1, "zero": 0}[space]
    if row:
        gens.append(CoverAut(ident_l, ident_r, (row,) + (0,) * (nl - 1)))
    return gens


def _weights(values: np.ndarray, width: int) -> np.ndarray:
    w = np.zeros_like(values)
    for i in range(width):
        w += (values >> i) & 1
    return w


@dataclass
class MagicClosure:
    """Output of :func:`k_magic_closure`.

    ``graph`` lists the embedded copy first, so base vertex ``x`` is left
    vertex ``x`` and base right ``u`` is right vertex ``u``.
    ``generators[i]`` is the restriction of ``cover_auts[i]``.
    """

    base: Graph
    k: int
    row_space: str
    cover: CoverGraph
    cover_auts: list[CoverAut]
    graph: Graph

    @cached_property
    def generators(self) -> list[TotalAut]:
        return [self.cover.restrict(a) for a in self.cover_auts]

    @property
    def embedding(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.cover.embed_left, self.cover.embed_right

    def in_group(self, a: CoverAut) -> bool:
        """Membership in the group generated by ``cover_auts``."""
        nl, nr = self.base.left_size, self.base.right_size
        if self.k == 0:
            return a.is_identity()
        return all(in_row_space(r, self.row_space, nr) for r in a.flips) and len(a.flips) == nl

    def extension(self, p: PartialMap) -> TotalAut:
        """Total automorphism of ``graph`` extending ``p`` (given on base indices)."""
        a = extend_in_cover(self.base, p)
        if not self.in_group(a):
            raise ValueError("extension lies outside the generated group")
        return self.cover.restrict(a)


def k_magic_closure(g: Graph, k: int) -> MagicClosure:
    """Orbit-closed part of the cover where every ``<= k`` point map extends.

    The generating group is U^L x| (S_L x S_R), where U is the smallest
    S_R-invariant row space containing the flip rows of every
    ``extend_in_cover(g, p)`` with ``|p| <= k``; so each such extension is
    a group element and restricts to an automorphism of the output.  The
    orbit is written down directly: the left part is every base with every
    valuation reachable from an embedded neighbourhood by a permutation and
    a row of U, the right part every base with every column of U^L.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    _check_code_space(g)
    nl, nr = g.left_size, g.right_size
    el, er = _embedded_codes(g)
    if k == 0:
        cover = CoverGraph(
            g,
            np.asarray(el, dtype=np.int64),
            np.asarray(er, dtype=np.int64),
            tuple(range(nl)),
            tuple(range(nr)),
        )
        auts = [CoverAut.identity(g)]
        return MagicClosure(g, 0, "zero", cover, auts, cover.to_graph())
    space = flip_row_space(g, k)
    degrees = {m.bit_count() for m in g.left_adjacency}
    vals = np.arange(1 << nr, dtype=np.int64)
    w = _weights(vals, nr)
    if space == "full":
        ok = np.ones(len(vals), dtype=bool)
    elif space == "even":
        ok = np.isin(w % 2, [d % 2 for d in degrees])
    elif space == "ones":
        ok = np.isin(w, sorted(degrees | {nr - d for d in degrees}))
    else:
        ok = np.isin(w, sorted(degrees))
    good = vals[ok]
    left_all = ((np.arange(nl, dtype=np.int64)[:, None] << nr) | good[None, :]).ravel()
    psis = np.arange(1 << nl, dtype=np.int64) if space != "zero" else np.zeros(1, dtype=np.int64)
    right_all = ((np.arange(nr, dtype=np.int64)[:, None] << nl) | psis[None, :]).ravel()
    left = np.concatenate([np.asarray(el, dtype=np.int64), left_all[~np.isin(left_all, el)]])
    right = np.concatenate([np.asarray(er, dtype=np.int64), right_all[~np.isin(right_all, er)]])
    cover = CoverGraph(g, left, right, tuple(range(nl)), tuple(range(nr)))
    auts = closure_generators(g, space)
    return MagicClosure(g, k, space, cover, auts, cover.to_graph())
