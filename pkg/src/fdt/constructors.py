"""Composite bases: products, separated sums, function spaces, recursive trees.

Each finite constructor returns a subclass of :class:`FiniteBasis` that also
remembers how its tokens decompose.  The effective enumerations at the end
build presentations of the same constructions from presentations of the
parts, so they also work when the parts are infinite.
"""

from __future__ import annotations

import math
from functools import cached_property
from itertools import combinations
from typing import Optional, Sequence

from .basis import FiniteBasis, PresentedBasis, bits
from .errors import GuardExceeded
from .mappings import ApproxMap

FUNSPACE_LIMIT = 4096


class ProductBasis(FiniteBasis):
    """Pairs [d,e] ordered componentwise; token k is [k // |E|, k % |E|]."""

    __slots__ = ("left", "right", "right_size", "split", "join")

    def __init__(self, left: FiniteBasis, right: FiniteBasis, name: Optional[str] = None):
        nl, nr = len(left), len(right)
        labels = [f"[{d},{e}]" for d in left.labels for e in right.labels]
        up = []
        for d in range(nl):
            for e in range(nr):
                m = 0
                for d2 in bits(left.up[d]):
                    m |= right.up[e] << (d2 * nr)
                up.append(m)
        super().__init__(name or f"{left.name}x{right.name}", labels, up)
        self.left, self.right, self.right_size = left, right, nr
        self.split = tuple((d, e) for d in range(nl) for e in range(nr))
        self.join = {de: k for k, de in enumerate(self.split)}

    def pair(self, d: str, e: str) -> str:
        return self.labels[self.join[self.left.idx(d), self.right.idx(e)]]


def product_basis(a: FiniteBasis, b: FiniteBasis, name: Optional[str] = None) -> ProductBasis:
    return ProductBasis(a, b, name)


class SumBasis(FiniteBasis):
    """Separated sum: a fresh bottom below in0(d) for d in A and in1(e) for e in B."""

    def __init__(self, left: FiniteBasis, right: FiniteBasis, name: Optional[str] = None):
        nl, nr = len(left), len(right)
        labels = ["⊥"] + [f"in0({d})" for d in left.labels] + [f"in1({e})" for e in right.labels]
        n = 1 + nl + nr
        up = [(1 << n) - 1]
        up += [left.up[d] << 1 for d in range(nl)]
        up += [right.up[e] << (1 + nl) for e in range(nr)]
        super().__init__(name or f"{left.name}+{right.name}", labels, up)
        self.left, self.right = left, right

    @cached_property
    def in_left(self) -> ApproxMap:
        return ApproxMap(self.left, self, tuple(1 | m << 1 for m in self.left.down))

    @cached_property
    def in_right(self) -> ApproxMap:
        nl = len(self.left)
        return ApproxMap(self.right, self, tuple(1 | m << (1 + nl) for m in self.right.down))

    @cached_property
    def out_left(self) -> ApproxMap:
        bot = 1 << self.left.bottom_index
        rows = [bot] + list(self.left.down) + [bot] * len(self.right)
        return ApproxMap(self, self.left, tuple(rows))

    @cached_property
    def out_right(self) -> ApproxMap:
        bot = 1 << self.right.bottom_index
        rows = [bot] + [bot] * len(self.left) + list(self.right.down)
        return ApproxMap(self, self.right, tuple(rows))


def sum_basis(a: FiniteBasis, b: FiniteBasis, name: Optional[str] = None) -> SumBasis:
    return SumBasis(a, b, name)


def _monotone_functions(a: FiniteBasis, b: FiniteBasis, limit: int) -> list[tuple[int, ...]]:
    """All monotone h : A -> B as tuples indexed by A's tokens."""
    order = sorted(range(len(a)), key=lambda i: (bin(a.down[i]).count("1"), i))
    below = {i: [j for j in bits(a.down[i]) if j != i] for i in order}
    h = [0] * len(a)
    out: list[tuple[int, ...]] = []

    def go(k: int) -> None:
        if k == len(order):
            out.append(tuple(h))
            if len(out) > limit:
                raise GuardExceeded(f"function space exceeds {limit} tokens")
            return
        i = order[k]
        floor = b.full
        for j in below[i]:
            floor &= b.up[h[j]]
        for v in bits(floor):
            h[i] = v
            go(k + 1)

    go(0)
    return out


class FunSpaceBasis(FiniteBasis):
    """Approximable maps A -> B (all of them are finite step mappings), ordered pointwise.

    ``maps[k]`` holds the rows of token k in the layout used by
    :class:`~fdt.mappings.ApproxMap`.
    """

    def __init__(self, source: FiniteBasis, target: FiniteBasis, limit: int = FUNSPACE_LIMIT,
                 name: Optional[str] = None):
        tops = _monotone_functions(source, target, limit)
        tops.sort(key=lambda h: (sum(bin(target.down[v]).count("1") for v in h), h))
        n = len(tops)
        # above[i][v]: maps G whose value at i lies above v
        above = [[0] * len(target) for _ in range(len(source))]
        for k, h in enumerate(tops):
            for i, v in enumerate(h):
                for w in bits(target.down[v]):
                    above[i][w] |= 1 << k
        up = []
        for h in tops:
            m = (1 << n) - 1
            for i, v in enumerate(h):
                m &= above[i][v]
            up.append(m)
        labels = [self._label(source, target, h) for h in tops]
        super().__init__(name or f"({source.name}=>{target.name})", labels, up)
        self.source, self.target = source, target
        self.tops = tuple(tops)
        self.maps = tuple(tuple(target.down[v] for v in h) for h in tops)

    @staticmethod
    def _label(source: FiniteBasis, target: FiniteBasis, h: Sequence[int]) -> str:
        parts = [f"{source.labels[i]}↦{target.labels[v]}" for i, v in enumerate(h) if v != target.bottom_index]
        return "{" + ",".join(parts) + "}"

    def as_map(self, token: str) -> ApproxMap:
        return ApproxMap(self.source, self.target, self.maps[self.idx(token)])

    def token_of(self, f: ApproxMap) -> str:
        return self.labels[self.maps.index(f.rows)]


def funspace_basis(a: FiniteBasis, b: FiniteBasis, limit: int = FUNSPACE_LIMIT) -> FunSpaceBasis:
    return FunSpaceBasis(a, b, limit)


class RecTreeBasis(FiniteBasis):
    """Trees over an atom basis A truncated at a nesting depth.

    ``shape[k]`` is ("D",), ("A", a) or ("N", s, t) with a an index of A and
    s, t indices of this basis.
    """

    def __init__(self, atoms: FiniteBasis, depth: int, name: Optional[str] = None):
        shapes: list[tuple] = [("D",)] + [("A", i) for i in range(len(atoms))]
        layer = list(range(len(shapes)))
        for _ in range(depth):
            prev = layer
            layer = list(range(1 + len(atoms)))
            seen = {s: k for k, s in enumerate(shapes)}
            for s in prev:
                for t in prev:
                    key = ("N", s, t)
                    if key not in seen:
                        seen[key] = len(shapes)
                        shapes.append(key)
                    layer.append(seen[key])
        n = len(shapes)
        up = [0] * n
        for k, sh in enumerate(shapes):
            if sh[0] == "D":
                up[k] = (1 << n) - 1
        index = {sh: k for k, sh in enumerate(shapes)}
        for k, sh in enumerate(shapes):
            if sh[0] == "A":
                up[k] = sum(1 << index[("A", j)] for j in bits(atoms.up[sh[1]]))
        for k, sh in enumerate(shapes):
            if sh[0] == "N":
                m = 0
                for s2 in bits(up[sh[1]]):
                    for t2 in bits(up[sh[2]]):
                        j = index.get(("N", s2, t2))
                        if j is not None:
                            m |= 1 << j
                up[k] = m
        labels: list[str] = []
        for sh in shapes:
            if sh[0] == "D":
                labels.append("Δ")
            elif sh[0] == "A":
                labels.append(f"atom({atoms.labels[sh[1]]})")
            else:
                labels.append(f"node({labels[sh[1]]},{labels[sh[2]]})")
        super().__init__(name or f"T{depth}({atoms.name})", labels, up)
        self.atoms, self.depth = atoms, depth
        self.shape = tuple(shapes)


def rec_tree_basis(a: FiniteBasis, depth: int) -> RecTreeBasis:
    return RecTreeBasis(a, depth)


def pairing(n: int, m: int) -> int:
    return (n + m) * (n + m + 1) // 2 + m


def unpair(k: int) -> tuple[int, int]:
    w = (math.isqrt(8 * k + 1) - 1) // 2
    m = k - w * (w + 1) // 2
    return w - m, m


def powerset_decode(n: int) -> frozenset[int]:
    return frozenset(bits(n))


def powerset_encode(s) -> int:
    return sum(1 << k for k in set(s))


def powerset_presentation() -> PresentedBasis:
    def label(n: int) -> str:
        return "{" + ",".join(str(k) for k in sorted(bits(n))) + "}"

    return PresentedBasis("P(N)", label, lambda i, j: True, lambda i, j: i | j)


def _presented_lub_set(p: PresentedBasis, idxs: Sequence[int]) -> Optional[int]:
    acc = 0
    for i in idxs:
        if not p.cons(acc, i):
            return None
        acc = p.lub_index(acc, i)
    return acc


def enum_sum(pa: PresentedBasis, pb: PresentedBasis) -> PresentedBasis:
    """Z_0 = bottom, Z_(2n+1) = in0(X_n), Z_(2n+2) = in1(Y_n).

    When one finite side runs out, the missing indices repeat the bottom.
    """

    def tag(k: int) -> tuple[int, int]:
        if k == 0:
            return -1, 0
        side, n = (k - 1) % 2, (k - 1) // 2
        size = (pa, pb)[side].size
        if size is not None and n >= size:
            return -1, 0
        return side, n

    def enum(k: int) -> str:
        side, n = tag(k)
        if side < 0:
            return "⊥"
        return f"in{side}({(pa, pb)[side].enumerate(n)})"

    def cons(i: int, j: int) -> bool:
        (si, ni), (sj, nj) = tag(i), tag(j)
        if si < 0 or sj < 0:
            return True
        return si == sj and (pa, pb)[si].cons(ni, nj)

    def lub_index(i: int, j: int) -> Optional[int]:
        if not cons(i, j):
            return None
        (si, ni), (sj, nj) = tag(i), tag(j)
        if si < 0:
            return j
        if sj < 0:
            return i
        return 2 * (pa, pb)[si].lub_index(ni, nj) + 1 + si

    size = None
    if pa.size is not None and pb.size is not None:
        size = 1 + 2 * max(pa.size, pb.size)
    return PresentedBasis(f"{pa.name}+{pb.name}", enum, cons, lub_index, size)


def enum_product(pa: PresentedBasis, pb: PresentedBasis) -> PresentedBasis:
    """W_i = (X_p(i), Y_q(i)) under the diagonal pairing.

    Indices whose components fall outside a finite side repeat the bottom pair.
    """

    def parts(k: int) -> tuple[int, int]:
        n, m = unpair(k)
        if (pa.size is not None and n >= pa.size) or (pb.size is not None and m >= pb.size):
            return 0, 0
        return n, m

    def enum(k: int) -> str:
        n, m = parts(k)
        return f"[{pa.enumerate(n)},{pb.enumerate(m)}]"

    def cons(i: int, j: int) -> bool:
        (n, m), (n2, m2) = parts(i), parts(j)
        return pa.cons(n, n2) and pb.cons(m, m2)

    def lub_index(i: int, j: int) -> Optional[int]:
        if not cons(i, j):
            return None
        (n, m), (n2, m2) = parts(i), parts(j)
        return pairing(pa.lub_index(n, n2), pb.lub_index(m, m2))

    size = None
    if pa.size is not None and pb.size is not None:
        size = pairing(pa.size - 1, pb.size - 1) + 1
    return PresentedBasis(f"{pa.name}x{pb.name}", enum, cons, lub_index, size)


def enum_funspace(pa: PresentedBasis, pb: PresentedBasis) -> PresentedBasis:
    """Index n codes the finite pair set {(p(k), q(k)) | bit k of n is set}.

    Inconsistent pair sets repeat the bottom (the empty set), so the lub of
    two consistent codes is simply their bitwise union.
    """

    def raw_pairs(n: int) -> list[tuple[int, int]]:
        out = []
        for k in bits(n):
            i, j = unpair(k)
            if (pa.size is None or i < pa.size) and (pb.size is None or j < pb.size):
                out.append((i, j))
        return out

    def consistent_pairs(ps: list[tuple[int, int]]) -> bool:
        # a finite step set is consistent iff every subset with consistent
        # arguments has consistent values
        for r in range(2, len(ps) + 1):
            for sub in combinations(ps, r):
                if _presented_lub_set(pa, [a for a, _ in sub]) is not None:
                    if _presented_lub_set(pb, [b for _, b in sub]) is None:
                        return False
        return True

    def code(n: int) -> list[tuple[int, int]]:
        ps = raw_pairs(n)
        return ps if consistent_pairs(ps) else []

    def value_at(ps: list[tuple[int, int]], a: int) -> int:
        lub = _presented_lub_set(pb, [b for a2, b in ps if pa.leq(a2, a)])
        assert lub is not None
        return lub

    def leq(i: int, j: int) -> bool:
        pj = code(j)
        return all(pb.leq(b, value_at(pj, a)) for a, b in code(i))

    finite = pa.finite is not None and pb.finite is not None and pa.size is not None and pb.size is not None
    if finite:
        fs = funspace_basis(pa.finite, pb.finite)
        sa = [pa.finite.idx(pa.enumerate(i)) for i in range(pa.size)]
        sb = [pb.finite.idx(pb.enumerate(j)) for j in range(pb.size)]

    def enum(n: int) -> str:
        ps = code(n)
        if finite:
            h = tuple(sb[value_at(ps, k)] for k in _inverse(sa, len(pa.finite)))
            return fs.labels[fs.tops.index(h)]
        return "{" + ",".join(f"{pa.enumerate(a)}↦{pb.enumerate(b)}" for a, b in ps) + "}"

    def cons(i: int, j: int) -> bool:
        return consistent_pairs(code(i) + code(j))

    def lub_index(i: int, j: int) -> Optional[int]:
        if not cons(i, j):
            return None
        return (i if code(i) else 0) | (j if code(j) else 0)

    size = None
    if finite:
        size = 1 << (pairing(pa.size - 1, pb.size - 1) + 1)
    return PresentedBasis(f"({pa.name}=>{pb.name})", enum, cons, lub_index, size,
                          fs if finite else None, leq)


def _inverse(positions: Sequence[int], n: int) -> list[int]:
    inv = [0] * n
    for k, i in enumerate(positions):
        inv[i] = k
    return inv
