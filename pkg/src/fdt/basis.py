"""Finite bases: validated partial orders in which every bounded subset has a lub.

Tokens are identified by their label.  Internally a basis stores, for each
token index, the bitmask of tokens above it and the bitmask of tokens below
it, so consistency and lub questions reduce to a few integer operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence

from .errors import (
    DomainError,
    GuardExceeded,
    InconsistentError,
    ParseError,
    UnknownToken,
    ValidationError,
)

EXHAUSTIVE_LIMIT = 16
ISO_LIMIT = 12


class ElementToken(NamedTuple):
    id: int
    label: str


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask``, lowest first."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class FiniteBasis:
    """An explicit finite finitary basis.

    Build one with :func:`validate_basis` (or :func:`parse_basis`); the
    constructor itself trusts its input and only checks for a bottom.
    """

    __slots__ = ("name", "labels", "index", "up", "down", "bottom_index", "full", "_topo", "_lub2")

    def __init__(self, name: str, labels: Sequence[str], up: Sequence[int]):
        self.name = name
        self.labels = tuple(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        n = len(self.labels)
        self.full = (1 << n) - 1
        self.up = tuple(up)
        down = [0] * n
        for i, m in enumerate(self.up):
            for j in bits(m):
                down[j] |= 1 << i
        self.down = tuple(down)
        bottoms = [i for i in range(n) if self.up[i] == self.full]
        if not bottoms:
            raise ValidationError("no-bottom", f"basis {name!r} has no bottom element")
        self.bottom_index = bottoms[0]
        # a linear extension: anything below x comes before x
        self._topo = tuple(sorted(range(n), key=lambda i: (popcount(self.down[i]), i)))
        self._lub2: dict[tuple[int, int], Optional[int]] = {}

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self.index

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def __repr__(self) -> str:
        return f"FiniteBasis({self.name!r}, {len(self)} tokens)"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteBasis)
            and self.labels == other.labels
            and self.up == other.up
        )

    def __hash__(self) -> int:
        return hash((self.labels, self.up))

    @property
    def bottom(self) -> str:
        return self.labels[self.bottom_index]

    @property
    def tokens(self) -> tuple[ElementToken, ...]:
        return tuple(ElementToken(i, lab) for i, lab in enumerate(self.labels))

    def idx(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise UnknownToken(label, self.name) from None

    def mask(self, labels: Iterable[str]) -> int:
        m = 0
        for lab in labels:
            m |= 1 << self.idx(lab)
        return m

    def labels_of(self, mask: int) -> frozenset[str]:
        return frozenset(self.labels[i] for i in bits(mask))

    def leq(self, a: str, b: str) -> bool:
        return bool(self.up[self.idx(a)] >> self.idx(b) & 1)

    def leq_i(self, i: int, j: int) -> bool:
        return bool(self.up[i] >> j & 1)

    def uppers(self, mask: int) -> int:
        u = self.full
        for i in bits(mask):
            u &= self.up[i]
        return u

    def least_of(self, mask: int) -> Optional[int]:
        """The least member of the token set ``mask``, if it has one."""
        if not mask:
            return None
        for i in self._topo:
            if mask >> i & 1:
                return i if self.up[i] & mask == mask else None
        return None

    def lub_mask(self, mask: int) -> Optional[int]:
        return self.least_of(self.uppers(mask))

    def lub2(self, i: int, j: int) -> Optional[int]:
        if self.up[i] >> j & 1:
            return j
        if self.up[j] >> i & 1:
            return i
        key = (i, j) if i < j else (j, i)
        try:
            return self._lub2[key]
        except KeyError:
            r = self.least_of(self.up[i] & self.up[j])
            self._lub2[key] = r
            return r

    def covers(self) -> list[tuple[int, int]]:
        """Hasse diagram edges (i, j): i strictly below j with nothing between."""
        out = []
        for i in range(len(self)):
            for j in bits(self.up[i] & ~(1 << i)):
                if self.up[i] & self.down[j] == (1 << i) | (1 << j):
                    out.append((i, j))
        return out


def _closure(n: int, pairs: Iterable[tuple[int, int]]) -> list[int]:
    reach = [1 << i for i in range(n)]
    for a, b in pairs:
        reach[a] |= 1 << b
    for k in range(n):
        bk = 1 << k
        rk = reach[k]
        for i in range(n):
            if reach[i] & bk:
                reach[i] |= rk
    return reach


def _minimal(basis: FiniteBasis, mask: int) -> int:
    return sum(1 << u for u in bits(mask) if basis.down[u] & mask == 1 << u)


def check_lubs(basis: FiniteBasis, exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> None:
    """Raise unless every consistent subset of ``basis`` has a least upper bound."""
    n = len(basis)
    up = basis.up
    if n <= exhaustive_limit:
        uppers = [0] * (1 << n)
        uppers[0] = basis.full
        for m in range(1, 1 << n):
            low = m & -m
            u = uppers[m ^ low] & up[low.bit_length() - 1]
            uppers[m] = u
            if u and m != low and basis.least_of(u) is None:
                raise _no_lub(basis, m, u)
    else:
        for i in range(n):
            for j in range(i + 1, n):
                u = up[i] & up[j]
                if u and basis.least_of(u) is None:
                    raise _no_lub(basis, (1 << i) | (1 << j), u)


def _no_lub(basis: FiniteBasis, subset: int, uppers: int) -> ValidationError:
    s = sorted(basis.labels_of(subset))
    mins = sorted(basis.labels_of(_minimal(basis, uppers)))
    return ValidationError(
        "no-lub",
        f"consistent subset {{{', '.join(s)}}} has no least upper bound; "
        f"minimal upper bounds {{{', '.join(mins)}}}",
        witness=(tuple(s), tuple(mins)),
    )


def validate_basis(
    elements: Sequence[str],
    order_pairs: Iterable[tuple[str, str]],
    name: str = "B",
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
) -> FiniteBasis:
    """Close ``order_pairs`` reflexively and transitively and check the basis axioms."""
    if not elements:
        raise ValidationError("no-bottom", "empty basis: no bottom element")
    index: dict[str, int] = {}
    for lab in elements:
        if lab in index:
            raise ValidationError("duplicate", f"duplicate element {lab!r}", witness=lab)
        index[lab] = len(index)
    pairs = []
    for a, b in order_pairs:
        for t in (a, b):
            if t not in index:
                raise UnknownToken(t, name)
        pairs.append((index[a], index[b]))
    n = len(elements)
    reach = _closure(n, pairs)
    for i in range(n):
        for j in range(i + 1, n):
            if reach[i] >> j & 1 and reach[j] >> i & 1:
                raise ValidationError(
                    "cycle",
                    f"order is not antisymmetric: {elements[i]} and {elements[j]} are mutually below",
                    witness=(elements[i], elements[j]),
                )
    basis = FiniteBasis(name, elements, reach)
    check_lubs(basis, exhaustive_limit)
    return basis


def _subset(basis: FiniteBasis, subset: Iterable[str]) -> int:
    return basis.mask(subset)


def consistent(basis: FiniteBasis, subset: Iterable[str]) -> bool:
    return basis.uppers(_subset(basis, subset)) != 0


def lub(basis: FiniteBasis, subset: Iterable[str]) -> str:
    m = _subset(basis, subset)
    r = basis.lub_mask(m)
    if r is None:
        s = tuple(sorted(basis.labels_of(m)))
        raise InconsistentError(f"inconsistent subset {{{', '.join(s)}}}", witness=s)
    return basis.labels[r]


def glb(basis: FiniteBasis, subset: Iterable[str]) -> str:
    m = _subset(basis, subset)
    if not m:
        raise DomainError("glb of the empty set is not defined")
    lower = basis.full
    for i in bits(m):
        lower &= basis.down[i]
    r = basis.lub_mask(lower)
    assert r is not None, "lower bounds of a finitary basis always have a lub"
    return basis.labels[r]


def principal_ideal(basis: FiniteBasis, x: str) -> frozenset[str]:
    return basis.labels_of(basis.down[basis.idx(x)])


def classify_element(basis: FiniteBasis, x: str) -> str:
    i = basis.idx(x)
    return "total" if basis.up[i] == 1 << i else "partial"


def find_isomorphism(
    a: FiniteBasis, b: FiniteBasis, limit: int = ISO_LIMIT
) -> Optional[dict[str, str]]:
    """Order isomorphism from ``a`` onto ``b``, or None.

    Tokens of ``a`` are assigned in label order and candidates in ``b`` are
    tried in label order, so the first solution found is the
    lexicographically least one.
    """
    n = len(a)
    if n != len(b):
        return None
    if n > limit:
        raise GuardExceeded(f"isomorphism search limited to {limit} tokens, got {n}")

    def sig(basis: FiniteBasis, i: int) -> tuple[int, int]:
        return popcount(basis.up[i]), popcount(basis.down[i])

    if sorted(sig(a, i) for i in range(n)) != sorted(sig(b, i) for i in range(n)):
        return None
    order_a = sorted(range(n), key=lambda i: a.labels[i])
    order_b = sorted(range(n), key=lambda i: b.labels[i])
    assign = [-1] * n
    used = [False] * n

    def ok(i: int, j: int, k: int) -> bool:
        for p in order_a[:k]:
            q = assign[p]
            if a.leq_i(i, p) != b.leq_i(j, q) or a.leq_i(p, i) != b.leq_i(q, j):
                return False
        return True

    def search(k: int) -> bool:
        if k == n:
            return True
        i = order_a[k]
        for j in order_b:
            if used[j] or sig(a, i) != sig(b, j) or not ok(i, j, k):
                continue
            assign[i], used[j] = j, True
            if search(k + 1):
                return True
            assign[i], used[j] = -1, False
        return False

    if not search(0):
        return None
    return {a.labels[i]: b.labels[assign[i]] for i in range(n)}


@dataclass(frozen=True)
class PresentedBasis:
    """A basis given by oracles over natural-number indices.

    ``enumerate(0)`` is the bottom; ``lub_index(i, j)`` is defined exactly
    when ``cons(i, j)`` holds.  ``size`` is None for infinite bases.
    """

    name: str
    enumerate: Callable[[int], str]
    cons: Callable[[int, int], bool]
    lub_index: Callable[[int, int], Optional[int]]
    size: Optional[int] = None
    finite: Optional[FiniteBasis] = field(default=None, compare=False)
    leq_decider: Optional[Callable[[int, int], bool]] = field(default=None, compare=False)

    def leq(self, i: int, j: int) -> bool:
        """Whether token i lies below token j."""
        if self.leq_decider is not None:
            return self.leq_decider(i, j)
        if not self.cons(i, j):
            return False
        return self.enumerate(self.lub_index(i, j)) == self.enumerate(j)

    def indices(self) -> Iterator[int]:
        n = 0
        while self.size is None or n < self.size:
            yield n
            n += 1


def present(basis: FiniteBasis, order: Sequence[str]) -> PresentedBasis:
    if sorted(order) != sorted(basis.labels) or len(set(order)) != len(order):
        raise ValidationError("not-permutation", "order must list every token exactly once")
    if order[0] != basis.bottom:
        raise ValidationError("bottom-not-first", f"order must start at the bottom {basis.bottom!r}")
    idx = [basis.idx(t) for t in order]
    pos = {j: k for k, j in enumerate(idx)}
    n = len(order)

    def enum(k: int) -> str:
        if not 0 <= k < n:
            raise IndexError(k)
        return order[k]

    def cons(i: int, j: int) -> bool:
        return basis.lub2(idx[i], idx[j]) is not None

    def lub_index(i: int, j: int) -> Optional[int]:
        r = basis.lub2(idx[i], idx[j])
        return None if r is None else pos[r]

    return PresentedBasis(basis.name, enum, cons, lub_index, n, basis)


def parse_basis(text: str) -> FiniteBasis:
    name = None
    elems: list[str] = []
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head, args = words[0], words[1:]
        if head == "basis" and len(args) == 1:
            if name is not None:
                raise ParseError("second basis header", lineno)
            name = args[0]
        elif head == "elem" and len(args) == 1:
            elems.append(args[0])
        elif head == "leq" and len(args) == 2:
            pairs.append((args[0], args[1]))
        else:
            raise ParseError(f"cannot parse {line!r}", lineno)
    if name is None:
        raise ParseError("missing 'basis <name>' header")
    basis = validate_basis(elems, pairs, name)
    if elems[0] != basis.bottom:
        raise ValidationError(
            "bottom-not-first",
            f"first elem {elems[0]!r} is not the bottom {basis.bottom!r}",
            witness=elems[0],
        )
    return basis


def format_basis(basis: FiniteBasis) -> str:
    order = [basis.bottom_index] + [i for i in range(len(basis)) if i != basis.bottom_index]
    lines = [f"basis {basis.name}"]
    lines += [f"elem {basis.labels[i]}" for i in order]
    pos = {i: k for k, i in enumerate(order)}
    edges = sorted(basis.covers(), key=lambda e: (pos[e[0]], pos[e[1]]))
    lines += [f"leq {basis.labels[i]} {basis.labels[j]}" for i, j in edges]
    return "\n".join(lines) + "\n"
