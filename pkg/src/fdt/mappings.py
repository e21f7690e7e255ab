"""Ideals and approximable mappings.

A finite approximable map F : A -> B is stored as one bitmask per source
token: ``rows[a]`` is the set {b | a F b}.  The four closure conditions say
exactly that every row is an ideal of B and that rows grow with a, which is
what :func:`validate_map` checks and what every constructor here preserves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .basis import FiniteBasis, PresentedBasis, bits, present
from .errors import BasisMismatch, DomainError, InconsistentError, ValidationError


@dataclass(frozen=True)
class Ideal:
    """A finite ideal: downward closed and closed under pairwise lubs."""

    basis: FiniteBasis
    mask: int

    @property
    def tokens(self) -> frozenset[str]:
        return self.basis.labels_of(self.mask)

    def sorted_labels(self) -> list[str]:
        return sorted(self.tokens)

    def __contains__(self, label: str) -> bool:
        return bool(self.mask >> self.basis.idx(label) & 1)

    def __le__(self, other: "Ideal") -> bool:
        return self.mask & ~other.mask == 0

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def top(self) -> str:
        """The generating token (finite ideals over a finite basis are principal)."""
        r = self.basis.lub_mask(self.mask)
        return self.basis.labels[r]

    def __str__(self) -> str:
        return "{" + ", ".join(self.sorted_labels()) + "}"


def ideal_of(basis: FiniteBasis, label: str) -> Ideal:
    return Ideal(basis, basis.down[basis.idx(label)])


def bottom_ideal(basis: FiniteBasis) -> Ideal:
    return Ideal(basis, 1 << basis.bottom_index)


def all_ideals(basis: FiniteBasis) -> list[Ideal]:
    # every ideal of a finite basis is principal
    return [Ideal(basis, basis.down[i]) for i in range(len(basis))]


@dataclass(frozen=True)
class LazyIdeal:
    """An ideal of a presented basis, known only through fuel-bounded approximations."""

    basis: PresentedBasis
    produce: Callable[[int], Iterable[int]]

    def at(self, fuel: int) -> frozenset[int]:
        return frozenset(self.produce(fuel))

    def labels_at(self, fuel: int) -> list[str]:
        return sorted({self.basis.enumerate(i) for i in self.at(fuel)})


def _pair_witness(basis: FiniteBasis, mask: int) -> tuple[int, int]:
    m = mask
    for i in bits(mask):
        m |= basis.down[i]
    while True:
        grown = m
        for i in bits(m):
            for j in bits(m >> (i + 1) << (i + 1)):
                r = basis.lub2(i, j)
                if r is None:
                    return i, j
                grown |= basis.down[r]
        if grown == m:
            raise AssertionError("consistent set reported as inconsistent")
        m = grown


def close_mask(basis: FiniteBasis, mask: int) -> int:
    r = basis.lub_mask(mask)
    if r is not None:
        return basis.down[r]
    i, j = _pair_witness(basis, mask)
    a, b = basis.labels[i], basis.labels[j]
    raise InconsistentError(f"{a} and {b} have no upper bound", witness=(a, b))


def close_ideal(basis: FiniteBasis, seed: Iterable[str]) -> Ideal:
    return Ideal(basis, close_mask(basis, basis.mask(seed)))


def _same_basis(xs: Sequence[Ideal]) -> FiniteBasis:
    if not xs:
        raise DomainError("need at least one ideal")
    basis = xs[0].basis
    if any(x.basis != basis for x in xs):
        raise BasisMismatch("ideals live in different bases")
    return basis


def ideal_lub(xs: Sequence[Ideal]) -> Ideal:
    basis = _same_basis(xs)
    m = 0
    for x in xs:
        m |= x.mask
    return Ideal(basis, close_mask(basis, m))


def ideal_meet(xs: Sequence[Ideal]) -> Ideal:
    basis = _same_basis(xs)
    m = basis.full
    for x in xs:
        m &= x.mask
    return Ideal(basis, m)


@dataclass(frozen=True)
class ApproxMap:
    source: FiniteBasis
    target: FiniteBasis
    rows: tuple[int, ...]

    @property
    def pairs(self) -> frozenset[tuple[str, str]]:
        s, t = self.source.labels, self.target.labels
        return frozenset((s[a], t[b]) for a, row in enumerate(self.rows) for b in bits(row))

    def relates(self, a: str, b: str) -> bool:
        return bool(self.rows[self.source.idx(a)] >> self.target.idx(b) & 1)

    def image(self, a: str) -> Ideal:
        return Ideal(self.target, self.rows[self.source.idx(a)])

    def __call__(self, x: Ideal) -> Ideal:
        return apply_map(self, x)

    def __le__(self, other: "ApproxMap") -> bool:
        return all(r & ~s == 0 for r, s in zip(self.rows, other.rows))


@dataclass(frozen=True)
class Violation:
    condition: int
    witness: tuple
    message: str


def _violations(source: FiniteBasis, target: FiniteBasis, rows: Sequence[int]) -> list[Violation]:
    s, t = source.labels, target.labels
    out: list[Violation] = []
    sb, tb = source.bottom_index, target.bottom_index
    if not rows[sb] >> tb & 1:
        out.append(Violation(1, (s[sb], t[tb]), f"missing bottom pair ({s[sb]}, {t[tb]})"))

    def first(check) -> Optional[Violation]:
        for a in range(len(source)):
            v = check(a)
            if v:
                return v
        return None

    def cond2(a: int) -> Optional[Violation]:
        row = rows[a]
        for b in bits(row):
            for b2 in bits(row >> (b + 1) << (b + 1)):
                r = target.lub2(b, b2)
                if r is None or not row >> r & 1:
                    what = "no lub exists" if r is None else f"missing ({s[a]}, {t[r]})"
                    return Violation(2, (s[a], t[b], t[b2]), f"{s[a]} relates to {t[b]} and {t[b2]} but {what}")
        return None

    def cond3(a: int) -> Optional[Violation]:
        row = rows[a]
        for b in bits(row):
            missing = target.down[b] & ~row
            if missing:
                b2 = next(bits(missing))
                return Violation(3, (s[a], t[b], t[b2]), f"{s[a]} relates to {t[b]} but not to {t[b2]} below it")
        return None

    def cond4(a: int) -> Optional[Violation]:
        for a2 in bits(source.up[a]):
            missing = rows[a] & ~rows[a2]
            if missing:
                b = next(bits(missing))
                return Violation(4, (s[a2], t[b]), f"missing ({s[a2]}, {t[b]}) although {s[a]} <= {s[a2]} relates to it")
        return None

    for check in (cond2, cond3, cond4):
        v = first(check)
        if v:
            out.append(v)
    return out


def validate_map(source: FiniteBasis, target: FiniteBasis, pairs: Iterable[tuple[str, str]]) -> ApproxMap:
    rows = [0] * len(source)
    for a, b in pairs:
        rows[source.idx(a)] |= 1 << target.idx(b)
    vs = _violations(source, target, rows)
    if vs:
        raise ValidationError(
            "not-approximable", "; ".join(f"condition {v.condition}: {v.message}" for v in vs), witness=vs
        )
    return ApproxMap(source, target, tuple(rows))


def is_approximable(source: FiniteBasis, target: FiniteBasis, rows: Sequence[int]) -> bool:
    return not _violations(source, target, rows)


def _saturate(source: FiniteBasis, target: FiniteBasis, rows: list[int]) -> tuple[int, ...]:
    order = sorted(range(len(source)), key=lambda a: bin(source.down[a]).count("1"))
    while True:
        changed = False
        for a in order:
            row = rows[a]
            for a0 in bits(source.down[a]):
                row |= rows[a0]
            r = target.lub_mask(row)
            if r is None:
                i, j = _pair_witness(target, row)
                w = (source.labels[a], target.labels[i], target.labels[j])
                raise InconsistentError(
                    f"{w[0]} would have to relate to the lub of {w[1]} and {w[2]}, which does not exist",
                    witness=w,
                )
            row = target.down[r]
            if row != rows[a]:
                rows[a] = row
                changed = True
        if not changed:
            return tuple(rows)


def finite_step_closure(
    source: FiniteBasis, target: FiniteBasis, seed: Iterable[tuple[str, str]]
) -> ApproxMap:
    """The least approximable mapping containing ``seed``."""
    rows = [1 << target.bottom_index] * len(source)
    for a, b in seed:
        rows[source.idx(a)] |= 1 << target.idx(b)
    return ApproxMap(source, target, _saturate(source, target, rows))


def identity_map(basis: FiniteBasis) -> ApproxMap:
    return ApproxMap(basis, basis, basis.down)


def apply_map(f: ApproxMap, x: Ideal) -> Ideal:
    if x.basis != f.source:
        raise BasisMismatch("ideal does not live in the map's source basis")
    out = 0
    for a in bits(x.mask):
        out |= f.rows[a]
    return Ideal(f.target, out)


def compose(g: ApproxMap, f: ApproxMap) -> ApproxMap:
    """g after f."""
    if f.target != g.source:
        raise BasisMismatch(f"cannot compose: {f.target.name} is not {g.source.name}")
    rows = []
    for row in f.rows:
        out = 0
        for b in bits(row):
            out |= g.rows[b]
        rows.append(out)
    return ApproxMap(f.source, g.target, tuple(rows))


def const_map(source: FiniteBasis, target: FiniteBasis, e: str) -> ApproxMap:
    return ApproxMap(source, target, (target.down[target.idx(e)],) * len(source))


def map_from_function(source: FiniteBasis, target: FiniteBasis, fn: Callable[[Ideal], Ideal]) -> ApproxMap:
    """The relation a F b iff b is in fn(principal ideal of a)."""
    return ApproxMap(source, target, tuple(fn(Ideal(source, source.down[a])).mask for a in range(len(source))))


def as_function(f: ApproxMap) -> Callable[[Ideal], Ideal]:
    return lambda x: apply_map(f, x)


def _product(a: FiniteBasis, b: FiniteBasis):
    from .constructors import product_basis

    return product_basis(a, b)


def pair_map(f: ApproxMap, g: ApproxMap, product=None) -> ApproxMap:
    if f.source != g.source:
        raise BasisMismatch("paired maps must share a source")
    p = product if product is not None else _product(f.target, g.target)
    if p.left != f.target or p.right != g.target:
        raise BasisMismatch("product basis does not match the paired targets")
    rows = []
    for a in range(len(f.source)):
        rf, rg = f.rows[a], g.rows[a]
        out = 0
        for d in bits(rf):
            out |= rg << (d * p.right_size)
        rows.append(out)
    return ApproxMap(f.source, p, tuple(rows))


def proj0(p) -> ApproxMap:
    return ApproxMap(p, p.left, tuple(p.left.down[d] for d, _ in p.split))


def proj1(p) -> ApproxMap:
    return ApproxMap(p, p.right, tuple(p.right.down[e] for _, e in p.split))


def section_maps(f, left: Optional[str] = None, right: Optional[str] = None) -> ApproxMap:
    """Fix one argument of a map out of a product.

    ``f`` may also be a raw ``(source, target, pairs)`` triple, which is
    validated first.
    """
    if not isinstance(f, ApproxMap):
        f = validate_map(*f)
    p = f.source
    if not hasattr(p, "split"):
        raise BasisMismatch("section maps need a map out of a product basis")
    if (left is None) == (right is None):
        raise DomainError("fix exactly one side")
    if left is not None:
        k = const_map(p.right, p.left, left)
        return compose(f, pair_map(k, identity_map(p.right), p))
    k = const_map(p.left, p.right, right)
    return compose(f, pair_map(identity_map(p.left), k, p))


def curry_map(g: ApproxMap, fs=None) -> ApproxMap:
    """Curry a map (A x B) -> C into A -> (B => C)."""
    p = g.source
    if fs is None:
        from .constructors import funspace_basis

        fs = funspace_basis(p.right, g.target)
    if fs.source != p.right or fs.target != g.target:
        raise BasisMismatch("function space does not match the curried map")
    rows = []
    for a in range(len(p.left)):
        gr = [g.rows[p.join[a, b]] for b in range(len(p.right))]
        out = 0
        for k, frows in enumerate(fs.maps):
            if all(fr & ~r == 0 for fr, r in zip(frows, gr)):
                out |= 1 << k
        rows.append(out)
    return ApproxMap(p.left, fs, tuple(rows))


def apply_combinator(fs, product=None) -> ApproxMap:
    """Apply : (A => B) x A -> B with [F, a] Apply b iff a F b."""
    p = product if product is not None else _product(fs, fs.source)
    return ApproxMap(p, fs.target, tuple(fs.maps[k][a] for k, a in p.split))


@dataclass(frozen=True)
class ComputableMap:
    """An approximable map between presented bases, given by a relation decider.

    ``image`` optionally lists the finite set {j | i F j} directly; when
    present it lets fixed-point iteration follow chains without searching
    the whole graph.
    """

    source: PresentedBasis
    target: PresentedBasis
    relates: Callable[[int, int], bool]
    image: Optional[Callable[[int], Iterable[int]]] = None


def as_computable(f: ApproxMap, source_order: Optional[Sequence[str]] = None,
                  target_order: Optional[Sequence[str]] = None) -> ComputableMap:
    def default(b: FiniteBasis) -> list[str]:
        return [b.bottom] + [t for t in b.labels if t != b.bottom]

    so = list(source_order or default(f.source))
    to = list(target_order or default(f.target))
    ps, pt = present(f.source, so), present(f.target, to)
    si = [f.source.idx(t) for t in so]
    ti = [f.target.idx(t) for t in to]
    tpos = {j: k for k, j in enumerate(ti)}

    def relates(i: int, j: int) -> bool:
        return bool(f.rows[si[i]] >> ti[j] & 1)

    def image(i: int) -> list[int]:
        return sorted(tpos[j] for j in bits(f.rows[si[i]]))

    return ComputableMap(ps, pt, relates, image)


def dovetail() -> Iterator[tuple[int, int]]:
    """All pairs (i, j) ordered by max(i, j), then i, then j."""
    n = 0
    while True:
        for i in range(n + 1):
            if i < n:
                yield i, n
            else:
                for j in range(n + 1):
                    yield n, j
        n += 1


def enumerate_graph(f, fuel: int) -> list[tuple[int, int]]:
    """The first ``fuel`` related index pairs in dovetail order."""
    if isinstance(f, ApproxMap):
        f = as_computable(f)
    out: list[tuple[int, int]] = []
    if fuel <= 0:
        return out
    ns, nt = f.source.size, f.target.size
    limit = None if ns is None or nt is None else max(ns, nt)
    for i, j in dovetail():
        if limit is not None and max(i, j) >= limit:
            break
        if (ns is not None and i >= ns) or (nt is not None and j >= nt):
            continue
        if f.relates(i, j):
            out.append((i, j))
            if len(out) == fuel:
                break
    return out
