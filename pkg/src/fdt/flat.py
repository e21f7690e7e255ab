"""Flat bases: truncated naturals, truth values, and their standard maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .basis import FiniteBasis
from .constructors import ProductBasis, product_basis
from .mappings import ApproxMap, Ideal, compose, pair_map

DEFAULT_N = 64
BOT = "⊥"


def flat_basis(name: str, values: list[str]) -> FiniteBasis:
    """⊥ below an antichain of values."""
    n = len(values) + 1
    up = [(1 << n) - 1] + [1 << k for k in range(1, n)]
    return FiniteBasis(name, [BOT] + list(values), up)


@lru_cache(maxsize=None)
def truth_basis() -> FiniteBasis:
    return flat_basis("T", ["true", "false"])


@dataclass(frozen=True)
class FlatNat:
    """The flat naturals {⊥, 0..N}; succ(N) is ⊥ at the truncation edge."""

    n: int = DEFAULT_N

    @property
    def basis(self) -> FiniteBasis:
        return _nat_basis(self.n)

    def nat(self, k: Optional[int]) -> Ideal:
        b = self.basis
        if k is None or not 0 <= k <= self.n:
            return Ideal(b, 1 << b.bottom_index)
        return Ideal(b, b.down[k + 1])

    def value(self, x: Ideal) -> Optional[int]:
        top = x.top()
        return None if top == BOT else int(top)

    def _unary(self, fn) -> ApproxMap:
        b = self.basis
        rows = [b.down[0]]
        for k in range(self.n + 1):
            v = fn(k)
            rows.append(b.down[0] if v is None or not 0 <= v <= self.n else b.down[v + 1])
        return ApproxMap(b, b, tuple(rows))

    def succ(self) -> ApproxMap:
        return self._unary(lambda k: k + 1)

    def pred(self) -> ApproxMap:
        return self._unary(lambda k: k - 1 if k > 0 else None)

    def zero(self) -> ApproxMap:
        t = truth_basis()
        rows = [t.down[0]] + [t.down[t.idx("true" if k == 0 else "false")] for k in range(self.n + 1)]
        return ApproxMap(self.basis, t, tuple(rows))


@lru_cache(maxsize=None)
def _nat_basis(n: int) -> FiniteBasis:
    return flat_basis(f"N{n}", [str(k) for k in range(n + 1)])


def truth(x: Ideal) -> Optional[bool]:
    top = x.top()
    return None if top == BOT else top == "true"


def truth_ideal(v: Optional[bool]) -> Ideal:
    t = truth_basis()
    if v is None:
        return Ideal(t, t.down[0])
    return Ideal(t, t.down[t.idx("true" if v else "false")])


def cond_map(e: FiniteBasis) -> ApproxMap:
    """cond : T x (E x E) -> E, strict in the test and lazy in the branches."""
    t = truth_basis()
    inner = product_basis(e, e)
    p: ProductBasis = product_basis(t, inner)
    rows = []
    for c, k in p.split:
        a, b = inner.split[k]
        label = t.labels[c]
        if label == "true":
            rows.append(e.down[a])
        elif label == "false":
            rows.append(e.down[b])
        else:
            rows.append(e.down[e.bottom_index])
    return ApproxMap(p, e, tuple(rows))


@lru_cache(maxsize=None)
def two_point() -> FiniteBasis:
    """The basis O = {⊥, Δ} used to test definedness."""
    return FiniteBasis("O", [BOT, "Δ"], [0b11, 0b10])


def check_map(d: FiniteBasis) -> ApproxMap:
    """check(x) is ⊥ exactly when x is ⊥."""
    o = two_point()
    rows = tuple(o.down[0] if i == d.bottom_index else o.down[1] for i in range(len(d)))
    return ApproxMap(d, o, rows)


def fade_map(d: FiniteBasis, product: Optional[ProductBasis] = None) -> ApproxMap:
    """fade(t, x) is ⊥ when t is ⊥ and x otherwise."""
    o = two_point()
    p = product if product is not None else product_basis(o, d)
    rows = tuple(d.down[x] if t == 1 else d.down[d.bottom_index] for t, x in p.split)
    return ApproxMap(p, d, rows)


def strictify(f: ApproxMap) -> ApproxMap:
    """λx. fade(check(x), f(x)) as a relation."""
    p = product_basis(two_point(), f.target)
    return compose(fade_map(f.target, p), pair_map(check_map(f.source), f, p))
