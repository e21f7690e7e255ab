"""Binary strings and streams: prefix bases and the stream domain C.

``prefix_basis(L)`` holds the finite strings of length at most L ordered by
prefix, approximating infinite bit strings.  ``stream_basis(L)`` is the
truncation of C, whose tokens are total strings ``σ`` and partial strings
``σ⊥``.  Maps that would produce a string longer than L produce its
length-L partial prefix instead, which is a sound approximation.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Optional

from .basis import FiniteBasis, PresentedBasis
from .fixpoint import FixResult, fix_fuel
from .flat import truth_basis
from .lam import Arrow, Base, Constant, Signature, TRUTH, prod_of
from .mappings import ApproxMap, ComputableMap

EPS = "ε"
BOT = "⊥"
C = Base("C")


def _strings(length: int) -> list[str]:
    out = [""]
    frontier = [""]
    for _ in range(length):
        frontier = [s + b for s in frontier for b in "01"]
        out += frontier
    return out


def _label(s: str) -> str:
    return s if s else EPS


@lru_cache(maxsize=None)
def prefix_basis(length: int) -> FiniteBasis:
    strs = _strings(length)
    up = [sum(1 << k for k, t in enumerate(strs) if t.startswith(s)) for s in strs]
    return FiniteBasis(f"B{length}", [_label(s) for s in strs], up)


def _raw(label: str) -> str:
    return "" if label == EPS else label


def _rows(src: FiniteBasis, tgt: FiniteBasis, fn: Callable[[str], str]) -> ApproxMap:
    return ApproxMap(src, tgt, tuple(tgt.down[tgt.idx(fn(lbl))] for lbl in src.labels))


def parity_map(length: int) -> ApproxMap:
    """true when an even number of 0s precedes the first 1, false when odd, ⊥ before any 1."""
    def fn(label: str) -> str:
        s = _raw(label)
        n = s.find("1")
        if n < 0:
            return BOT
        return "true" if n % 2 == 0 else "false"

    return _rows(prefix_basis(length), truth_basis(), fn)


def strip_ones_map(length: int) -> ApproxMap:
    """0^n 1^k 0 y goes to 0^(n+1) y when k > 0; anything else gives the empty prefix."""
    def fn(label: str) -> str:
        s = _raw(label)
        n = len(s) - len(s.lstrip("0"))
        rest = s[n:]
        k = len(rest) - len(rest.lstrip("1"))
        if k == 0 or len(rest) == k:
            return EPS
        return _label("0" * (n + 1) + rest[k + 1:])

    b = prefix_basis(length)
    return _rows(b, b, fn)


# ---------------------------------------------------------------------------
# the stream domain C


def partial(s: str) -> str:
    return s + BOT


def _split(label: str) -> tuple[str, bool]:
    """(string, total?)"""
    if label.endswith(BOT):
        return label[:-1], False
    return _raw(label), True


def _c_label(s: str, total: bool) -> str:
    return _label(s) if total else partial(s)


def _c_leq(a: tuple[str, bool], b: tuple[str, bool]) -> bool:
    (s, st), (t, tt) = a, b
    if st:
        return tt and s == t
    return t.startswith(s)


@lru_cache(maxsize=None)
def stream_basis(length: int) -> FiniteBasis:
    toks = [(s, False) for s in _strings(length)] + [(s, True) for s in _strings(length)]
    up = [sum(1 << k for k, b in enumerate(toks) if _c_leq(a, b)) for a in toks]
    return FiniteBasis(f"C{length}", [_c_label(*t) for t in toks], up)


def _fit(s: str, total: bool, length: int) -> str:
    if len(s) > length:
        return partial(s[:length])
    return _c_label(s, total)


def _stream_map(length: int, fn: Callable[[str, bool], str], target: Optional[FiniteBasis] = None) -> ApproxMap:
    b = stream_basis(length)
    return _rows(b, target or b, lambda lbl: fn(*_split(lbl)))


def cons_map(bit: str, length: int) -> ApproxMap:
    """x ↦ bit·x."""
    return _stream_map(length, lambda s, total: _fit(bit + s, total, length))


def tail_map(length: int) -> ApproxMap:
    def fn(s: str, total: bool) -> str:
        if not s:
            return BOT
        return _c_label(s[1:], total)

    return _stream_map(length, fn)


def _test_map(length: int, on_empty: Optional[str], on0: str, on1: str) -> ApproxMap:
    def fn(s: str, total: bool) -> str:
        if not s:
            return on_empty if total else BOT
        return on0 if s[0] == "0" else on1

    return _stream_map(length, fn, truth_basis())


def empty_map(length: int) -> ApproxMap:
    return _test_map(length, "true", "false", "false")


def head_zero_map(length: int) -> ApproxMap:
    return _test_map(length, "false", "true", "false")


def head_one_map(length: int) -> ApproxMap:
    return _test_map(length, "false", "false", "true")


def stream_signature(length: int = 8) -> Signature:
    """C with ε, succ0, succ1, tail, empty, zero, one and cond."""
    b = stream_basis(length)
    ct = Arrow(C, C)
    consts = {
        "eps": Constant(C, "token", _principal(b, EPS)),
        "succ0": Constant(ct, "map", cons_map("0", length)),
        "succ1": Constant(ct, "map", cons_map("1", length)),
        "tail": Constant(ct, "map", tail_map(length)),
        "empty": Constant(Arrow(C, TRUTH), "map", empty_map(length)),
        "zero": Constant(Arrow(C, TRUTH), "map", head_zero_map(length)),
        "one": Constant(Arrow(C, TRUTH), "map", head_one_map(length)),
        "cond": Constant(Arrow(prod_of([TRUTH, C, C]), C), "cond", None),
    }
    return Signature({"C": b, "T": truth_basis()}, consts)


def _principal(b: FiniteBasis, label: str):
    from .mappings import Ideal

    return Ideal(b, b.down[b.idx(label)])


DOUBLE_TERM = (
    r"fix \d:C->C. \x:C. (cond <(empty x), eps, "
    r"(cond <(zero x), (succ0 (succ0 (d (tail x)))), (succ1 (succ1 (d (tail x))))>)>)"
)
ALTERNATING_TERM = r"fix \a:C. (succ0 (succ1 a))"


# ---------------------------------------------------------------------------
# the untruncated stream domain, presented by an enumeration


def _c_index(s: str, total: bool) -> int:
    k = len(s)
    base = (1 << (k + 1)) - 2
    j = int(s, 2) if s else 0
    return base + (1 << k) * total + j


def _c_token(i: int) -> tuple[str, bool]:
    k = 0
    while (1 << (k + 2)) - 2 <= i:
        k += 1
    j = i - ((1 << (k + 1)) - 2)
    total = j >= (1 << k)
    j -= (1 << k) * total
    return (format(j, f"0{k}b") if k else ""), total


def stream_presentation() -> PresentedBasis:
    """All of C: strings of length k occupy indices 2^(k+1)-2 onward, partial ones first."""
    def lub_index(i: int, j: int) -> Optional[int]:
        a, b = _c_token(i), _c_token(j)
        if _c_leq(a, b):
            return j
        if _c_leq(b, a):
            return i
        return None

    return PresentedBasis(
        name="C",
        enumerate=lambda i: _c_label(*_c_token(i)),
        cons=lambda i, j: lub_index(i, j) is not None,
        lub_index=lub_index,
        leq_decider=lambda i, j: _c_leq(_c_token(i), _c_token(j)),
    )


def prefix_map(word: str) -> ComputableMap:
    """x ↦ word·x on the whole of C, with its finite images listed directly."""
    pc = stream_presentation()

    def image(i: int) -> list[int]:
        s, total = _c_token(i)
        out = word + s
        below = [_c_index(out[:n], False) for n in range(len(out) + 1)]
        return below + ([_c_index(out, True)] if total else [])

    return ComputableMap(pc, pc, lambda i, j: j in image(i), image)


def alternating(fuel: int) -> FixResult:
    """Least solution of a = 01a, unrolled ``fuel`` times."""
    return fix_fuel(prefix_map("01"), fuel)
