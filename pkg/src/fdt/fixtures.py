"""Small named bases used by the tests, the CLI fixture files and the README."""

from __future__ import annotations

from .basis import FiniteBasis, validate_basis

INF = "∞"


def interval_basis(hi: int = 12) -> FiniteBasis:
    """Propositions (n, m) meaning n <= x <= m, for n <= hi and m <= hi or m = ∞.

    Narrower intervals carry more information; the bottom is (0,∞).
    """
    ends = list(range(hi + 1)) + [INF]

    def le(a, b) -> bool:
        return b == INF or (a != INF and a <= b)

    toks = [(n, m) for n in range(hi + 1) for m in ends if le(n, m)]
    toks.sort(key=lambda t: (t[0], t[1] != INF, -(t[1] if t[1] != INF else 0)))
    labels = [f"({n},{m})" for n, m in toks]
    pairs = []
    for n, m in toks:
        if n < hi and le(n + 1, m):
            pairs.append((f"({n},{m})", f"({n + 1},{m})"))
        if m == INF:
            pairs.append((f"({n},{m})", f"({n},{hi})"))
        elif m > n:
            pairs.append((f"({n},{m})", f"({n},{m - 1})"))
    return validate_basis(labels, pairs, "Intervals")


def strings_basis() -> FiniteBasis:
    """Binary strings of length up to 2, with partial strings ⊥, 0⊥, 1⊥ below totals."""
    labels = ["⊥", "0⊥", "1⊥", "00", "01", "10", "11"]
    pairs = [("⊥", "0⊥"), ("⊥", "1⊥"), ("0⊥", "00"), ("0⊥", "01"), ("1⊥", "10"), ("1⊥", "11")]
    return validate_basis(labels, pairs, "Strings2")


def figure_basis(bottom: str = "⊥") -> FiniteBasis:
    """⊥ < b < a and ⊥ < c."""
    return validate_basis([bottom, "b", "c", "a"], [(bottom, "b"), ("b", "a"), (bottom, "c")], "Fig")


def chain(n: int, name: str = "Chain") -> FiniteBasis:
    labels = ["⊥"] + [f"c{k}" for k in range(1, n)]
    return validate_basis(labels, list(zip(labels, labels[1:])), name)
