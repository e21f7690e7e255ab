"""Generators and brute-force oracles shared by the test modules."""

from __future__ import annotations

import itertools
import random
from functools import lru_cache

from hypothesis import strategies as st

from fdt.basis import FiniteBasis, validate_basis
from fdt.errors import DomainError
from fdt.mappings import ApproxMap, all_ideals, finite_step_closure


def set_system_basis(rng: random.Random, max_tokens: int, atoms: int = 4, name: str = "R") -> FiniteBasis:
    """A random finitary basis: a family of atom sets closed under bounded unions.

    The union of two sets that share an upper bound is again bounded, so closing
    under bounded unions never runs away and every consistent pair gets its union
    as least upper bound.
    """
    while True:
        gens = {frozenset()}
        for _ in range(rng.randint(0, max_tokens)):
            gens.add(frozenset(a for a in range(atoms) if rng.random() < 0.4))
        family = set(gens)
        changed = True
        while changed:
            changed = False
            for s, t in itertools.combinations(list(family), 2):
                u = s | t
                if u not in family and any(u <= m for m in family):
                    family.add(u)
                    changed = True
        if len(family) <= max_tokens:
            break
    toks = sorted(family, key=lambda s: (len(s), sorted(s)))
    labels = ["".join(map(str, sorted(s))) or "⊥" for s in toks]
    labels = [lab if lab == "⊥" else "a" + lab for lab in labels]
    pairs = [(labels[i], labels[j]) for i, s in enumerate(toks) for j, t in enumerate(toks) if s < t]
    return validate_basis(labels, pairs, name)


def random_map(rng: random.Random, a: FiniteBasis, b: FiniteBasis, seeds: int = 3) -> ApproxMap:
    """Step closure of a few random pairs; retries until the seed is consistent."""
    while True:
        pairs = [(rng.choice(a.labels), rng.choice(b.labels)) for _ in range(rng.randint(0, seeds))]
        try:
            return finite_step_closure(a, b, pairs)
        except DomainError:
            continue


def all_maps(a: FiniteBasis, b: FiniteBasis) -> list[ApproxMap]:
    """Every approximable map a -> b: ideal-valued monotone row assignments."""
    ideals = [x.mask for x in all_ideals(b)]
    n = len(a)
    out = []

    def go(i: int, rows: list[int]) -> None:
        if i == n:
            out.append(ApproxMap(a, b, tuple(rows)))
            return
        for m in ideals:
            # rows must grow along the order
            if all(m & rows[j] == rows[j] for j in range(i) if a.leq_i(j, i)) and all(
                m & rows[j] == m for j in range(i) if a.leq_i(i, j)
            ):
                rows.append(m)
                go(i + 1, rows)
                rows.pop()

    go(0, [])
    return out


@lru_cache(maxsize=None)
def small_bases(max_tokens: int = 3) -> tuple[FiniteBasis, ...]:
    """Every finitary basis with at most ``max_tokens`` tokens, up to isomorphism."""
    out = [validate_basis(["⊥"], [], "P1")]
    if max_tokens >= 2:
        out.append(validate_basis(["⊥", "t"], [("⊥", "t")], "P2"))
    if max_tokens >= 3:
        out.append(validate_basis(["⊥", "u", "v"], [("⊥", "u"), ("u", "v")], "C3"))
        out.append(validate_basis(["⊥", "l", "r"], [("⊥", "l"), ("⊥", "r")], "V3"))
    return tuple(out)


def brute_upper_bounds(basis: FiniteBasis, subset) -> list[str]:
    return [u for u in basis.labels if all(basis.leq(s, u) for s in subset)]


def brute_relation(f: ApproxMap) -> set[tuple[str, str]]:
    """The relation read straight off the rows."""
    return {(f.source.labels[i], f.target.labels[j]) for i, r in enumerate(f.rows) for j in range(len(f.target)) if r >> j & 1}


def brute_compose(g: ApproxMap, f: ApproxMap) -> set[tuple[str, str]]:
    rf, rg = brute_relation(f), brute_relation(g)
    return {(x, z) for x, y in rf for y2, z in rg if y == y2}


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@lru_cache(maxsize=None)
def all_bases(n: int) -> tuple[FiniteBasis, ...]:
    """Every finitary basis with exactly n tokens, one per isomorphism class."""
    from fdt.basis import find_isomorphism

    others = [f"e{k}" for k in range(1, n)]
    cand = [(a, b) for a in others for b in others if a != b]
    seen_orders = set()
    out: list[FiniteBasis] = []
    for bits_ in range(1 << len(cand)):
        pairs = [cand[k] for k in range(len(cand)) if bits_ >> k & 1]
        # transitive closure over the non-bottom elements
        rel = set(pairs)
        changed = True
        while changed:
            changed = False
            for a, b in list(rel):
                for c, d in list(rel):
                    if b == c and (a, d) not in rel:
                        rel.add((a, d))
                        changed = True
        if any((b, a) in rel for a, b in rel) or any(a == b for a, b in rel):
            continue
        key = frozenset(rel)
        if key in seen_orders:
            continue
        seen_orders.add(key)
        try:
            b = validate_basis(["⊥"] + others, [("⊥", x) for x in others] + sorted(rel), f"B{n}")
        except DomainError:
            continue
        if not any(find_isomorphism(b, c) is not None for c in out):
            out.append(b)
    return tuple(out)


def enumerations(basis: FiniteBasis):
    """Every enumeration that starts at the bottom."""
    rest = [t for t in basis.labels if t != basis.bottom]
    for perm in itertools.permutations(rest):
        yield [basis.bottom, *perm]


# criterion number -> (title, passed); filled by test_acceptance, printed by conftest
ACCEPTANCE: dict[int, tuple[str, bool]] = {}
