"""Least fixed points of approximable self-maps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from .basis import FiniteBasis, PresentedBasis
from .errors import BasisMismatch, DomainError, GuardExceeded
from .mappings import (
    ApproxMap,
    ComputableMap,
    Ideal,
    all_ideals,
    apply_map,
    as_computable,
    bottom_ideal,
    enumerate_graph,
    pair_map,
)

VERIFY_LIMIT = 4096


@dataclass(frozen=True)
class Fragment:
    """A finite set of tokens of a presented basis, given by enumeration index."""

    basis: PresentedBasis
    indices: frozenset[int]

    def labels(self) -> list[str]:
        return sorted({self.basis.enumerate(i) for i in self.indices})

    def __le__(self, other: "Fragment") -> bool:
        return self.indices <= other.indices


@dataclass(frozen=True)
class FixResult:
    value: Union[Ideal, Fragment]
    iterations: int
    converged: bool


def fix_ideal_fn(basis: FiniteBasis, fn: Callable[[Ideal], Ideal]) -> FixResult:
    """Kleene iteration of a monotone function on the ideals of a finite basis."""
    x = bottom_ideal(basis)
    n = 0
    while True:
        y = fn(x)
        n += 1
        if y == x:
            return FixResult(x, n, True)
        x = y


def fix_finite(f: ApproxMap) -> FixResult:
    if f.source != f.target:
        raise BasisMismatch("fixed points need a self-map")
    return fix_ideal_fn(f.source, lambda x: apply_map(f, x))


def fix_fuel(f: Union[ComputableMap, ApproxMap], fuel: int) -> FixResult:
    """Tokens reachable from the bottom by chains of at most ``fuel`` steps.

    When the map lists its images directly the chain follows them; otherwise
    it runs over the first ``fuel`` pairs of the dovetailed graph.
    """
    if isinstance(f, ApproxMap):
        f = as_computable(f)
    reached = {0}
    if f.image is not None:
        step = lambda xs: {j for i in xs for j in f.image(i)}
        complete = True
    else:
        graph = enumerate_graph(f, fuel)
        step = lambda xs: {j for i, j in graph if i in xs}
        ns, nt = f.source.size, f.target.size
        complete = len(graph) < fuel and ns is not None and nt is not None
    iterations = 0
    converged = False
    for _ in range(fuel):
        new = step(reached)
        iterations += 1
        if new <= reached:
            converged = complete
            break
        reached |= new
    return FixResult(Fragment(f.source, frozenset(reached)), iterations, converged)


def fragment_ideal(res: FixResult, basis: FiniteBasis) -> Ideal:
    """Read a fragment over a presented finite basis back as an ideal."""
    frag = res.value
    return Ideal(basis, basis.mask(frag.basis.enumerate(i) for i in frag.indices))


def verify_least(f: ApproxMap, x: Ideal, limit: int = VERIFY_LIMIT) -> bool:
    if len(f.source) > limit:
        raise GuardExceeded(f"least-ness check limited to {limit} tokens")
    if apply_map(f, x) != x:
        return False
    return all(x <= y for y in all_ideals(f.source) if apply_map(f, y) <= y)


def pair_ideal(p, x: Ideal, y: Ideal) -> Ideal:
    """The ideal of the product basis ``p`` whose components are x and y."""
    m = 0
    for k, (d, e) in enumerate(p.split):
        if x.mask >> d & 1 and y.mask >> e & 1:
            m |= 1 << k
    return Ideal(p, m)


def split_ideal(p, z: Ideal) -> tuple[Ideal, Ideal]:
    ml = mr = 0
    for k, (d, e) in enumerate(p.split):
        if z.mask >> k & 1:
            ml |= 1 << d
            mr |= 1 << e
    return Ideal(p.left, ml), Ideal(p.right, mr)


def fix_pair(tau: ApproxMap, sigma: ApproxMap) -> tuple[Ideal, Ideal]:
    """Simultaneous least fixed point of x = tau(x, y), y = sigma(x, y).

    Computed once by joint iteration on the product and once through the
    nested single-variable fixed points; the two must agree.
    """
    p = tau.source
    if sigma.source != p or tau.target != p.left or sigma.target != p.right:
        raise BasisMismatch("tau and sigma must map X x Y to X and to Y")
    joint = fix_finite(pair_map(tau, sigma, p)).value
    jx, jy = split_ideal(p, joint)

    def inner_y(x: Ideal) -> Ideal:
        return fix_ideal_fn(p.right, lambda y: apply_map(sigma, pair_ideal(p, x, y))).value

    def inner_x(y: Ideal) -> Ideal:
        return fix_ideal_fn(p.left, lambda x: apply_map(tau, pair_ideal(p, x, y))).value

    nx = fix_ideal_fn(p.left, lambda x: apply_map(tau, pair_ideal(p, x, inner_y(x)))).value
    ny = fix_ideal_fn(p.right, lambda y: apply_map(sigma, pair_ideal(p, inner_x(y), y))).value
    if (nx, ny) != (jx, jy):
        raise DomainError(f"joint and nested fixed points disagree: {jx}, {jy} vs {nx}, {ny}")
    return jx, jy


def fix_map(phi: Callable[[ApproxMap], ApproxMap], source: FiniteBasis, target: FiniteBasis) -> tuple[ApproxMap, int]:
    """Least fixed point of a monotone operator on the maps source -> target.

    Iterates from the everywhere-bottom map without building the function
    space basis.  Returns the map and the number of applications of phi.
    """
    f = ApproxMap(source, target, (1 << target.bottom_index,) * len(source))
    n = 0
    while True:
        g = phi(f)
        n += 1
        if g == f:
            return f, n
        f = g
