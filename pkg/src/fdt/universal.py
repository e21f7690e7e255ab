"""The universal domain of reduced Δ/⊤ trees and the embedding of finite bases into it.

Trees are ``"D"`` (Δ), ``"T"`` (⊤) or a pair ``(left, right)``.  A reduced
tree never contains ``("D", "D")`` or ``("T", "T")``.  Reading a tree as a
Δ/⊤ labelling of the infinite binary paths, the order is pointwise with
Δ below ⊤, the lub is the pointwise join, and two trees are inconsistent
exactly when their join is ⊤ everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product as cartesian
from typing import Iterable, Optional, Sequence, Union

from .basis import FiniteBasis, PresentedBasis, bits, present
from .errors import DomainError, TruncationError, ValidationError
from .mappings import ApproxMap, compose, identity_map

Tree = Union[str, tuple]
D, T = "D", "T"


class _Inconsistent:
    """Returned by :func:`u_lub` when the two trees have no upper bound in U."""

    def __repr__(self) -> str:
        return "INCONSISTENT"

    def __bool__(self) -> bool:
        return False


INCONSISTENT = _Inconsistent()


def node(left: Tree, right: Tree) -> Tree:
    """Build a node, applying the two rewrite rules at the root."""
    if left == right and left in (D, T):
        return left
    return (left, right)


def reduce(t: Tree) -> Tree:
    if isinstance(t, tuple):
        return node(reduce(t[0]), reduce(t[1]))
    return t


def _children(t: Tree) -> tuple[Tree, Tree]:
    return t if isinstance(t, tuple) else (t, t)


def u_leq(s: Tree, t: Tree) -> bool:
    if s == D or t == T:
        return True
    if s == T or t == D:
        return False
    return u_leq(s[0], t[0]) and u_leq(s[1], t[1])


def join(s: Tree, t: Tree) -> Tree:
    """Pointwise join; the result is ⊤ when s and t are inconsistent."""
    if s == T or t == T:
        return T
    if s == D:
        return t
    if t == D:
        return s
    return node(join(s[0], t[0]), join(s[1], t[1]))


def meet(s: Tree, t: Tree) -> Tree:
    if s == D or t == D:
        return D
    if s == T:
        return t
    if t == T:
        return s
    return node(meet(s[0], t[0]), meet(s[1], t[1]))


def u_lub(s: Tree, t: Tree):
    r = join(s, t)
    return INCONSISTENT if r == T else r


def serialize(t: Tree) -> str:
    if isinstance(t, tuple):
        return f"({serialize(t[0])},{serialize(t[1])})"
    return t


def parse_tree(text: str) -> Tree:
    pos = 0

    def go() -> Tree:
        nonlocal pos
        if pos >= len(text):
            raise ValidationError("tree-syntax", f"unexpected end of tree {text!r}")
        c = text[pos]
        if c in "DT":
            pos += 1
            return c
        if c != "(":
            raise ValidationError("tree-syntax", f"unexpected {c!r} in tree {text!r}")
        pos += 1
        left = go()
        if text[pos:pos + 1] != ",":
            raise ValidationError("tree-syntax", f"expected ',' in tree {text!r}")
        pos += 1
        right = go()
        if text[pos:pos + 1] != ")":
            raise ValidationError("tree-syntax", f"expected ')' in tree {text!r}")
        pos += 1
        return (left, right)

    t = go()
    if pos != len(text):
        raise ValidationError("tree-syntax", f"trailing input in tree {text!r}")
    return t


def depth(t: Tree) -> int:
    if isinstance(t, tuple):
        return 1 + max(depth(t[0]), depth(t[1]))
    return 0


def canonical_key(t: Tree) -> tuple[int, str]:
    """Breadth-first by depth, then serialization order."""
    return depth(t), serialize(t)


@lru_cache(maxsize=None)
def _trees(d: int) -> tuple:
    if d == 0:
        return (D, T)
    prev = _trees(d - 1)
    return (D, T) + tuple(node(a, b) for a in prev for b in prev if not (a == b and a in (D, T)))


def u_tokens(d: int) -> list[Tree]:
    """Reduced trees of depth at most d, without ⊤, in canonical order."""
    return sorted((t for t in _trees(d) if t != T), key=canonical_key)


@lru_cache(maxsize=None)
def u_basis(d: int) -> FiniteBasis:
    """The depth-d truncation U_d as a finite basis labelled by serialization."""
    toks = u_tokens(d)
    up = []
    for s in toks:
        m = 0
        for k, t in enumerate(toks):
            if u_leq(s, t):
                m |= 1 << k
        up.append(m)
    return FiniteBasis(f"U{d}", [serialize(t) for t in toks], up)


# ---------------------------------------------------------------------------
# embedding a finite basis


def _order_of(pb) -> tuple[FiniteBasis, list[str]]:
    if isinstance(pb, PresentedBasis):
        if pb.finite is None or pb.size is None:
            raise DomainError("embedding needs a presentation of a finite basis")
        return pb.finite, [pb.enumerate(i) for i in range(pb.size)]
    basis, order = pb
    present(basis, order)
    return basis, list(order)


def regions(pb, k: int) -> dict[str, frozenset[str]]:
    """D_R for every sign string R of length k, in +-before-- order."""
    basis, order = _order_of(pb)
    if k > len(order) - 1:
        raise DomainError(f"only {len(order) - 1} non-bottom elements are enumerated, asked for {k}")
    plus = [basis.up[basis.idx(t)] for t in order]
    out = {}
    for signs in cartesian("+-", repeat=k):
        m = basis.full
        for i, s in enumerate(signs, 1):
            m &= plus[i] if s == "+" else ~plus[i]
        out["".join(signs)] = basis.labels_of(m & basis.full)
    return out


def _region_mask(basis: FiniteBasis, plus: Sequence[int], r: str) -> int:
    m = basis.full
    for i, s in enumerate(r, 1):
        m &= plus[i] if s == "+" else ~plus[i]
    return m & basis.full


def loc(pb, r: str) -> str:
    basis, order = _order_of(pb)
    plus = [basis.up[basis.idx(t)] for t in order]
    path = ""
    for n in range(len(r)):
        prefix = r[:n]
        both = _region_mask(basis, plus, prefix + "+") and _region_mask(basis, plus, prefix + "-")
        if both:
            path += "l" if r[n] == "+" else "r"
    return path


def tree_from_leaves(labels: dict[str, Tree]) -> Tree:
    """Assemble a tree from a complete prefix-free map path -> leaf."""
    def build(prefix: str) -> Tree:
        if prefix in labels:
            return labels[prefix]
        if len(prefix) > max(map(len, labels)):
            raise ValidationError("incomplete-locs", f"no leaf covers position {prefix or 'ε'}")
        return node(build(prefix + "l"), build(prefix + "r"))

    return build("")


@dataclass(frozen=True)
class EmbeddingCertificate:
    basis: FiniteBasis
    order: tuple[str, ...]
    trees: dict = field(compare=False)
    locs: dict = field(compare=False)

    def tree(self, label: str) -> Tree:
        return self.trees[label]

    def region_table(self) -> list[tuple[str, frozenset[str]]]:
        out = []
        for k in range(1, len(self.order)):
            out += list(regions((self.basis, self.order), k).items())
        return out

    def image(self) -> frozenset:
        return frozenset(self.trees.values())


def embed(pb, verify: bool = True) -> EmbeddingCertificate:
    """Map each token to a reduced tree so that the basis becomes a sub-domain of U.

    The cells of the partition cut out by the first k enumerated cones are
    tracked together with their Loc paths; token d_k labels the cells
    inside its own cone Δ and the others ⊤.
    """
    basis, order = _order_of(pb)
    cells = [("", basis.full, "")]
    trees = {order[0]: D}
    locs: dict[str, str] = {}
    for k in range(1, len(order)):
        up = basis.up[basis.idx(order[k])]
        nxt = []
        for r, m, path in cells:
            pm, mm = m & up, m & ~up
            if pm and mm:
                nxt += [(r + "+", pm, path + "l"), (r + "-", mm, path + "r")]
            elif pm:
                nxt.append((r + "+", pm, path))
            else:
                nxt.append((r + "-", mm, path))
        cells = nxt
        for r, _, path in cells:
            locs[r] = path
        trees[order[k]] = tree_from_leaves({path: D if r[-1] == "+" else T for r, _, path in cells})
    locs = dict(sorted(locs.items(), key=lambda kv: (len(kv[0]), kv[0].replace("+", "0").replace("-", "1"))))
    cert = EmbeddingCertificate(basis, tuple(order), trees, locs)
    if verify:
        problems = check_certificate(cert)
        if problems:
            raise ValidationError("bad-certificate", "; ".join(problems), witness=problems)
    return cert


def check_certificate(cert: EmbeddingCertificate) -> list[str]:
    """The sub-domain conditions for an embedding, as a list of failures."""
    b = cert.basis
    problems = []
    tr = [cert.trees[t] for t in b.labels]
    if tr[b.bottom_index] != D:
        problems.append("bottom is not sent to Δ")
    if len(set(tr)) != len(tr):
        problems.append("embedding is not injective")
    for i in range(len(b)):
        for j in range(len(b)):
            if b.leq_i(i, j) != u_leq(tr[i], tr[j]):
                problems.append(f"order not preserved at {b.labels[i]}, {b.labels[j]}")
            if j <= i:
                continue
            r = b.lub2(i, j)
            jt = join(tr[i], tr[j])
            if r is None and jt != T:
                problems.append(f"{b.labels[i]}, {b.labels[j]} inconsistent but trees join")
            if r is not None and jt != tr[r]:
                problems.append(f"lub of {b.labels[i]}, {b.labels[j]} not preserved")
    return problems


# ---------------------------------------------------------------------------
# sub-domains, projection pairs and projections on finite bases


def _tokens_of(d) -> list[str]:
    return list(d.labels) if isinstance(d, FiniteBasis) else list(d)


def subdomain_clauses(d, e: FiniteBasis) -> dict[str, bool]:
    """Evaluate the five sub-domain conditions of ``d`` inside ``e``.

    ``d`` is either a token subset of ``e`` (ordered by restriction) or a
    basis of its own.  Lubs must agree both ways: two tokens of ``d`` have a
    lub in ``d`` exactly when they have one in ``e``, and it is the same.
    """
    toks = _tokens_of(d)
    subset = all(t in e for t in toks)
    out = {"subset": subset}
    if not subset:
        return {**out, "bottom": False, "order": False, "lub": False, "domain": False}
    out["bottom"] = e.bottom in toks and (not isinstance(d, FiniteBasis) or d.bottom == e.bottom)
    if isinstance(d, FiniteBasis):
        out["order"] = all(d.leq(x, y) == e.leq(x, y) for x in toks for y in toks)
    else:
        out["order"] = True
    sub = induced_basis(e, toks, check=False) if out["bottom"] else None
    lub_ok = True
    for x in toks:
        for y in toks:
            r = e.lub2(e.idx(x), e.idx(y))
            re_ = None if r is None else e.labels[r]
            if isinstance(d, FiniteBasis):
                rd = d.lub2(d.idx(x), d.idx(y))
                rd = None if rd is None else d.labels[rd]
            elif sub is not None:
                rd = sub.lub2(sub.idx(x), sub.idx(y))
                rd = None if rd is None else sub.labels[rd]
            else:
                rd = re_ if re_ in toks else None
            if rd != re_:
                lub_ok = False
    out["lub"] = lub_ok
    domain = True
    try:
        from .basis import check_lubs

        basis = d if isinstance(d, FiniteBasis) else sub
        if basis is None:
            domain = False
        else:
            check_lubs(basis)
    except ValidationError:
        domain = False
    out["domain"] = domain
    return out


def subdomain_check(d, e: FiniteBasis) -> bool:
    return all(subdomain_clauses(d, e).values())


def induced_basis(e: FiniteBasis, toks: Iterable[str], name: Optional[str] = None, check: bool = True) -> FiniteBasis:
    toks = [t for t in e.labels if t in set(toks)]
    idx = [e.idx(t) for t in toks]
    up = []
    for i in idx:
        up.append(sum(1 << k for k, j in enumerate(idx) if e.leq_i(i, j)))
    b = FiniteBasis(name or f"{e.name}|sub", toks, up)
    if check:
        from .basis import check_lubs

        check_lubs(b)
    return b


@dataclass(frozen=True)
class ProjectionPair:
    i: ApproxMap
    j: ApproxMap

    @property
    def retraction(self) -> ApproxMap:
        return compose(self.i, self.j)


def check_projection_pair(p: ProjectionPair) -> bool:
    return compose(p.j, p.i) == identity_map(p.i.source) and p.retraction <= identity_map(p.i.target)


def projection_pair(d, e: FiniteBasis) -> ProjectionPair:
    """i extends an ideal of d to the ideal of e it generates; j keeps the d-tokens."""
    if not subdomain_check(d, e):
        bad = [k for k, v in subdomain_clauses(d, e).items() if not v]
        raise ValidationError("not-subdomain", f"not a sub-domain: {', '.join(bad)} failed", witness=bad)
    sub = d if isinstance(d, FiniteBasis) else induced_basis(e, d)
    emb = [e.idx(t) for t in sub.labels]
    i_rows = tuple(e.down[emb[x]] for x in range(len(sub)))
    j_rows = []
    for y in range(len(e)):
        m = 0
        for x in range(len(sub)):
            if e.leq_i(emb[x], y):
                m |= 1 << x
        j_rows.append(m)
    pair = ProjectionPair(ApproxMap(sub, e, i_rows), ApproxMap(e, sub, tuple(j_rows)))
    assert check_projection_pair(pair)
    return pair


def subdomain_retraction(d, e: FiniteBasis) -> ApproxMap:
    """X a Z iff some token Y of d has Z below Y below X."""
    if not subdomain_check(d, e):
        raise ValidationError("not-subdomain", "not a sub-domain")
    dm = e.mask(_tokens_of(d))
    rows = []
    for x in range(len(e)):
        m = 0
        for y in bits(e.down[x] & dm):
            m |= e.down[y]
        rows.append(m)
    return ApproxMap(e, e, tuple(rows))


def _formula_rows(a: ApproxMap) -> tuple[int, ...]:
    e = a.source
    fixed = sum(1 << x for x in range(len(e)) if a.rows[x] >> x & 1)
    rows = []
    for x in range(len(e)):
        m = 0
        for y in bits(e.down[x] & fixed):
            m |= e.down[y]
        rows.append(m)
    return tuple(rows)


def classify_projection(a: ApproxMap) -> str:
    if a.source != a.target or compose(a, a) != a:
        return "not-retraction"
    if not a <= identity_map(a.source):
        return "retraction"
    if _formula_rows(a) != a.rows:
        return "projection"
    return "finitary-projection"


def sub_combinator(f: ApproxMap) -> ApproxMap:
    """x sub(f) z iff some y with y f y lies between z and x."""
    if f.source != f.target:
        raise DomainError("sub needs a self-map")
    return ApproxMap(f.source, f.source, _formula_rows(f))


# ---------------------------------------------------------------------------
# finitary projections on U and the constructors on them


@dataclass(frozen=True)
class UProjection:
    """A finitary projection of U, given by its (finite) set of fixed tokens."""

    fixed: frozenset

    def __post_init__(self):
        if D not in self.fixed:
            raise ValidationError("not-subdomain", "fixed set must contain Δ")
        for s in self.fixed:
            for t in self.fixed:
                j = join(s, t)
                if j != T and j not in self.fixed:
                    raise ValidationError(
                        "not-subdomain",
                        f"lub of {serialize(s)} and {serialize(t)} is missing from the fixed set",
                    )

    def __call__(self, t: Tree) -> Tree:
        out = D
        for z in self.fixed:
            if u_leq(z, t):
                out = join(out, z)
        return out

    def __le__(self, other: "UProjection") -> bool:
        return self.fixed <= other.fixed

    @property
    def depth(self) -> int:
        return max(depth(t) for t in self.fixed)

    def sorted_fixed(self) -> list[Tree]:
        return sorted(self.fixed, key=canonical_key)

    def truncate(self, d: int) -> "UProjection":
        return UProjection(frozenset(t for t in self.fixed if depth(t) <= d))

    def as_basis(self, name: str = "D") -> FiniteBasis:
        toks = self.sorted_fixed()
        up = [sum(1 << k for k, t in enumerate(toks) if u_leq(s, t)) for s in toks]
        return FiniteBasis(name, [serialize(t) for t in toks], up)

    def as_map(self, d: int) -> ApproxMap:
        if self.depth > d:
            raise TruncationError("fixed set does not fit the truncation", self.depth)
        return subdomain_retraction([serialize(t) for t in self.fixed], u_basis(d))


BOTTOM_PROJECTION = UProjection(frozenset({D}))


def identity_projection(d: int) -> UProjection:
    return UProjection(frozenset(u_tokens(d)))


def const_projection(pb) -> UProjection:
    """The projection whose fixed set is the embedded image of a finite basis."""
    return UProjection(embed(pb).image())


def from_map(a: ApproxMap) -> UProjection:
    """Read a finitary projection given as a map on some U_d."""
    return UProjection(frozenset(parse_tree(a.source.labels[x]) for x in range(len(a.source)) if a.rows[x] >> x & 1))


def enc_left(x: Tree) -> Tree:
    return node(x, T)


def enc_right(y: Tree) -> Tree:
    return node(T, y)


def dec_sum(t: Tree) -> tuple[int, Tree]:
    """(-1, Δ) for the sum's bottom, else (side, component)."""
    if isinstance(t, tuple):
        if t[1] == T:
            return 0, t[0]
        if t[0] == T:
            return 1, t[1]
    return -1, D


def enc_pair(x: Tree, y: Tree) -> Tree:
    """Interleave: path b0 c0 b1 c1 ... is ⊤ iff b is ⊤ in x or c is ⊤ in y."""
    if x == T or y == T:
        return T
    if x == D and y == D:
        return D
    (x0, x1), (y0, y1) = _children(x), _children(y)
    return node(node(enc_pair(x0, y0), enc_pair(x0, y1)), node(enc_pair(x1, y0), enc_pair(x1, y1)))


def dec_pair(t: Tree) -> tuple[Tree, Tree]:
    """The largest (x, y) with enc_pair(x, y) below t."""
    if t in (D, T):
        return t, t
    (t00, t01), (t10, t11) = _children(t[0]), _children(t[1])
    p00, p01, p10, p11 = dec_pair(t00), dec_pair(t01), dec_pair(t10), dec_pair(t11)
    x = node(meet(p00[0], p01[0]), meet(p10[0], p11[0]))
    y = node(meet(p00[1], p10[1]), meet(p01[1], p11[1]))
    return x, y


def _check_fit(p: UProjection, d: int, strict: bool, what: str) -> UProjection:
    if p.depth <= d:
        return p
    if strict:
        raise TruncationError(f"{what} does not fit U_{d}", p.depth)
    return p.truncate(d)


def proj_sum(a: UProjection, b: UProjection, depth: int = 3, strict: bool = True) -> UProjection:
    fixed = {D} | {enc_left(x) for x in a.fixed} | {enc_right(y) for y in b.fixed}
    return _check_fit(UProjection(frozenset(fixed)), depth, strict, "sum")


def proj_prod(a: UProjection, b: UProjection, depth: int = 3, strict: bool = True) -> UProjection:
    fixed = {enc_pair(x, y) for x in a.fixed for y in b.fixed}
    return _check_fit(UProjection(frozenset(fixed)), depth, strict, "product")


ARROW_BASE_DEPTH = 1


@lru_cache(maxsize=None)
def arrow_space():
    """U_1 => U_1 with its canonical enumeration and embedding certificate."""
    from .constructors import funspace_basis

    u = u_basis(ARROW_BASE_DEPTH)
    fs = funspace_basis(u, u)

    def key(k: int):
        deepest = max(depth(parse_tree(u.labels[v])) for v in fs.tops[k])
        return deepest, fs.labels[k]

    order = [fs.bottom] + [fs.labels[k] for k in sorted(range(len(fs)), key=key) if k != fs.bottom_index]
    return fs, embed((fs, order))


def proj_arrow(a: UProjection, b: UProjection, depth: int = 3, strict: bool = True) -> UProjection:
    """Fixed set {i(b∘f∘a) | f in U_1 => U_1}, with i the embedding of U_1 => U_1."""
    for p in (a, b):
        if p.depth > ARROW_BASE_DEPTH:
            raise TruncationError("arrow is built over U_1 => U_1; argument", p.depth)
    fs, cert = arrow_space()
    u = fs.source
    toks = [parse_tree(t) for t in u.labels]
    fixed = set()
    for h in fs.tops:
        g = tuple(u.idx(serialize(b(toks[h[u.idx(serialize(a(x)))]]))) for x in toks)
        fixed.add(cert.trees[fs.labels[fs.tops.index(g)]])
    return _check_fit(UProjection(frozenset(fixed)), depth, strict, "arrow")


@dataclass(frozen=True)
class DomainChain:
    steps: tuple
    required_depths: tuple
    stable: bool


def parse_domain_expr(text: str, consts: dict[str, UProjection]):
    """Parse expressions like ``A + (p x p)``; ``x`` and ``*`` are products, ``->`` arrows."""
    import re

    # a bare "x" word is the product operator
    toks = re.findall(r"->|[()+*]|\w+", text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take():
        nonlocal pos
        pos += 1
        return toks[pos - 1]

    def atom():
        t = take()
        if t == "(":
            e = arrow()
            if take() != ")":
                raise ValidationError("expr-syntax", "expected ')'")
            return e
        if t == "p":
            return ("var",)
        if t in consts:
            return ("const", consts[t])
        raise ValidationError("expr-syntax", f"unknown name {t!r}")

    def prod():
        e = atom()
        while peek() in ("x", "*"):
            take()
            e = ("prod", e, atom())
        return e

    def summ():
        e = prod()
        while peek() == "+":
            take()
            e = ("sum", e, prod())
        return e

    def arrow():
        e = summ()
        if peek() == "->":
            take()
            return ("arrow", e, arrow())
        return e

    e = arrow()
    if pos != len(toks):
        raise ValidationError("expr-syntax", f"trailing input {toks[pos:]}")
    return e


def eval_domain_expr(expr, p: UProjection, depth: int, strict: bool) -> UProjection:
    tag = expr[0]
    if tag == "var":
        return p
    if tag == "const":
        return expr[1]
    a = eval_domain_expr(expr[1], p, depth, strict)
    b = eval_domain_expr(expr[2], p, depth, strict)
    fn = {"sum": proj_sum, "prod": proj_prod, "arrow": proj_arrow}[tag]
    return fn(a, b, depth, strict)


def _exact_depth(expr, p: UProjection) -> int:
    tag = expr[0]
    if tag == "var":
        return p.depth
    if tag == "const":
        return expr[1].depth
    a = eval_domain_expr(expr[1], p, 10 ** 6, True)
    b = eval_domain_expr(expr[2], p, 10 ** 6, True)
    fn = {"sum": proj_sum, "prod": proj_prod, "arrow": proj_arrow}[tag]
    return fn(a, b, 10 ** 6, True).depth


def solve_domain_equation(expr, depth: int = 3, fuel: int = 8, consts: Optional[dict] = None) -> DomainChain:
    """p_0 = bottom, p_(n+1) = expr(p_n) cut down to U_depth, for up to ``fuel`` steps.

    Each step keeps only the fixed tokens of depth at most ``depth`` (the
    intersection of a sub-domain with U_d is again a sub-domain), and
    records how deep the untruncated step would have reached.
    """
    if isinstance(expr, str):
        expr = parse_domain_expr(expr, consts or {})
    steps = [BOTTOM_PROJECTION]
    need = [0]
    stable = False
    for _ in range(fuel):
        p = steps[-1]
        try:
            need.append(_exact_depth(expr, p))
        except TruncationError as exc:
            need.append(exc.required_depth)
        nxt = eval_domain_expr(expr, p, depth, strict=False)
        if not p <= nxt:
            raise DomainError("domain equation step is not increasing")
        steps.append(nxt)
        if nxt == p:
            stable = True
            break
    return DomainChain(tuple(steps), tuple(need), stable)
