"""A typed λ-calculus over finite bases, evaluated to ideals.

Semantic values are :class:`~fdt.mappings.Ideal` at base types, Python
pairs at product types and :class:`Fun` closures at arrow types.  ``fix``
is the Kleene chain cut off after ``fuel`` steps, so running out of fuel
gives a smaller value rather than an error.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from itertools import count
from typing import Callable, Mapping, Optional, Sequence, Union

from .basis import FiniteBasis
from .constructors import funspace_basis, product_basis
from .errors import DomainError, GuardExceeded, ParseError, TypeCheckError, UnknownToken
from .fixpoint import pair_ideal, split_ideal
from .flat import DEFAULT_N, FlatNat, cond_map, truth_basis
from .mappings import ApproxMap, Ideal, apply_map, validate_map

DEFAULT_FUEL = 64
EXHAUSTIVE_LIMIT = 4096


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Prod:
    left: "Type"
    right: "Type"

    def __str__(self) -> str:
        return f"{_wrap(self.left, Arrow)}x{_wrap(self.right, Arrow)}"


@dataclass(frozen=True)
class Arrow:
    source: "Type"
    target: "Type"

    def __str__(self) -> str:
        return f"{_wrap(self.source, Arrow)}->{self.target}"


Type = Union[Base, Prod, Arrow]
N, TRUTH = Base("N"), Base("T")


def _wrap(t: Type, *kinds) -> str:
    return f"({t})" if isinstance(t, kinds) else str(t)


def prod_of(types: Sequence[Type]) -> Type:
    """Right-nested product, so N x N x N is N x (N x N)."""
    if len(types) == 1:
        return types[0]
    return Prod(types[0], prod_of(types[1:]))


_TYPE_TOKEN = re.compile(r"\s*(->|[()x]|[A-Za-z_]\w*)")


def parse_type(text: str) -> Type:
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"bad type {text!r}")
        tok = m.group(1)
        # "NxN" lexes as one word; split products written without spaces
        if tok not in ("->", "(", ")", "x") and "x" in tok and all(p for p in tok.split("x")):
            parts = tok.split("x")
            for k, p in enumerate(parts):
                if k:
                    toks.append("x")
                toks.append(p)
        else:
            toks.append(tok)
        pos = m.end()
    k = 0

    def peek():
        return toks[k] if k < len(toks) else None

    def take():
        nonlocal k
        k += 1
        return toks[k - 1]

    def atom() -> Type:
        t = take()
        if t == "(":
            inner = arrow()
            if take() != ")":
                raise ParseError(f"expected ')' in type {text!r}")
            return inner
        if t in ("->", ")", "x"):
            raise ParseError(f"unexpected {t!r} in type {text!r}")
        return Base(t)

    def product() -> Type:
        items = [atom()]
        while peek() == "x":
            take()
            items.append(atom())
        return prod_of(items)

    def arrow() -> Type:
        t = product()
        if peek() == "->":
            take()
            return Arrow(t, arrow())
        return t

    if not toks:
        raise ParseError("empty type")
    t = arrow()
    if k != len(toks):
        raise ParseError(f"trailing input in type {text!r}")
    return t


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Tup:
    items: tuple


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Lam:
    params: tuple  # ((name, Type), ...)
    body: "Term"


@dataclass(frozen=True)
class Fix:
    body: "Term"


Term = Union[Var, Const, Tup, App, Lam, Fix]


def lam(params, body: Term) -> Lam:
    if isinstance(params, tuple) and len(params) == 2 and isinstance(params[0], str):
        params = (params,)
    return Lam(tuple(params), body)


def app(fn: Term, *args: Term) -> App:
    return App(fn, args[0] if len(args) == 1 else Tup(tuple(args)))


def show(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Tup):
        return "<" + ", ".join(show(x) for x in t.items) + ">"
    if isinstance(t, App):
        return f"({show(t.fn)} {show(t.arg)})"
    if isinstance(t, Lam):
        ps = ", ".join(f"{n}:{ty}" for n, ty in t.params)
        return f"(\\{ps}. {show(t.body)})"
    return f"(fix {show(t.body)})"


def free_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Const):
        return set()
    if isinstance(t, Tup):
        return set().union(*(free_vars(x) for x in t.items))
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, Lam):
        return free_vars(t.body) - {n for n, _ in t.params}
    return free_vars(t.body)


def _fresh(base: str, avoid: set[str]) -> str:
    stem = base.rstrip("0123456789")
    for k in count(1):
        cand = f"{stem}{k}"
        if cand not in avoid:
            return cand
    raise AssertionError


def substitute(t: Term, sub: Mapping[str, Term]) -> Term:
    """Capture-avoiding simultaneous substitution."""
    if isinstance(t, Var):
        return sub.get(t.name, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, Tup):
        return Tup(tuple(substitute(x, sub) for x in t.items))
    if isinstance(t, App):
        return App(substitute(t.fn, sub), substitute(t.arg, sub))
    if isinstance(t, Fix):
        return Fix(substitute(t.body, sub))
    bound = {n for n, _ in t.params}
    sub = {k: v for k, v in sub.items() if k not in bound}
    if not sub:
        return t
    incoming = set().union(*(free_vars(v) for v in sub.values()))
    avoid = incoming | free_vars(t.body) | set(sub) | bound
    params, rename = [], {}
    for n, ty in t.params:
        if n in incoming:
            m = _fresh(n, avoid)
            avoid.add(m)
            rename[n] = Var(m)
            params.append((m, ty))
        else:
            params.append((n, ty))
    body = substitute(t.body, rename) if rename else t.body
    return Lam(tuple(params), substitute(body, sub))


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class Constant:
    """A signature entry.

    ``kind`` is ``token`` (an Ideal), ``map`` (an ApproxMap out of the
    basis of the source type), ``fn`` (a semantic function), ``cond``
    (conditional at a base type, evaluated lazily) or ``term`` (a closed
    term, expanded at the current fuel).
    """

    type: Type
    kind: str
    value: object


@dataclass(frozen=True)
class Signature:
    bases: dict
    consts: dict
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def with_const(self, name: str, c: Constant) -> "Signature":
        return Signature(self.bases, {**self.consts, name: c})

    def define(self, name: str, term: Term) -> "Signature":
        ty = typecheck(term, self)
        return self.with_const(name, Constant(ty, "term", term))

    def basis_of(self, ty: Type) -> FiniteBasis:
        if ty in self._cache:
            return self._cache[ty]
        if isinstance(ty, Base):
            if ty.name not in self.bases:
                raise TypeCheckError(f"unknown base type {ty.name}")
            b = self.bases[ty.name]
        elif isinstance(ty, Prod):
            b = product_basis(self.basis_of(ty.left), self.basis_of(ty.right))
        else:
            b = funspace_basis(self.basis_of(ty.source), self.basis_of(ty.target))
        self._cache[ty] = b
        return b


def nat_signature(n: int = DEFAULT_N) -> Signature:
    """Flat naturals up to n with 0, succ, pred, zero, cond, true, false, add, mult."""
    fn = FlatNat(n)
    t = truth_basis()
    consts = {
        "0": Constant(N, "token", fn.nat(0)),
        "true": Constant(TRUTH, "token", Ideal(t, t.down[1])),
        "false": Constant(TRUTH, "token", Ideal(t, t.down[2])),
        "succ": Constant(Arrow(N, N), "map", fn.succ()),
        "pred": Constant(Arrow(N, N), "map", fn.pred()),
        "zero": Constant(Arrow(N, TRUTH), "map", fn.zero()),
        "cond": Constant(Arrow(prod_of([TRUTH, N, N]), N), "cond", None),
    }
    sig = Signature({"N": fn.basis, "T": t}, consts)
    add = compile_primrec(lam(("m", N), Var("m")), lam((("n", N), ("m", N), ("r", N)), app(Const("succ"), Var("r"))), sig)
    sig = sig.define("add", add)
    mult = compile_primrec(
        lam(("m", N), Const("0")),
        lam((("n", N), ("m", N), ("r", N)), app(Const("add"), Var("r"), Var("m"))),
        sig,
    )
    return sig.define("mult", mult)


def cond_relation(sig: Signature, ty: Type = N) -> ApproxMap:
    """The relation behind ``cond`` at a base type, for validation on small bases."""
    return cond_map(sig.basis_of(ty))


# ---------------------------------------------------------------------------
# type checking


def typecheck(term: Term, sig: Signature, ctx: Optional[Mapping[str, Type]] = None, path: tuple = ()) -> Type:
    ctx = dict(ctx or {})
    if isinstance(term, Var):
        if term.name not in ctx:
            raise TypeCheckError(f"unbound variable {term.name}", path)
        return ctx[term.name]
    if isinstance(term, Const):
        if term.name not in sig.consts:
            raise TypeCheckError(f"unknown constant {term.name}", path)
        return sig.consts[term.name].type
    if isinstance(term, Tup):
        if len(term.items) < 2:
            raise TypeCheckError("a tuple needs at least two components", path)
        return prod_of([typecheck(x, sig, ctx, path + (f"item{k}",)) for k, x in enumerate(term.items)])
    if isinstance(term, App):
        ft = typecheck(term.fn, sig, ctx, path + ("fn",))
        at = typecheck(term.arg, sig, ctx, path + ("arg",))
        if not isinstance(ft, Arrow):
            raise TypeCheckError(f"{ft} is not an arrow", path + ("fn",))
        if ft.source != at:
            raise TypeCheckError(f"argument has type {at}, expected {ft.source}", path + ("arg",))
        return ft.target
    if isinstance(term, Lam):
        inner = dict(ctx)
        for name, ty in term.params:
            inner[name] = ty
        body = typecheck(term.body, sig, inner, path + ("body",))
        return Arrow(prod_of([ty for _, ty in term.params]), body)
    if isinstance(term, Fix):
        ft = typecheck(term.body, sig, ctx, path + ("fix",))
        if not isinstance(ft, Arrow) or ft.source != ft.target:
            raise TypeCheckError(f"fix needs a type t->t, got {ft}", path + ("fix",))
        return ft.source
    raise TypeCheckError(f"not a term: {term!r}", path)


# ---------------------------------------------------------------------------
# evaluation


class Fun:
    """A semantic function value; ``fn`` must be monotone."""

    __slots__ = ("fn",)

    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, v):
        return self.fn(v)


def bottom(ty: Type, sig: Signature):
    if isinstance(ty, Base):
        b = sig.basis_of(ty)
        return Ideal(b, 1 << b.bottom_index)
    if isinstance(ty, Prod):
        return bottom(ty.left, sig), bottom(ty.right, sig)
    bt = bottom(ty.target, sig)
    return Fun(lambda _: bt)


def to_ideal(v, ty: Type, sig: Signature) -> Ideal:
    """Reify a semantic value as an ideal of the type's basis."""
    if isinstance(ty, Base):
        return v
    if isinstance(ty, Prod):
        return pair_ideal(sig.basis_of(ty), to_ideal(v[0], ty.left, sig), to_ideal(v[1], ty.right, sig))
    fs = sig.basis_of(ty)
    src = fs.source
    rows = tuple(
        to_ideal(v(from_ideal(Ideal(src, src.down[a]), ty.source, sig)), ty.target, sig).mask for a in range(len(src))
    )
    k = fs.maps.index(rows)
    return Ideal(fs, fs.down[k])


def from_ideal(x: Ideal, ty: Type, sig: Signature):
    if isinstance(ty, Base):
        return x
    if isinstance(ty, Prod):
        left, right = split_ideal(sig.basis_of(ty), x)
        return from_ideal(left, ty.left, sig), from_ideal(right, ty.right, sig)
    fs = sig.basis_of(ty)
    f = ApproxMap(fs.source, fs.target, fs.maps[fs.idx(x.top())])
    return Fun(lambda v: from_ideal(apply_map(f, to_ideal(v, ty.source, sig)), ty.target, sig))


def _bind(params: tuple, v, env: dict) -> dict:
    env = dict(env)
    for k, (name, _) in enumerate(params):
        if k == len(params) - 1:
            env[name] = v
        else:
            env[name], v = v
    return env


def _const_value(name: str, sig: Signature, fuel: int):
    c = sig.consts[name]
    if c.kind == "token":
        return c.value
    if c.kind == "map":
        m, src = c.value, c.type.source
        return Fun(lambda v: apply_map(m, to_ideal(v, src, sig)))
    if c.kind == "fn":
        return Fun(c.value)
    if c.kind == "cond":
        bt = bottom(c.type.target, sig)
        return Fun(lambda v: _select(v[0], v[1][0], v[1][1], bt))
    if c.kind == "term":
        return _eval(c.value, {}, {}, sig, fuel)
    raise DomainError(f"unknown constant kind {c.kind}")


def _select(test: Ideal, a, b, bt):
    top = test.top()
    if top == "true":
        return a
    if top == "false":
        return b
    return bt


def _eval(t: Term, env: dict, ctx: dict, sig: Signature, fuel: int):
    if isinstance(t, Var):
        if t.name not in env:
            raise DomainError(f"unbound variable {t.name}")
        return env[t.name]
    if isinstance(t, Const):
        return _const_value(t.name, sig, fuel)
    if isinstance(t, Tup):
        vals = [_eval(x, env, ctx, sig, fuel) for x in t.items]
        out = vals[-1]
        for v in reversed(vals[:-1]):
            out = (v, out)
        return out
    if isinstance(t, App):
        if (isinstance(t.fn, Const) and sig.consts[t.fn.name].kind == "cond"
                and isinstance(t.arg, Tup) and len(t.arg.items) == 3):
            # only the chosen branch is evaluated; the value is the same either way
            c, a, b = t.arg.items
            test = _eval(c, env, ctx, sig, fuel)
            top = test.top()
            if top == "true":
                return _eval(a, env, ctx, sig, fuel)
            if top == "false":
                return _eval(b, env, ctx, sig, fuel)
            return bottom(sig.consts[t.fn.name].type.target, sig)
        f = _eval(t.fn, env, ctx, sig, fuel)
        return f(_eval(t.arg, env, ctx, sig, fuel))
    if isinstance(t, Lam):
        inner_ctx = {**ctx, **dict(t.params)}
        return Fun(lambda v: _eval(t.body, _bind(t.params, v, env), inner_ctx, sig, fuel))
    if isinstance(t, Fix):
        ty = typecheck(t, sig, ctx)
        f = _eval(t.body, env, ctx, sig, fuel)
        x = bottom(ty, sig)
        for _ in range(fuel):
            y = f(x)
            if isinstance(ty, Base) and y == x:
                break
            x = y
        return x
    raise DomainError(f"not a term: {t!r}")


def denote(term: Term, env: Optional[Mapping] = None, sig: Optional[Signature] = None, fuel: int = DEFAULT_FUEL,
           ctx: Optional[Mapping[str, Type]] = None):
    """The value of ``term`` with free variables taken from ``env``.

    ``ctx`` gives the types of the free variables; base-typed ones are
    read off the basis of the ideal bound in ``env``.
    """
    sig = sig or nat_signature()
    env = dict(env or {})
    ctx = dict(ctx or {})
    for name, v in env.items():
        if name not in ctx and isinstance(v, Ideal):
            ctx[name] = _base_of(v.basis, sig)
    typecheck(term, sig, ctx)
    # each fix unfolding costs a handful of Python frames
    need = 200 * fuel + 2000
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)
    return _eval(term, env, ctx, sig, fuel)


def _base_of(b: FiniteBasis, sig: Signature) -> Type:
    for name, bb in sig.bases.items():
        if bb == b:
            return Base(name)
    raise TypeCheckError(f"basis {b.name} is not a base type of the signature")


def denote_ideal(term: Term, env=None, sig: Optional[Signature] = None, fuel: int = DEFAULT_FUEL, ctx=None) -> Ideal:
    sig = sig or nat_signature()
    full_ctx = dict(ctx or {})
    for name, v in (env or {}).items():
        if name not in full_ctx and isinstance(v, Ideal):
            full_ctx[name] = _base_of(v.basis, sig)
    ty = typecheck(term, sig, full_ctx)
    return to_ideal(denote(term, env, sig, fuel, full_ctx), ty, sig)


UNIT = FiniteBasis("1", ["⊥"], [1])


def denote_as_map(term: Term, free: Sequence[tuple[str, Type]], sig: Signature, fuel: int = DEFAULT_FUEL,
                  limit: int = EXHAUSTIVE_LIMIT) -> ApproxMap:
    """The relation between the free variables' tokens and the term's tokens."""
    ctx = dict(free)
    ty = typecheck(term, sig, ctx)
    target = sig.basis_of(ty)
    if free:
        src_ty = prod_of([t for _, t in free])
        source = sig.basis_of(src_ty)
    else:
        source = UNIT
    if len(source) * len(target) > limit * 16:
        raise GuardExceeded(f"relation over {len(source)} x {len(target)} tokens exceeds the guard")
    params = tuple(free)
    rows = []
    for a in range(len(source)):
        env = _bind(params, from_ideal(Ideal(source, source.down[a]), src_ty, sig), {}) if free else {}
        rows.append(to_ideal(denote(term, env, sig, fuel, ctx), ty, sig).mask)
    return validate_map(source, target, ApproxMap(source, target, tuple(rows)).pairs)


def values_equal(v, w, ty: Type, sig: Signature, limit: int = EXHAUSTIVE_LIMIT) -> bool:
    """Extensional equality, checking arrows on every token of their source."""
    if isinstance(ty, Base):
        return v == w
    if isinstance(ty, Prod):
        return values_equal(v[0], w[0], ty.left, sig, limit) and values_equal(v[1], w[1], ty.right, sig, limit)
    src = sig.basis_of(ty.source)
    if len(src) > limit:
        raise GuardExceeded(f"extensional comparison over {len(src)} tokens")
    for a in range(len(src)):
        x = from_ideal(Ideal(src, src.down[a]), ty.source, sig)
        if not values_equal(v(x), w(x), ty.target, sig, limit):
            return False
    return True


def _environments(ctx: Mapping[str, Type], sig: Signature, limit: int):
    names = sorted(ctx)
    if not names:
        yield {}
        return
    params = tuple((n, ctx[n]) for n in names)
    ty = prod_of([ctx[n] for n in names])
    b = sig.basis_of(ty)
    if len(b) > limit:
        raise GuardExceeded(f"{len(b)} environments exceed the guard")
    for a in range(len(b)):
        yield _bind(params, from_ideal(Ideal(b, b.down[a]), ty, sig), {})


def beta_check(abs_: Lam, args: Sequence[Term], sig: Signature, ctx: Optional[Mapping[str, Type]] = None,
               fuel: int = DEFAULT_FUEL, limit: int = EXHAUSTIVE_LIMIT) -> bool:
    """Compare (λx..τ)(σ..) with τ[σ../x..] over every environment of the free variables."""
    if len(args) != len(abs_.params):
        raise TypeCheckError("argument count does not match the abstraction")
    ctx = dict(ctx or {})
    lhs = app(abs_, *args)
    rhs = substitute(abs_.body, {n: a for (n, _), a in zip(abs_.params, args)})
    ty = typecheck(lhs, sig, ctx)
    if typecheck(rhs, sig, ctx) != ty:
        return False
    used = {n: ctx[n] for n in free_vars(lhs) | free_vars(rhs)}
    for env in _environments(used, sig, limit):
        if not values_equal(denote(lhs, env, sig, fuel, used), denote(rhs, env, sig, fuel, used), ty, sig, limit):
            return False
    return True


# ---------------------------------------------------------------------------
# recursion schemes


def _expect(term: Term, ty: Type, sig: Signature, what: str) -> None:
    got = typecheck(term, sig)
    if got != ty:
        raise TypeCheckError(f"{what} has type {got}, expected {ty}")


def compile_primrec(f_term: Term, g_term: Term, sig: Signature) -> Term:
    """h with h(0, y) = f(y) and h(x+1, y) = g(x, y, h(x, y)), as a fixed-point term."""
    _expect(f_term, Arrow(N, N), sig, "f")
    _expect(g_term, Arrow(prod_of([N, N, N]), N), sig, "g")
    x, y, k = Var("x"), Var("y"), Var("k")
    px = app(Const("pred"), x)
    body = app(
        Const("cond"),
        app(Const("zero"), x),
        App(f_term, y),
        app(g_term, px, y, app(k, px, y)),
    )
    return Fix(lam(("k", Arrow(Prod(N, N), N)), lam((("x", N), ("y", N)), body)))


def compile_mu(f_term: Term, sig: Signature) -> Term:
    """λy. least x with f(x, y) = 0, by searching upward from 0."""
    _expect(f_term, Arrow(Prod(N, N), N), sig, "f")
    x, y, g = Var("x"), Var("y"), Var("g")
    search = Fix(lam(
        ("g", Arrow(Prod(N, N), N)),
        lam((("x", N), ("y", N)), app(Const("cond"), app(Const("zero"), app(f_term, x, y)), x,
                                      app(g, app(Const("succ"), x), y))),
    ))
    return lam(("y", N), app(search, Const("0"), y))


# ---------------------------------------------------------------------------
# concrete syntax

_TERM_TOKEN = re.compile(r"\s*(\\|->|[()<>,.:]|[A-Za-z_0-9+*'][\w+*']*)")


_STOPS = frozenset({")", ">", ",", ".", ":", "->", "\\", "fix"})


def parse_term(text: str) -> Term:
    """Parse ``ident | 0 | e e ... | (e) | <e, e> | \\x:T, y:T. e | fix e``.

    Application is juxtaposition and associates to the left.
    """
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TERM_TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}")
        toks.append(m.group(1))
        pos = m.end()
    k = 0

    def peek():
        return toks[k] if k < len(toks) else None

    def take(expected: Optional[str] = None):
        nonlocal k
        if k >= len(toks):
            raise ParseError("unexpected end of term")
        tok = toks[k]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, got {tok!r}")
        k += 1
        return tok

    def type_until(stops: tuple) -> Type:
        depth = 0
        parts = []
        while True:
            tok = peek()
            if tok is None:
                raise ParseError("unterminated type annotation")
            if depth == 0 and tok in stops:
                break
            depth += tok == "("
            depth -= tok == ")"
            parts.append(take())
        return parse_type(" ".join(parts))

    def expr() -> Term:
        tok = peek()
        if tok == "\\":
            take()
            params = []
            while True:
                name = take()
                take(":")
                params.append((name, type_until((",", "."))))
                if take() == ".":
                    break
            return Lam(tuple(params), expr())
        if tok == "fix":
            take()
            return Fix(expr())
        out = atom()
        while peek() is not None and peek() not in _STOPS:
            out = App(out, atom())
        return out

    def atom() -> Term:
        tok = take()
        if tok == "(":
            items = [expr()]
            while peek() != ")":
                items.append(expr())
            take(")")
            out = items[0]
            for a in items[1:]:
                out = App(out, a)
            return out
        if tok == "<":
            items = [expr()]
            while peek() == ",":
                take()
                items.append(expr())
            take(">")
            return Tup(tuple(items))
        if tok in ("\\", ")", ">", ",", ".", ":", "->"):
            raise ParseError(f"unexpected {tok!r}")
        if tok == "0" or not tok[0].isdigit():
            return Var(tok)
        raise ParseError(f"unexpected numeral {tok!r}; only 0 is a constant")

    t = expr()
    if k != len(toks):
        raise ParseError(f"trailing input: {' '.join(toks[k:])}")
    return t


def resolve(t: Term, sig: Signature, bound: frozenset = frozenset()) -> Term:
    """Turn parsed identifiers into constants unless a binder captures them."""
    if isinstance(t, Var):
        if t.name not in bound and t.name in sig.consts:
            return Const(t.name)
        return t
    if isinstance(t, Const):
        return t
    if isinstance(t, Tup):
        return Tup(tuple(resolve(x, sig, bound) for x in t.items))
    if isinstance(t, App):
        return App(resolve(t.fn, sig, bound), resolve(t.arg, sig, bound))
    if isinstance(t, Fix):
        return Fix(resolve(t.body, sig, bound))
    return Lam(t.params, resolve(t.body, sig, bound | {n for n, _ in t.params}))


@dataclass(frozen=True)
class TermDef:
    name: str
    type: Type
    term: Term
    line: int
    free: tuple = ()  # (name, type) of declared variables the term uses


def parse_term_file(text: str, sig: Signature) -> tuple[list[TermDef], Signature]:
    """Read ``term <name> : <type> = <expr>`` blocks; later terms may use earlier ones.

    ``var <name> : <type>`` declares a free variable that later terms may
    mention; such terms are bound at evaluation time and are not reusable.
    """
    blocks: list[tuple[int, str, str]] = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        head = line.split()[0]
        if head in ("term", "var"):
            blocks.append((n, head, line.strip()[len(head):]))
        elif blocks and blocks[-1][1] == "term":
            blocks[-1] = (blocks[-1][0], "term", blocks[-1][2] + " " + line.strip())
        else:
            raise ParseError(f"expected 'term' or 'var', got {line.strip()!r}", n)
    defs = []
    ctx: dict[str, Type] = {}
    for n, head, body in blocks:
        if head == "var":
            m = re.match(r"\s*([A-Za-z_][\w']*)\s*:(.*)$", body)
            if not m:
                raise ParseError("expected 'var <name> : <type>'", n)
            try:
                ctx[m.group(1)] = parse_type(m.group(2))
            except ParseError as exc:
                raise ParseError(str(exc), n) from exc
            continue
        m = re.match(r"\s*([A-Za-z_][\w']*)\s*:(.*?)=(.*)$", body, re.S)
        if not m:
            raise ParseError("expected 'term <name> : <type> = <expr>'", n)
        name, ty_text, expr_text = m.groups()
        try:
            ty = parse_type(ty_text)
            term = resolve(parse_term(expr_text), sig)
            free = tuple(sorted((v, ctx[v]) for v in free_vars(term) if v in ctx))
            got = typecheck(term, sig, dict(free))
        except (ParseError, TypeCheckError) as exc:
            raise ParseError(str(exc), n) from exc
        if got != ty:
            raise ParseError(f"term {name} has type {got}, declared {ty}", n)
        if not free:
            sig = sig.with_const(name, Constant(ty, "term", term))
        defs.append(TermDef(name, ty, term, n, free))
    return defs, sig


def token_value(token: str, sig: Signature) -> tuple[Type, Ideal]:
    """Guess the base type of a command-line token by looking it up in each base."""
    for name, b in sig.bases.items():
        if token in b:
            return Base(name), Ideal(b, b.down[b.idx(token)])
    raise UnknownToken(token)
