import random
from functools import lru_cache

import pytest
from hypothesis import given, settings

from fdt.errors import DomainError, ParseError, TypeCheckError
from fdt.flat import FlatNat, check_map, fade_map, strictify, truth_basis
from fdt.lam import (
    N,
    TRUTH,
    Arrow,
    App,
    Const,
    Constant,
    Fix,
    Lam,
    Prod,
    Signature,
    Tup,
    Var,
    app,
    beta_check,
    compile_mu,
    compile_primrec,
    cond_relation,
    denote,
    denote_as_map,
    free_vars,
    from_ideal,
    lam,
    nat_signature,
    parse_term,
    parse_term_file,
    parse_type,
    resolve,
    show,
    substitute,
    to_ideal,
    typecheck,
    values_equal,
)
from fdt.mappings import ApproxMap, Ideal, all_ideals, apply_map, compose, const_map, ideal_of, identity_map, validate_map
from fdt.streams import DOUBLE_TERM, stream_basis, stream_signature

from support import seeds

SIGMA = r"fix \f:N->N. \n:N. (cond <(zero n), 0, (add <(f (pred n)), (pred n)>)>)"


@lru_cache(maxsize=None)
def sig16():
    return nat_signature(16)


def nat(sig, k):
    b = sig.bases["N"]
    return Ideal(b, b.down[b.idx(str(k))]) if k is not None else Ideal(b, 1 << b.bottom_index)


def value(x: Ideal):
    top = x.top()
    return None if top == "⊥" else int(top)


def term(text, sig):
    return resolve(parse_term(text), sig)


def numeral(k: int):
    t = Const("0")
    for _ in range(k):
        t = app(Const("succ"), t)
    return t


# ---------------------------------------------------------------------------
# typing and syntax


def test_typecheck_examples():
    sig = sig16()
    assert typecheck(lam(("x", N), Var("x")), sig) == Arrow(N, N)
    assert typecheck(app(Const("succ"), Const("0")), sig) == N
    with pytest.raises(TypeCheckError, match="N is not an arrow"):
        typecheck(app(Const("0"), Const("0")), sig)
    with pytest.raises(TypeCheckError, match="unbound variable y"):
        typecheck(Var("y"), sig)


def test_parse_type():
    assert parse_type("N -> N") == Arrow(N, N)
    assert parse_type("NxN -> T") == Arrow(Prod(N, N), TRUTH)
    assert parse_type("(N -> N) -> N") == Arrow(Arrow(N, N), N)


def test_parse_and_show():
    t = parse_term(r"\x:N. succ (succ x)")
    assert isinstance(t, Lam)
    assert show(t) == r"(\x:N. (succ (succ x)))"
    assert parse_term("f a b") == parse_term("((f a) b)")
    with pytest.raises(ParseError):
        parse_term(r"\x:N. ")
    with pytest.raises(ParseError):
        parse_term("f )")


def test_substitution_avoids_capture():
    t = lam(("y", N), app(Var("f"), Var("x"), Var("y")))
    out = substitute(t, {"x": Var("y")})
    assert isinstance(out, Lam)
    (bound, _), = out.params
    assert bound != "y"
    assert free_vars(out) == {"f", "y"}


# ---------------------------------------------------------------------------
# evaluation


def test_sigma_values():
    sig = sig16()
    sigma = term(SIGMA, sig)
    f = denote(sigma, sig=sig)
    assert value(f(nat(sig, 4))) == 6
    assert [value(f(nat(sig, n))) for n in range(7)] == [0, 0, 1, 3, 6, 10, 15]


def test_identity_returns_argument():
    sig = sig16()
    ident = denote(lam(("x", N), Var("x")), sig=sig)
    for x in all_ideals(sig.bases["N"]):
        assert ident(x) == x


def test_double_on_streams():
    sig = stream_signature(6)
    d = denote(term(DOUBLE_TERM, sig), sig=sig)
    c = stream_basis(6)
    assert d(ideal_of(c, "01⊥")).top() == "0011⊥"
    assert d(ideal_of(c, "ε")).top() == "ε"
    assert d(ideal_of(c, "1")).top() == "11"


def test_arithmetic():
    sig = nat_signature()
    add = denote(Const("add"), sig=sig)
    mult = denote(Const("mult"), sig=sig)
    b = sig.bases["N"]
    pair = lambda m, n: (nat(sig, m), nat(sig, n))
    assert value(add(pair(2, 3))) == 5
    assert value(mult(pair(3, 4))) == 12
    assert value(add(pair(None, 3))) is None
    assert b.bottom == "⊥"


def test_strict_constants():
    sig = sig16()
    bot = nat(sig, None)
    for name in ("succ", "pred", "zero"):
        assert denote(Const(name), sig=sig)(bot).top() == "⊥"
    assert value(denote(Const("pred"), sig=sig)(nat(sig, 0))) is None


def test_cond_clauses():
    sig = sig16()
    t = truth_basis()
    a, b = nat(sig, 3), nat(sig, 5)
    cond = denote(Const("cond"), sig=sig)
    assert cond((Ideal(t, t.down[1]), (a, b))) == a
    assert cond((Ideal(t, t.down[2]), (a, b))) == b
    assert value(cond((Ideal(t, t.down[0]), (a, b)))) is None
    # the relation behind cond validates on a small instance
    small = nat_signature(3)
    rel = cond_relation(small)
    validate_map(rel.source, rel.target, rel.pairs)


def test_denote_as_map_cases():
    sig = nat_signature(3)
    b = sig.bases["N"]
    assert denote_as_map(Var("x"), [("x", N)], sig) == identity_map(b)
    k = denote_as_map(numeral(2), [("x", N)], sig)
    assert k == const_map(b, b, "2")
    inner = app(Const("pred"), Var("x"))
    outer = denote_as_map(app(Const("succ"), inner), [("x", N)], sig)
    succ = sig.consts["succ"].value
    assert outer == compose(succ, denote_as_map(inner, [("x", N)], sig))


def test_beta_examples():
    sig = sig16()
    assert beta_check(lam(("x", N), Var("x")), [Const("0")], sig)
    dup = lam(("x", N), Tup((Var("x"), Var("x"))))
    assert beta_check(dup, [app(Const("succ"), Const("0"))], sig)


def test_alpha_renaming():
    sig = nat_signature(4)
    body = app(Const("add"), Var("x"), app(Const("succ"), Var("x")))
    f = denote(lam(("x", N), body), sig=sig)
    g = denote(lam(("y", N), substitute(body, {"x": Var("y")})), sig=sig)
    assert values_equal(f, g, Arrow(N, N), sig)


# ---------------------------------------------------------------------------
# recursion schemes


def _primrec_case(sig, f_text, g_text, f_py, g_py):
    f_t, g_t = term(f_text, sig), term(g_text, sig)
    h = denote(compile_primrec(f_t, g_t, sig), sig=sig)
    for m in range(6):
        assert value(h((nat(sig, 0), nat(sig, m)))) == f_py(m)
        for n in range(5):
            prev = value(h((nat(sig, n), nat(sig, m))))
            assert value(h((nat(sig, n + 1), nat(sig, m)))) == g_py(n, m, prev)


def test_primrec_equations():
    sig = nat_signature(40)
    _primrec_case(sig, r"\m:N. succ m", r"\n:N, m:N, r:N. add <r, n>", lambda m: m + 1, lambda n, m, r: r + n)
    _primrec_case(sig, r"\m:N. 0", r"\n:N, m:N, r:N. add <r, m>", lambda m: 0, lambda n, m, r: r + m)


def test_mu_search():
    sig = nat_signature(12)
    dist = term(
        r"fix \d:NxN->N. \x:N, y:N. (cond <(zero x), y, (cond <(zero y), x, (d <(pred x), (pred y)>)>)>)", sig
    )
    sig = sig.with_const("dist", Constant(Arrow(Prod(N, N), N), "term", dist))
    cases = [
        (r"\x:N, y:N. dist <x, y>", 3, 3),
        (r"\x:N, y:N. x", 7, 0),
        (r"\x:N, y:N. dist <(mult <x, x>), y>", 4, 2),
    ]
    for f_text, y, want in cases:
        mu = denote(compile_mu(term(f_text, sig), sig), sig=sig)
        assert value(mu(nat(sig, y))) == want
    never = denote(compile_mu(term(r"\x:N, y:N. succ x", sig), sig), sig=sig)
    for fuel_sig in (nat(sig, 0), nat(sig, 5)):
        assert value(never(fuel_sig)) is None


def test_compilers_reject_bad_types():
    sig = sig16()
    with pytest.raises(TypeCheckError):
        compile_primrec(Const("0"), Const("succ"), sig)
    with pytest.raises(TypeCheckError):
        compile_mu(Const("succ"), sig)


# ---------------------------------------------------------------------------
# strictness combinators


def test_strictify():
    fn = FlatNat(4)
    b = fn.basis
    k = const_map(b, b, "2")
    s = strictify(k)
    assert apply_map(s, fn.nat(None)) == fn.nat(None)
    for v in range(5):
        assert apply_map(s, fn.nat(v)) == fn.nat(2)
    assert strictify(s) == s
    # check and fade are approximable
    validate_map(b, check_map(b).target, check_map(b).pairs)
    fade = fade_map(b)
    validate_map(fade.source, b, fade.pairs)


# ---------------------------------------------------------------------------
# term files


def test_term_file_defines_in_order():
    text = "term double : N -> N = \\n:N. add <n, n>\nterm four : N = double (succ (succ 0))\n"
    defs, sig = parse_term_file(text, sig16())
    assert [d.name for d in defs] == ["double", "four"]
    assert value(denote(defs[1].term, sig=sig)) == 4


def test_term_file_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_term_file("term a : N = 0\n\nterm b : N = succ\n", sig16())
    assert exc.value.line == 3


def test_unbound_at_runtime():
    with pytest.raises(DomainError):
        denote(Var("q"), sig=sig16(), ctx={"q": N})


# ---------------------------------------------------------------------------
# properties over a small signature


def tiny_signature() -> Signature:
    t = truth_basis()
    neg = ApproxMap(t, t, (t.down[0], t.down[2], t.down[1]))
    consts = {
        "tt": Constant(TRUTH, "token", Ideal(t, t.down[1])),
        "ff": Constant(TRUTH, "token", Ideal(t, t.down[2])),
        "not": Constant(Arrow(TRUTH, TRUTH), "map", neg),
        "if": Constant(Arrow(Prod(TRUTH, Prod(TRUTH, TRUTH)), TRUTH), "cond", None),
    }
    return Signature({"T": t}, consts)


TINY = tiny_signature()
TT = Arrow(TRUTH, TRUTH)
TYPES = [TRUTH, Prod(TRUTH, TRUTH), TT]


def gen_term(rng: random.Random, ty, ctx: dict, depth: int):
    """A random well-typed term of type ``ty``."""
    vars_ = [Var(n) for n, t in ctx.items() if t == ty]
    if depth <= 0 or rng.random() < 0.25:
        if vars_ and rng.random() < 0.6:
            return rng.choice(vars_)
        if ty == TRUTH:
            return Const(rng.choice(["tt", "ff"]))
        if ty == TT and rng.random() < 0.5:
            return Const("not")
        if isinstance(ty, Arrow):
            return Lam((("z", ty.source),), gen_term(rng, ty.target, {**ctx, "z": ty.source}, 0))
        return Tup((gen_term(rng, ty.left, ctx, 0), gen_term(rng, ty.right, ctx, 0)))
    choice = rng.randrange(4)
    if choice == 0:
        # application of a random function
        return App(gen_term(rng, Arrow(TRUTH, ty), ctx, depth - 1), gen_term(rng, TRUTH, ctx, depth - 1))
    if choice == 1 and ty == TRUTH:
        c, a, b = (gen_term(rng, TRUTH, ctx, depth - 1) for _ in range(3))
        return app(Const("if"), c, a, b)
    if choice == 2 and isinstance(ty, Arrow):
        name = rng.choice(["x", "y", "w"])
        return Lam(((name, ty.source),), gen_term(rng, ty.target, {**ctx, name: ty.source}, depth - 1))
    if isinstance(ty, Prod):
        return Tup((gen_term(rng, ty.left, ctx, depth - 1), gen_term(rng, ty.right, ctx, depth - 1)))
    if ty == TRUTH and rng.random() < 0.3:
        return Fix(lam(("r", TRUTH), gen_term(rng, TRUTH, {**ctx, "r": TRUTH}, depth - 1)))
    return gen_term(rng, ty, ctx, depth - 1)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_beta_on_random_terms(seed):
    rng = random.Random(seed)
    ctx = {"u": TRUTH}
    pty = rng.choice(TYPES)
    rty = rng.choice(TYPES)
    name = rng.choice(["x", "y", "u"])
    body = gen_term(rng, rty, {**ctx, name: pty}, 3)
    arg = gen_term(rng, pty, ctx, 2)
    assert beta_check(Lam(((name, pty),), body), [arg], TINY, ctx)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_denote_as_map_matches_pointwise(seed):
    rng = random.Random(seed)
    body = gen_term(rng, TRUTH, {"x": TRUTH}, 3)
    rel = denote_as_map(body, [("x", TRUTH)], TINY)
    t = TINY.bases["T"]
    for x in all_ideals(t):
        assert apply_map(rel, x) == denote(body, {"x": x}, TINY, ctx={"x": TRUTH})


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_denote_monotone_in_environment(seed):
    rng = random.Random(seed)
    body = gen_term(rng, TRUTH, {"x": TRUTH}, 3)
    t = TINY.bases["T"]
    for x in all_ideals(t):
        for y in all_ideals(t):
            if x <= y:
                assert denote(body, {"x": x}, TINY, ctx={"x": TRUTH}) <= denote(body, {"x": y}, TINY, ctx={"x": TRUTH})


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_fix_under_lambda(seed):
    # λx. fix(λy. τ(x, y)) equals fix(λg. λx. τ(x, g x))
    rng = random.Random(seed)
    tau = gen_term(rng, TRUTH, {"x": TRUTH, "y": TRUTH}, 3)
    lhs = lam(("x", TRUTH), Fix(lam(("y", TRUTH), tau)))
    tau_g = substitute(tau, {"y": App(Var("g"), Var("x"))})
    rhs = Fix(lam(("g", TT), lam(("x", TRUTH), tau_g)))
    # chains in T -> T have length at most 3, and unrolling an arrow-typed fix
    # costs exponentially in fuel when tau uses g twice
    assert values_equal(denote(lhs, sig=TINY, fuel=4), denote(rhs, sig=TINY, fuel=4), TT, TINY)


def test_denote_monotone_in_fuel():
    sig = sig16()
    sigma = term(SIGMA, sig)
    prev = None
    for fuel in range(0, 9):
        f = denote(sigma, sig=sig, fuel=fuel)
        cur = [f(nat(sig, n)) for n in range(7)]
        if prev is not None:
            assert all(a <= b for a, b in zip(prev, cur))
        prev = cur


def test_reify_roundtrip():
    sig = nat_signature(2)
    ty = Arrow(N, N)
    fs = sig.basis_of(ty)
    for x in all_ideals(fs):
        assert to_ideal(from_ideal(x, ty, sig), ty, sig) == x
