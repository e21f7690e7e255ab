"""Command-line front end: ``fdt <command> <file> ...``.

Files hold any number of ``basis`` and ``map`` blocks; a map may only use
bases defined above it.  Term files for ``eval`` use their own format.
Exit status is 0 on success, 1 for usage errors and 2 when an input fails
validation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

from . import basis as B
from .constructors import funspace_basis, product_basis, rec_tree_basis, sum_basis
from .errors import DomainError, ParseError
from .fixpoint import fix_fuel, fragment_ideal
from .lam import DEFAULT_FUEL, Arrow, bottom, denote, from_ideal, nat_signature, parse_term_file, to_ideal, token_value
from .mappings import ApproxMap, Ideal, apply_map, close_ideal, compose, finite_step_closure, validate_map
from .universal import classify_projection, embed, serialize, sub_combinator


class UsageError(Exception):
    pass


@dataclass
class Workspace:
    bases: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)

    def basis(self, name: Optional[str]) -> B.FiniteBasis:
        if not self.bases:
            raise UsageError("file defines no basis")
        if name is None:
            return next(iter(self.bases.values()))
        if name not in self.bases:
            raise UsageError(f"no basis named {name!r}")
        return self.bases[name]

    def map(self, name: Optional[str]) -> ApproxMap:
        if not self.maps:
            raise UsageError("file defines no map")
        if name is None:
            return list(self.maps.values())[-1]
        if name not in self.maps:
            raise UsageError(f"no map named {name!r}")
        return self.maps[name]


def _blocks(text: str) -> list[tuple[int, str, list[str]]]:
    """Split into (first line number, header word, lines) blocks."""
    blocks: list[tuple[int, str, list[str]]] = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        head = line.split()[0] if line else ""
        if head in ("basis", "map"):
            blocks.append((n, head, [raw]))
        elif blocks:
            blocks[-1][2].append(raw)
        elif line:
            raise ParseError(f"expected 'basis' or 'map', got {line!r}", n)
    return blocks


def parse_basis_file(text: str, start: int = 1) -> B.FiniteBasis:
    try:
        return B.parse_basis(text)
    except ParseError as exc:
        if exc.line is None:
            raise
        msg = str(exc).split(": ", 1)[1]
        raise ParseError(msg, exc.line + start - 1) from exc


def parse_map_block(lines: Sequence[str], start: int, bases: dict) -> tuple[str, ApproxMap]:
    header = lines[0].split("#", 1)[0].split()
    # map <name> : <src> -> <dst>
    if len(header) != 6 or header[2] != ":" or header[4] != "->":
        raise ParseError("expected 'map <name> : <src> -> <dst>'", start)
    name, src, dst = header[1], header[3], header[5]
    for b in (src, dst):
        if b not in bases:
            raise ParseError(f"unknown basis {b!r}", start)
    pairs, close = [], False
    for k, raw in enumerate(lines[1:], start + 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if line[0] == "pair" and len(line) == 3:
            pairs.append((line[1], line[2]))
        elif line == ["close"]:
            close = True
        else:
            raise ParseError(f"cannot parse {' '.join(line)!r}", k)
    s, t = bases[src], bases[dst]
    if close:
        return name, finite_step_closure(s, t, pairs)
    return name, validate_map(s, t, pairs)


def load(path: str) -> Workspace:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    ws = Workspace()
    blocks = _blocks(text)
    if not blocks:
        # an empty file is an empty basis
        B.validate_basis([], [])
    for start, head, lines in blocks:
        if head == "basis":
            b = parse_basis_file("\n".join(lines), start)
            if b.name in ws.bases:
                raise ParseError(f"basis {b.name!r} defined twice", start)
            ws.bases[b.name] = b
        else:
            name, m = parse_map_block(lines, start, ws.bases)
            if name in ws.maps:
                raise ParseError(f"map {name!r} defined twice", start)
            ws.maps[name] = m
    return ws


def format_map(name: str, f: ApproxMap) -> str:
    lines = [f"map {name} : {f.source.name} -> {f.target.name}"]
    lines += [f"pair {a} {b}" for a, b in sorted(f.pairs)]
    return "\n".join(lines)


def _ideal_of(basis: B.FiniteBasis, tokens: Sequence[str]) -> Ideal:
    return close_ideal(basis, tokens)


# ---------------------------------------------------------------------------
# commands


def cmd_check(a, out: TextIO) -> None:
    ws = load(a.file)
    for b in ws.bases.values():
        print(f"basis {b.name}: {len(b)} tokens, bottom {b.bottom}", file=out)
    for name, m in ws.maps.items():
        print(f"map {name}: {m.source.name} -> {m.target.name}, {len(m.pairs)} pairs", file=out)


def cmd_lub(a, out: TextIO) -> None:
    b = load(a.file).basis(a.basis)
    print(B.lub(b, a.tokens), file=out)


def cmd_glb(a, out: TextIO) -> None:
    b = load(a.file).basis(a.basis)
    print(B.glb(b, a.tokens), file=out)


def cmd_ideal(a, out: TextIO) -> None:
    b = load(a.file).basis(a.basis)
    print(_ideal_of(b, a.tokens), file=out)


def cmd_consistent(a, out: TextIO) -> None:
    b = load(a.file).basis(a.basis)
    print("true" if B.consistent(b, a.tokens) else "false", file=out)


def cmd_apply(a, out: TextIO) -> None:
    f = load(a.file).map(a.map)
    print(apply_map(f, _ideal_of(f.source, a.tokens)), file=out)


def cmd_compose(a, out: TextIO) -> None:
    ws = load(a.file)
    g, f = ws.map(a.g), ws.map(a.f)
    print(format_map(f"{a.g}.{a.f}", compose(g, f)), file=out)


def cmd_fix(a, out: TextIO) -> None:
    f = load(a.file).map(a.map)
    if f.source != f.target:
        raise DomainError(f"fix needs a self-map, got {f.source.name} -> {f.target.name}")
    res = fix_fuel(f, a.fuel)
    print(fragment_ideal(res, f.source), file=out)
    print(f"iterations {res.iterations}", file=out)
    print(f"converged {'true' if res.converged else 'false'}", file=out)


def cmd_eval(a, out: TextIO) -> None:
    if a.signature == "stream":
        from .streams import stream_signature

        sig = stream_signature(a.size or 8)
    else:
        sig = nat_signature(a.size or 64)
    try:
        with open(a.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {a.file}: {exc.strerror}") from exc
    defs, sig = parse_term_file(text, sig)
    if not defs:
        raise ParseError("file defines no term")
    chosen = defs[-1] if a.term is None else next((d for d in defs if d.name == a.term), None)
    if chosen is None:
        raise UsageError(f"no term named {a.term!r}")
    ctx = dict(chosen.free)
    env = {name: bottom(ty, sig) for name, ty in ctx.items()}
    for binding in a.arg:
        if "=" not in binding:
            raise UsageError(f"--arg expects name=token, got {binding!r}")
        name, tok = binding.split("=", 1)
        if name not in ctx:
            raise UsageError(f"term {chosen.name} has no free variable {name!r}")
        ty, x = token_value(tok, sig)
        if ty != ctx[name]:
            raise UsageError(f"{name} has type {ctx[name]}, token {tok!r} has type {ty}")
        env[name] = x
    v = denote(chosen.term, env, sig, a.fuel, ctx)
    ty = chosen.type
    if isinstance(ty, Arrow):
        src = sig.basis_of(ty.source)
        for k, lbl in enumerate(src.labels):
            x = Ideal(src, src.down[k])
            y = to_ideal(v(from_ideal(x, ty.source, sig)), ty.target, sig)
            if y.mask != 1 << y.basis.bottom_index:
                print(f"{lbl} => {y}", file=out)
    else:
        print(to_ideal(v, ty, sig), file=out)


def cmd_construct(a, out: TextIO) -> None:
    left = load(a.file).basis(a.basis)
    if a.kind == "rectree":
        result = rec_tree_basis(left, a.depth)
    else:
        if a.other is None:
            raise UsageError(f"construct {a.kind} needs a second basis file")
        right = load(a.other).basis(None)
        fn = {"product": product_basis, "sum": sum_basis, "funspace": funspace_basis}[a.kind]
        result = fn(left, right)
    out.write(B.format_basis(result))


def cmd_embed(a, out: TextIO) -> None:
    b = load(a.file).basis(a.basis)
    order = a.order.split(",") if a.order else [b.bottom] + [t for t in b.labels if t != b.bottom]
    cert = embed((b, order))
    for r, toks in cert.region_table():
        print(f"D[{r}] = {{{', '.join(sorted(toks))}}}", file=out)
    for r, path in cert.locs.items():
        print(f"Loc[{r}] = {path or 'ε'}", file=out)
    for t in order:
        print(f"{t} => {serialize(cert.trees[t])}", file=out)


def cmd_sub(a, out: TextIO) -> None:
    f = load(a.file).map(a.map)
    name = a.map or list(load(a.file).maps)[-1]
    print(format_map(f"sub.{name}", sub_combinator(f)), file=out)


def cmd_classify(a, out: TextIO) -> None:
    print(classify_projection(load(a.file).map(a.map)), file=out)


def cmd_iso(a, out: TextIO) -> None:
    x = load(a.file).basis(a.basis)
    y = load(a.other).basis(None)
    iso = B.find_isomorphism(x, y, limit=a.limit)
    if iso is None:
        print("not isomorphic", file=out)
        return
    for k in sorted(iso):
        print(f"{k} -> {iso[k]}", file=out)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fdt", description="Finite domain theory workbench.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name: str, fn, help_: str, tokens: bool = False, with_map: bool = False):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("file")
        if tokens:
            sp.add_argument("tokens", nargs="*")
        sp.add_argument("--basis", help="basis name when the file holds several")
        if with_map:
            sp.add_argument("--map", help="map name (default: the last one in the file)")
        sp.set_defaults(fn=fn)
        return sp

    cmd("check", cmd_check, "validate every basis and map in a file")
    cmd("lub", cmd_lub, "least upper bound of tokens", tokens=True)
    cmd("glb", cmd_glb, "greatest lower bound of tokens", tokens=True)
    cmd("ideal", cmd_ideal, "ideal generated by tokens", tokens=True)
    cmd("consistent", cmd_consistent, "whether tokens have an upper bound", tokens=True)
    cmd("apply", cmd_apply, "apply a map to the ideal generated by tokens", tokens=True, with_map=True)
    sp = cmd("compose", cmd_compose, "print g after f")
    sp.add_argument("g")
    sp.add_argument("f")
    sp = cmd("fix", cmd_fix, "least fixed point of a self-map", with_map=True)
    sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    sp = sub.add_parser("eval", help="evaluate the last term of a term file")
    sp.add_argument("file")
    sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    sp.add_argument("--arg", action="append", default=[], help="bind a free variable, name=token")
    sp.add_argument("--term", help="term name (default: the last one)")
    sp.add_argument("--signature", choices=["nat", "stream"], default="nat")
    sp.add_argument("--size", type=int, help="truncation: largest natural, or longest stream prefix")
    sp.set_defaults(fn=cmd_eval)
    sp = sub.add_parser("construct", help="build a composite basis and print it")
    sp.add_argument("kind", choices=["product", "sum", "funspace", "rectree"])
    sp.add_argument("file")
    sp.add_argument("other", nargs="?")
    sp.add_argument("--basis")
    sp.add_argument("--depth", type=int, default=1)
    sp.set_defaults(fn=cmd_construct)
    sp = cmd("embed", cmd_embed, "embed a basis into the universal domain")
    sp.add_argument("--order", help="enumeration, bottom first")
    cmd("sub", cmd_sub, "the sub combinator applied to a self-map", with_map=True)
    cmd("classify", cmd_classify, "retraction / projection / finitary projection", with_map=True)
    sp = cmd("iso", cmd_iso, "find an order isomorphism between two bases")
    sp.add_argument("other")
    sp.add_argument("--limit", type=int, default=B.ISO_LIMIT)
    return p


def run(argv: Sequence[str], out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(list(argv))
        args.fn(args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return 1
    except DomainError as exc:
        print(f"error: {exc}", file=err)
        return 2
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
