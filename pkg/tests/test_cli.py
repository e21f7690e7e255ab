import io
from pathlib import Path

import pytest

from fdt.cli import load, run

FIX = Path(__file__).parent / "fixtures"


def fdt(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def lines(*argv: str) -> list[str]:
    code, out, err = fdt(*argv)
    assert code == 0, err
    return out.splitlines()


def test_lub_interval():
    assert lines("lub", FIX / "ex1.fb", "(2,6)", "(4,8)") == ["(4,6)"]


def test_lub_of_nothing_is_bottom():
    assert lines("lub", FIX / "ex1.fb") == ["(0,∞)"]


def test_inconsistent_lub_is_an_error():
    code, _, err = fdt("lub", FIX / "ex1.fb", "(2,6)", "(7,12)")
    assert code == 2 and err.startswith("error:")
    assert lines("consistent", FIX / "ex1.fb", "(2,6)", "(7,12)") == ["false"]


def test_strings_fixture_has_seven_tokens():
    assert lines("check", FIX / "ex11.fb") == ["basis Strings2: 7 tokens, bottom ⊥"]
    assert len(load(FIX / "ex11.fb").basis(None).labels) == 7


def test_embed_figure():
    out = lines("embed", FIX / "fig1.fb", "--order", "bot,b,c,a")
    assert out[-4:] == ["bot => D", "b => (D,T)", "c => (T,(D,T))", "a => ((D,T),T)"]
    assert "D[+-+] = {a}" in out and "Loc[-+] = rl" in out
    assert sum(x.startswith("D[") for x in out) == 14
    assert sum(x.startswith("Loc[") for x in out) == 9


def test_embed_rejects_partial_order_list():
    code, _, err = fdt("embed", FIX / "fig1.fb", "--order", "bot,b")
    assert code == 2 and "order" in err


def test_empty_file():
    code, out, err = fdt("check", FIX / "empty.fb")
    assert code == 2 and out == ""
    assert "no bottom element" in err


def test_bad_map_names_witness():
    code, _, err = fdt("check", FIX / "bad.fm")
    assert code == 2
    assert "condition 4" in err and "(v, v)" in err


def test_map_commands():
    chain = FIX / "chain.fm"
    assert lines("apply", chain, "u", "--map", "up") == ["{bot, u, v}"]
    assert lines("apply", chain, "v", "--map", "down") == ["{bot, u}"]
    assert lines("fix", chain, "--map", "up") == ["{bot, u, v}", "iterations 3", "converged true"]
    assert lines("fix", chain, "--map", "down") == ["{bot}", "iterations 1", "converged true"]
    assert lines("classify", FIX / "flat.fm") == ["retraction"]
    assert lines("sub", FIX / "flat.fm")[0] == "map sub.keep_u : Flat -> Flat"


def test_eval_sigma():
    assert lines("eval", FIX / "sigma.ft", "--term", "sigma5") == ["{10, ⊥}"]


def test_eval_streams():
    out = lines("eval", FIX / "streams.ft", "--signature", "stream", "--term", "double_x", "--arg", "x=01⊥")
    assert out == ["{0011⊥, 001⊥, 00⊥, 0⊥, ⊥}"]
    short = lines("eval", FIX / "streams.ft", "--signature", "stream", "--term", "alt", "--fuel", "2")
    long = lines("eval", FIX / "streams.ft", "--signature", "stream", "--term", "alt", "--fuel", "3")
    assert "0101⊥" in short[0] and "010101⊥" in long[0]


def test_construct_and_iso():
    out = lines("construct", "product", FIX / "fig1.fb", FIX / "fig1.fb")
    assert out[0] == "basis FigxFig"
    assert sum(x.startswith("elem ") for x in out) == 16
    assert lines("iso", FIX / "fig1.fb", FIX / "fig1.fb") == ["a -> a", "b -> b", "bot -> bot", "c -> c"]


def test_usage_errors_exit_one():
    assert fdt("bogus")[0] == 1
    assert fdt()[0] == 1
    assert fdt("lub")[0] == 1


def test_missing_file_exits_nonzero():
    code, _, err = fdt("check", FIX / "nope.fb")
    assert code != 0 and err


@pytest.mark.parametrize(
    "argv",
    [
        ("embed", FIX / "fig1.fb", "--order", "bot,c,b,a"),
        ("construct", "funspace", FIX / "fig1.fb", FIX / "fig1.fb"),
        ("compose", FIX / "chain.fm", "up", "down"),
        ("ideal", FIX / "ex11.fb", "01", "0⊥"),
    ],
)
def test_output_is_deterministic(argv):
    first = fdt(*argv)
    assert first[0] == 0
    assert all(fdt(*argv) == first for _ in range(3))
