import pytest

from spectre_lab import corpus
from spectre_lab.hardening import Pass, compile_component
from spectre_lab.lang import (
    Attacker, BinOp, Component, InvariantError, Let, Nat, Ret, Seq, Skip, Taint, Var,
    WholeProgram,
)
from spectre_lab.syntax import (
    SyntaxError_, normalize, parse_attacker, parse_component, parse_program, show_program,
)

SMALL = """
component {
  private { -4 = 2; -5 = 1 : S; }
  fn get(y) {
    let a = y-1 in
    skip;
    ret
  }
}
"""


def test_parse_small_component():
    p = parse_component(SMALL)
    assert p.heap[-4].v == 2 and p.heap[-4].taint is Taint.U
    assert p.heap[-5].taint is Taint.S
    body = p.funs[0].body
    assert body == Let("a", BinOp("-", Var("y"), Nat(1)), Seq(Skip(), Ret()))


def test_precedence():
    p = parse_component("component { fn f(x) { let a = 1 + 2 * x < 3 or x in ret } }")
    e = p.funs[0].body.e
    assert e.op == "or"
    assert e.left.op == "<"
    assert e.left.left == BinOp("+", Nat(1), BinOp("*", Nat(2), Var("x")))


def test_trailing_semicolon_before_brace():
    p = parse_component("component { fn f(x) { if0 x { skip; } else { skip }; ret } }")
    assert p.funs[0].body.second == Ret()


@pytest.mark.parametrize("cid", corpus.component_ids())
def test_corpus_round_trip(cid):
    p = corpus.component(cid)
    assert parse_component(show_program(p)) == p


@pytest.mark.parametrize("aid", corpus.attacker_ids())
def test_attacker_round_trip(aid):
    a = corpus.attacker(aid)
    assert parse_attacker(show_program(a)) == a


@pytest.mark.parametrize("pass_", list(Pass))
@pytest.mark.parametrize("cid", corpus.component_ids())
def test_compiled_round_trip(pass_, cid):
    t = compile_component(pass_, corpus.component(cid))
    assert parse_component(show_program(t), allow_reserved=True) == t


def test_reserved_names_rejected_by_default():
    with pytest.raises(SyntaxError_):
        parse_component("component { fn f(x) { let $pr = 1 in ret } }")


def test_whole_program_file():
    text = corpus.read_text("a8.prog") + corpus.read_text("bounds_check.prog")
    w = parse_program(text)
    assert isinstance(w, WholeProgram)
    assert isinstance(parse_program(corpus.read_text("a8.prog")), Attacker)
    assert isinstance(parse_program(SMALL), Component)


@pytest.mark.parametrize(
    "text,line",
    [
        ("component {\n  fn f(x) {\n    let = 1 in ret\n  }\n}", 3),
        ("component { fn f(x) { skip } }", None),
        ("attacker {\n fn main(x) { writep(1, 2); ret }\n}", None),
        ("", None),
        ("component { private { 3 = 1; } }", None),
    ],
)
def test_errors(text, line):
    with pytest.raises((SyntaxError_, InvariantError)) as exc:
        parse_program(text)
    if line is not None:
        assert exc.value.line == line


def test_normalize_reassociates():
    s = Seq(Seq(Skip(), Skip()), Ret())
    assert normalize(s) == Seq(Skip(), Seq(Skip(), Ret()))
    s = Seq(Let("a", Nat(1), Skip()), Ret())
    assert normalize(s) == Let("a", Nat(1), Seq(Skip(), Ret()))
