from spectre_lab.lang import Component, Taint, plug
from spectre_lab.nonspec import Termination, run_trace
from spectre_lab.taint import Mode

from helpers import corpus_whole, show, whole

CALLBACK = """
attacker {
  fn main(x) { call get 3; ret }
  fn cb(z) { let q = read(z) in write(0, q); ret }
}
component {
  private { -1 = 9; }
  import cb;
  fn get(y) {
    let s = readp(1) in
    call cb y;
    write(s, 2);
    ret
  }
}
"""


def test_in_bounds_trace():
    r = run_trace(corpus_whole("bounds-check", "a0"))
    assert r.termination is Termination.TERMINATED
    assert show(r.trace) == ["call?(get,0)#S", "rd(1=4)#S", "if(0)#S", "rd(-10)#S", "rd(103=0)#S", "ret!#S"]


def test_out_of_bounds_trace_skips_loads():
    r = run_trace(corpus_whole("bounds-check", "a8"))
    assert show(r.trace) == ["call?(get,8)#S", "rd(1=4)#S", "if(1)#S", "ret!#S"]


def test_callbacks_and_attacker_filtering():
    r = run_trace(whole(CALLBACK))
    # the attacker's own read and write inside cb are not observable
    assert show(r.trace) == ["call?(get,3)#S", "rd(-1)#S", "call!(cb,3)#S", "ret?#S", "wr(9=2)#S", "ret!#S"]


def test_weak_mode_shows_private_values():
    r = run_trace(whole(CALLBACK), Mode.WEAK)
    assert "rd(-1=9)#S" in show(r.trace)


def test_nonspec_actions_are_safe():
    for cid in ("bounds-check", "load-before-check", "callee-leak"):
        for mode in Mode:
            r = run_trace(corpus_whole(cid, "a8"), mode)
            assert all(a.taint is Taint.S for a in r.trace)


def test_attacker_alone_has_empty_trace():
    w = plug(whole("attacker { fn main(x) { write(1, 2); ret } }"), Component())
    r = run_trace(w)
    assert r.termination is Termination.TERMINATED
    assert r.trace == ()


def test_budget_exhausted_on_unbounded_recursion():
    w = whole("attacker { fn main(x) { call get 0; ret } } component { fn get(y) { call get y; ret } }")
    r = run_trace(w, budget=50)
    assert r.termination is Termination.BUDGET_EXHAUSTED
    assert r.steps == 50


def test_unbound_variable_is_stuck():
    w = whole("attacker { fn main(x) { call get 0; ret } } component { fn get(y) { write(z, 1); ret } }")
    r = run_trace(w)
    assert r.termination is Termination.STUCK
    assert "z" in r.reason


def test_public_write_then_read():
    w = whole("attacker { fn main(x) { call get 0; ret } } "
              "component { private { -2 = 5; } fn get(y) { let v = readp(2) in write(7, v); let r = read(7) in skip; ret } }")
    assert show(run_trace(w).trace)[-2:] == ["rd(7=5)#S", "ret!#S"]
