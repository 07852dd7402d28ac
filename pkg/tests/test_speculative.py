import pytest

from spectre_lab.hardening import Pass
from spectre_lab.lang import Taint
from spectre_lab.nonspec import Termination, run_trace
from spectre_lab.speculative import iter_spec_states, run_spec_trace
from spectre_lab.taint import Mode
from spectre_lab.traces import nonspec_projection

from helpers import corpus_whole, show, whole


def test_out_of_bounds_speculation():
    r = run_spec_trace(corpus_whole("bounds-check", "a8"), omega=3)
    assert show(r.trace) == [
        "call?(get,8)#S", "rd(1=4)#S", "if(1)#S", "rd(-18)#S", "rd(107=0)#U", "rollback#S", "ret!#S",
    ]


def test_window_one_rolls_back_after_one_step():
    r = run_spec_trace(corpus_whole("bounds-check", "a8"), omega=1)
    assert show(r.trace) == ["call?(get,8)#S", "rd(1=4)#S", "if(1)#S", "rd(-18)#S", "rollback#S", "ret!#S"]


def test_omega_must_be_positive():
    with pytest.raises(ValueError):
        run_spec_trace(corpus_whole("bounds-check", "a8"), omega=0)


def test_lfence_stops_speculation():
    r = run_spec_trace(corpus_whole("bounds-check", "a8", Pass.LFENCE))
    assert show(r.trace) == ["call?(get,8)#S", "rd(1=4)#S", "if(1)#S", "rollback#S", "ret!#S"]


def test_attacker_branches_do_not_speculate():
    w = whole("attacker { fn main(x) { if0 x { call get 1 } else { call get 2 }; ret } } "
              "component { fn get(y) { ret } }")
    r = run_spec_trace(w)
    assert show(r.trace) == ["call?(get,1)#S", "ret!#S"]


def test_lfence_at_bottom_is_noop():
    w = whole("attacker { fn main(x) { call get 1; ret } } component { fn get(y) { lfence; write(1, y); ret } }")
    assert show(run_spec_trace(w).trace) == show(run_trace(w).trace)


def test_nested_windows_are_bounded_by_parent():
    w = corpus_whole("nested-branch", "a8")
    for st in iter_spec_states(w, Mode.STRONG, omega=4):
        windows = [i.window for i in st.instances]
        assert windows[0] is None
        assert all(0 <= w <= 4 for w in windows[1:])
        assert all(a >= b for a, b in zip(windows[1:], windows[2:]))
        assert all(i.pc is Taint.U for i in st.instances[1:])


@pytest.mark.parametrize("cid", ["bounds-check", "nested-branch", "load-before-check", "callee-leak"])
@pytest.mark.parametrize("aid", ["a0", "a8", "a42"])
def test_projection_equals_nonspec_run(cid, aid):
    w = corpus_whole(cid, aid)
    for mode in Mode:
        r = run_spec_trace(w, mode)
        assert r.termination is Termination.TERMINATED
        assert nonspec_projection(r.trace) == run_trace(w, mode).trace


def test_weak_mode_hides_speculative_values():
    r = run_spec_trace(corpus_whole("bounds-check", "a8"), Mode.WEAK, omega=3)
    assert "rd(-18)#S" in show(r.trace)
    r = run_spec_trace(corpus_whole("load-before-check", "a8"), Mode.WEAK, omega=3)
    assert "rd(-18=7)#S" in show(r.trace)
