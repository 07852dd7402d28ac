"""Back-translation of target attackers and per-run secure-compilation witnesses."""

from __future__ import annotations

from .hardening import Pass, PR_ADDR, compile_component, shifts_private_heap
from .lang import (
    Attacker, CMov, Component, Function, IfZ, InvalidAttacker, Let, Lfence, ReadPriv, ReadPub,
    Seq, Skip, Stmt, attacker_problems, plug,
)
from .nonspec import DEFAULT_BUDGET, Termination, run_trace
from .security import Status, Verdict, Witness
from .speculative import DEFAULT_OMEGA, run_spec_trace
from .taint import Mode
from .traces import READ, WRITE, Action, Trace, relation_failure


def backtranslate_stmt(s: Stmt) -> Stmt:
    if isinstance(s, Lfence):
        return Skip()
    if isinstance(s, CMov):
        return Seq(IfZ(s.cond, Let(s.x, s.val, Skip()), Skip()), backtranslate_stmt(s.body))
    if isinstance(s, Seq):
        return Seq(backtranslate_stmt(s.first), backtranslate_stmt(s.second))
    if isinstance(s, Let):
        return Let(s.x, s.e, backtranslate_stmt(s.body))
    if isinstance(s, ReadPub):
        return ReadPub(s.x, s.addr, backtranslate_stmt(s.body))
    if isinstance(s, ReadPriv):
        return ReadPriv(s.x, s.addr, backtranslate_stmt(s.body))
    if isinstance(s, IfZ):
        return IfZ(s.guard, backtranslate_stmt(s.then), backtranslate_stmt(s.orelse))
    return s


def backtranslate_attacker(a: Attacker) -> Attacker:
    problems = attacker_problems(a)
    if problems:
        raise InvalidAttacker(problems[0])
    funs = tuple(Function(f.name, f.param, backtranslate_stmt(f.body)) for f in a.funs)
    return Attacker(a.heap, funs)


def normalize_target(pass_: Pass, t: Trace) -> Trace:
    """Undo the private-heap relocation of the heap-based SLH passes."""
    if not shifts_private_heap(pass_):
        return t
    out = []
    for a in t:
        if a.kind in (READ, WRITE) and a.addr is not None and a.addr < 0:
            if a.addr == -PR_ADDR:
                continue
            a = Action(a.kind, a.taint, a.fn, a.addr + 1, a.value)
        out.append(a)
    return tuple(out)


def rssc_witness(
    p: Component,
    a: Attacker,
    pass_: Pass,
    mode: Mode = Mode.STRONG,
    omega: int = DEFAULT_OMEGA,
    budget: int = DEFAULT_BUDGET,
) -> Verdict:
    """Check that the compiled run is related to the run of the back-translated attacker."""
    tgt_run = run_spec_trace(plug(a, compile_component(pass_, p)), mode, omega, budget)
    src_run = run_trace(plug(backtranslate_attacker(a), p), mode, budget)
    if Termination.TERMINATED != tgt_run.termination or Termination.TERMINATED != src_run.termination:
        note = f"source {src_run.termination}, target {tgt_run.termination}"
        return Verdict(Status.INCONCLUSIVE, Witness((src_run.trace, tgt_run.trace), None, note))
    tgt = normalize_target(pass_, tgt_run.trace)
    failure = relation_failure(src_run.trace, tgt)
    if failure is None:
        return Verdict(Status.HOLDS)
    index, note = failure
    return Verdict(Status.VIOLATED, Witness((src_run.trace, tgt), index, note))
