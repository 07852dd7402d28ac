"""Always-mispredict speculative semantics over stacks of speculation instances."""

from __future__ import annotations

from dataclasses import dataclass

from .lang import IfZ, Lfence, NSConfig, Skip, Taint, WholeProgram, initial_state
from .nonspec import (
    DEFAULT_BUDGET, RunResult, Stepped, Stuck, Termination, Terminal, UnboundVariable,
    branch_frames, eval_expr, hidden, plug_ctx, split, step_pc,
)
from .taint import Mode, attenuate
from .traces import BRANCH, Action, rollback

S = Taint.S
U = Taint.U

DEFAULT_OMEGA = 16


@dataclass(frozen=True, slots=True)
class SpecInstance:
    cfg: NSConfig
    window: int | None  # None is the unbounded window of the bottom instance
    pc: Taint


@dataclass(frozen=True, slots=True)
class SpecState:
    instances: tuple[SpecInstance, ...]
    omega: int

    @property
    def top(self) -> SpecInstance:
        return self.instances[-1]

    @property
    def depth(self) -> int:
        return len(self.instances)


class WholeProgramStuck(Exception):
    pass


def initial_spec_state(w: WholeProgram, omega: int = DEFAULT_OMEGA) -> SpecState:
    return SpecState((SpecInstance(initial_state(w), None, S),), omega)


@dataclass(frozen=True, slots=True)
class SpecStep:
    state: SpecState
    label: Action | None
    consumed: bool  # rollbacks do not consume budget


def _dec(window: int | None) -> int | None:
    return None if window is None else window - 1


def _replace_top(st: SpecState, inst: SpecInstance) -> SpecState:
    return SpecState(st.instances[:-1] + (inst,), st.omega)


def _pop(st: SpecState) -> SpecStep:
    return SpecStep(SpecState(st.instances[:-1], st.omega), rollback(), False)


def spec_step(st: SpecState, mode: Mode) -> SpecStep | Terminal | Stuck:
    """Advance the top speculation instance by one step.

    Returns Terminal or Stuck only for the bottom instance; a speculative
    instance that terminates or gets stuck is rolled back instead.
    """
    top = st.top
    speculating = st.depth > 1
    if speculating and top.window == 0:
        return _pop(st)
    cfg = top.cfg
    redex, ctx = split(cfg.stmt)

    if isinstance(redex, IfZ) and not cfg.in_attacker():
        try:
            g = eval_expr(cfg.frames[-1], redex.guard)
        except UnboundVariable as exc:
            return _pop(st) if speculating else Stuck(str(exc))
        right, wrong = (redex.then, redex.orelse) if g.v == 0 else (redex.orelse, redex.then)
        frames = branch_frames(cfg.frames, redex.guard, top.pc)
        parent_cfg = NSConfig(cfg.prog, cfg.heap, frames, cfg.fnames, plug_ctx(right, ctx))
        child_cfg = NSConfig(cfg.prog, cfg.heap, frames, cfg.fnames, plug_ctx(wrong, ctx))
        remaining = _dec(top.window)
        j = st.omega if remaining is None else min(st.omega, remaining)
        parent = SpecInstance(parent_cfg, remaining, top.pc)
        child = SpecInstance(child_cfg, j, U)
        label = Action(BRANCH, attenuate(g.taint, top.pc), value=g.v)
        return SpecStep(SpecState(st.instances[:-1] + (parent, child), st.omega), label, True)

    if isinstance(redex, Lfence):
        nxt = NSConfig(cfg.prog, cfg.heap, cfg.frames, cfg.fnames, plug_ctx(Skip(), ctx))
        window = 0 if speculating else None
        return SpecStep(_replace_top(st, SpecInstance(nxt, window, top.pc)), None, True)

    out = step_pc(cfg, mode, top.pc)
    if isinstance(out, (Terminal, Stuck)):
        return _pop(st) if speculating else out
    assert isinstance(out, Stepped)
    inst = SpecInstance(out.next, _dec(top.window), top.pc)
    return SpecStep(_replace_top(st, inst), out.label, True)


def run_spec_trace(
    w: WholeProgram,
    mode: Mode = Mode.STRONG,
    omega: int = DEFAULT_OMEGA,
    budget: int = DEFAULT_BUDGET,
) -> RunResult:
    if omega < 1:
        raise ValueError("omega must be at least 1")
    st = initial_spec_state(w, omega)
    trace: list[Action] = []
    steps = 0
    while True:
        if steps >= budget:
            return RunResult(tuple(trace), Termination.BUDGET_EXHAUSTED, steps)
        out = spec_step(st, mode)
        if isinstance(out, Terminal):
            return RunResult(tuple(trace), Termination.TERMINATED, steps)
        if isinstance(out, Stuck):
            return RunResult(tuple(trace), Termination.STUCK, steps, out.reason)
        if out.consumed:
            steps += 1
        lab = out.label
        if lab is not None and not hidden(lab, st.top.cfg, out.state.top.cfg):
            trace.append(lab)
        st = out.state


def iter_spec_states(w: WholeProgram, mode: Mode, omega: int = DEFAULT_OMEGA, budget: int = DEFAULT_BUDGET):
    """Yield every intermediate SpecState of a run, for instrumented checks."""
    st = initial_spec_state(w, omega)
    steps = 0
    yield st
    while steps < budget:
        out = spec_step(st, mode)
        if isinstance(out, (Terminal, Stuck)):
            return
        steps += out.consumed
        st = out.state
        yield st
