"""Small-step semantics without speculation, shared as the per-step engine of the speculative one."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .lang import (
    BinOp, Call, CMov, ENTRY, Frame, IfZ, Let, Lfence, Nat, Not, NSConfig, ReadPriv, ReadPub,
    Ret, Seq, Skip, Stmt, Taint, TaintedValue, Var, WholeProgram, WritePriv, WritePub,
    apply_not, apply_op, initial_state,
)
from .taint import Mode, attenuate, join, read_priv_result_taint
from .traces import (
    BRANCH, CALL_IN, CALL_OUT, MICRO, READ, RET_IN, RET_OUT, WRITE, Action, Trace,
)

S = Taint.S
U = Taint.U

DEFAULT_BUDGET = 100_000


class UnboundVariable(Exception):
    def __init__(self, x: str):
        super().__init__(f"unbound variable {x}")
        self.x = x


class Termination(str, Enum):
    TERMINATED = "terminated"
    BUDGET_EXHAUSTED = "budget-exhausted"
    STUCK = "stuck"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class Stepped:
    next: NSConfig
    label: Action | None


@dataclass(frozen=True, slots=True)
class Terminal:
    pass


@dataclass(frozen=True, slots=True)
class Stuck:
    reason: str


StepOutcome = Union[Stepped, Terminal, Stuck]


@dataclass(frozen=True)
class RunResult:
    trace: Trace
    termination: Termination
    steps: int
    reason: str = ""


def eval_expr(frame: Frame, e) -> TaintedValue:
    if isinstance(e, Nat):
        return TaintedValue(e.n, S)
    if isinstance(e, Var):
        tv = frame.get(e.x)
        if tv is None:
            raise UnboundVariable(e.x)
        return tv
    if isinstance(e, BinOp):
        a = eval_expr(frame, e.left)
        b = eval_expr(frame, e.right)
        return TaintedValue(apply_op(e.op, a.v, b.v), join(a.taint, b.taint))
    if isinstance(e, Not):
        a = eval_expr(frame, e.e)
        return TaintedValue(apply_not(a.v), a.taint)
    raise TypeError(f"not an expression: {e!r}")


# ------------------------------------------------------------ redex contexts


def split(stmt: Stmt) -> tuple[Stmt, list[Stmt]]:
    """Find the redex along the left spine of sequences."""
    ctx: list[Stmt] = []
    s = stmt
    while isinstance(s, Seq) and not isinstance(s.first, Skip):
        ctx.append(s.second)
        s = s.first
    return s, ctx


def plug_ctx(redex: Stmt, ctx: list[Stmt]) -> Stmt:
    for k in reversed(ctx):
        redex = Seq(redex, k)
    return redex


def is_attacker_fn(prog: WholeProgram, name: str) -> bool:
    return name == ENTRY or name in prog.imports


def bind(frames: tuple[Frame, ...], x: str, tv: TaintedValue) -> tuple[Frame, ...]:
    top = dict(frames[-1])
    top[x] = tv
    return frames[:-1] + (top,)


def branch_frames(frames: tuple[Frame, ...], guard, pc: Taint) -> tuple[Frame, ...]:
    """Frames after a branch on ``guard``.

    A branch taken outside speculation publishes its outcome through the
    if(v) action, so a guard that is a bare variable is safe from then on.
    """
    if pc is S and isinstance(guard, Var):
        tv = frames[-1][guard.x]
        if tv.taint is U:
            return bind(frames, guard.x, TaintedValue(tv.v, S))
    return frames


def _with(cfg: NSConfig, **kw) -> NSConfig:
    return NSConfig(
        prog=cfg.prog,
        heap=kw.get("heap", cfg.heap),
        frames=kw.get("frames", cfg.frames),
        fnames=kw.get("fnames", cfg.fnames),
        stmt=kw["stmt"],
    )


def step(cfg: NSConfig, mode: Mode) -> StepOutcome:
    """One non-speculative step."""
    return step_pc(cfg, mode, S)


def step_pc(cfg: NSConfig, mode: Mode, pc: Taint) -> StepOutcome:
    """One step of the shared engine under program-counter taint ``pc``.

    Labels are already attenuated by ``pc``. Under a U pc, weak-mode
    private reads do not carry the loaded value.
    """
    redex, ctx = split(cfg.stmt)
    frame = cfg.frames[-1]
    try:
        if isinstance(redex, Skip):
            return Terminal()
        if isinstance(redex, Seq):  # skip; k
            return Stepped(_with(cfg, stmt=plug_ctx(redex.second, ctx)), None)
        if isinstance(redex, Let):
            tv = eval_expr(frame, redex.e)
            return Stepped(_with(cfg, frames=bind(cfg.frames, redex.x, tv), stmt=plug_ctx(redex.body, ctx)), None)
        if isinstance(redex, Lfence):
            return Stepped(_with(cfg, stmt=plug_ctx(Skip(), ctx)), None)
        if isinstance(redex, IfZ):
            g = eval_expr(frame, redex.guard)
            nxt = redex.then if g.v == 0 else redex.orelse
            frames = branch_frames(cfg.frames, redex.guard, pc)
            label = Action(BRANCH, attenuate(g.taint, pc), value=g.v)
            return Stepped(_with(cfg, frames=frames, stmt=plug_ctx(nxt, ctx)), label)
        if isinstance(redex, CMov):
            if redex.x not in frame:
                return Stuck(f"cmov on unbound variable {redex.x}")
            c = eval_expr(frame, redex.cond)
            if c.v == 0:
                val = eval_expr(frame, redex.val)
                tv = TaintedValue(val.v, join(val.taint, c.taint))
            else:
                old = frame[redex.x]
                tv = TaintedValue(old.v, join(old.taint, c.taint))
            return Stepped(_with(cfg, frames=bind(cfg.frames, redex.x, tv), stmt=plug_ctx(redex.body, ctx)), None)
        if isinstance(redex, ReadPub):
            a = eval_expr(frame, redex.addr)
            addr = abs(a.v)
            cell = cfg.heap[addr]
            label = Action(READ, attenuate(join(a.taint, cell.taint), pc), addr=addr, value=cell.v)
            frames = bind(cfg.frames, redex.x, cell)
            return Stepped(_with(cfg, frames=frames, stmt=plug_ctx(redex.body, ctx)), label)
        if isinstance(redex, WritePub):
            a = eval_expr(frame, redex.addr)
            v = eval_expr(frame, redex.val)
            addr = abs(a.v)
            label = Action(WRITE, attenuate(join(a.taint, v.taint), pc), addr=addr, value=v.v)
            heap = cfg.heap.set(addr, TaintedValue(v.v, S))
            return Stepped(_with(cfg, heap=heap, stmt=plug_ctx(Skip(), ctx)), label)
        if isinstance(redex, ReadPriv):
            a = eval_expr(frame, redex.addr)
            addr = -abs(a.v)
            cell = cfg.heap[addr]
            shown = cell.v if (mode is Mode.WEAK and pc is S) else None
            label = Action(READ, attenuate(a.taint, pc), addr=addr, value=shown)
            tv = TaintedValue(cell.v, read_priv_result_taint(mode, a.taint, cell.taint, pc))
            return Stepped(_with(cfg, frames=bind(cfg.frames, redex.x, tv), stmt=plug_ctx(redex.body, ctx)), label)
        if isinstance(redex, WritePriv):
            a = eval_expr(frame, redex.addr)
            v = eval_expr(frame, redex.val)
            addr = -abs(a.v)
            label = Action(WRITE, attenuate(a.taint, pc), addr=addr)
            heap = cfg.heap.set(addr, v)
            return Stepped(_with(cfg, heap=heap, stmt=plug_ctx(Skip(), ctx)), label)
        if isinstance(redex, Call):
            fun = cfg.prog.lookup(redex.f)
            if fun is None:
                return Stuck(f"call to undefined function {redex.f}")
            arg = eval_expr(frame, redex.arg)
            caller_att = is_attacker_fn(cfg.prog, cfg.fname)
            callee_att = is_attacker_fn(cfg.prog, fun.name)
            if caller_att == callee_att:
                label = None
                param = arg
            else:
                kind = CALL_IN if caller_att else CALL_OUT
                label = Action(kind, attenuate(arg.taint, pc), fn=fun.name, value=arg.v)
                param = TaintedValue(arg.v, S)
            return Stepped(
                _with(
                    cfg,
                    frames=cfg.frames + ({fun.param: param},),
                    fnames=cfg.fnames + (fun.name,),
                    stmt=plug_ctx(fun.body, ctx),
                ),
                label,
            )
        if isinstance(redex, Ret):
            if len(cfg.fnames) < 2:
                return Stuck("return from the base frame")
            callee_att = is_attacker_fn(cfg.prog, cfg.fnames[-1])
            caller_att = is_attacker_fn(cfg.prog, cfg.fnames[-2])
            label = None
            if caller_att != callee_att:
                label = Action(RET_OUT if caller_att else RET_IN, S)
            return Stepped(
                _with(cfg, frames=cfg.frames[:-1], fnames=cfg.fnames[:-1], stmt=plug_ctx(Skip(), ctx)),
                label,
            )
    except UnboundVariable as exc:
        return Stuck(str(exc))
    raise TypeError(f"not a statement: {redex!r}")


def hidden(label: Action | None, before: NSConfig, after: NSConfig) -> bool:
    """Attacker-internal microarchitectural actions are not part of the trace."""
    return (
        label is not None
        and label.kind in MICRO
        and before.in_attacker()
        and after.in_attacker()
    )


def run_trace(w: WholeProgram, mode: Mode = Mode.STRONG, budget: int = DEFAULT_BUDGET) -> RunResult:
    cfg = initial_state(w)
    trace: list[Action] = []
    steps = 0
    while True:
        if steps >= budget:
            return RunResult(tuple(trace), Termination.BUDGET_EXHAUSTED, steps)
        out = step(cfg, mode)
        if isinstance(out, Terminal):
            return RunResult(tuple(trace), Termination.TERMINATED, steps)
        if isinstance(out, Stuck):
            return RunResult(tuple(trace), Termination.STUCK, steps, out.reason)
        steps += 1
        if out.label is not None and not hidden(out.label, cfg, out.next):
            trace.append(out.label)
        cfg = out.next
