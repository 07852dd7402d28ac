"""Actions, traces, the non-speculative projection and the source/target relation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .lang import Taint

CALL_IN = "call?"
CALL_OUT = "call!"
RET_OUT = "ret!"
RET_IN = "ret?"
READ = "rd"
WRITE = "wr"
BRANCH = "if"
ROLLBACK = "rollback"

MICRO = (READ, WRITE, BRANCH)
KINDS = (CALL_IN, CALL_OUT, RET_OUT, RET_IN, READ, WRITE, BRANCH, ROLLBACK)


@dataclass(frozen=True, slots=True)
class Action:
    """One observable event.

    ``fn``/``value`` are used by calls; ``addr`` (and optionally ``value``)
    by heap actions; ``value`` alone by branches.
    """

    kind: str
    taint: Taint = Taint.S
    fn: str | None = None
    addr: int | None = None
    value: int | None = None

    def __str__(self) -> str:
        k = self.kind
        if k in (CALL_IN, CALL_OUT):
            body = f"{k}({self.fn},{self.value})"
        elif k in (READ, WRITE):
            body = f"{k}({self.addr})" if self.value is None else f"{k}({self.addr}={self.value})"
        elif k == BRANCH:
            body = f"if({self.value})"
        else:
            body = k
        return f"{body}#{self.taint}"

    def retaint(self, taint: Taint) -> "Action":
        return Action(self.kind, taint, self.fn, self.addr, self.value)

    def shape(self) -> tuple:
        return (self.kind, self.fn, self.addr, self.value)


Trace = tuple[Action, ...]


def call_in(f: str, v: int, t: Taint = Taint.S) -> Action:
    return Action(CALL_IN, t, fn=f, value=v)


def call_out(f: str, v: int, t: Taint = Taint.S) -> Action:
    return Action(CALL_OUT, t, fn=f, value=v)


def ret_out() -> Action:
    return Action(RET_OUT)


def ret_in() -> Action:
    return Action(RET_IN)


def rd(addr: int, value: int | None = None, t: Taint = Taint.S) -> Action:
    return Action(READ, t, addr=addr, value=value)


def wr(addr: int, value: int | None = None, t: Taint = Taint.S) -> Action:
    return Action(WRITE, t, addr=addr, value=value)


def branch(v: int, t: Taint = Taint.S) -> Action:
    return Action(BRANCH, t, value=v)


def rollback() -> Action:
    return Action(ROLLBACK)


# -------------------------------------------------------------- serialization

_ACTION = re.compile(
    r"^(?:(?P<call>call[?!])\((?P<fn>[^,()]+),(?P<cv>\d+)\)"
    r"|(?P<ret>ret[!?])"
    r"|(?P<mem>rd|wr)\((?P<addr>-?\d+)(?:=(?P<mv>\d+))?\)"
    r"|if\((?P<bv>\d+)\)"
    r"|(?P<rb>rollback))#(?P<t>[SU])$"
)


class MalformedTrace(ValueError):
    pass


def parse_action(text: str) -> Action:
    m = _ACTION.match(text.strip())
    if not m:
        raise MalformedTrace(f"not an action: {text!r}")
    t = Taint(m.group("t"))
    if m.group("call"):
        return Action(m.group("call"), t, fn=m.group("fn"), value=int(m.group("cv")))
    if m.group("ret"):
        return Action(m.group("ret"), t)
    if m.group("mem"):
        mv = m.group("mv")
        return Action(m.group("mem"), t, addr=int(m.group("addr")), value=None if mv is None else int(mv))
    if m.group("bv") is not None:
        return Action(BRANCH, t, value=int(m.group("bv")))
    return Action(ROLLBACK, t)


def format_trace(t: Iterable[Action]) -> str:
    return "".join(f"{a}\n" for a in t)


def parse_trace(text: str) -> Trace:
    return tuple(parse_action(line) for line in text.splitlines() if line.strip())


# ----------------------------------------------------------------- projection


def nonspec_projection(t: Sequence[Action]) -> Trace:
    """Drop every segment between a branch and its matching rollback.

    Rollbacks pair with branches like brackets. A branch with no matching
    rollback (as in a non-speculative run) is committed and kept along
    with everything after it.
    """
    closes: dict[int, int] = {}
    open_: list[int] = []
    for i, a in enumerate(t):
        if a.kind == BRANCH:
            open_.append(i)
        elif a.kind == ROLLBACK:
            if not open_:
                raise MalformedTrace(f"rollback at {i} has no matching branch")
            closes[open_.pop()] = i
    out = []
    i = 0
    while i < len(t):
        out.append(t[i])
        i = closes[i] + 1 if i in closes else i + 1
    return tuple(out)


def is_well_formed(t: Sequence[Action]) -> bool:
    try:
        nonspec_projection(t)
    except MalformedTrace:
        return False
    return True


# ------------------------------------------------------------------- relation


def action_related(src: Action | None, tgt: Action) -> bool:
    if src is None:
        return tgt.taint is Taint.S
    return src == tgt


def trace_related(src: Sequence[Action], tgt: Sequence[Action]) -> bool:
    return relation_failure(src, tgt) is None


def relation_failure(src: Sequence[Action], tgt: Sequence[Action]) -> tuple[int, str] | None:
    """Greedy embedding of ``src`` into ``tgt``.

    Returns None on success, otherwise the target index where matching
    failed and a short reason.
    """
    i = 0
    for j, a in enumerate(tgt):
        if i < len(src) and action_related(src[i], a):
            i += 1
        elif not action_related(None, a):
            return j, f"unsafe target action {a} has no source counterpart"
    if i < len(src):
        return len(tgt), f"source action {src[i]} never produced by the target"
    return None


def first_divergence(t1: Sequence[Action], t2: Sequence[Action]) -> int | None:
    for i, (a, b) in enumerate(zip(t1, t2)):
        if a != b:
            return i
    if len(t1) != len(t2):
        return min(len(t1), len(t2))
    return None
