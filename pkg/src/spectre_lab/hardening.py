"""Compiler passes from source components to hardened target components."""

from __future__ import annotations

from enum import Enum

from .lang import (
    BinOp, Call, CMov, Component, Function, Heap, IfZ, InvariantError, Let, Lfence, Nat, Not,
    ReadPriv, ReadPub, Seq, Stmt, Taint, TaintedValue, Var, WritePriv, WritePub, expr_vars,
)
from .syntax import normalize


class Pass(str, Enum):
    IDENTITY = "id"
    LFENCE = "lfence"
    SLH = "slh"
    SSLH = "sslh"
    NISLH = "nislh"
    NISLH_NOFENCE = "nislh-nofence"
    MSVC = "msvc"

    def __str__(self) -> str:
        return self.value


PR_ADDR = 1  # readp(1) / writep(1, _) touch location -1
XF = "$xf"
XV = "$xv"
PR = "$pr"

_ZERO = Nat(0)


class ReservedLocationClash(InvariantError):
    def __init__(self, detail: str):
        super().__init__("reserved-location", detail)


# ----------------------------------------------------------------- helpers


def _map_body(s: Stmt, f) -> Stmt:
    """Rebuild ``s`` bottom-up, applying ``f`` to every rebuilt node."""
    if isinstance(s, Seq):
        return f(Seq(_map_body(s.first, f), _map_body(s.second, f)))
    if isinstance(s, Let):
        return f(Let(s.x, s.e, _map_body(s.body, f)))
    if isinstance(s, ReadPub):
        return f(ReadPub(s.x, s.addr, _map_body(s.body, f)))
    if isinstance(s, ReadPriv):
        return f(ReadPriv(s.x, s.addr, _map_body(s.body, f)))
    if isinstance(s, CMov):
        return f(CMov(s.x, s.val, s.cond, _map_body(s.body, f)))
    if isinstance(s, IfZ):
        return f(IfZ(s.guard, _map_body(s.then, f), _map_body(s.orelse, f)))
    return f(s)


def _mask(x: str, body: Stmt) -> Stmt:
    return CMov(x, _ZERO, Var(PR), body)


def _load_pr(body: Stmt) -> Stmt:
    return ReadPriv(PR, Nat(PR_ADDR), body)


def _plus1(e) -> BinOp:
    return BinOp("+", e, Nat(1))


def _map_component(p: Component, f, heap: Heap | None = None, prologue=None) -> Component:
    funs = []
    for fun in p.funs:
        body = f(fun.body)
        if prologue is not None:
            body = prologue(body)
        funs.append(Function(fun.name, fun.param, normalize(body)))
    return Component(p.heap if heap is None else heap, tuple(funs), p.imports)


# ------------------------------------------------------------ lfence (ICC)


def _lfence_node(s: Stmt) -> Stmt:
    if isinstance(s, IfZ):
        return IfZ(s.guard, Seq(Lfence(), s.then), Seq(Lfence(), s.orelse))
    return s


# -------------------------------------------------------- SLH / SSLH (heap)


def _slh_node(strong: bool):
    def node(s: Stmt) -> Stmt:
        if isinstance(s, IfZ):
            return Let(XF, s.guard, _load_pr(_mask(XF, IfZ(
                Var(XF),
                Seq(WritePriv(Nat(PR_ADDR), BinOp("or", Var(PR), Not(Var(XF)))), s.then),
                Seq(WritePriv(Nat(PR_ADDR), BinOp("or", Var(PR), Var(XF))), s.orelse),
            ))))
        if isinstance(s, ReadPriv):
            if strong:
                return Let(XF, _plus1(s.addr), _load_pr(_mask(XF, ReadPriv(s.x, Var(XF), s.body))))
            return Let(XF, _plus1(s.addr), _load_pr(ReadPriv(s.x, Var(XF), _mask(s.x, s.body))))
        if isinstance(s, ReadPub):
            if strong:
                return Let(XF, s.addr, _load_pr(_mask(XF, ReadPub(s.x, Var(XF), s.body))))
            return ReadPub(s.x, s.addr, _load_pr(_mask(s.x, s.body)))
        if isinstance(s, WritePriv):
            return Let(XF, _plus1(s.addr), Let(XV, s.val, _load_pr(
                _mask(XF, _mask(XV, WritePriv(Var(XF), Var(XV)))))))
        if isinstance(s, WritePub):
            return Let(XF, s.addr, Let(XV, s.val, _load_pr(
                _mask(XF, _mask(XV, WritePub(Var(XF), Var(XV)))))))
        if isinstance(s, Call):
            return Let(XF, s.arg, _load_pr(_mask(XF, Call(s.f, Var(XF)))))
        return s

    return node


def _slh_heap(p: Component) -> Heap:
    cells = {}
    for addr, tv in p.heap.explicit().items():
        cells[addr - 1] = tv
    if -PR_ADDR in cells:
        raise ReservedLocationClash("location -1 already in use after relocation")
    cells[-PR_ADDR] = TaintedValue(1, Taint.S)
    return Heap(cells)


# ------------------------------------------------------------- NISLH (local)


def _nislh_node(s: Stmt) -> Stmt:
    if isinstance(s, IfZ):
        return Let(XF, s.guard, IfZ(
            Var(XF),
            Let(PR, BinOp("or", Var(PR), Not(Var(XF))), s.then),
            Let(PR, BinOp("or", Var(PR), Var(XF)), s.orelse),
        ))
    if isinstance(s, ReadPriv):
        return ReadPriv(s.x, s.addr, _mask(s.x, s.body))
    return s


def _nislh_prologue(fence: bool):
    def pro(body: Stmt) -> Stmt:
        inner = Let(PR, Nat(1), body)
        return Seq(Lfence(), inner) if fence else inner

    return pro


# ------------------------------------------------------------------- MSVC


def dataflow_reaches_load(body: Stmt) -> bool:
    """True iff a read-bound variable flows into a later heap-access address."""
    return _flows(body, frozenset())[0]


def _flows(s: Stmt, tainted: frozenset[str]) -> tuple[bool, frozenset[str]]:
    # returns (found, tainted set after s) walking in program order
    if isinstance(s, Seq):
        hit, t = _flows(s.first, tainted)
        if hit:
            return True, t
        return _flows(s.second, t)
    if isinstance(s, (ReadPub, ReadPriv)):
        if expr_vars(s.addr) & tainted:
            return True, tainted
        return _flows(s.body, tainted | {s.x})
    if isinstance(s, (WritePub, WritePriv)):
        return bool(expr_vars(s.addr) & tainted), tainted
    if isinstance(s, Let):
        t = tainted | {s.x} if expr_vars(s.e) & tainted else tainted - {s.x}
        return _flows(s.body, t)
    if isinstance(s, CMov):
        t = tainted | {s.x} if (expr_vars(s.val) | expr_vars(s.cond)) & tainted else tainted
        return _flows(s.body, t)
    if isinstance(s, IfZ):
        hit1, t1 = _flows(s.then, tainted)
        hit2, t2 = _flows(s.orelse, tainted)
        return hit1 or hit2, t1 | t2
    return False, tainted


def _msvc_node(s: Stmt) -> Stmt:
    if isinstance(s, IfZ):
        then = Seq(Lfence(), s.then) if dataflow_reaches_load(s.then) else s.then
        orelse = Seq(Lfence(), s.orelse) if dataflow_reaches_load(s.orelse) else s.orelse
        return IfZ(s.guard, then, orelse)
    return s


# ------------------------------------------------------------------ driver


def compile_component(pass_: Pass, p: Component) -> Component:
    pass_ = Pass(pass_)
    if pass_ is Pass.IDENTITY:
        return p
    if pass_ is Pass.LFENCE:
        return _map_component(p, lambda b: _map_body(b, _lfence_node))
    if pass_ is Pass.MSVC:
        return _map_component(p, lambda b: _map_body(b, _msvc_node))
    if pass_ in (Pass.SLH, Pass.SSLH):
        node = _slh_node(strong=pass_ is Pass.SSLH)
        return _map_component(p, lambda b: _map_body(b, node), heap=_slh_heap(p))
    if pass_ in (Pass.NISLH, Pass.NISLH_NOFENCE):
        return _map_component(
            p, lambda b: _map_body(b, _nislh_node), prologue=_nislh_prologue(pass_ is Pass.NISLH)
        )
    raise ValueError(pass_)


def relocate(pass_: Pass, addr: int) -> int:
    """Where a source private address lives after compilation."""
    if Pass(pass_) in (Pass.SLH, Pass.SSLH) and addr < 0:
        return addr - 1
    return addr


def shifts_private_heap(pass_: Pass) -> bool:
    return Pass(pass_) in (Pass.SLH, Pass.SSLH)
