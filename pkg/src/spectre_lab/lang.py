"""Core syntax, tainted values, heaps and linking of attackers with components."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Union


class Taint(str, Enum):
    S = "S"
    U = "U"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class TaintedValue:
    v: int
    taint: Taint = Taint.S


ENTRY = "<entry>"


class LangError(Exception):
    pass


class InvariantError(LangError):
    def __init__(self, rule: str, detail: str):
        super().__init__(f"{rule}: {detail}")
        self.rule = rule


class NotWhole(LangError):
    pass


class HeapOverlap(LangError):
    pass


class InvalidAttacker(LangError):
    pass


# ---------------------------------------------------------------- expressions

BINOPS = ("+", "-", "*", "<", ">", "==", "or")


@dataclass(frozen=True, slots=True)
class Nat:
    n: int


@dataclass(frozen=True, slots=True)
class Var:
    x: str


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Not:
    e: "Expr"


Expr = Union[Nat, Var, BinOp, Not]


def apply_op(op: str, a: int, b: int) -> int:
    # 0 encodes true throughout
    if op == "+":
        return a + b
    if op == "-":
        return max(0, a - b)
    if op == "*":
        return a * b
    if op == "<":
        return 0 if a < b else 1
    if op == ">":
        return 0 if a > b else 1
    if op == "==":
        return 0 if a == b else 1
    if op == "or":
        return 0 if a == 0 or b == 0 else 1
    raise ValueError(f"unknown operator {op!r}")


def apply_not(a: int) -> int:
    return 0 if a != 0 else 1


def expr_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.x,))
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, Not):
        return expr_vars(e.e)
    return frozenset()


# ----------------------------------------------------------------- statements


@dataclass(frozen=True, slots=True)
class Skip:
    pass


@dataclass(frozen=True, slots=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


@dataclass(frozen=True, slots=True)
class Let:
    x: str
    e: Expr
    body: "Stmt"


@dataclass(frozen=True, slots=True)
class IfZ:
    guard: Expr
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True, slots=True)
class Call:
    f: str
    arg: Expr


@dataclass(frozen=True, slots=True)
class WritePub:
    addr: Expr
    val: Expr


@dataclass(frozen=True, slots=True)
class ReadPub:
    x: str
    addr: Expr
    body: "Stmt"


@dataclass(frozen=True, slots=True)
class WritePriv:
    addr: Expr
    val: Expr


@dataclass(frozen=True, slots=True)
class ReadPriv:
    x: str
    addr: Expr
    body: "Stmt"


@dataclass(frozen=True, slots=True)
class Lfence:
    pass


@dataclass(frozen=True, slots=True)
class CMov:
    x: str
    val: Expr
    cond: Expr
    body: "Stmt"


@dataclass(frozen=True, slots=True)
class Ret:
    pass


Stmt = Union[Skip, Seq, Let, IfZ, Call, WritePub, ReadPub, WritePriv, ReadPriv, Lfence, CMov, Ret]

SKIP = Skip()
RET = Ret()
LFENCE = Lfence()


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequence of the given statements."""
    if not stmts:
        return SKIP
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def substatements(s: Stmt) -> Iterator[Stmt]:
    """Pre-order walk over every statement node."""
    stack = [s]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Seq):
            stack.append(cur.second)
            stack.append(cur.first)
        elif isinstance(cur, (Let, ReadPub, ReadPriv, CMov)):
            stack.append(cur.body)
        elif isinstance(cur, IfZ):
            stack.append(cur.orelse)
            stack.append(cur.then)


def last_leaf(s: Stmt) -> Stmt:
    while True:
        if isinstance(s, Seq):
            s = s.second
        elif isinstance(s, (Let, ReadPub, ReadPriv, CMov)):
            s = s.body
        else:
            return s


def called_functions(s: Stmt) -> set[str]:
    return {n.f for n in substatements(s) if isinstance(n, Call)}


# ---------------------------------------------------------------------- heaps


class Heap:
    """Sparse, preallocated tainted heap.

    Non-negative addresses default to (0, S), negative ones to (0, U).
    Instances are treated as immutable; ``set`` returns a new heap.
    """

    __slots__ = ("_cells",)

    def __init__(self, cells: Mapping[int, TaintedValue] | None = None):
        self._cells: dict[int, TaintedValue] = dict(cells or {})

    def __getitem__(self, addr: int) -> TaintedValue:
        tv = self._cells.get(addr)
        if tv is not None:
            return tv
        return TaintedValue(0, Taint.S if addr >= 0 else Taint.U)

    def set(self, addr: int, tv: TaintedValue) -> "Heap":
        cells = dict(self._cells)
        cells[addr] = tv
        return Heap(cells)

    def explicit(self) -> dict[int, TaintedValue]:
        return dict(self._cells)

    def addresses(self) -> list[int]:
        return sorted(self._cells)

    def is_valid(self) -> bool:
        return all(tv.taint is Taint.U for a, tv in self._cells.items() if a < 0)

    def merge(self, other: "Heap") -> "Heap":
        overlap = set(self._cells) & set(other._cells)
        if overlap:
            raise HeapOverlap(f"address {min(overlap)} declared twice")
        cells = dict(self._cells)
        cells.update(other._cells)
        return Heap(cells)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Heap) and self._cells == other._cells

    def __hash__(self) -> int:
        return hash(frozenset(self._cells.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{a}: {tv.v}:{tv.taint}" for a, tv in sorted(self._cells.items()))
        return f"Heap({{{inner}}})"


# ------------------------------------------------------------------- programs


@dataclass(frozen=True)
class Function:
    name: str
    param: str
    body: Stmt


@dataclass(frozen=True)
class Component:
    heap: Heap = field(default_factory=Heap)
    funs: tuple[Function, ...] = ()
    imports: tuple[str, ...] = ()

    def fun_names(self) -> list[str]:
        return [f.name for f in self.funs]

    def footprint(self) -> list[int]:
        """Declared private addresses that carry secrets (taint U)."""
        return [a for a, tv in sorted(self.heap.explicit().items()) if a < 0 and tv.taint is Taint.U]


@dataclass(frozen=True)
class Attacker:
    heap: Heap = field(default_factory=Heap)
    funs: tuple[Function, ...] = ()

    def fun_names(self) -> list[str]:
        return [f.name for f in self.funs]


@dataclass(frozen=True)
class WholeProgram:
    heap: Heap
    funs: tuple[Function, ...]
    imports: frozenset[str]

    def lookup(self, name: str) -> Function | None:
        for f in self.funs:
            if f.name == name:
                return f
        return None

    def with_heap(self, heap: Heap) -> "WholeProgram":
        return WholeProgram(heap, self.funs, self.imports)


def check_function(f: Function) -> None:
    rets = [n for n in substatements(f.body) if isinstance(n, Ret)]
    if not isinstance(last_leaf(f.body), Ret) or len(rets) != 1:
        raise InvariantError("ret-final", f"body of {f.name} must end in a single ret")


def check_component(p: Component) -> None:
    names = p.fun_names()
    if len(set(names)) != len(names):
        raise InvariantError("distinct-functions", "component defines a function twice")
    clash = set(names) & set(p.imports)
    if clash:
        raise InvariantError("imports-disjoint", f"{sorted(clash)[0]} is both imported and defined")
    for a, tv in p.heap.explicit().items():
        if a >= 0:
            raise InvariantError("private-heap", f"component declares public address {a}")
    for f in p.funs:
        check_function(f)


def attacker_problems(a: Attacker) -> list[str]:
    problems = []
    for addr in a.heap.addresses():
        if addr < 0:
            problems.append(f"attacker declares private address {addr}")
    names = a.fun_names()
    if len(set(names)) != len(names):
        problems.append("attacker defines a function twice")
    if "main" not in names:
        problems.append("attacker does not define main")
    for f in a.funs:
        for n in substatements(f.body):
            if isinstance(n, (ReadPriv, WritePriv)):
                problems.append(f"{f.name} uses a private heap instruction")
                break
    return problems


def is_valid_attacker(a: Attacker) -> bool:
    return not attacker_problems(a)


def plug(a: Attacker, p: Component) -> WholeProgram:
    """Link attacker ``a`` with component ``p`` into a whole program."""
    problems = attacker_problems(a)
    if problems:
        raise InvalidAttacker(problems[0])
    clash = set(a.fun_names()) & set(p.fun_names())
    if clash:
        raise NotWhole(f"function {sorted(clash)[0]} defined by both sides")
    heap = a.heap.merge(p.heap)
    funs = tuple(a.funs) + tuple(p.funs)
    defined = {f.name for f in funs}
    for name in p.imports:
        if name not in a.fun_names():
            raise NotWhole(f"import {name} not defined by the attacker")
    for f in funs:
        for g in sorted(called_functions(f.body)):
            if g not in defined:
                raise NotWhole(f"missing function {g}")
    return WholeProgram(heap, funs, frozenset(a.fun_names()))


# ------------------------------------------------------------- configurations

Frame = Mapping[str, TaintedValue]


@dataclass(frozen=True, slots=True)
class NSConfig:
    prog: WholeProgram
    heap: Heap
    frames: tuple[Frame, ...]
    fnames: tuple[str, ...]
    stmt: Stmt

    @property
    def fname(self) -> str:
        return self.fnames[-1]

    def in_attacker(self) -> bool:
        return self.fnames[-1] == ENTRY or self.fnames[-1] in self.prog.imports


def initial_state(w: WholeProgram) -> NSConfig:
    return NSConfig(
        prog=w,
        heap=w.heap,
        frames=({"x": TaintedValue(0, Taint.S)},),
        fnames=(ENTRY,),
        stmt=Call("main", Var("x")),
    )
