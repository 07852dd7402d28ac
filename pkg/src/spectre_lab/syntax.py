"""Parser and printer for the textual program format."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .lang import (
    Attacker, BinOp, Call, CMov, Component, Expr, Function, Heap, IfZ, InvariantError,
    LangError, Let, Lfence, check_function, Nat, Not, ReadPriv, ReadPub, Ret, Seq, Skip, Stmt, Taint,
    TaintedValue, Var, WholeProgram, WritePriv, WritePub, attacker_problems,
    check_component, plug,
)

KEYWORDS = {
    "component", "attacker", "private", "public", "import", "fn", "skip", "let", "in",
    "if0", "else", "call", "write", "writep", "read", "readp", "lfence", "cmov", "ret",
    "not", "or",
}

_TOKEN = re.compile(
    r"(?P<ws>\s+|//[^\n]*)"
    r"|(?P<int>\d+)"
    r"|(?P<ident>\$?[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>==|[{}();,=+\-*<>:])"
)


class SyntaxError_(LangError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SyntaxError_(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        for i, ch in enumerate(chunk):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, allow_reserved: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved

    # helpers
    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("kw", "sym") and t.text == text

    def error(self, msg: str) -> SyntaxError_:
        t = self.peek()
        return SyntaxError_(msg, t.line, t.col)

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.peek().text or 'end of input'!r}")
        t = self.peek()
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        if t.text.startswith("$") and not self.allow_reserved:
            raise self.error(f"identifier {t.text} uses the reserved '$' prefix")
        self.i += 1
        return t.text

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            self.i += 1
            sign = -1
        t = self.peek()
        if t.kind != "int":
            raise self.error(f"expected integer, found {t.text or 'end of input'!r}")
        self.i += 1
        return sign * int(t.text)

    def nat(self) -> int:
        n = self.integer()
        if n < 0:
            raise self.error("expected a natural number")
        return n

    # top level
    def program(self):
        parts = []
        while self.peek().kind != "eof":
            if self.at("component"):
                parts.append(self.component())
            elif self.at("attacker"):
                parts.append(self.attacker())
            else:
                raise self.error("expected 'component' or 'attacker'")
        if not parts:
            raise self.error("empty program")
        if len(parts) == 1:
            return parts[0]
        comps = [p for p in parts if isinstance(p, Component)]
        atks = [p for p in parts if isinstance(p, Attacker)]
        if len(comps) > 1 or len(atks) != 1:
            raise SyntaxError_("a whole program has one attacker and at most one component", 1, 1)
        return plug(atks[0], comps[0] if comps else Component())

    def heapdecls(self, default: Taint) -> Heap:
        cells = {}
        self.expect("{")
        while not self.at("}"):
            t = self.peek()
            addr = self.integer()
            self.expect("=")
            v = self.nat()
            taint = default
            if self.at(":"):
                self.i += 1
                tt = self.ident()
                if tt not in ("S", "U"):
                    raise self.error("taint annotation must be S or U")
                taint = Taint(tt)
            self.expect(";")
            if addr in cells:
                raise SyntaxError_(f"address {addr} declared twice", t.line, t.col)
            cells[addr] = TaintedValue(v, taint)
        self.expect("}")
        return Heap(cells)

    def component(self) -> Component:
        self.expect("component")
        self.expect("{")
        heap = Heap()
        if self.at("private"):
            self.i += 1
            heap = self.heapdecls(Taint.U)
        imports = []
        while self.at("import"):
            self.i += 1
            imports.append(self.ident())
            self.expect(";")
        funs = []
        while self.at("fn"):
            funs.append(self.function())
        self.expect("}")
        comp = Component(heap, tuple(funs), tuple(imports))
        check_component(comp)
        return comp

    def attacker(self) -> Attacker:
        self.expect("attacker")
        self.expect("{")
        heap = Heap()
        if self.at("public"):
            self.i += 1
            heap = self.heapdecls(Taint.S)
        funs = []
        while self.at("fn"):
            funs.append(self.function())
        self.expect("}")
        atk = Attacker(heap, tuple(funs))
        for f in funs:
            check_function(f)
        problems = attacker_problems(atk)
        if problems:
            raise InvariantError("attacker-validity", problems[0])
        return atk

    def function(self) -> Function:
        self.expect("fn")
        name = self.ident()
        self.expect("(")
        param = self.ident()
        self.expect(")")
        self.expect("{")
        body = self.stmt()
        self.expect("}")
        return Function(name, param, body)

    # statements
    def stmt(self) -> Stmt:
        if self.at("let"):
            self.i += 1
            x = self.ident()
            self.expect("=")
            if self.at("read") or self.at("readp"):
                private = self.peek().text == "readp"
                self.i += 1
                self.expect("(")
                addr = self.expr()
                self.expect(")")
                self.expect("in")
                body = self.stmt()
                return ReadPriv(x, addr, body) if private else ReadPub(x, addr, body)
            e = self.expr()
            self.expect("in")
            return Let(x, e, self.stmt())
        if self.at("cmov"):
            self.i += 1
            x = self.ident()
            self.expect(",")
            val = self.expr()
            self.expect("if0")
            cond = self.expr()
            self.expect("in")
            return CMov(x, val, cond, self.stmt())
        first = self.simple()
        if self.at(";"):
            self.i += 1
            if self.at("}"):
                return first
            return Seq(first, self.stmt())
        return first

    def block(self) -> Stmt:
        self.expect("{")
        s = self.stmt()
        self.expect("}")
        return s

    def simple(self) -> Stmt:
        t = self.peek()
        if self.at("skip"):
            self.i += 1
            return Skip()
        if self.at("ret"):
            self.i += 1
            return Ret()
        if self.at("lfence"):
            self.i += 1
            return Lfence()
        if self.at("if0"):
            self.i += 1
            g = self.expr()
            then = self.block()
            self.expect("else")
            return IfZ(g, then, self.block())
        if self.at("call"):
            self.i += 1
            f = self.ident()
            return Call(f, self.expr())
        if self.at("write") or self.at("writep"):
            private = t.text == "writep"
            self.i += 1
            self.expect("(")
            a = self.expr()
            self.expect(",")
            v = self.expr()
            self.expect(")")
            return WritePriv(a, v) if private else WritePub(a, v)
        raise self.error(f"expected statement, found {t.text or 'end of input'!r}")

    # expressions, loosest binding first
    def expr(self) -> Expr:
        e = self.cmp()
        while self.at("or"):
            self.i += 1
            e = BinOp("or", e, self.cmp())
        return e

    def cmp(self) -> Expr:
        e = self.add()
        while self.at("<") or self.at(">") or self.at("=="):
            op = self.peek().text
            self.i += 1
            e = BinOp(op, e, self.add())
        return e

    def add(self) -> Expr:
        e = self.mul()
        while self.at("+") or self.at("-"):
            op = self.peek().text
            self.i += 1
            e = BinOp(op, e, self.mul())
        return e

    def mul(self) -> Expr:
        e = self.atom()
        while self.at("*"):
            self.i += 1
            e = BinOp("*", e, self.atom())
        return e

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            return Nat(self.nat())
        if self.at("not"):
            self.i += 1
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Not(e)
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            return Var(self.ident())
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")


def parse_program(text: str, allow_reserved: bool = False) -> Component | Attacker | WholeProgram:
    """Parse a component, an attacker, or an attacker plus component (a whole program)."""
    p = _Parser(text, allow_reserved)
    return p.program()


def parse_component(text: str, allow_reserved: bool = False) -> Component:
    prog = parse_program(text, allow_reserved)
    if not isinstance(prog, Component):
        raise InvariantError("expected-component", "text does not define a component")
    return prog


def parse_attacker(text: str) -> Attacker:
    prog = parse_program(text)
    if not isinstance(prog, Attacker):
        raise InvariantError("expected-attacker", "text does not define an attacker")
    return prog


# ------------------------------------------------------------------- printing

_PREC = {"or": 1, "<": 2, ">": 2, "==": 2, "+": 3, "-": 3, "*": 4}


def show_expr(e: Expr, ctx: int = 0) -> str:
    if isinstance(e, Nat):
        return str(e.n)
    if isinstance(e, Var):
        return e.x
    if isinstance(e, Not):
        return f"not({show_expr(e.e)})"
    p = _PREC[e.op]
    # operators are left associative, so the right operand needs a tighter context
    s = f"{show_expr(e.left, p)} {e.op} {show_expr(e.right, p + 1)}"
    return f"({s})" if p < ctx else s


def _stmt_lines(s: Stmt, ind: str) -> list[str]:
    if isinstance(s, Seq):
        head = _stmt_lines(s.first, ind)
        head[-1] += ";"
        return head + _stmt_lines(s.second, ind)
    if isinstance(s, Let):
        return [f"{ind}let {s.x} = {show_expr(s.e)} in"] + _stmt_lines(s.body, ind)
    if isinstance(s, ReadPub):
        return [f"{ind}let {s.x} = read({show_expr(s.addr)}) in"] + _stmt_lines(s.body, ind)
    if isinstance(s, ReadPriv):
        return [f"{ind}let {s.x} = readp({show_expr(s.addr)}) in"] + _stmt_lines(s.body, ind)
    if isinstance(s, CMov):
        return [f"{ind}cmov {s.x}, {show_expr(s.val)} if0 {show_expr(s.cond)} in"] + _stmt_lines(s.body, ind)
    if isinstance(s, IfZ):
        inner = ind + "  "
        return (
            [f"{ind}if0 {show_expr(s.guard)} {{"]
            + _stmt_lines(s.then, inner)
            + [f"{ind}}} else {{"]
            + _stmt_lines(s.orelse, inner)
            + [f"{ind}}}"]
        )
    if isinstance(s, Skip):
        return [f"{ind}skip"]
    if isinstance(s, Ret):
        return [f"{ind}ret"]
    if isinstance(s, Lfence):
        return [f"{ind}lfence"]
    if isinstance(s, Call):
        return [f"{ind}call {s.f} {show_expr(s.arg, 5)}"]
    if isinstance(s, WritePub):
        return [f"{ind}write({show_expr(s.addr)}, {show_expr(s.val)})"]
    if isinstance(s, WritePriv):
        return [f"{ind}writep({show_expr(s.addr)}, {show_expr(s.val)})"]
    raise TypeError(f"not a statement: {s!r}")


def show_stmt(s: Stmt, indent: str = "") -> str:
    return "\n".join(_stmt_lines(s, indent))


def _show_heap(keyword: str, heap: Heap, default: Taint) -> list[str]:
    cells = heap.explicit()
    if not cells:
        return []
    lines = [f"  {keyword} {{"]
    for a in sorted(cells):
        tv = cells[a]
        ann = "" if tv.taint is default else f" : {tv.taint}"
        lines.append(f"    {a} = {tv.v}{ann};")
    lines.append("  }")
    return lines


def _show_fun(f: Function) -> list[str]:
    return [f"  fn {f.name}({f.param}) {{", show_stmt(f.body, "    "), "  }"]


def show_program(p: Component | Attacker) -> str:
    if isinstance(p, Component):
        lines = ["component {"] + _show_heap("private", p.heap, Taint.U)
        lines += [f"  import {name};" for name in p.imports]
    else:
        lines = ["attacker {"] + _show_heap("public", p.heap, Taint.S)
    for f in p.funs:
        lines += _show_fun(f)
    lines.append("}")
    return "\n".join(lines) + "\n"


def normalize(s: Stmt) -> Stmt:
    """Reassociate sequences into the right-nested shape the parser produces.

    Moving a continuation into the body of a binder does not change the
    step count or the observable behaviour, since frames are flat.
    """
    if isinstance(s, Seq):
        first, rest = s.first, normalize(s.second)
        return _append(normalize(first), rest)
    if isinstance(s, Let):
        return Let(s.x, s.e, normalize(s.body))
    if isinstance(s, ReadPub):
        return ReadPub(s.x, s.addr, normalize(s.body))
    if isinstance(s, ReadPriv):
        return ReadPriv(s.x, s.addr, normalize(s.body))
    if isinstance(s, CMov):
        return CMov(s.x, s.val, s.cond, normalize(s.body))
    if isinstance(s, IfZ):
        return IfZ(s.guard, normalize(s.then), normalize(s.orelse))
    return s


def _append(s: Stmt, k: Stmt) -> Stmt:
    # s is already normalized
    if isinstance(s, Seq):
        return Seq(s.first, _append(s.second, k))
    if isinstance(s, Let):
        return Let(s.x, s.e, _append(s.body, k))
    if isinstance(s, ReadPub):
        return ReadPub(s.x, s.addr, _append(s.body, k))
    if isinstance(s, ReadPriv):
        return ReadPriv(s.x, s.addr, _append(s.body, k))
    if isinstance(s, CMov):
        return CMov(s.x, s.val, s.cond, _append(s.body, k))
    return Seq(s, k)
