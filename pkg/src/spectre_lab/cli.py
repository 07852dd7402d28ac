"""Command-line front end: ``spectre-lab <subcommand> ...``."""

from __future__ import annotations

import argparse
import os
import sys

from . import corpus, report
from .backtranslate import rssc_witness
from .hardening import Pass, compile_component, relocate
from .lang import Attacker, Component, LangError, WholeProgram, plug
from .nonspec import DEFAULT_BUDGET, Termination
from .security import (
    PrivDomain, Sem, Verdict, check_robust, check_sni_bounded, check_ss_program, run,
)
from .speculative import DEFAULT_OMEGA
from .syntax import SyntaxError_, parse_program, show_program
from .taint import Mode
from .traces import format_trace

EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _dom(text: str) -> tuple[int, ...]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("expected LO..HI")
    try:
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("bounds must be integers") from None
    if a < 0 or b < a:
        raise argparse.ArgumentTypeError("need 0 <= LO <= HI")
    return tuple(range(a, b + 1))


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _common(p: argparse.ArgumentParser, *, program=True, passes=True) -> None:
    if program:
        p.add_argument("--component", help="corpus id or path of a component")
        p.add_argument("--attacker", help="corpus id or path of an attacker")
        p.add_argument("--whole", help="path of a file holding an attacker (and optionally a component)")
    if passes:
        p.add_argument("--pass", dest="pass_", choices=[x.value for x in Pass], default="id")
    p.add_argument("--omega", type=_positive, default=DEFAULT_OMEGA)
    p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET)
    p.add_argument("--mode", choices=["strong", "weak"], default="strong")
    p.add_argument("--sem", choices=["nonspec", "spec"], default="spec")
    p.add_argument("--format", choices=["text", "structured"], default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="spectre-lab", description="Speculative execution semantics and hardening passes.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    _common(sub.add_parser("run", help="print the trace of a whole program"))
    _common(sub.add_parser("compile", help="print a hardened component"))
    _common(sub.add_parser("check-ss", help="speculative safety of one run"))
    p = sub.add_parser("check-sni", help="bounded speculative non-interference")
    _common(p)
    p.add_argument("--dom", type=_dom, default=(0, 1, 2), help="secret values LO..HI (default 0..2)")
    p = sub.add_parser("check-robust", help="check a component against a set of attackers")
    _common(p)
    p.add_argument("--attackers", help="comma-separated corpus ids or paths (default: corpus attackers)")
    p.add_argument("--property", choices=["ss", "sni"], default="sni")
    p.add_argument("--dom", type=_dom, default=(0, 1, 2))
    _common(sub.add_parser("relate", help="secure-compilation witness for one attacker"))
    p = sub.add_parser("table", help="verdict matrix of every pass over the corpus")
    _common(p, program=False, passes=False)
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--csv", help="also write the matrix as CSV to this path")
    p.add_argument("--figure", help="also render the matrix as an image (PNG, SVG, PDF)")
    sub.add_parser("corpus", help="list bundled programs")
    return ap


# ------------------------------------------------------------------ loading


def _load_component(ref: str | None) -> Component:
    if not ref:
        raise UsageError("--component is required")
    if corpus.resolve_component(ref):
        return corpus.component(ref)
    prog = _parse_file(ref)
    if not isinstance(prog, Component):
        raise UsageError(f"{ref} does not define a component")
    return prog


def _load_attacker(ref: str) -> Attacker:
    if ref in corpus.attacker_ids():
        return corpus.attacker(ref)
    prog = _parse_file(ref)
    if not isinstance(prog, Attacker):
        raise UsageError(f"{ref} does not define an attacker")
    return prog


def _parse_file(path: str):
    if not os.path.exists(path):
        raise UsageError(f"{path}: not a corpus id or readable file")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_program(text)
    except SyntaxError_ as exc:
        raise UsageError(f"{path}:{exc}") from None


def _whole(args) -> WholeProgram:
    if args.whole:
        prog = _parse_file(args.whole)
        if isinstance(prog, Attacker):
            prog = plug(prog, Component())
        if not isinstance(prog, WholeProgram):
            raise UsageError(f"{args.whole} does not define a whole program")
        if args.pass_ != "id":
            raise UsageError("--pass needs --component/--attacker")
        return prog
    if not args.attacker:
        raise UsageError("--attacker (or --whole) is required")
    comp = compile_component(args.pass_, _load_component(args.component))
    return plug(_load_attacker(args.attacker), comp)


def _sem(args) -> Sem:
    return Sem(args.sem, args.omega)


# ----------------------------------------------------------------- printing


def _emit_verdict(args, v: Verdict, header: dict) -> int:
    if args.format == "structured":
        doc = dict(header)
        doc["verdict"] = v.to_dict()
        sys.stdout.write(report.dumps(doc))
    else:
        sys.stdout.write(_verdict_text(v))
    return v.status.exit_code


def _verdict_text(v: Verdict, indent: str = "") -> str:
    out = f"{indent}{v.status}"
    if v.note:
        out += f" ({v.note})"
    out += "\n"
    for name, sub in v.details:
        out += f"{indent}  {name}: " + _verdict_text(sub, indent + "  ").lstrip()
    if v.witness is not None and not v.details:
        w = v.witness
        if w.note:
            out += f"{indent}  {w.note}\n"
        if w.index is not None:
            out += f"{indent}  first difference at action {w.index}\n"
        for k, t in enumerate(w.traces):
            out += f"{indent}  trace {k + 1}:\n"
            for i, a in enumerate(t):
                mark = ">" if i == w.index else " "
                out += f"{indent}   {mark}{a}\n"
    return out


def _header(args, **extra) -> dict:
    doc = {"command": args.cmd, "mode": args.mode, "sem": args.sem, "omega": args.omega, "budget": args.budget}
    doc.update(extra)
    return doc


# ----------------------------------------------------------------- commands


def cmd_run(args) -> int:
    r = run(_whole(args), _sem(args), Mode(args.mode), args.budget)
    if args.format == "structured":
        doc = _header(args, termination=r.termination.value, steps=r.steps,
                      trace=format_trace(r.trace).splitlines())
        sys.stdout.write(report.dumps(doc))
    else:
        sys.stdout.write(format_trace(r.trace))
        if r.termination is not Termination.TERMINATED:
            print(f"-- {r.termination} {r.reason}".rstrip(), file=sys.stderr)
    return 0 if r.termination is Termination.TERMINATED else 2


def cmd_compile(args) -> int:
    comp = compile_component(args.pass_, _load_component(args.component))
    text = show_program(comp)
    if args.format == "structured":
        sys.stdout.write(report.dumps({"command": "compile", "pass": args.pass_, "component": text}))
    else:
        sys.stdout.write(text)
    return 0


def cmd_check_ss(args) -> int:
    v = check_ss_program(_whole(args), _sem(args), Mode(args.mode), args.budget)
    return _emit_verdict(args, v, _header(args, property="ss", pass_=args.pass_))


def cmd_check_sni(args) -> int:
    if args.whole:
        raise UsageError("check-sni needs --component and --attacker to know the secret footprint")
    src = _load_component(args.component)
    w = _whole(args)
    dom = PrivDomain(tuple(relocate(args.pass_, a) for a in src.footprint()), args.dom)
    v = check_sni_bounded(w, dom, _sem(args), Mode(args.mode), args.budget)
    return _emit_verdict(args, v, _header(args, property="sni", pass_=args.pass_, dom=list(args.dom)))


def cmd_check_robust(args) -> int:
    src = _load_component(args.component)
    refs = args.attackers.split(",") if args.attackers else corpus.attacker_ids()
    atks = [_load_attacker(r.strip()) for r in refs]
    dom = PrivDomain(tuple(relocate(args.pass_, a) for a in src.footprint()), args.dom)
    v = check_robust(compile_component(args.pass_, src), atks, args.property, _sem(args),
                     Mode(args.mode), args.budget, dom, names=refs)
    return _emit_verdict(args, v, _header(args, property=args.property, pass_=args.pass_))


def cmd_relate(args) -> int:
    if not args.attacker:
        raise UsageError("--attacker is required")
    v = rssc_witness(_load_component(args.component), _load_attacker(args.attacker), Pass(args.pass_),
                     Mode(args.mode), args.omega, args.budget)
    return _emit_verdict(args, v, _header(args, property="rssc", pass_=args.pass_))


def cmd_table(args) -> int:
    rows = report.compute_table(args.omega, args.budget, args.jobs)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.table_csv(rows))
    if args.figure:
        report.render_table_figure(rows, args.figure)
    if args.format == "structured":
        sys.stdout.write(report.dumps(report.table_dict(rows)))
    else:
        sys.stdout.write(report.table_text(rows))
    return 0 if report.table_matches(rows) else 1


def cmd_corpus(args) -> int:
    print("components:")
    for c in corpus.components():
        alias = f" (also {', '.join(c.aliases)})" if c.aliases else ""
        print(f"  {c.id:<22} {c.title}{alias}")
    print("attackers:")
    for a in corpus.attackers():
        print(f"  {a.id:<22} {a.title}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "compile": cmd_compile,
    "check-ss": cmd_check_ss,
    "check-sni": cmd_check_sni,
    "check-robust": cmd_check_robust,
    "relate": cmd_relate,
    "table": cmd_table,
    "corpus": cmd_corpus,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except (UsageError, LangError) as exc:
        print(f"spectre-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
