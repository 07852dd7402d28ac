"""Verdict-table computation and its text, CSV, JSON and figure renderings."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import corpus
from .hardening import compile_component, relocate
from .lang import plug
from .nonspec import DEFAULT_BUDGET
from .security import PrivDomain, Sem, Status, Verdict, check_sni_bounded
from .speculative import DEFAULT_OMEGA
from .taint import Mode

GLYPH = {Status.HOLDS: "●", Status.VIOLATED: "○", Status.INCONCLUSIVE: "?"}
COLUMNS = ((Mode.STRONG, "RSNI(T)"), (Mode.WEAK, "RSNI(T-)"))


@dataclass(frozen=True)
class Cell:
    status: Status
    expected: Status
    component: str | None = None  # first counterexample, if any
    attacker: str | None = None

    @property
    def ok(self) -> bool:
        return self.status is self.expected


@dataclass(frozen=True)
class Row:
    label: str
    pass_: str
    cells: tuple[Cell, ...]  # ordered as COLUMNS


def robust_sni_over_corpus(pass_: str, mode: Mode, values, omega: int, budget: int) -> tuple[Verdict, str | None, str | None]:
    """Bounded SNI of every compiled corpus component against every corpus attacker."""
    inconclusive = None
    for cid in corpus.component_ids():
        p = corpus.component(cid)
        target = compile_component(pass_, p)
        dom = PrivDomain(tuple(relocate(pass_, a) for a in p.footprint()), tuple(values))
        for aid in corpus.attacker_ids():
            v = check_sni_bounded(plug(corpus.attacker(aid), target), dom, Sem.spec(omega), mode, budget)
            if v.status is Status.VIOLATED:
                return v, cid, aid
            if v.status is Status.INCONCLUSIVE and inconclusive is None:
                inconclusive = (v, cid, aid)
    return inconclusive or (Verdict(Status.HOLDS), None, None)


def _cell_job(args) -> Cell:
    pass_, mode, expected, values, omega, budget = args
    v, cid, aid = robust_sni_over_corpus(pass_, mode, values, omega, budget)
    return Cell(v.status, Status(expected), cid, aid)


def compute_table(omega: int = DEFAULT_OMEGA, budget: int = DEFAULT_BUDGET, jobs: int = 1) -> list[Row]:
    rows = corpus.table_rows()
    values = corpus.table_values()
    work = []
    for r in rows:
        for mode, _ in COLUMNS:
            expected = r.strong if mode is Mode.STRONG else r.weak
            work.append((r.pass_, mode, expected, values, omega, budget))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            cells = list(ex.map(_cell_job, work))
    else:
        cells = [_cell_job(w) for w in work]
    out = []
    n = len(COLUMNS)
    for i, r in enumerate(rows):
        out.append(Row(r.label, r.pass_, tuple(cells[i * n:(i + 1) * n])))
    return out


def table_matches(rows: list[Row]) -> bool:
    return all(c.ok for r in rows for c in r.cells)


def table_text(rows: list[Row]) -> str:
    width = max(len(r.label) for r in rows) + 2
    head = "compiler".ljust(width) + "".join(name.ljust(10) for _, name in COLUMNS) + "witness"
    lines = [head]
    for r in rows:
        line = r.label.ljust(width)
        wit = []
        for (mode, _), c in zip(COLUMNS, r.cells):
            mark = GLYPH[c.status] + ("" if c.ok else " !")
            line += mark.ljust(10)
            if c.component:
                wit.append(f"{mode}: {c.component}/{c.attacker}")
        lines.append(line + "; ".join(wit))
    lines.append("")
    lines.append(f"{GLYPH[Status.HOLDS]} all compiled corpus programs satisfy the property; "
                 f"{GLYPH[Status.VIOLATED]} some do not")
    lines.append("matches expected: " + ("yes" if table_matches(rows) else "NO"))
    return "\n".join(lines) + "\n"


def table_dict(rows: list[Row]) -> dict:
    return {
        "columns": [name for _, name in COLUMNS],
        "matches_expected": table_matches(rows),
        "rows": [
            {
                "label": r.label,
                "pass": r.pass_,
                "cells": [
                    {
                        "column": name,
                        "status": c.status.value,
                        "expected": c.expected.value,
                        "component": c.component,
                        "attacker": c.attacker,
                    }
                    for (_, name), c in zip(COLUMNS, r.cells)
                ],
            }
            for r in rows
        ],
    }


def table_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["compiler", "pass", "column", "status", "expected", "component", "attacker"])
    for r in rows:
        for (_, name), c in zip(COLUMNS, r.cells):
            w.writerow([r.label, r.pass_, name, c.status.value, c.expected.value, c.component or "", c.attacker or ""])
    return buf.getvalue()


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_table_figure(rows: list[Row], path: str) -> None:
    """Draw the verdict matrix as a grid of filled/hollow markers."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.2, 0.45 * len(rows) + 1.0))
    for i, r in enumerate(rows):
        y = len(rows) - 1 - i
        for j, c in enumerate(r.cells):
            if c.status is Status.HOLDS:
                ax.scatter(j, y, s=220, color="black")
            elif c.status is Status.VIOLATED:
                ax.scatter(j, y, s=220, facecolors="white", edgecolors="black", linewidths=1.5)
            else:
                ax.text(j, y, "?", ha="center", va="center", fontsize=14)
            if not c.ok:
                ax.scatter(j, y, s=500, facecolors="none", edgecolors="red", linewidths=1.5)
    ax.set_xticks(range(len(COLUMNS)), [name for _, name in COLUMNS])
    ax.set_yticks(range(len(rows)), [r.label for r in reversed(rows)])
    ax.set_xlim(-0.6, len(COLUMNS) - 0.4)
    ax.set_ylim(-0.6, len(rows) - 0.4)
    ax.xaxis.tick_top()
    for side in ("right", "bottom", "left", "top"):
        ax.spines[side].set_visible(False)
    ax.tick_params(length=0)
    fig.tight_layout()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
