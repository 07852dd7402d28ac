"""Executable security checks: speculative safety and speculative non-interference."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .lang import (
    Attacker, Component, InvalidAttacker, Taint, TaintedValue, WholeProgram, attacker_problems,
    plug,
)
from .nonspec import DEFAULT_BUDGET, RunResult, Termination, run_trace
from .speculative import DEFAULT_OMEGA, run_spec_trace
from .taint import Mode
from .traces import Trace, first_divergence, format_trace, nonspec_projection

DEFAULT_VALUES = (0, 1, 2)
ENUMERATION_CAP = 100_000


class Status(str, Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value

    @property
    def exit_code(self) -> int:
        return {Status.HOLDS: 0, Status.VIOLATED: 1, Status.INCONCLUSIVE: 2}[self]


_RANK = {Status.HOLDS: 0, Status.INCONCLUSIVE: 1, Status.VIOLATED: 2}


@dataclass(frozen=True)
class Witness:
    traces: tuple[Trace, ...]
    index: int | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "note": self.note,
            "traces": [format_trace(t).splitlines() for t in self.traces],
        }


@dataclass(frozen=True)
class Verdict:
    status: Status
    witness: Witness | None = None
    details: tuple[tuple[str, "Verdict"], ...] = ()
    note: str = ""

    def __post_init__(self):
        if self.status is Status.VIOLATED and self.witness is None:
            raise ValueError("a violation needs a witness")

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    def to_dict(self) -> dict:
        out: dict = {"status": self.status.value}
        if self.note:
            out["note"] = self.note
        if self.witness is not None:
            out["witness"] = self.witness.to_dict()
        if self.details:
            out["details"] = [{"name": n, "verdict": v.to_dict()} for n, v in self.details]
        return out


def worst(verdicts: Sequence[Verdict]) -> Status:
    status = Status.HOLDS
    for v in verdicts:
        if _RANK[v.status] > _RANK[status]:
            status = v.status
    return status


@dataclass(frozen=True)
class Sem:
    """Which semantics to run: ``nonspec`` or ``spec`` with window ``omega``."""

    kind: str = "spec"
    omega: int = DEFAULT_OMEGA

    def __post_init__(self):
        if self.kind not in ("nonspec", "spec"):
            raise ValueError(f"unknown semantics {self.kind!r}")

    @classmethod
    def nonspec(cls) -> "Sem":
        return cls("nonspec")

    @classmethod
    def spec(cls, omega: int = DEFAULT_OMEGA) -> "Sem":
        return cls("spec", omega)


def run(w: WholeProgram, sem: Sem, mode: Mode, budget: int = DEFAULT_BUDGET) -> RunResult:
    if sem.kind == "nonspec":
        return run_trace(w, mode, budget)
    return run_spec_trace(w, mode, sem.omega, budget)


# ------------------------------------------------------------------------ SS


def check_ss_trace(t: Trace) -> Verdict:
    for i, a in enumerate(t):
        if a.taint is Taint.U:
            return Verdict(Status.VIOLATED, Witness((t,), i, f"unsafe action {a}"))
    return Verdict(Status.HOLDS)


def check_ss_program(w: WholeProgram, sem: Sem, mode: Mode, budget: int = DEFAULT_BUDGET) -> Verdict:
    r = run(w, sem, mode, budget)
    v = check_ss_trace(r.trace)
    if v.status is Status.VIOLATED:
        return v
    if r.termination is not Termination.TERMINATED:
        return Verdict(Status.INCONCLUSIVE, Witness((r.trace,), None, str(r.termination)))
    return v


# ----------------------------------------------------------------------- SNI


class NotLowEquivalent(ValueError):
    pass


class EnumerationTooLarge(ValueError):
    pass


def low_equivalent(w1: WholeProgram, w2: WholeProgram) -> bool:
    """Same code, imports and public heap; private heaps differ only in secret values.

    Explicit private cells must cover the same addresses with the same
    taints, and cells holding a safe (S) value must agree exactly.
    """
    if w1.funs != w2.funs or w1.imports != w2.imports:
        return False
    h1, h2 = w1.heap.explicit(), w2.heap.explicit()
    if set(h1) != set(h2):
        return False
    for addr, tv in h1.items():
        other = h2[addr]
        if addr >= 0 or tv.taint is Taint.S:
            if tv != other:
                return False
        elif other.taint is not Taint.U:
            return False
    return True


def _sni_from_runs(r1: RunResult, r2: RunResult) -> Verdict:
    if nonspec_projection(r1.trace) != nonspec_projection(r2.trace):
        return Verdict(Status.HOLDS, note="projections differ")
    if r1.trace == r2.trace:
        if Termination.TERMINATED == r1.termination == r2.termination:
            return Verdict(Status.HOLDS)
        return Verdict(Status.INCONCLUSIVE, Witness((r1.trace, r2.trace), None, "run did not terminate"))
    i = first_divergence(r1.trace, r2.trace)
    both = Termination.TERMINATED == r1.termination == r2.termination
    if not both and i is not None and i >= min(len(r1.trace), len(r2.trace)):
        # one run is a prefix of the other because it stopped early
        return Verdict(Status.INCONCLUSIVE, Witness((r1.trace, r2.trace), i, "run did not terminate"))
    return Verdict(Status.VIOLATED, Witness((r1.trace, r2.trace), i, "equal projections, different traces"))


def check_sni_pair(
    w1: WholeProgram, w2: WholeProgram, sem: Sem, mode: Mode, budget: int = DEFAULT_BUDGET
) -> Verdict:
    if not low_equivalent(w1, w2):
        raise NotLowEquivalent("programs differ outside their private heaps")
    return _sni_from_runs(run(w1, sem, mode, budget), run(w2, sem, mode, budget))


@dataclass(frozen=True)
class PrivDomain:
    locations: tuple[int, ...]
    values: tuple[int, ...] = DEFAULT_VALUES

    def size(self) -> int:
        return len(self.values) ** len(self.locations)

    def assignments(self):
        """All heaps over the domain, in lexicographic order."""
        for combo in itertools.product(self.values, repeat=len(self.locations)):
            yield dict(zip(self.locations, combo))


def vary(w: WholeProgram, assignment: dict[int, int]) -> WholeProgram:
    heap = w.heap
    for addr, v in assignment.items():
        heap = heap.set(addr, TaintedValue(v, Taint.U))
    return w.with_heap(heap)


def check_sni_bounded(
    w: WholeProgram,
    dom: PrivDomain,
    sem: Sem,
    mode: Mode,
    budget: int = DEFAULT_BUDGET,
    cap: int = ENUMERATION_CAP,
) -> Verdict:
    if any(a >= 0 for a in dom.locations):
        raise ValueError("domain locations must be private (negative)")
    if dom.size() > cap:
        raise EnumerationTooLarge(f"{dom.size()} assignments exceed the cap of {cap}")
    base = run(w, sem, mode, budget)
    inconclusive: Verdict | None = None
    if base.termination is not Termination.TERMINATED:
        return Verdict(Status.INCONCLUSIVE, Witness((base.trace,), None, f"base run {base.termination}"))
    for assignment in dom.assignments():
        other = vary(w, assignment)
        v = _sni_from_runs(base, run(other, sem, mode, budget))
        if v.status is Status.VIOLATED:
            desc = ", ".join(f"{a}={x}" for a, x in sorted(assignment.items()))
            return Verdict(v.status, Witness(v.witness.traces, v.witness.index, f"private heap {desc}: {v.witness.note}"))
        if v.status is Status.INCONCLUSIVE and inconclusive is None:
            inconclusive = v
    return inconclusive or Verdict(Status.HOLDS)


def default_domain(p: Component, values: Sequence[int] = DEFAULT_VALUES) -> PrivDomain:
    return PrivDomain(tuple(p.footprint()), tuple(values))


def check_robust(
    p: Component,
    attackers: Sequence[Attacker],
    prop: str,
    sem: Sem,
    mode: Mode,
    budget: int = DEFAULT_BUDGET,
    dom: PrivDomain | None = None,
    names: Sequence[str] | None = None,
) -> Verdict:
    """Check ``prop`` ('ss' or 'sni') for ``p`` against every supplied attacker."""
    if prop not in ("ss", "sni"):
        raise ValueError(f"unknown property {prop!r}")
    for i, a in enumerate(attackers):
        if attacker_problems(a):
            raise InvalidAttacker(f"attacker {i}: {attacker_problems(a)[0]}")
    if not attackers:
        return Verdict(Status.HOLDS, note="no attackers supplied; vacuous")
    names = list(names) if names is not None else [f"attacker{i}" for i in range(len(attackers))]
    dom = dom if dom is not None else default_domain(p)
    details = []
    for name, a in zip(names, attackers):
        w = plug(a, p)
        if prop == "ss":
            v = check_ss_program(w, sem, mode, budget)
        else:
            v = check_sni_bounded(w, dom, sem, mode, budget)
        details.append((name, v))
    status = worst([v for _, v in details])
    witness = next((v.witness for _, v in details if v.status is status and v.witness), None)
    return Verdict(status, witness if status is not Status.HOLDS else None, tuple(details))
