"""Two-point integrity lattice S <= U and the combinators used by both semantics."""

from __future__ import annotations

from enum import Enum

from .lang import Taint

S = Taint.S
U = Taint.U


class Mode(str, Enum):
    STRONG = "strong"
    WEAK = "weak"

    def __str__(self) -> str:
        return self.value


def join(a: Taint, b: Taint) -> Taint:
    """Data combination: unsafe if either input is."""
    return U if (a is U or b is U) else S


def attenuate(data: Taint, pc: Taint) -> Taint:
    """Taint of an emitted action: unsafe only for unsafe data under speculation."""
    return U if (data is U and pc is U) else S


def leq(a: Taint, b: Taint) -> bool:
    return a is S or b is U


def read_priv_result_taint(mode: Mode, addr_taint: Taint, val_taint: Taint, pc: Taint) -> Taint:
    """Taint bound to the variable of a private read.

    ``val_taint`` is the taint stored with the heap cell. Secrets are stored
    U, so for ordinary private data the strong discipline yields U and the
    weak one yields S exactly when the read is not speculative. Cells that
    hold a safe value (such as a predicate bit) keep it.
    """
    if mode is Mode.STRONG:
        return join(addr_taint, val_taint)
    return join(addr_taint, attenuate(val_taint, pc))
