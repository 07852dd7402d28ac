import itertools

import pytest

from spectre_lab.lang import Taint
from spectre_lab.taint import Mode, attenuate, join, leq, read_priv_result_taint

S, U = Taint.S, Taint.U
BOTH = (S, U)


def test_join_table():
    assert join(S, S) is S
    assert join(S, U) is U
    assert join(U, S) is U
    assert join(U, U) is U


def test_attenuate_table():
    assert attenuate(U, U) is U
    assert attenuate(U, S) is S
    assert attenuate(S, U) is S
    assert attenuate(S, S) is S


@pytest.mark.parametrize("a,b,c", list(itertools.product(BOTH, repeat=3)))
def test_join_is_a_semilattice(a, b, c):
    assert join(a, b) is join(b, a)
    assert join(a, join(b, c)) is join(join(a, b), c)
    assert join(a, a) is a
    assert join(S, a) is a
    assert leq(a, join(a, b))


def test_order():
    assert leq(S, U) and leq(S, S) and leq(U, U)
    assert not leq(U, S)


@pytest.mark.parametrize(
    "mode,addr,val,pc,expected",
    [
        (Mode.STRONG, S, U, S, U),
        (Mode.WEAK, S, U, S, S),
        (Mode.WEAK, S, U, U, U),
        (Mode.STRONG, S, S, S, S),
        (Mode.WEAK, U, S, S, U),
        (Mode.WEAK, S, S, U, S),
    ],
)
def test_private_read_result_taint(mode, addr, val, pc, expected):
    assert read_priv_result_taint(mode, addr, val, pc) is expected
