from fractions import Fraction
from itertools import permutations, product

import pytest
from hypothesis import given, settings, strategies as st

from conftest import targets
from toricfrob.exactalg import ONE, ZERO, RationalFn, u1, u2, u4
from toricfrob.localize import (
    DIVISOR,
    enumerate_graphs,
    format_invariant_rows,
    gw_invariant,
    phi,
    potential_coefficient,
)


@pytest.mark.parametrize("geometry, f", [("c3", 0), ("c3", 2), ("conifold", 1), ("conifold", -1)])
def test_classical_three_point(geometry, f):
    _, _, T3, T4 = targets(geometry, f)
    for T in (T3, T4):
        for i, j, k in product(range(1, T.m + 1), repeat=3):
            got = gw_invariant(T, T.zero_class(), [phi(i), phi(j), phi(k)])
            want = T.euler(i).inverse() if i == j == k else ZERO
            assert got == want


def test_degree_zero_four_point_vanishes():
    _, _, T3, _ = targets("conifold", 1)
    assert gw_invariant(T3, (0,), [phi(1)] * 4).is_zero()


@pytest.mark.parametrize("d", [1, 2, 3])
def test_conifold_multiple_cover(d):
    _, _, T3, _ = targets("conifold", 1)
    assert gw_invariant(T3, (d,), []) == Fraction(1, d ** 3)


def test_conifold_degree_one_point_insertions():
    _, _, T3, _ = targets("conifold", 1)
    assert gw_invariant(T3, (1,), [phi(1)]) == -ONE / (u1 + u2)
    assert gw_invariant(T3, (1,), [phi(2)]) == ONE / (u1 + u2)


def test_graph_counts():
    _, _, T3, T4 = targets("conifold", 1)
    assert len(enumerate_graphs(T3, (1,), 0)) == 1
    # one double edge plus the two-edge chains centred at p1 and at p2
    assert len(enumerate_graphs(T3, (2,), 0)) == 3
    assert len(enumerate_graphs(T4, (0, 1), 0)) == 1


def test_c3_winding_one_coefficient():
    # single edge over the curve through the extra fixed point
    _, _, _, T4 = targets("c3", 1)
    assert potential_coefficient(T4, (1,), (0,)) == (-u4 - u2) / (u2 * (u2 - u1))


@pytest.mark.parametrize("cls", [(0, 1), (1, 1), (0, 2), (1, 2), (2, 1)])
def test_divisor_equation(cls):
    _, _, _, T4 = targets("conifold", 1)
    for ins in ([phi(1)], [phi(3)], [phi(1), phi(2)]):
        assert gw_invariant(T4, cls, [DIVISOR] + ins) == cls[-1] * gw_invariant(T4, cls, ins)


@pytest.mark.parametrize("f", [0, 1, -1, 2])
def test_closed_comparison(f):
    _, _, T3, T4 = targets("conifold", f)
    for beta, ins in [(1, []), (2, []), (1, [1]), (2, [2]), (1, [1, 2]), (0, [1, 1, 1]), (2, [1, 2, 2])]:
        big = gw_invariant(T4, (beta, 0), [phi(i) for i in ins])
        small = gw_invariant(T3, (beta,), [phi(i) for i in ins])
        assert (u4 * big).substitute({"u4": 0}) == small


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.sampled_from([(0, 1), (1, 1), (1, 0), (0, 2)]))
@settings(max_examples=25, deadline=None)
def test_insertion_permutation_invariance(idx, cls):
    _, _, _, T4 = targets("conifold", 1)
    ins = [phi(i) for i in idx]
    base = gw_invariant(T4, cls, ins)
    for perm in permutations(ins):
        assert gw_invariant(T4, cls, list(perm)) == base


def test_potential_coefficient_divides_by_factorials():
    _, _, T3, _ = targets("conifold", 1)
    assert potential_coefficient(T3, (1,), (2, 0)) == gw_invariant(T3, (1,), [phi(1), phi(1)]) / 2
    assert potential_coefficient(T3, (0,), (3, 0)) == T3.euler(1).inverse() / 6


def test_weight_independence_of_constant_invariants():
    _, _, T3, _ = targets("conifold", 1)
    val = gw_invariant(T3, (2,), [])
    assert val.variables() == set()


def test_invariant_rows_format():
    _, _, T3, _ = targets("conifold", 1)
    rows = format_invariant_rows(T3, [((1,), [phi(1)], gw_invariant(T3, (1,), [phi(1)]))])
    assert rows == ["X\t(1)\t1\t[phi1]\t(-1)/(u2 + u1)"]
    assert RationalFn.parse(rows[0].split("\t")[-1]) == -ONE / (u1 + u2)
