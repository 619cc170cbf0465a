from fractions import Fraction
from math import comb, factorial, prod

import pytest
from hypothesis import given, settings, strategies as st

from conftest import disk, potentials, targets
from toricfrob.exactalg import DenominatorVanishes, FramingCoords, ONE, laurent_expand, u1, u4, v
from toricfrob.localize import gw_invariant, phi
from toricfrob.potentials import (
    Caps,
    ExpPolySeries,
    PoleStructureViolation,
    build_F0_4fold,
    cubic_coefficient,
    differentiate,
    disk_potential,
    extract_closed,
    extract_disk,
    extract_double_pole,
    extract_pieces,
    integrate_open,
    joint_pole_structure_ok,
    pole_structure_ok,
    restrict_framing,
)

GENERIC = [("c3", 1), ("c3", 2), ("c3", -2), ("conifold", 1), ("conifold", 2), ("conifold", -2)]


def framed_disk(f: int, d: int) -> Fraction:
    """Closed form of the framed C3 disk amplitude at winding d."""
    num = prod(d * (f + 1) - j for j in range(1, d))
    return Fraction((-1) ** (d * f % 2) * num, factorial(d - 1) * d ** 3)


# exact bivariate series in (X, Q), truncated at total X-degree N

N = 2


def _mul(a, b):
    out = {}
    for (i, j), x in a.items():
        for (k, l), y in b.items():
            if i + k <= N:
                out[(i + k, j + l)] = out.get((i + k, j + l), 0) + x * y
    return {k: c for k, c in out.items() if c}


def _log1p(s):
    out, power = {}, {(0, 0): Fraction(1)}
    for k in range(1, N + 1):
        power = _mul(power, s)
        for key, c in power.items():
            out[key] = out.get(key, 0) + Fraction((-1) ** (k + 1), k) * c
    return out


def conifold_mirror_disk():
    """Disk amplitude from 1 + x + y + Q x y = 0 with x = -X (1 + x)^2 at framing 1.

    Lagrange inversion gives x = sum_n (-X)^n C(2n, n-1)/n; the amplitude is
    log(1 + x) - log(1 + Q x) with the X^d coefficient divided by d^2.
    """
    x = {(n, 0): Fraction((-1) ** n * comb(2 * n, n - 1), n) for n in range(1, N + 1)}
    qx = {(i, j + 1): c for (i, j), c in x.items()}
    amp = _log1p(x)
    for key, c in _log1p(qx).items():
        amp[key] = amp.get(key, 0) - c
    return {(j, i): c / i ** 2 for (i, j), c in amp.items() if c}


def test_c3_closed_potential_is_the_classical_cubic():
    X, _, T3, _ = targets("c3", 1)
    F3, _ = potentials("c3", 1)
    assert F3.keys() == [((), (3,), 0)]
    assert F3[((), (3,), 0)] == T3.euler(1).inverse() / 6


def test_conifold_degree_one_coefficient():
    F3, _ = potentials("conifold", 1)
    assert F3.coefficient((1,), (0, 0)) == 1
    assert F3.coefficient((2,), (0, 0)) == Fraction(1, 8)


def test_four_fold_cubic_and_no_cross_terms():
    _, _, _, T4 = targets("conifold", 1)
    _, F4 = potentials("conifold", 1)
    cubic = [(k, c) for k, c in F4.items() if k[2]]
    assert cubic == [(((0, 0), (0, 0), 3), T4.euler(3).inverse() / 6)]
    assert cubic_coefficient(T4) == T4.euler(3).inverse() / 6
    # class 0 carries only the cubic in each fixed-point variable
    for (cls, alpha, k), c in F4.items():
        if not any(cls) and not k:
            assert sorted(alpha) == [0, 3]


@pytest.mark.parametrize("geometry, f", GENERIC)
def test_reassembly_and_oracle_equivalence(geometry, f):
    F3, F4 = potentials(geometry, f)
    pieces, J = disk(geometry, f)
    for key, R in F4.items():
        if not key[2]:
            assert pieces.reassemble(key) == R
    assert pieces.cubic == F4[((0,) * len(F4.keys()[0][0]), (0,) * F4.m, 3)]
    assert (extract_closed(pieces) - F3).is_zero()
    assert all(key[0][-1] > 0 for key in J.keys())
    for name in ("A", "B", "C1", "C2"):
        for R in getattr(pieces, name).values():
            R.assert_u3_free()


@pytest.mark.parametrize("f", [1, 2, 3, -2])
def test_c3_disk_matches_framed_formula(f):
    caps = Caps(0, 3, 0)
    _, _, _, T4 = targets("c3", f)
    J = extract_disk(extract_pieces(build_F0_4fold(T4, caps), f))
    for d in (1, 2, 3):
        assert J.coefficient((d,), (0,)) == framed_disk(f, d)


def test_framed_formula_spot_values():
    assert [framed_disk(1, d) for d in (1, 2, 3)] == [-1, Fraction(3, 8), Fraction(-10, 27)]
    assert [framed_disk(-2, d) for d in (1, 2, 3)] == [1, Fraction(-3, 8), Fraction(10, 27)]


def test_conifold_disk_matches_mirror_curve():
    mirror = conifold_mirror_disk()
    assert mirror == {(0, 1): -1, (0, 2): Fraction(3, 8), (1, 1): 1, (1, 2): Fraction(-1, 2), (2, 2): Fraction(1, 8)}
    _, J = disk("conifold", 1)
    got = {cls: c.constant_value() for (cls, alpha, k), c in J.items() if not any(alpha)}
    assert got == mirror


def test_disk_with_insertions_matches_derivative_structure():
    # F_{0,1} = d/dt^o of the antiderivative; integrate_open undoes it
    _, J = disk("conifold", 1)
    F01 = disk_potential(J)
    for key, c in J.items():
        assert F01[key] == key[0][-1] * c
    assert (integrate_open(F01) - J).is_zero()


def test_differentiate_rates():
    _, F4 = potentials("conifold", 1)
    key = ((1, 1), (0, 0), 0)
    assert differentiate(F4, 3)[key] == -F4[key] / u1
    J = disk("conifold", 1)[1]
    k2 = ((0, 2), (0, 0), 0)
    assert differentiate(J, "o")[k2] == 2 * J[k2]
    F3, _ = potentials("conifold", 1)
    _, _, T3, _ = targets("conifold", 1)
    third = F3.d(1, 1, 1)
    assert third[((0,), (0, 0), 0)] == T3.euler(1).inverse()
    assert F3.d(1, 1, 2)[((0,), (0, 0), 0)] == 0


def test_integrate_open_rejects_degree_zero():
    F = ExpPolySeries("open", 1, {((0,), (1,), 0): ONE})
    with pytest.raises(ValueError):
        integrate_open(F)


def test_integrate_open_divides_by_winding():
    F = ExpPolySeries("open", 1, {((3,), (0,), 0): u1})
    assert integrate_open(F)[((3,), (0,), 0)] == u1 / 3


def test_series_rows_round_trip():
    _, J = disk("conifold", 1)
    assert (ExpPolySeries.from_rows(J.to_rows(), J.m) - J).is_zero()


def test_restriction_reports_nongeneric_framing():
    F3, _ = potentials("conifold", 1)
    with pytest.raises(DenominatorVanishes, match="not generic"):
        restrict_framing(F3, 0)


def test_conifold_framing_minus_one_is_rejected():
    _, F4 = potentials("conifold", -1)
    with pytest.raises(PoleStructureViolation):
        extract_pieces(F4, -1)


# the u4 / v^2 terms of the 4-fold potential

def test_c3_double_v_pole_at_winding_two():
    _, F4 = potentials("c3", 1)
    R = F4[((2,), (0,), 0)]
    Rv = FramingCoords(1).rewrite(R)
    assert Rv.pole_order("v") == 2
    # the v^-2 part carries a factor u4, so it dies on u4 = 0
    lead = laurent_expand(Rv, "v", -2)
    assert lead[0][0] == -2 and lead[0][1].substitute({"u4": 0}).is_zero()
    assert Rv.substitute({"u4": 0}) == Fraction(3, 8) / v
    assert pole_structure_ok(R, 1)
    assert not joint_pole_structure_ok(R, 1)


@pytest.mark.parametrize("geometry, f, bad", [("c3", 1, 5), ("conifold", 1, 20), ("conifold", 2, 35), ("conifold", -2, 35)])
def test_joint_pole_failures_at_generic_framings(geometry, f, bad):
    _, F4 = potentials(geometry, f)
    coeffs = [R for k, R in F4.items() if not k[2]]
    assert all(pole_structure_ok(R, f) for R in coeffs)
    assert sum(not joint_pole_structure_ok(R, f) for R in coeffs) == bad


@pytest.mark.parametrize("geometry, f", [("c3", 0), ("c3", -1), ("conifold", 0)])
def test_joint_pole_structure_at_special_framings(geometry, f):
    # at these framings every coefficient is regular along both divisors
    _, F4 = potentials(geometry, f)
    assert all(joint_pole_structure_ok(R, f) for k, R in F4.items() if not k[2])


def test_double_pole_part_matches_joint_failures():
    _, F4 = potentials("conifold", 1)
    E = extract_double_pole(F4, 1)
    joint_bad = {k for k, R in F4.items() if not k[2] and not joint_pole_structure_ok(R, 1)}
    assert set(E.keys()) == joint_bad


@given(st.sampled_from(GENERIC), st.integers(0, 1))
@settings(max_examples=12, deadline=None)
def test_pieces_restrict_sequentially(case, tdeg):
    geometry, f = case
    caps = Caps(1, 2, tdeg)
    _, _, _, T4 = targets(geometry, f)
    pieces = extract_pieces(build_F0_4fold(T4, caps), f)
    coords = FramingCoords(f)
    for name in ("A", "B", "C1", "C2"):
        for R in getattr(pieces, name).values():
            assert R.pole_order("u4") <= 0
            assert coords.rewrite(R).substitute({"u4": 0}).pole_order("v") <= 0
