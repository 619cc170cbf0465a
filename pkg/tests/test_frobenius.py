from functools import lru_cache
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from conftest import DEFAULT_CAPS, disk, potentials, targets
from toricfrob.exactalg import ONE, DenominatorVanishes, DualScalar, FramingCoords, laurent_expand, u1, u4, v
from toricfrob.frobenius import (
    COMPLETED,
    IDENTITIES,
    build_pairing,
    closed_pairing,
    compatibility_residual,
    epsilon_grading_report,
    flat_unit_residual,
    frob_potential,
    idempotent_lift,
    label,
    nilpotency_report,
    quotient_report,
    seed_scalars,
    structure_constants_fmanifold,
    structure_constants_frobenius,
    unit_search,
    vector_potential,
    verify_associativity,
    verify_completed_quadratic,
    verify_identity_collection,
    verify_symmetry,
    verify_wdvv,
)
from toricfrob.potentials import extract_double_pole

CASES = [("c3", 1), ("c3", 2), ("conifold", 1), ("conifold", 2), ("conifold", -2)]


@lru_cache(maxsize=None)
def h1(geometry, f):
    _, _, T3, _ = targets(geometry, f)
    F3, _ = potentials(geometry, f)
    J = disk(geometry, f)[1]
    h = build_pairing(T3, f)
    P = frob_potential(F3, J, f, DEFAULT_CAPS)
    return P, h, structure_constants_frobenius(P, h, DEFAULT_CAPS)


@lru_cache(maxsize=None)
def h2(geometry, f):
    _, _, T3, T4 = targets(geometry, f)
    F3, _ = potentials(geometry, f)
    J = disk(geometry, f)[1]
    h = build_pairing(T3, f)
    return structure_constants_fmanifold(vector_potential(F3, J, h, f), DEFAULT_CAPS, T4.rank)


@lru_cache(maxsize=None)
def identities(geometry, f):
    _, _, T3, _ = targets(geometry, f)
    F3, _ = potentials(geometry, f)
    J = disk(geometry, f)[1]
    return {r.name: r for r in verify_identity_collection(F3, J, T3, f, DEFAULT_CAPS)}


def test_pairing_values():
    _, _, T3, _ = targets("c3", 1)
    h = build_pairing(T3, 1)
    assert h.entry(1, 1) == -ONE / (2 * u1 ** 3)
    assert h.entry(2, 2) == 1 and h.entry(1, 2) == 0
    assert h.is_invertible()
    assert closed_pairing(T3).entry(1, 1) == T3.euler(1).inverse()


@pytest.mark.parametrize("geometry, f", [("c3", 0), ("c3", -1), ("conifold", 0), ("conifold", -1)])
def test_nongeneric_framing_is_diagnosed(geometry, f):
    _, _, T3, _ = targets(geometry, f)
    with pytest.raises(DenominatorVanishes, match="not generic"):
        build_pairing(T3, f)


def test_cubic_in_t_o_comes_from_the_v_residue():
    # u4 * Res_v (1/Delta^{m+1}) at u4 = 0, times (-u1)^3 / 6, is the cubic -u1/6
    _, _, _, T4 = targets("conifold", 1)
    inv = FramingCoords(1).rewrite(T4.euler(T4.m).inverse())
    res = dict(laurent_expand(inv, "v", -1))[-1]
    assert res == ONE / (u4 * u1 * (u1 + u4))
    assert ((u4 * res).substitute({"u4": 0}) * (-u1) ** 3 / 6) == -u1 / 6
    P, _, _ = h1("conifold", 1)
    assert P.F[((0, 0), (0, 0), 3)] == DualScalar(-u1 / 6)


@pytest.mark.parametrize("geometry, f", CASES)
def test_linear_identities_hold(geometry, f):
    reps = identities(geometry, f)
    for name in ("Ia", "Ic", "IIa", "IIIa"):
        assert reps[name].ok, reps[name].lines()
        assert reps[name].tuples_checked > 0


@pytest.mark.parametrize("f", [1, 2])
def test_quadratic_identities_hold_on_c3(f):
    reps = identities("c3", f)
    assert [reps[n].ok for n in IDENTITIES] == [True] * 7


@pytest.mark.parametrize("f", [1, 2, -2])
def test_printed_quadratic_identities_fail_on_conifold(f):
    reps = identities("conifold", f)
    assert not reps["Ib"].ok and not reps["IIb"].ok and not reps["IIIb"].ok


def test_quadratic_residual_sample():
    reps = identities("conifold", 1)
    first = reps["Ib"].residuals[0]
    assert first[:2] == ((1, 1, 2, 2), ((1, 2), (0, 0), 0))
    assert first[2] == str(ONE / (4 * u1 ** 3))


@pytest.mark.parametrize("geometry, f", CASES)
def test_completed_quadratic_identities(geometry, f):
    _, _, T3, _ = targets(geometry, f)
    F3, F4 = potentials(geometry, f)
    J = disk(geometry, f)[1]
    E = extract_double_pole(F4, f)
    reps = verify_completed_quadratic(F3, J, E, T3, f, DEFAULT_CAPS)
    assert [r.name for r in reps] == list(COMPLETED)
    assert all(r.ok for r in reps), [r.lines() for r in reps]


@pytest.mark.parametrize("geometry, f", CASES)
def test_frobenius_structure(geometry, f):
    P, h, c = h1(geometry, f)
    assert verify_wdvv(P.F, h, c.indices, DEFAULT_CAPS).ok
    assert verify_associativity(c).ok
    assert verify_symmetry(c).ok
    assert epsilon_grading_report(c).ok


@given(st.sampled_from(CASES), st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3)))
@settings(max_examples=30, deadline=None)
def test_pairing_compatibility(case, ijk):
    _, h, c = h1(*case)
    i, j, k = (min(x, c.m + 1) for x in ijk)
    assert compatibility_residual(c, h, i, j, k).is_zero()


@pytest.mark.parametrize("geometry, f", [("c3", 1), ("conifold", 1), ("conifold", 2)])
def test_idempotents_mod_i3(geometry, f):
    _, _, c = h1(geometry, f)
    assert seed_scalars(c)[c.m + 1] == DualScalar(-u1.inverse())
    basis = idempotent_lift(c, 3)
    assert basis.ok, [r.lines() for r in basis.report]
    assert len(basis.xi) == c.m + 1


def test_classical_o_product():
    _, _, c = h1("conifold", 1)
    o = c.m + 1
    assert c.c(o, o, o)[((0, 0), (0, 0), 0)] == DualScalar(-u1)


@pytest.mark.parametrize("geometry, f", [("c3", 1), ("conifold", 1)])
def test_h1_units(geometry, f):
    _, _, c = h1(geometry, f)
    assert flat_unit_residual(c).ok
    search = unit_search(c, 3)
    assert all(search.feasible.values())


@pytest.mark.parametrize("geometry, f", CASES)
def test_fmanifold_nilpotency_and_no_unit(geometry, f):
    c = h2(geometry, f)
    assert nilpotency_report(c).ok
    search = unit_search(c, 3)
    assert search.infeasible_everywhere and search.unit is None


@pytest.mark.parametrize("f", [1, 2])
def test_fmanifold_associative_on_c3(f):
    assert verify_associativity(h2("c3", f)).ok


def test_fmanifold_associativity_fails_on_conifold():
    rep = verify_associativity(h2("conifold", 1))
    assert not rep.ok
    assert rep.residuals[0][2] == "1/2"


@pytest.mark.parametrize("geometry, f", CASES)
def test_fmanifold_quotient(geometry, f):
    _, _, T3, _ = targets(geometry, f)
    F3, _ = potentials(geometry, f)
    J = disk(geometry, f)[1]
    assert quotient_report(h2(geometry, f), F3, J, build_pairing(T3, f), f).ok


def test_labels():
    assert [label(i, 2) for i in (1, 2, 3)] == ["1", "2", "o"]
    assert label(3, 2, open_regime=False) == "3"
