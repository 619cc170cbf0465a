import json

import pytest
from hypothesis import given, settings, strategies as st

from toricfrob.exactalg import ZERO, u1, u2, u4
from toricfrob.toric import (
    Brane,
    FanError,
    FanParseError,
    curve_lattice,
    load_fan,
    parse_fan,
    validate_cy3,
)

framings = st.integers(-4, 4)
presets = st.sampled_from(["c3", "conifold"])


def test_preset_cone_counts():
    X, X4 = load_fan("c3", 0)
    assert (len(X.fan.cones), len(X4.fan.cones)) == (1, 2)
    X, X4 = load_fan("conifold", 1)
    assert (len(X.fan.cones), len(X4.fan.cones)) == (2, 3)


def test_sigma0_tilde_is_only_cone_with_new_ray():
    X, X4 = load_fan("conifold", 1)
    R = X.R
    assert X4.sigma0_tilde == (2, 3, R + 1, R + 2)
    assert [c for c in X4.fan.cones if R + 1 in c] == [X4.sigma0_tilde]


def test_c3_euler_class():
    X, _ = load_fan("c3", 0)
    assert X.euler(1) == u1 * u2 * (-u1 - u2)


@given(presets, framings)
@settings(max_examples=20, deadline=None)
def test_sigma0_tilde_flag_weights(geometry, f):
    X, X4 = load_fan(geometry, f)
    R = X.R
    w = X4.fan.weights_at(X4.sigma0_tilde)
    assert w[R + 1] == -u1
    assert w[2] == -f * u1 + u2
    assert w[3] == f * u1 - u2 - u4
    assert w[R + 2] == u1 + u4
    for sigma in X.fan.cones:
        assert X4.fan.tangent_weight(sigma, X4.iota[sigma]) == u4


@given(presets, framings)
@settings(max_examples=20, deadline=None)
def test_weights_sum_to_zero_and_are_antisymmetric(geometry, f):
    X, X4 = load_fan(geometry, f)
    for fan in (X.fan, X4.fan):
        for sigma in fan.cones:
            total = ZERO
            for w in fan.weights_at(sigma).values():
                total = total + w
            assert total.is_zero()
        for tau in fan.compact_curves:
            a, b = fan.facets[tau]
            assert fan.tangent_weight(tau, a) == -fan.tangent_weight(tau, b)


@given(presets, framings)
@settings(max_examples=20, deadline=None)
def test_normal_degrees_sum_to_minus_two(geometry, f):
    X, X4 = load_fan(geometry, f)
    for fan in (X.fan, X4.fan):
        for tau in fan.compact_curves:
            assert sum(a for _, a in fan.normal_degrees(tau)) == -2


@given(presets, framings)
@settings(max_examples=20, deadline=None)
def test_embedded_weights_restrict(geometry, f):
    X, X4 = load_fan(geometry, f)
    for sigma in X.fan.cones:
        for tau in X.fan.facets:
            if set(tau) <= set(sigma):
                lifted = X4.fan.tangent_weight(X4.iota[tau], X4.iota[sigma])
                assert lifted.substitute({"u4": 0}) == X.fan.tangent_weight(tau, sigma)


def test_curve_lattice_rank_and_coordinates():
    _, X4 = load_fan("c3", 0)
    assert curve_lattice(X4).rank == 0
    _, X4 = load_fan("conifold", 1)
    lat = curve_lattice(X4)
    assert lat.rank == 1
    assert lat.curve_coords4[X4.tau0_tilde] == (0, 1)
    assert sorted(lat.curve_coords3.values()) == [(1,)]


def test_fan_file_is_relabelled(tmp_path):
    # conifold with rays permuted and the brane on the same curve
    data = {"rays": [[1, 1, 1], [0, 0, 1], [1, 0, 1], [0, 1, 1]],
            "cones3": [[3, 4, 2], [3, 4, 1]], "brane": {"tau0": [4, 2], "framing": 1}}
    path = tmp_path / "fan.json"
    path.write_text(json.dumps(data))
    X, X4 = load_fan(str(path))
    P, P4 = load_fan("conifold", 1)
    assert X.fan.rays == P.fan.rays
    assert sorted(str(X.euler(i)) for i in (1, 2)) == sorted(str(P.euler(i)) for i in (1, 2))
    assert X4.f == 1


def test_malformed_ray_is_a_parse_error():
    with pytest.raises(FanParseError):
        parse_fan({"rays": [[1, 0], [0, 1, 1], [0, 0, 1]], "cones3": [[1, 2, 3]], "brane": {"tau0": [2, 3]}})
    with pytest.raises(FanParseError):
        parse_fan({"rays": [[1, 0, 1]]})


@pytest.mark.parametrize(
    "rays, cones, tau0, needle",
    [
        ([[1, 0, 1], [0, 1, 1], [0, 0, 2]], [[1, 2, 3]], (2, 3), "Calabi-Yau"),
        ([[1, 0, 1], [0, 1, 1], [-1, -1, 1]], [[1, 2, 3]], (2, 3), "smoothness"),
        ([[1, 0, 1], [0, 1, 1], [0, 0, 1], [1, 1, 1]], [[1, 2, 3], [1, 2, 4]], (1, 2), "compact curve"),
        ([[1, 0, 1], [0, 1, 1], [0, 0, 1]], [[1, 2, 3]], (1, 4), "not a 2-cone"),
    ],
)
def test_validation_itemizes_violations(rays, cones, tau0, needle):
    report = validate_cy3(rays, cones, Brane(tau0, 0))
    assert not report.ok
    assert any(needle in line for line in report.lines())


def test_invalid_fan_raises_fan_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"rays": [[1, 0, 1], [0, 1, 1], [0, 0, 2]], "cones3": [[1, 2, 3]],
                                "brane": {"tau0": [2, 3]}}))
    with pytest.raises(FanError):
        load_fan(str(path))
