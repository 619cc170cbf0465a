"""Fan combinatorics for a toric CY 3-fold X and the associated 4-fold.

Ray indices are 1-based throughout so that the labels 1, 2, 3, R+1, R+2
used for the brane data can be written literally.  Cones are stored as
sorted tuples of ray indices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path

import flint

from .exactalg import ONE, RationalFn, u1, u2, u4

Cone = tuple[int, ...]


class FanError(ValueError):
    """Invalid fan or brane data.  ``violations`` lists every failed check."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class FanParseError(ValueError):
    pass


def _det(rows) -> int:
    return int(flint.fmpz_mat([list(r) for r in rows]).det())


def _solve(rows, target) -> list[Fraction]:
    """Exact x with sum_k x_k rows[k] = target, rows linearly independent."""
    A = flint.fmpq_mat([list(r) for r in rows])
    # normal equations are exact once target lies in the row span
    x = (A * A.transpose()).solve(A * flint.fmpq_mat([[c] for c in target]))
    out = [Fraction(int(x[k, 0].p), int(x[k, 0].q)) for k in range(len(rows))]
    check = [sum(out[k] * rows[k][j] for k in range(len(rows))) for j in range(len(target))]
    if check != [Fraction(c) for c in target]:
        raise FanError([f"{list(target)} is outside the span of {rows}"])
    return out


def _character(w: list[Fraction]) -> RationalFn:
    """Linear form in u1, u2, (u3 dropped), u4 from a dual vector."""
    out = w[0] * u1 + w[1] * u2
    if len(w) == 4:
        out = out + w[3] * u4
    return out


@dataclass(frozen=True)
class Brane:
    tau0: tuple[int, int]
    framing: int = 0


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        if self.ok:
            return ["valid"]
        return [f"violation: {v}" for v in self.violations]


class SmoothFan:
    """A smooth simplicial fan given by its maximal cones.

    ``rays[i - 1]`` is the generator with index i.  Maximal cones keep their
    input order; that order fixes the fixed-point numbering.
    """

    def __init__(self, rays, cones):
        self.rays: tuple[tuple[int, ...], ...] = tuple(tuple(int(c) for c in r) for r in rays)
        self.cones: tuple[Cone, ...] = tuple(tuple(sorted(c)) for c in cones)
        self.dim = len(self.rays[0]) if self.rays else 0

    def ray(self, i: int) -> tuple[int, ...]:
        return self.rays[i - 1]

    @cached_property
    def facets(self) -> dict[Cone, list[Cone]]:
        out: dict[Cone, list[Cone]] = {}
        for sigma in self.cones:
            for tau in combinations(sigma, self.dim - 1):
                out.setdefault(tau, []).append(sigma)
        return out

    @cached_property
    def compact_curves(self) -> tuple[Cone, ...]:
        """Codimension-one cones bordering two maximal cones, sorted."""
        return tuple(sorted(t for t, cs in self.facets.items() if len(cs) == 2))

    def other_cone(self, tau: Cone, sigma: Cone) -> Cone:
        cs = self.facets[tau]
        if len(cs) != 2:
            raise ValueError(f"{tau} is not a compact curve")
        return cs[1] if cs[0] == sigma else cs[0]

    def _dual_basis(self, sigma: Cone) -> dict[int, list[Fraction]]:
        """For each ray i of sigma the dual vector w_i with <w_i, b_j> = delta_ij."""
        B = flint.fmpq_mat([list(self.ray(i)) for i in sigma])
        inv = B.inv()
        n = self.dim
        return {
            i: [Fraction(int(inv[r, k].p), int(inv[r, k].q)) for r in range(n)]
            for k, i in enumerate(sigma)
        }

    @cached_property
    def _weights(self) -> dict[Cone, dict[int, RationalFn]]:
        return {
            sigma: {i: _character(w) for i, w in self._dual_basis(sigma).items()}
            for sigma in self.cones
        }

    def tangent_weight(self, tau: Cone, sigma: Cone) -> RationalFn:
        """Weight of the flag (tau, sigma): the tangent line along the curve V(tau) at p_sigma."""
        tau = tuple(sorted(tau))
        sigma = tuple(sorted(sigma))
        extra = set(sigma) - set(tau)
        if len(extra) != 1 or not set(tau) <= set(sigma):
            raise ValueError(f"{tau} is not a facet of {sigma}")
        return self._weights[sigma][extra.pop()]

    def weights_at(self, sigma: Cone) -> dict[int, RationalFn]:
        """Map ray i of sigma to the weight of the flag (sigma minus i, sigma)."""
        return self._weights[tuple(sorted(sigma))]

    def euler(self, sigma: Cone) -> RationalFn:
        out = ONE
        for w in self.weights_at(sigma).values():
            out = out * w
        return out

    def wall_relation(self, tau: Cone) -> dict[int, int]:
        """Coefficients c_i with sum c_i b_i = 0 and c = 1 on the two outer rays."""
        sigma, sigma2 = self.facets[tau]
        (a,) = set(sigma) - set(tau)
        (b,) = set(sigma2) - set(tau)
        rhs = [-(x + y) for x, y in zip(self.ray(a), self.ray(b))]
        coeffs = _solve([self.ray(j) for j in tau], rhs)
        out = {a: 1, b: 1}
        for j, c in zip(tau, coeffs):
            if c.denominator != 1:
                raise FanError([f"wall relation of {tau} is not integral"])
            out[j] = int(c)
        return out

    def normal_degrees(self, tau: Cone) -> list[tuple[int, int]]:
        """Pairs (ray j of tau, degree a_j) of the normal line-bundle summands."""
        rel = self.wall_relation(tau)
        return [(j, rel[j]) for j in tau]


@dataclass(frozen=True)
class Fan3:
    fan: SmoothFan
    brane: Brane

    @property
    def R(self) -> int:
        return len(self.fan.rays)

    @property
    def m(self) -> int:
        return len(self.fan.cones)

    @property
    def sigma0(self) -> Cone:
        return self.fan.facets[tuple(sorted(self.brane.tau0))][0]

    @property
    def points(self) -> tuple[Cone, ...]:
        return self.fan.cones

    def euler(self, i: int) -> RationalFn:
        return self.fan.euler(self.points[i - 1])


@dataclass(frozen=True)
class Fan4:
    """The 4-fold: rays (b_i, 0), b_{R+1} = (-1, -f, 1, 1), b_{R+2} = (0, 0, 1, 1)."""

    base: Fan3
    fan: SmoothFan
    iota: dict = field(hash=False, compare=False)

    @property
    def f(self) -> int:
        return self.base.brane.framing

    @property
    def R(self) -> int:
        return self.base.R

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def sigma0_tilde(self) -> Cone:
        R = self.R
        return (2, 3, R + 1, R + 2)

    @property
    def points(self) -> tuple[Cone, ...]:
        """p~_1..p~_m in base order, then p~_{m+1} for sigma~_0."""
        return self.fan.cones

    def euler(self, i: int) -> RationalFn:
        return self.fan.euler(self.points[i - 1])

    @property
    def tau0_tilde(self) -> Cone:
        return (2, 3, self.R + 2)


def validate_cy3(rays, cones3, brane: Brane) -> ValidationReport:
    """Check the CY condition, smoothness, adjacency and the brane position."""
    bad: list[str] = []
    rays = [tuple(r) for r in rays]
    R = len(rays)
    for k, r in enumerate(rays, 1):
        if len(r) != 3:
            bad.append(f"ray {k} has {len(r)} components")
        elif r[2] != 1:
            bad.append(f"Calabi-Yau: ray {k} = {r} has third coordinate {r[2]}")
    if bad:
        return ValidationReport(tuple(bad))
    if len(set(rays)) != R:
        bad.append("duplicate rays")
    cones = []
    for c in cones3:
        c = tuple(c)
        if len(c) != 3 or len(set(c)) != 3 or any(not 1 <= i <= R for i in c):
            bad.append(f"cone {list(c)} is not a triple of distinct ray indices")
            continue
        cones.append(tuple(sorted(c)))
        d = _det([rays[i - 1] for i in c])
        if abs(d) != 1:
            bad.append(f"smoothness: cone {list(c)} has determinant {d}")
    if not cones:
        bad.append("no 3-cones")
    if len(set(cones)) != len(cones):
        bad.append("duplicate 3-cones")
    if bad:
        return ValidationReport(tuple(bad))
    used = {i for c in cones for i in c}
    for i in range(1, R + 1):
        if i not in used:
            bad.append(f"ray {i} lies in no 3-cone")
    fan = SmoothFan(rays, cones)
    for tau, cs in fan.facets.items():
        if len(cs) > 2:
            bad.append(f"2-cone {list(tau)} borders {len(cs)} 3-cones")
        elif len(cs) == 2:
            # the two cones must lie on opposite sides of the wall
            (a,) = set(cs[0]) - set(tau)
            (b,) = set(cs[1]) - set(tau)
            da = _det([rays[j - 1] for j in tau] + [rays[a - 1]])
            db = _det([rays[j - 1] for j in tau] + [rays[b - 1]])
            if da * db >= 0:
                bad.append(f"3-cones {list(cs[0])} and {list(cs[1])} overlap")
    tau0 = tuple(sorted(brane.tau0))
    if tau0 not in fan.facets:
        bad.append(f"tau0 {list(brane.tau0)} is not a 2-cone of the fan")
    elif len(fan.facets[tau0]) != 1:
        bad.append(f"outer brane: tau0 {list(brane.tau0)} is a compact curve")
    return ValidationReport(tuple(bad))


def _relabel(rays, cones3, brane: Brane):
    """Reorder rays and change N-basis so tau0 = {2,3}, sigma0 = {1,2,3} in standard position."""
    rays = [tuple(r) for r in rays]
    fan = SmoothFan(rays, cones3)
    tau0 = tuple(sorted(brane.tau0))
    (sigma0,) = fan.facets[tau0]
    (first,) = set(sigma0) - set(tau0)
    a, b = brane.tau0
    if _det([rays[first - 1], rays[a - 1], rays[b - 1]]) < 0:
        a, b = b, a
    order = [first, a, b] + [i for i in range(1, len(rays) + 1) if i not in (first, a, b)]
    new_index = {old: new for new, old in enumerate(order, 1)}
    B = flint.fmpz_mat([list(rays[i - 1]) for i in (first, a, b)]).transpose()
    target = flint.fmpz_mat([[1, 0, 0], [0, 1, 0], [1, 1, 1]])
    G = target * flint.fmpq_mat(B).inv()
    new_rays = []
    for old in order:
        col = G * flint.fmpq_mat([[c] for c in rays[old - 1]])
        new_rays.append(tuple(int(col[k, 0]) for k in range(3)))
    new_cones = [tuple(sorted(new_index[i] for i in c)) for c in cones3]
    return new_rays, new_cones, Brane((2, 3), brane.framing)


def build_3fold(rays, cones3, brane: Brane) -> Fan3:
    report = validate_cy3(rays, cones3, brane)
    if not report.ok:
        raise FanError(list(report.violations))
    new_rays, new_cones, new_brane = _relabel(rays, cones3, brane)
    bad = [f"outer brane: ray {k} = {r} has m_i < 0" for k, r in enumerate(new_rays, 1) if r[0] < 0]
    if bad:
        raise FanError(bad)
    return Fan3(SmoothFan(new_rays, new_cones), new_brane)


def build_4fold(X: Fan3) -> Fan4:
    f = X.brane.framing
    R = X.R
    rays = [r + (0,) for r in X.fan.rays] + [(-1, -f, 1, 1), (0, 0, 1, 1)]
    iota = {sigma: sigma + (R + 2,) for sigma in X.fan.cones}
    cones = list(iota.values()) + [(2, 3, R + 1, R + 2)]
    fan = SmoothFan(rays, cones)
    for tau in X.fan.facets:
        iota[tau] = tau + (R + 2,)
    return Fan4(X, fan, iota)


# curve classes

@dataclass(frozen=True)
class CurveClassLattice:
    """Coordinates (beta, d) of curve classes.

    ``generators`` are compact curves of X whose pairing vectors form the
    basis of E(X); the last coordinate counts l_{iota(tau0)}.
    """

    generators: tuple[Cone, ...]
    curve_coords3: dict = field(hash=False, compare=False)
    curve_coords4: dict = field(hash=False, compare=False)
    pairings4: dict = field(hash=False, compare=False)

    @property
    def rank(self) -> int:
        return len(self.generators)

    def divisor_pairing(self, cls: tuple[int, ...], ray: int) -> int:
        total = 0
        for g, c in zip(self.generators + ("tau0",), cls):
            if c:
                total += c * self.pairings4[g].get(ray, 0)
        return total


def curve_lattice(X4: Fan4) -> CurveClassLattice:
    X = X4.base
    R = X.R
    curves = X.fan.compact_curves
    vecs = {}
    for tau in curves:
        rel = X.fan.wall_relation(tau)
        vecs[tau] = [rel.get(i, 0) for i in range(1, R + 1)]
    gens: list[Cone] = []
    for tau in curves:
        trial = gens + [tau]
        M = flint.fmpq_mat([vecs[t] for t in trial])
        if M.rank() == len(trial):
            gens.append(tau)
    coords3: dict[Cone, tuple[int, ...]] = {}
    for tau in curves:
        if gens:
            x = _solve([vecs[g] for g in gens], vecs[tau])
        else:
            x = []
        if any(c.denominator != 1 or c < 0 for c in x):
            raise FanError([f"curve {list(tau)} is not a nonnegative integral combination of the chosen generators"])
        coords3[tau] = tuple(int(c) for c in x)
    r = len(gens)
    coords4 = {X4.iota[tau]: coords3[tau] + (0,) for tau in curves}
    coords4[X4.tau0_tilde] = (0,) * r + (1,)
    pair4 = {}
    for g in gens:
        rel = X4.fan.wall_relation(X4.iota[g])
        pair4[g] = rel
    pair4["tau0"] = X4.fan.wall_relation(X4.tau0_tilde)
    if set(coords4) != set(X4.fan.compact_curves):
        raise FanError(["unexpected compact curves in the 4-fold"])
    return CurveClassLattice(tuple(gens), coords3, coords4, pair4)


# presets and file input

PRESETS = {
    "c3": {"rays": [[1, 0, 1], [0, 1, 1], [0, 0, 1]], "cones3": [[1, 2, 3]], "tau0": [2, 3]},
    "conifold": {
        "rays": [[1, 0, 1], [0, 1, 1], [0, 0, 1], [1, 1, 1]],
        "cones3": [[1, 2, 3], [1, 2, 4]],
        "tau0": [2, 3],
    },
}


def parse_fan(data: dict, framing: int | None = None):
    """Validate the raw JSON structure and return (rays, cones3, Brane)."""
    try:
        rays = data["rays"]
        cones = data["cones3"]
        brane = data["brane"]
        tau0 = brane["tau0"]
    except (KeyError, TypeError) as exc:
        raise FanParseError(f"missing field {exc}") from None
    if not isinstance(rays, list) or not all(isinstance(r, list) for r in rays):
        raise FanParseError("rays must be a list of integer triples")
    for k, r in enumerate(rays, 1):
        if len(r) != 3 or not all(isinstance(c, int) and not isinstance(c, bool) for c in r):
            raise FanParseError(f"ray {k} must have exactly three integer components, got {r}")
    for c in cones:
        if not isinstance(c, list) or len(c) != 3 or not all(isinstance(i, int) for i in c):
            raise FanParseError(f"cone {c} must be a triple of integer indices")
    if not isinstance(tau0, list) or len(tau0) != 2:
        raise FanParseError("brane.tau0 must be a pair of indices")
    f = brane.get("framing", 0) if framing is None else framing
    if not isinstance(f, int):
        raise FanParseError("framing must be an integer")
    return rays, cones, Brane((int(tau0[0]), int(tau0[1])), int(f))


def load_fan(source: str, framing: int | None = None) -> tuple[Fan3, Fan4]:
    """Build (Fan3, Fan4) from a preset name or a JSON file path."""
    if source in PRESETS:
        p = PRESETS[source]
        data = {"rays": p["rays"], "cones3": p["cones3"], "brane": {"tau0": p["tau0"], "framing": framing or 0}}
    else:
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise FanParseError(f"cannot read fan file {source}: {exc}") from None
    rays, cones, brane = parse_fan(data, framing)
    X = build_3fold(rays, cones, brane)
    return X, build_4fold(X)
