"""WDVV checks, the open identity collection, and the two tangent-bundle algebras.

Indices are integers 1..m for the closed directions and m+1 for the
distinguished direction (t^{m+1} on the 4-fold, t^o in the open regimes);
``label`` prints m+1 as "o" where that is the meaning.

* H1: dual-number potential F = -(u1/6)(t^o)^3 + F0X|_f + eps * intF01 with the
  diagonal pairing h, product (X * Y, Z) = d^3 F.
* H2: vector potential (F^1..F^m, F^o) at t^o = 0, product c_ij^k = d_i d_j F^k.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable

from .exactalg import ONE, ZERO, DenominatorVanishes, DualScalar, RationalFn, u1
from .localize import Target
from .potentials import (
    Caps,
    ExpPolySeries,
    closed_as_open,
    disk_potential,
    freeze_open,
    restrict_framing,
)

IDENTITIES = ("Ia", "Ib", "Ic", "IIa", "IIb", "IIIa", "IIIb")


class StructureFailure(ArithmeticError):
    """A linearized idempotent equation could not be solved."""


def _is_zero(c) -> bool:
    return c.is_zero()


def _unit(c) -> bool:
    """Invertible as a coefficient: nonzero, and for dual scalars a nonzero real part."""
    if isinstance(c, DualScalar):
        return not c.re.is_zero()
    return not c.is_zero()


def _fmt(c) -> str:
    if isinstance(c, DualScalar):
        return f"{c.re} | eps {c.eps}"
    return str(c)


def novikov_degree(cls: tuple[int, ...]) -> int:
    return sum(cls)


def _zero_key(F: ExpPolySeries, rank: int):
    return ((0,) * rank, (0,) * F.m, 0)


def _rank(F: ExpPolySeries) -> int:
    for cls, _, _ in F.terms:
        return len(cls)
    raise ValueError("cannot infer the class rank of an empty series")


def constant_series(regime: str, m: int, rank: int, value, caps: Caps | None = None) -> ExpPolySeries:
    return ExpPolySeries(regime, m, {((0,) * rank, (0,) * m, 0): value}, caps)


# pairing

@dataclass(frozen=True)
class PairingMatrix:
    """Diagonal pairing on indices 1..N; ``diag[i]`` is the entry h_ii."""

    diag: dict

    @property
    def indices(self) -> list[int]:
        return sorted(self.diag)

    def entry(self, i: int, j: int) -> RationalFn:
        return self.diag[i] if i == j else ZERO

    def inverse(self, i: int) -> RationalFn:
        return self.diag[i].inverse()

    def is_invertible(self) -> bool:
        return all(not h.is_zero() for h in self.diag.values())


def closed_pairing(T: Target) -> PairingMatrix:
    """g_ii = 1/Delta^i on every fixed point of T (unrestricted weights)."""
    return PairingMatrix({i: T.euler(i).inverse() for i in range(1, len(T.points) + 1)})


def build_pairing(T3: Target, f: int) -> PairingMatrix:
    """h_ii = g_ii at u2 = f*u1 for i <= m, h_oo = 1, h_io = 0."""
    diag = {}
    for i in range(1, T3.m + 1):
        try:
            diag[i] = T3.euler(i).inverse().substitute({"u2": f * u1})
        except DenominatorVanishes as exc:
            raise DenominatorVanishes(
                f"pairing entry h_{i}{i}: {exc}; the framing f={f} is not generic "
                f"(Delta^{i} must stay nonzero at u2 = f*u1)",
                exc.fn,
            ) from None
    diag[T3.m + 1] = ONE
    return PairingMatrix(diag)


# reports

@dataclass
class IdentityReport:
    """Residuals of one identity family over all index tuples it was checked on."""

    name: str
    tuples_checked: int = 0
    residuals: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.residuals

    def add(self, idx: tuple, R: ExpPolySeries):
        self.tuples_checked += 1
        for key, c in R.items():
            self.residuals.append((idx, key, _fmt(c)))

    def lines(self, samples: int = 3) -> list[str]:
        status = "pass" if self.ok else "FAIL"
        out = [f"{self.name}: {status} ({self.tuples_checked} index tuples, {len(self.residuals)} nonzero residuals)"]
        for idx, key, val in self.residuals[:samples]:
            out.append(f"  residual {idx} {key}: {val}")
        return out


class _Derivs:
    """Memoized partial derivatives of a series (derivatives commute, so keys are sorted)."""

    def __init__(self, F: ExpPolySeries):
        self.F = F
        self.cache: dict[tuple, ExpPolySeries] = {(): F}

    def __call__(self, *idx) -> ExpPolySeries:
        key = tuple(sorted(idx))
        if key not in self.cache:
            self.cache[key] = self(*key[:-1]).differentiate(key[-1])
        return self.cache[key]


class _Contractor:
    """Sum over nu of dA(a, nu) * ginv_nu * dB(nu, b), memoized on the unordered pair."""

    def __init__(self, A: _Derivs, B: _Derivs, ginv: dict, nus: list[int], caps: Caps):
        self.A, self.B, self.ginv, self.nus, self.caps = A, B, ginv, nus, caps
        self.cache: dict = {}

    def __call__(self, a: tuple, b: tuple) -> ExpPolySeries:
        key = (tuple(sorted(a)), tuple(sorted(b)))
        if key not in self.cache:
            F = self.A.F
            out = ExpPolySeries(F.regime, F.m, {}, self.caps)
            for nu in self.nus:
                x = self.A(*a, nu)
                y = self.B(nu, *b)
                if x.is_zero() or y.is_zero():
                    continue
                out = out + x.mul(y, self.caps).scale(self.ginv[nu])
            self.cache[key] = out
        return self.cache[key]


def verify_wdvv(F: ExpPolySeries, pairing: PairingMatrix, indices: list[int], caps: Caps, name: str = "WDVV") -> IdentityReport:
    """d_i d_j d_nu F g^{nu nu} d_nu d_k d_l F is symmetric under i <-> k, for all quadruples."""
    D = _Derivs(F)
    ginv = {nu: pairing.inverse(nu) for nu in indices}
    P = _Contractor(D, D, ginv, indices, caps)
    report = IdentityReport(name)
    for i, j, k, l in product(indices, repeat=4):
        report.add((i, j, k, l), (P((i, j), (k, l)) - P((j, k), (i, l))).truncate(caps))
    return report


def verify_identity_collection(
    F0X: ExpPolySeries, intF01: ExpPolySeries, T3: Target, f: int, caps: Caps
) -> list[IdentityReport]:
    """The seven identities coupling F0X and intF01; nu runs over 1..m throughout."""
    m = F0X.m
    o = m + 1
    closed = list(range(1, m + 1))
    h = build_pairing(T3, f)
    g = closed_pairing(T3)
    hinv = {nu: h.inverse(nu) for nu in closed}
    ginv = {nu: g.inverse(nu) for nu in closed}
    G = _Derivs(closed_as_open(restrict_framing(F0X, f)))
    J = _Derivs(intF01)
    X = _Derivs(F0X)
    GJ = _Contractor(G, J, hinv, closed, caps)
    JG = _Contractor(J, G, hinv, closed, caps)
    JJ = _Contractor(J, J, hinv, closed, caps)
    XX = _Contractor(X, X, ginv, closed, caps)
    reports = {name: IdentityReport(name) for name in IDENTITIES}

    for i, j, k, l in product(closed, repeat=4):
        lhs = GJ((i, j), (k, l)) + JG((i, j), (k, l))
        rhs = GJ((j, k), (i, l)) + JG((j, k), (i, l))
        reports["Ia"].add((i, j, k, l), (lhs - rhs).truncate(caps))
        reports["Ib"].add((i, j, k, l), (JJ((i, j), (k, l)) - JJ((j, k), (i, l))).truncate(caps))
        reports["Ic"].add((i, j, k, l), (XX((i, j), (k, l)) - XX((j, k), (i, l))).truncate(caps))
    for i, j, k in product(closed, repeat=3):
        reports["IIa"].add((i, j, k), (GJ((i, j), (k, o)) - GJ((j, k), (i, o))).truncate(caps))
        reports["IIb"].add((i, j, k), (JJ((i, j), (k, o)) - JJ((j, k), (i, o))).truncate(caps))
    for i, j in product(closed, repeat=2):
        inhom = J(i, j, o).scale(u1)
        reports["IIIa"].add((i, j), (GJ((i, j), (o, o)) - inhom).truncate(caps))
        reports["IIIb"].add((i, j), (JJ((i, j), (o, o)) - JJ((j, o), (i, o))).truncate(caps))
    return [reports[name] for name in IDENTITIES]


COMPLETED = ("Ib+E", "IIb+E", "IIIb+E")


def verify_completed_quadratic(
    F0X: ExpPolySeries, intF01: ExpPolySeries, E: ExpPolySeries, T3: Target, f: int, caps: Caps
) -> list[IdentityReport]:
    """The quadratic identities with the cross terms that the u4 * v^{-2} part E contributes.

    Reading the u4 * v^{-2} coefficient of the 4-fold WDVV equation gives
      Ib+E:   JJ + GE + EG symmetric under i <-> k,
      IIb+E:  JJ + GE symmetric under i <-> k with l = o,
      IIIb+E: J_ij^nu h J_nu oo + G_ij^nu h E_nu oo - u1 E_ijo = J_jo^nu h J_nu io.
    With E = 0 these are the printed quadratic identities.
    """
    m = F0X.m
    o = m + 1
    closed = list(range(1, m + 1))
    h = build_pairing(T3, f)
    hinv = {nu: h.inverse(nu) for nu in closed}
    G = _Derivs(closed_as_open(restrict_framing(F0X, f)))
    J = _Derivs(intF01)
    Ed = _Derivs(E)
    JJ = _Contractor(J, J, hinv, closed, caps)
    GE = _Contractor(G, Ed, hinv, closed, caps)
    EG = _Contractor(Ed, G, hinv, closed, caps)
    reports = {name: IdentityReport(name) for name in COMPLETED}
    for i, j, k, l in product(closed, repeat=4):
        lhs = JJ((i, j), (k, l)) + GE((i, j), (k, l)) + EG((i, j), (k, l))
        rhs = JJ((j, k), (i, l)) + GE((j, k), (i, l)) + EG((j, k), (i, l))
        reports["Ib+E"].add((i, j, k, l), (lhs - rhs).truncate(caps))
    for i, j, k in product(closed, repeat=3):
        lhs = JJ((i, j), (k, o)) + GE((i, j), (k, o))
        rhs = JJ((j, k), (i, o)) + GE((j, k), (i, o))
        reports["IIb+E"].add((i, j, k), (lhs - rhs).truncate(caps))
    for i, j in product(closed, repeat=2):
        lhs = JJ((i, j), (o, o)) + GE((i, j), (o, o)) - Ed(i, j, o).scale(u1)
        reports["IIIb+E"].add((i, j), (lhs - JJ((j, o), (i, o))).truncate(caps))
    return [reports[name] for name in COMPLETED]


# H1: the dual-number Frobenius potential

@dataclass
class FrobPotential:
    F: ExpPolySeries
    framing: int

    @property
    def m(self) -> int:
        return self.F.m


def frob_potential(F0X: ExpPolySeries, intF01: ExpPolySeries, f: int, caps: Caps | None = None) -> FrobPotential:
    """-(u1/6)(t^o)^3 + F0X|_{u2=f*u1} + eps * intF01 over dual scalars."""
    G = closed_as_open(restrict_framing(F0X, f))
    rank = _rank(G) if G.terms else _rank(intF01)
    terms: dict = {}
    for key, c in G.items():
        terms[key] = DualScalar(c, 0)
    for key, c in intF01.items():
        if key[0][-1] == 0:
            raise ValueError(f"disk antiderivative has a winding-degree-0 term at {key}")
        prev = terms.get(key, DualScalar())
        terms[key] = prev + DualScalar(0, c)
    cubic = ((0,) * rank, (0,) * F0X.m, 3)
    terms[cubic] = terms.get(cubic, DualScalar()) + DualScalar(-u1 / 6, 0)
    return FrobPotential(ExpPolySeries("open", F0X.m, terms, caps), f)


# structure constants

@dataclass
class StructureConstants:
    """c[(i, j)][k] as series; missing entries are zero."""

    kind: str
    regime: str
    m: int
    rank: int
    caps: Caps
    table: dict

    @property
    def indices(self) -> list[int]:
        return list(range(1, self.m + 2))

    def zero(self) -> ExpPolySeries:
        return ExpPolySeries(self.regime, self.m, {}, self.caps)

    def c(self, i: int, j: int, k: int) -> ExpPolySeries:
        return self.table.get((i, j), {}).get(k) or self.zero()

    def one(self, value=None) -> ExpPolySeries:
        if value is None:
            value = DualScalar(1) if self.kind == "frobenius" else ONE
        return constant_series(self.regime, self.m, self.rank, value, self.caps)

    def product(self, X: dict, Y: dict, keep: Callable | None = None) -> dict:
        """Product of tangent fields given as {index: coefficient series}."""
        out: dict = {}
        for i, x in X.items():
            for j, y in Y.items():
                if x.is_zero() or y.is_zero():
                    continue
                xy = x.mul(y, self.caps, keep)
                if xy.is_zero():
                    continue
                for k, c in self.table.get((i, j), {}).items():
                    term = xy.mul(c, self.caps, keep)
                    out[k] = out[k] + term if k in out else term
        return {k: s for k, s in out.items() if not s.is_zero()}


def structure_constants_frobenius(P: FrobPotential, pairing: PairingMatrix, caps: Caps) -> StructureConstants:
    """c_ij^k = h^{kk} d_i d_j d_k F."""
    D = _Derivs(P.F)
    idx = list(range(1, P.m + 2))
    table: dict = {}
    for i, j, k in product(idx, repeat=3):
        c = D(i, j, k).truncate(caps).scale(DualScalar(pairing.inverse(k)))
        if not c.is_zero():
            table.setdefault((i, j), {})[k] = c
    return StructureConstants("frobenius", "open", P.m, _rank(P.F), caps, table)


@dataclass
class VectorPotential:
    """Components F^1..F^m and F^o (index m+1), all in the open0 regime."""

    components: dict
    m: int

    def component(self, k: int) -> ExpPolySeries:
        return self.components[k]


def vector_potential(F0X: ExpPolySeries, intF01: ExpPolySeries, pairing: PairingMatrix, f: int) -> VectorPotential:
    """F^i = h^{ii} d_i (F0X|_f + intF01|_{t^o=0}), F^o = F01|_{t^o=0}."""
    m = F0X.m
    G = closed_as_open(restrict_framing(F0X, f), "open0") + freeze_open(intF01)
    comps = {i: G.differentiate(i).scale(pairing.inverse(i)) for i in range(1, m + 1)}
    comps[m + 1] = freeze_open(disk_potential(intF01))
    return VectorPotential(comps, m)


def structure_constants_fmanifold(V: VectorPotential, caps: Caps, rank: int) -> StructureConstants:
    """c_ij^k = d_i d_j F^k."""
    idx = list(range(1, V.m + 2))
    derivs = {k: _Derivs(V.component(k)) for k in idx}
    table: dict = {}
    for i, j, k in product(idx, repeat=3):
        c = derivs[k](i, j).truncate(caps)
        if not c.is_zero():
            table.setdefault((i, j), {})[k] = c
    return StructureConstants("fmanifold", "open0", V.m, rank, caps, table)


def verify_associativity(c: StructureConstants, name: str = "associativity") -> IdentityReport:
    """sum_mu c_ij^mu c_mu k^l = sum_mu c_jk^mu c_mu i^l for all i, j, k, l."""
    idx = c.indices
    report = IdentityReport(name)
    cache: dict = {}

    def contract(a, b, k, l):
        key = (a, b, k, l)
        if key not in cache:
            out = c.zero()
            for mu in idx:
                x, y = c.c(a, b, mu), c.c(mu, k, l)
                if not x.is_zero() and not y.is_zero():
                    out = out + x.mul(y, c.caps)
            cache[key] = out
        return cache[key]

    for i, j, k, l in product(idx, repeat=4):
        report.add((i, j, k, l), contract(i, j, k, l) - contract(j, k, i, l))
    return report


def verify_symmetry(c: StructureConstants) -> IdentityReport:
    report = IdentityReport("symmetry c_ij^k = c_ji^k")
    for i, j, k in product(c.indices, repeat=3):
        report.add((i, j, k), c.c(i, j, k) - c.c(j, i, k))
    return report


def compatibility_residual(c: StructureConstants, pairing: PairingMatrix, i: int, j: int, k: int) -> ExpPolySeries:
    """(d_i * d_j, d_k) - (d_i, d_j * d_k) for a diagonal pairing."""
    lhs = c.c(i, j, k).scale(DualScalar(pairing.diag[k]))
    rhs = c.c(j, k, i).scale(DualScalar(pairing.diag[i]))
    return lhs - rhs


def epsilon_grading_report(c: StructureConstants) -> IdentityReport:
    """In H1, a coefficient is pure eps exactly when its winding degree is positive."""
    report = IdentityReport("eps-grading")
    for (i, j), row in sorted(c.table.items()):
        for k, s in sorted(row.items()):
            bad = {}
            for key, val in s.items():
                if key[0][-1] > 0 and not val.re.is_zero():
                    bad[key] = DualScalar(val.re, 0)
                if key[0][-1] == 0 and not val.eps.is_zero():
                    bad[key] = DualScalar(0, val.eps)
            report.add((i, j, k), ExpPolySeries(c.regime, c.m, bad))
    return report


# idempotents

def _keep_below(n: int) -> Callable:
    return lambda cls: novikov_degree(cls) < n


def _degree_part(s: ExpPolySeries, n: int) -> ExpPolySeries:
    return s.filter(lambda key: novikov_degree(key[0]) == n)


def _sub(X: dict, Y: dict) -> dict:
    out = dict(X)
    for k, s in Y.items():
        out[k] = out[k] - s if k in out else -s
    return {k: s for k, s in out.items() if not s.is_zero()}


def _add(X: dict, Y: dict) -> dict:
    return _sub(X, {k: -s for k, s in Y.items()})


def _scale_field(X: dict, c) -> dict:
    return {k: s.scale(c) for k, s in X.items()}


def _filter_field(X: dict, keep: Callable) -> dict:
    out = {k: s.filter(lambda key: keep(key[0])) for k, s in X.items()}
    return {k: s for k, s in out.items() if not s.is_zero()}


@dataclass
class IdempotentBasis:
    """xi[a] as tangent fields, correct modulo I^order."""

    order: int
    xi: dict
    seed: dict
    report: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.report)


def seed_scalars(c: StructureConstants) -> dict:
    """xi_a = s_a * d_a at order 1: s_i = 1 for i <= m and s_o = -u1^{-1} (the rescaling makes it idempotent)."""
    one = c.one()[_zero_key(c.one(), c.rank)]
    out = {a: one for a in range(1, c.m + 1)}
    out[c.m + 1] = one * (-u1.inverse())
    return out


def classical_idempotents(c: StructureConstants) -> dict:
    return {a: {a: c.one(val)} for a, val in seed_scalars(c).items()}


def _to_seed_coords(X: dict, scalars: dict) -> dict:
    return {a: s.scale(scalars[a].inverse()) for a, s in X.items()}


def _from_seed_coords(Y: dict, scalars: dict) -> dict:
    out = {a: s.scale(scalars[a]) for a, s in Y.items()}
    return {k: s for k, s in out.items() if not s.is_zero()}


def idempotent_lift(c: StructureConstants, order: int) -> IdempotentBasis:
    """Lift the classical idempotents order by order in the Novikov filtration.

    With xi_a correct mod I^n and residual r = xi_a * xi_a - xi_a of degree n,
    the correction solves 2 e_a * delta - delta = -r on the seed basis:
    delta^a = -r^a and delta^b = r^b for b != a.
    """
    scalars = seed_scalars(c)
    seed = classical_idempotents(c)
    xi = {a: dict(f) for a, f in seed.items()}
    for n in range(1, order):
        keep = _keep_below(n + 1)
        new = {}
        for a, x in xi.items():
            r = _sub(c.product(x, x, keep), x)
            low = _filter_field(r, lambda cls: novikov_degree(cls) < n)
            if low:
                raise StructureFailure(f"idempotent xi_{a} has residual below degree {n}")
            rs = _to_seed_coords(r, scalars)
            delta = {b: (-s if b == a else s) for b, s in rs.items()}
            new[a] = _add(x, _from_seed_coords(delta, scalars))
        xi = new
    basis = IdempotentBasis(order, xi, seed)
    basis.report = idempotent_residuals(c, xi, order)
    return basis


def idempotent_residuals(c: StructureConstants, xi: dict, order: int) -> list[IdentityReport]:
    keep = _keep_below(order)
    idem = IdentityReport(f"idempotency/orthogonality mod I^{order}")
    for a, b in product(sorted(xi), repeat=2):
        prod = c.product(xi[a], xi[b], keep)
        target = _filter_field(xi[a], keep) if a == b else {}
        R = _sub(prod, target)
        idem.add((a, b), _field_sum(c, R))
    unit = IdentityReport(f"sum of idempotents acts as identity mod I^{order}")
    total: dict = {}
    for a in sorted(xi):
        total = _add(total, xi[a])
    for k in c.indices:
        basis_field = {k: c.one()}
        R = _sub(c.product(total, basis_field, keep), basis_field)
        unit.add((k,), _field_sum(c, R))
    return [idem, unit]


def _field_sum(c: StructureConstants, X: dict) -> ExpPolySeries:
    """Flatten a field into one series by tagging the component into the key (for reporting)."""
    terms = {}
    for k, s in sorted(X.items()):
        for (cls, alpha, kk), val in s.items():
            terms[(cls, alpha, 100 * k + kk)] = val
    return ExpPolySeries(c.regime, c.m, terms)


# units

@dataclass
class UnitSearch:
    """Order-by-order search for a field e with e * d_b = d_b for every b."""

    feasible: dict
    unit: dict | None

    @property
    def infeasible_everywhere(self) -> bool:
        return not any(self.feasible.values())

    def lines(self) -> list[str]:
        return [f"  mod I^{n + 1}: {'feasible' if ok else 'infeasible'}" for n, ok in sorted(self.feasible.items())]


def _solve(matrix: list[list], rhs: list):
    """Exact solve of matrix * x = rhs; None when inconsistent, free variables set to 0."""
    rows = [list(r) + [b] for r, b in zip(matrix, rhs)]
    ncols = len(matrix[0]) if matrix else 0
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if _unit(rows[i][col])), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][col].inverse()
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not _is_zero(rows[i][col]):
                factor = rows[i][col]
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    for row in rows[r:]:
        if not _is_zero(row[-1]):
            return None
    zero = rhs[0] - rhs[0]
    sol = [zero] * ncols
    for i, col in enumerate(pivots):
        sol[col] = rows[i][-1]
    return sol


def unit_search(c: StructureConstants, max_order: int) -> UnitSearch:
    """Solve sum_a e^a c_ab^k = delta_b^k degree by degree in the Novikov filtration.

    The degree-0 matrix is the t-independent classical part; higher degrees reuse
    it with the accumulated residual on the right, one coefficient key at a time.
    """
    idx = c.indices
    zero_key = ((0,) * c.rank, (0,) * c.m, 0)
    one = c.one()[zero_key]
    zero = one - one
    classical = {(a, b, k): c.c(a, b, k).filter(lambda key: novikov_degree(key[0]) == 0 and sum(key[1]) == 0)[zero_key]
                 for a, b, k in product(idx, repeat=3)}
    matrix = [[classical[(a, b, k)] for a in idx] for b, k in product(idx, repeat=2)]
    feasible: dict = {}
    sol0 = _solve(matrix, [one if b == k else zero for b, k in product(idx, repeat=2)])
    if sol0 is None:
        for n in range(max_order + 1):
            feasible[n] = False
        return UnitSearch(feasible, None)
    e = {a: constant_series(c.regime, c.m, c.rank, val, c.caps) for a, val in zip(idx, sol0) if not _is_zero(val)}
    feasible[0] = True
    for n in range(1, max_order + 1):
        keep = _keep_below(n + 1)
        residual: dict = {}
        for b in idx:
            prod = c.product(e, {b: c.one()}, keep)
            target = {b: c.one()}
            for k, s in _sub(prod, target).items():
                residual[(b, k)] = _degree_part(s, n)
        keys = sorted({key for s in residual.values() for key in s.terms})
        ok = True
        correction: dict = {}
        for key in keys:
            rhs = [zero - residual[(b, k)][key] if (b, k) in residual else zero for b, k in product(idx, repeat=2)]
            sol = _solve(matrix, rhs)
            if sol is None:
                ok = False
                break
            for a, val in zip(idx, sol):
                if not _is_zero(val):
                    correction.setdefault(a, {})[key] = val
        feasible[n] = ok
        if not ok:
            for later in range(n + 1, max_order + 1):
                feasible[later] = False
            return UnitSearch(feasible, None)
        e = _add(e, {a: ExpPolySeries(c.regime, c.m, terms, c.caps) for a, terms in correction.items()})
    return UnitSearch(feasible, e)


def flat_unit_residual(c: StructureConstants) -> IdentityReport:
    """Does the flat field sum_i d_i - u1^{-1} d_o act as the identity?"""
    o = c.m + 1
    e = {a: c.one() for a in range(1, c.m + 1)}
    e[o] = c.one(DualScalar(-u1.inverse()) if c.kind == "frobenius" else -u1.inverse())
    report = IdentityReport("flat unit candidate sum_i d_i - u1^{-1} d_o")
    for b in c.indices:
        R = _sub(c.product(e, {b: c.one()}), {b: c.one()})
        report.add((b,), _field_sum(c, R))
    return report


def nilpotency_report(c: StructureConstants) -> IdentityReport:
    """d_o * d_a = 0 for every a."""
    o = c.m + 1
    report = IdentityReport("d_o * d_a = 0")
    for a in c.indices:
        R = c.zero()
        for k in c.indices:
            for s in (c.c(o, a, k), c.c(a, o, k)):
                R = R + _field_sum(c, {k: s}) if not s.is_zero() else R
        report.add((a,), R)
    return report


def quotient_report(c: StructureConstants, F0X: ExpPolySeries, intF01: ExpPolySeries, pairing: PairingMatrix, f: int) -> IdentityReport:
    """Killing d_o maps the F-manifold algebra onto the Frobenius algebra of F0X|_f + intF01|_{t^o=0}.

    The target structure constants are recomputed from that potential directly.
    """
    G = _Derivs(closed_as_open(restrict_framing(F0X, f), "open0") + freeze_open(intF01))
    closed = list(range(1, c.m + 1))
    report = IdentityReport("projection killing d_o is an algebra map")
    for i, j, k in product(closed, repeat=3):
        target = G(i, j, k).truncate(c.caps).scale(pairing.inverse(k))
        report.add((i, j, k), c.c(i, j, k) - target)
    return report


def label(index: int, m: int, open_regime: bool = True) -> str:
    return "o" if open_regime and index == m + 1 else str(index)

