"""Truncated genus-zero potentials and the open/closed extraction.

A series term is keyed by ``(cls, alpha, k)``:

* ``cls``   curve-class coordinates; in the closed4 and open regimes the last
            entry is the winding degree d,
* ``alpha`` exponents of t^1..t^m,
* ``k``     power of the distinguished variable x (t^{m+1} or t^o).

The term stands for ``c * Q^cls * t^alpha * x^k * exp(rate(d) * x)`` with
``rate = -d/u1`` for closed4 (x = t^{m+1}) and ``rate = d`` for open (x = t^o).
Only the isolated cubic has k > 0.  The open0 regime is the t^o = 0 slice of
an open series: d is kept as the X0 exponent and nothing depends on t^o.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Iterator

from .exactalg import (
    ONE,
    ZERO,
    DenominatorVanishes,
    DualScalar,
    FramingCoords,
    RationalFn,
    laurent_expand,
    rf,
    u1,
    u4,
    v,
)
from .localize import Target, potential_coefficient

REGIMES = ("closed3", "closed4", "open", "open0")

Key = tuple[tuple[int, ...], tuple[int, ...], int]


class PoleStructureViolation(ValueError):
    """A coefficient does not have the pole shape required for extraction."""

    def __init__(self, message: str, key=None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class Caps:
    """Class caps (beta components, winding degree) and t-degree cap beyond third derivatives."""

    beta: int = 2
    d: int = 2
    tdeg: int = 1

    @property
    def max_points(self) -> int:
        return 3 + self.tdeg

    def class_ok(self, cls: tuple[int, ...], regime: str) -> bool:
        if regime == "closed3":
            return all(c <= self.beta for c in cls)
        return all(c <= self.beta for c in cls[:-1]) and cls[-1] <= self.d


def _alphas(m: int, max_total: int) -> Iterator[tuple[int, ...]]:
    for total in range(max_total + 1):
        yield from _alphas_exact(m, total)


def _alphas_exact(m: int, total: int) -> Iterator[tuple[int, ...]]:
    if m == 0:
        if total == 0:
            yield ()
        return
    for a in range(total, -1, -1):
        for rest in _alphas_exact(m - 1, total - a):
            yield (a,) + rest


def _zero_like(c):
    return DualScalar() if isinstance(c, DualScalar) else ZERO


class ExpPolySeries:
    """Finite map from keys to coefficients, with regime metadata."""

    def __init__(self, regime: str, m: int, terms: dict | None = None, caps: Caps | None = None):
        if regime not in REGIMES:
            raise ValueError(f"unknown regime {regime!r}")
        self.regime = regime
        self.m = m
        self.caps = caps
        self.terms: dict[Key, object] = {}
        for key, c in (terms or {}).items():
            if not c.is_zero():
                self.terms[key] = c

    # basic access
    def __getitem__(self, key: Key):
        return self.terms.get(key, ZERO)

    def coefficient(self, cls, alpha, k: int = 0):
        return self.terms.get((tuple(cls), tuple(alpha), k), ZERO)

    def keys(self) -> list[Key]:
        return sorted(self.terms)

    def items(self):
        return [(k, self.terms[k]) for k in self.keys()]

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def _new(self, terms: dict) -> "ExpPolySeries":
        return ExpPolySeries(self.regime, self.m, terms, self.caps)

    def rate(self, cls: tuple[int, ...]):
        if self.regime in ("closed3", "open0"):
            return None
        d = cls[-1]
        if self.regime == "closed4":
            return RationalFn.const(-d) / u1
        return RationalFn.const(d)

    # arithmetic
    def __add__(self, other: "ExpPolySeries") -> "ExpPolySeries":
        self._check(other)
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out[key] + c if key in out else c
        return self._new(out)

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "ExpPolySeries":
        return self._new({k: c * x for k, x in self.terms.items()})

    def map(self, fn: Callable) -> "ExpPolySeries":
        return self._new({k: fn(c) for k, c in self.terms.items()})

    def filter(self, pred: Callable[[Key], bool]) -> "ExpPolySeries":
        return self._new({k: c for k, c in self.terms.items() if pred(k)})

    def _check(self, other):
        if other.regime != self.regime or other.m != self.m:
            raise ValueError("series regimes do not match")

    def mul(self, other: "ExpPolySeries", caps: Caps | None = None, keep: Callable | None = None) -> "ExpPolySeries":
        """Product truncated to class caps and |alpha| <= caps.tdeg; ``keep(cls)`` filters further."""
        self._check(other)
        caps = caps or self.caps
        out: dict = {}
        for (c1, a1, k1), x in self.terms.items():
            for (c2, a2, k2), y in other.terms.items():
                cls = tuple(p + q for p, q in zip(c1, c2))
                alpha = tuple(p + q for p, q in zip(a1, a2))
                if caps is not None:
                    if not caps.class_ok(cls, self.regime) or sum(alpha) > caps.tdeg:
                        continue
                if keep is not None and not keep(cls):
                    continue
                key = (cls, alpha, k1 + k2)
                val = x * y
                out[key] = out[key] + val if key in out else val
        return self._new(out)

    def differentiate(self, index) -> "ExpPolySeries":
        """Derivative in t^index (1..m) or in the distinguished variable (m+1 or "o")."""
        out: dict = {}
        if index in ("o", self.m + 1):
            if self.regime == "closed3":
                raise ValueError("closed3 series has no distinguished variable")
            if self.regime == "open0":
                return self._new({})
            for (cls, alpha, k), c in self.terms.items():
                r = self.rate(cls)
                if not r.is_zero():
                    key = (cls, alpha, k)
                    out[key] = out.get(key, _zero_like(c)) + c * r
                if k > 0:
                    key = (cls, alpha, k - 1)
                    out[key] = out.get(key, _zero_like(c)) + c * k
            return self._new(out)
        i = int(index)
        if not 1 <= i <= self.m:
            raise ValueError(f"index {index} out of range")
        for (cls, alpha, k), c in self.terms.items():
            a = alpha[i - 1]
            if a:
                new = alpha[: i - 1] + (a - 1,) + alpha[i:]
                out[(cls, new, k)] = c * a
        return self._new(out)

    def d(self, *indices) -> "ExpPolySeries":
        out = self
        for i in indices:
            out = out.differentiate(i)
        return out

    def truncate(self, caps: Caps) -> "ExpPolySeries":
        return self.filter(lambda key: caps.class_ok(key[0], self.regime) and sum(key[1]) <= caps.tdeg)

    def slice_x0(self) -> "ExpPolySeries":
        """Set the distinguished variable to 0: exponentials become 1, x^k terms with k > 0 vanish."""
        return self.filter(lambda key: key[2] == 0)

    # I/O
    def to_rows(self) -> list[str]:
        rows = []
        for (cls, alpha, k), c in self.items():
            cl = ",".join(map(str, cls))
            al = ",".join(map(str, alpha))
            if isinstance(c, DualScalar):
                val = f"{c.re} | eps {c.eps}"
            else:
                val = str(c)
            rows.append(f"{self.regime}\t({cl})\t({al})\t{k}\t{val}")
        return rows

    @staticmethod
    def from_rows(rows: Iterable[str], m: int) -> "ExpPolySeries":
        terms = {}
        regime = None
        for row in rows:
            row = row.strip()
            if not row:
                continue
            reg, cl, al, k, val = row.split("\t")
            regime = regime or reg
            cls = tuple(int(x) for x in cl.strip("()").split(",") if x)
            alpha = tuple(int(x) for x in al.strip("()").split(",") if x)
            if " | eps " in val:
                re_s, eps_s = val.split(" | eps ")
                c = DualScalar(RationalFn.parse(re_s), RationalFn.parse(eps_s))
            else:
                c = RationalFn.parse(val)
            terms[(cls, alpha, int(k))] = c
        return ExpPolySeries(regime or "closed3", m, terms)


def differentiate(F: ExpPolySeries, index) -> ExpPolySeries:
    return F.differentiate(index)


def integrate_open(F: ExpPolySeries) -> ExpPolySeries:
    """Antiderivative in t^o on the winding-degree >= 1 part."""
    if F.regime != "open":
        raise ValueError("integrate_open needs an open-regime series")
    out = {}
    for (cls, alpha, k), c in F.terms.items():
        if cls[-1] == 0 or k:
            raise ValueError(f"term {cls},{alpha} has no t^o antiderivative in the X0 ideal")
        out[(cls, alpha, k)] = c * RationalFn.const(Fraction(1, cls[-1]))
    return F._new(out)


def class_box(rank: int, cap: int) -> list[tuple[int, ...]]:
    return sorted(product(range(cap + 1), repeat=rank))


def build_F0_3fold(T: Target, caps: Caps) -> ExpPolySeries:
    """Closed potential of the 3-fold in the idempotent coordinates t^1..t^m."""
    m = T.m
    terms = {}
    for cls in class_box(T.rank, caps.beta):
        for alpha in _alphas(m, caps.max_points):
            c = potential_coefficient(T, cls, alpha)
            if not c.is_zero():
                terms[(cls, alpha, 0)] = c.assert_u3_free()
    return ExpPolySeries("closed3", m, terms, caps)


def build_F0_4fold(T: Target, caps: Caps) -> ExpPolySeries:
    """Closed potential of the 4-fold; t^{m+1} enters through exp(-d t^{m+1}/u1) and the cubic."""
    m = T.m - 1
    terms = {}
    classes = [b + (d,) for b in class_box(T.rank - 1, caps.beta) for d in range(caps.d + 1)]
    for cls in classes:
        for alpha in _alphas(m, caps.max_points):
            c = potential_coefficient(T, cls, alpha)
            if not c.is_zero():
                terms[(cls, alpha, 0)] = c.assert_u3_free()
    zero = (0,) * T.rank
    terms[(zero, (0,) * m, 3)] = cubic_coefficient(T)
    return ExpPolySeries("closed4", m, terms, caps)


def cubic_coefficient(T: Target) -> RationalFn:
    """Coefficient of (t^{m+1})^3: 1/(6 Delta^{m+1})."""
    return T.euler(T.m).inverse() / 6


# extraction

@dataclass
class ExpansionPieces:
    """Pieces A, B, C1, C2 with F = cubic + A/u4 + B/v + u4*C1/v + C2 per coefficient."""

    framing: int
    m: int
    cubic: RationalFn
    A: dict = field(default_factory=dict)
    B: dict = field(default_factory=dict)
    C1: dict = field(default_factory=dict)
    C2: dict = field(default_factory=dict)
    nongeneric: list = field(default_factory=list)

    def piece(self, name: str) -> ExpPolySeries:
        return ExpPolySeries("closed4", self.m, getattr(self, name))

    def reassemble(self, key: Key) -> RationalFn:
        vv = FramingCoords(self.framing).v_of_u()
        out = ZERO
        out = out + self.A.get(key, ZERO) / u4
        out = out + self.B.get(key, ZERO) / vv
        out = out + u4 * self.C1.get(key, ZERO) / vv
        out = out + self.C2.get(key, ZERO)
        return out


def _regular_at_zero(fn: RationalFn, names: tuple[str, ...]) -> bool:
    """True if the denominator does not vanish on {name = 0 for all names}."""
    return not fn.den.subs({n: 0 for n in names}).is_zero()


def _residue_u4(R: RationalFn) -> RationalFn:
    return (u4 * R).substitute({"u4": 0}) if R.pole_order("u4") == 1 else ZERO


def pole_structure_ok(R: RationalFn, f: int) -> bool:
    """u4 * v * R restricts to u4 = 0 and then to v = 0.

    Checked piecewise: R has at most a simple u4-pole, its residue A has at most
    a simple v-pole, and R - A/u4 restricted to u4 = 0 has at most a simple v-pole.
    """
    if R.pole_order("u4") > 1:
        return False
    coords = FramingCoords(f)
    A = _residue_u4(R)
    if coords.rewrite(A).pole_order("v") > 1:
        return False
    S0 = coords.rewrite(R - A / u4).substitute({"u4": 0})
    return S0.pole_order("v") <= 1


def joint_pole_structure_ok(R: RationalFn, f: int) -> bool:
    """u4 * v * R has no pole anywhere on {u4 = 0} or {v = 0}; stronger than the sequential check."""
    Rv = FramingCoords(f).rewrite(R)
    return _regular_at_zero(u4 * v * Rv, ("u4",)) and _regular_at_zero(u4 * v * Rv, ("v",))


def _v_residue(Rv: RationalFn) -> RationalFn:
    for exp, c in laurent_expand(Rv, "v", -1):
        if exp == -1:
            return c
    return ZERO


def extract_pieces(F4: ExpPolySeries, f: int) -> ExpansionPieces:
    """Canonical decomposition of every non-cubic coefficient of the 4-fold potential.

    Restrictions are taken along the chain u4 = 0, then v = 0.  For d > 0 the
    v^{-1} Laurent coefficient r(u4) splits as B + u4*C1 when r is regular at
    u4 = 0 and r(0) equals the residue of R|_{u4=0}; otherwise C1 = 0.  Terms
    u4^a v^{-b} with b >= 2 and a >= 1 stay in C2, which still restricts.
    """
    if F4.regime != "closed4":
        raise ValueError("extract_pieces needs a closed4 series")
    coords = FramingCoords(f)
    pieces = ExpansionPieces(f, F4.m, ZERO)
    for key, R in F4.items():
        cls, alpha, k = key
        if k:
            pieces.cubic = R
            continue
        d = cls[-1]
        order4 = R.pole_order("u4")
        if order4 > 1:
            raise PoleStructureViolation(f"u4-pole of order {order4} at {key}", key)
        if d == 0:
            A = _residue_u4(R)
            C2 = R - A / u4
            if coords.rewrite(C2).substitute({"u4": 0}).pole_order("v") > 0:
                pieces.nongeneric.append((key, "C2 not regular at u4 = 0, v = 0"))
            if not A.is_zero():
                pieces.A[key] = A
            if not C2.is_zero():
                pieces.C2[key] = C2
            continue
        if order4 > 0:
            raise PoleStructureViolation(f"winding degree {d} but u4-pole at {key}", key)
        Rv = coords.rewrite(R)
        S0 = Rv.substitute({"u4": 0})
        orderv = S0.pole_order("v")
        if orderv > 1:
            raise PoleStructureViolation(f"v-pole of order {orderv} after u4 = 0 at {key}", key)
        B = (v * S0).substitute({"v": 0}) if orderv == 1 else ZERO
        res = _v_residue(Rv)
        if res.pole_order("u4") > 0 or res.substitute({"u4": 0}) != B:
            res = B
        C1 = (res - B) / u4
        C2 = coords.restore(Rv - res / v)
        if coords.rewrite(C2).substitute({"u4": 0}).pole_order("v") > 0:
            raise PoleStructureViolation(f"remainder not regular at u4 = 0, v = 0 at {key}", key)
        for name, val in (("B", B), ("C1", C1), ("C2", C2)):
            if not val.is_zero():
                getattr(pieces, name)[key] = val
    return pieces


def extract_double_pole(F4: ExpPolySeries, f: int) -> ExpPolySeries:
    """E: the u4 * v^{-2} Laurent coefficient of each d > 0 coefficient, at u4 = v = 0.

    Nonzero E is exactly what makes u4 * v * R fail to be regular jointly at
    u4 = v = 0; it sits inside C2 and feeds the quadratic disk identities.
    """
    coords = FramingCoords(f)
    terms = {}
    for key, R in F4.items():
        cls, alpha, k = key
        if k or cls[-1] == 0:
            continue
        for exp, c in laurent_expand(coords.rewrite(R), "v", -2):
            if exp == -2:
                if c.pole_order("u4") > -1:
                    raise PoleStructureViolation(f"v^-2 coefficient not divisible by u4 at {key}", key)
                val = (c / u4).substitute({"u4": 0})
                if not val.is_zero():
                    terms[key] = val.assert_u3_free()
    return ExpPolySeries("open", F4.m, terms)


def extract_closed(pieces: ExpansionPieces) -> ExpPolySeries:
    """A at u4 = 0 on the d = 0 keys, with the winding coordinate dropped."""
    terms = {}
    for (cls, alpha, k), A in pieces.A.items():
        if cls[-1] != 0:
            raise PoleStructureViolation(f"A-piece at winding degree {cls[-1]}", (cls, alpha, k))
        terms[(cls[:-1], alpha, k)] = A.substitute({"u4": 0}).assert_u3_free()
    return ExpPolySeries("closed3", pieces.m, terms)


def extract_disk(pieces: ExpansionPieces) -> ExpPolySeries:
    """The integrated disk potential: B at u4 = v = 0, with t^{m+1} = -u1 t^o."""
    coords = FramingCoords(pieces.framing)
    terms = {}
    for key, B in pieces.B.items():
        val = coords.rewrite(B).substitute({"v": 0, "u4": 0})
        terms[key] = val.assert_u3_free()
    return ExpPolySeries("open", pieces.m, terms)


def disk_potential(intF01: ExpPolySeries) -> ExpPolySeries:
    """F_{0,1} = d/dt^o of its antiderivative."""
    return intF01.differentiate("o")


def restrict_framing(F: ExpPolySeries, f: int) -> ExpPolySeries:
    """Apply u2 := f*u1 to every coefficient (DenominatorVanishes names the key)."""
    out = {}
    for key, c in F.items():
        try:
            out[key] = c.substitute({"u2": f * u1})
        except DenominatorVanishes as exc:
            raise DenominatorVanishes(
                f"coefficient {key} of the {F.regime} potential: {exc}; the framing f={f} is not generic "
                f"(the restriction u2 = f*u1 must be defined)",
                c,
            ) from None
    return ExpPolySeries(F.regime, F.m, out, F.caps)


def freeze_open(F: ExpPolySeries) -> ExpPolySeries:
    """The t^o = 0 slice: exp(d t^o) becomes 1 and t^o powers drop out."""
    if F.regime not in ("open", "open0"):
        raise ValueError("freeze_open needs an open-regime series")
    return ExpPolySeries("open0", F.m, {key: c for key, c in F.items() if key[2] == 0}, F.caps)


def closed_as_open(F: ExpPolySeries, regime: str = "open") -> ExpPolySeries:
    """View a closed3 series as an open (or open0) series at winding degree 0."""
    return ExpPolySeries(regime, F.m, {(cls + (0,), a, k): c for (cls, a, k), c in F.items()}, F.caps)
