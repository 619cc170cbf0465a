"""Exact coefficient arithmetic.

Rational functions in the equivariant parameters u1, u2, u3, u4 (plus an
auxiliary slot ``v`` used by framing coordinates), Laurent expansion along
a single variable, substitution, and dual numbers over them.

Polynomials are ``flint.fmpq_mpoly`` objects in one shared context.  The
canonical form removes the gcd and scales so that the denominator has
leading coefficient 1, where "leading" is graded lex with
u1 < u2 < u3 < u4 < v.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Union

import flint

VARS = ("u1", "u2", "u3", "u4", "v")
_CTX = flint.fmpq_mpoly_ctx.get(VARS, "deglex")
_GENS = dict(zip(VARS, _CTX.gens()))
_INDEX = {name: k for k, name in enumerate(VARS)}


class DenominatorVanishes(ZeroDivisionError):
    """A substitution sent a denominator to zero.

    Within this package that always means the framing sits on the finite
    exceptional set where restricting to u2 = f*u1 is not allowed.
    """

    def __init__(self, message: str, fn: "RationalFn | None" = None):
        super().__init__(message)
        self.fn = fn


class PoleOrderError(ValueError):
    """Raised when a Laurent expansion is requested along an invalid variable."""


class U3Present(ValueError):
    """A quantity that must live on the u3 = 0 subtorus still mentions u3."""


def _poly(x) -> flint.fmpq_mpoly:
    if isinstance(x, flint.fmpq_mpoly):
        return x
    if isinstance(x, Fraction):
        return _CTX.constant(flint.fmpq(x.numerator, x.denominator))
    return _CTX.constant(x)


def _lead_key(monom: tuple[int, ...]) -> tuple[int, ...]:
    return (sum(monom),) + tuple(reversed(monom))


def _leading_coeff(p: flint.fmpq_mpoly):
    best = None
    coeff = None
    for monom, c in zip(p.monoms(), p.coeffs()):
        key = _lead_key(monom)
        if best is None or key > best:
            best, coeff = key, c
    return coeff


def _poly_str(p: flint.fmpq_mpoly) -> str:
    """Deterministic rendering, terms sorted by descending canonical order."""
    if p.is_zero():
        return "0"
    terms = sorted(zip(p.monoms(), p.coeffs()), key=lambda t: _lead_key(t[0]), reverse=True)
    out = []
    for k, (monom, c) in enumerate(terms):
        c = Fraction(int(c.p), int(c.q))
        sign = "-" if c < 0 else "+"
        c = abs(c)
        factors = []
        for name, e in zip(VARS, monom):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        if not factors:
            body = str(c)
        elif c == 1:
            body = "*".join(factors)
        else:
            body = str(c) + "*" + "*".join(factors)
        if k == 0:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


class RationalFn:
    """Exact rational function num/den in canonical form.

    Instances are immutable; arithmetic returns new objects.
    """

    __slots__ = ("num", "den", "_key")

    def __init__(self, num=0, den=1, _canonical: bool = False):
        num = _poly(num)
        den = _poly(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if not _canonical:
            if num.is_zero():
                den = _CTX.constant(1)
            else:
                g = num.gcd(den)
                if not g.is_one():
                    num = _exact(num, g)
                    den = _exact(den, g)
            lc = _leading_coeff(den)
            if lc != 1:
                num = num / lc
                den = den / lc
        self.num = num
        self.den = den
        self._key = None

    # construction helpers
    @staticmethod
    def var(name: str) -> "RationalFn":
        return RationalFn(_GENS[name], _canonical=True)

    @staticmethod
    def const(value) -> "RationalFn":
        if isinstance(value, RationalFn):
            return value
        return RationalFn(_poly(value), _canonical=True)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.den.is_constant() and self.num.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"not a constant: {self}")
        c = self.num.leading_coefficient() if not self.num.is_zero() else flint.fmpq(0)
        d = self.den.leading_coefficient()
        q = c / d
        return Fraction(int(q.p), int(q.q))

    def variables(self) -> set[str]:
        names = set()
        for p in (self.num, self.den):
            for k, e in enumerate(p.degrees()):
                if e > 0:
                    names.add(VARS[k])
        return names

    def assert_u3_free(self) -> "RationalFn":
        if "u3" in self.variables():
            raise U3Present(f"u3 appears in {self}")
        return self

    # arithmetic
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        a, b, c, d = self.num, self.den, other.num, other.den
        if b == d:
            num = a + c
            return RationalFn(num, b)
        g = b.gcd(d)
        if g.is_one():
            return _coprime(a * d + c * b, b * d)
        bg = _exact(b, g)
        dg = _exact(d, g)
        num = a * dg + c * bg
        return RationalFn(num, bg * d)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den, _canonical=True)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return ZERO
        a, b, c, d = self.num, self.den, other.num, other.den
        g1 = a.gcd(d)
        g2 = c.gcd(b)
        if not g1.is_one():
            a = _exact(a, g1)
            d = _exact(d, g1)
        if not g2.is_one():
            c = _exact(c, g2)
            b = _exact(b, g2)
        return _coprime(a * c, b * d)

    __rmul__ = __mul__

    def inverse(self) -> "RationalFn":
        if self.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return _coprime(self.den, self.num)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return RationalFn(self.num ** n, self.den ** n, _canonical=True)

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return False
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash(self.key())

    def key(self) -> str:
        if self._key is None:
            self._key = self.to_string()
        return self._key

    # substitution and calculus
    def substitute(self, bindings: Mapping[str, object] | Iterable[tuple[str, object]]) -> "RationalFn":
        """Substitute variables by rational functions.

        Raises DenominatorVanishes if the denominator becomes identically 0.
        """
        if isinstance(bindings, Mapping):
            bindings = list(bindings.items())
        values = {name: _coerce(val) for name, val in bindings}
        if all(val.den.is_one() for val in values.values()):
            args = [values[n].num if n in values else _GENS[n] for n in VARS]
            num = self.num.compose(*args)
            den = self.den.compose(*args)
            if den.is_zero():
                raise DenominatorVanishes(
                    f"denominator {_poly_str(self.den)} vanishes under "
                    + ", ".join(f"{n} := {v}" for n, v in values.items()),
                    self,
                )
            return RationalFn(num, den)
        num = _eval_poly(self.num, values)
        den = _eval_poly(self.den, values)
        if den.is_zero():
            raise DenominatorVanishes(
                f"denominator {_poly_str(self.den)} vanishes under substitution", self
            )
        return num / den

    def derivative(self, name: str) -> "RationalFn":
        n, d = self.num, self.den
        return RationalFn(n.derivative(name) * d - n * d.derivative(name), d * d)

    def pole_order(self, name: str) -> int:
        """Order of the pole along name = 0 (negative means a zero; 0 for the zero function)."""
        if self.num.is_zero():
            return 0
        return _valuation(self.den, name) - _valuation(self.num, name)

    # I/O
    def to_string(self) -> str:
        if self.den.is_one():
            return _poly_str(self.num)
        return f"({_poly_str(self.num)})/({_poly_str(self.den)})"

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"RationalFn({self.to_string()!r})"

    @staticmethod
    def parse(text: str) -> "RationalFn":
        return _Parser(text).parse()


def _coprime(num, den) -> RationalFn:
    """Build from a pair already known to be coprime."""
    lc = _leading_coeff(den)
    if lc != 1:
        num = num / lc
        den = den / lc
    return RationalFn(num, den, _canonical=True)


def _exact(p, q):
    quo, rem = divmod(p, q)
    if not rem.is_zero():
        raise ArithmeticError("inexact polynomial division")
    return quo


def _valuation(p, name: str) -> int:
    k = _INDEX[name]
    return min(m[k] for m in p.monoms())


def _eval_poly(p, values: dict[str, RationalFn]) -> RationalFn:
    total = ZERO
    for monom, c in zip(p.monoms(), p.coeffs()):
        term = RationalFn.const(Fraction(int(c.p), int(c.q)))
        for name, e in zip(VARS, monom):
            if e:
                base = values.get(name, RationalFn.var(name))
                term = term * base ** e
        total = total + term
    return total


def _coerce(x):
    if isinstance(x, RationalFn):
        return x
    if isinstance(x, (int, Fraction, flint.fmpq, flint.fmpz)):
        return RationalFn.const(x)
    if isinstance(x, flint.fmpq_mpoly):
        return RationalFn(x, _canonical=True)
    if isinstance(x, str):
        return RationalFn.parse(x)
    return NotImplemented


ZERO = RationalFn(0, _canonical=True)
ONE = RationalFn(1, _canonical=True)
u1, u2, u3, u4, v = (RationalFn.var(n) for n in VARS)

Coefficient = Union[RationalFn, int, Fraction]


def rf(x) -> RationalFn:
    """Coerce ints, Fractions and strings to RationalFn."""
    out = _coerce(x)
    if out is NotImplemented:
        raise TypeError(f"cannot convert {type(x).__name__} to RationalFn")
    return out


def rf_arith(lhs, rhs, op: str) -> RationalFn:
    lhs, rhs = rf(lhs), rf(rhs)
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs * rhs
    if op == "div":
        return lhs / rhs
    raise ValueError(f"unknown op {op!r}")


def substitute(fn: RationalFn, bindings) -> RationalFn:
    return rf(fn).substitute(bindings)


def _split_powers(p, k: int) -> dict[int, flint.fmpq_mpoly]:
    """Group the terms of p by the exponent of variable k."""
    groups: dict[int, dict] = {}
    for monom, c in zip(p.monoms(), p.coeffs()):
        e = monom[k]
        m = list(monom)
        m[k] = 0
        groups.setdefault(e, {})[tuple(m)] = c
    return {e: _CTX.from_dict(d) for e, d in groups.items()}


def laurent_expand(fn: RationalFn, variable: str, max_order: int) -> list[tuple[int, RationalFn]]:
    """Laurent coefficients of fn along ``variable`` from the pole order up to max_order.

    For the framing variable pass ``FramingCoords.rewrite(fn)`` first so that
    ``v`` is an honest variable and u2 no longer appears.
    """
    if variable not in ("u4", "v"):
        raise PoleOrderError(f"expansion variable must be u4 or v, got {variable!r}")
    fn = rf(fn)
    k = _INDEX[variable]
    if fn.is_zero():
        return []
    val_den = _valuation(fn.den, variable)
    val_num = _valuation(fn.num, variable)
    # strip variable^val from both; den0 := den / var^val_den has nonzero constant part
    dparts = {e - val_den: c for e, c in _split_powers(fn.den, k).items()}
    nparts = {e - val_num: c for e, c in _split_powers(fn.num, k).items()}
    shift = val_num - val_den
    d0 = RationalFn(dparts[0])
    coeffs: list[RationalFn] = []
    out = []
    for i in range(0, max_order - shift + 1):
        acc = RationalFn(nparts[i]) if i in nparts else ZERO
        for j in range(1, i + 1):
            if j in dparts and not coeffs[i - j].is_zero():
                acc = acc - RationalFn(dparts[j]) * coeffs[i - j]
        c = acc / d0
        coeffs.append(c)
        if not c.is_zero():
            out.append((i + shift, c))
    return out


class FramingCoords:
    """Change of variables u2 <-> v attached to a framing f.

    v = u2 - f*u1 for f >= 0 and v = u2 - f*u1 + u4 for f < 0.
    """

    def __init__(self, f: int):
        self.f = int(f)

    def v_of_u(self) -> RationalFn:
        if self.f >= 0:
            return u2 - self.f * u1
        return u2 - self.f * u1 + u4

    def u2_of_v(self) -> RationalFn:
        if self.f >= 0:
            return v + self.f * u1
        return v + self.f * u1 - u4

    def rewrite(self, fn: RationalFn) -> RationalFn:
        """Express fn in (u1, v, u4)."""
        return rf(fn).substitute({"u2": self.u2_of_v()})

    def restore(self, fn: RationalFn) -> RationalFn:
        """Express a (u1, v, u4) function back in (u1, u2, u4)."""
        return rf(fn).substitute({"v": self.v_of_u()})


class DualScalar:
    """a + b*eps with eps^2 = 0, a and b RationalFn."""

    __slots__ = ("re", "eps")

    def __init__(self, re=0, eps=0):
        self.re = rf(re)
        self.eps = rf(eps)

    def __add__(self, other):
        other = _dual(other)
        return DualScalar(self.re + other.re, self.eps + other.eps)

    __radd__ = __add__

    def __neg__(self):
        return DualScalar(-self.re, -self.eps)

    def __sub__(self, other):
        return self + (-_dual(other))

    def __rsub__(self, other):
        return _dual(other) - self

    def __mul__(self, other):
        other = _dual(other)
        return DualScalar(self.re * other.re, self.re * other.eps + self.eps * other.re)

    __rmul__ = __mul__

    def inverse(self) -> "DualScalar":
        if self.re.is_zero():
            raise ZeroDivisionError("dual scalar with zero real part is not invertible")
        r = self.re.inverse()
        return DualScalar(r, -self.eps * r * r)

    def __truediv__(self, other):
        return self * _dual(other).inverse()

    def __rtruediv__(self, other):
        return _dual(other) * self.inverse()

    def __eq__(self, other):
        other = _dual(other)
        return self.re == other.re and self.eps == other.eps

    def __hash__(self):
        return hash((self.re, self.eps))

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.eps.is_zero()

    def __repr__(self):
        return f"DualScalar({self.re}, {self.eps})"


def _dual(x) -> DualScalar:
    if isinstance(x, DualScalar):
        return x
    return DualScalar(x, 0)


def dual_arith(lhs, rhs, op: str) -> DualScalar:
    lhs, rhs = _dual(lhs), _dual(rhs)
    if op == "add":
        return lhs + rhs
    if op == "sub":
        return lhs - rhs
    if op == "mul":
        return lhs * rhs
    if op == "div":
        return lhs / rhs
    raise ValueError(f"unknown op {op!r}")


# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


class _Parser:
    """Recursive descent for + - * / ^ and parentheses over integers and variables."""

    def __init__(self, text: str):
        self.tokens = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                break
            pos = m.end()
            num, name, op = m.groups()
            if num is not None:
                self.tokens.append(("num", int(num)))
            elif name is not None:
                if name not in _INDEX:
                    raise ValueError(f"unknown variable {name!r}")
                self.tokens.append(("var", name))
            else:
                self.tokens.append(("op", op))
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> RationalFn:
        out = self.expr()
        if self.i != len(self.tokens):
            raise ValueError(f"unexpected token {self.peek()[1]!r}")
        return out

    def expr(self) -> RationalFn:
        kind, val = self.peek()
        sign = 1
        if (kind, val) in (("op", "-"), ("op", "+")):
            self.take()
            sign = -1 if val == "-" else 1
        acc = self.term() * sign
        while self.peek() in (("op", "+"), ("op", "-")):
            _, op = self.take()
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> RationalFn:
        acc = self.power()
        while self.peek() in (("op", "*"), ("op", "/")):
            _, op = self.take()
            f = self.power()
            acc = acc * f if op == "*" else acc / f
        return acc

    def power(self) -> RationalFn:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            neg = False
            if (kind, val) == ("op", "-"):
                neg = True
                kind, val = self.take()
            if kind != "num":
                raise ValueError("exponent must be an integer")
            return base ** (-val if neg else val)
        return base

    def atom(self) -> RationalFn:
        kind, val = self.take()
        if kind == "num":
            return RationalFn.const(val)
        if kind == "var":
            return RationalFn.var(val)
        if (kind, val) == ("op", "("):
            out = self.expr()
            if self.take() != ("op", ")"):
                raise ValueError("missing ')'")
            return out
        if (kind, val) == ("op", "-"):
            return -self.atom()
        raise ValueError(f"unexpected token {val!r}")
