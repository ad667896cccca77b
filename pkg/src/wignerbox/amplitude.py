"""Exact arithmetic in Q[sqrt2, sqrt3].

Every value is ``c1 + c2*sqrt2 + c3*sqrt3 + c6*sqrt6`` with rational
coefficients.  The ring is closed under +, -, * and (for non-zero values)
division, so the amplitudes of the protocol never leave it.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = [
    "ExactReal",
    "UnrepresentableRadical",
    "from_sqrt",
    "parse_exact",
    "add",
    "mul",
    "neg",
    "eq",
    "to_float",
    "ZERO",
    "ONE",
]

RADICALS = (1, 2, 3, 6)

_SQRT = {1: 1.0, 2: math.sqrt(2.0), 3: math.sqrt(3.0), 6: math.sqrt(6.0)}

# (i, j) -> (factor, k): sqrt(i) * sqrt(j) = factor * sqrt(k)
_PRODUCT = {
    (1, 1): (1, 1), (1, 2): (1, 2), (1, 3): (1, 3), (1, 6): (1, 6),
    (2, 2): (2, 1), (2, 3): (1, 6), (2, 6): (2, 3),
    (3, 3): (3, 1), (3, 6): (3, 2),
    (6, 6): (6, 1),
}


class UnrepresentableRadical(ValueError):
    """The square root would need a radical other than sqrt2, sqrt3, sqrt6."""


Scalar = Union["ExactReal", int, Fraction]


def _coerce(value: object) -> ExactReal | None:
    if isinstance(value, ExactReal):
        return value
    if isinstance(value, (int, Rational)) and not isinstance(value, bool):
        return ExactReal(Fraction(value))
    return None


class ExactReal:
    """An immutable element of Q[sqrt2, sqrt3]."""

    __slots__ = ("c1", "c2", "c3", "c6")

    def __init__(self, c1: Scalar = 0, c2: Scalar = 0, c3: Scalar = 0, c6: Scalar = 0) -> None:
        for name, value in zip(self.__slots__, (c1, c2, c3, c6)):
            object.__setattr__(self, name, Fraction(value))

    def __setattr__(self, name, value):
        raise AttributeError("ExactReal is immutable")

    def __reduce__(self):
        return (ExactReal, self.coefficients)

    @property
    def coefficients(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.c1, self.c2, self.c3, self.c6)

    def _items(self):
        return zip(RADICALS, self.coefficients)

    # -- ring operations -------------------------------------------------

    def __add__(self, other: object) -> ExactReal:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return ExactReal(*(a + b for a, b in zip(self.coefficients, o.coefficients)))

    __radd__ = __add__

    def __neg__(self) -> ExactReal:
        return ExactReal(-self.c1, -self.c2, -self.c3, -self.c6)

    def __pos__(self) -> ExactReal:
        return self

    def __sub__(self, other: object) -> ExactReal:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: object) -> ExactReal:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other: object) -> ExactReal:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        acc = dict.fromkeys(RADICALS, Fraction(0))
        for i, a in self._items():
            if not a:
                continue
            for j, b in o._items():
                if not b:
                    continue
                factor, k = _PRODUCT[(min(i, j), max(i, j))]
                acc[k] += factor * a * b
        return ExactReal(acc[1], acc[2], acc[3], acc[6])

    __rmul__ = __mul__

    def conjugate(self, radical: int) -> ExactReal:
        """Galois conjugate flipping the sign of sqrt(radical) (2 or 3)."""
        if radical == 2:
            return ExactReal(self.c1, -self.c2, self.c3, -self.c6)
        if radical == 3:
            return ExactReal(self.c1, self.c2, -self.c3, -self.c6)
        raise ValueError(f"no conjugation for sqrt{radical}")

    def inverse(self) -> ExactReal:
        if not self:
            raise ZeroDivisionError("inverse of zero")
        s2 = self.conjugate(2)
        s3 = self.conjugate(3)
        s23 = s2.conjugate(3)
        others = s2 * s3 * s23
        norm = self * others
        # the field norm is rational
        assert norm.is_rational(), norm
        return others * (1 / norm.c1)

    def __truediv__(self, other: object) -> ExactReal:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        if o.is_rational():
            if not o.c1:
                raise ZeroDivisionError("division by zero")
            return ExactReal(*(c / o.c1 for c in self.coefficients))
        return self * o.inverse()

    def __rtruediv__(self, other: object) -> ExactReal:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int) -> ExactReal:
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** -n
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison --------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return self.coefficients == o.coefficients

    def __hash__(self) -> int:
        if self.is_rational():
            return hash(self.c1)
        return hash(self.coefficients)

    def __bool__(self) -> bool:
        return any(self.coefficients)

    def is_rational(self) -> bool:
        return not (self.c2 or self.c3 or self.c6)

    def sign(self) -> int:
        """Exact sign, decided by isolating the irrational parts."""
        if not self:
            return 0
        # x = (a + b sqrt2) + sqrt3 (c + d sqrt2); compare |first| with |second|
        first = ExactReal(self.c1, self.c2)
        second = ExactReal(self.c3, self.c6)
        s1, s2 = _sign_q2(first.c1, first.c2), _sign_q2(second.c1, second.c2)
        if s2 == 0:
            return s1
        if s1 == 0 or s1 == s2:
            return s1 or s2
        # opposite signs: compare squares, first^2 - 3 second^2 lies in Q[sqrt2]
        diff = first * first - second * second * 3
        return s1 * _sign_q2(diff.c1, diff.c2)

    def __lt__(self, other: object) -> bool:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __le__(self, other: object) -> bool:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() <= 0

    def __gt__(self, other: object) -> bool:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() > 0

    def __ge__(self, other: object) -> bool:
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() >= 0

    def __abs__(self) -> ExactReal:
        return -self if self.sign() < 0 else self

    # -- conversion --------------------------------------------------------

    def __float__(self) -> float:
        return sum(float(c) * _SQRT[r] for r, c in self._items())

    def to_string(self) -> str:
        parts = []
        for r, c in self._items():
            if not c:
                continue
            mag = abs(c)
            if r == 1:
                text = str(mag)
            elif mag == 1:
                text = f"sqrt{r}"
            else:
                text = f"{mag}*sqrt{r}"
            if not parts:
                parts.append(text if c > 0 else "-" + text)
            else:
                parts.append(("+ " if c > 0 else "- ") + text)
        return " ".join(parts) if parts else "0"

    __str__ = to_string

    def __repr__(self) -> str:
        return f"ExactReal({self.to_string()!r})"


def _sign_q2(a: Fraction, b: Fraction) -> int:
    """Sign of a + b*sqrt2."""
    sa = (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sa or sb
    # opposite signs: compare a^2 with 2 b^2
    d = a * a - 2 * b * b
    return sa * ((d > 0) - (d < 0))


ZERO = ExactReal()
ONE = ExactReal(1)


def _squarefree_split(n: int) -> tuple[int, int]:
    """Return (s, f) with n = f*f*s and s squarefree."""
    s, f = 1, 1
    p = 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            f *= p
        if n % p == 0:
            n //= p
            s *= p
        p += 1
    return s * n, f


def from_sqrt(r: Rational | int | str) -> ExactReal:
    """Exact square root of a non-negative rational.

    >>> from_sqrt(Fraction(1, 2))
    ExactReal('1/2*sqrt2')
    """
    q = Fraction(r)
    if q < 0:
        raise UnrepresentableRadical(f"sqrt of negative value {q}")
    if q == 0:
        return ZERO
    # sqrt(p/q) = sqrt(p*q)/q
    s, f = _squarefree_split(q.numerator * q.denominator)
    if s not in RADICALS:
        raise UnrepresentableRadical(f"sqrt({q}) needs sqrt{s}")
    coeff = Fraction(f, q.denominator)
    return ExactReal(**{f"c{s}": coeff})


def add(x: ExactReal, y: ExactReal) -> ExactReal:
    return x + y


def mul(x: ExactReal, y: ExactReal) -> ExactReal:
    return x * y


def neg(x: ExactReal) -> ExactReal:
    return -x


def eq(x: ExactReal, y: ExactReal) -> bool:
    return x == y


def to_float(x: ExactReal | float) -> float:
    return float(x)


# -- parsing --------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<sqrt>sqrt)\s*(?P<rad>\d+)?|(?P<num>\d+(?:\s*/\s*\d+)?)|(?P<op>[-+*/()]))"
)


class _ExprParser:
    """Recursive-descent parser for sums of products of rationals and square roots."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens: list[tuple[str, str]] = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse amplitude {self.text!r} at offset {pos}")
            pos = m.end()
            if m.group("sqrt"):
                rad = m.group("rad")
                self.tokens.append(("sqrtn", rad) if rad else ("sqrt", ""))
            elif m.group("num"):
                self.tokens.append(("num", m.group("num").replace(" ", "")))
            else:
                self.tokens.append(("op", m.group("op")))
        self.i = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise ValueError(f"unexpected end of amplitude {self.text!r}")
        self.i += 1
        return tok

    def expect(self, op: str) -> None:
        tok = self.take()
        if tok != ("op", op):
            raise ValueError(f"expected {op!r} in amplitude {self.text!r}")

    def parse(self) -> ExactReal:
        value = self.expr()
        if self.peek() is not None:
            raise ValueError(f"trailing input in amplitude {self.text!r}")
        return value

    def expr(self) -> ExactReal:
        value = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> ExactReal:
        value = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.factor()
            value = value * rhs if op == "*" else value / rhs
        return value

    def factor(self) -> ExactReal:
        kind, text = self.take()
        if (kind, text) == ("op", "-"):
            return -self.factor()
        if (kind, text) == ("op", "+"):
            return self.factor()
        if (kind, text) == ("op", "("):
            value = self.expr()
            self.expect(")")
            return value
        if kind == "num":
            return ExactReal(Fraction(text))
        if kind == "sqrtn":
            return from_sqrt(int(text))
        if kind == "sqrt":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            if not inner.is_rational():
                raise UnrepresentableRadical(f"nested radical in {self.text!r}")
            return from_sqrt(inner.c1)
        raise ValueError(f"unexpected {text!r} in amplitude {self.text!r}")


def parse_exact(text: str) -> ExactReal:
    """Parse ``"1/2 - 1/3*sqrt2"`` or ``"sqrt(2/3)*sqrt(1/2)"`` into an ExactReal."""
    return _ExprParser(text).parse()
