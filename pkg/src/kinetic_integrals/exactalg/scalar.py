"""Exact Gaussian rationals ``a + b*i`` with ``a, b`` in Q."""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

__all__ = ["Scalar", "as_scalar", "ZERO", "ONE", "I"]

_LITERAL = re.compile(
    r"^(?P<re>[+-]?\d+(?:/\d+)?(?![\d/]*\*?i$))?"
    r"(?:(?P<im>[+-]?(?:\d+(?:/\d+)?)?)\*?i)?$"
)


def _q(value) -> mpq:
    if isinstance(value, float):
        raise TypeError("floats are not exact; pass a Fraction or a string")
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    return mpq(value)


class Scalar:
    """Immutable Gaussian rational.

    Both parts are ``gmpy2.mpq`` and therefore always in lowest terms with a
    positive denominator.
    """

    __slots__ = ("re", "im", "_hash")

    def __init__(self, re=0, im=0):
        self.re = _q(re)
        self.im = _q(im)
        self._hash = None

    @classmethod
    def _raw(cls, re: mpq, im: mpq) -> "Scalar":
        obj = cls.__new__(cls)
        obj.re = re
        obj.im = im
        obj._hash = None
        return obj

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        """Parse literals such as ``"3/4"``, ``"-2i"``, ``"3/4+1/2i"``, ``"i"``."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty scalar literal")
        m = _LITERAL.match(s)
        if m is None or (m.group("re") is None and m.group("im") is None):
            raise ValueError(f"malformed scalar literal {text!r}")
        re_part = mpq(m.group("re").lstrip("+")) if m.group("re") else mpq(0)
        im_txt = m.group("im")
        if im_txt is None:
            im_part = mpq(0)
        elif im_txt in ("+", "-", ""):
            im_part = mpq(-1 if im_txt == "-" else 1)
        else:
            im_part = mpq(im_txt.lstrip("+"))
        return cls._raw(re_part, im_part)

    # -- predicates -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return Scalar._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return Scalar._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Scalar._raw(-self.re, -self.im)

    def __pos__(self):
        return self

    def __mul__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        if not self.im and not o.im:
            return Scalar._raw(self.re * o.re, mpq(0))
        return Scalar._raw(self.re * o.re - self.im * o.im,
                           self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if not self.im:
            if not self.re:
                raise ZeroDivisionError("Scalar division by zero")
            return Scalar._raw(1 / self.re, mpq(0))
        n = self.re * self.re + self.im * self.im
        return Scalar._raw(self.re / n, -self.im / n)

    def __truediv__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "Scalar":
        return Scalar._raw(self.re, -self.im)

    # -- comparison / hashing -----------------------------------------
    def __eq__(self, other):
        o = as_scalar(other, strict=False)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.re, self.im))
        return self._hash

    def sort_key(self):
        return (self.re, self.im)

    # -- conversion -----------------------------------------------------
    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def numeric(self):
        """Python complex when exact in double precision, else numpy clongdouble."""
        c = complex(self)
        if mpq(c.real) == self.re and mpq(c.imag) == self.im:
            return c
        import numpy as np

        def ld(x):
            return np.longdouble(str(int(x.numerator))) / np.longdouble(str(int(x.denominator)))
        return np.clongdouble(ld(self.re) + 1j * ld(self.im)) if self.im else np.clongdouble(ld(self.re))

    def to_fractions(self) -> tuple[Fraction, Fraction]:
        return (Fraction(int(self.re.numerator), int(self.re.denominator)),
                Fraction(int(self.im.numerator), int(self.im.denominator)))

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return _imag_str(self.im)
        im = _imag_str(self.im)
        return f"{self.re}{im if im.startswith('-') else '+' + im}"

    def __repr__(self):
        return f"Scalar('{self}')"

    @property
    def bit_size(self) -> int:
        return (self.re.numerator.bit_length() + self.re.denominator.bit_length()
                + self.im.numerator.bit_length() + self.im.denominator.bit_length())


def _imag_str(q: mpq) -> str:
    if q == 1:
        return "i"
    if q == -1:
        return "-i"
    return f"{q}i"


def as_scalar(value, strict: bool = True):
    """Coerce ints, Fractions, mpq, strings and complex-free numbers to Scalar."""
    if isinstance(value, Scalar):
        return value
    if isinstance(value, (int, Rational)) or type(value).__name__ == "mpq":
        return Scalar._raw(_q(value), mpq(0))
    if isinstance(value, str):
        return Scalar.parse(value)
    if strict:
        raise TypeError(f"cannot convert {type(value).__name__} to Scalar")
    return None


ZERO = Scalar()
ONE = Scalar(1)
I = Scalar(0, 1)
