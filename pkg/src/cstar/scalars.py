"""Exact scalars: rationals, dyadics, Gaussian rationals and rational quaternions.

Rationals are plain :class:`fractions.Fraction` values.  The other three types
are small immutable value classes that interoperate with ``int`` and
``Fraction`` operands.

Text grammar (shared by the renderers and parsers)::

    rational     p/q  or  p
    dyadic       m/2^k  or  m
    gaussian     a+bi      e.g. 1/2-3/4i
    quaternion   a+bi+cj+dk
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

from .errors import DivisionByZero, ParseError

Rational = Fraction

__all__ = [
    "Rational",
    "Dyadic",
    "GaussianRational",
    "RationalQuaternion",
    "Scalar",
    "scalar_arith",
    "to_float",
    "parse_rational",
    "parse_dyadic",
    "parse_gaussian",
    "parse_quaternion",
    "format_scalar",
    "as_fraction",
    "rational_sqrt_bounds",
]


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, Dyadic):
        return x.to_fraction()
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


class Dyadic:
    """The number ``mantissa * 2**exponent`` with an odd (or zero) mantissa."""

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int, exponent: int = 0):
        mantissa = int(mantissa)
        exponent = int(exponent)
        if mantissa == 0:
            exponent = 0
        else:
            tz = (mantissa & -mantissa).bit_length() - 1
            mantissa >>= tz
            exponent += tz
        object.__setattr__(self, "mantissa", mantissa)
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def from_fraction(cls, x) -> "Dyadic":
        x = as_fraction(x)
        den = x.denominator
        if den & (den - 1):
            raise ValueError(f"{x} is not a dyadic rational")
        return cls(x.numerator, -(den.bit_length() - 1))

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        return cls(1, k)

    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __float__(self):
        return math.ldexp(float(self.mantissa), self.exponent)

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.mantissa == other.mantissa and self.exponent == other.exponent
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return self.to_fraction() < as_fraction(other)

    def __le__(self, other):
        return self.to_fraction() <= as_fraction(other)

    def __gt__(self, other):
        return self.to_fraction() > as_fraction(other)

    def __ge__(self, other):
        return self.to_fraction() >= as_fraction(other)

    def __neg__(self):
        return Dyadic(-self.mantissa, self.exponent)

    def __add__(self, other):
        if isinstance(other, int):
            other = Dyadic(other)
        if not isinstance(other, Dyadic):
            return NotImplemented
        e = min(self.exponent, other.exponent)
        return Dyadic(
            (self.mantissa << (self.exponent - e)) + (other.mantissa << (other.exponent - e)), e
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            other = Dyadic(other)
        if not isinstance(other, Dyadic):
            return NotImplemented
        return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Dyadic({format_scalar(self)})"

    def __str__(self):
        return format_scalar(self)


class GaussianRational:
    """An element ``re + im*i`` of Q(i)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", as_fraction(re))
        object.__setattr__(self, "im", as_fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @staticmethod
    def _coerce(x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction, Dyadic)):
            return GaussianRational(x, 0)
        return None

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self):
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def inverse(self):
        n = self.abs2()
        if n == 0:
            raise DivisionByZero("division by zero in Q(i)")
        return GaussianRational(self.re / n, -self.im / n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({format_scalar(self)})"

    def __str__(self):
        return format_scalar(self)


class RationalQuaternion:
    """A quaternion ``a + b i + c j + d k`` with rational components."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a=0, b=0, c=0, d=0):
        object.__setattr__(self, "a", as_fraction(a))
        object.__setattr__(self, "b", as_fraction(b))
        object.__setattr__(self, "c", as_fraction(c))
        object.__setattr__(self, "d", as_fraction(d))

    def __setattr__(self, name, value):
        raise AttributeError("RationalQuaternion is immutable")

    @staticmethod
    def _coerce(x):
        if isinstance(x, RationalQuaternion):
            return x
        if isinstance(x, (int, Fraction, Dyadic)):
            return RationalQuaternion(x)
        return None

    @property
    def components(self):
        return (self.a, self.b, self.c, self.d)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.components == o.components

    def __hash__(self):
        if not (self.b or self.c or self.d):
            return hash(self.a)
        return hash(self.components)

    def __bool__(self):
        return any(self.components)

    def __neg__(self):
        return RationalQuaternion(-self.a, -self.b, -self.c, -self.d)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RationalQuaternion(*(x + y for x, y in zip(self.components, o.components)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RationalQuaternion(*(x - y for x, y in zip(self.components, o.components)))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a1, b1, c1, d1 = self.components
        a2, b2, c2, d2 = o.components
        return RationalQuaternion(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )

    def __rmul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self

    def conj(self):
        return RationalQuaternion(self.a, -self.b, -self.c, -self.d)

    def abs2(self) -> Fraction:
        return sum((x * x for x in self.components), Fraction(0))

    def inverse(self):
        n = self.abs2()
        if n == 0:
            raise DivisionByZero("division by zero in H")
        return RationalQuaternion(self.a / n, -self.b / n, -self.c / n, -self.d / n)

    def __truediv__(self, other):
        # right division: self * other^-1
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __repr__(self):
        return f"RationalQuaternion({format_scalar(self)})"

    def __str__(self):
        return format_scalar(self)


Scalar = Union[int, Fraction, Dyadic, GaussianRational, RationalQuaternion]


def _conj(x):
    if isinstance(x, (GaussianRational, RationalQuaternion)):
        return x.conj()
    return x


def _abs2(x) -> Fraction:
    if isinstance(x, (GaussianRational, RationalQuaternion)):
        return x.abs2()
    f = as_fraction(x)
    return f * f


def _is_zero(x) -> bool:
    return not bool(x) if not isinstance(x, Dyadic) else x.mantissa == 0


def _normalize(x):
    if isinstance(x, int):
        return Fraction(x)
    return x


def scalar_arith(lhs, rhs=None, op: str = "add"):
    """Exact arithmetic on two scalars; ``conj`` and ``abs2`` ignore ``rhs``."""
    if op == "conj":
        return _normalize(_conj(lhs))
    if op in ("abs2", "abs²"):
        return _abs2(lhs)
    a = lhs.to_fraction() if isinstance(lhs, Dyadic) else lhs
    b = rhs.to_fraction() if isinstance(rhs, Dyadic) else rhs
    if op == "add":
        return _normalize(a + b)
    if op == "sub":
        return _normalize(a - b)
    if op == "mul":
        return _normalize(a * b)
    if op == "div":
        if _is_zero(b):
            raise DivisionByZero("division by zero")
        if isinstance(b, (int, Fraction)) and isinstance(a, (int, Fraction)):
            return Fraction(a) / Fraction(b)
        if isinstance(b, (int, Fraction)):
            return a * (1 / Fraction(b))
        return a * b.inverse()
    raise ValueError(f"unknown scalar operation {op!r}")


def _frac_to_float(x: Fraction):
    f = float(x)
    err = abs(Fraction(f) - x)
    # round the bound up so it is never an underestimate
    e = float(err)
    if Fraction(e) < err:
        e = math.nextafter(e, math.inf)
    return f, e


def to_float(x):
    """Round each component to the nearest double.

    Returns ``(components, error)`` where ``components`` is a tuple of floats
    (one for a rational, two for Q(i), four for H) and ``error`` bounds the
    largest absolute rounding error over the components.
    """
    if isinstance(x, Dyadic):
        parts = (x.to_fraction(),)
    elif isinstance(x, GaussianRational):
        parts = (x.re, x.im)
    elif isinstance(x, RationalQuaternion):
        parts = x.components
    else:
        parts = (as_fraction(x),)
    out = []
    err = 0.0
    for p in parts:
        f, e = _frac_to_float(p)
        out.append(f)
        err = max(err, e)
    return tuple(out), err


def rational_sqrt_bounds(x, bits: int = 64):
    """Rationals ``lo <= sqrt(x) <= hi`` with ``hi - lo <= 2**-bits``."""
    x = as_fraction(x)
    if x < 0:
        raise ValueError("negative input")
    scale = 1 << bits
    n = x * scale * scale
    fl = n.numerator // n.denominator
    r = math.isqrt(fl)
    lo = Fraction(r, scale)
    hi = Fraction(r + 1, scale)
    if lo * lo == x:
        hi = lo
    return lo, hi


# -- rendering -------------------------------------------------------------


def _fmt_frac(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def _fmt_signed(x: Fraction, unit: str) -> str:
    sign = "-" if x < 0 else "+"
    return f"{sign}{_fmt_frac(abs(x))}{unit}"


def format_scalar(x) -> str:
    if isinstance(x, Dyadic):
        if x.exponent >= 0:
            return str(x.mantissa << x.exponent)
        return f"{x.mantissa}/2^{-x.exponent}"
    if isinstance(x, GaussianRational):
        return _fmt_frac(x.re) + _fmt_signed(x.im, "i")
    if isinstance(x, RationalQuaternion):
        return (
            _fmt_frac(x.a) + _fmt_signed(x.b, "i") + _fmt_signed(x.c, "j") + _fmt_signed(x.d, "k")
        )
    return _fmt_frac(as_fraction(x))


# -- parsing ---------------------------------------------------------------

_RAT = r"\d+(?:/\d+(?:\^\d+)?)?"
_TERM_RE = re.compile(rf"([+-]?)\s*({_RAT})?\s*([ijk]?)")


def _parse_unsigned_rational(s: str) -> Fraction:
    if "/" not in s:
        return Fraction(int(s))
    num, den = s.split("/", 1)
    if "^" in den:
        base, exp = den.split("^", 1)
        d = int(base) ** int(exp)
    else:
        d = int(den)
    if d == 0:
        raise ParseError(f"zero denominator in {s!r}")
    return Fraction(int(num), d)


def parse_rational(text: str) -> Fraction:
    s = text.strip()
    m = re.fullmatch(rf"([+-]?)\s*({_RAT})", s)
    if not m:
        raise ParseError(f"not a rational: {text!r}")
    v = _parse_unsigned_rational(m.group(2))
    return -v if m.group(1) == "-" else v


def parse_dyadic(text: str) -> Dyadic:
    v = parse_rational(text)
    try:
        return Dyadic.from_fraction(v)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _parse_components(text: str, units: str) -> dict:
    s = text.replace(" ", "")
    if not s:
        raise ParseError("empty scalar")
    comps = {u: Fraction(0) for u in units}
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if not m or m.end() == pos:
            raise ParseError(f"cannot parse scalar {text!r}")
        sign, num, unit = m.groups()
        if not first and not sign:
            raise ParseError(f"missing sign between terms in {text!r}")
        if num is None and not unit:
            raise ParseError(f"cannot parse scalar {text!r}")
        if unit not in units:
            raise ParseError(f"unit {unit!r} not allowed in {text!r}")
        v = _parse_unsigned_rational(num) if num is not None else Fraction(1)
        comps[unit] += -v if sign == "-" else v
        pos = m.end()
        first = False
    return comps


def parse_gaussian(text: str) -> GaussianRational:
    c = _parse_components(text, ("", "i"))
    return GaussianRational(c[""], c["i"])


def parse_quaternion(text: str) -> RationalQuaternion:
    c = _parse_components(text, ("", "i", "j", "k"))
    return RationalQuaternion(c[""], c["i"], c["j"], c["k"])


def parse_scalar(text: str, ring: str):
    """Parse an entry for a matrix over ``ring`` ('R', 'C' or 'H')."""
    if ring == "R":
        return parse_rational(text)
    if ring == "C":
        return parse_gaussian(text)
    if ring == "H":
        return parse_quaternion(text)
    raise ValueError(f"unknown ring {ring!r}")
