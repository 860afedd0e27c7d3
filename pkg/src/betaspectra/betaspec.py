"""Bases beta > 1, given numerically or as a real root of an integer polynomial.

A numeric base is stored as the exact rational value of its literal; the
``precision_bits`` attribute fixes the working precision used when digits are
computed from it.  A polynomial base carries an exact model of Q(beta) so that
orbits of rational points can be iterated without rounding.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property, lru_cache

import mpmath

from .errors import AmbiguousDigit

__all__ = ["AlgebraicField", "BetaSpec", "to_fraction"]

_MAX_FLOOR_BITS = 1 << 14


def to_fraction(x) -> Fraction:
    """Exact rational value of an int, float, str, Fraction or mpf."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        man = int(man)
        return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2 ** (-exp))
    return Fraction(x)


def _horner(coeffs, x):
    # coeffs ascending
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _sign(v) -> int:
    return (v > 0) - (v < 0)


class AlgebraicField:
    """Exact arithmetic in Q(beta) for a real root of an irreducible polynomial.

    Elements are tuples of Fractions ``(c_0, ..., c_{d-1})`` standing for
    ``sum c_i beta**i``.
    """

    def __init__(self, minpoly, lo: Fraction, hi: Fraction):
        # minpoly: ascending integer coefficients
        self.minpoly = tuple(int(c) for c in minpoly)
        self.degree = len(self.minpoly) - 1
        lead = self.minpoly[-1]
        self._reduce = tuple(Fraction(-c, lead) for c in self.minpoly[:-1])
        s_lo, s_hi = self.sign_at(lo), self.sign_at(hi)
        if s_lo * s_hi >= 0:
            raise ValueError("isolating interval must bracket a sign change")
        self._lo, self._hi = Fraction(lo), Fraction(hi)
        self._sign_lo = s_lo

    def sign_at(self, x: Fraction) -> int:
        return _sign(_horner(self.minpoly, Fraction(x)))

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Bracket of beta with width below ``2**-bits`` (refined by bisection)."""
        lo, hi = self._lo, self._hi
        target = Fraction(1, 2**bits)
        while hi - lo >= target:
            mid = (lo + hi) / 2
            s = self.sign_at(mid)
            if s == 0:
                lo = hi = mid
                break
            if s == self._sign_lo:
                lo = mid
            else:
                hi = mid
        # keep the tightest bracket seen so far
        if hi - lo < self._hi - self._lo:
            self._lo, self._hi = lo, hi
        return lo, hi

    def approx(self, bits: int) -> mpmath.mpf:
        lo, hi = self.enclosure(bits + 8)
        with mpmath.workprec(bits):
            return mpmath.mpf(lo.numerator) / lo.denominator

    # -- element arithmetic -------------------------------------------------
    def zero(self):
        return (Fraction(0),) * self.degree

    def from_rational(self, q) -> tuple:
        q = Fraction(q)
        return (q,) + (Fraction(0),) * (self.degree - 1)

    def beta(self) -> tuple:
        return self.times_beta(self.from_rational(1))

    def times_beta(self, e) -> tuple:
        top = e[-1]
        shifted = (Fraction(0),) + tuple(e[:-1])
        if not top:
            return shifted
        return tuple(s + top * r for s, r in zip(shifted, self._reduce))

    def add_rational(self, e, q) -> tuple:
        return (e[0] + q,) + tuple(e[1:])

    @staticmethod
    def is_zero(e) -> bool:
        return not any(e)

    def rational_value(self, e):
        """The rational value of ``e`` if it lies in Q, else None."""
        if any(e[1:]):
            return None
        return e[0]

    def to_mpf(self, e, bits: int) -> mpmath.mpf:
        extra = max((abs(c.numerator).bit_length() for c in e), default=0)
        with mpmath.workprec(bits + extra + 16):
            b = self.approx(bits + extra + 16)
            acc = mpmath.mpf(0)
            for c in reversed(e):
                acc = acc * b + mpmath.mpf(c.numerator) / c.denominator
        with mpmath.workprec(bits):
            return +acc

    def floor(self, e) -> int:
        """Certified floor of the real number represented by ``e``."""
        q = self.rational_value(e)
        if q is not None:
            return math.floor(q)
        size = max(max(abs(c.numerator).bit_length(), c.denominator.bit_length()) for c in e)
        bits = 64 + size + 4 * self.degree
        cap = max(_MAX_FLOOR_BITS, 4 * bits)
        while bits <= cap:
            lo, hi = self.enclosure(bits)
            mid = (lo + hi) / 2
            half = (hi - lo) / 2
            val = _horner(e, mid)
            bound = max(abs(lo), abs(hi))
            deriv = sum(i * abs(c) * bound ** (i - 1) for i, c in enumerate(e) if i)
            r = deriv * half
            f_lo, f_hi = math.floor(val - r), math.floor(val + r)
            if f_lo == f_hi:
                return f_lo
            if self.is_zero(self.add_rational(e, -f_hi)):
                return f_hi
            bits *= 2
        raise AmbiguousDigit("could not separate an orbit point from a branch boundary")


@lru_cache(maxsize=256)
def _field_for(poly: tuple, lo: Fraction, hi: Fraction) -> AlgebraicField:
    import sympy

    x = sympy.Symbol("x")
    _, factors = sympy.factor_list(sympy.Poly(list(poly), x))
    chosen = None
    for f, _mult in factors:
        if f.degree() < 1:
            continue
        if f.count_roots(sympy.Rational(lo.numerator, lo.denominator),
                         sympy.Rational(hi.numerator, hi.denominator)) == 0:
            continue
        if chosen is not None:
            raise ValueError("interval contains roots of several factors")
        chosen = f
    if chosen is None:
        raise ValueError("polynomial has no root in the isolating interval")
    lo_r = sympy.Rational(lo.numerator, lo.denominator)
    hi_r = sympy.Rational(hi.numerator, hi.denominator)
    if chosen.count_roots(lo_r, hi_r) != 1:
        raise ValueError("interval does not isolate a single root")
    coeffs = [int(c) for c in chosen.all_coeffs()]
    if coeffs[0] < 0:
        coeffs = [-c for c in coeffs]
    asc = tuple(reversed(coeffs))
    if _horner(asc, lo) == 0 or _horner(asc, hi) == 0:
        raise ValueError("root lies on the boundary of the isolating interval")
    return AlgebraicField(asc, lo, hi)


_POLY_RE = re.compile(r"^poly:\s*([-+0-9,\s]+)@\(\s*([^,]+),\s*([^)]+)\)\s*$")


@dataclass(frozen=True)
class BetaSpec:
    """A non-integer base beta > 1.

    Exactly one of ``rational`` (numeric definition) or ``poly``/``interval``
    (algebraic definition) is set.  ``poly`` holds integer coefficients in
    descending degree order.
    """

    rational: Fraction | None = None
    poly: tuple[int, ...] | None = None
    interval: tuple[Fraction, Fraction] | None = None
    precision_bits: int = 53

    def __post_init__(self):
        if self.precision_bits < 8:
            raise ValueError("precision_bits must be at least 8")
        if (self.rational is None) == (self.poly is None):
            raise ValueError("give either a numeric value or a polynomial")
        if self.rational is not None:
            if self.rational <= 1:
                raise ValueError("beta must exceed 1")
            if self.rational.denominator == 1:
                raise ValueError("integer bases are not supported")
        else:
            lo, hi = self.interval
            if not lo < hi:
                raise ValueError("empty isolating interval")
            field = self.field
            root = field.rational_value(field.beta())
            if root is not None and root.denominator == 1:
                raise ValueError("integer bases are not supported")
            if hi <= 1 or field.enclosure(8)[1] <= 1:
                raise ValueError("beta must exceed 1")
            # invariant: enclosure narrower than 2**(-precision_bits/2)
            field.enclosure(self.precision_bits // 2 + 1)

    # -- constructors -------------------------------------------------------
    @classmethod
    def numeric(cls, value, precision_bits: int = 53) -> "BetaSpec":
        return cls(rational=to_fraction(value), precision_bits=precision_bits)

    @classmethod
    def from_polynomial(cls, coeffs, lo, hi, precision_bits: int = 128) -> "BetaSpec":
        coeffs = tuple(int(c) for c in coeffs)
        while coeffs and coeffs[0] == 0:
            coeffs = coeffs[1:]
        if len(coeffs) < 2:
            raise ValueError("polynomial must have degree at least 1")
        return cls(poly=coeffs, interval=(to_fraction(lo), to_fraction(hi)),
                   precision_bits=precision_bits)

    @classmethod
    def parse(cls, text: str, precision_bits: int | None = None) -> "BetaSpec":
        """Parse ``"1.75"`` or ``"poly:1,-3,-2,0,-3@(3,4)"``."""
        text = text.strip()
        m = _POLY_RE.match(text)
        if m:
            coeffs = [int(c) for c in m.group(1).split(",") if c.strip()]
            kw = {} if precision_bits is None else {"precision_bits": precision_bits}
            return cls.from_polynomial(coeffs, m.group(2).strip(), m.group(3).strip(), **kw)
        if text.startswith("poly:"):
            raise ValueError(f"malformed polynomial beta spec: {text!r}")
        return cls.numeric(text, precision_bits or 53)

    def with_precision(self, bits: int) -> "BetaSpec":
        return replace(self, precision_bits=int(bits))

    # -- derived data -------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.poly is not None

    @cached_property
    def field(self) -> AlgebraicField | None:
        if self.poly is None:
            return None
        lo, hi = self.interval
        return _field_for(self.poly, lo, hi)

    @cached_property
    def floor(self) -> int:
        if self.rational is not None:
            return math.floor(self.rational)
        return self.field.floor(self.field.beta())

    def value_at(self, bits: int) -> mpmath.mpf:
        if self.rational is not None:
            with mpmath.workprec(bits):
                return mpmath.mpf(self.rational.numerator) / self.rational.denominator
        return self.field.approx(bits)

    @property
    def value(self) -> mpmath.mpf:
        return self.value_at(self.precision_bits)

    def __float__(self) -> float:
        return float(self.value_at(64))

    def describe(self) -> dict:
        if self.rational is not None:
            definition = {"numeric": str(self.rational) if self.rational.denominator != 1
                          else str(self.rational.numerator)}
        else:
            lo, hi = self.interval
            definition = {"poly": list(self.poly), "interval": [str(lo), str(hi)]}
        return {"value": repr(float(self)), "definition": definition,
                "precision_bits": self.precision_bits}

    def spec_string(self) -> str:
        if self.rational is not None:
            return repr(float(self)) if Fraction(float(self)) == self.rational else str(self.rational)
        lo, hi = self.interval
        return "poly:" + ",".join(map(str, self.poly)) + f"@({lo},{hi})"

    def __repr__(self):
        return f"BetaSpec({self.spec_string()}, ~{float(self):.12g})"
