"""Greedy and quasi-greedy beta-expansions, orbits of 1 and Parry admissibility."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath

from .betaspec import BetaSpec, to_fraction
from .errors import InadmissibleWord, InsufficientDigits

__all__ = [
    "DigitSequence",
    "OrbitOfOne",
    "PeriodicWord",
    "beta_from_digits",
    "classify_simple",
    "greedy_digits",
    "is_admissible",
    "orbit_of_one",
    "quasi_greedy_digits",
    "trust_horizon",
]

GUARD_DIGITS = 8


@dataclass(frozen=True)
class PeriodicWord:
    """The infinite sequence ``prefix + cycle + cycle + ...`` (0-based)."""

    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("cycle must be non-empty")

    def __getitem__(self, i: int):
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def take(self, n: int) -> tuple:
        return tuple(self[i] for i in range(n))

    def shift(self, k: int) -> "PeriodicWord":
        if k <= len(self.prefix):
            return PeriodicWord(self.prefix[k:], self.cycle)
        r = (k - len(self.prefix)) % len(self.cycle)
        return PeriodicWord((), self.cycle[r:] + self.cycle[:r])

    @property
    def is_finite(self) -> bool:
        return not any(self.cycle)

    def support_end(self) -> int:
        """Length of the word up to its last nonzero entry (finite words only)."""
        nz = [i for i, v in enumerate(self.prefix) if v]
        return nz[-1] + 1 if nz else 0


@dataclass(frozen=True)
class DigitSequence:
    beta: BetaSpec
    point: Fraction
    greedy: tuple[int, ...]
    quasi_greedy: tuple[int, ...]
    simple_index: int | None
    trust_horizon: int
    greedy_word: PeriodicWord | None = None
    quasi_word: PeriodicWord | None = None

    @property
    def simple(self) -> bool:
        return self.simple_index is not None

    def quasi_digit(self, n: int) -> int:
        """d_n for n >= 1, beyond the stored horizon when the word is known."""
        if n <= len(self.quasi_greedy):
            return self.quasi_greedy[n - 1]
        if self.quasi_word is None:
            raise InsufficientDigits(f"quasi-greedy digit {n} beyond horizon")
        return self.quasi_word[n - 1]

    def greedy_digit(self, n: int) -> int:
        if n <= len(self.greedy):
            return self.greedy[n - 1]
        if self.greedy_word is None:
            raise InsufficientDigits(f"greedy digit {n} beyond horizon")
        return self.greedy_word[n - 1]


@dataclass(frozen=True)
class OrbitOfOne:
    beta: BetaSpec
    forward: tuple
    left_limits: tuple
    trust_horizon: int
    cycle: tuple[int, int] | None = None  # (start, length): tau^start = tau^(start+length)


@dataclass(frozen=True)
class _Orbit:
    digits: tuple[int, ...]
    values: tuple  # tau^0 .. tau^h as mpf
    simple_index: int | None
    trust: int
    cycle: tuple[int, int] | None


def trust_horizon(beta: BetaSpec, horizon: int) -> int:
    if beta.is_exact:
        return horizon
    reach = math.floor(beta.precision_bits * math.log(2) / math.log(float(beta))) - GUARD_DIGITS
    return max(0, min(horizon, reach))


def _extend_cycle(seq: list, cycle, horizon: int) -> list:
    # seq[i] = seq[start + (i - start) % length] for i >= start
    start, length = cycle
    block = seq[start:start + length]
    while len(seq) < horizon:
        seq.append(block[(len(seq) - start) % length])
    return seq


def _exact_orbit(beta: BetaSpec, x: Fraction, horizon: int) -> _Orbit:
    F = beta.field
    e = F.from_rational(x)
    seen = {e: 0}
    elems = [e]
    digits: list[int] = []
    simple = None
    cycle = None
    for n in range(1, horizon + 1):
        t = F.times_beta(e)
        k = F.floor(t)
        e = F.add_rational(t, -k)
        digits.append(k)
        elems.append(e)
        if simple is None and k >= 1 and F.is_zero(e):
            simple = n
        if e in seen:
            cycle = (seen[e], n - seen[e])
            break
        seen[e] = n
    bits = beta.precision_bits
    values = [F.to_mpf(v, bits) for v in elems]
    if cycle is not None:
        _extend_cycle(digits, cycle, horizon)
        _extend_cycle(values, cycle, horizon + 1)
    return _Orbit(tuple(digits[:horizon]), tuple(values[:horizon + 1]), simple, horizon, cycle)


def _numeric_orbit(beta: BetaSpec, x: Fraction, horizon: int) -> _Orbit:
    bits = beta.precision_bits
    top = beta.floor
    reach = trust_horizon(beta, horizon)
    digits: list[int] = []
    simple = None
    cycle = None
    with mpmath.workprec(bits):
        b = beta.value_at(bits)
        eps = mpmath.ldexp(1, -bits)
        y = mpmath.mpf(x.numerator) / x.denominator
        values = [y]
        err = eps
        if y == 0:
            cycle = (0, 1)
        for n in range(1, horizon + 1):
            if cycle is not None:
                break
            t = b * y
            rad = b * (err + 2 * eps)
            kn = int(mpmath.nint(t))
            if n <= reach and 1 <= kn <= top and abs(t - kn) <= rad:
                # orbit meets a branch boundary within the error radius;
                # past the trusted horizon the radius says nothing
                digits.append(kn)
                values.append(mpmath.mpf(0))
                simple = n
                cycle = (n, 1)
                break
            k = min(max(int(mpmath.floor(t)), 0), top)
            y = t - k
            digits.append(k)
            values.append(y)
            err = rad
            if y == 0:
                cycle = (n, 1)
    if cycle is not None:
        # the orbit has reached the fixed point 0
        digits += [0] * (horizon - len(digits))
        values += [mpmath.mpf(0)] * (horizon + 1 - len(values))
    return _Orbit(tuple(digits[:horizon]), tuple(values[:horizon + 1]), simple, reach, cycle)


@lru_cache(maxsize=4096)
def _orbit(beta: BetaSpec, x: Fraction, horizon: int) -> _Orbit:
    if not 0 <= x <= 1:
        raise ValueError("point must lie in [0, 1]")
    if beta.is_exact:
        return _exact_orbit(beta, x, horizon)
    return _numeric_orbit(beta, x, horizon)


def _greedy_word(orb: _Orbit) -> PeriodicWord | None:
    if orb.cycle is None:
        return None
    start, length = orb.cycle
    d = orb.digits
    # a numeric orbit may reach 0 at the last computed step
    return PeriodicWord(d[:start], d[start:start + length] or (0,) * length)


def _quasi_of_one(beta: BetaSpec, horizon: int) -> tuple[tuple[int, ...], PeriodicWord | None]:
    orb = _orbit(beta, Fraction(1), horizon)
    if orb.simple_index is None:
        return orb.digits, _greedy_word(orb)
    L = orb.simple_index
    block = orb.digits[:L - 1] + (orb.digits[L - 1] - 1,)
    word = PeriodicWord((), block)
    return word.take(horizon), word


def _sequence(beta: BetaSpec, x, horizon: int) -> DigitSequence:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    x = to_fraction(x)
    orb = _orbit(beta, x, horizon)
    gword = _greedy_word(orb)
    L = orb.simple_index
    if L is None:
        quasi, qword = orb.digits, gword
    elif x == 1:
        quasi, qword = _quasi_of_one(beta, horizon)
    else:
        head = orb.digits[:L - 1] + (orb.digits[L - 1] - 1,)
        d1, w1 = _quasi_of_one(beta, max(1, horizon - L))
        quasi = (head + d1)[:horizon]
        qword = PeriodicWord(head + w1.prefix, w1.cycle) if w1 is not None else None
    return DigitSequence(beta, x, orb.digits, tuple(quasi), L, orb.trust, gword, qword)


def greedy_digits(beta: BetaSpec, x, horizon: int) -> DigitSequence:
    """Greedy digits a_n(beta, x) = floor(beta * tau^(n-1)(x)), n = 1..horizon.

    In numeric mode only the first ``trust_horizon`` digits are certified; an
    orbit that meets a branch boundary ``k/beta`` within the propagated error
    radius is taken to land on it (the point is reported simple).
    """
    return _sequence(beta, x, horizon)


def quasi_greedy_digits(beta: BetaSpec, x, horizon: int) -> DigitSequence:
    x = to_fraction(x)
    if not 0 < x <= 1:
        raise ValueError("quasi-greedy expansions are defined on (0, 1]")
    return _sequence(beta, x, horizon)


def classify_simple(beta: BetaSpec, x, horizon: int) -> int | None:
    """L(x) when the orbit of x is seen to hit {1/beta, ..., [beta]/beta}; else None.

    None means "not detected within the horizon", never a proof of non-simplicity.
    """
    return _orbit(beta, to_fraction(x), horizon).simple_index


def _is_less_than_reference(word: Sequence[int], ref: DigitSequence) -> bool:
    """Zero-padded ``word`` strictly below the quasi-greedy reference sequence."""
    avail = len(ref.quasi_greedy)
    for i, w in enumerate(word):
        if i >= avail and ref.quasi_word is None:
            raise InsufficientDigits("comparison undecided within the available digits")
        r = ref.quasi_digit(i + 1)
        if w != r:
            return w < r
    # word exhausted; zero padding is smaller unless the reference is zero from here on
    n = len(word)
    if ref.quasi_word is not None:
        rest = ref.quasi_word.shift(n)
        return any(rest.prefix) or any(rest.cycle)
    if any(ref.quasi_greedy[n:]):
        return True
    raise InsufficientDigits("comparison undecided within the available digits")


def is_admissible(word: Sequence[int], quasi_greedy_of_one: DigitSequence,
                  shifts_from: int = 0) -> bool:
    """Parry's criterion: every shift of the (zero-padded) word is below d(beta, 1).

    ``shifts_from=1`` checks only proper shifts, which is the right test for
    the greedy word of 1 itself.
    """
    top = quasi_greedy_of_one.beta.floor
    if any(w < 0 or w > top for w in word):
        return False
    return all(_is_less_than_reference(word[i:], quasi_greedy_of_one)
               for i in range(shifts_from, len(word)))


def _padded_less(a: Sequence[int], b: Sequence[int]) -> bool:
    n = max(len(a), len(b))
    aa = list(a) + [0] * (n - len(a))
    bb = list(b) + [0] * (n - len(b))
    return aa < bb


def beta_from_digits(word: Sequence[int], precision_bits: int = 128) -> BetaSpec:
    """The simple Parry number whose greedy expansion of 1 is ``word``."""
    w = [int(v) for v in word]
    while w and w[-1] == 0:
        w.pop()
    if not w or w[0] < 1 or any(v < 0 for v in w):
        raise InadmissibleWord("word must start with a positive digit")
    for i in range(1, len(w)):
        if not _padded_less(w[i:], w):
            raise InadmissibleWord(f"shift by {i} is not below the word")
    if len(w) == 1:
        raise InadmissibleWord("a one-digit word defines the integer base %d" % w[0])
    coeffs = [1] + [-v for v in w]
    return BetaSpec.from_polynomial(coeffs, w[0], w[0] + 1, precision_bits=precision_bits)


def orbit_of_one(beta: BetaSpec, horizon: int) -> OrbitOfOne:
    """Forward orbit tau^n(1) and left limits lim_{x->1-} tau^n(x), n = 0..horizon."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    orb = _orbit(beta, Fraction(1), horizon)
    fwd = orb.values
    L = orb.simple_index
    if L is None:
        left = fwd
    else:
        # quasi-greedy tails repeat with period L; tail n < L equals tau^n(1)
        one = fwd[0]
        left = tuple(one if n % L == 0 else fwd[n % L] for n in range(horizon + 1))
    return OrbitOfOne(beta, fwd, left, orb.trust, orb.cycle)
