"""The power series phi, phi-hat and psi of a base, and the dynamical zeta function.

All three series are evaluated in the scaled variable ``w = z / beta``.  When the
digit (or orbit) sequence is known to be eventually periodic the closed form
``H(w) + w**m C(w) / (1 - w**p)`` is used and the only error is rounding;
otherwise the partial sum carries the geometric tail bound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .betaspec import BetaSpec, to_fraction
from .errors import DomainError, NearPole, TooLarge
from .expansion import PeriodicWord, greedy_digits, orbit_of_one

__all__ = [
    "RationalForm",
    "SeriesEval",
    "SeriesEvaluator",
    "fix_count",
    "phi",
    "phi_derivative",
    "phi_hat",
    "psi",
    "rational_form",
    "zeta",
    "zeta_series",
]

EPS = 2.0**-52
DEFAULT_TAIL = 2.0**-56
AUTO_CEILING = 0.97
DETECT_HORIZON = 128  # exact orbit steps spent looking for a cycle
KINDS = ("phi", "phi_hat", "psi")


@dataclass(frozen=True)
class SeriesEval:
    value: complex
    tail_bound: float
    terms_used: int


@dataclass(frozen=True)
class RationalForm:
    """numerator(z) / denominator(z), coefficients in ascending powers of z."""

    numerator: tuple
    denominator: tuple

    def __call__(self, z):
        num = np.polynomial.polynomial.polyval(z, np.asarray(self.numerator))
        den = np.polynomial.polynomial.polyval(z, np.asarray(self.denominator))
        return num / den


@dataclass(frozen=True)
class _Coeffs:
    head: np.ndarray  # coefficients of w^0 .. w^(m-1)
    cycle: np.ndarray | None  # block repeated after w^m with period len(cycle)
    bound: float  # coefficient bound for the truncated tail
    periodic: bool

    @property
    def terms(self) -> int:
        return len(self.head) + (0 if self.cycle is None else len(self.cycle))


def _coeff_bound(beta: BetaSpec, kind: str) -> float:
    return 1.0 if kind == "psi" else float(beta.floor)


def horizon_for(q: float, bound: float, tol: float = DEFAULT_TAIL) -> int:
    """Smallest N with bound * q**(N+1) / (1-q) <= tol."""
    if q <= 0:
        return 1
    if q >= 1:
        raise DomainError("series diverges")
    n = math.log(tol * (1 - q) / bound) / math.log(q) - 1
    return max(1, math.ceil(n))


def _working_beta(beta: BetaSpec, n: int) -> BetaSpec:
    """A base whose digits are trustworthy up to index n."""
    need = math.ceil((n + 16) * math.log2(float(beta))) + 64
    return beta.with_precision(max(beta.precision_bits, need))


def _surrogate(beta: BetaSpec, n: int) -> BetaSpec:
    # numeric stand-in for an algebraic base whose orbit of 1 is not seen to cycle
    w = _working_beta(beta, n)
    return BetaSpec.numeric(to_fraction(w.value_at(w.precision_bits)), w.precision_bits)


def _word_coeffs(word: PeriodicWord) -> tuple[np.ndarray, np.ndarray | None]:
    head = np.array((0,) + tuple(word.prefix), dtype=float)
    if word.is_finite:
        return head, None
    return head, np.array(word.cycle, dtype=float)


@lru_cache(maxsize=512)
def _periodic_coeffs(beta: BetaSpec, kind: str) -> _Coeffs | None:
    if beta.is_exact:
        ds = greedy_digits(beta, 1, DETECT_HORIZON)
        src = beta
    else:
        # termination of the orbit of 1 is only trusted at raised precision
        src = _working_beta(beta, 64)
        ds = greedy_digits(src, 1, 64)
        if ds.greedy_word is None:
            return None
    bound = _coeff_bound(beta, kind)
    if kind == "phi" and ds.greedy_word is not None:
        head, cyc = _word_coeffs(ds.greedy_word)
        return _Coeffs(head, cyc, bound, True)
    if kind == "phi_hat" and ds.quasi_word is not None:
        head, cyc = _word_coeffs(ds.quasi_word)
        return _Coeffs(head, cyc, bound, True)
    if kind == "psi":
        orb = orbit_of_one(src, DETECT_HORIZON if beta.is_exact else 64)
        if orb.cycle is not None:
            start, length = orb.cycle
            vals = [float(v) for v in orb.forward[:start + length]]
            head = np.array(vals[:start] if start else [], dtype=float)
            cyc = np.array(vals[start:start + length], dtype=float)
            if not cyc.any():
                return _Coeffs(np.array(vals[:start], dtype=float), None, bound, True)
            return _Coeffs(head, cyc, bound, True)
    return None


@lru_cache(maxsize=512)
def _truncated_coeffs(beta: BetaSpec, kind: str, n: int) -> _Coeffs:
    if beta.is_exact:
        src = _surrogate(beta, n)
    else:
        src = _working_beta(beta, n)
    bound = _coeff_bound(beta, kind)
    if kind == "psi":
        orb = orbit_of_one(src, n)
        head = np.array([float(v) for v in orb.forward[:n + 1]], dtype=float)
    else:
        ds = greedy_digits(src, 1, n)
        digits = ds.greedy if kind == "phi" else ds.quasi_greedy
        head = np.array((0,) + tuple(digits[:n]), dtype=float)
    return _Coeffs(head, None, bound, False)


def _horner(coeffs: np.ndarray, w: np.ndarray):
    """Value and derivative of sum c_k w^k."""
    p = np.zeros_like(w)
    dp = np.zeros_like(w)
    for c in coeffs[::-1]:
        dp = dp * w + p
        p = p * w + c
    return p, dp


class SeriesEvaluator:
    """Vectorized evaluation of one series of a fixed base.

    ``radius`` is the largest |z| the caller intends to use; it fixes the
    truncation horizon when no closed form is available.
    """

    def __init__(self, beta: BetaSpec, kind: str = "phi", radius: float | None = None,
                 horizon: int | None = None, tol: float = DEFAULT_TAIL):
        if kind not in KINDS:
            raise ValueError(f"unknown series {kind!r}")
        self.beta = beta
        self.kind = kind
        self.b = float(beta)
        co = None if horizon is not None else _periodic_coeffs(beta, kind)
        if co is None:
            if horizon is None:
                r = self.b * AUTO_CEILING if radius is None else radius
                q = r / self.b
                if q > AUTO_CEILING:
                    raise DomainError("|z| > 0.97 beta: no certified horizon")
                horizon = horizon_for(q, _coeff_bound(beta, kind), tol)
            co = _truncated_coeffs(beta, kind, int(horizon))
        self.coeffs = co
        self.periodic = co.periodic
        self._abs_head = np.abs(co.head)
        self._abs_cycle = None if co.cycle is None else np.abs(co.cycle)

    @property
    def terms_used(self) -> int:
        return self.coeffs.terms

    def _check(self, z: np.ndarray):
        if np.any(np.abs(z) >= self.b):
            raise DomainError("|z| must be below beta")

    def _parts(self, w, head, cycle, deriv=False):
        h, dh = _horner(head, w)
        if cycle is None:
            return (h, dh) if deriv else (h, None)
        m, p = len(head), len(cycle)
        c, dc = _horner(cycle, w)
        wm = w**m
        den = 1 - w**p
        val = h + wm * c / den
        if not deriv:
            return val, None
        dwm = m * w ** (m - 1) if m else np.zeros_like(w)
        dden = -p * w ** (p - 1)
        dval = dh + (dwm * c + wm * dc) / den - wm * c * dden / den**2
        return val, dval

    def evaluate(self, z, deriv: bool = False):
        """Return (value, tail_bound[, derivative, derivative_bound]) arrays."""
        z = np.asarray(z, dtype=complex)
        self._check(z)
        w = z / self.b
        co = self.coeffs
        val, dval = self._parts(w, co.head.astype(complex), None if co.cycle is None
                                else co.cycle.astype(complex), deriv)
        q = np.abs(w)
        mag, _ = self._parts(q, self._abs_head, self._abs_cycle)
        n_terms = co.terms + 2
        rounding = 4 * n_terms * EPS * (np.abs(mag) + 1)
        if co.periodic:
            if co.cycle is not None:
                rounding = rounding / np.maximum(np.abs(1 - w ** len(co.cycle)), 1e-300)
            tail = rounding
            dtail = rounding * (n_terms + 1) / self.b
        else:
            n = len(co.head) - 1
            tail = co.bound * q ** (n + 1) / (1 - q) + rounding
            dtail = (co.bound * q**n * (n + 1 - n * q) / (1 - q) ** 2 / self.b
                     + rounding * (n + 1) / self.b)
        if deriv:
            return val, tail, dval / self.b, dtail
        return val, tail

    def __call__(self, z):
        return self.evaluate(z)[0]


@lru_cache(maxsize=256)
def _evaluator(beta: BetaSpec, kind: str, horizon: int | None, radius_key: float | None):
    return SeriesEvaluator(beta, kind, radius=radius_key, horizon=horizon)


def _radius_key(beta: BetaSpec, z: complex) -> float:
    # bucket radii so evaluators are shared between nearby calls
    b = float(beta)
    r = abs(z)
    for frac in (0.5, 0.75, 0.9, 0.95, AUTO_CEILING):
        if r <= frac * b:
            return frac * b
    raise DomainError("|z| > 0.97 beta: no certified horizon")


def _scalar(beta: BetaSpec, kind: str, z, horizon: int | None) -> SeriesEval:
    z = complex(z)
    b = float(beta)
    if abs(z) >= b:
        raise DomainError("|z| must be below beta")
    if horizon is None and _periodic_coeffs(beta, kind) is None:
        ev = _evaluator(beta, kind, None, _radius_key(beta, z))
    else:
        ev = _evaluator(beta, kind, horizon, None)
    val, tail = ev.evaluate(np.array([z]))
    return SeriesEval(complex(val[0]), float(tail[0]), ev.terms_used)


def phi(beta: BetaSpec, z, horizon: int | None = None) -> SeriesEval:
    """phi(z) = sum a_n(beta, 1) (z/beta)^n over the greedy digits of 1."""
    return _scalar(beta, "phi", z, horizon)


def phi_hat(beta: BetaSpec, z, horizon: int | None = None) -> SeriesEval:
    """Same series built from the quasi-greedy digits of 1."""
    return _scalar(beta, "phi_hat", z, horizon)


def psi(beta: BetaSpec, z, horizon: int | None = None) -> SeriesEval:
    """psi(z) = 1 + sum tau^n(1) (z/beta)^n."""
    return _scalar(beta, "psi", z, horizon)


def phi_derivative(beta: BetaSpec, z, horizon: int | None = None) -> SeriesEval:
    z = complex(z)
    if horizon is None and _periodic_coeffs(beta, "phi") is None:
        ev = _evaluator(beta, "phi", None, _radius_key(beta, z))
    else:
        ev = _evaluator(beta, "phi", horizon, None)
    _, _, d, dt = ev.evaluate(np.array([z]), deriv=True)
    return SeriesEval(complex(d[0]), float(dt[0]), ev.terms_used)


def rational_form(beta: BetaSpec, kind: str = "phi") -> RationalForm | None:
    """Closed form of the series in z, or None when no cycle was detected."""
    co = _periodic_coeffs(beta, kind)
    if co is None:
        return None
    b = float(beta)
    head = list(co.head)
    if co.cycle is None:
        num, den = head, [1.0]
    else:
        m, p = len(head), len(co.cycle)
        # H(w)(1 - w^p) + w^m C(w)
        num = [0.0] * (max(m + p, m + p) + 1)
        for k, c in enumerate(head):
            num[k] += c
            num[k + p] -= c
        for k, c in enumerate(co.cycle):
            num[m + k] += c
        den = [1.0] + [0.0] * (p - 1) + [-1.0]
    scale = lambda cs: tuple(float(c) / b**k for k, c in enumerate(cs))
    num, den = list(scale(num)), scale(den)
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return RationalForm(tuple(num), den)


def _simple_length(beta: BetaSpec) -> int | None:
    if beta.is_exact:
        return greedy_digits(beta, 1, DETECT_HORIZON).simple_index
    return greedy_digits(_working_beta(beta, 64), 1, 64).simple_index


def zeta(beta: BetaSpec, z, horizon: int | None = None, return_bound: bool = False):
    """p(z) / (1 - phi(z)) with p(z) = 1 - (z/beta)^L(1) for simple beta, else 1."""
    z = complex(z)
    if abs(z) >= 1:
        raise DomainError("zeta is evaluated on |z| < 1")
    ev = phi(beta, z, horizon)
    d = 1 - ev.value
    if abs(d) <= ev.tail_bound:
        raise NearPole("1 - phi(z) is not separated from zero")
    L = _simple_length(beta)
    p = 1 - (z / float(beta)) ** L if L is not None else 1.0
    val = p / d
    if return_bound:
        err = abs(p) * ev.tail_bound / (abs(d) * (abs(d) - ev.tail_bound))
        return val, err
    return val


def _cmp_periodic(a: tuple, ref_digits, ref_word: PeriodicWord | None, span: int) -> int:
    # compare a^infinity with the reference on the first ``span`` symbols
    for i in range(span):
        x = a[i % len(a)]
        if ref_word is not None:
            r = ref_word[i]
        elif i < len(ref_digits):
            r = ref_digits[i]
        else:
            raise TooLarge("reference digits exhausted during comparison")
        if x != r:
            return -1 if x < r else 1
    return 0


@lru_cache(maxsize=256)
def fix_count(beta: BetaSpec, n: int) -> int:
    """Number of x in [0,1) with tau^n(x) = x.

    Such x are exactly the values of the periodic words w^infinity, |w| = n,
    whose every rotation is admissible (strictly below d(beta, 1)).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    top = beta.floor
    if n > 8 or (top + 1) ** n > 10**6:
        raise TooLarge("too many candidate words to enumerate")
    if beta.is_exact:
        ds = greedy_digits(beta, 1, DETECT_HORIZON)
    else:
        ds = greedy_digits(_working_beta(beta, 64), 1, 64)
    ref_word = ds.quasi_word
    if ref_word is not None:
        span = len(ref_word.prefix) + n * len(ref_word.cycle) + n
    else:
        span = min(len(ds.quasi_greedy), ds.trust_horizon)
    count = 0
    for w in itertools.product(range(top + 1), repeat=n):
        ok = True
        for r in range(n):
            rot = w[r:] + w[:r]
            if _cmp_periodic(rot, ds.quasi_greedy, ref_word, span) >= 0:
                ok = False
                break
        if ok:
            count += 1
    return count


def zeta_series(beta: BetaSpec, z, n_max: int, return_bound: bool = False):
    """exp(sum_{n <= n_max} z^n/n * #Fix(tau^n) / beta^n), an oracle for ``zeta``."""
    z = complex(z)
    if abs(z) >= 1:
        raise DomainError("zeta_series is evaluated on |z| < 1")
    if n_max > 8:
        raise TooLarge("n_max is limited to 8")
    b = float(beta)
    s = sum(z**n / n * fix_count(beta, n) / b**n for n in range(1, n_max + 1))
    val = complex(np.exp(s))
    if return_bound:
        r = abs(z)
        t = b / (b - 1) * r ** (n_max + 1) / ((n_max + 1) * (1 - r))
        return val, abs(val) * math.expm1(t)
    return val
