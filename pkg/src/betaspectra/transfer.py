"""Exact Perron-Frobenius action on step functions f = sum c_i 1_[0, x_i].

Breakpoints are mpf numbers carried at a generous working precision; the
operator maps indicator terms to indicator terms, so no discretization enters.
A breakpoint whose image under beta*x lands on an integer within the snap
radius is taken to be a simple point (its tau-image is 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .betaspec import BetaSpec, to_fraction
from .errors import DegenerateBreakpoints, DomainError, NotSimple, Underflow
from .expansion import PeriodicWord, _orbit, greedy_digits, orbit_of_one
from .series import horizon_for

__all__ = [
    "DecayFit",
    "StepFunction",
    "apply_L",
    "bv_norm",
    "correlation",
    "decay_fit",
    "default_breakpoints",
    "duality_check",
    "good_decay_construct",
    "indicator",
    "integral_lebesgue",
    "integral_product",
    "iterate_L",
    "observable_record",
    "parry_density",
    "sup_norm",
]

PREC = 256
UNDERFLOW = mpmath.mpf("1e-300")
DIGITS = 512  # digits summed for F at a breakpoint without a periodic word


def _snap(prec: int):
    return mpmath.ldexp(1, -(prec // 2))


@dataclass(frozen=True)
class StepFunction:
    """f(x) = sum_i c_i 1_[0, x_i](x), modulo functions vanishing off a countable set."""

    terms: tuple  # ((mpf x, mpc c), ...) sorted by x
    prec: int = PREC

    @classmethod
    def from_terms(cls, pairs, prec: int = PREC) -> "StepFunction":
        with mpmath.workprec(prec):
            raw = [(_as_mpf(x), _as_mpc(c)) for x, c in pairs]
        return cls(tuple(raw), prec).canonical()

    def canonical(self) -> "StepFunction":
        eps = _snap(self.prec)
        with mpmath.workprec(self.prec):
            items = sorted(self.terms, key=lambda t: t[0])
            out: list = []
            for x, c in items:
                if x < -eps or x > 1 + eps:
                    raise DomainError("breakpoints must lie in [0, 1]")
                x = min(max(x, mpmath.mpf(0)), mpmath.mpf(1))
                if abs(x - 1) <= eps:
                    x = mpmath.mpf(1)
                if x <= eps:
                    continue  # the indicator of a point is null
                if out and abs(out[-1][0] - x) <= eps:
                    out[-1] = (out[-1][0], out[-1][1] + c)
                else:
                    out.append((x, c))
            out = [(x, c) for x, c in out if c != 0]
        return StepFunction(tuple(out), self.prec)

    @property
    def breakpoints(self) -> list:
        return [x for x, _ in self.terms]

    @property
    def coefficients(self) -> list:
        return [c for _, c in self.terms]

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return StepFunction(self.terms + other.terms, max(self.prec, other.prec)).canonical()

    def scale(self, a) -> "StepFunction":
        with mpmath.workprec(self.prec):
            a = mpmath.mpc(a)
            return StepFunction(tuple((x, a * c) for x, c in self.terms), self.prec).canonical()

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + other.scale(-1)

    def __call__(self, x):
        """Value at x (right-open convention at breakpoints is irrelevant in the quotient)."""
        x = _as_mpf(x)
        with mpmath.workprec(self.prec):
            return complex(mpmath.fsum(c for b, c in self.terms if x <= b))

    def intervals(self) -> list[tuple]:
        """[(left, right, value)] over the constancy intervals (left, right]."""
        with mpmath.workprec(self.prec):
            out = []
            left = mpmath.mpf(0)
            tail = mpmath.fsum(self.coefficients) if self.terms else mpmath.mpc(0)
            for x, c in self.terms:
                out.append((left, x, tail))
                tail -= c
                left = x
            if left < 1:
                out.append((left, mpmath.mpf(1), mpmath.mpc(0)))
            return out

    def is_real(self) -> bool:
        return all(mpmath.im(c) == 0 for c in self.coefficients)


def _as_mpf(x):
    with mpmath.workprec(PREC):
        if isinstance(x, mpmath.mpf):
            return +x
        if isinstance(x, (Fraction, int)):
            x = Fraction(x)
            return mpmath.mpf(x.numerator) / x.denominator
        if isinstance(x, str):
            return _as_mpf(to_fraction(x))
        return mpmath.mpf(x)


def _as_mpc(c):
    if isinstance(c, (Fraction, int, str)):
        return mpmath.mpc(_as_mpf(c))
    with mpmath.workprec(PREC):
        return mpmath.mpc(c)


def indicator(x, c=1, prec: int = PREC) -> StepFunction:
    """c * 1_[0, x]."""
    with mpmath.workprec(prec):
        return StepFunction.from_terms([(x, c)], prec)


def _beta_mp(beta: BetaSpec, prec: int):
    return beta.value_at(prec)


def apply_L(beta: BetaSpec, f: StepFunction) -> StepFunction:
    """L 1_[0,x] = a_1(x)/beta * 1_[0,1] + 1/beta * 1_[0, tau(x)], term by term."""
    prec = f.prec
    eps = _snap(prec)
    top = beta.floor
    with mpmath.workprec(prec):
        b = _beta_mp(beta, prec)
        out = []
        for x, c in f.terms:
            t = b * x
            k = int(mpmath.nint(t))
            if 1 <= k <= top and abs(t - k) <= eps:
                # simple breakpoint: tau(x) = 0
                out.append((mpmath.mpf(1), c * k / b))
                continue
            k = min(max(int(mpmath.floor(t)), 0), top)
            if k:
                out.append((mpmath.mpf(1), c * k / b))
            out.append((t - k, c / b))
    return StepFunction(tuple(out), prec).canonical()


def iterate_L(beta: BetaSpec, f: StepFunction, n: int) -> StepFunction:
    for _ in range(n):
        f = apply_L(beta, f)
    return f


def sup_norm(f: StepFunction) -> float:
    with mpmath.workprec(f.prec):
        return float(max((abs(v) for _, _, v in f.intervals()), default=mpmath.mpf(0)))


def _bv(f: StepFunction):
    with mpmath.workprec(f.prec):
        var = mpmath.fsum(abs(c) for x, c in f.terms if x < 1)
        sup = max((abs(v) for _, _, v in f.intervals()), default=mpmath.mpf(0))
        return var + sup


def bv_norm(f: StepFunction) -> float:
    """Total variation plus sup norm of the quotient-space representative."""
    return float(_bv(f))


def integral_lebesgue(f: StepFunction) -> complex:
    with mpmath.workprec(f.prec):
        return complex(mpmath.fsum(c * x for x, c in f.terms))


def _integral_product(f: StepFunction, g: StepFunction):
    prec = max(f.prec, g.prec)
    with mpmath.workprec(prec):
        return mpmath.fsum(c * d * min(x, y) for x, c in f.terms for y, d in g.terms)


def integral_product(f: StepFunction, g: StepFunction) -> complex:
    """Lebesgue integral of f * g."""
    return complex(_integral_product(f, g))


def _product(f: StepFunction, g: StepFunction) -> StepFunction:
    """Pointwise product, re-expressed in the indicator span by telescoping."""
    prec = max(f.prec, g.prec)
    with mpmath.workprec(prec):
        pts = sorted(set(f.breakpoints) | set(g.breakpoints))
        vals = []
        for x in pts:
            fv = mpmath.fsum(c for b, c in f.terms if b >= x)
            gv = mpmath.fsum(c for b, c in g.terms if b >= x)
            vals.append(fv * gv)
        terms = [(x, vals[i] - (vals[i + 1] if i + 1 < len(vals) else 0))
                 for i, x in enumerate(pts)]
    return StepFunction(tuple(terms), prec).canonical()


def _pullback_measure(b, top: int, x, y):
    """Lebesgue measure of {t in [0, x] : tau(t) <= y}."""
    total = mpmath.mpf(0)
    for k in range(top + 1):
        lo = k / b
        hi = min(x, (k + y) / b, mpmath.mpf(1))
        if hi > lo:
            total += hi - lo
    return total


def duality_check(beta: BetaSpec, f: StepFunction, g: StepFunction) -> float:
    """|int (L f) g dl - int f (g o tau) dl|; the right side is integrated branch by branch."""
    prec = max(f.prec, g.prec)
    lhs = _integral_product(apply_L(beta, f), g)
    with mpmath.workprec(prec):
        b = _beta_mp(beta, prec)
        top = beta.floor
        rhs = mpmath.fsum(c * d * _pullback_measure(b, top, x, y)
                          for x, c in f.terms for y, d in g.terms)
        return float(abs(lhs - rhs))


def parry_density(beta: BetaSpec, horizon: int | None = None, tol: float = 1e-14) -> StepFunction:
    """h = C sum_n beta^-n 1_[0, tau^n(1)], normalized to unit Lebesgue mass.

    An eventually periodic orbit of 1 is summed in closed form; otherwise the
    series is truncated after ``horizon`` terms.
    """
    b_f = float(beta)
    if horizon is None:
        horizon = max(8, math.ceil(math.log(1 / tol) / math.log(b_f)) + 1)
    src = beta.with_precision(max(beta.precision_bits, PREC)) if beta.is_exact else \
        beta.with_precision(max(beta.precision_bits, math.ceil(horizon * math.log2(b_f)) + PREC))
    orb = orbit_of_one(src, horizon)
    with mpmath.workprec(PREC):
        b = _beta_mp(beta, PREC)
        terms = []
        if orb.cycle is not None:
            s, p = orb.cycle
            for n in range(s + p):
                w = b ** (-n)
                if n >= s:
                    w = w / (1 - b ** (-p))
                terms.append((mpmath.mpf(orb.forward[n]), w))
        else:
            for n in range(horizon + 1):
                terms.append((mpmath.mpf(orb.forward[n]), b ** (-n)))
        h = StepFunction(tuple((x, mpmath.mpc(w)) for x, w in terms), PREC).canonical()
        mass = mpmath.re(mpmath.fsum(c * x for x, c in h.terms))
        return h.scale(1 / mass)


@dataclass(frozen=True)
class DecayFit:
    rates: tuple  # ((n, bv_norm), ...)
    fitted_alpha: float
    fit_window: tuple[int, int]
    r_squared: float
    stderr: float = 0.0
    truncated: bool = False

    def to_dict(self) -> dict:
        return {"rates": [[n, v] for n, v in self.rates], "fitted_alpha": self.fitted_alpha,
                "fit_window": list(self.fit_window), "r_squared": self.r_squared,
                "stderr": self.stderr, "truncated": self.truncated}


def decay_fit(beta: BetaSpec, f: StepFunction, n_max: int = 40,
              window: tuple[int, int] | None = None) -> DecayFit:
    """Iterate L exactly and fit log ||L^n f||_BV against n on the window."""
    if n_max < 10:
        raise DomainError("n_max must be at least 10")
    lo, hi = window if window is not None else (n_max // 2, n_max)
    if not 0 <= lo < hi <= n_max:
        raise DomainError("fit window must satisfy 0 <= lo < hi <= n_max")
    norms = []
    g = f
    truncated = False
    for n in range(n_max + 1):
        v = _bv(g)
        if 0 < v < UNDERFLOW:
            truncated = True
            break
        norms.append((n, float(v)))
        g = apply_L(beta, g)
    if all(v == 0 for _, v in norms):
        return DecayFit(tuple(norms), 0.0, (lo, hi), 1.0)
    pts = [(n, v) for n, v in norms if lo <= n <= hi and v > 0]
    if len(pts) < 3:
        raise Underflow("fewer than three norms left in the fit window")
    ns = np.array([p[0] for p in pts], dtype=float)
    ys = np.log([p[1] for p in pts])
    (slope, icpt), cov = np.polyfit(ns, ys, 1, cov=True) if len(pts) > 3 else \
        (np.polyfit(ns, ys, 1), np.zeros((2, 2)))
    resid = ys - (slope * ns + icpt)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    alpha = math.exp(slope)
    err = alpha * math.sqrt(max(cov[0, 0], 0.0))
    return DecayFit(tuple(norms), alpha, (int(ns[0]), int(ns[-1])), r2, err, truncated)


def correlation(beta: BetaSpec, f: StepFunction, g: StepFunction, n: int,
                tol: float = 1e-14) -> complex:
    """int f (g o tau^n) d mu - int f d mu int g d mu, with mu the Parry measure."""
    h = parry_density(beta, tol=tol)
    fh = _product(f, h)
    moved = iterate_L(beta, fh, n)
    val = _integral_product(moved, g) - _integral_product(fh, StepFunction.from_terms([(1, 1)])) \
        * _integral_product(g, h)
    return complex(val)


# -- good-decay observables ---------------------------------------------------

@dataclass(frozen=True)
class _Point:
    x: object  # mpf
    digits: tuple
    word: PeriodicWord | None


def _orbit_points(beta: BetaSpec) -> list[_Point] | None:
    """Distinct nonzero points of an eventually periodic orbit of 1, with their digits."""
    src = beta.with_precision(max(beta.precision_bits, PREC))
    if not beta.is_exact:
        return None
    orb = _orbit(src, Fraction(1), 128)
    if orb.cycle is None:
        return None
    s, p = orb.cycle
    word = PeriodicWord(orb.digits[:s], orb.digits[s:s + p])
    pts = []
    for k in range(s + p):
        x = orb.values[k]
        if x == 0:
            continue
        w = word.shift(k)
        with mpmath.workprec(PREC):
            pts.append(_Point(+x, w.take(64), w))
    return pts


def _chebyshev_points(beta: BetaSpec, m: int) -> list[_Point]:
    pts = [Fraction(1)]
    for i in range(1, m):
        c = (1 + math.cos(math.pi * (2 * i - 1) / (2 * (m - 1)))) / 2
        pts.append(Fraction(c).limit_denominator(10**6))
    out = []
    for x in pts:
        ds = greedy_digits(beta, x, DIGITS)
        out.append(_Point(_as_mpf(x), ds.greedy, ds.greedy_word))
    return out


def default_breakpoints(beta: BetaSpec, n_eigen: int, K: int = 1) -> list[_Point]:
    """Orbit points of 1 for Parry beta (an L-invariant span), else Chebyshev-like points."""
    need = n_eigen + K + 1
    orb = _orbit_points(beta)
    if orb is not None and len(orb) >= need:
        return orb
    return _chebyshev_points(beta, need)


def _rational_of(x) -> Fraction:
    """The short rational a stored breakpoint stands for, else its exact dyadic value.

    F is far from Lipschitz, so the digits must come from the intended point:
    a 256-bit rounding of 3/10 already moves F by about 1e-5.
    """
    man, exp = x.man_exp
    exact = Fraction(int(man)) * Fraction(2) ** int(exp)
    short = exact.limit_denominator(10**15)
    if abs(short - exact) <= Fraction(2) ** (8 - PREC):
        return short
    return exact


def _user_points(beta: BetaSpec, xs) -> list[_Point]:
    out = []
    for x in xs:
        fx = to_fraction(x)
        ds = greedy_digits(beta, fx, DIGITS)
        out.append(_Point(_as_mpf(fx), ds.greedy, ds.greedy_word))
    return out


def _F_mp(pt: _Point, r, tol_bits: int = 200):
    """F_lambda at a breakpoint, with r = 1/(beta lambda) given in mp precision."""
    acc = mpmath.mpc(0)
    if pt.word is not None:
        w = pt.word
        for d in reversed(w.prefix):
            acc = (acc + d) * r
        cyc = mpmath.mpc(0)
        for d in reversed(w.cycle):
            cyc = (cyc + d) * r
        return acc + r ** len(w.prefix) * cyc / (1 - r ** len(w.cycle))
    for d in reversed(pt.digits):
        acc = (acc + d) * r
    return acc


def _polish(beta: BetaSpec, lam: complex):
    """Refine an eigenvalue to working precision as a zero of 1 - phi_hat(1/lambda)."""
    src = beta.with_precision(max(beta.precision_bits, PREC))
    try:
        ds = greedy_digits(src, 1, 128) if beta.is_exact else None
    except Exception:
        ds = None
    b = _beta_mp(beta, PREC)
    if ds is None or ds.quasi_word is None:
        return mpmath.mpc(lam)
    w = ds.quasi_word
    one = _Point(mpmath.mpf(1), (), w)

    def g(lm):
        return 1 - _F_mp(one, 1 / (b * lm))

    try:
        return mpmath.findroot(g, mpmath.mpc(lam), tol=mpmath.mpf(2) ** (-2 * PREC // 3))
    except (ValueError, ZeroDivisionError):
        return mpmath.mpc(lam)


def _check_simple(beta: BetaSpec, lam) -> None:
    from .spectra import winding_number

    mult = getattr(lam, "multiplicity", None)
    if mult is None:
        z = 1 / complex(lam)
        r = min(1e-3 * abs(z), 0.25 * (0.97 * float(beta) - abs(z)))
        if r > 0:
            mult = winding_number(beta, r, center=z, kind="psi")
    if mult is not None and mult >= 2:
        raise NotSimple(f"eigenvalue {complex(getattr(lam, 'lam', lam))} has multiplicity {mult}")


def good_decay_construct(beta: BetaSpec, subleading=None, breakpoints=None,
                         tol: float = 1e-12, K: int = 1) -> StepFunction:
    """A step function annihilated by Lebesgue measure and by every F_lambda_j.

    The coefficient vector spans the null space of the matrix with rows
    (x_i) and (F_lambda_j(x_i)); conjugate pairs contribute the real and
    imaginary parts of one representative, so the result is real.
    """
    if subleading is None:
        from .spectra import locate_eigenvalues

        subleading = list(locate_eigenvalues(beta).nonleading)
    lams = []
    for lam in subleading:
        _check_simple(beta, lam)
        lams.append(complex(getattr(lam, "lam", lam)))
    if K < 1:
        raise DomainError("K must be at least 1")
    # one representative per conjugate pair
    reps: list[complex] = []
    for lam in lams:
        if lam.imag < 0 and any(abs(lam.conjugate() - m) < 1e-9 * abs(lam) for m in lams):
            continue
        reps.append(lam)
    if breakpoints is None:
        pts = default_breakpoints(beta, len(lams), K)
    else:
        pts = _user_points(beta, breakpoints)
    xs = [p.x for p in pts]
    if len({float(x) for x in xs}) != len(xs):
        raise DegenerateBreakpoints("breakpoints must be pairwise distinct")
    if len(pts) < len(lams) + 2:
        raise DegenerateBreakpoints("need at least N + 2 breakpoints")
    with mpmath.workprec(PREC):
        b = _beta_mp(beta, PREC)
        rows = [list(xs)]
        for lam in reps:
            lm = _polish(beta, lam)
            if abs(mpmath.im(lm)) <= mpmath.mpf(2) ** (-PREC // 2) * abs(lm):
                lm = mpmath.mpc(mpmath.re(lm))
            vals = [_F_mp(p, 1 / (b * lm)) for p in pts]
            rows.append([mpmath.re(v) for v in vals])
            if lam.imag != 0:
                rows.append([mpmath.im(v) for v in vals])
        A = mpmath.matrix(rows)
        m, n = A.rows, A.cols
        _, S, V = mpmath.svd_r(A, full_matrices=True)
        smax = max(S) if len(S) else mpmath.mpf(1)
        rank = sum(1 for s in S if s > smax * mpmath.mpf(2) ** (-PREC // 2))
        if rank < m:
            raise DegenerateBreakpoints("constraint rows are linearly dependent; try other breakpoints")
        null = [[V[i, j] for j in range(n)] for i in range(rank, n)]
        # deterministic choice: project the all-ones vector onto the null space
        vec = [mpmath.mpf(0)] * n
        for row in null:
            coef = mpmath.fsum(row)
            vec = [v + coef * r for v, r in zip(vec, row)]
        if max(abs(v) for v in vec) < mpmath.mpf(2) ** (-PREC // 4):
            vec = list(null[0])
        k = max(range(n), key=lambda i: abs(vec[i]))
        scale = vec[k]
        coeffs = [v / scale for v in vec]
        f = StepFunction(tuple((x, mpmath.mpc(c)) for x, c in zip(xs, coeffs)), PREC).canonical()
    res = constraint_residuals(beta, f, [complex(l) for l in lams], pts=pts, coeffs=coeffs)
    if max(res.values()) > tol:
        raise DegenerateBreakpoints(f"constraint residual {max(res.values()):.3g} exceeds tol")
    return f


def constraint_residuals(beta: BetaSpec, f: StepFunction, lams, pts=None, coeffs=None) -> dict:
    """|int f dl| and |sum c_i F_lambda(x_i)| for each lambda."""
    out = {"lebesgue": abs(integral_lebesgue(f))}
    if pts is None:
        pts = _user_points_mp(beta, f)
        coeffs = f.coefficients
    with mpmath.workprec(PREC):
        b = _beta_mp(beta, PREC)
        for lam in lams:
            lm = _polish(beta, lam)
            val = mpmath.fsum(c * _F_mp(p, 1 / (b * lm)) for c, p in zip(coeffs, pts))
            out[f"F[{complex(lam):.12g}]"] = float(abs(val))
    return out


def _user_points_mp(beta: BetaSpec, f: StepFunction) -> list[_Point]:
    orb = _orbit_points(beta) or []
    out = []
    for x in f.breakpoints:
        hit = next((p for p in orb if abs(p.x - x) <= _snap(PREC)), None)
        if hit is None:
            ds = greedy_digits(beta, _rational_of(x), DIGITS)
            hit = _Point(x, ds.greedy, ds.greedy_word)
        out.append(hit)
    return out


def observable_record(beta: BetaSpec, f: StepFunction, lams=()) -> dict:
    return {
        "breakpoints": [float(x) for x in f.breakpoints],
        "coefficients": [[float(mpmath.re(c)), float(mpmath.im(c))] for c in f.coefficients],
        "constraint_residuals": constraint_residuals(beta, f, lams),
    }
