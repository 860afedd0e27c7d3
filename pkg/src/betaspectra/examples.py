"""Three quartic families of beta with known digits and spectra, used as ground truth.

    P_n(x) = x^4 - n x^3 - (n-1) x^2 - n          (n >= 3)
    Q_n(x) = x^4 - n x^3 - (n-1) x - n            (n >= 4)
    R_n(x) = x^4 - (n+1) x^3 + n x - (n-1)        (n >= 4)

Each has a unique root beta in (n, n+1).  Non-leading eigenvalues of the
transfer operator are the roots r != beta with 1/beta < |r/beta| < 1, divided
by beta.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np

from .betaspec import BetaSpec
from .errors import DomainError, VerificationFailure
from .expansion import greedy_digits
from .series import phi
from .spectra import locate_eigenvalues

__all__ = [
    "FAMILY_RANGES",
    "QuarticFamily",
    "expected_profile",
    "quartic_roots",
    "verify_example",
]

FAMILY_RANGES = {"P": (3, 8), "Q": (4, 8), "R": (4, 8)}
_MIN_N = {"P": 3, "Q": 4, "R": 4}
ROOT_BITS = 160


@dataclass(frozen=True)
class QuarticFamily:
    family: str
    n: int
    coefficients: tuple = field(init=False)

    def __post_init__(self):
        fam = self.family.upper()
        if fam not in _MIN_N:
            raise DomainError(f"unknown family {self.family!r}")
        if int(self.n) != self.n or self.n < _MIN_N[fam]:
            raise DomainError(f"family {fam} needs n >= {_MIN_N[fam]}")
        n = int(self.n)
        coeffs = {
            "P": (1, -n, -(n - 1), 0, -n),
            "Q": (1, -n, 0, -(n - 1), -n),
            "R": (1, -(n + 1), 0, n, -(n - 1)),
        }[fam]
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def beta_enclosure(self) -> tuple[int, int]:
        return (self.n, self.n + 1)

    @property
    def beta(self) -> BetaSpec:
        lo, hi = self.beta_enclosure
        return BetaSpec.from_polynomial(self.coefficients, lo, hi)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients[::-1])


def _mp_roots(fam: QuarticFamily) -> list:
    with mpmath.workprec(ROOT_BITS):
        roots = mpmath.polyroots(list(fam.coefficients), maxsteps=200, extraprec=ROOT_BITS)
        # Vieta: sum and product of the roots
        s = mpmath.fsum(roots)
        p = mpmath.fprod(roots)
        tol = mpmath.mpf(2) ** (-ROOT_BITS // 2)
        if abs(s + fam.coefficients[1]) > tol * 10 or abs(p - fam.coefficients[4]) > tol * 10:
            raise ArithmeticError("root solver failed the Vieta check")
        return roots


def quartic_roots(fam: QuarticFamily, tol: float = 1e-12) -> dict:
    """All four roots; beta is the one in (n, n+1)."""
    roots = _mp_roots(fam)
    lo, hi = fam.beta_enclosure
    real, pairs = [], []
    for r in roots:
        if abs(mpmath.im(r)) <= tol * max(1, abs(r)):
            real.append(float(mpmath.re(r)))
        elif mpmath.im(r) > 0:
            pairs.append(complex(r))
    real.sort()
    betas = [r for r in real if lo < r < hi]
    if len(betas) != 1:
        raise ArithmeticError("expected exactly one root in (n, n+1)")
    return {"real_roots": real, "complex_pairs": pairs, "beta": betas[0]}


def expected_eigenvalues(fam: QuarticFamily) -> list[complex]:
    """r/beta over the non-leading roots r with 1/beta < |r/beta| < 1."""
    info = quartic_roots(fam)
    b = info["beta"]
    cands = [r for r in info["real_roots"] if r != b]
    cands += [c for p in info["complex_pairs"] for c in (p, p.conjugate())]
    out = [complex(r) / b for r in cands if 1 / b < abs(r) / b < 1]
    return sorted(out, key=lambda z: (-abs(z), np.angle(z)))


def expected_profile(fam: QuarticFamily) -> dict:
    n = fam.n
    if fam.family == "P":
        return {"digits": {"prefix": [n, n - 1, 0, n], "cycle": [0]}, "simple": True,
                "nonleading": {"count": 1, "real": True, "formula": "lambda = -alpha/beta"}}
    if fam.family == "Q":
        return {"digits": {"prefix": [n, 0, n - 1, n], "cycle": [0]}, "simple": True,
                "nonleading": {"count": 2, "real": False, "formula": "lambda = gamma/beta, conj(gamma)/beta"}}
    return {"digits": {"prefix": [n, n, 0], "cycle": [n - 1]}, "simple": False,
            "nonleading": {"count": 1, "real": True, "formula": "lambda = -alpha/beta"}}


def _clause_a(fam: QuarticFamily, beta: BetaSpec, n_digits: int) -> dict:
    prof = expected_profile(fam)["digits"]
    pre, cyc = prof["prefix"], prof["cycle"]
    want = [pre[i] if i < len(pre) else cyc[(i - len(pre)) % len(cyc)] for i in range(n_digits)]
    ds = greedy_digits(beta, 1, n_digits)
    got = list(ds.greedy)
    simple = ds.simple_index is not None
    ok = got == want and simple == expected_profile(fam)["simple"]
    if not ok:
        raise VerificationFailure("a", f"digits {got} (simple={simple}) expected {want}")
    return {"passed": True, "digits": got, "simple": simple}


def _clause_b(fam: QuarticFamily, beta: BetaSpec, tol: float) -> tuple[dict, object]:
    want = expected_eigenvalues(fam)
    rep = locate_eigenvalues(beta, tol=min(tol, 1e-10))
    got = [e.lam for e in rep.nonleading]
    used = set()
    errs = []
    for w in want:
        j = min((k for k in range(len(got)) if k not in used), key=lambda k: abs(got[k] - w),
                default=None)
        if j is None:
            raise VerificationFailure("b", f"expected eigenvalue {w} not found")
        used.add(j)
        errs.append(abs(got[j] - w))
    if len(got) != len(want):
        raise VerificationFailure("b", f"found {len(got)} non-leading eigenvalues, expected {len(want)}")
    if errs and max(errs) > tol:
        raise VerificationFailure("b", f"eigenvalue mismatch {max(errs):.3g} > {tol:g}")
    return ({"passed": True, "expected": [[z.real, z.imag] for z in want],
             "found": [[z.real, z.imag] for z in got], "max_error": max(errs, default=0.0)}, rep)


def _clause_c(fam: QuarticFamily, beta: BetaSpec, samples: int = 50) -> dict:
    b = float(beta)
    half = samples // 2
    xs = np.concatenate([np.linspace(1.25, fam.n + 2, samples - half),
                         -np.linspace(1.25, fam.n + 2, half)])
    worst = 0.0
    for x in xs:
        ev = phi(beta, b / x)
        factor = x**4 - x**3 if fam.family == "R" else x**4
        lhs = fam(x)
        rhs = factor * (1 - ev.value)
        allow = abs(factor) * ev.tail_bound + 1e-12 * max(1.0, abs(lhs), abs(factor))
        err = abs(lhs - rhs)
        if err > allow:
            raise VerificationFailure("c", f"identity fails at x={x}: |diff|={err:.3g}")
        worst = max(worst, err)
    return {"passed": True, "samples": int(len(xs)), "max_error": worst}


def _clause_d(rep) -> dict:
    mults = [e.multiplicity for e in rep.nonleading]
    if any(m != 1 for m in mults):
        raise VerificationFailure("d", f"multiplicities {mults} are not all 1")
    return {"passed": True, "multiplicities": mults}


def verify_example(fam: QuarticFamily, tol: float = 1e-9, n_digits: int = 24) -> dict:
    """Check digits, spectrum, factorization and simplicity; raise on the first failure."""
    beta = fam.beta
    report = {"family": fam.family, "n": fam.n, "beta": float(beta),
              "polynomial": list(fam.coefficients)}
    clauses = {"a": _clause_a(fam, beta, n_digits)}
    clauses["b"], rep = _clause_b(fam, beta, tol)
    clauses["c"] = _clause_c(fam, beta)
    clauses["d"] = _clause_d(rep)
    report["clauses"] = clauses
    report["passed"] = True
    return report
