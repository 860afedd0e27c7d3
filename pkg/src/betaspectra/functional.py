"""The function F_lambda(x) = sum a_n(beta, x) (beta lambda)^-n and related probes.

F is always summed from digits, never from a functional equation, so a single
geometric tail bound governs its accuracy.  Sums are carried out in mpmath.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .betaspec import BetaSpec, to_fraction
from .errors import DomainError, InsufficientDigits
from .expansion import greedy_digits, quasi_greedy_digits
from .series import AUTO_CEILING, SeriesEvaluator, horizon_for, rational_form

__all__ = [
    "FunctionalEval",
    "continuity_residual",
    "continuity_residual_grid",
    "eval_F",
    "left_limit_F",
    "lipschitz_probe",
    "residual_zero_set",
    "takagi_decomposition",
]

WORK_BITS = 160


@dataclass(frozen=True)
class FunctionalEval:
    value: complex
    tail_bound: float
    x: Fraction
    lam: complex


def _ratio(beta: BetaSpec, lam: complex) -> float:
    q = 1 / (float(beta) * abs(complex(lam)))
    if q >= 1:
        raise DomainError("|lambda| must exceed 1/beta")
    if abs(complex(lam)) > 1 + 1e-12:
        raise DomainError("|lambda| must not exceed 1")
    return q


def _digit_beta(beta: BetaSpec, n: int) -> BetaSpec:
    if beta.is_exact:
        return beta
    need = math.ceil((n + 16) * math.log2(float(beta))) + 64
    return beta.with_precision(max(beta.precision_bits, need))


def _terms(beta: BetaSpec, lam: complex, tol: float, bound: float) -> int:
    q = _ratio(beta, lam)
    return horizon_for(q, bound, tol)


def _inv_beta_lambda(beta: BetaSpec, lam: complex):
    b = beta.value_at(WORK_BITS)
    return 1 / (b * mpmath.mpc(complex(lam)))


def _digit_sum(digits, r) -> mpmath.mpc:
    acc = mpmath.mpc(0)
    for d in reversed(digits):
        acc = (acc + d) * r
    return acc


def _evaluate(beta: BetaSpec, lam, x, tol: float, quasi: bool) -> FunctionalEval:
    x = to_fraction(x)
    if not 0 <= x <= 1:
        raise DomainError("x must lie in [0, 1]")
    bound = float(beta.floor)
    n = _terms(beta, lam, tol, bound)
    src = _digit_beta(beta, n)
    if quasi:
        ds = quasi_greedy_digits(src, x, n)
        digits, word, finite = ds.quasi_greedy, ds.quasi_word, False
    else:
        ds = greedy_digits(src, x, n)
        digits, word = ds.greedy, ds.greedy_word
        finite = word is not None and word.is_finite
    if ds.trust_horizon < n and not finite:
        raise InsufficientDigits("digits not trusted to the required horizon")
    with mpmath.workprec(WORK_BITS):
        r = _inv_beta_lambda(beta, lam)
        if finite:
            # finitely many nonzero digits: the sum is exact
            k = word.support_end()
            val = _digit_sum(digits[:k], r)
            tail = 0.0
        elif word is not None:
            # eventually periodic digits: closed form
            m, p = len(word.prefix), len(word.cycle)
            val = _digit_sum(word.prefix, r) + r**m * _digit_sum(word.cycle, r) / (1 - r**p)
            tail = 0.0
        else:
            val = _digit_sum(digits, r)
            q = _ratio(beta, lam)
            tail = bound * q ** (n + 1) / (1 - q)
        return FunctionalEval(complex(val), tail + 1e-30, x, complex(lam))


def eval_F(beta: BetaSpec, lam, x, tol: float = 1e-12) -> FunctionalEval:
    """F_lambda(x) from the greedy digits of x."""
    return _evaluate(beta, lam, x, tol, quasi=False)


def left_limit_F(beta: BetaSpec, lam, x, tol: float = 1e-12) -> FunctionalEval:
    """lim_{y -> x-} F_lambda(y), summed over the quasi-greedy digits of x."""
    if to_fraction(x) <= 0:
        raise DomainError("left limits need x > 0")
    return _evaluate(beta, lam, x, tol, quasi=True)


def continuity_residual(beta: BetaSpec, lam, tol: float = 1e-12) -> float:
    """|1 - phi_hat(1/lambda)|, zero exactly when lambda is an eigenvalue."""
    return float(continuity_residual_grid(beta, np.array([complex(lam)]))[0])


def continuity_residual_grid(beta: BetaSpec, lams) -> np.ndarray:
    """Vectorized continuity residual.

    Inside |1/lambda| <= 0.97 beta the certified series is summed.  Beyond
    that radius the residual is only available when the quasi-greedy digits
    of 1 are eventually periodic, in which case the closed rational form
    (the meromorphic continuation of phi_hat) is used.
    """
    lams = np.asarray(lams, dtype=complex)
    if np.any(lams == 0):
        raise DomainError("lambda must be nonzero")
    z = 1 / lams
    b = float(beta)
    inside = np.abs(z) <= AUTO_CEILING * b
    out = np.empty(z.shape, dtype=float)
    if np.any(inside):
        ev = SeriesEvaluator(beta, "phi_hat", radius=float(np.max(np.abs(z[inside]))))
        val, _ = ev.evaluate(z[inside])
        out[inside] = np.abs(1 - val)
    if not np.all(inside):
        form = rational_form(beta, "phi_hat")
        if form is None:
            raise DomainError("|lambda| must exceed 1/(0.97 beta) without periodic digits")
        out[~inside] = np.abs(1 - form(z[~inside]))
    return out


def takagi_decomposition(beta: BetaSpec, lam, x, tol: float = 1e-12) -> dict:
    """rho(x) = sum_{n>=1} tau^n(x) (beta lambda)^-n and the check
    F(x) = x/lambda + (1/lambda - 1) rho(x)."""
    x = to_fraction(x)
    lam = complex(lam)
    q = _ratio(beta, lam)
    n = horizon_for(q, max(1.0, float(beta.floor)), tol)
    src = _digit_beta(beta, n)
    from .expansion import _orbit  # orbit values of x

    orb = _orbit(src, x, n)
    F = eval_F(beta, lam, x, tol)
    with mpmath.workprec(WORK_BITS):
        r = _inv_beta_lambda(beta, lam)
        rho = _digit_sum([mpmath.mpf(v) for v in orb.values[1:n + 1]], r)
        rho_tail = q ** (n + 1) / (1 - q)
        xv = mpmath.mpf(x.numerator) / x.denominator
        lamm = mpmath.mpc(lam)
        recon = xv / lamm + (1 / lamm - 1) * rho
        err = abs(complex(F.value) - complex(recon))
    bound = F.tail_bound + abs(1 / lam - 1) * rho_tail
    return {"rho": complex(rho), "reconstruction_error": float(err),
            "bound": float(bound), "F": F.value}


def lipschitz_probe(beta: BetaSpec, lam, x0, depth: int, tol: float = 1e-12) -> list[dict]:
    """Quotients |F(x_k) - F(x_0)| / |x_k - x_0| along left truncations x_k of x_0.

    For x0 = 0 the probe points are x_N = beta^-N (N = 1..depth), where the
    quotient equals |lambda|^-N.  For x0 > 0, x_k keeps the quasi-greedy
    digits of x0 up to the k-th nonzero one.
    """
    x0 = to_fraction(x0)
    lam = complex(lam)
    out = []
    with mpmath.workprec(WORK_BITS):
        b = beta.value_at(WORK_BITS)
        r = _inv_beta_lambda(beta, lam)
        if x0 == 0:
            for N in range(1, depth + 1):
                xN = b ** (-N)
                FN = r**N  # x_N has the single digit a_N = 1
                quot = abs(FN) / xN
                out.append({"k": N, "x": float(xN), "quotient": float(quot),
                            "expected": float(abs(mpmath.mpc(lam)) ** (-N))})
            return out
        q = _ratio(beta, lam)
        n_tail = horizon_for(q, float(beta.floor), tol)
        ds0 = quasi_greedy_digits(_digit_beta(beta, 4 * depth + n_tail), x0, 4 * depth + n_tail)
        nz = [i for i, d in enumerate(ds0.quasi_greedy, 1) if d]
        if len(nz) < depth + 1:
            raise InsufficientDigits("too few nonzero quasi-greedy digits")
        binv = 1 / b
        for k in range(1, depth + 1):
            lk = nz[k - 1]
            head = ds0.quasi_greedy[:lk]
            tail_digits = ds0.quasi_greedy[lk:]
            # x0 - x_k and F(x0) - F(x_k) as quasi-greedy tails, free of
            # cancellation; F(x0) is the left limit, which is the value
            # whenever lambda is an eigenvalue
            gap = mpmath.re(_digit_sum(tail_digits, binv)) * binv**lk
            quot = abs(_digit_sum(tail_digits, r) * r**lk) / gap
            out.append({"k": k, "l": lk, "x": float(mpmath.re(_digit_sum(head, binv))),
                        "quotient": float(quot),
                        "reference": float(abs(mpmath.mpc(lam)) ** (-nz[k]))})
    return out


def residual_zero_set(beta: BetaSpec, grid: int = 200, tol: float | None = None,
                      ceiling: float = 0.95) -> list[complex]:
    """Eigenvalues seen by the continuity residual alone.

    The residual is sampled on a grid x grid square over the annulus
    1/(ceiling beta) <= |lambda| <= 1.  Since |1 - phi_hat| has no local
    minima away from its zeros, every grid-local minimum is polished by
    Newton on 1 - phi_hat(z), z = 1/lambda, and kept when the polished
    residual is at most 10 tol.
    """
    from .spectra import default_tol

    if tol is None:
        tol = default_tol(beta)
    b = float(beta)
    r_out = ceiling * b
    axis = np.linspace(-1.0, 1.0, grid)
    lam = axis[None, :] + 1j * axis[:, None]
    mod = np.abs(lam)
    mask = (mod <= 1.0) & (mod >= 1 / r_out)
    res = np.full(lam.shape, np.inf)
    res[mask] = continuity_residual_grid(beta, lam[mask])
    pad = np.pad(res, 1, constant_values=np.inf)
    is_min = mask.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= res <= pad[1 + di:1 + di + grid, 1 + dj:1 + dj + grid]
    ev = SeriesEvaluator(beta, "phi_hat", radius=min(AUTO_CEILING * b, r_out * 1.01))
    found: list[complex] = []
    for l0 in lam[is_min]:
        z = 1 / complex(l0)
        for _ in range(60):
            v, _, d, _ = ev.evaluate(np.array([z]), deriv=True)
            f, fp = 1 - complex(v[0]), -complex(d[0])
            if fp == 0:
                break
            step = f / fp
            z -= step
            if not 0.5 < abs(z) < r_out * 1.01:
                break
            if abs(step) <= 1e-15 * abs(z):
                break
        if not 1 - 1e-9 <= abs(z) <= r_out * (1 + 1e-9):
            continue
        if abs(1 - complex(ev.evaluate(np.array([z]))[0][0])) > 10 * tol:
            continue
        l1 = 1 / z
        if all(abs(l1 - o) > 1e-7 for o in found):
            found.append(l1)
    return sorted(found, key=lambda v: (-round(abs(v), 12), round(float(np.angle(v)), 12)))
