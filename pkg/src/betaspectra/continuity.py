"""Eigenvalue branches lambda(beta): continuation, Hoelder constants and
difference quotients along left Parry approximants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .betaspec import BetaSpec
from .errors import BoundaryZero, BranchLoss, DegenerateOrbit, DomainError, InadmissibleWord, InsufficientDigits
from .expansion import beta_from_digits, orbit_of_one, quasi_greedy_digits
from .series import AUTO_CEILING, SeriesEvaluator
from .spectra import locate_eigenvalues, winding_number

__all__ = [
    "EigenCurve",
    "HoelderEstimate",
    "fit_exponent",
    "holder_constants",
    "left_parry_approximants",
    "newton_zero",
    "nondiff_probe",
    "track",
]

DEFAULT_HORIZON = 64
MAX_HALVINGS = 10


@dataclass(frozen=True)
class EigenCurve:
    betas: tuple
    lambdas: tuple
    base: dict
    continuation_residuals: tuple
    truncated: bool = False
    flags: tuple = ()

    def rows(self):
        for b, lam, r in zip(self.betas, self.lambdas, self.continuation_residuals):
            yield b, lam, r


@dataclass(frozen=True)
class HoelderEstimate:
    gamma1: float
    gamma2: float
    alpha0: float
    alpha1: float | None
    alpha2: float | None
    fitted_left: float | None = None
    fitted_right: float | None = None
    horizon: int = DEFAULT_HORIZON
    gamma_method: str = "finite-horizon"

    def to_dict(self) -> dict:
        return {"gamma1": self.gamma1, "gamma2": self.gamma2, "alpha0": self.alpha0,
                "alpha1": self.alpha1, "alpha2": self.alpha2,
                "fitted_left": self.fitted_left, "fitted_right": self.fitted_right,
                "horizon": self.horizon, "gamma_method": self.gamma_method}


# -- Newton on 1 - phi ---------------------------------------------------------

def newton_zero(beta: BetaSpec, z0: complex, tol: float = 1e-8, iters: int = 60):
    """Zero of 1 - phi_beta near z0 as (z, residual), or None when Newton fails."""
    b = float(beta)
    radius = min(AUTO_CEILING * b, 1.05 * abs(z0) + 1e-3)
    try:
        ev = SeriesEvaluator(beta, "phi", radius=radius)
    except DomainError:
        return None
    z = complex(z0)
    for _ in range(iters):
        if abs(z) > radius:
            return None
        v, t, d, _ = ev.evaluate(np.array([z]), deriv=True)
        f, fp = 1 - complex(v[0]), -complex(d[0])
        if fp == 0:
            return None
        step = f / fp
        z -= step
        if abs(step) <= 4e-16 * abs(z):
            break
    if abs(z) > radius:
        return None
    v, t = ev.evaluate(np.array([z]))
    res = abs(1 - complex(v[0])) + float(t[0])
    if res > tol:
        return None
    return z, res


# -- continuation --------------------------------------------------------------

def _as_beta(value: float, beta0: BetaSpec, value0: float) -> BetaSpec:
    if value == value0:
        return beta0
    return BetaSpec.numeric(value)


def _continue(beta0: BetaSpec, b0: float, z0: complex, others: list, targets, tol: float):
    """Follow the zero z0 (and the companions ``others``) through ``targets``."""
    out = []
    cur_b, cur_z, cur_o = b0, z0, list(others)
    prev = None  # (beta, z) one accepted step back, for the linear predictor
    truncated = False
    for target in targets:
        h = target - cur_b
        reached = False
        halvings = 0
        while not reached:
            nb = cur_b + h
            pred = cur_z
            if prev is not None and prev[0] != cur_b:
                pred = cur_z + (cur_z - prev[1]) * (nb - cur_b) / (cur_b - prev[0])
            beta = _as_beta(nb, beta0, b0)
            hit = newton_zero(beta, pred, tol)
            new_o = []
            for o in cur_o:
                r = newton_zero(beta, o, tol)
                if r is not None:
                    new_o.append(r[0])
            ok = False
            if hit is not None:
                z, res = hit
                gap = min((abs(pred - o) for o in new_o), default=math.inf)
                ok = abs(z - pred) < 0.5 * gap and all(abs(z - o) > 10 * tol for o in new_o)
            if ok:
                prev = (cur_b, cur_z)
                cur_b, cur_z, cur_o = nb, z, new_o
                if nb == target:
                    out.append((nb, z, res))
                    reached = True
                else:
                    h = target - cur_b
            else:
                halvings += 1
                if halvings > MAX_HALVINGS:
                    truncated = True
                    return out, truncated
                h /= 2
    return out, truncated


def track(beta0: BetaSpec, lambda0: complex, interval, steps: int,
          tol: float = 1e-8, companions=None) -> EigenCurve:
    """Predictor-corrector continuation of the eigenvalue lambda0 over ``interval``.

    A step is accepted when the corrector moves less than half the distance
    from the prediction to the nearest companion zero; otherwise the beta step
    is halved, and after ``MAX_HALVINGS`` failures the curve is truncated.
    """
    lo, hi = float(interval[0]), float(interval[1])
    b0 = float(beta0)
    if not lo <= b0 <= hi:
        raise DomainError("interval must contain beta0")
    z0 = 1 / complex(lambda0)
    base = newton_zero(beta0, z0, tol)
    if base is None:
        raise BranchLoss("lambda0 is not an eigenvalue within tolerance")
    z0, res0 = base
    if companions is None:
        rep = locate_eigenvalues(beta0)
        companions = [e.zero for e in rep.eigenvalues if abs(e.zero - z0) > 1e-6 * abs(z0)]
    else:
        companions = [1 / complex(c) for c in companions]
    base_info = {"beta0": b0, "lambda0": 1 / z0, "multiplicity": 1}
    if lo == hi or steps < 2:
        return EigenCurve((b0,), (1 / z0,), base_info, (res0,))
    grid = [float(v) for v in np.linspace(lo, hi, steps)]
    left = sorted((g for g in grid if g < b0), reverse=True)
    right = sorted(g for g in grid if g > b0)
    lpts, ltr = _continue(beta0, b0, z0, companions, left, tol)
    rpts, rtr = _continue(beta0, b0, z0, companions, right, tol)
    pts = list(reversed(lpts)) + [(b0, z0, res0)] + rpts
    flags = []
    if ltr:
        flags.append("left branch truncated")
    if rtr:
        flags.append("right branch truncated")
    return EigenCurve(tuple(p[0] for p in pts), tuple(1 / p[1] for p in pts), base_info,
                      tuple(p[2] for p in pts), ltr or rtr, tuple(flags))


# -- Hoelder constants ---------------------------------------------------------

def _alpha(beta0: float, lam: complex, M: int, gamma: float) -> float | None:
    if gamma <= 0:
        return None
    return math.log(abs(beta0 * lam)) / (math.log(beta0) + math.log(1 / gamma)) / M


def holder_constants(beta0: BetaSpec, lambda0: complex, M: int = 1,
                     horizon: int = DEFAULT_HORIZON, fitted_left: float | None = None) -> HoelderEstimate:
    """gamma_1, gamma_2 and the exponents alpha_0, alpha_1, alpha_2.

    When the orbit of 1 is seen to be eventually periodic (a Parry number) the
    orbit takes finitely many positive values, so both liminfs equal 1
    exactly.  Otherwise gamma_i is the minimum over n <= horizon, a
    conservative finite-horizon estimate.
    """
    if M < 1:
        raise ValueError("multiplicity must be positive")
    b = float(beta0)
    orb = orbit_of_one(beta0, horizon)
    left = [float(v) for v in orb.left_limits[1:horizon + 1]]
    fwd = [float(v) for v in orb.forward[1:horizon + 1]]
    if orb.cycle is not None:
        if min(left) <= 0 or max(fwd) >= 1:
            raise DegenerateOrbit("periodic orbit meets an endpoint")
        g1 = g2 = 1.0
        method = "exact-periodic"
    else:
        method = "finite-horizon"
        g1 = min((v ** (1 / n) if v > 0 else 0.0) for n, v in enumerate(left, 1))
        g2 = min(((1 - v) ** (1 / n) if v < 1 else 0.0) for n, v in enumerate(fwd, 1))
    a0 = math.log(abs(b * complex(lambda0))) / math.log(b) / M
    return HoelderEstimate(g1, g2, a0, _alpha(b, lambda0, M, g1), _alpha(b, lambda0, M, g2),
                           fitted_left, None, horizon, method)


# -- left Parry approximants ----------------------------------------------------

def _approximants(beta0: BetaSpec, horizon: int = 256):
    ds = quasi_greedy_digits(beta0, 1, horizon)
    limit = len(ds.quasi_greedy) if ds.quasi_word is None else math.inf
    if not beta0.is_exact:
        limit = min(limit, ds.trust_horizon)
    n = 0
    while True:
        n += 1
        if n > limit:
            raise InsufficientDigits("not enough trusted quasi-greedy digits")
        if n == 1 or ds.quasi_digit(n) == 0:
            continue
        word = [ds.quasi_digit(k) for k in range(1, n + 1)]
        try:
            yield n, beta_from_digits(word, precision_bits=max(128, 8 * n))
        except InadmissibleWord:
            continue


def left_parry_approximants(beta0: BetaSpec, count: int, horizon: int = 256,
                            with_index: bool = False):
    """Simple Parry numbers beta_N < beta_0 solving 1 = sum_{n <= l(N)} d_n beta_N^-n.

    l(N) runs over the indices of nonzero quasi-greedy digits of 1.  A
    truncation with a single digit defines an integer base and is skipped.
    """
    if count < 1:
        raise ValueError("count must be positive")
    out = []
    for n, bn in _approximants(beta0, horizon):
        out.append((n, bn) if with_index else bn)
        if len(out) == count:
            break
    return out


def _gap(b0: BetaSpec, b1: BetaSpec) -> float:
    with mpmath.workprec(256):
        return float(abs(b0.value_at(256) - b1.value_at(256)))


def _block_phase(beta0: BetaSpec):
    """(offset, period) of the block-aligned truncation lengths, or None.

    For an eventually periodic quasi-greedy word prefix + cycle^inf the
    truncations ending at the last nonzero digit of a cycle block are
    offset + k*period; the tail series after them restarts a whole block.
    """
    ds = quasi_greedy_digits(beta0, 1, 256)
    w = ds.quasi_word
    if w is None or not any(w.cycle):
        return None
    last = max(i for i, v in enumerate(w.cycle) if v)
    return (len(w.prefix) + last + 1) % len(w.cycle), len(w.cycle)


def nondiff_probe(beta0: BetaSpec, lambda0: complex, count: int, tol: float = 1e-9,
                  max_relative_shift: float = 0.02, max_skips: int = 64) -> list[dict]:
    """Difference quotients |lambda_0 - lambda_N| / |beta_0 - beta_N| along left approximants.

    For a Parry beta_0 only block-aligned approximants are used (a fixed
    phase of the period), so the tail series after each truncation is the
    same and stays bounded below.  An approximant is accepted when Newton
    seeded at 1/lambda_0 reaches a zero that is alone in the disk around
    1/lambda_0 through it and the eigenvalue moved by at most
    ``max_relative_shift * |lambda_0|`` (the perturbative regime).
    """
    lam0 = complex(lambda0)
    z0 = 1 / lam0
    phase = _block_phase(beta0)
    out = []
    skipped = 0
    for n, bn in _approximants(beta0):
        if len(out) == count:
            break
        if phase is not None and n % phase[1] != phase[0]:
            continue
        if skipped > max_skips:
            raise BranchLoss("too few approximants carry the branch")
        gap = _gap(beta0, bn)
        if abs(lam0 - 1) < 1e-12:
            out.append({"l": n, "beta": bn, "gap": gap, "lambda": 1 + 0j,
                        "quotient": 0.0, "residual": 0.0, "skipped": skipped})
            continue
        hit = newton_zero(bn, z0, tol)
        if hit is None or abs(hit[0] - 1) < 1e-8:
            skipped += 1
            continue
        z, res = hit
        lam = 1 / z
        if abs(lam - lam0) > max_relative_shift * abs(lam0):
            skipped += 1
            continue
        rho = 1.5 * abs(z - z0) + 1e-9
        if abs(z0) + rho < AUTO_CEILING * float(bn):
            try:
                alone = winding_number(bn, rho, center=z0) == 1
            except BoundaryZero:
                alone = False
            if not alone:
                skipped += 1
                continue
        out.append({"l": n, "beta": bn, "gap": gap, "lambda": lam,
                    "quotient": abs(lam0 - lam) / gap, "residual": res, "skipped": skipped})
    return out


def fit_exponent(probes: list[dict], lambda0: complex, last: int = 5,
                 tol: float = 1e-8) -> tuple[float, float] | None:
    """Least-squares slope of log|lambda_0 - lambda_N| against log gap (and its stderr)."""
    pts = [(math.log(p["gap"]), math.log(abs(complex(lambda0) - p["lambda"])))
           for p in probes if p["residual"] <= tol and abs(complex(lambda0) - p["lambda"]) > 0]
    pts = pts[-last:]
    if len(pts) < 3:
        return None
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = len(x) - 2
    resid = y - A @ coef
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    se = math.sqrt(s2 / float(((x - x.mean()) ** 2).sum())) if dof > 0 else float("nan")
    return float(coef[0]), se
