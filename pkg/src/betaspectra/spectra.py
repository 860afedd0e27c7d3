"""Isolated eigenvalues of the transfer operator as reciprocals of zeros of 1 - phi.

Zeros are counted with the argument principle applied to psi = (1 - phi)/(1 - z),
which has no zeros in the closed unit disk, so the guaranteed zero z = 1 never
sits on a contour.  The annulus 1 <= |z| <= r_outer is cut into polar cells,
cells with zeros are subdivided until each holds one zero that Newton's method
can reach, and the multiplicities are read off small circles.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .betaspec import BetaSpec
from .errors import BetaSpectraError, BoundaryZero, DomainError, NonConvergence
from .series import SeriesEvaluator

__all__ = [
    "Eigenvalue",
    "ScanResult",
    "SpectrumReport",
    "Subleading",
    "count_zeros",
    "default_tol",
    "locate_eigenvalues",
    "scan_beta_range",
    "subleading",
    "winding_number",
]

DEFAULT_CEILING = 0.95
MAX_CEILING = 0.97
ANGLE_OFFSET = 0.1234567  # keeps sector edges off the real axis
SECTORS = 8
MIN_CELL = 1e-9
_MAX_SAMPLES = 1 << 15


@dataclass(frozen=True)
class Eigenvalue:
    lam: complex
    multiplicity: int
    residual: float
    kind: str  # "leading" or "non-leading"
    beta: BetaSpec

    @property
    def zero(self) -> complex:
        return 1 / self.lam

    def to_dict(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "modulus": abs(self.lam),
                "multiplicity": self.multiplicity, "residual": self.residual,
                "kind": self.kind}


@dataclass(frozen=True)
class SpectrumReport:
    beta: BetaSpec
    eigenvalues: tuple
    search_region: dict
    contour_winding_total: int
    subleading_modulus: float | None
    mode: str
    tol: float

    @property
    def nonleading(self) -> tuple:
        return tuple(e for e in self.eigenvalues if e.kind == "non-leading")

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.describe(),
            "mode": self.mode,
            "tol": self.tol,
            "search_region": self.search_region,
            "contour_winding_total": self.contour_winding_total,
            "subleading_modulus": self.subleading_modulus,
            "eigenvalues": [e.to_dict() for e in self.eigenvalues],
        }


@dataclass(frozen=True)
class Subleading:
    modulus: float
    eigenvalues: tuple
    simple: tuple


def default_tol(beta: BetaSpec) -> float:
    ev = SeriesEvaluator(beta, "phi", radius=DEFAULT_CEILING * float(beta))
    return 1e-10 if ev.periodic else 1e-8


class _Functions:
    """psi for counting, 1 - phi and its derivative for Newton."""

    def __init__(self, beta: BetaSpec, radius: float):
        self.beta = beta
        self.psi = SeriesEvaluator(beta, "psi", radius=radius)
        self.phi = SeriesEvaluator(beta, "phi", radius=radius)
        self.periodic = self.psi.periodic and self.phi.periodic

    def count_values(self, z):
        return self.psi.evaluate(z, deriv=True)

    def newton_values(self, z):
        v, t, d, dt = self.phi.evaluate(np.atleast_1d(z), deriv=True)
        return 1 - v, t, -d, dt


# -- argument principle ------------------------------------------------------

def _winding(fn, path, n0: int = 64) -> int:
    """Winding number of fn(path(t)) around 0 for t in [0, 1).

    ``fn`` returns (values, tails) or (values, tails, derivatives, ...).
    Samples are refined until consecutive phase increments stay below pi/4,
    the truncation bound stays below a quarter of |f| at every sample and,
    when derivatives are given, each step is shorter than half of |f / f'|
    at both ends, so the path cannot loop around 0 between samples.
    """
    t = np.linspace(0.0, 1.0, n0, endpoint=False)
    z = path(t)
    f, tail, df = _sample(fn, z)
    while True:
        mag = np.abs(f)
        if np.any(tail >= 0.25 * mag) or np.any(mag == 0):
            raise BoundaryZero("a zero lies within the truncation bound of the contour")
        nxt = np.roll(f, -1)
        d = np.angle(nxt / f)
        bad = np.abs(d) >= math.pi / 4
        if df is not None:
            h = np.abs(np.roll(z, -1) - z)
            slope = np.abs(df)
            bad |= (slope * h > 0.5 * mag) | (np.roll(slope, -1) * h > 0.5 * np.roll(mag, -1))
        if not bad.any():
            return int(round(d.sum() / (2 * math.pi)))
        if len(t) > _MAX_SAMPLES:
            raise BoundaryZero("contour passes too close to a zero")
        t_next = np.append(t[1:], 1.0)
        mids = 0.5 * (t[bad] + t_next[bad])
        zm = path(mids)
        fm, tm, dm = _sample(fn, zm)
        t = np.concatenate([t, mids])
        z = np.concatenate([z, zm])
        f = np.concatenate([f, fm])
        tail = np.concatenate([tail, tm])
        if df is not None:
            df = np.concatenate([df, dm])
        order = np.argsort(t, kind="stable")
        t, z, f, tail = t[order], z[order], f[order], tail[order]
        if df is not None:
            df = df[order]


def _sample(fn, z):
    out = fn(z)
    return out[0], out[1], (out[2] if len(out) > 2 else None)


def _circle(center: complex, r: float):
    return lambda t: center + r * np.exp(2j * math.pi * t)


def _cell_path(r0, r1, a0, a1):
    def path(t):
        t = np.asarray(t, dtype=float)
        s = (t * 4.0) % 1.0
        q = np.floor(t * 4.0).astype(int)
        z = np.empty(t.shape, dtype=complex)
        # outer arc, radial in, inner arc back, radial out
        m = q == 0
        z[m] = r1 * np.exp(1j * (a0 + (a1 - a0) * s[m]))
        m = q == 1
        z[m] = (r1 + (r0 - r1) * s[m]) * np.exp(1j * a1)
        m = q == 2
        z[m] = r0 * np.exp(1j * (a1 + (a0 - a1) * s[m]))
        m = q >= 3
        z[m] = (r0 + (r1 - r0) * s[m]) * np.exp(1j * a0)
        return z
    return path


def winding_number(beta: BetaSpec, radius: float, center: complex = 0.0, kind: str = "psi") -> int:
    """Winding of the chosen series along the circle |z - center| = radius."""
    ev = SeriesEvaluator(beta, kind, radius=abs(center) + radius)
    fn = (lambda z: ev.evaluate(z, deriv=True)) if kind == "psi" else (lambda z: _one_minus(ev, z))
    return _winding(fn, _circle(center, radius))


def _one_minus(ev, z):
    v, t, d, dt = ev.evaluate(z, deriv=True)
    return 1 - v, t, -d, dt


def count_zeros(beta: BetaSpec, r_inner: float, r_outer: float) -> int:
    """Zeros of 1 - phi in r_inner < |z| < r_outer, z = 1 excluded.

    The count is the winding of psi on the outer circle minus that on the
    inner circle; psi shares every zero of 1 - phi except z = 1.
    """
    b = float(beta)
    if not 1 <= r_inner < r_outer:
        raise DomainError("need 1 <= r_inner < r_outer")
    if r_outer > MAX_CEILING * b:
        raise DomainError("r_outer must not exceed 0.97 beta")
    ev = SeriesEvaluator(beta, "psi", radius=r_outer)
    fn = lambda z: ev.evaluate(z, deriv=True)
    return _winding(fn, _circle(0, r_outer)) - _winding(fn, _circle(0, r_inner))


# -- zero location -------------------------------------------------------------

@dataclass
class _Cell:
    r0: float
    r1: float
    a0: float
    a1: float
    count: int | None = None

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        r = abs(z)
        a = (math.atan2(z.imag, z.real) - self.a0) % (2 * math.pi) + self.a0
        return (self.r0 - margin <= r <= self.r1 + margin
                and self.a0 - margin <= a <= self.a1 + margin)

    @property
    def center(self) -> complex:
        r = 0.5 * (self.r0 + self.r1)
        return r * complex(math.cos(0.5 * (self.a0 + self.a1)), math.sin(0.5 * (self.a0 + self.a1)))

    @property
    def size(self) -> float:
        return max(self.r1 - self.r0, 0.5 * (self.r0 + self.r1) * (self.a1 - self.a0))

    def split(self, frac: float):
        if self.r1 - self.r0 >= 0.5 * (self.r0 + self.r1) * (self.a1 - self.a0):
            rm = self.r0 + frac * (self.r1 - self.r0)
            return _Cell(self.r0, rm, self.a0, self.a1), _Cell(rm, self.r1, self.a0, self.a1)
        am = self.a0 + frac * (self.a1 - self.a0)
        return _Cell(self.r0, self.r1, self.a0, am), _Cell(self.r0, self.r1, am, self.a1)


def _cell_count(funcs: _Functions, cell: _Cell) -> int:
    return _winding(funcs.count_values, _cell_path(cell.r0, cell.r1, cell.a0, cell.a1))


def _newton(funcs: _Functions, z0: complex, mult: int = 1, iters: int = 80):
    z = complex(z0)
    last = math.inf
    for _ in range(iters):
        # psi has the zeros of 1 - phi except z = 1, so Newton cannot slide
        # onto the leading zero on the inner circle
        f, _, d, _ = funcs.count_values(np.atleast_1d(z))
        f, d = complex(f[0]), complex(d[0])
        if d == 0:
            return None
        step = mult * f / d
        z -= step
        if abs(z) >= funcs.phi.b:
            return None
        if abs(step) <= 4e-16 * abs(z) or (abs(step) >= last and abs(step) < 1e-12 * abs(z)):
            return z
        last = abs(step)
    return z if last < 1e-10 * abs(z) else None


def _residual(funcs: _Functions, z: complex) -> float:
    f, t, _, _ = funcs.newton_values(z)
    return float(abs(f[0]) + t[0])


def _split_counted(funcs, cell):
    # try a few split positions if a child contour meets a zero
    for k in range(8):
        frac = 0.5 + 0.0731 * k * (-1) ** k
        a, b = cell.split(frac)
        try:
            a.count = _cell_count(funcs, a)
            b.count = _cell_count(funcs, b)
            return a, b
        except BoundaryZero:
            continue
    raise BoundaryZero("could not split a cell away from its zeros")


def _small_circle_multiplicity(funcs: _Functions, z: complex, others) -> int | None:
    for rel in (1e-3, 1e-5, 1e-7):
        rho = rel * abs(z)
        if any(abs(o - z) <= 2 * rho for o in others):
            continue
        if abs(z) - rho <= 1.0:
            continue
        try:
            return _winding(funcs.count_values, _circle(z, rho))
        except BoundaryZero:
            continue
    return None


def _find_zeros(funcs: _Functions, r_outer: float, tol: float) -> list[tuple[complex, int]]:
    step = 2 * math.pi / SECTORS
    todo = []
    for k in range(SECTORS):
        c = _Cell(1.0, r_outer, ANGLE_OFFSET + k * step, ANGLE_OFFSET + (k + 1) * step)
        c.count = _cell_count(funcs, c)
        todo.append(c)
    found: list[tuple[complex, int]] = []
    while todo:
        cell = todo.pop(0)
        if cell.count == 0:
            continue
        if cell.count < 0:
            raise NonConvergence("negative zero count in a cell")
        if cell.count == 1 or cell.size < MIN_CELL:
            z = _newton(funcs, cell.center, mult=cell.count)
            margin = 1e-9 * r_outer
            if z is not None and cell.contains(z, margin) and _residual(funcs, z) <= tol:
                found.append((z, cell.count))
                continue
            if cell.size < MIN_CELL:
                raise NonConvergence("Newton failed in a minimal cell")
        todo.extend(_split_counted(funcs, cell))
    return found


def _total_winding(funcs: _Functions, r_outer: float) -> int:
    inner = _winding(funcs.count_values, _circle(0, 1.0))
    return _winding(funcs.count_values, _circle(0, r_outer)) - inner


def _symmetrize(eigs: list) -> list:
    """Make conjugate partners exact conjugates (the series has real coefficients)."""
    out = list(eigs)
    for i, e in enumerate(out):
        if e.lam.imag <= 0:
            continue
        for j, o in enumerate(out):
            if o.lam.imag < 0 and abs(o.lam - e.lam.conjugate()) <= 1e-8 * abs(e.lam):
                mid = 0.5 * (e.lam + o.lam.conjugate())
                out[i] = replace(e, lam=mid)
                out[j] = replace(o, lam=mid.conjugate())
                break
    return out


def locate_eigenvalues(beta: BetaSpec, tol: float | None = None,
                       ceiling: float = DEFAULT_CEILING) -> SpectrumReport:
    """All eigenvalues with 1/r_outer <= |lambda| <= 1, r_outer = ceiling * beta."""
    b = float(beta)
    if not 0 < ceiling <= MAX_CEILING:
        raise DomainError("ceiling must lie in (0, 0.97]")
    if tol is None:
        tol = default_tol(beta)
    base = ceiling * b
    last_err = None
    for k in range(9):
        eps = 0.0 if k == 0 else 1e-6 * 2 ** ((k - 1) // 2) * (-1) ** k
        r_outer = min(base * (1 + eps), MAX_CEILING * b)
        if r_outer <= 1.0:
            break
        funcs = _Functions(beta, r_outer)
        try:
            total = _total_winding(funcs, r_outer)
            zeros = _find_zeros(funcs, r_outer, tol)
        except BoundaryZero as exc:
            last_err = exc
            continue
        break
    else:
        raise last_err
    if r_outer <= 1.0:
        raise DomainError("beta too close to 1 for a non-empty search annulus")

    eigs = []
    pts = [z for z, _ in zeros]
    for z, cnt in zeros:
        others = [o for o in pts if o != z]
        m = _small_circle_multiplicity(funcs, z, others) if cnt == 1 else cnt
        if m is None or m < 1:
            m = cnt
        lam = 1 / z
        if abs(lam.imag) <= 1e-14 * abs(lam):
            lam = complex(lam.real, 0.0)  # real zero of a real series
        eigs.append(Eigenvalue(lam, m, _residual(funcs, z), "non-leading", beta))
    eigs = _symmetrize(eigs)
    if sum(e.multiplicity for e in eigs) != total:
        raise NonConvergence(
            f"multiplicities {sum(e.multiplicity for e in eigs)} do not match winding {total}")
    eigs.sort(key=lambda e: (-round(abs(e.lam), 12), round(math.atan2(e.lam.imag, e.lam.real), 12)))
    lead = Eigenvalue(1 + 0j, 1, _residual(funcs, 1.0), "leading", beta)
    moduli = [abs(e.lam) for e in eigs]
    report = SpectrumReport(
        beta=beta,
        eigenvalues=(lead, *eigs),
        search_region={"r_inner": 1.0, "r_outer": r_outer,
                       "lambda_floor": 1 / r_outer, "essential_radius": 1 / b,
                       "uncovered": [1 / b, 1 / r_outer]},
        contour_winding_total=total,
        subleading_modulus=max(moduli) if moduli else None,
        mode="closed-form" if funcs.periodic else "truncated",
        tol=tol,
    )
    return report


def subleading(beta: BetaSpec, report: SpectrumReport | None = None) -> Subleading | None:
    """M(beta) and the eigenvalues attaining it, or None without non-leading spectrum."""
    report = report or locate_eigenvalues(beta)
    nl = report.nonleading
    if not nl:
        return None
    m = max(abs(e.lam) for e in nl)
    tol = max(report.tol, 1e-9) * 10
    top = tuple(e for e in nl if abs(abs(e.lam) - m) <= tol)
    return Subleading(m, top, tuple(e.multiplicity == 1 for e in top))


# -- scans -----------------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    betas: tuple
    reports: tuple  # SpectrumReport or None per grid point
    errors: tuple  # error text or None per grid point

    @property
    def fraction_nonleading(self) -> float:
        ok = [r for r in self.reports if r is not None]
        if not ok:
            return float("nan")
        return sum(1 for r in ok if r.nonleading) / len(ok)


def _scan_point(args):
    value, tol, ceiling = args
    try:
        beta = BetaSpec.numeric(value)
        return locate_eigenvalues(beta, tol, ceiling), None
    except (BetaSpectraError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def scan_beta_range(lo: float, hi: float, grid: int, threads: int = 1,
                    tol: float | None = None, ceiling: float = DEFAULT_CEILING) -> ScanResult:
    """Spectra on an evenly spaced grid of numeric bases; failures are recorded per point."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if not 1 < lo < hi:
        raise ValueError("need 1 < lo < hi")
    betas = tuple(float(v) for v in np.linspace(lo, hi, grid))
    jobs = [(v, tol, ceiling) for v in betas]
    if threads <= 1:
        out = [_scan_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(_scan_point, jobs))
    return ScanResult(betas, tuple(r for r, _ in out), tuple(e for _, e in out))
