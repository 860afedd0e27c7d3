from __future__ import annotations

import numpy as np
import pytest

from betaspectra.betaspec import BetaSpec
from betaspectra.errors import DomainError, NearPole, TooLarge
from betaspectra.series import (
    SeriesEvaluator,
    fix_count,
    phi,
    phi_hat,
    psi,
    rational_form,
    zeta,
    zeta_series,
)

PHI = (1 + 5**0.5) / 2


@pytest.mark.parametrize("spec", ["poly:1,-1,-1@(1,2)", "poly:1,-3,-2,0,-3@(3,4)",
                                  "poly:1,-5,0,4,-3@(4,5)", "2.3", "1.37"])
def test_phi_at_one(spec):
    b = BetaSpec.parse(spec)
    ev = phi(b, 1.0)
    assert abs(ev.value - 1) <= ev.tail_bound + 1e-14
    ev = phi_hat(b, 1.0)
    assert abs(ev.value - 1) <= ev.tail_bound + 1e-14


def test_phi_golden_closed_form(golden):
    for z in (0.3, -1.1 + 0.4j, 1.2j):
        assert phi(golden, z).value == pytest.approx(z / PHI + z**2 / PHI**2, abs=1e-14)


def test_p3_factorization(p3):
    b = float(p3)
    for z in (0.5, -2.1 + 0.7j, 3.0j):
        x = b / z
        lhs = 1 - phi(p3, z).value
        rhs = (x**4 - 3 * x**3 - 2 * x**2 - 3) * (z / b) ** 4
        assert abs(lhs - rhs) < 1e-12


def test_hat_relation_simple(p3):
    b = float(p3)
    for z in (0.4, 2.0 - 1.0j, -3.0):
        lhs = 1 - phi_hat(p3, z).value
        rhs = (1 - phi(p3, z).value) / (1 - (z / b) ** 4)
        assert abs(lhs - rhs) < 1e-12


def test_hat_equals_phi_when_not_simple(r4):
    for z in (0.5, 2.0 + 1.0j):
        assert abs(phi_hat(r4, z).value - phi(r4, z).value) < 1e-14


def test_psi_examples(golden):
    assert psi(golden, 0).value == 1
    z = 0.7 - 0.2j
    assert psi(golden, z).value == pytest.approx(1 + (PHI - 1) * z / PHI, abs=1e-14)


def test_psi_at_least_one_on_unit_interval(r4):
    xs = np.linspace(0, 1, 21)
    vals, _ = SeriesEvaluator(r4, "psi", radius=1.0).evaluate(xs)
    assert np.all(vals.real >= 1 - 1e-14)


def test_domain_errors(p3):
    with pytest.raises(DomainError):
        phi(p3, 1.01 * float(p3))
    # without a closed form the certified horizon stops at 0.97 beta
    b = BetaSpec.numeric("2.3")
    with pytest.raises(DomainError):
        phi(b, 0.98 * float(b))
    with pytest.raises(DomainError):
        zeta(p3, 1.2)


def test_rational_form_simple(p3):
    form = rational_form(p3, "phi")
    # 1 - phi is a polynomial of degree 4 in z/beta
    assert form.denominator == (1.0,)
    assert len(form.numerator) == 5


def test_zeta_examples(golden):
    assert zeta(golden, 0) == pytest.approx(1)
    z = 0.5
    want = (1 - (z / PHI) ** 2) / (1 - z / PHI - z**2 / PHI**2)
    assert zeta(golden, z) == pytest.approx(want, rel=1e-14)
    v, err = zeta(golden, 0.3, return_bound=True)
    w, err2 = zeta_series(golden, 0.3, 8, return_bound=True)
    assert abs(v - w) <= 10 * (err + err2)


def test_near_pole(golden):
    # the leading zero of 1 - phi sits at z = 1, outside the disk |z| < 1
    with pytest.raises(NearPole):
        zeta(BetaSpec.numeric("1.9999999"), 0.9999999999999999)


def test_fix_count_examples(golden):
    assert fix_count(BetaSpec.numeric("1.5"), 1) == 1
    assert fix_count(BetaSpec.numeric("3.5"), 1) == 3
    assert [fix_count(golden, n) for n in range(1, 9)] == [1, 1, 4, 5, 11, 16, 29, 45]


def test_fix_count_matches_log_zeta(golden):
    # n-th coefficient of log zeta(beta z) is #Fix_n / n
    b = float(golden)
    r = 0.3
    ts = np.exp(2j * np.pi * np.arange(64) / 64)
    coeffs = []
    for n in (1, 2, 3):
        vals = [np.log(zeta(golden, r * t)) for t in ts]
        c = np.mean(np.array(vals) * ts ** (-n)) / r**n
        coeffs.append(c * n * b**n)
    assert [round(c.real) for c in coeffs] == [fix_count(golden, n) for n in (1, 2, 3)]


def test_fix_count_too_large():
    with pytest.raises(TooLarge):
        fix_count(BetaSpec.numeric("5.5"), 8)
