from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from betaspectra.betaspec import BetaSpec
from betaspectra.errors import DomainError
from betaspectra.expansion import greedy_digits
from betaspectra.functional import (
    continuity_residual,
    eval_F,
    left_limit_F,
    lipschitz_probe,
    residual_zero_set,
    takagi_decomposition,
)
from betaspectra.spectra import locate_eigenvalues

from conftest import LAMBDA_P3, LAMBDA_Q4


def test_identity_at_one(p3):
    for x in (Fraction(1, 3), Fraction(7, 10), Fraction(1)):
        ev = eval_F(p3, 1.0, x)
        assert abs(ev.value - float(x)) <= 1e-12 + ev.tail_bound


def test_zero_maps_to_zero(q4):
    assert eval_F(q4, LAMBDA_Q4, 0).value == 0


@pytest.mark.parametrize("lam", [LAMBDA_P3, 1.0])
def test_normalization_at_eigenvalues(p3, lam):
    ev = eval_F(p3, lam, 1)
    assert abs(ev.value - 1) <= 1e-12


def test_domain(p3):
    with pytest.raises(DomainError):
        eval_F(p3, 0.2, Fraction(1, 2))  # |lambda| <= 1/beta
    with pytest.raises(DomainError):
        eval_F(p3, 1.2, Fraction(1, 2))
    with pytest.raises(DomainError):
        left_limit_F(p3, 1.0, 0)


def test_left_continuity_non_simple_point(p3):
    x = Fraction(3, 10)
    a = eval_F(p3, LAMBDA_P3, x)
    b = left_limit_F(p3, LAMBDA_P3, x)
    assert abs(a.value - b.value) <= 2e-12


def test_left_continuity_simple_point_at_eigenvalue(p3):
    for lam in (LAMBDA_P3, 1.0):
        # x = 1 is simple with L = 4
        assert abs(eval_F(p3, lam, 1).value - left_limit_F(p3, lam, 1).value) <= 2e-12


def test_left_limit_defect_off_spectrum(golden):
    # x = 1 is simple with L = 2 at the golden ratio
    lam = 0.9
    b = float(golden)
    jump = abs(eval_F(golden, lam, 1).value - left_limit_F(golden, lam, 1).value)
    want = continuity_residual(golden, lam) * abs(b * lam) ** -2
    assert jump > 0
    assert jump == pytest.approx(want, rel=1e-10)


def test_continuity_residual_examples(golden, p3, q4):
    assert continuity_residual(golden, -0.5) > 0.01
    for beta in (golden, p3, q4):
        assert continuity_residual(beta, 1.0) <= 1e-12
    for beta in (p3, q4):
        for e in locate_eigenvalues(beta).nonleading:
            assert continuity_residual(beta, e.lam) <= 1e-10


def test_residual_zero_set_p3(p3):
    zs = residual_zero_set(p3)
    assert len(zs) == 2
    assert min(abs(z - 1) for z in zs) < 1e-10
    assert min(abs(z - LAMBDA_P3) for z in zs) < 1e-10


def test_takagi_examples(q4):
    rng = np.random.default_rng(5)
    for x in rng.random(5):
        out = takagi_decomposition(q4, LAMBDA_Q4, float(x))
        assert out["reconstruction_error"] <= out["bound"] + 1e-12
    out = takagi_decomposition(q4, 1.0, Fraction(2, 7))
    assert out["reconstruction_error"] <= 1e-12
    out = takagi_decomposition(q4, LAMBDA_Q4, 0)
    assert out["rho"] == 0 and out["F"] == 0


def test_lipschitz_at_zero(p3):
    for rec in lipschitz_probe(p3, LAMBDA_P3, 0, 20):
        assert rec["quotient"] == pytest.approx(rec["expected"], rel=1e-9)


def test_lipschitz_identity(p3):
    recs = lipschitz_probe(p3, 1.0, Fraction(3, 10), 6)
    assert all(abs(r["quotient"] - 1) < 1e-9 for r in recs)


def test_lipschitz_growth_at_one(p3):
    q = [r["quotient"] for r in lipschitz_probe(p3, LAMBDA_P3, 1, 8)]
    last = q[-5:]
    # ties between consecutive probes are exact at this eigenvalue
    assert all(b >= a * (1 - 1e-12) for a, b in zip(last, last[1:]))
    assert last[-1] > 100 * last[0]


def test_right_continuity(p3):
    # once x + h shares the first m greedy digits of x, the difference is
    # bounded by the tail of the series beyond m
    b = float(p3)
    q = 1 / (b * abs(LAMBDA_P3))
    x = Fraction(41, 100)
    f0 = eval_F(p3, LAMBDA_P3, x).value
    dx = greedy_digits(p3, x, 80).greedy
    for m in (4, 8, 12, 16, 20):
        h = Fraction(37, 100) * Fraction(b ** -(m + 2))
        dh = greedy_digits(p3, x + h, 80).greedy
        shared = next(i for i, (u, v) in enumerate(zip(dx, dh)) if u != v)
        assert shared >= m
        d = abs(eval_F(p3, LAMBDA_P3, x + h).value - f0)
        assert d <= 2 * p3.floor * q ** (shared + 1) / (1 - q) + 1e-12
