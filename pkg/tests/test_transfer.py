from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np
import pytest

from betaspectra.betaspec import BetaSpec
from betaspectra.errors import DegenerateBreakpoints, DomainError
from betaspectra.expansion import greedy_digits
from betaspectra.transfer import (
    StepFunction,
    apply_L,
    bv_norm,
    constraint_residuals,
    correlation,
    decay_fit,
    duality_check,
    good_decay_construct,
    indicator,
    integral_lebesgue,
    iterate_L,
    parry_density,
    sup_norm,
)

from conftest import LAMBDA_P3, LAMBDA_Q4


def _close(f: StepFunction, g: StepFunction, tol=1e-40) -> bool:
    return sup_norm(f - g) <= tol


def test_norm_examples():
    one = indicator(1)
    assert bv_norm(one) == 1 and sup_norm(one) == 1 and integral_lebesgue(one) == 1
    f = indicator(Fraction(1, 2)) - indicator(Fraction(1, 4))
    assert sup_norm(f) == 1
    assert bv_norm(f) == 3  # variation 2 plus sup 1
    assert abs(integral_lebesgue(f) - 0.25) < 1e-60


def test_point_indicator_is_null(p3):
    assert indicator(0).terms == ()
    assert apply_L(p3, indicator(0)).terms == ()
    f = indicator(Fraction(1, 3)) + indicator(Fraction(1, 3), -1)
    assert f.terms == ()


def test_apply_L_on_one(p3):
    b = p3.value_at(256)
    with mpmath.workprec(256):
        want = indicator(1, 3 / b) + indicator(b - 3, 1 / b)
    assert _close(apply_L(p3, indicator(1)), want)


def test_iteration_matches_telescoping(p3):
    # L^n 1_[0,x] = sum_k a_k(x) beta^-k L^{n-k} 1_[0,1] + beta^-n 1_[0, tau^n x]
    x = Fraction(2, 7)
    n = 6
    ds = greedy_digits(p3, x, n)
    lhs = iterate_L(p3, indicator(x), n)
    with mpmath.workprec(256):
        b = p3.value_at(256)
        y = mpmath.mpf(2) / 7
        for _ in range(n):
            y = b * y - mpmath.floor(b * y)
        rhs = indicator(y, b ** -n)
        for k, a in enumerate(ds.greedy, 1):
            if a:
                rhs = rhs + iterate_L(p3, indicator(1), n - k).scale(a * b ** -k)
    assert _close(lhs, rhs, 1e-60)


def test_breakpoint_growth(p3):
    f = indicator(Fraction(1, 3)) - indicator(Fraction(5, 7), 2)
    g = f
    for n in range(1, 8):
        g = apply_L(p3, g)
        assert len(g.terms) <= len(f.terms) + n + 1


def test_parry_density_golden(golden):
    h = parry_density(golden)
    phi = (1 + 5**0.5) / 2
    assert [float(x) for x in h.breakpoints] == pytest.approx([1 / phi, 1.0], abs=1e-15)
    assert abs(integral_lebesgue(h) - 1) < 1e-60
    assert sup_norm(apply_L(golden, h) - h) <= 2e-14


def test_parry_density_p3(p3):
    h = parry_density(p3)
    assert len(h.breakpoints) == 4
    assert abs(integral_lebesgue(h) - 1) < 1e-60
    assert sup_norm(apply_L(p3, h) - h) <= 2e-14


def test_parry_density_invariance(p3):
    h = parry_density(p3)
    for y in (Fraction(1, 5), Fraction(2, 3)):
        assert duality_check(p3, h, indicator(y)) <= 1e-60
        # int h g = int h (g o tau) because L h = h
        from betaspectra.transfer import integral_product
        lhs = integral_product(h, indicator(y))
        rhs = integral_product(apply_L(p3, h), indicator(y))
        assert abs(lhs - rhs) <= 2e-14


def test_duality_random(p3):
    rng = np.random.default_rng(11)
    for _ in range(10):
        x, y = rng.random(2)
        f = indicator(float(x))
        g = indicator(float(y), 2.5) - indicator(float(rng.random()))
        assert duality_check(p3, f, g) <= 1e-12
        assert duality_check(p3, f, indicator(1)) <= 1e-12


def test_good_decay_p3_explicit_points(p3):
    pts = [1, Fraction(3, 10), Fraction(7, 10)]
    f = good_decay_construct(p3, [LAMBDA_P3], breakpoints=pts)
    assert len(f.terms) == 3
    res = constraint_residuals(p3, f, [LAMBDA_P3])
    assert max(res.values()) <= 1e-12
    assert max(abs(c) for c in f.coefficients) == pytest.approx(1)


def test_good_decay_q4_real(q4):
    lams = [LAMBDA_Q4, LAMBDA_Q4.conjugate()]
    f = good_decay_construct(q4, lams)
    assert f.is_real()
    res = constraint_residuals(q4, f, lams)
    assert max(res.values()) <= 1e-12


def test_good_decay_golden_only_mean(golden):
    f = good_decay_construct(golden, [])
    assert abs(integral_lebesgue(f)) <= 1e-12
    assert f.terms


def test_good_decay_rejects_repeated_points(p3):
    with pytest.raises(DegenerateBreakpoints):
        good_decay_construct(p3, [LAMBDA_P3], breakpoints=[1, 0.5, 0.5])


def test_decay_fit_zero(p3):
    h = parry_density(p3)
    fit = decay_fit(p3, h - h, 12)
    assert all(v == 0 for _, v in fit.rates)
    with pytest.raises(DomainError):
        decay_fit(p3, h, 5)


def test_correlation_constant(p3):
    one = indicator(1)
    assert abs(correlation(p3, one, one, 0)) < 1e-12
    assert abs(correlation(p3, one, indicator(Fraction(1, 2)), 3)) < 1e-12


def test_correlation_bounded_by_decay(p3):
    f = good_decay_construct(p3, [LAMBDA_P3])
    g = indicator(Fraction(1, 2))
    fit = decay_fit(p3, f, 20, (5, 20))
    norms = dict(fit.rates)
    for n in (5, 10, 15):
        # f has zero Lebesgue mean; correlations against h-weighted g are
        # controlled by ||L^n (f h)||, which decays at least as fast as f's rate
        c = correlation(p3, f, g, n)
        assert abs(c) <= 50 * norms[n]
