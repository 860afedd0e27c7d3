"""Randomized invariants."""
from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from betaspectra.betaspec import BetaSpec
from betaspectra.expansion import greedy_digits, is_admissible, quasi_greedy_digits
from betaspectra.functional import eval_F, lipschitz_probe
from betaspectra.series import phi, psi
from betaspectra.spectra import locate_eigenvalues
from betaspectra.transfer import apply_L, duality_check, indicator, integral_lebesgue

betas = st.decimals(min_value="1.05", max_value="5.95", places=3).filter(
    lambda d: d != d.to_integral_value()).map(lambda d: BetaSpec.numeric(str(d)))
points = st.fractions(min_value=0, max_value=1, max_denominator=10**6)
unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@given(betas, points)
def test_greedy_digits_reconstruct(beta, x):
    ds = greedy_digits(beta, x, 30)
    n = min(30, ds.trust_horizon)
    with mpmath.workprec(200):
        b = beta.value_at(200)
        s = mpmath.fsum(d * b ** -(k + 1) for k, d in enumerate(ds.greedy[:n]))
        xv = mpmath.mpf(x.numerator) / x.denominator
        assert 0 <= xv - s <= b ** -n * (1 + mpmath.mpf(2) ** -100)


@given(betas.filter(lambda b: float(b) > 1.2), points.filter(lambda x: x < 1))
def test_greedy_digits_admissible(beta, x):
    ref = quasi_greedy_digits(beta, 1, 200)
    ds = greedy_digits(beta, x, 20)
    n = min(20, ds.trust_horizon)
    assert is_admissible(ds.greedy[:n], ref)


@given(betas, unit, unit)
def test_factorization(beta, r, t):
    z = 0.9 * float(beta) * r * np.exp(2j * np.pi * t)
    a, b = phi(beta, z), psi(beta, z)
    assert abs((1 - a.value) - (1 - z) * b.value) <= a.tail_bound + abs(1 - z) * b.tail_bound + 1e-12


@given(betas)
def test_phi_one(beta):
    ev = phi(beta, 1.0)
    assert abs(ev.value - 1) <= ev.tail_bound + 1e-13


@given(betas, points)
def test_identity_functional(beta, x):
    ev = eval_F(beta, 1.0, x, 1e-10)
    assert abs(ev.value - float(x)) <= 1e-10 + 1e-15


@settings(max_examples=15)
@given(betas.filter(lambda b: float(b) > 1.1))
def test_spectrum_symmetric_and_consistent(beta):
    rep = locate_eigenvalues(beta)
    b = float(beta)
    lams = [e.lam for e in rep.nonleading]
    assert sum(e.multiplicity for e in rep.nonleading) == rep.contour_winding_total
    for lam in lams:
        assert 1 / b < abs(lam) < 1
        assert any(abs(lam.conjugate() - o) <= 1e-12 for o in lams)
    assert rep.eigenvalues[0].lam == 1


@settings(max_examples=20)
@given(st.sampled_from(["poly:1,-3,-2,0,-3@(3,4)", "poly:1,-4,0,-3,-4@(4,5)",
                        "poly:1,-5,0,4,-3@(4,5)", "poly:1,-1,-1@(1,2)"]),
       st.lists(st.tuples(points, st.integers(-3, 3)), min_size=1, max_size=4), points)
def test_transfer_integral_and_duality(spec, terms, y):
    beta = BetaSpec.parse(spec)
    f = indicator(0)
    for x, c in terms:
        f = f + indicator(x, c)
    assert abs(integral_lebesgue(apply_L(beta, f)) - integral_lebesgue(f)) <= 1e-12
    assert duality_check(beta, f, indicator(y)) <= 1e-12


@given(betas, st.floats(min_value=0.3, max_value=0.99), st.integers(1, 20))
def test_lipschitz_at_zero(beta, m, depth):
    lam = -max(m, 1.05 / float(beta))
    for rec in lipschitz_probe(beta, lam, 0, depth):
        assert abs(rec["quotient"] - rec["expected"]) <= 1e-9 * rec["expected"]
