"""Closure coefficients: Bessel ratios, the g function, moment integrals,
and equilibrium sampling, checked against the independent oracles."""

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

import oracles
from vksim.coefficients import (
    ClosureCoefficients,
    CoefficientError,
    EquilibriumPair,
    bessel_i,
    compute_c1,
    compute_K1_K2,
    gci_g,
    sample_equilibrium,
)


# ---------------------------------------------------------------------------
# Bessel evaluation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("order", [0, 1])
@pytest.mark.parametrize("x", [0.0, 0.1, 1.0, 7.0, 14.9, 15.1, 30.0, 80.0])
def test_bessel_matches_integral_representation(order, x):
    ref = oracles.bessel_trapezoid(order, x, panels=200_000)
    assert bessel_i(order, x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("order", [0, 1])
@pytest.mark.parametrize("x", [0.5, 14.0, 16.0, 120.0, 700.0])
def test_bessel_scaled_matches_scipy(order, x):
    # exp(-x) I_order(x): safe at large x where the plain value overflows
    ref = scipy.special.ive(order, x)
    assert bessel_i(order, x, scaled=True) == pytest.approx(ref, rel=1e-12)


def test_bessel_large_argument_scaled_finite():
    val = bessel_i(0, 50_000.0, scaled=True)
    assert 0.0 < val < 1.0


def test_bessel_domain_errors():
    with pytest.raises(ValueError):
        bessel_i(0, -1.0)
    with pytest.raises(ValueError):
        bessel_i(2, 1.0)


# ---------------------------------------------------------------------------
# c1
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kappa", [0.5, 1.0, 4.0, 8.0, 16.0])
def test_c1_matches_frozen_reference(kappa):
    assert compute_c1(kappa) == pytest.approx(oracles.C1_REF[kappa],
                                              abs=1e-13)


def test_c1_monotone_and_bounded():
    grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 32.0, 150.0]
    vals = [compute_c1(k) for k in grid]
    assert all(0.0 < v < 1.0 for v in vals)
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_c1_rejects_bad_kappa():
    for bad in (0.0, -2.0, math.nan):
        with pytest.raises(ValueError):
            compute_c1(bad)


# ---------------------------------------------------------------------------
# g and the moment integrals
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kappa", [0.5, 2.5, 8.0])
def test_g_vanishes_at_zero_and_pi(kappa):
    assert abs(gci_g(0.0, kappa)) <= 1e-10
    assert abs(gci_g(math.pi, kappa)) <= 1e-10


def test_g_is_odd():
    for gamma in (0.3, 1.1, 2.9):
        assert gci_g(-gamma, 2.0) == pytest.approx(-gci_g(gamma, 2.0),
                                                   abs=1e-12)


def test_g_matches_fixed_grid_oracle():
    kappa = 2.5
    theta = np.linspace(0.0, np.pi, 4097)
    ref = oracles._g_on_grid(kappa, theta)
    for idx in (100, 1000, 2500, 4000):
        assert gci_g(float(theta[idx]), kappa) == pytest.approx(
            ref[idx], abs=1e-9)


def test_g_rejects_out_of_range_gamma():
    with pytest.raises(ValueError):
        gci_g(3.5, 1.0)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 4.0, 8.0])
def test_K1_K2_match_simpson_oracle(kappa):
    K1, K2, err = compute_K1_K2(kappa)
    ref1, ref2 = oracles.simpson_K1_K2(kappa)
    assert K1 == pytest.approx(ref1, abs=1e-8)
    assert K2 == pytest.approx(ref2, abs=1e-8)
    assert 0.0 <= err <= 1e-8


@pytest.mark.parametrize("kappa", [0.5, 1.0, 4.0, 8.0])
def test_K1_K2_match_frozen_reference(kappa):
    K1, K2, _ = compute_K1_K2(kappa)
    assert K1 == pytest.approx(oracles.K1_REF[kappa], abs=1e-10)
    assert K2 == pytest.approx(oracles.K2_REF[kappa], abs=1e-10)


# ---------------------------------------------------------------------------
# the bundled coefficient record
# ---------------------------------------------------------------------------

def test_from_kappa_bundles_consistent_values():
    cc = ClosureCoefficients.from_kappa(8.0)
    assert cc.kappa == 8.0
    assert cc.c1 == pytest.approx(compute_c1(8.0))
    assert cc.c2 == pytest.approx(cc.K2 / cc.K1, rel=1e-14)
    assert cc.c2 == pytest.approx(oracles.C2_REF[8.0], abs=1e-9)
    assert cc.quad_error >= 0.0


def test_from_kappa_rejects_nonpositive():
    with pytest.raises(ValueError):
        ClosureCoefficients.from_kappa(-1.0)


# ---------------------------------------------------------------------------
# equilibrium pair and its sampler
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kappa", [0.5, 60.0])
def test_heading_pdf_normalized(kappa):
    eq = EquilibriumPair(theta_bar=0.7, omega_bar=-1.0, kappa=kappa,
                         omega_variance=0.2)
    theta = np.linspace(-np.pi, np.pi, 200_001)
    total = np.trapezoid([eq.heading_pdf(t) for t in theta], theta)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_omega_pdf_is_the_stationary_gaussian():
    eq = EquilibriumPair(theta_bar=0.0, omega_bar=2.0, kappa=1.0,
                         omega_variance=0.5)
    ref = scipy.stats.norm(loc=2.0, scale=math.sqrt(0.5))
    for w in (-1.0, 1.5, 2.0, 4.0):
        assert eq.omega_pdf(w) == pytest.approx(ref.pdf(w), rel=1e-12)


def test_equilibrium_pair_validation():
    with pytest.raises(ValueError):
        EquilibriumPair(theta_bar=4.0, omega_bar=0.0, kappa=1.0,
                        omega_variance=1.0)
    with pytest.raises(ValueError):
        EquilibriumPair(theta_bar=0.0, omega_bar=0.0, kappa=1.0,
                        omega_variance=0.0)
    with pytest.raises(ValueError):
        EquilibriumPair(theta_bar=0.0, omega_bar=0.0, kappa=-1.0,
                        omega_variance=1.0)


def test_sampler_matches_target_distributions():
    eq = EquilibriumPair(theta_bar=0.9, omega_bar=-1.25, kappa=4.0,
                         omega_variance=0.3)
    rng = np.random.Generator(np.random.Philox(1234))
    theta, omega = sample_equilibrium(eq, 200_000, rng)
    assert theta.shape == omega.shape == (200_000,)
    assert np.all(theta > -np.pi) and np.all(theta <= np.pi)
    # recenter so every sample falls in scipy's canonical support
    centered = np.angle(np.exp(1j * (theta - 0.9)))
    ks_t = scipy.stats.kstest(centered, scipy.stats.vonmises(4.0).cdf)
    ks_w = scipy.stats.kstest(
        omega, scipy.stats.norm(loc=-1.25, scale=math.sqrt(0.3)).cdf)
    assert ks_t.pvalue > 1e-3
    assert ks_w.pvalue > 1e-3


def test_sampler_near_zero_concentration_is_uniform():
    eq = EquilibriumPair(theta_bar=0.0, omega_bar=0.0, kappa=1e-8,
                         omega_variance=1.0)
    rng = np.random.Generator(np.random.Philox(99))
    theta, _ = sample_equilibrium(eq, 100_000, rng)
    ks = scipy.stats.kstest(theta, scipy.stats.uniform(-np.pi, 2 * np.pi).cdf)
    assert ks.pvalue > 1e-3


def test_sampler_mean_direction_concentrates():
    eq = EquilibriumPair(theta_bar=-2.0, omega_bar=0.0, kappa=50.0,
                         omega_variance=1.0)
    rng = np.random.Generator(np.random.Philox(7))
    theta, _ = sample_equilibrium(eq, 50_000, rng)
    mean_dir = math.atan2(np.sin(theta).sum(), np.cos(theta).sum())
    assert mean_dir == pytest.approx(-2.0, abs=0.01)
