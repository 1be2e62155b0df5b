"""Particle system: neighborhood averaging, the stochastic update rule,
deterministic seeding, and initial-condition builders."""

import math

import numpy as np
import pytest
import scipy.stats

import oracles
from vksim import microsim
from vksim.microsim import (
    InitSpec,
    KernelSpec,
    MicroParams,
    ParticleEnsemble,
    build_ensemble,
    em_step,
    init_rng,
    local_means,
    run_micro,
    step_noise,
    table_regime_params,
)
from vksim.snapshots import MemorySink


def _params(**kw):
    base = dict(k_theta=1.0, k_omega=1.0, alpha2=0.1, beta2=0.1,
                R=1.2, L=10.0, dt=0.01, t_end=1.0)
    base.update(kw)
    return MicroParams(**base)


def _random_ensemble(n, L, seed=0):
    rng = np.random.Generator(np.random.Philox(seed))
    return ParticleEnsemble(
        x=rng.uniform(0.0, L, size=(n, 2)),
        theta=rng.uniform(-np.pi, np.pi, size=n) * 0.999999,
        omega=rng.normal(0.0, 2.0, size=n),
    )


# ---------------------------------------------------------------------------
# neighborhood averaging
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n,L,R", [(300, 10.0, 1.2), (120, 5.0, 0.7)])
def test_local_means_match_all_pairs_oracle(n, L, R):
    p = _params(L=L, R=R)
    ens = _random_ensemble(n, L)
    got = local_means(ens, p)
    jx, jy, om, cnt = oracles.brute_local_means(
        ens.x[:, 0], ens.x[:, 1], ens.theta, ens.omega, R, L)
    np.testing.assert_allclose(got.J[:, 0], jx, atol=1e-13)
    np.testing.assert_allclose(got.J[:, 1], jy, atol=1e-13)
    np.testing.assert_allclose(got.omega_bar, om, atol=1e-13)


def test_local_means_small_box_brute_path():
    # L/R < 3 rules out a cell decomposition; the dispatcher's fallback
    # must agree with the oracle too
    p = _params(L=4.0, R=1.5)
    ens = _random_ensemble(80, 4.0)
    got = local_means(ens, p)
    jx, jy, om, _ = oracles.brute_local_means(
        ens.x[:, 0], ens.x[:, 1], ens.theta, ens.omega, 1.5, 4.0)
    np.testing.assert_allclose(got.J[:, 0], jx, atol=1e-13)
    np.testing.assert_allclose(got.J[:, 1], jy, atol=1e-13)
    np.testing.assert_allclose(got.omega_bar, om, atol=1e-13)


def test_neighbors_found_across_periodic_boundary():
    p = _params(L=10.0, R=0.5)
    ens = ParticleEnsemble(
        x=np.array([[0.05, 5.0], [9.95, 5.0], [5.0, 0.1], [5.0, 9.9]]),
        theta=np.array([0.0, 0.0, 1.0, 1.0]),
        omega=np.array([1.0, 3.0, -1.0, -5.0]),
    )
    got = local_means(ens, p)
    # each pair straddles the boundary: both members see each other
    np.testing.assert_allclose(got.omega_bar, [2.0, 2.0, -3.0, -3.0])


def test_isolated_particle_sees_itself():
    p = _params(L=10.0, R=0.5)
    ens = ParticleEnsemble(x=np.array([[2.0, 2.0], [8.0, 8.0]]),
                           theta=np.array([0.3, -1.2]),
                           omega=np.array([4.0, -4.0]))
    got = local_means(ens, p)
    np.testing.assert_allclose(got.omega_bar, ens.omega)
    w = 1.0 / (np.pi * 0.25) / 2
    np.testing.assert_allclose(got.J[0], w * np.array([np.cos(0.3),
                                                       np.sin(0.3)]))
    assert np.all(got.weight > 0.0)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(radius=0.0)
    with pytest.raises(ValueError):
        _params(kernel=KernelSpec(radius=0.3))  # mismatched with R=1.2


# ---------------------------------------------------------------------------
# the update rule
# ---------------------------------------------------------------------------

def test_em_step_matches_reference_update():
    """Full one-step reference: oracle means, atan2-based torque, explicit
    Euler-Maruyama arithmetic."""
    p = _params(k_theta=0.8, k_omega=1.7, alpha2=0.3, beta2=0.05)
    ens = _random_ensemble(250, p.L, seed=5)
    got = em_step(ens, p, step=12)

    jx, jy, om, _ = oracles.brute_local_means(
        ens.x[:, 0], ens.x[:, 1], ens.theta, ens.omega, p.R, p.L)
    theta_bar = np.arctan2(jy, jx)
    torque = np.sin(theta_bar - ens.theta)
    xi_t, xi_w = step_noise(p.seed, 12, ens.n)
    theta_ref = ens.theta + (ens.omega + p.k_theta * torque) * p.dt \
        + math.sqrt(2 * p.alpha2 * p.dt) * xi_t
    theta_ref = np.angle(np.exp(1j * theta_ref))
    omega_ref = ens.omega + p.k_omega * (om - ens.omega) * p.dt \
        + math.sqrt(2 * p.beta2 * p.dt) * xi_w
    x_ref = np.mod(ens.x + p.c * p.dt
                   * np.stack([np.cos(ens.theta), np.sin(ens.theta)], -1),
                   p.L)

    np.testing.assert_allclose(np.exp(1j * got.theta), np.exp(1j * theta_ref),
                               atol=1e-12)
    np.testing.assert_allclose(got.omega, omega_ref, atol=1e-12)
    np.testing.assert_allclose(got.x, x_ref, atol=1e-13)


def test_em_step_is_pure():
    p = _params()
    ens = _random_ensemble(60, p.L)
    before = ens.copy()
    a = em_step(ens, p, step=3)
    b = em_step(ens, p, step=3)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(ens.x, before.x)
    np.testing.assert_array_equal(ens.theta, before.theta)


def test_zero_noise_aligned_group_rotates_rigidly():
    p = _params(alpha2=0.0, beta2=0.0, k_theta=3.0, k_omega=3.0,
                dt=1e-3, t_end=2.0)
    init = InitSpec(n=32, kind="aligned", theta0=0.4, omega0=5.0)
    res = run_micro(p, init)
    expected = np.angle(np.exp(1j * (0.4 + 5.0 * 2.0)))
    assert np.max(np.abs(np.exp(1j * res.final.theta)
                         - np.exp(1j * expected))) < 1e-10
    np.testing.assert_allclose(res.final.omega, 5.0, atol=1e-12)


def test_noise_scaling_matches_diffusion_coefficients():
    # isolated-update limit: no coupling, the one-step increments must be
    # N(omega*dt, 2*alpha2*dt) and N(0, 2*beta2*dt)
    p = _params(k_theta=0.0, k_omega=0.0, alpha2=0.3, beta2=0.07, dt=0.01)
    n = 200_000
    ens = ParticleEnsemble(x=np.full((n, 2), 5.0), theta=np.zeros(n),
                           omega=np.zeros(n))
    out = em_step(ens, p, step=0)
    dtheta = out.theta
    assert np.var(dtheta) == pytest.approx(2 * 0.3 * 0.01, rel=0.02)
    assert abs(np.mean(dtheta)) < 4 * math.sqrt(2 * 0.3 * 0.01 / n)
    assert np.var(out.omega) == pytest.approx(2 * 0.07 * 0.01, rel=0.02)


def test_wrapped_headings_stay_in_range():
    p = _params(alpha2=2.0)
    ens = _random_ensemble(500, p.L)
    for step in range(5):
        ens = em_step(ens, p, step)
    assert np.all(ens.theta > -np.pi) and np.all(ens.theta <= np.pi)


# ---------------------------------------------------------------------------
# seeding and determinism
# ---------------------------------------------------------------------------

def test_step_noise_keyed_by_seed_and_step():
    a1, b1 = step_noise(7, 5, 100)
    a2, b2 = step_noise(7, 5, 100)
    np.testing.assert_array_equal(a1, a2)
    np.testing.assert_array_equal(b1, b2)
    a3, _ = step_noise(7, 6, 100)
    a4, _ = step_noise(8, 5, 100)
    assert not np.array_equal(a1, a3)
    assert not np.array_equal(a1, a4)


def test_step_noise_prefix_stable_in_n():
    # lane layout: particle i reads positions i and n+i of one block, so
    # the theta draws for the first particles do not depend on n
    small_t, _ = step_noise(3, 2, 50)
    big_t, _ = step_noise(3, 2, 80)
    np.testing.assert_array_equal(small_t, big_t[:50])


def test_runs_reproducible_and_seed_sensitive():
    p = _params(t_end=0.2)
    init = InitSpec(n=120)
    r1 = run_micro(p, init)
    r2 = run_micro(p, init)
    np.testing.assert_array_equal(r1.final.x, r2.final.x)
    np.testing.assert_array_equal(r1.final.theta, r2.final.theta)
    p2 = _params(t_end=0.2, seed=1)
    r3 = run_micro(p2, init)
    assert not np.array_equal(r1.final.theta, r3.final.theta)


def test_init_rng_distinct_from_step_streams():
    a = init_rng(0).standard_normal(8)
    b, _ = step_noise(0, 0, 8)
    assert not np.array_equal(a, b)


# ---------------------------------------------------------------------------
# parameter validation
# ---------------------------------------------------------------------------

def test_stiffness_guard_names_the_override():
    with pytest.raises(ValueError, match="allow_stiff"):
        _params(k_theta=71.0, dt=0.01)
    p = _params(k_theta=71.0, dt=0.01, allow_stiff=True)
    assert p.allow_stiff


def test_radius_must_fit_minimum_image():
    with pytest.raises(ValueError, match="minimum-image"):
        _params(R=5.0, L=10.0)


@pytest.mark.parametrize("field,value", [
    ("dt", 0.0), ("L", -1.0), ("t_end", 0.0), ("alpha2", -0.1),
    ("k_theta", math.nan),
])
def test_parameter_domain_errors(field, value):
    with pytest.raises(ValueError):
        _params(**{field: value})


# ---------------------------------------------------------------------------
# initial conditions
# ---------------------------------------------------------------------------

def test_disordered_init_mixed_frequency_draw():
    p = _params()
    ens = build_ensemble(InitSpec(n=100_000), p)
    assert np.all(ens.x >= 0.0) and np.all(ens.x < p.L)
    # +5*U for a quarter, -5*U for the rest: mean 0.25*2.5 - 0.75*2.5
    assert np.mean(ens.omega) == pytest.approx(-1.25, abs=0.05)
    frac_pos = np.mean(ens.omega > 0.0)
    assert frac_pos == pytest.approx(0.25, abs=0.01)


def test_aligned_init():
    p = _params()
    ens = build_ensemble(InitSpec(n=512, kind="aligned", theta0=1.1,
                                  omega0=-2.0), p)
    np.testing.assert_array_equal(ens.theta, np.full(512, 1.1))
    np.testing.assert_array_equal(ens.omega, np.full(512, -2.0))


def test_equilibrium_init_sampling():
    p = _params()
    spec = InitSpec(n=50_000, kind="equilibrium", theta0=0.5, omega0=-1.0,
                    kappa=6.0, omega_variance=0.125)
    ens = build_ensemble(spec, p)
    centered = np.angle(np.exp(1j * (ens.theta - 0.5)))
    ks = scipy.stats.kstest(centered, scipy.stats.vonmises(6.0).cdf)
    assert ks.pvalue > 1e-3
    assert np.mean(ens.omega) == pytest.approx(-1.0, abs=0.02)
    assert np.var(ens.omega) == pytest.approx(0.125, rel=0.05)


def test_equilibrium_init_requires_distribution_parameters():
    with pytest.raises(ValueError):
        InitSpec(n=10, kind="equilibrium")


# ---------------------------------------------------------------------------
# run loop plumbing
# ---------------------------------------------------------------------------

def test_run_micro_snapshot_and_series_cadence():
    p = _params(t_end=0.5)
    sink = MemorySink()
    res = run_micro(p, InitSpec(n=50), sink, snapshot_every=0.1,
                    diag_every=0.05)
    assert res.n_steps == 50
    times = [t for (t, _) in sink.records]
    np.testing.assert_allclose(times, [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
                               atol=1e-12)
    assert res.series.t[0] == 0.0
    assert res.series.t[-1] == pytest.approx(0.5)
    assert np.all(np.isfinite(res.series.polar_order))


def test_table_regime_params_stiffness_flag():
    p71, init = table_regime_params(71.0, 71.0, n=100)
    assert p71.allow_stiff and init.n == 100
    p1, _ = table_regime_params(1.0, 1.0)
    assert not p1.allow_stiff
