"""Weight/phase construction: scales, profiles, certificates, scaling fits."""

import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import quad

import resolventlab as rl
from resolventlab import (
    CarlemanParams,
    ExponentialWarp,
    GridSpec,
    ManifoldProfile,
    PolynomialWarp,
    build_profile,
    check_key_inequality,
    check_ratio_bounds,
    derive_scales,
    find_admissible_tau0,
    phase_max,
    phase_max_scaling,
    phi_eval,
    phi_prime_eval,
    power_decay_potential,
    resolve_r1,
    zero_potential,
)
from resolventlab.geometry import warp_log_f


def make_scene(warp, pot, *, n=3, delta=2.0, t=20.0, tau0=1.0, b=4.0, C=1.0, E=1.0):
    compact = isinstance(pot, rl.CompactSupportPotential)
    r1 = resolve_r1(warp, b, 1.0, pot)
    man = ManifoldProfile(n=n, warp=warp, r0=min(1.0, r1), r1=r1)
    params = CarlemanParams(
        h=0.01,
        E=E,
        epsilon_shift=1e-6,
        delta=delta,
        tau0=tau0,
        t=t,
        b=b,
        ineq_const_C=C,
        compact_support=compact,
    )
    return params, man


def built(params, man, pot, h, grid_spec=None, **overrides):
    p = dataclasses.replace(params, h=h, **overrides)
    sc = derive_scales(p, man.warp, pot)
    return build_profile(p, sc, man, grid_spec), sc


# ---------------------------------------------------------------------------
# derived scales


def test_tau_from_tau0():
    pot = zero_potential()
    params, man = make_scene(PolynomialWarp(1.0), pot, tau0=5.0)
    sc = derive_scales(dataclasses.replace(params, h=1e-3), man.warp, pot)
    assert sc.tau == pytest.approx(50.0, rel=1e-12)


def test_scales_closed_forms():
    pot = zero_potential()
    params, man = make_scene(PolynomialWarp(1.0), pot, t=20.0)
    h = math.exp(-8.0)
    sc = derive_scales(dataclasses.replace(params, h=h), man.warp, pot)
    assert sc.epsilon_log == pytest.approx(1.0 / 8.0)
    assert sc.lambda_loglog == pytest.approx(math.log(8.0))
    assert sc.s == pytest.approx((1.0 + 1.0 / 8.0) / 2.0)
    assert sc.m0 == pytest.approx(2.0 / 3.0)
    assert sc.m == pytest.approx(2.0 / 3.0 + 20.0 / 8.0)
    assert sc.a == pytest.approx(math.exp(8.0 * sc.m), rel=1e-12)


def test_scales_reject_large_h():
    pot = zero_potential()
    params, man = make_scene(PolynomialWarp(1.0), pot)
    with pytest.raises(ValueError, match="1/e"):
        derive_scales(dataclasses.replace(params, h=0.5), man.warp, pot)


def test_scales_reject_mismatched_potential_class():
    pot = power_decay_potential(PolynomialWarp(1.0), delta=2.0, amplitude=1.0)
    params, man = make_scene(PolynomialWarp(1.0), zero_potential())
    with pytest.raises(ValueError, match="compact_support"):
        derive_scales(dataclasses.replace(params, h=0.01), man.warp, pot)
    params2, _ = make_scene(PolynomialWarp(1.0), pot, delta=3.0)
    with pytest.raises(ValueError, match="delta"):
        derive_scales(dataclasses.replace(params2, h=0.01), man.warp, pot)


# ---------------------------------------------------------------------------
# phase primitive


@pytest.mark.parametrize(
    "warp",
    [
        PolynomialWarp(1.0),
        PolynomialWarp(0.6),
        ExponentialWarp(0.5),
        ExponentialWarp(1.0),
    ],
)
def test_phi_matches_quadrature(warp):
    pot = zero_potential()
    params, man = make_scene(warp, pot, t=6.0, tau0=2.0)
    p = dataclasses.replace(params, h=0.05)
    sc = derive_scales(p, warp, pot)
    a, tau, r1 = sc.a, sc.tau, man.r1
    inv_fa = math.exp(-float(warp_log_f(warp, a)))

    def slope(x):
        return tau * (math.exp(-float(warp_log_f(warp, x))) - inv_fa)

    for r in (min(2.5 * r1, a), a, 3.0 * a):
        got = float(phi_eval(warp, r1, a, tau, np.array([r]))[0])
        ref, err = quad(slope, r1, min(r, a), limit=400)
        assert got == pytest.approx(ref, rel=1e-10)


def test_phi_prime_freezes_past_a():
    warp = PolynomialWarp(1.0)
    pot = zero_potential()
    params, man = make_scene(warp, pot, t=6.0)
    p = dataclasses.replace(params, h=0.05)
    sc = derive_scales(p, warp, pot)
    r = np.array([sc.a * 1.0001, 2.0 * sc.a, 10.0 * sc.a])
    assert np.all(phi_prime_eval(warp, man.r1, sc.a, sc.tau, r) == 0.0)
    # and the phase stays at its max
    vals = phi_eval(warp, man.r1, sc.a, sc.tau, r)
    top = phi_eval(warp, man.r1, sc.a, sc.tau, np.array([sc.a]))[0]
    np.testing.assert_allclose(vals, top, rtol=1e-14)


# ---------------------------------------------------------------------------
# profile arrays


@pytest.fixture(scope="module")
def k1_profile():
    pot = power_decay_potential(PolynomialWarp(1.0), delta=2.0, amplitude=1.0)
    params, man = make_scene(PolynomialWarp(1.0), pot, t=20.0, tau0=1.0)
    prof, sc = built(params, man, pot, math.exp(-8.0))
    return prof, sc, man


def test_mu_continuity_at_a(k1_profile):
    prof, sc, _ = k1_profile
    a = sc.a
    i_left = np.searchsorted(prof.grid, a) - 1
    i_right = i_left + 1
    assert prof.grid[i_left] < a < prof.grid[i_right]
    rel = abs(prof.mu[i_right] - prof.mu[i_left]) / prof.mu[i_left]
    assert rel < 1e-10


def test_phi_prime_continuity_at_a(k1_profile):
    prof, sc, _ = k1_profile
    scale = prof.phi_prime.max()
    left_limit = prof.phi_prime[prof.left_mask][-1]
    assert abs(left_limit) < 1e-10 * scale


def test_mu_prime_right_branch_closed_form(k1_profile):
    prof, sc, _ = k1_profile
    rr = prof.grid[~prof.left_mask]
    expected = sc.epsilon_log * rr ** (-2.0 * sc.s)
    np.testing.assert_allclose(prof.mu_prime[~prof.left_mask], expected, rtol=1e-14)


def test_A_and_phi_prime_vanish_past_a(k1_profile):
    prof, _, _ = k1_profile
    right = ~prof.left_mask
    assert np.all(prof.A[right] == 0.0)
    assert np.all(prof.phi_prime[right] == 0.0)


def test_sign_structure(k1_profile):
    prof, _, _ = k1_profile
    left = prof.left_mask
    assert np.all(prof.mu_prime > 0.0)
    assert np.all(prof.phi_prime[left] >= 0.0)
    assert np.all(prof.phi_second[left] <= 0.0)


def test_mu_over_mu_prime_identity_left(k1_profile):
    # polynomial k=1: mu/mu' = (r - b)/2 on [r1, a)
    prof, _, _ = k1_profile
    rl_ = prof.grid[prof.left_mask]
    got = prof.mu[prof.left_mask] / prof.mu_prime[prof.left_mask]
    np.testing.assert_allclose(got, (rl_ - 4.0) / 2.0, rtol=1e-12)


@pytest.mark.parametrize("warp", [PolynomialWarp(1.3), ExponentialWarp(0.5)])
def test_A_matches_finite_differences(warp):
    """A from the product rule agrees with centered differences of mu phi'^2."""
    pot = zero_potential()
    params, man = make_scene(warp, pot, t=4.0, tau0=2.0, n=4)
    prof, sc = built(params, man, pot, 0.05)

    def mu_phip2(x):
        x = np.asarray(x)
        f = np.exp(warp_log_f(warp, x))
        php = phi_prime_eval(warp, man.r1, sc.a, sc.tau, x)
        return (f - 4.0) ** 2 * php * php

    left = prof.left_mask & (prof.grid < 0.9 * sc.a) & (prof.grid > man.r1 * 1.01)
    r = prof.grid[left][:: max(1, left.sum() // 60)]
    step = r * 1e-6
    fd = (mu_phip2(r + step) - mu_phip2(r - step)) / (2.0 * step)
    got = prof.A[np.isin(prof.grid, r)]
    np.testing.assert_allclose(got, fd, rtol=5e-6, atol=1e-7 * np.abs(fd).max())


def test_build_profile_rejects_when_a_below_r1():
    pot = zero_potential()
    params, man = make_scene(PolynomialWarp(1.0), pot, t=0.1)
    with pytest.raises(ValueError, match="turning radius"):
        built(params, man, pot, 0.3)


def test_build_profile_overflow_guard_for_exponential_warp():
    pot = zero_potential()
    params, man = make_scene(ExponentialWarp(1.0), pot, t=20.0)
    with pytest.raises(ValueError, match="overflow"):
        built(params, man, pot, math.exp(-6.0))


# ---------------------------------------------------------------------------
# ratio bounds


def test_ratio_bounds_order_one(k1_profile):
    prof, _, _ = k1_profile
    rb = check_ratio_bounds(prof)
    assert 0.0 < rb.c32 <= 1.05
    assert 0.0 < rb.c33 <= 1.05


def test_ratio_bounds_refinement_stable(k1_profile):
    prof, sc, man = k1_profile
    pot = power_decay_potential(PolynomialWarp(1.0), delta=2.0, amplitude=1.0)
    fine, _ = built(
        prof.params, man, pot, prof.params.h,
        GridSpec(n_points=8192, cluster_points=513),
    )
    rb0, rb1 = check_ratio_bounds(prof), check_ratio_bounds(fine)
    assert abs(rb1.c32 - rb0.c32) <= 0.1 * rb0.c32
    assert abs(rb1.c33 - rb0.c33) <= 0.1 * rb0.c33


def test_ratio_bounds_finite_for_exponential_alpha_1():
    pot = zero_potential()
    params, man = make_scene(ExponentialWarp(1.0), pot, t=1.0)
    prof, _ = built(params, man, pot, 1e-2)
    rb = check_ratio_bounds(prof)
    assert np.isfinite(rb.c32) and np.isfinite(rb.c33)
    assert rb.c32 > 0 and rb.c33 > 0


# ---------------------------------------------------------------------------
# key inequality


def test_key_inequality_holds_small_h(k1_profile):
    prof, _, _ = k1_profile
    rep = check_key_inequality(prof)
    assert rep.holds
    assert rep.worst_margin >= 0.0


def test_key_inequality_fails_below_threshold():
    pot = power_decay_potential(PolynomialWarp(1.0), delta=2.0, amplitude=1.0)
    params, man = make_scene(PolynomialWarp(1.0), pot, t=20.0)
    prof, sc = built(params, man, pot, math.exp(-14.0), tau0=0.01)
    rep = check_key_inequality(prof)
    assert not rep.holds
    assert man.r1 <= rep.worst_r <= sc.a / 2.0


def test_key_inequality_3_10_surrogate():
    # h^2 (mu q0)' <= (E/8) mu' at the smallest sweep h, warp with q0 != 0
    pot = zero_potential()
    params, man = make_scene(PolynomialWarp(1.5), pot, n=4, t=4.0)
    prof, _ = built(params, man, pot, math.exp(-10.0))
    h = prof.params.h
    lhs = h * h * prof.mu_q0_prime
    rhs = (prof.params.E / 8.0) * prof.mu_prime
    assert np.all(lhs <= rhs)


def test_key_inequality_tau0_retarget_consistency(k1_profile):
    prof, _, man = k1_profile
    pot = power_decay_potential(PolynomialWarp(1.0), delta=2.0, amplitude=1.0)
    rebuilt, _ = built(prof.params, man, pot, prof.params.h, tau0=3.0)
    direct = check_key_inequality(rebuilt)
    retargeted = check_key_inequality(prof, tau0=3.0)
    assert retargeted.worst_margin == pytest.approx(direct.worst_margin, rel=1e-9)


# ---------------------------------------------------------------------------
# admissible tau0


@pytest.fixture(scope="module")
def tau0_scene():
    pot = power_decay_potential(PolynomialWarp(1.0), delta=2.0, amplitude=1.0)
    params, man = make_scene(PolynomialWarp(1.0), pot, t=20.0)
    hs = [math.exp(-x) for x in (8.0, 10.0, 12.0)]
    return params, man, pot, hs


def test_find_admissible_tau0_finite(tau0_scene):
    params, man, pot, hs = tau0_scene
    res = find_admissible_tau0(params, man, pot, hs)
    assert np.isfinite(res.tau0_star)
    assert res.tau0_star > 0


def test_tau0_doubling_still_holds(tau0_scene):
    params, man, pot, hs = tau0_scene
    res = find_admissible_tau0(params, man, pot, hs)
    for h in hs:
        prof, _ = built(params, man, pot, h, tau0=2.0 * res.tau0_star)
        assert check_key_inequality(prof).holds


def test_tau0_degenerate_C0_not_larger(tau0_scene):
    params, man, pot, hs = tau0_scene
    res1 = find_admissible_tau0(params, man, pot, hs)
    res0 = find_admissible_tau0(
        dataclasses.replace(params, ineq_const_C=0.0), man, pot, hs
    )
    assert res0.tau0_star <= res1.tau0_star


def test_tau0_monotonicity_random_pairs(tau0_scene):
    params, man, pot, hs = tau0_scene
    res = find_admissible_tau0(params, man, pot, hs)
    prof, _ = built(params, man, pot, hs[0])
    rng = np.random.default_rng(20260814)
    for _ in range(5):
        lo, hi = np.sort(res.tau0_star * rng.uniform(1.0, 100.0, size=2))
        if check_key_inequality(prof, tau0=float(lo)).holds:
            assert check_key_inequality(prof, tau0=float(hi)).holds


def test_tau0_search_raises_when_range_exhausted():
    # at h = e^-6 with t = 20 the right branch fails for every tau0
    pot = power_decay_potential(PolynomialWarp(1.0), delta=2.0, amplitude=1.0)
    params, man = make_scene(PolynomialWarp(1.0), pot, t=20.0)
    with pytest.raises(ValueError, match="worst margins"):
        find_admissible_tau0(params, man, pot, [math.exp(-6.0)])


# ---------------------------------------------------------------------------
# phase max scaling (the case table)


H_SWEEP = [math.exp(-x) for x in np.linspace(6.0, 14.0, 9)]
H_WIDE = [math.exp(-x) for x in np.linspace(6.0, 18.0, 13)]


def test_phase_max_equals_phi_at_a(k1_profile):
    prof, sc, man = k1_profile
    top = phi_eval(man.warp, man.r1, sc.a, sc.tau, np.array([sc.a]))[0]
    assert phase_max(prof) == pytest.approx(float(top), rel=1e-12)
    assert phase_max(prof) == pytest.approx(prof.phi.max(), rel=1e-10)


@pytest.mark.parametrize(
    "warp, pot_kind, delta, pinned_q, expected_p",
    [
        (PolynomialWarp(1.0), "compact", 2.0, 1.0, 4.0 / 3.0),
        (PolynomialWarp(1.0), "decaying", 2.0, 1.0, 4.0 / 3.0),
        (PolynomialWarp(0.5), "compact", 2.0, 0.0, 2.0),
        (PolynomialWarp(0.5), "decaying", 3.0, 0.25, 2.0),
        (PolynomialWarp(2.0), "compact", 2.0, 0.0, 4.0 / 3.0),
        (ExponentialWarp(1.0), "compact", 2.0, 0.0, 4.0 / 3.0),
        (ExponentialWarp(0.5), "decaying", 2.0, 0.0, 4.0 / 3.0),
    ],
)
def test_phase_scaling_case_table(warp, pot_kind, delta, pinned_q, expected_p):
    if pot_kind == "compact":
        pot = zero_potential()
    else:
        pot = power_decay_potential(warp, delta=delta, amplitude=1.0)
    params, man = make_scene(warp, pot, delta=delta, t=3.0)
    fit = phase_max_scaling(params, man, pot, H_SWEEP, log_power=pinned_q)
    assert fit.exponent == pytest.approx(expected_p, abs=0.05)


def test_phase_scaling_free_log_power_k1():
    pot = zero_potential()
    params, man = make_scene(PolynomialWarp(1.0), pot, t=3.0)
    fit = phase_max_scaling(params, man, pot, H_WIDE)
    assert fit.exponent == pytest.approx(4.0 / 3.0, abs=0.05)
    assert fit.log_power == pytest.approx(1.0, abs=0.2)


def test_phase_scaling_rejects_short_sweep():
    pot = zero_potential()
    params, man = make_scene(PolynomialWarp(1.0), pot, t=3.0)
    with pytest.raises(ValueError):
        phase_max_scaling(params, man, pot, H_SWEEP[:2], log_power=1.0)
