"""Norm measurements: sigma_min oracles, cutoff norms, sweeps, fits."""

import math
from dataclasses import replace

import numpy as np
import pytest

from resolventlab.geometry import (
    ManifoldProfile,
    PolynomialWarp,
    square_well_potential,
    zero_potential,
)
from resolventlab.operators import build_mode_operator, make_radial_grid
from resolventlab.phaseweight import CarlemanParams
from resolventlab.resolvent import (
    RadialGridSpec,
    bound_check,
    cutoff_resolvent_norm,
    fit_exponent,
    h_sweep,
    mode_monotonicity_check,
    sigma_min,
    trapped_level_energy,
    tunneling_action,
)
from resolventlab.resolvent import HSweepEntry, SweepResult
from resolventlab.tridiag import (
    backward_error,
    dense_sigma_min,
    factor_tridiagonal,
    sigma_lower_bound,
    sigma_min_tridiagonal,
    solve_factored,
    to_dense,
    tridiagonal_matvec,
)


def _random_tridiagonal(rng, n, scale=1.0):
    def cx(size):
        return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))

    return cx(n - 1), cx(n), cx(n - 1)


# ---------------------------------------------------------------------------
# banded sigma_min against oracles


def test_sigma_min_identity():
    n = 64
    res = sigma_min_tridiagonal(np.zeros(n - 1), np.ones(n), np.zeros(n - 1))
    assert res.value == pytest.approx(1.0, rel=1e-8)


def test_sigma_min_diagonal_example():
    res = sigma_min_tridiagonal([0.0, 0.0], [2.0, 3.0j, -5.0], [0.0, 0.0])
    assert res.value == pytest.approx(2.0, rel=1e-6)


def test_sigma_min_free_dirichlet_matches_dense():
    # free operator -h^2 D^2 - E + i eps on a uniform grid, N = 500
    n, h, dr = 500, 0.05, 0.01
    main = (2.0 * h * h / dr**2 - 1.0 + 1e-3j) * np.ones(n)
    off = (-h * h / dr**2) * np.ones(n - 1)
    res = sigma_min_tridiagonal(off, main, off)
    oracle = dense_sigma_min(off, main, off)
    assert res.value == pytest.approx(oracle, rel=1e-8)


def test_sigma_min_random_operators_match_dense():
    rng = np.random.default_rng(20260814)
    for _ in range(8):
        n = int(rng.integers(32, 400))
        dl, d, du = _random_tridiagonal(rng, n)
        res = sigma_min_tridiagonal(dl, d, du, seed=int(rng.integers(1, 2**31)))
        oracle = dense_sigma_min(dl, d, du)
        assert res.value == pytest.approx(oracle, rel=1e-8)


def test_sigma_min_nearly_singular_operator():
    # plant an almost-null vector: A = T - lambda_min(T) + tiny
    rng = np.random.default_rng(3)
    n = 200
    off = rng.standard_normal(n - 1)
    mid = rng.standard_normal(n)
    from scipy.linalg import eigh_tridiagonal

    lam = eigh_tridiagonal(mid, off, eigvals_only=True)[0]
    d = mid - lam + 1e-10
    res = sigma_min_tridiagonal(off, d, off)
    oracle = dense_sigma_min(off, d, off)
    assert res.value == pytest.approx(oracle, rel=1e-6, abs=1e-14)


def test_banded_solve_backward_error():
    rng = np.random.default_rng(11)
    for n in (50, 311, 1024):
        dl, d, du = _random_tridiagonal(rng, n)
        d = d + 4.0  # keep comfortably nonsingular
        g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        fac = factor_tridiagonal(dl, d, du)
        u = solve_factored(fac, g)
        assert backward_error(dl, d, du, u, g) <= 1e-10
        # adjoint solve: A^H x = g
        x = solve_factored(fac, g, adjoint=True)
        assert backward_error(np.conj(du), np.conj(d), np.conj(dl), x, g) <= 1e-10


def test_sigma_lower_bound_is_a_lower_bound():
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(20):
        n = int(rng.integers(8, 80))
        dl, d, du = _random_tridiagonal(rng, n)
        d = d + rng.uniform(3.0, 9.0)
        bound = sigma_lower_bound(dl, d, du)
        assert bound >= 0.0
        if bound > 0.0:
            hits += 1
            assert bound <= dense_sigma_min(dl, d, du) * (1.0 + 1e-12)
    assert hits >= 10  # the bound is conclusive on dominant draws


def test_tridiagonal_matvec_matches_dense():
    rng = np.random.default_rng(2)
    dl, d, du = _random_tridiagonal(rng, 40)
    v = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    dense = to_dense(dl, d, du) @ v
    assert np.allclose(tridiagonal_matvec(dl, d, du, v), dense, rtol=1e-13)


# ---------------------------------------------------------------------------
# cutoff resolvent norms

WARP = PolynomialWarp(1.0)
MAN = ManifoldProfile(n=3, warp=WARP, r0=1.0, r1=8.0)
FREE = zero_potential()
BASE = CarlemanParams(
    h=0.05, E=1.0, epsilon_shift=1e-3, delta=2.0, tau0=1.0, t=0.5,
    b=4.0, ineq_const_C=1.0, compact_support=True,
)
SPEC = RadialGridSpec(r_max=10.0)


def test_cutoff_norm_free_fixture_pinned_by_dense_oracle():
    res = cutoff_resolvent_norm(MAN, FREE, BASE, SPEC)
    assert 1.0 <= res.norm <= 1.0 / BASE.epsilon_shift
    # dense SVD of the dominant weighted mode operator pins the value
    grid = make_radial_grid(8.0, 10.0, BASE.h, BASE.E)
    op = build_mode_operator(MAN, FREE, BASE, res.dominant_mode, grid)
    w = op.weight
    d = op.diag / (w * w)
    e = op.offdiag / (w[:-1] * w[1:])
    assert 1.0 / res.norm == pytest.approx(dense_sigma_min(e, d, e), rel=1e-8)
    # every skipped mode is certified above the measured minimum
    skipped = ~res.scan.evaluated
    assert np.all(res.scan.sigma[skipped] >= 1.0 / res.norm)
    assert res.scan.sigma[res.scan.evaluated].min() == pytest.approx(1.0 / res.norm, rel=1e-14)
    assert res.excluded_sigma > 1.0 / res.norm


def test_cutoff_norm_eps_one_bounded_by_one():
    params = replace(BASE, epsilon_shift=1.0)
    res = cutoff_resolvent_norm(MAN, FREE, params, SPEC)
    assert res.norm <= 1.0 + 1e-6


def test_cutoff_norm_sign_symmetry():
    plus = cutoff_resolvent_norm(MAN, FREE, BASE, SPEC, sign=+1)
    minus = cutoff_resolvent_norm(MAN, FREE, BASE, SPEC, sign=-1)
    assert plus.norm == pytest.approx(minus.norm, rel=1e-10)


def test_cutoff_norm_unweighted_saturates_epsilon():
    res = cutoff_resolvent_norm(MAN, FREE, BASE, SPEC, weighted=False)
    assert res.norm <= (1.0 + 1e-6) / BASE.epsilon_shift
    # V=0 at small eps: some box level sits near E, so the bound is nearly tight
    assert res.norm >= 0.5 / BASE.epsilon_shift


def test_truncation_flag_fires_on_box_sensitive_fixture():
    # eps far below the box level spacing: doubling r_max moves the levels
    res = cutoff_resolvent_norm(MAN, FREE, BASE, SPEC, check_truncation=True)
    assert res.truncation_stable is False
    assert "truncation_unstable" in res.flags


def test_truncation_stable_when_eps_dominates_spacing():
    params = replace(BASE, h=0.1, epsilon_shift=0.01)
    res = cutoff_resolvent_norm(MAN, FREE, params, SPEC, weighted=False,
                                check_truncation=True)
    assert res.truncation_stable is True
    assert res.flags == ()


def test_mode_monotonicity_past_cutoff():
    sig = mode_monotonicity_check(MAN, FREE, BASE, SPEC, n_samples=3)
    assert sig.shape == (3,)
    assert np.all(np.diff(sig) >= 0.0)


def test_grid_convergence_under_ppw_doubling():
    # nontrapping scenario with eps tied to h: norm changes < 2% at 3 checkpoints
    for h in (0.1, 0.06, 0.04):
        params = replace(BASE, h=h, epsilon_shift=0.1 * h)
        coarse = cutoff_resolvent_norm(MAN, FREE, params, SPEC, weighted=False)
        fine = cutoff_resolvent_norm(
            MAN, FREE, params, replace(SPEC, points_per_wavelength=32.0),
            weighted=False,
        )
        assert abs(fine.norm - coarse.norm) / coarse.norm < 0.02


# ---------------------------------------------------------------------------
# sweeps


def test_h_sweep_validation():
    with pytest.raises(ValueError, match="at least 5"):
        h_sweep(MAN, FREE, BASE, [0.1, 0.05, 0.025], SPEC)
    with pytest.raises(ValueError, match="decreasing"):
        h_sweep(MAN, FREE, BASE, [0.1, 0.2, 0.05, 0.04, 0.03], SPEC)


def test_h_sweep_memory_cap_flags_leg():
    tiny = replace(SPEC, n_cap=50)
    sweep = h_sweep(MAN, FREE, BASE, list(np.geomspace(0.1, 0.03, 5)), tiny,
                    eps_policy=lambda h: 0.1 * h,
                    check_truncation_at_largest=False)
    assert all(e.flags == ("memory_cap",) for e in sweep.entries)
    assert all(math.isnan(e.norm) for e in sweep.entries)
    assert len(sweep.clean().entries) == 0


def test_h_sweep_nontrapping_free_end():
    hs = list(np.geomspace(0.1, 0.03, 5))
    sweep = h_sweep(MAN, FREE, BASE, hs, SPEC, weighted=False,
                    eps_policy=lambda h: 0.1 * h, workers=2)
    norms = sweep.norms
    assert np.all(np.isfinite(norms))
    assert np.all(np.diff(norms) > 0.0)  # growing as h decreases
    # unweighted free norm saturates 1/eps: log norm tracks log(1/h) + log 10
    for e in sweep.entries:
        assert e.norm <= (1.0 + 1e-6) / e.epsilon_shift
        assert e.norm >= 0.8 / e.epsilon_shift
        assert e.time_ms > 0.0
        assert e.epsilon_shift == pytest.approx(0.1 * e.h)
    # truncation checked (and stable) on the largest-h leg
    assert sweep.entries[0].flags == ()
    fit = fit_exponent(sweep, log_power=0.0)
    assert fit.exponent < 0.25  # clearly sub-exponential
    bc = bound_check(sweep, MAN, FREE)
    assert bc.consistent and math.isfinite(bc.implied_C)
    assert bc.p == pytest.approx(4.0 / 3.0)
    assert bc.log_power == 1.0


def test_h_sweep_deterministic():
    hs = list(np.geomspace(0.1, 0.04, 5))
    a = h_sweep(MAN, FREE, BASE, hs, SPEC, weighted=False,
                eps_policy=lambda h: 0.1 * h, check_truncation_at_largest=False)
    b = h_sweep(MAN, FREE, BASE, hs, SPEC, weighted=False,
                eps_policy=lambda h: 0.1 * h, check_truncation_at_largest=False,
                workers=3)
    for x, y in zip(a.entries, b.entries):
        assert repr(x.norm) == repr(y.norm)
        assert x.dominant_mode == y.dominant_mode


# ---------------------------------------------------------------------------
# trapping scenario

TRAP = square_well_potential(4.0, 10.0, 10.25)
TRAP_SPEC = RadialGridSpec(r_max=11.5, grid_energy=1.0)


def test_tunneling_action_square_barrier_closed_form():
    act = tunneling_action(TRAP, 10.0, 10.25, 1.0)
    assert act == pytest.approx(2.0 * 0.25 * math.sqrt(3.0), rel=1e-6)
    assert tunneling_action(TRAP, 10.0, 10.25, 5.0) == 0.0  # E above barrier


def test_trapped_level_energy_properties():
    params = replace(BASE, h=0.1)
    e_star = trapped_level_energy(MAN, TRAP, params, TRAP_SPEC, well=(8.0, 10.0))
    assert abs(e_star - 1.0) < 0.25
    # the locked energy is an eigenvalue: sigma_min at it collapses to ~eps
    locked = replace(params, E=e_star, epsilon_shift=1e-9)
    res = cutoff_resolvent_norm(MAN, TRAP, locked, TRAP_SPEC)
    assert res.dominant_mode == 0
    assert 1.0 / res.norm < 1e-8  # dist to spectrum buried under eps
    with pytest.raises(RuntimeError, match="trapped level"):
        trapped_level_energy(MAN, TRAP, params, TRAP_SPEC, well=(8.0, 10.0),
                             min_mass=0.999999)
    with pytest.raises(RuntimeError, match="within"), pytest.warns(UserWarning):
        trapped_level_energy(MAN, TRAP, replace(params, E=50.0), TRAP_SPEC,
                             well=(8.0, 10.0), window=1e-9)


def test_trapping_sweep_tunneling_regime():
    two_s = tunneling_action(TRAP, 10.0, 10.25, 1.0)

    def lock(h):
        return trapped_level_energy(MAN, TRAP, replace(BASE, h=h), TRAP_SPEC,
                                    well=(8.0, 10.0))

    hs = list(np.geomspace(0.1, 0.05, 5))
    sweep = h_sweep(MAN, TRAP, BASE, hs, TRAP_SPEC,
                    e_policy=lock,
                    eps_policy=lambda h: math.exp(-two_s / h),
                    check_truncation_at_largest=False)
    hlog = np.array([e.h * math.log(e.norm) for e in sweep.entries])
    # tunneling regime: h log||R|| approaches the barrier action from below
    assert np.all(np.diff(hlog) > 0.0)
    assert abs(hlog[-1] - two_s) / two_s < 0.25
    assert all(e.dominant_mode == 0 for e in sweep.entries)
    # enormously larger than the free norm at the same h
    free_params = replace(BASE, h=hs[-1], epsilon_shift=0.1 * hs[-1])
    free = cutoff_resolvent_norm(MAN, FREE, free_params, SPEC)
    assert sweep.entries[-1].norm > 100.0 * free.norm
    bc = bound_check(sweep, MAN, TRAP)
    assert bc.consistent and math.isfinite(bc.implied_C)
    # implied_C * shape dominates the measurements pointwise by construction
    shape = sweep.h ** (-bc.p) * np.log(1.0 / sweep.h) ** bc.log_power
    assert np.all(bc.implied_C * shape >= np.log(sweep.norms) - 1e-12)


# ---------------------------------------------------------------------------
# exponent fits on synthetic sweeps


def _synthetic_sweep(hs, norms):
    entries = tuple(
        HSweepEntry(h=float(h), epsilon_shift=1e-3, norm=float(v),
                    dominant_mode=0, modes_used=1, n_grid=10, time_ms=1.0,
                    flags=())
        for h, v in zip(hs, norms)
    )
    return SweepResult(entries=entries, sign=1, E=1.0, weighted=True,
                       grid_spec=SPEC)


def test_fit_exponent_recovers_pure_power():
    hs = np.geomspace(0.8, 0.3, 6)
    sweep = _synthetic_sweep(hs, np.exp(7.0 * hs ** (-4.0 / 3.0)))
    fit = fit_exponent(sweep, log_power=0.0)
    assert fit.exponent == pytest.approx(4.0 / 3.0, abs=1e-10)
    assert fit.coefficient == pytest.approx(7.0, rel=1e-10)
    assert fit.residual_rms < 1e-10
    assert fit.flags == ()


def test_fit_exponent_recovers_power_with_log():
    hs = np.geomspace(0.3, 0.05, 7)
    sweep = _synthetic_sweep(hs, np.exp(3.0 / hs * np.log(1.0 / hs)))
    fit = fit_exponent(sweep, log_power=1.0)
    assert fit.exponent == pytest.approx(1.0, abs=1e-8)
    assert fit.coefficient == pytest.approx(3.0, rel=1e-8)


def test_fit_exponent_stable_when_dropping_largest_h():
    hs = np.geomspace(0.3, 0.05, 8)
    norms = np.exp(2.0 * hs ** (-1.1) * np.log(1.0 / hs) ** 0.0)
    full = fit_exponent(_synthetic_sweep(hs, norms), log_power=0.0)
    dropped = fit_exponent(_synthetic_sweep(hs[1:], norms[1:]), log_power=0.0)
    assert abs(full.exponent - dropped.exponent) < 0.05


def test_fit_exponent_flags_non_monotone():
    hs = np.geomspace(0.3, 0.05, 6)
    norms = np.exp(2.0 / hs)
    norms[3] = norms[2] * 0.9
    fit = fit_exponent(_synthetic_sweep(hs, norms), log_power=0.0)
    assert "non_monotone" in fit.flags


def test_fit_exponent_requires_norms_above_one():
    hs = np.geomspace(0.3, 0.05, 6)
    with pytest.raises(ValueError, match="exceed 1"):
        fit_exponent(_synthetic_sweep(hs, np.full(6, 0.5)), log_power=0.0)


def test_bound_check_on_exact_shape():
    hs = np.geomspace(0.3, 0.05, 6)
    # data exactly on the predicted free-end shape h^{-4/3} log(1/h)
    norms = np.exp(0.7 * hs ** (-4.0 / 3.0) * np.log(1.0 / hs))
    bc = bound_check(_synthetic_sweep(hs, norms), MAN, FREE)
    assert bc.consistent
    assert bc.implied_C == pytest.approx(0.7, rel=1e-12)
    assert np.allclose(bc.per_h_ratio, 0.7)
