"""Two-branch weight and phase profiles on a warped end.

The weight mu grows like (f(r) - b)^2 out to a turning radius a = h^-m and
then flattens, gaining only an r^(1-2s) tail; the phase phi climbs with slope
tau (1/f(r) - 1/f(a)) and freezes at its maximum past a.  The module derives
the h-dependent scales, evaluates all profile quantities in overflow-safe
grouped forms, and certifies the key differential inequality

    A(r) - C B(r) - h^2 (mu q0)'(r) >= -(E/2) mu'(r)

pointwise on a grid, where A = (mu phi'^2)' and B is the quotient envelope
built from the potential decay, the curvature of the phase, and the weight.
Margins are reported relative to mu' so that numbers at wildly different
radii are comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .fitting import ExponentFit, fit_power_log
from .geometry import (
    CompactSupportPotential,
    ExponentialWarp,
    ManifoldProfile,
    PolynomialWarp,
    PotentialSpec,
    WarpFamily,
    q0_prime,
    warp_eval,
    warp_fp_over_f,
    warp_log_f,
    _q0,
)

__all__ = [
    "CarlemanParams",
    "DerivedScales",
    "GridSpec",
    "WeightPhaseProfile",
    "RatioBounds",
    "KeyInequalityReport",
    "Tau0Search",
    "derive_scales",
    "build_profile",
    "check_ratio_bounds",
    "phase_max",
    "phase_max_scaling",
    "check_key_inequality",
    "margin_components",
    "find_admissible_tau0",
    "mu_eval",
    "phi_eval",
    "phi_prime_eval",
]

_MAX_LOG = 650.0  # headroom below log(float64 max) ~ 709.8


@dataclass(frozen=True)
class CarlemanParams:
    """Scalar knobs of the weight/phase construction at one value of h."""

    h: float
    E: float
    epsilon_shift: float
    delta: float
    tau0: float
    t: float
    b: float
    ineq_const_C: float
    compact_support: bool

    def __post_init__(self) -> None:
        if not 0 < self.h < 1:
            raise ValueError(f"need 0 < h < 1, got h={self.h}")
        if not self.E > 0:
            raise ValueError("E must be positive")
        if not 0 < self.epsilon_shift <= 1:
            raise ValueError("epsilon_shift must lie in (0, 1]")
        if not self.delta > 1:
            raise ValueError("delta must exceed 1")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if not self.t > 0:
            raise ValueError("t must be positive")
        if self.b < 0:
            raise ValueError("b must be nonnegative")
        if self.ineq_const_C < 0:
            raise ValueError("ineq_const_C must be nonnegative")


@dataclass(frozen=True)
class DerivedScales:
    """Scales derived from h: epsilon_log = 1/log(1/h) and friends."""

    epsilon_log: float
    lambda_loglog: float
    s: float
    m0: float
    m: float
    a: float
    tau: float


def derive_scales(
    params: CarlemanParams, warp: WarpFamily, potential: PotentialSpec
) -> DerivedScales:
    """Compute (epsilon, lambda, s, m, a, tau) for the given h.

    Requires h < 1/e so that lambda = log log(1/h) is positive.  The turning
    exponent is m = m0 + epsilon * t for compact support and
    m = m0 + epsilon (lambda + m0 + t)/(delta - 1) otherwise.
    """
    from .geometry import m0_compute

    h = params.h
    L = math.log(1.0 / h)
    if L <= 1.0:
        raise ValueError(f"need h < 1/e so that log log(1/h) > 0, got h={h}")
    compact = isinstance(potential, CompactSupportPotential)
    if compact != params.compact_support:
        raise ValueError("params.compact_support disagrees with the potential type")
    if not compact and abs(params.delta - potential.delta) > 1e-12:
        raise ValueError("params.delta disagrees with the potential's delta")
    eps = 1.0 / L
    lam = math.log(L)
    m0 = m0_compute(warp, potential)
    if compact:
        m = m0 + eps * params.t
    else:
        m = m0 + eps * (lam + m0 + params.t) / (params.delta - 1.0)
    a = math.exp(m * L)
    tau = params.tau0 * h ** (-1.0 / 3.0)
    return DerivedScales(
        epsilon_log=eps, lambda_loglog=lam, s=(1.0 + eps) / 2.0, m0=m0, m=m, a=a, tau=tau
    )


@dataclass(frozen=True)
class GridSpec:
    """Grid policy: log-spaced base with a uniform cluster around the turning radius."""

    n_points: int = 4096
    r_max_factor: float = 10.0
    cluster_halfwidth: float = 1e-3
    cluster_points: int = 257
    side_offset: float = 1e-14


# ---------------------------------------------------------------------------
# phase primitive


def _f_integral(warp: WarpFamily, r1: float, x: np.ndarray) -> np.ndarray:
    """Integral of 1/f from r1 to x, exact per family."""
    if isinstance(warp, PolynomialWarp):
        k = warp.k
        if k == 1.0:
            return np.log(x / r1)
        return (x ** (1.0 - k) - r1 ** (1.0 - k)) / (1.0 - k)
    al = warp.alpha
    s = 1.0 / al
    scale = gamma_fn(s) / al
    return scale * (gammaincc(s, r1**al) - gammaincc(s, x**al))


def phi_eval(warp: WarpFamily, r1: float, a: float, tau: float, r) -> np.ndarray:
    """Phase phi(r): integral of tau (1/f - 1/f(a)) from r1, frozen past a."""
    r = np.asarray(r, dtype=float)
    x = np.minimum(r, a)
    inv_fa = math.exp(-float(warp_log_f(warp, a)))
    return tau * (_f_integral(warp, r1, x) - (x - r1) * inv_fa)


def phi_prime_eval(warp: WarpFamily, r1: float, a: float, tau: float, r) -> np.ndarray:
    """Phase slope: tau (1/f(r) - 1/f(a)) below a, zero past it."""
    r = np.asarray(r, dtype=float)
    inv_f = np.exp(-warp_log_f(warp, r))
    inv_fa = math.exp(-float(warp_log_f(warp, a)))
    return np.where(r < a, tau * (inv_f - inv_fa), 0.0)


def mu_eval(prof: "WeightPhaseProfile", r):
    """Weight mu and its derivative mu' at arbitrary radii >= r1.

    Works off the profile's frozen parameters, so values at radii between
    grid nodes are exact rather than interpolated.  Returns (mu, mu_prime)
    as arrays matching the shape of ``r``.
    """
    warp = prof.manifold.warp
    b, a = prof.params.b, prof.a
    eps, s = prof.scales.epsilon_log, prof.scales.s
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < prof.r1 * (1.0 - 1e-12)):
        raise ValueError("mu is defined on [r1, inf)")
    left = r < a
    mu = np.empty(r.shape)
    mup = np.empty(r.shape)
    f_l, fp_l, _ = warp_eval(warp, r[left])
    mu[left] = (f_l - b) ** 2
    mup[left] = 2.0 * fp_l * (f_l - b)
    rr = r[~left]
    fa_b = math.exp(float(warp_log_f(warp, a))) - b
    mu[~left] = fa_b * fa_b + a**-eps - rr**-eps
    mup[~left] = eps * rr ** (-2.0 * s)
    return mu, mup


# ---------------------------------------------------------------------------
# profile container


@dataclass(frozen=True)
class WeightPhaseProfile:
    """Sampled weight/phase data plus the grouped pieces for margin re-evaluation."""

    grid: np.ndarray
    left_mask: np.ndarray
    mu: np.ndarray
    mu_prime: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    phi_second: np.ndarray
    A: np.ndarray
    B: np.ndarray
    q0: np.ndarray
    mu_q0_prime: np.ndarray
    phi_at_a: float
    r1: float
    a: float
    params: CarlemanParams
    scales: DerivedScales
    manifold: ManifoldProfile
    # grouped tau0-parameterized pieces (internal, used by the margin search)
    _ahat: np.ndarray
    _g0: np.ndarray
    _g1: np.ndarray
    _php: np.ndarray
    _mu_over_mup: np.ndarray
    _b_right: np.ndarray
    _muq0p_over_mup: np.ndarray


def _build_grid(r1: float, a: float, spec: GridSpec) -> np.ndarray:
    r_max = spec.r_max_factor * a
    base = np.geomspace(r1, r_max, spec.n_points)
    lo = a * (1.0 - spec.cluster_halfwidth)
    hi = a * (1.0 + spec.cluster_halfwidth)
    cluster = np.linspace(max(lo, r1), hi, spec.cluster_points)
    sides = np.array([a * (1.0 - spec.side_offset), a * (1.0 + spec.side_offset)])
    grid = np.unique(np.concatenate([base, cluster, sides]))
    grid = grid[(grid >= r1) & (grid != a)]
    return grid


def build_profile(
    params: CarlemanParams,
    scales: DerivedScales,
    manifold: ManifoldProfile,
    grid_spec: Optional[GridSpec] = None,
) -> WeightPhaseProfile:
    """Sample the full weight/phase construction on the standard grid.

    Raises when a <= r1 (no two-branch structure at this h) or when the warp
    at the turning radius would overflow float64 (exponential family with
    a^alpha beyond ~325; shrink t, raise delta, or use larger h).
    """
    spec = grid_spec or GridSpec()
    warp, n, b = manifold.warp, manifold.n, params.b
    r1, a = manifold.r1, scales.a
    h, tau = params.h, scales.tau
    eps, s = scales.epsilon_log, scales.s

    if a <= r1 * (1.0 + 1e-9):
        raise ValueError(
            f"turning radius a={a:.6g} does not clear r1={r1:.6g}; h too large"
        )
    f_r1 = math.exp(float(warp_log_f(warp, r1)))
    if b > 0 and f_r1 < 2.0 * b * (1.0 - 1e-12):
        raise ValueError(f"need f(r1) >= 2b: f({r1})={f_r1:.6g} < {2*b}")

    logf_a = float(warp_log_f(warp, a))
    fof_ends = max(float(warp_fp_over_f(warp, r1)), float(warp_fp_over_f(warp, a)))
    if 2.0 * logf_a + math.log(2.0 * fof_ends + 1.0) + math.log1p(tau * tau) > _MAX_LOG:
        raise ValueError(
            "weight scale (f(a) - b)^2 overflows float64 for this scenario; "
            f"log f(a) = {logf_a:.1f}.  Reduce t, increase delta, or use larger h."
        )

    grid = _build_grid(r1, a, spec)
    left = grid < a
    rl, rr = grid[left], grid[~left]
    C = params.ineq_const_C
    h13 = h ** (-1.0 / 3.0)
    inv_fa = math.exp(-logf_a)
    fa_b = math.exp(logf_a) - b

    n_pts = len(grid)
    mu = np.empty(n_pts)
    mup = np.empty(n_pts)
    php_arr = np.zeros(n_pts)
    phpp = np.zeros(n_pts)
    A = np.zeros(n_pts)
    B = np.empty(n_pts)
    ahat = np.zeros(n_pts)
    g0 = np.zeros(n_pts)
    g1 = np.zeros(n_pts)
    mu_over_mup = np.empty(n_pts)
    b_right = np.zeros(n_pts)
    muq0p = np.empty(n_pts)
    muq0p_rel = np.empty(n_pts)

    q0 = _q0(warp, n, grid)
    q0p = q0_prime(warp, n, grid)

    # ---- left branch: r1 <= r < a
    f_l, fp_l, _ = warp_eval(warp, rl)
    fof_l = warp_fp_over_f(warp, rl)
    inv_f = np.exp(-warp_log_f(warp, rl))
    fb = f_l - b
    one_m = 1.0 - b * inv_f
    mu[left] = fb * fb
    mup[left] = 2.0 * fp_l * fb
    php_l = tau * (inv_f - inv_fa)
    php_arr[left] = php_l
    phpp[left] = -tau * fof_l * inv_f
    mu_over_mup[left] = one_m / (2.0 * fof_l)
    # A = phi' (mu' phi' + 2 mu phi''); mu phi'' = -tau f'/f (f-b)^2 / f grouped
    # as -tau (f'/f)(1 - b/f)(f - b) to keep every factor in range.
    A[left] = php_l * (mup[left] * php_l - 2.0 * tau * fof_l * one_m * fb)
    ahat_l = (php_l / params.tau0) * (php_l / params.tau0 - h13 * one_m * inv_f)
    ahat[left] = ahat_l
    env = h * rl**-1.0
    if not params.compact_support:
        env = env + (rl**-params.delta) / h
    g0[left] = env * inv_f * inv_f
    g1[left] = h13 * fof_l * inv_f
    G_l = g0[left] + tau * fof_l * inv_f
    ratio_l = mu_over_mup[left] * G_l
    denom_l = 1.0 + (php_l / h) * mu_over_mup[left]
    B[left] = (ratio_l * ratio_l / denom_l) * mup[left]
    muq0p_rel[left] = q0[left] + mu_over_mup[left] * q0p[left]
    muq0p[left] = muq0p_rel[left] * mup[left]

    # ---- right branch: r > a
    if len(rr):
        delta_mu = a**-eps - rr**-eps
        mu[~left] = fa_b * fa_b + delta_mu
        mup_r = eps * rr ** (-2.0 * s)
        mup[~left] = mup_r
        inv_f_r = np.exp(-warp_log_f(warp, rr))
        mu_f2 = (fa_b * inv_f_r) ** 2 + delta_mu * inv_f_r * inv_f_r
        env_r = h * rr**-1.0
        if not params.compact_support:
            env_r = env_r + (rr**-params.delta) / h
        ratio_r = mu_f2 * env_r / mup_r
        b_right[~left] = ratio_r * ratio_r
        B[~left] = b_right[~left] * mup_r
        mu_over_mup[~left] = mu[~left] / mup_r
        muq0p_rel[~left] = q0[~left] + (mu[~left] * q0p[~left]) * (rr ** (2.0 * s) / eps)
        muq0p[~left] = muq0p_rel[~left] * mup_r

    phi = phi_eval(warp, r1, a, tau, grid)
    phi_at_a = float(phi_eval(warp, r1, a, tau, np.array([a]))[0])

    return WeightPhaseProfile(
        grid=grid,
        left_mask=left,
        mu=mu,
        mu_prime=mup,
        phi=phi,
        phi_prime=php_arr,
        phi_second=phpp,
        A=A,
        B=B,
        q0=q0,
        mu_q0_prime=muq0p,
        phi_at_a=phi_at_a,
        r1=r1,
        a=a,
        params=params,
        scales=scales,
        manifold=manifold,
        _ahat=ahat,
        _g0=g0,
        _g1=g1,
        _php=php_arr / params.tau0,
        _mu_over_mup=mu_over_mup,
        _b_right=b_right,
        _muq0p_over_mup=muq0p_rel,
    )


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class RatioBounds:
    c32: float
    c33: float


def check_ratio_bounds(prof: WeightPhaseProfile, scales: Optional[DerivedScales] = None) -> RatioBounds:
    """Sharp grid constants for mu/mu' <= c32 eps^-1 f(a)^2 r^2s (and mu^2/mu').

    Evaluated in log domain so the exponential family is safe at any
    admissible turning radius.
    """
    sc = scales or prof.scales
    warp, b = prof.manifold.warp, prof.params.b
    eps, s, a = sc.epsilon_log, sc.s, prof.a
    grid, left = prof.grid, prof.left_mask
    logf_a = float(warp_log_f(warp, a))
    log_r = np.log(grid)

    log_mu_over_mup = np.empty(len(grid))
    log_mu = np.empty(len(grid))

    rl = grid[left]
    inv_f = np.exp(-warp_log_f(warp, rl))
    fof = warp_fp_over_f(warp, rl)
    log_fb = warp_log_f(warp, rl) + np.log1p(-b * inv_f)
    log_mu[left] = 2.0 * log_fb
    log_mu_over_mup[left] = np.log1p(-b * inv_f) - np.log(2.0 * fof)

    rr = grid[~left]
    if len(rr):
        inv_fa = math.exp(-logf_a)
        log_fa_b = logf_a + math.log1p(-b * inv_fa)
        delta_mu = a**-eps - rr**-eps
        tail = delta_mu * np.exp(-2.0 * log_fa_b)
        log_mu[~left] = 2.0 * log_fa_b + np.log1p(tail)
        log_mup_r = math.log(eps) - 2.0 * s * np.log(rr)
        log_mu_over_mup[~left] = log_mu[~left] - log_mup_r

    log_bound1 = -math.log(eps) + 2.0 * logf_a + 2.0 * s * log_r
    c32 = float(np.exp(np.max(log_mu_over_mup - log_bound1)))
    log_bound2 = -math.log(eps) + 4.0 * logf_a + 2.0 * s * log_r
    c33 = float(np.exp(np.max(log_mu + log_mu_over_mup - log_bound2)))
    return RatioBounds(c32=c32, c33=c33)


def phase_max(prof: WeightPhaseProfile) -> float:
    """Maximum of the phase: phi(a), where the slope hits zero."""
    return prof.phi_at_a


def phase_max_scaling(
    params_template: CarlemanParams,
    manifold: ManifoldProfile,
    potential: PotentialSpec,
    h_list: Sequence[float],
    log_power: Optional[float] = None,
) -> ExponentFit:
    """Fit max(phi)/h = c h^-p (log 1/h)^q across an h sweep.

    Uses the exact phase primitive (no grids).  Pass ``log_power`` to pin q
    at the predicted value; leave None to fit it freely.
    """
    if len(h_list) < 4:
        raise ValueError(f"need at least 4 h samples for a scaling fit, got {len(h_list)}")
    h_arr = np.asarray(sorted(h_list, reverse=True), dtype=float)
    vals = []
    for h in h_arr:
        p = replace(params_template, h=float(h))
        sc = derive_scales(p, manifold.warp, potential)
        top = float(
            phi_eval(manifold.warp, manifold.r1, sc.a, sc.tau, np.array([sc.a]))[0]
        )
        vals.append(top / h)
    return fit_power_log(h_arr, np.asarray(vals), log_power=log_power)


# ---------------------------------------------------------------------------
# key inequality


@dataclass(frozen=True)
class KeyInequalityReport:
    holds: bool
    worst_margin: float
    worst_r: float
    margins: np.ndarray
    tau0: float
    h: float


def margin_components(
    prof: WeightPhaseProfile, tau0: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three mu'-normalized pieces (A, B, correction) of the margin.

    The pointwise margin is A - C B - correction + E/2; exposing the pieces
    lets reports tabulate the branch quantities alongside the verdict.
    """
    t0 = prof.params.tau0 if tau0 is None else tau0
    h = prof.params.h
    left = prof.left_mask
    a_term = t0 * t0 * prof._ahat
    g = prof._g0 + t0 * prof._g1
    ratio = prof._mu_over_mup * g
    denom = 1.0 + (t0 * prof._php / h) * prof._mu_over_mup
    b_term = np.where(left, ratio * ratio / denom, prof._b_right)
    return a_term, b_term, h * h * prof._muq0p_over_mup


def _margins_at(
    prof: WeightPhaseProfile, tau0: float, E: Optional[float] = None
) -> np.ndarray:
    """Normalized margins (A - C B - h^2 (mu q0)')/mu' + E/2 at a trial tau0."""
    p = prof.params
    E_val = p.E if E is None else E
    a_term, b_term, corr = margin_components(prof, tau0)
    return a_term - p.ineq_const_C * b_term - corr + 0.5 * E_val


def check_key_inequality(
    prof: WeightPhaseProfile,
    tau0: Optional[float] = None,
    E: Optional[float] = None,
) -> KeyInequalityReport:
    """Pointwise certificate of the key inequality on the profile grid.

    Margins are divided by mu'; ``holds`` means the minimum over the grid
    (including both one-sided samples at the turning radius) is >= 0.  The
    phase strength tau0 and spectral level E may be retargeted without
    rebuilding the profile; the other knobs are baked into the grouped
    pieces, so change them by building a fresh profile.
    """
    t0 = prof.params.tau0 if tau0 is None else tau0
    margins = _margins_at(prof, t0, E=E)
    i = int(np.argmin(margins))
    worst = float(margins[i])
    return KeyInequalityReport(
        holds=bool(worst >= 0.0),
        worst_margin=worst,
        worst_r=float(prof.grid[i]),
        margins=margins,
        tau0=t0,
        h=prof.params.h,
    )


@dataclass(frozen=True)
class Tau0Search:
    tau0_star: float
    h_list: tuple
    evaluations: int
    bracket: tuple


def find_admissible_tau0(
    params_template: CarlemanParams,
    manifold: ManifoldProfile,
    potential: PotentialSpec,
    h_list: Sequence[float],
    tau0_range: tuple = (1e-3, 4096.0),
    rel_tol: float = 0.02,
    grid_spec: Optional[GridSpec] = None,
) -> Tau0Search:
    """Smallest tau0 in range making the key inequality hold for every h.

    Geometric upward scan to bracket the threshold, then bisection.  Profiles
    are built once per h; retrying a new tau0 only re-evaluates the grouped
    margin pieces.  Raises with the worst margins if even the top of the
    range fails.
    """
    lo, hi = tau0_range
    if not 0 < lo < hi:
        raise ValueError("tau0_range must satisfy 0 < lo < hi")
    profs = []
    for h in sorted(h_list, reverse=True):
        p = replace(params_template, h=float(h), tau0=lo)
        sc = derive_scales(p, manifold.warp, potential)
        profs.append(build_profile(p, sc, manifold, grid_spec))

    evals = 0

    def ok(t0: float) -> bool:
        nonlocal evals
        evals += 1
        return all(float(np.min(_margins_at(pr, t0))) >= 0.0 for pr in profs)

    if ok(lo):
        return Tau0Search(lo, tuple(h_list), evals, (lo, lo))
    t_fail, t = lo, lo
    found = None
    while t < hi:
        t = min(t * 2.0, hi)
        if ok(t):
            found = t
            break
        t_fail = t
        if t >= hi:
            break
    if found is None:
        worst = {
            pr.params.h: float(np.min(_margins_at(pr, hi))) for pr in profs
        }
        raise ValueError(
            f"no admissible tau0 in {tau0_range}; worst margins at top: {worst}"
        )
    while found - t_fail > rel_tol * found:
        mid = math.sqrt(found * t_fail)
        if ok(mid):
            found = mid
        else:
            t_fail = mid
    return Tau0Search(float(found), tuple(h_list), evals, (float(t_fail), float(found)))
