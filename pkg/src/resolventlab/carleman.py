"""Weighted-estimate machinery on the discretized warped end.

Three layers build on the weight/phase profiles:

* a matrix sign certificate for Phi^{ij} = mu d_r g^{ij} + mu' g^{ij}, where
  g^{ij} = f^-2 omega^{ij} + residual is the angular co-metric with a bounded
  perturbation — the inequality that lets the weight commute past the angular
  Laplacian with a favorable sign;
* the energy-flux function F(r) and a pointwise identity for F'(r) in terms
  of the phase-conjugated operator, checked discretely against centered
  differences;
* direct evaluation of both sides of the weighted a-priori estimate

      ||r^-s e^{phi/h} u|| + ||r^-s e^{phi/h} D_r u||
          <= C f(a)^2 (eps_log h)^-1 ||r^s e^{phi/h} (P - E +- i eps) u||
           + C tau f(a) eps^{1/2} (eps_log h)^{-1/2} ||e^{phi/h} u||

  on discrete test functions, with all exponential weights handled in
  log-magnitude form so that deep-left factors underflow gracefully instead
  of overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.special import logsumexp

from .geometry import (
    ManifoldProfile,
    WarpFamily,
    q0_prime,
    warp_fp_over_f,
    warp_log_f,
    _q0,
)
from .operators import build_mode_operator
from .phaseweight import (
    CarlemanParams,
    DerivedScales,
    WeightPhaseProfile,
    mu_eval,
    phi_eval,
    phi_prime_eval,
)

__all__ = [
    "CarlemanRatioReport",
    "FIdentityReport",
    "MetricPerturbation",
    "PerturbationBoundsReport",
    "PhiMatrixReport",
    "TestFunction",
    "b_selection",
    "build_mode_operator",
    "carleman_ratio",
    "check_perturbation_bounds",
    "exact_metric_perturbation",
    "F_functional",
    "F_identity_check",
    "F_series",
    "phi_matrix_check",
    "quasimode_testfunction",
    "random_metric_perturbation",
    "windowed_random_testfunction",
]

_SYM_TOL = 1e-10


def b_selection(c_sharp: float, bound_const: float) -> float:
    """Offset b = 4 C / c_sharp: large enough that the exact-warp decrease of
    the weighted co-metric dominates the worst admissible residual."""
    if not c_sharp > 0:
        raise ValueError("c_sharp must be positive")
    if not bound_const > 0:
        raise ValueError("bound_const must be positive")
    return 4.0 * bound_const / c_sharp


# ---------------------------------------------------------------------------
# metric perturbations and the Phi-matrix certificate


@dataclass(frozen=True)
class MetricPerturbation:
    """Angular co-metric data g^{ij} = f^-2 omega^{ij} + residual.

    ``residual`` and ``residual_r_derivative`` map radii to symmetric
    (n-1) x (n-1) matrices bounded by C f^-3 and C f' f^-4 respectively.
    Callables may be vectorized (array of m radii -> (m, d, d)) or scalar.
    """

    omega_inv: np.ndarray
    residual: Callable
    residual_r_derivative: Callable
    bound_const: float

    def __post_init__(self) -> None:
        w = np.asarray(self.omega_inv, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("omega_inv must be a square matrix")
        if np.max(np.abs(w - w.T)) > _SYM_TOL * (1.0 + np.max(np.abs(w))):
            raise ValueError("omega_inv must be symmetric")
        if np.min(np.linalg.eigvalsh((w + w.T) / 2.0)) <= 0:
            raise ValueError("omega_inv must be positive definite")
        if self.bound_const < 0:
            raise ValueError("bound_const must be nonnegative")
        object.__setattr__(self, "omega_inv", (w + w.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.omega_inv.shape[0]


def exact_metric_perturbation(dim: int, bound_const: float = 1.0) -> MetricPerturbation:
    """Round co-metric with zero residual (the unperturbed warped product)."""
    d = int(dim)

    def zeros(r):
        m = np.atleast_1d(np.asarray(r, dtype=float)).shape[0]
        return np.zeros((m, d, d))

    return MetricPerturbation(np.eye(d), zeros, zeros, bound_const)


def random_metric_perturbation(
    dim: int,
    c_sharp: float,
    bound_const: float,
    warp: WarpFamily,
    rng: np.random.Generator,
    extreme: bool = True,
) -> MetricPerturbation:
    """Random admissible perturbation; ``extreme`` saturates both envelope
    bounds and pins one omega_inv eigenvalue at the ellipticity floor."""
    d = int(dim)
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = c_sharp * (1.0 + 2.0 * rng.random(d))
    if extreme:
        eigs[0] = c_sharp
    omega_inv = (q * eigs) @ q.T

    def unit_sym() -> np.ndarray:
        s = rng.standard_normal((d, d))
        s = (s + s.T) / 2.0
        return s / np.max(np.abs(np.linalg.eigvalsh(s)))

    s_res, s_der = unit_sym(), unit_sym()
    amp = bound_const if extreme else bound_const * rng.uniform(0.2, 1.0)

    def residual(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        env = amp * np.exp(-3.0 * warp_log_f(warp, r))
        return env[:, None, None] * s_res

    def residual_r_derivative(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        env = amp * warp_fp_over_f(warp, r) * np.exp(-3.0 * warp_log_f(warp, r))
        return env[:, None, None] * s_der

    return MetricPerturbation(omega_inv, residual, residual_r_derivative, bound_const)


def _residual_at(fn: Callable, r: np.ndarray, d: int, what: str) -> np.ndarray:
    """Evaluate a residual callable as an (m, d, d) stack, accepting either
    vectorized or scalar callables; rejects non-symmetric output."""
    m = len(r)
    try:
        out = np.asarray(fn(r), dtype=float)
        if out.shape != (m, d, d):
            raise ValueError
    except (ValueError, TypeError):
        out = np.stack([np.asarray(fn(float(ri)), dtype=float) for ri in r])
        if out.shape != (m, d, d):
            raise ValueError(f"{what} must return ({d}, {d}) matrices")
    asym = np.max(np.abs(out - np.swapaxes(out, 1, 2)))
    if asym > _SYM_TOL * (1.0 + np.max(np.abs(out))):
        raise ValueError(f"{what} returned a non-symmetric matrix")
    return (out + np.swapaxes(out, 1, 2)) / 2.0


@dataclass(frozen=True)
class PerturbationBoundsReport:
    eig_min: float
    eig_ok: bool
    residual_ok: bool
    derivative_ok: bool
    worst_residual_ratio: float
    worst_derivative_ratio: float


def check_perturbation_bounds(
    pert: MetricPerturbation,
    warp: WarpFamily,
    c_sharp: float,
    r_samples,
) -> PerturbationBoundsReport:
    """Verify the ellipticity floor and both residual envelopes on a sample grid."""
    r = np.atleast_1d(np.asarray(r_samples, dtype=float))
    d = pert.dim
    eig_min = float(np.min(np.linalg.eigvalsh(pert.omega_inv)))
    eig_ok = eig_min >= c_sharp * (1.0 - 1e-12)

    logf = warp_log_f(warp, r)
    fof = warp_fp_over_f(warp, r)
    res = _residual_at(pert.residual, r, d, "residual")
    der = _residual_at(pert.residual_r_derivative, r, d, "residual_r_derivative")
    res_norm = np.abs(np.linalg.eigvalsh(res)).max(axis=1)
    der_norm = np.abs(np.linalg.eigvalsh(der)).max(axis=1)
    c = pert.bound_const
    slack = 1.0 + 1e-9
    # envelopes evaluated as exp-log products to survive huge f
    res_env = c * np.exp(-3.0 * logf)
    der_env = c * fof * np.exp(-3.0 * logf)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_ratio = np.where(res_norm > 0, res_norm / res_env, 0.0)
        d_ratio = np.where(der_norm > 0, der_norm / der_env, 0.0)
    return PerturbationBoundsReport(
        eig_min=eig_min,
        eig_ok=eig_ok,
        residual_ok=bool(np.all(r_ratio <= slack)),
        derivative_ok=bool(np.all(d_ratio <= slack)),
        worst_residual_ratio=float(np.max(r_ratio)),
        worst_derivative_ratio=float(np.max(d_ratio)),
    )


@dataclass(frozen=True)
class PhiMatrixReport:
    max_eigenvalue: float
    holds: bool
    r_at_max: float
    n_samples: int


def phi_matrix_check(
    pert: MetricPerturbation,
    prof: WeightPhaseProfile,
    warp: Optional[WarpFamily] = None,
    r_samples=None,
) -> PhiMatrixReport:
    """Largest eigenvalue of Phi(r) = mu d_r g^{ij} + mu' g^{ij} over sampled radii.

    The exact-warp radial coefficient uses the per-branch closed forms

        r <  a:  -2 (1 - b/f) b f'/f^2
        r >= a:  -2 mu f' f^-3 + mu' f^-2

    which are cancellation-free (b = 0 gives exactly zero on the left branch,
    so the strict sign test fails there by construction).  ``holds`` demands
    strict negativity at every sample.
    """
    if warp is None:
        warp = prof.manifold.warp
    elif warp is not prof.manifold.warp and warp != prof.manifold.warp:
        raise ValueError("warp disagrees with the one the profile was built on")
    r = prof.grid if r_samples is None else np.atleast_1d(np.asarray(r_samples, float))
    b, a = prof.params.b, prof.a
    d = pert.dim

    mu, mup = mu_eval(prof, r)
    logf = warp_log_f(warp, r)
    inv_f = np.exp(-logf)
    fof = warp_fp_over_f(warp, r)
    left = r < a
    coeff = np.empty(len(r))
    coeff[left] = -2.0 * (1.0 - b * inv_f[left]) * b * fof[left] * inv_f[left]
    mu_f2 = np.exp(np.log(mu[~left]) - 2.0 * logf[~left])
    coeff[~left] = -2.0 * fof[~left] * mu_f2 + mup[~left] * inv_f[~left] ** 2

    res = _residual_at(pert.residual, r, d, "residual")
    der = _residual_at(pert.residual_r_derivative, r, d, "residual_r_derivative")
    phi_mat = (
        coeff[:, None, None] * pert.omega_inv
        + mu[:, None, None] * der
        + mup[:, None, None] * res
    )
    eigs = np.linalg.eigvalsh(phi_mat)
    per_r_max = eigs[:, -1]
    i = int(np.argmax(per_r_max))
    top = float(per_r_max[i])
    return PhiMatrixReport(
        max_eigenvalue=top, holds=bool(top < 0.0), r_at_max=float(r[i]), n_samples=len(r)
    )


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    """Mode-decomposed complex function on a uniform radial grid.

    ``values[m, i]`` is the coefficient of angular mode ``mode_indices[m]``
    at ``grid[i]``; the grid includes both endpoints.
    """

    grid: np.ndarray
    mode_indices: Tuple[int, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 2 or vals.shape != (len(self.mode_indices), len(grid)):
            raise ValueError("values must have shape (n_modes, n_grid)")
        steps = np.diff(grid)
        if np.ptp(steps) > 1e-9 * steps[0]:
            raise ValueError("grid must be uniform")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)

    @property
    def dr(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def boundary_ok(self) -> bool:
        """True when u and its one-sided derivative vanish at the left end
        (relative to the function's own scale) and u vanishes at the right."""
        v = self.values
        scale = np.abs(v).max()
        if scale == 0.0:
            return True
        edge = max(np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max())
        slope = np.abs(v[:, 1] - v[:, 0]).max() / self.dr
        slope_scale = np.abs(np.gradient(v, self.dr, axis=1)).max()
        return edge <= 1e-12 * scale and slope <= 1e-6 * max(slope_scale, 1e-300)

    def d_r(self) -> np.ndarray:
        """Second-order derivative in r (centered; one-sided at the ends)."""
        return np.gradient(self.values, self.dr, axis=1)


def windowed_random_testfunction(
    grid: np.ndarray,
    mode_indices: Sequence[int],
    rng: np.random.Generator,
    n_waves: int = 8,
    margin: float = 0.12,
    support: Optional[Tuple[float, float]] = None,
) -> TestFunction:
    """Band-limited random function under a sin^2 window.

    The window vanishes to second order at the support edges, so boundary
    conditions hold exactly; the sine combination keeps the content smooth
    enough for O(dr^2) finite differences to converge cleanly.
    """
    grid = np.asarray(grid, dtype=float)
    lo, hi = support if support is not None else (
        grid[0] + margin * (grid[-1] - grid[0]),
        grid[-1] - margin * (grid[-1] - grid[0]),
    )
    if not (grid[0] <= lo < hi <= grid[-1]):
        raise ValueError("support must sit inside the grid")
    x = (grid - lo) / (hi - lo)
    inside = (x > 0.0) & (x < 1.0)
    window = np.where(inside, np.sin(np.pi * np.clip(x, 0.0, 1.0)) ** 2, 0.0)

    n_modes = len(mode_indices)
    coeff = rng.standard_normal((n_modes, n_waves)) + 1j * rng.standard_normal(
        (n_modes, n_waves)
    )
    waves = np.sin(np.pi * np.arange(1, n_waves + 1)[:, None] * np.clip(x, 0.0, 1.0))
    vals = window * (coeff @ waves)
    norm = math.sqrt(float(np.sum(np.abs(vals) ** 2)) * (grid[1] - grid[0]))
    if norm > 0:
        vals = vals / norm
    return TestFunction(grid=grid, mode_indices=tuple(mode_indices), values=vals)


def quasimode_testfunction(
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    mode_index: int,
    grid: np.ndarray,
    n_candidates: int = 8,
) -> Tuple[TestFunction, float]:
    """Localized eigenvector of the self-adjoint part near the working energy.

    For a trapping potential this is an approximate resonant state: the
    operator nearly annihilates it, so only the spectral-shift term controls
    its weighted estimate.  Among the ``n_candidates`` levels closest to E
    the one with the smallest relative edge amplitude wins, so box modes of
    the truncated domain are passed over in favor of genuinely trapped
    states.  Returns the function and its detuning from E.
    """
    op = build_mode_operator(profile, potential, params, mode_index, grid, sign=1)
    d = op.diag.real
    e = op.offdiag.real
    levels = eigvalsh_tridiagonal(d, e)
    order = np.argsort(np.abs(levels))[: max(1, n_candidates)]
    lo, hi = levels[order].min(), levels[order].max()
    pad = 1e-9 * (abs(lo) + abs(hi) + 1.0)
    vals, vecs = eigh_tridiagonal(d, e, select="v", select_range=(lo - pad, hi + pad))
    edge = (np.abs(vecs[0]) + np.abs(vecs[-1])) / np.abs(vecs).max(axis=0)
    best = int(np.argmin(edge + np.abs(vals) * 1e-9))
    vec = vecs[:, best]
    full = np.zeros(len(op.grid), dtype=complex)
    full[1:-1] = vec / math.sqrt(float(np.sum(np.abs(vec) ** 2)) * op.dr)
    tf = TestFunction(grid=op.grid, mode_indices=(mode_index,), values=full[None, :])
    return tf, float(vals[best])


# ---------------------------------------------------------------------------
# the energy-flux function F and its derivative identity


def _phase_terms(prof: WeightPhaseProfile, r: np.ndarray):
    warp, n = prof.manifold.warp, prof.manifold.n
    tau, a, r1 = prof.scales.tau, prof.a, prof.r1
    php = phi_prime_eval(warp, r1, a, tau, r)
    inv_f = np.exp(-warp_log_f(warp, r))
    fof = warp_fp_over_f(warp, r)
    phpp = np.where(r < a, -tau * fof * inv_f, 0.0)
    return php, phpp, _q0(warp, n, r), q0_prime(warp, n, r), inv_f, fof


def F_series(prof: WeightPhaseProfile, v: TestFunction) -> np.ndarray:
    """F(r) = -<(L_theta - E - phi'^2 + h^2 q0) v, v> + ||D_r v||^2 on v's grid."""
    h, E = prof.params.h, prof.params.E
    r = v.grid
    php, _, q0, _, inv_f, _ = _phase_terms(prof, r)
    lam = np.array([prof.manifold.mode_eigenvalue(j) for j in v.mode_indices])
    h2 = h * h
    pot_part = E + php**2 - h2 * q0 - h2 * lam[:, None] * inv_f[None, :] ** 2
    dv = v.d_r()
    return np.sum(pot_part * np.abs(v.values) ** 2 + h2 * np.abs(dv) ** 2, axis=0)


def F_functional(prof: WeightPhaseProfile, v: TestFunction, r) -> np.ndarray:
    """F evaluated at radii that must coincide with grid nodes of v."""
    series = F_series(prof, v)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    idx = np.searchsorted(v.grid, r)
    idx = np.clip(idx, 0, len(v.grid) - 1)
    left = np.clip(idx - 1, 0, len(v.grid) - 1)
    take = np.where(
        np.abs(v.grid[left] - r) < np.abs(v.grid[idx] - r), left, idx
    )
    if np.any(np.abs(v.grid[take] - r) > 1e-9 * v.dr + 1e-12):
        raise ValueError("r must lie on the grid of v")
    return series[take]


def _conjugated_stencil(
    vfull: np.ndarray, cfull: np.ndarray, h: float, dr: float, phi: np.ndarray
) -> np.ndarray:
    """e^{phi/h} (D_r^2 + c) e^{-phi/h} v via stencil exponent differences."""
    out = np.zeros_like(vfull)
    wp = np.exp((phi[1:-1] - phi[2:]) / h)
    wm = np.exp((phi[1:-1] - phi[:-2]) / h)
    out[1:-1] = (
        -(h * h) / dr**2 * (wp * vfull[2:] - 2.0 * vfull[1:-1] + wm * vfull[:-2])
        + cfull[1:-1] * vfull[1:-1]
    )
    return out


@dataclass(frozen=True)
class FIdentityReport:
    max_residual: float
    rms_residual: float
    dr: float
    n_compared: int


def F_identity_check(
    prof: WeightPhaseProfile,
    v: TestFunction,
    params: Optional[CarlemanParams] = None,
    potential=None,
    sign: int = 1,
) -> FIdentityReport:
    """Compare centered differences of F against the pointwise identity

        F' = -<[d_r, L_theta] v, v> + ((phi')^2 - h^2 q0)' ||v||^2
             - 2 h^-1 Im <P_phi v, D_r v> +- 2 eps h^-1 Re <v, D_r v>
             + 4 h^-1 phi' ||D_r v||^2 + 2 h^-1 Im <(V + h phi'') v, D_r v>

    with the conjugated operator applied discretely.  Both sides carry
    O(dr^2) truncation error, so the maximum discrepancy must shrink at
    second order under refinement.
    """
    params = params or prof.params
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    h, E, eps = params.h, params.E, params.epsilon_shift
    r, dr = v.grid, v.dr
    php, phpp, q0, q0p, inv_f, fof = _phase_terms(prof, r)
    lam = np.array([prof.manifold.mode_eigenvalue(j) for j in v.mode_indices])
    vr = np.asarray(
        potential(r) if potential is not None else np.zeros_like(r), dtype=float
    )
    h2 = h * h

    vals = v.values
    dv = v.d_r()
    d_r_v = -1j * h * dv
    abs2 = np.abs(vals) ** 2
    norm2 = abs2.sum(axis=0)
    dnorm2 = np.sum(np.abs(d_r_v) ** 2, axis=0)

    # commutator of d_r with the angular part, mode by mode
    t1 = 2.0 * h2 * fof * inv_f**2 * np.sum(lam[:, None] * abs2, axis=0)
    t2 = (2.0 * php * phpp - h2 * q0p) * norm2

    pv = np.zeros_like(vals)
    phi = phi_eval(prof.manifold.warp, prof.r1, prof.a, prof.scales.tau, r)
    for m in range(len(lam)):
        c = h2 * lam[m] * inv_f**2 + vr + h2 * q0 - E + 1j * sign * eps
        pv[m] = _conjugated_stencil(vals[m], c, h, dr, phi)

    t3 = -2.0 / h * np.sum(pv * np.conj(d_r_v), axis=0).imag
    t4 = sign * 2.0 * eps / h * np.sum(vals * np.conj(d_r_v), axis=0).real
    t5 = 4.0 / h * php * dnorm2
    t6 = 2.0 / h * np.sum(((vr + h * phpp) * vals) * np.conj(d_r_v), axis=0).imag

    formula = t1 + t2 + t3 + t4 + t5 + t6
    f_series = F_series(prof, v)
    centered = np.empty_like(f_series)
    centered[1:-1] = (f_series[2:] - f_series[:-2]) / (2.0 * dr)
    centered[0] = centered[1]
    centered[-1] = centered[-2]

    resid = np.abs(centered[2:-2] - formula[2:-2])
    return FIdentityReport(
        max_residual=float(resid.max()),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
        dr=dr,
        n_compared=len(resid),
    )


# ---------------------------------------------------------------------------
# the weighted estimate on test functions


def _weighted_sq_integral(logw: np.ndarray, g: np.ndarray, dr: float, log_domain: bool) -> float:
    """integral of e^{2 logw} g dr by trapezoid, directly or in log domain."""
    if not log_domain:
        return float(np.trapezoid(np.exp(2.0 * logw) * g, dx=dr))
    tw = np.full(len(g), dr)
    tw[0] = tw[-1] = dr / 2.0
    mask = g > 0.0
    if not np.any(mask):
        return 0.0
    return float(np.exp(logsumexp(2.0 * logw[mask] + np.log(g[mask]) + np.log(tw[mask]))))


@dataclass(frozen=True)
class CarlemanRatioReport:
    lhs: float
    rhs_resolvent_term: float
    rhs_epsilon_term: float
    best_C: float
    sign: int
    n_points: int
    dr: float
    log_weight_scale: float


def carleman_ratio(
    u: TestFunction,
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    scales: DerivedScales,
    prof: WeightPhaseProfile,
    sign: int = 1,
    log_domain: bool = False,
) -> CarlemanRatioReport:
    """Evaluate both sides of the weighted estimate on a discrete test function.

    All terms share the common factor e^{max phi / h}, which is factored out
    before exponentiation (``log_weight_scale`` records it), so the reported
    numbers are the normalized ones and best_C = lhs / rhs is unaffected.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    if not u.boundary_ok:
        raise ValueError("test function must vanish (with slope) at the ends")
    warp = profile.warp
    h, E, eps_shift = params.h, params.E, params.epsilon_shift
    eps_log, s, tau, a = scales.epsilon_log, scales.s, scales.tau, scales.a
    r, dr = u.grid, u.dr

    phi = phi_eval(warp, prof.r1, a, tau, r)
    phi_top = float(phi[-1])
    logw = (phi - phi_top) / h

    inv_f2 = np.exp(-2.0 * warp_log_f(warp, r))
    vr = np.asarray(potential(r), dtype=float)
    q0 = _q0(warp, profile.n, r)
    lam = np.array([profile.mode_eigenvalue(j) for j in u.mode_indices])
    h2 = h * h

    vals = u.values
    d_r_u = -1j * h * u.d_r()
    pu = np.zeros_like(vals)
    for m in range(len(lam)):
        c = h2 * lam[m] * inv_f2 + vr + h2 * q0 - E + 1j * sign * eps_shift
        pu[m, 1:-1] = (
            -h2 / dr**2 * (vals[m, 2:] - 2.0 * vals[m, 1:-1] + vals[m, :-2])
            + c[1:-1] * vals[m, 1:-1]
        )

    r_minus = r ** (-2.0 * s)
    r_plus = r ** (2.0 * s)
    u2 = np.sum(np.abs(vals) ** 2, axis=0)
    du2 = np.sum(np.abs(d_r_u) ** 2, axis=0)
    pu2 = np.sum(np.abs(pu) ** 2, axis=0)

    lhs = math.sqrt(_weighted_sq_integral(logw, r_minus * u2, dr, log_domain)) + math.sqrt(
        _weighted_sq_integral(logw, r_minus * du2, dr, log_domain)
    )
    f_a = math.exp(float(warp_log_f(warp, a)))
    rhs_res = (
        f_a**2
        / (eps_log * h)
        * math.sqrt(_weighted_sq_integral(logw, r_plus * pu2, dr, log_domain))
    )
    rhs_eps = (
        tau
        * f_a
        * math.sqrt(eps_shift)
        / math.sqrt(eps_log * h)
        * math.sqrt(_weighted_sq_integral(logw, u2, dr, log_domain))
    )
    denom = rhs_res + rhs_eps
    best = math.inf if denom == 0.0 and lhs > 0.0 else (0.0 if denom == 0.0 else lhs / denom)
    return CarlemanRatioReport(
        lhs=lhs,
        rhs_resolvent_term=rhs_res,
        rhs_epsilon_term=rhs_eps,
        best_C=best,
        sign=sign,
        n_points=len(r),
        dr=dr,
        log_weight_scale=phi_top / h,
    )
