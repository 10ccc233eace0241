"""Direct measurement of cutoff resolvent norms on warped ends.

The weighted norm ||chi_s (P - E +- i eps)^-1 chi_s|| is computed mode by
mode: for each angular eigenvalue the tridiagonal operator is conjugated by
the cutoff weight and its smallest singular value extracted by banded
inverse iteration; the norm is the largest reciprocal over the retained
modes.  On top sit h-sweeps with a fixed points-per-wavelength policy,
power/log exponent fits of log||R||, and consistency checks against the
predicted growth shape C h^-p (log 1/h)^q.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .fitting import ExponentFit, fit_power_log
from .geometry import ManifoldProfile, predicted_bound_exponent, warp_log_f
from .operators import ModeOperator, build_mode_operator, make_radial_grid
from .phaseweight import CarlemanParams
from .tridiag import SigmaMinResult, sigma_lower_bound, sigma_min_tridiagonal

__all__ = [
    "BoundCheck",
    "HSweepEntry",
    "ModeScan",
    "NormResult",
    "RadialGridSpec",
    "SweepResult",
    "bound_check",
    "cutoff_resolvent_norm",
    "fit_exponent",
    "h_sweep",
    "mode_monotonicity_check",
    "scenario_grid",
    "sigma_min",
    "trapped_level_energy",
    "tunneling_action",
]

MODE_CUTOFF_MARGIN = 2.0
TRUNCATION_TOL = 0.05


@dataclass(frozen=True)
class RadialGridSpec:
    """Grid policy for norm measurements: domain end, resolution, memory cap.

    ``grid_energy`` pins the reference energy of the wavelength rule; leave
    it None to use the measurement energy.  Pinning matters when a sweep
    re-locks E leg by leg (energies within one scenario must share a grid,
    otherwise each lock lands on the spectrum of a different matrix).
    """

    r_max: float
    points_per_wavelength: float = 16.0
    n_cap: int = 400_000
    grid_energy: Optional[float] = None


def _weighted_bands(op: ModeOperator, weighted: bool) -> Tuple[np.ndarray, np.ndarray]:
    d = op.diag
    e = op.offdiag
    if weighted:
        w = op.weight
        d = d / (w * w)
        e = e / (w[:-1] * w[1:])
    return d, e


def sigma_min(op: ModeOperator, weighted: bool = True, seed: int = 20260814) -> float:
    """Smallest singular value of the mode operator, optionally conjugated by
    the cutoff weight on both sides (diagonal scaling, still tridiagonal)."""
    d, e = _weighted_bands(op, weighted)
    res: SigmaMinResult = sigma_min_tridiagonal(e, d, e, seed=seed)
    return res.value


@dataclass(frozen=True)
class ModeScan:
    """Per-mode record of the norm measurement.

    ``sigma[j]`` is the measured smallest singular value where
    ``evaluated[j]`` is True; for the remaining modes the iterative solve
    was skipped because the diagonal-dominance bound already certified
    ``sigma_min >= sigma[j] > min(measured)``, so they cannot carry the
    norm and ``sigma[j]`` stores that certified lower bound instead.
    """

    mode_eigenvalues: np.ndarray
    sigma: np.ndarray
    evaluated: np.ndarray


@dataclass(frozen=True)
class NormResult:
    norm: float
    dominant_mode: int
    modes_used: int
    n_grid: int
    scan: ModeScan
    excluded_sigma: float
    truncation_stable: Optional[bool]
    flags: Tuple[str, ...]


def _scenario_grid(
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    grid_spec: RadialGridSpec,
    probe_points: int = 4096,
) -> np.ndarray:
    """Measurement grid for one scenario leg (wavelength rule + |V| probe)."""
    vmax_probe = np.linspace(profile.r1, grid_spec.r_max, probe_points)
    v_max = float(np.max(np.abs(np.asarray(potential(vmax_probe), dtype=float))))
    energy = grid_spec.grid_energy if grid_spec.grid_energy is not None else params.E
    return make_radial_grid(
        profile.r1,
        grid_spec.r_max,
        params.h,
        energy,
        v_max=v_max,
        points_per_wavelength=grid_spec.points_per_wavelength,
    )


def _mode_count(profile: ManifoldProfile, params: CarlemanParams, r_max: float, margin: float) -> int:
    """Smallest j with h^2 lambda_j min(f^-2) > E + margin; modes below are kept."""
    h2 = params.h * params.h
    inv_f2_min = math.exp(-2.0 * float(warp_log_f(profile.warp, r_max)))
    j = 0
    while h2 * profile.mode_eigenvalue(j) * inv_f2_min <= params.E + margin:
        j += 1
        if j > 10_000_000:
            raise RuntimeError("mode cutoff criterion not satisfiable")
    return j


def scenario_grid(
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    grid_spec: RadialGridSpec,
) -> np.ndarray:
    """The measurement grid a norm computation will use for this scenario."""
    return _scenario_grid(profile, potential, params, grid_spec)


def cutoff_resolvent_norm(
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    grid_spec: RadialGridSpec,
    *,
    sign: int = 1,
    weighted: bool = True,
    margin: float = MODE_CUTOFF_MARGIN,
    seed: int = 20260814,
    check_truncation: bool = False,
) -> NormResult:
    """Max over retained modes of 1 / sigma_min(weighted mode operator).

    Modes are kept while h^2 lambda_j min(f^-2) <= E + margin; the first
    excluded mode is measured too and must contribute strictly less than the
    retained maximum, otherwise the cutoff criterion failed and a RuntimeError
    reports both values.  With ``check_truncation`` the whole measurement is
    repeated on a domain twice as long; disagreement beyond 5% flags the
    result rather than silently returning it.
    """
    grid = _scenario_grid(profile, potential, params, grid_spec)
    if len(grid) > grid_spec.n_cap:
        raise RuntimeError(
            f"grid of {len(grid)} points exceeds the cap {grid_spec.n_cap}"
        )
    n_modes = _mode_count(profile, params, grid_spec.r_max, margin)

    # Cheap pass: a certified lower bound on sigma_min per mode.  Modes whose
    # bound exceeds the smallest measured sigma cannot carry the norm, so the
    # iterative solve is skipped for them (this removes the elliptic tail of
    # the mode range, where inverse iteration converges slowest and matters
    # least).  Visiting modes in order of increasing bound makes the skip
    # exact: once a bound passes the running minimum, all later ones do too.
    bounds = np.empty(n_modes)
    for j in range(n_modes):
        op = build_mode_operator(profile, potential, params, j, grid, sign=sign)
        d, e = _weighted_bands(op, weighted)
        bounds[j] = sigma_lower_bound(e, d, e)

    sigmas = bounds.copy()
    evaluated = np.zeros(n_modes, dtype=bool)
    best = math.inf
    for j in np.argsort(bounds, kind="stable"):
        if bounds[j] >= best:
            break
        op = build_mode_operator(profile, potential, params, int(j), grid, sign=sign)
        sigmas[j] = sigma_min(op, weighted=weighted, seed=seed + 7919 * int(j))
        evaluated[j] = True
        best = min(best, float(sigmas[j]))
    dominant = int(np.argmin(np.where(evaluated, sigmas, np.inf)))
    norm = 1.0 / float(sigmas[dominant])

    op_exc = build_mode_operator(profile, potential, params, n_modes, grid, sign=sign)
    d_exc, e_exc = _weighted_bands(op_exc, weighted)
    sigma_exc = sigma_lower_bound(e_exc, d_exc, e_exc)
    if sigma_exc <= 0.0 or 1.0 / sigma_exc > norm:
        sigma_exc = sigma_min(op_exc, weighted=weighted, seed=seed + 7919 * n_modes)
    if 1.0 / sigma_exc > norm:
        raise RuntimeError(
            f"first excluded mode (j={n_modes}) contributes 1/sigma="
            f"{1.0 / sigma_exc:.6g} above the retained maximum {norm:.6g}; "
            "raise the cutoff margin"
        )

    flags: Tuple[str, ...] = ()
    trunc_stable: Optional[bool] = None
    if check_truncation:
        wide = replace(grid_spec, r_max=2.0 * grid_spec.r_max)
        wide_res = cutoff_resolvent_norm(
            profile, potential, params, wide,
            sign=sign, weighted=weighted, margin=margin, seed=seed,
            check_truncation=False,
        )
        rel = abs(wide_res.norm - norm) / norm
        trunc_stable = rel <= TRUNCATION_TOL
        if not trunc_stable:
            flags = ("truncation_unstable",)

    lam = np.array([profile.mode_eigenvalue(j) for j in range(n_modes)])
    return NormResult(
        norm=norm,
        dominant_mode=dominant,
        modes_used=n_modes,
        n_grid=len(grid),
        scan=ModeScan(mode_eigenvalues=lam, sigma=sigmas, evaluated=evaluated),
        excluded_sigma=float(sigma_exc),
        truncation_stable=trunc_stable,
        flags=flags,
    )


def mode_monotonicity_check(
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    grid_spec: RadialGridSpec,
    n_samples: int = 3,
    *,
    sign: int = 1,
    weighted: bool = True,
    seed: int = 20260814,
) -> np.ndarray:
    """sigma_min at the first ``n_samples`` modes past the cutoff; elliptic
    shifts grow with lambda_j, so the sequence should be nondecreasing."""
    grid = _scenario_grid(profile, potential, params, grid_spec, probe_points=2048)
    j0 = _mode_count(profile, params, grid_spec.r_max, MODE_CUTOFF_MARGIN)
    out = np.empty(n_samples)
    for i in range(n_samples):
        op = build_mode_operator(profile, potential, params, j0 + i, grid, sign=sign)
        out[i] = sigma_min(op, weighted=weighted, seed=seed + 7919 * (j0 + i))
    return out


def tunneling_action(potential, lo: float, hi: float, energy: float, n: int = 20001) -> float:
    """Doubled barrier action 2 * integral of sqrt(max(V - E, 0)) over [lo, hi].

    The width of a trapped level behind the barrier shrinks like
    exp(-2S/h) with this S; ``exp(-tunneling_action(...)/h)`` is therefore
    the natural spectral-shift scale for a trapping sweep.
    """
    r = np.linspace(lo, hi, n)
    v = np.asarray(potential(r), dtype=float)
    integrand = np.sqrt(np.maximum(v - energy, 0.0))
    return 2.0 * float(np.trapezoid(integrand, r))


def trapped_level_energy(
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    grid_spec: RadialGridSpec,
    *,
    well: Tuple[float, float],
    mode_index: int = 0,
    window: float = 0.25,
    min_mass: float = 0.5,
) -> float:
    """Eigenvalue of the self-adjoint part nearest ``params.E`` whose
    eigenstate lives in the well.

    The self-adjoint part of the chosen mode operator (the operator with
    epsilon_shift = 0, a real symmetric tridiagonal matrix) is
    diagonalised over ``[E - window, E + window]``; levels whose L2 mass
    inside ``well`` is at least ``min_mass`` are trapped candidates, and
    the one closest to E is returned.  Measuring the norm exactly at a
    trapped level with an epsilon at the tunneling-width scale exhibits
    the exponential trapping growth that an open-boundary measurement
    would show; use it as the ``e_policy`` of a trapping sweep.
    """
    from scipy.linalg import eigh_tridiagonal

    grid = _scenario_grid(profile, potential, params, grid_spec)
    op = build_mode_operator(profile, potential, params, mode_index, grid)
    shifted = op.diag.real + params.E  # absolute energies: T = (P-mode part)
    levels, states = eigh_tridiagonal(
        shifted, op.offdiag.real, select="v",
        select_range=(params.E - window, params.E + window),
    )
    if levels.size == 0:
        raise RuntimeError(
            f"no level of mode {mode_index} within {window} of E={params.E}; "
            "widen the window"
        )
    inside = (op.interior >= well[0]) & (op.interior <= well[1])
    mass = np.sum(np.abs(states[inside, :]) ** 2, axis=0)
    trapped = mass >= min_mass
    if not np.any(trapped):
        raise RuntimeError(
            f"no trapped level (well mass >= {min_mass}) of mode {mode_index} "
            f"within {window} of E={params.E}"
        )
    cand = np.where(trapped)[0]
    pick = cand[np.argmin(np.abs(levels[cand] - params.E))]
    return float(levels[pick])


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class HSweepEntry:
    h: float
    epsilon_shift: float
    norm: float
    dominant_mode: int
    modes_used: int
    n_grid: int
    time_ms: float
    flags: Tuple[str, ...]


@dataclass(frozen=True)
class SweepResult:
    entries: Tuple[HSweepEntry, ...]
    sign: int
    E: float
    weighted: bool
    grid_spec: RadialGridSpec

    @property
    def h(self) -> np.ndarray:
        return np.array([e.h for e in self.entries])

    @property
    def norms(self) -> np.ndarray:
        return np.array([e.norm for e in self.entries])

    def clean(self) -> "SweepResult":
        kept = tuple(e for e in self.entries if not e.flags and np.isfinite(e.norm))
        return replace(self, entries=kept)


def h_sweep(
    profile: ManifoldProfile,
    potential,
    params_template: CarlemanParams,
    h_list: Sequence[float],
    grid_spec: RadialGridSpec,
    *,
    sign: int = 1,
    weighted: bool = True,
    eps_policy: Optional[Callable[[float], float]] = None,
    e_policy: Optional[Callable[[float], float]] = None,
    workers: int = 1,
    seed: int = 20260814,
    check_truncation_at_largest: bool = True,
) -> SweepResult:
    """Measure the cutoff norm over decreasing h with a fixed resolution policy.

    ``eps_policy`` maps h to the spectral shift and ``e_policy`` to the
    working energy (defaults: the template's fixed values; an energy policy
    supports resonance-locked trapping sweeps).  Work per h is independent;
    ``workers`` > 1 runs them in a thread pool (LAPACK releases the GIL)
    with results reduced in h order.  A grid exceeding the cap aborts only
    that h, leaving a flagged entry.
    """
    h_list = list(h_list)
    if len(h_list) < 5:
        raise ValueError("need at least 5 h values")
    if not all(h_list[i] > h_list[i + 1] for i in range(len(h_list) - 1)):
        raise ValueError("h_list must be strictly decreasing")

    def one(idx_h: Tuple[int, float]) -> HSweepEntry:
        idx, h = idx_h
        eps = eps_policy(h) if eps_policy is not None else params_template.epsilon_shift
        energy = e_policy(h) if e_policy is not None else params_template.E
        params = replace(params_template, h=h, epsilon_shift=eps, E=energy)
        t0 = time.perf_counter()
        try:
            res = cutoff_resolvent_norm(
                profile, potential, params, grid_spec,
                sign=sign, weighted=weighted, seed=seed + 104729 * idx,
                check_truncation=(idx == 0 and check_truncation_at_largest),
            )
        except RuntimeError as exc:
            if "exceeds the cap" not in str(exc):
                raise
            return HSweepEntry(
                h=h, epsilon_shift=eps, norm=float("nan"), dominant_mode=-1,
                modes_used=0, n_grid=0, time_ms=0.0, flags=("memory_cap",),
            )
        dt = (time.perf_counter() - t0) * 1e3
        return HSweepEntry(
            h=h, epsilon_shift=eps, norm=res.norm, dominant_mode=res.dominant_mode,
            modes_used=res.modes_used, n_grid=res.n_grid, time_ms=dt, flags=res.flags,
        )

    items = list(enumerate(h_list))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = tuple(pool.map(one, items))
    else:
        entries = tuple(one(it) for it in items)
    return SweepResult(
        entries=entries, sign=sign, E=params_template.E, weighted=weighted,
        grid_spec=grid_spec,
    )


def fit_exponent(sweep: SweepResult, log_power: Optional[float] = None) -> ExponentFit:
    """Fit log||R|| = c h^-p (log 1/h)^q over the sweep's unflagged entries.

    q is pinned when ``log_power`` is given, otherwise chosen from {0, 1} by
    residual.  Non-monotone log-norms are fitted anyway and flagged.
    """
    cleaned = sweep.clean()
    h = cleaned.h
    y = np.log(cleaned.norms)
    if len(h) < 5:
        raise ValueError("need at least 5 clean sweep points to fit")
    if np.any(cleaned.norms <= 1.0):
        raise ValueError("norms must exceed 1 so that log norms are positive")
    fit = fit_power_log(h, y, log_power=log_power)
    if np.any(np.diff(y) <= 0.0):  # h decreasing, norms should grow
        fit = replace(fit, flags=fit.flags + ("non_monotone",))
    return fit


@dataclass(frozen=True)
class BoundCheck:
    consistent: bool
    implied_C: float
    p: float
    log_power: float
    per_h_ratio: np.ndarray


def bound_check(sweep: SweepResult, profile: ManifoldProfile, potential) -> BoundCheck:
    """Compare measured growth against the predicted shape C h^-p (log 1/h)^q.

    implied_C is the largest per-h ratio log||R|| / (h^-p (log 1/h)^q);
    consistency additionally demands the ratios stop growing on the final
    third of the sweep (smallest h), i.e. the measurements never outgrow the
    predicted shape.
    """
    pred = predicted_bound_exponent(profile, potential)
    cleaned = sweep.clean()
    h = cleaned.h
    y = np.log(cleaned.norms)
    shape = h ** (-pred.p) * np.log(1.0 / h) ** pred.log_power
    ratio = y / shape
    implied = float(np.max(ratio))
    tail = ratio[-max(2, len(ratio) // 3):]
    nonincreasing = bool(np.all(np.diff(tail) <= 1e-9 * np.abs(tail[:-1])))
    consistent = bool(np.all(np.isfinite(ratio))) and nonincreasing
    return BoundCheck(
        consistent=consistent,
        implied_C=implied,
        p=pred.p,
        log_power=pred.log_power,
        per_h_ratio=ratio,
    )
