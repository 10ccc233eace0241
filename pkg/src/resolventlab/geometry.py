"""Geometry of radial product ends with a prescribed warp profile.

An end is an interval [r0, infinity) crossed with a closed (n-1)-dimensional
slice, carrying the metric dr^2 + f(r)^2 * omega.  Everything downstream
(weights, phases, mode operators) consumes the warp through the small API
here: pointwise values f, f', f'', stable ratios f'/f and log f, the induced
effective potential q0, and the scale exponents predicted for the cutoff
resolvent norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "PolynomialWarp",
    "ExponentialWarp",
    "WarpFamily",
    "CompactSupportPotential",
    "DecayingPotential",
    "PotentialSpec",
    "ManifoldProfile",
    "BoundExponent",
    "Q0Condition",
    "warp_eval",
    "warp_log_f",
    "warp_fp_over_f",
    "q0_eval",
    "q0_closed_form",
    "q0_prime",
    "q0_condition_classify",
    "m0_compute",
    "predicted_bound_exponent",
    "resolve_r1",
    "certify_f_growth",
    "check_decay_envelope",
    "zero_potential",
    "square_well_potential",
    "double_bump_potential",
    "power_decay_potential",
]


@dataclass(frozen=True)
class PolynomialWarp:
    """Polynomially growing slice radius f(r) = r**k with k > 0."""

    k: float

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValueError(f"polynomial warp needs k > 0, got k={self.k}")


@dataclass(frozen=True)
class ExponentialWarp:
    """Exponentially growing slice radius f(r) = exp(r**alpha), 0 < alpha <= 1."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(
                f"exponential warp needs 0 < alpha <= 1, got alpha={self.alpha}"
            )


WarpFamily = Union[PolynomialWarp, ExponentialWarp]


def _as_positive_array(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radii must be strictly positive")
    return r


def warp_eval(warp: WarpFamily, r):
    """Return (f, f', f'') at the radii ``r``.

    Vectorized over ``r``; rejects nonpositive radii.  For the exponential
    family values overflow float64 once r**alpha exceeds ~709; callers that
    only need ratios should use ``warp_fp_over_f`` / ``warp_log_f`` instead.
    """
    r = _as_positive_array(r)
    if isinstance(warp, PolynomialWarp):
        k = warp.k
        f = r**k
        fp = k * r ** (k - 1.0)
        fpp = k * (k - 1.0) * r ** (k - 2.0)
        return f, fp, fpp
    a = warp.alpha
    f = np.exp(r**a)
    g = a * r ** (a - 1.0)  # (log f)'
    fp = g * f
    fpp = (g * g + a * (a - 1.0) * r ** (a - 2.0)) * f
    return f, fp, fpp


def warp_log_f(warp: WarpFamily, r) -> np.ndarray:
    """log f(r), safe for radii where f itself would overflow."""
    r = _as_positive_array(r)
    if isinstance(warp, PolynomialWarp):
        return warp.k * np.log(r)
    return r**warp.alpha


def warp_fp_over_f(warp: WarpFamily, r) -> np.ndarray:
    """The logarithmic derivative f'(r)/f(r), overflow-free."""
    r = _as_positive_array(r)
    if isinstance(warp, PolynomialWarp):
        return warp.k / r
    return warp.alpha * r ** (warp.alpha - 1.0)


def warp_f_inverse(warp: WarpFamily, value: float) -> float:
    """Smallest r > 0 with f(r) >= value (0 if f never dips below it)."""
    if value <= 0:
        return 0.0
    if isinstance(warp, PolynomialWarp):
        return float(value) ** (1.0 / warp.k)
    lv = np.log(value)
    if lv <= 0:
        return 0.0
    return float(lv) ** (1.0 / warp.alpha)


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class CompactSupportPotential:
    """Bounded measurable potential vanishing for r >= support_end."""

    profile: Callable[[np.ndarray], np.ndarray]
    support_end: float

    def __call__(self, r) -> np.ndarray:
        return np.asarray(self.profile(np.asarray(r, dtype=float)), dtype=float)


@dataclass(frozen=True)
class DecayingPotential:
    """Bounded potential with envelope |V(r)| <= envelope_const * r^-delta * f(r)^-2.

    delta > 1 is required; it feeds the weight construction and the predicted
    log powers.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    delta: float
    envelope_const: float

    def __post_init__(self) -> None:
        if not self.delta > 1:
            raise ValueError(f"decaying potential needs delta > 1, got {self.delta}")
        if not self.envelope_const >= 0:
            raise ValueError("envelope_const must be nonnegative")

    def __call__(self, r) -> np.ndarray:
        return np.asarray(self.profile(np.asarray(r, dtype=float)), dtype=float)


PotentialSpec = Union[CompactSupportPotential, DecayingPotential]


def zero_potential(support_end: float = 1.0) -> CompactSupportPotential:
    return CompactSupportPotential(lambda r: np.zeros_like(r), support_end)


def square_well_potential(
    v0: float, lo: float, hi: float, *, depth: float = 0.0, well_lo: float = 0.0
) -> CompactSupportPotential:
    """Square barrier of height v0 on [lo, hi]; optional well of depth<0 before it."""
    if not lo < hi:
        raise ValueError("barrier needs lo < hi")

    def V(r):
        out = np.where((r >= lo) & (r <= hi), v0, 0.0)
        if depth != 0.0:
            out = out + np.where((r >= well_lo) & (r < lo), depth, 0.0)
        return out

    return CompactSupportPotential(V, support_end=hi)


def double_bump_potential(
    v1: float, lo1: float, hi1: float, v2: float, lo2: float, hi2: float
) -> CompactSupportPotential:
    """Two square bumps; trapping between them when E sits below both tops."""
    if not (lo1 < hi1 <= lo2 < hi2):
        raise ValueError("bumps must be ordered and disjoint")

    def V(r):
        return np.where((r >= lo1) & (r <= hi1), v1, 0.0) + np.where(
            (r >= lo2) & (r <= hi2), v2, 0.0
        )

    return CompactSupportPotential(V, support_end=hi2)


def power_decay_potential(
    warp: WarpFamily, delta: float, amplitude: float
) -> DecayingPotential:
    """V(r) = amplitude * r^-delta * f(r)^-2, saturating its own envelope."""

    def V(r):
        r = np.asarray(r, dtype=float)
        return amplitude * r ** (-delta) * np.exp(-2.0 * warp_log_f(warp, r))

    return DecayingPotential(V, delta=delta, envelope_const=abs(amplitude))


def check_decay_envelope(potential: DecayingPotential, warp: WarpFamily, r) -> bool:
    """Sample the decay envelope on a grid; True if nowhere exceeded."""
    r = _as_positive_array(r)
    v = np.abs(potential(r))
    env = potential.envelope_const * r ** (-potential.delta) * np.exp(
        -2.0 * warp_log_f(warp, r)
    )
    return bool(np.all(v <= env * (1.0 + 1e-12) + 1e-300))


# ---------------------------------------------------------------------------
# manifold profile


@dataclass(frozen=True)
class ManifoldProfile:
    """Scene description: dimension, warp, end start r0, working start r1 >= r0.

    ``angular_spectrum`` optionally pins the slice Laplacian eigenvalues
    (nondecreasing, first entry 0 for a closed slice); when None the round
    sphere law l(l + n - 2) is used.  ``c_sharp`` is the ellipticity floor of
    the inverse slice metric.
    """

    n: int
    warp: WarpFamily
    r0: float
    r1: float
    c_sharp: float = 1.0
    angular_spectrum: Optional[tuple] = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("need dimension n >= 2")
        if not 0 < self.r0 <= self.r1:
            raise ValueError("need 0 < r0 <= r1")
        if not self.c_sharp > 0:
            raise ValueError("c_sharp must be positive")
        if self.angular_spectrum is not None:
            spec = np.asarray(self.angular_spectrum, dtype=float)
            if spec.ndim != 1 or len(spec) == 0:
                raise ValueError("angular_spectrum must be a 1-d sequence")
            if np.any(np.diff(spec) < 0) or spec[0] < 0:
                raise ValueError("angular_spectrum must be nonnegative, nondecreasing")

    def mode_eigenvalue(self, j: int) -> float:
        """j-th slice eigenvalue (multiplicities ignored)."""
        if j < 0:
            raise ValueError("mode index must be >= 0")
        if self.angular_spectrum is not None:
            if j >= len(self.angular_spectrum):
                raise IndexError(f"angular_spectrum has no mode {j}")
            return float(self.angular_spectrum[j])
        return float(j * (j + self.n - 2))


# ---------------------------------------------------------------------------
# effective potential q0


def q0_eval(profile: ManifoldProfile, r) -> np.ndarray:
    """Effective radial potential induced by the warp.

    q0 = (n-1)(n-3) f'^2 / (4 f^2) + (n-1) f'' / (2 f).  Computed from the
    stable ratio forms, so it is exact where the closed forms are (in
    particular identically 0 for n=3, k=1).
    """
    return _q0(profile.warp, profile.n, r)


def _q0(warp: WarpFamily, n: int, r) -> np.ndarray:
    r = _as_positive_array(r)
    if isinstance(warp, PolynomialWarp):
        k = warp.k
        fp_f = k / r
        fpp_f = k * (k - 1.0) / (r * r)
    else:
        a = warp.alpha
        g = a * r ** (a - 1.0)
        fp_f = g
        fpp_f = g * g + a * (a - 1.0) * r ** (a - 2.0)
    return (n - 1) * (n - 3) * fp_f * fp_f / 4.0 + (n - 1) * fpp_f / 2.0


def q0_closed_form(warp: WarpFamily, n: int, r) -> np.ndarray:
    """Independent closed forms for q0, one per family."""
    r = _as_positive_array(r)
    if isinstance(warp, PolynomialWarp):
        k = warp.k
        return k * (n - 1) * (k * n - k - 2.0) / (4.0 * r * r)
    a = warp.alpha
    return (
        a
        * (n - 1)
        * (a * (n - 1) + 2.0 * (a - 1.0) * r ** (-a))
        * r ** (2.0 * a - 2.0)
        / 4.0
    )


def q0_prime(warp: WarpFamily, n: int, r) -> np.ndarray:
    """Radial derivative of q0, analytic per family."""
    r = _as_positive_array(r)
    if isinstance(warp, PolynomialWarp):
        k = warp.k
        c0 = k * (n - 1) * (k * n - k - 2.0) / 4.0
        return -2.0 * c0 * r**-3.0
    a = warp.alpha
    pref = a * (n - 1) / 4.0
    return pref * (
        a * (n - 1) * (2.0 * a - 2.0) * r ** (2.0 * a - 3.0)
        + 2.0 * (a - 1.0) * (a - 2.0) * r ** (a - 3.0)
    )


@dataclass(frozen=True)
class Q0Condition:
    holds: bool
    reason: str


def q0_condition_classify(profile: ManifoldProfile) -> Q0Condition:
    """Whether q0 is bounded above with q0' <= C r^-1 f^-2 as r grows.

    The only failing corner is the polynomial family in dimension 2 with
    1 < k < 2: there q0 ~ r^-2 stays bounded but q0' ~ r^-3 decays slower
    than r^-1 f^-2 = r^-1-2k.
    """
    if isinstance(profile.warp, PolynomialWarp):
        k = profile.warp.k
        if profile.n == 2 and 1.0 < k < 2.0:
            return Q0Condition(False, "surface_with_warp_power_between_1_and_2")
        return Q0Condition(True, "polynomial_ok")
    return Q0Condition(True, "exponential_ok")


# ---------------------------------------------------------------------------
# weight scale m0 and predicted exponents


def m0_compute(warp: WarpFamily, potential: PotentialSpec) -> float:
    """Base exponent of the weight turning radius a = h^-m0 (before inflation)."""
    compact = isinstance(potential, CompactSupportPotential)
    if isinstance(warp, PolynomialWarp):
        k = warp.k
        if compact:
            return 2.0 / (3.0 * k)
        return max(2.0 / (3.0 * k), 1.0 / (potential.delta - 1.0))
    if compact:
        return 1.0
    return 1.0 / (potential.delta - 1.0)


@dataclass(frozen=True)
class BoundExponent:
    """Predicted growth log||R|| <= C h^-p (log 1/h)^log_power."""

    p: float
    log_power: float


def predicted_bound_exponent(
    profile: ManifoldProfile, potential: PotentialSpec
) -> BoundExponent:
    """Predicted (p, log power) for the cutoff resolvent norm growth.

    Polynomial warp with k < 1 keeps a genuine dependence on the potential
    class; k = 1 carries one log; k > 1 and all exponential warps flatten
    to the bare h^-4/3.  The exponential + merely-decaying combination is
    only admissible for delta > 3 alpha / 4 + 1.
    """
    warp = profile.warp
    compact = isinstance(potential, CompactSupportPotential)
    if isinstance(warp, ExponentialWarp):
        if not compact:
            need = 3.0 * warp.alpha / 4.0 + 1.0
            if not potential.delta > need:
                raise ValueError(
                    "exponential warp with a decaying potential needs "
                    f"delta > 3*alpha/4 + 1 = {need}, got delta={potential.delta}"
                )
        return BoundExponent(4.0 / 3.0, 0.0)
    k = warp.k
    if k < 1.0:
        if compact:
            return BoundExponent(2.0 * (k + 1.0) / (3.0 * k), 0.0)
        m0 = m0_compute(warp, potential)
        return BoundExponent(
            4.0 / 3.0 + m0 * (1.0 - k), (1.0 - k) / (potential.delta - 1.0)
        )
    if k == 1.0:
        return BoundExponent(4.0 / 3.0, 1.0)
    return BoundExponent(4.0 / 3.0, 0.0)


# ---------------------------------------------------------------------------
# helpers used when assembling scenes


def resolve_r1(
    warp: WarpFamily,
    b: float,
    r0: float,
    potential: Optional[PotentialSpec] = None,
    anchor: Optional[float] = None,
) -> float:
    """Smallest working radius with f(r1) >= 2 b, at least r0.

    For a compact-support potential r1 is also pushed past the support.  When
    ``anchor`` is given the result is rounded up to the next multiple of it.
    """
    if b < 0:
        raise ValueError("b must be nonnegative")
    r1 = max(r0, warp_f_inverse(warp, 2.0 * b))
    if isinstance(potential, CompactSupportPotential):
        r1 = max(r1, potential.support_end)
    if anchor is not None:
        if anchor <= 0:
            raise ValueError("anchor must be positive")
        r1 = anchor * np.ceil(r1 / anchor - 1e-12)
    return float(r1)


def certify_f_growth(warp: WarpFamily, r_grid) -> float:
    """Certify f' >= C~ r^-1 f on a grid and return the constant.

    Returns min over the grid of r f'(r)/f(r), which is exactly k for the
    polynomial family and alpha * r_min^alpha for the exponential one; also
    checks strict monotonicity of f through log f.
    """
    r = _as_positive_array(r_grid)
    if len(r) >= 2:
        if np.any(np.diff(warp_log_f(warp, np.sort(r))) <= 0):
            raise ValueError("warp is not strictly increasing on the grid")
    c = np.min(r * warp_fp_over_f(warp, r))
    if not c > 0:
        raise ValueError("growth certificate failed: r f'/f not positive")
    return float(c)
