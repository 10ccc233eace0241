"""Power-law-with-log fits for quantities measured along an h sweep.

The model is y = c * h^-p * (log 1/h)^q, fitted linearly in log space.  The
log power q may be pinned (the usual case: it comes from a prediction) or
left free, in which case the design matrix gains a log log(1/h) column.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["ExponentFit", "fit_power_log"]


@dataclass(frozen=True)
class ExponentFit:
    """Result of fitting y = c * h^-p * (log 1/h)^q on an h sweep."""

    coefficient: float
    exponent: float
    log_power: float
    log_power_fixed: bool
    residual_rms: float
    h_min: float
    h_max: float
    n_points: int
    flags: tuple = field(default_factory=tuple)

    def predict(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        L = np.log(1.0 / h)
        return self.coefficient * h ** (-self.exponent) * L**self.log_power


def fit_power_log(h, y, log_power: Optional[float] = None) -> ExponentFit:
    """Least squares for log y = log c + p log(1/h) + q log log(1/h).

    ``y`` must be positive; h must lie in (0, 1/e) when the log power is free
    or nonzero so that log log(1/h) is defined.  Non-monotone y is fitted
    anyway but flagged.
    """
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    if h.shape != y.shape or h.ndim != 1:
        raise ValueError("h and y must be matching 1-d arrays")
    if len(h) < (2 if log_power is not None else 3):
        raise ValueError("not enough sweep points for the fit")
    if np.any(h <= 0) or np.any(h >= 1):
        raise ValueError("h values must lie in (0, 1)")
    if np.any(y <= 0):
        raise ValueError("fit requires positive y values")

    order = np.argsort(h)[::-1]  # largest h first
    h, y = h[order], y[order]
    L = np.log(1.0 / h)
    logy = np.log(y)

    flags = []
    if np.any(np.diff(y) <= 0):
        flags.append("non_monotone")

    if log_power is not None:
        if log_power != 0.0 and np.any(L <= 0):
            raise ValueError("log power needs h < 1")
        target = logy - log_power * np.log(np.where(L > 0, L, 1.0))
        X = np.column_stack([np.ones_like(L), L])
        coef, *_ = np.linalg.lstsq(X, target, rcond=None)
        logc, p = coef
        q = float(log_power)
        resid = target - X @ coef
        fixed = True
    else:
        if np.any(L <= 1e-12):
            raise ValueError("free log power needs h < 1/e")
        X = np.column_stack([np.ones_like(L), L, np.log(L)])
        coef, *_ = np.linalg.lstsq(X, logy, rcond=None)
        logc, p, q = coef
        resid = logy - X @ coef
        fixed = False

    return ExponentFit(
        coefficient=float(np.exp(logc)),
        exponent=float(p),
        log_power=float(q),
        log_power_fixed=fixed,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        h_min=float(h.min()),
        h_max=float(h.max()),
        n_points=len(h),
        flags=tuple(flags),
    )
