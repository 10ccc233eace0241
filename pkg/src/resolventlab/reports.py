"""Deterministic artifact emission: CSV tables, JSON reports, SVG series plots.

Byte-identical re-runs are a contract here.  Every float is written with
repr's shortest round-trip form, JSON keys are sorted, and anything that
varies between runs (wall-clock timings) goes to a sidecar table, never
into the deterministic files.  SVG output is a convenience layer drawn by
hand from the same series the CSV records; the CSV is the contract.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .phaseweight import KeyInequalityReport, WeightPhaseProfile, margin_components
from .fitting import ExponentFit
from .resolvent import BoundCheck, SweepResult

__all__ = [
    "bound_check_report",
    "carleman_suite_report",
    "certificate_report",
    "float_str",
    "histogram_table",
    "load_csv",
    "load_json",
    "loglog_series",
    "manifest_report",
    "profile_table",
    "sha256_of",
    "svg_series_plot",
    "sweep_metadata",
    "sweep_table",
    "sweep_timing_table",
    "write_csv",
    "write_json",
]


def float_str(x) -> str:
    """Shortest decimal string that round-trips to the same float64."""
    return repr(float(x))


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return float_str(x)
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path) -> Tuple[List[str], List[List[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def _plain(obj):
    """Recursively convert numpy/dataclass containers to JSON-ready python."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return str(obj)


def write_json(path, obj) -> None:
    text = json.dumps(_plain(obj), sort_keys=True, indent=2)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def sha256_of(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# ---------------------------------------------------------------------------
# phase-weight profile artifacts

PROFILE_COLUMNS = (
    "r", "mu", "mu_prime", "phi", "phi_prime", "phi_second", "A", "B", "margin",
)


def profile_table(
    prof: WeightPhaseProfile, report: Optional[KeyInequalityReport] = None
) -> Tuple[Tuple[str, ...], List[List[float]]]:
    """Tabulate the weight profile with its pointwise certificate margins."""
    a_term, b_term, corr = margin_components(
        prof, None if report is None else report.tau0
    )
    if report is None:
        p = prof.params
        margins = a_term - p.ineq_const_C * b_term - corr + 0.5 * p.E
    else:
        margins = report.margins
    cols = [
        prof.grid, prof.mu, prof.mu_prime, prof.phi, prof.phi_prime,
        prof.phi_second, a_term, b_term, margins,
    ]
    rows = [[float(c[i]) for c in cols] for i in range(prof.grid.size)]
    return PROFILE_COLUMNS, rows


def certificate_report(
    prof: WeightPhaseProfile, report: KeyInequalityReport
) -> Dict[str, object]:
    m = np.asarray(report.margins, dtype=float)
    return {
        "params": _plain(prof.params),
        "scales": _plain(prof.scales),
        "holds": bool(report.holds),
        "worst_r": float(report.worst_r),
        "worst_margin": float(report.worst_margin),
        "tau0": float(report.tau0),
        "margins_summary": {
            "min": float(m.min()),
            "max": float(m.max()),
            "mean": float(m.mean()),
            "n": int(m.size),
            "n_negative": int(np.sum(m < 0.0)),
        },
        "grid": {
            "n": int(prof.grid.size),
            "r_min": float(prof.grid[0]),
            "r_max": float(prof.grid[-1]),
        },
    }


# ---------------------------------------------------------------------------
# sweep artifacts

SWEEP_COLUMNS = ("h", "norm", "dominant_mode", "N")


def sweep_table(sweep: SweepResult):
    rows = [[e.h, e.norm, e.dominant_mode, e.n_grid] for e in sweep.entries]
    return SWEEP_COLUMNS, rows


def sweep_timing_table(sweep: SweepResult):
    """Wall-clock sidecar; the only table allowed to differ between runs."""
    return ("h", "time_ms"), [[e.h, e.time_ms] for e in sweep.entries]


def sweep_metadata(
    sweep: SweepResult,
    fit: Optional[ExponentFit] = None,
    check: Optional[BoundCheck] = None,
) -> Dict[str, object]:
    entries = []
    for e in sweep.entries:
        d = _plain(e)
        d.pop("time_ms")  # timings live in the sidecar only
        entries.append(d)
    out: Dict[str, object] = {
        "sign": int(sweep.sign),
        "E": float(sweep.E),
        "weighted": bool(sweep.weighted),
        "grid_spec": _plain(sweep.grid_spec),
        "entries": entries,
    }
    if fit is not None:
        out["fit"] = _plain(fit)
    if check is not None:
        out["bound_check"] = bound_check_report(check)
    return out


def bound_check_report(check: BoundCheck) -> Dict[str, object]:
    return {
        "consistent": bool(check.consistent),
        "implied_C": float(check.implied_C),
        "p": float(check.p),
        "log_power": float(check.log_power),
        "per_h_ratio": [float(v) for v in check.per_h_ratio],
    }


def loglog_series(sweep: SweepResult, fit: Optional[ExponentFit] = None):
    """(log 1/h, log log norm) series rows, with a fitted overlay column.

    Entries whose norm does not exceed 1 have no doubly-logarithmic image
    and are skipped, as are failed (NaN) legs.
    """
    header = ["log_inv_h", "loglog_norm"] + ([] if fit is None else ["loglog_fit"])
    rows = []
    for e in sweep.entries:
        if not math.isfinite(e.norm) or e.norm <= 1.0:
            continue
        row = [math.log(1.0 / e.h), math.log(math.log(e.norm))]
        if fit is not None:
            # the fitted model is for log(norm) itself, so one more log
            # lands it on this plot's doubly-logarithmic y axis
            yf = float(fit.predict(e.h))
            row.append(math.log(yf) if yf > 0.0 else float("nan"))
        rows.append(row)
    return tuple(header), rows


# ---------------------------------------------------------------------------
# carleman suite artifacts


def carleman_suite_report(trials, grid_meta: Dict[str, object]) -> Dict[str, object]:
    """Per-trial lhs/rhs breakdown with the suite-level best_C summary."""
    rows = [_plain(t) for t in trials]
    best = [t.best_C for t in trials if math.isfinite(t.best_C)]
    return {
        "trials": rows,
        "n_trials": len(rows),
        "best_C_max": float(max(best)) if best else float("nan"),
        "best_C_mean": float(np.mean(best)) if best else float("nan"),
        "grid": dict(grid_meta),
    }


def histogram_table(values, n_bins: int = 10, lo=None, hi=None):
    vals = np.asarray([v for v in np.asarray(values, dtype=float) if math.isfinite(v)])
    lo = float(vals.min()) if lo is None else float(lo)
    hi = float(vals.max()) if hi is None else float(hi)
    if hi <= lo:
        hi = lo + 1.0
    counts, edges = np.histogram(vals, bins=n_bins, range=(lo, hi))
    rows = [
        [float(edges[i]), float(edges[i + 1]), int(counts[i])]
        for i in range(n_bins)
    ]
    return ("bin_left", "bin_right", "count"), rows


# ---------------------------------------------------------------------------
# run manifest


def manifest_report(
    command: str,
    config: Dict[str, object],
    seed: int,
    out_dir,
    files: Sequence[str],
    version: str,
) -> Dict[str, object]:
    """Digest of a run: config echo plus content hashes of every artifact.

    Deliberately carries no timestamps, so the manifest itself is part of
    the byte-identical surface.
    """
    import os

    return {
        "command": command,
        "config": {str(k): _plain(v) for k, v in sorted(config.items())},
        "seed": int(seed),
        "version": version,
        "files": {name: sha256_of(os.path.join(out_dir, name)) for name in sorted(files)},
    }


# ---------------------------------------------------------------------------
# SVG series plots (hand-rolled so output is bit-stable across environments)

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_W, _H = 640.0, 480.0
_ML, _MR, _MT, _MB = 72.0, 24.0, 44.0, 56.0


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def svg_series_plot(
    path,
    x: Sequence[float],
    series: Sequence[Tuple[str, Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> None:
    """Polyline plot of one or more y-series against a shared x axis."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for _, y in series]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.array([0.0])
    x_lo, x_hi = float(x.min()), float(x.max())
    y_lo, y_hi = float(finite.min()), float(finite.max())
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(v):
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W:.0f}" height="{_H:.0f}" '
        f'viewBox="0 0 {_W:.0f} {_H:.0f}">',
        f'<rect width="{_W:.0f}" height="{_H:.0f}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="24" font-size="15" text-anchor="middle" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # frame and ticks
    out.append(
        f'<rect x="{_ML:.1f}" y="{_MT:.1f}" width="{_W - _ML - _MR:.1f}" '
        f'height="{_H - _MT - _MB:.1f}" fill="none" stroke="#444" stroke-width="1"/>'
    )
    for tv in _ticks(x_lo, x_hi):
        px = sx(tv)
        out.append(
            f'<line x1="{px:.2f}" y1="{_H - _MB:.1f}" x2="{px:.2f}" '
            f'y2="{_H - _MB + 5:.1f}" stroke="#444"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{_H - _MB + 20:.1f}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{_fmt(tv)}</text>'
        )
    for tv in _ticks(y_lo, y_hi):
        py = sy(tv)
        out.append(
            f'<line x1="{_ML - 5:.1f}" y1="{py:.2f}" x2="{_ML:.1f}" y2="{py:.2f}" '
            f'stroke="#444"/>'
        )
        out.append(
            f'<text x="{_ML - 8:.1f}" y="{py + 4:.2f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{_fmt(tv)}</text>'
        )
    out.append(
        f'<text x="{_W / 2:.1f}" y="{_H - 12:.1f}" font-size="13" text-anchor="middle" '
        f'font-family="sans-serif">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{_H / 2:.1f}" font-size="13" text-anchor="middle" '
        f'font-family="sans-serif" transform="rotate(-90 18 {_H / 2:.1f})">{ylabel}</text>'
    )
    for k, (label, y) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        yv = np.asarray(y, dtype=float)
        ok = np.isfinite(yv)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], yv[ok]))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for a, b in zip(x[ok], yv[ok]):
            out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{color}"/>')
        out.append(
            f'<text x="{_W - _MR - 6:.1f}" y="{_MT + 16 + 16 * k:.1f}" font-size="12" '
            f'text-anchor="end" font-family="sans-serif" fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
