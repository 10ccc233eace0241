"""Command-line drivers: scenario configs in, deterministic artifacts out.

A scenario lives in a flat text file of dotted keys (``params.h = 0.05``),
one scenario per file, so experiment provenance is a plain diff.  Every
command writes its tables and reports under a run directory together with
a manifest of content hashes.  Wall-clock timings go to ``timing.csv``,
which is excluded from the manifest: everything else is byte-identical
given the same config and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from .carleman import (
    carleman_ratio,
    exact_metric_perturbation,
    phi_matrix_check,
    quasimode_testfunction,
    windowed_random_testfunction,
)
from .chain import BallCoverGraph, chain_constants, chain_find, gamma_aggregate, kappa_schedule, q_factors
from .geometry import (
    CompactSupportPotential,
    ExponentialWarp,
    ManifoldProfile,
    PolynomialWarp,
    double_bump_potential,
    power_decay_potential,
    predicted_bound_exponent,
    square_well_potential,
    zero_potential,
)
from .operators import build_mode_operator
from .phaseweight import (
    CarlemanParams,
    GridSpec,
    build_profile,
    check_key_inequality,
    derive_scales,
    find_admissible_tau0,
    phase_max_scaling,
    phi_eval,
)
from .reports import (
    carleman_suite_report,
    certificate_report,
    float_str,
    histogram_table,
    loglog_series,
    manifest_report,
    profile_table,
    sweep_metadata,
    sweep_table,
    sweep_timing_table,
    svg_series_plot,
    write_csv,
    write_json,
)
from .resolvent import (
    RadialGridSpec,
    bound_check,
    cutoff_resolvent_norm,
    fit_exponent,
    h_sweep,
    scenario_grid,
    trapped_level_energy,
    tunneling_action,
)
from .tridiag import dense_sigma_min, sigma_min_tridiagonal

__all__ = [
    "cmd_carleman",
    "cmd_chain",
    "cmd_profile",
    "cmd_resolve",
    "cmd_sweep",
    "load_config",
    "main",
    "parse_config_text",
]

VERSION = "0.1.0"
DEFAULT_SEED = 20260814


# ---------------------------------------------------------------------------
# config files: flat dotted keys


def parse_config_text(text: str) -> Dict[str, str]:
    cfg: Dict[str, str] = {}
    for n, raw in enumerate(text.split("\n"), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected 'key = value', got {line!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if key in cfg:
            raise ValueError(f"config line {n}: duplicate key {key!r}")
        cfg[key] = val.strip()
    return cfg


def load_config(path: str) -> Dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


_REQUIRED = object()


def _get(cfg: Dict[str, str], key: str, default=_REQUIRED, cast=float):
    if key not in cfg:
        if default is _REQUIRED:
            raise KeyError(f"config key {key!r} is required")
        return default
    raw = cfg[key]
    if cast is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"config key {key!r}: expected a boolean, got {raw!r}")
    return cast(raw)


# ---------------------------------------------------------------------------
# scenario assembly


def manifold_from_config(cfg: Dict[str, str]) -> ManifoldProfile:
    kind = _get(cfg, "manifold.warp.kind", "polynomial", str)
    if kind == "polynomial":
        warp = PolynomialWarp(_get(cfg, "manifold.warp.k", 1.0))
    elif kind == "exponential":
        warp = ExponentialWarp(_get(cfg, "manifold.warp.alpha", 1.0))
    else:
        raise ValueError(f"manifold.warp.kind must be polynomial or exponential, got {kind!r}")
    return ManifoldProfile(
        n=_get(cfg, "manifold.dimension", 3, int),
        warp=warp,
        r0=_get(cfg, "manifold.r0", 1.0),
        r1=_get(cfg, "manifold.r1", 8.0),
    )


def potential_from_config(cfg: Dict[str, str], manifold: ManifoldProfile):
    kind = _get(cfg, "potential.kind", "zero", str)
    if kind == "zero":
        return zero_potential(_get(cfg, "potential.support_end", 1.0))
    if kind == "square_well":
        return square_well_potential(
            _get(cfg, "potential.v0"), _get(cfg, "potential.lo"), _get(cfg, "potential.hi")
        )
    if kind == "double_bump":
        return double_bump_potential(
            _get(cfg, "potential.v1"), _get(cfg, "potential.lo1"), _get(cfg, "potential.hi1"),
            _get(cfg, "potential.v2"), _get(cfg, "potential.lo2"), _get(cfg, "potential.hi2"),
        )
    if kind == "power_decay":
        return power_decay_potential(
            manifold.warp, _get(cfg, "potential.delta", 2.0), _get(cfg, "potential.amplitude", 1.0)
        )
    raise ValueError(f"unknown potential.kind {kind!r}")


def params_from_config(cfg: Dict[str, str], potential) -> CarlemanParams:
    return CarlemanParams(
        h=_get(cfg, "params.h"),
        E=_get(cfg, "params.E", 1.0),
        epsilon_shift=_get(cfg, "params.epsilon_shift", 1e-3),
        delta=_get(cfg, "params.delta", 2.0),
        tau0=_get(cfg, "params.tau0", 1.0),
        t=_get(cfg, "params.t", 2.0),
        b=_get(cfg, "params.b", 4.0),
        ineq_const_C=_get(cfg, "params.C", 1.0),
        compact_support=isinstance(potential, CompactSupportPotential),
    )


def radial_grid_spec_from_config(cfg: Dict[str, str]) -> RadialGridSpec:
    return RadialGridSpec(
        r_max=_get(cfg, "grid.r_max"),
        points_per_wavelength=_get(cfg, "grid.points_per_wavelength", 16.0),
        n_cap=_get(cfg, "grid.n_cap", 400_000, int),
        grid_energy=_get(cfg, "grid.grid_energy", None),
    )


def _h_list_from_config(cfg: Dict[str, str]) -> List[float]:
    if "sweep.h_list" in cfg:
        hs = [float(v) for v in cfg["sweep.h_list"].split(",") if v.strip()]
    else:
        hs = list(
            np.geomspace(
                _get(cfg, "sweep.h_max"), _get(cfg, "sweep.h_min"), _get(cfg, "sweep.n", 6, int)
            )
        )
    return sorted(hs, reverse=True)


# ---------------------------------------------------------------------------
# commands


def _finish(out_dir, command, cfg, seed, files, failures, report_only) -> int:
    """Write the manifest, print failures, and pick the exit code."""
    deterministic = [f for f in files if f != "timing.csv"]
    write_json(
        os.path.join(out_dir, "manifest.json"),
        manifest_report(command, cfg, seed, out_dir, deterministic, VERSION),
    )
    for fail in failures:
        print(f"FAIL {json.dumps(fail, sort_keys=True)}")
    if failures and not report_only:
        return 2
    return 0


def cmd_profile(cfg: Dict[str, str], args, out_dir: str) -> int:
    manifold = manifold_from_config(cfg)
    potential = potential_from_config(cfg, manifold)
    params = params_from_config(cfg, potential)
    grid_spec = GridSpec(n_points=_get(cfg, "profile.n_points", 4096, int))
    scales = derive_scales(params, manifold.warp, potential)
    prof = build_profile(params, scales, manifold, grid_spec)
    report = check_key_inequality(prof)

    files = ["profile.csv", "certificate.json"]
    write_csv(os.path.join(out_dir, "profile.csv"), *profile_table(prof, report))
    cert = certificate_report(prof, report)
    if args.find_tau0:
        search = find_admissible_tau0(params, manifold, potential, [params.h])
        cert["tau0_search"] = {
            "tau0_star": search.tau0_star,
            "evaluations": search.evaluations,
            "bracket": list(search.bracket),
        }
        print(f"admissible tau0: {float_str(search.tau0_star)}")
    write_json(os.path.join(out_dir, "certificate.json"), cert)

    print(
        f"profile: holds={report.holds} worst_margin={report.worst_margin:.6g} "
        f"worst_r={report.worst_r:.6g} grid={prof.grid.size}"
    )
    failures = []
    if not report.holds:
        failures.append(
            {
                "reason": "key_inequality_violated",
                "worst_r": report.worst_r,
                "worst_margin": report.worst_margin,
            }
        )
    return _finish(out_dir, "profile", cfg, int(_get(cfg, "seed", DEFAULT_SEED, int)), files, failures, args.report_only)


def cmd_carleman(cfg: Dict[str, str], args, out_dir: str) -> int:
    manifold = manifold_from_config(cfg)
    potential = potential_from_config(cfg, manifold)
    params = params_from_config(cfg, potential)
    seed = int(_get(cfg, "seed", DEFAULT_SEED, int))
    rng = np.random.default_rng(seed)
    scales = derive_scales(params, manifold.warp, potential)
    prof = build_profile(params, scales, manifold)

    # matrix certificate on the region where the weight varies
    r_cert = np.linspace(manifold.r1, scales.a * 0.999, _get(cfg, "carleman.phi_samples", 2001, int))
    phi_rep = phi_matrix_check(exact_metric_perturbation(2), prof, r_samples=r_cert)

    # randomized two-sided ratio suite
    n_trials = _get(cfg, "carleman.trials", 50, int)
    r_hi = _get(cfg, "carleman.r_hi", manifold.r1 + 3.5)
    n_pts = _get(cfg, "carleman.grid_points", 513, int)
    modes = tuple(int(v) for v in _get(cfg, "carleman.modes", "0,1,3", str).split(","))
    grid = np.linspace(manifold.r1, r_hi, n_pts)
    trials = []
    for _ in range(n_trials):
        u = windowed_random_testfunction(grid, modes, rng)
        trials.append(carleman_ratio(u, manifold, potential, params, scales, prof))
    suite = carleman_suite_report(
        trials, {"n_points": n_pts, "r_lo": manifold.r1, "r_hi": r_hi, "modes": list(modes)}
    )
    suite["phi_certificate"] = {
        "holds": phi_rep.holds,
        "max_eigenvalue": phi_rep.max_eigenvalue,
        "r_at_max": phi_rep.r_at_max,
        "n_samples": phi_rep.n_samples,
    }

    files = ["carleman.json", "best_c_hist.csv"]
    best = [t.best_C for t in trials]
    write_csv(
        os.path.join(out_dir, "best_c_hist.csv"),
        *histogram_table(best, n_bins=_get(cfg, "carleman.hist_bins", 10, int)),
    )
    write_json(os.path.join(out_dir, "carleman.json"), suite)
    print(
        f"carleman: trials={n_trials} best_C_max={max(best):.6g} "
        f"phi_holds={phi_rep.holds} (max eig {phi_rep.max_eigenvalue:.3g})"
    )
    failures = []
    if not phi_rep.holds:
        failures.append(
            {"reason": "phi_matrix_indefinite", "max_eigenvalue": phi_rep.max_eigenvalue,
             "r_at_max": phi_rep.r_at_max}
        )
    return _finish(out_dir, "carleman", cfg, seed, files, failures, args.report_only)


def _eps_policy_from_config(cfg: Dict[str, str], potential, params: CarlemanParams):
    mode = _get(cfg, "sweep.eps.mode", "fixed", str)
    if mode == "fixed":
        return None
    if mode == "linear":
        coeff = _get(cfg, "sweep.eps.coeff", 0.1)
        return lambda h: coeff * h
    if mode == "tunneling":
        action = tunneling_action(
            potential, _get(cfg, "trap.barrier_lo"), _get(cfg, "trap.barrier_hi"), params.E
        )
        return lambda h: math.exp(-action / h)
    raise ValueError(f"sweep.eps.mode must be fixed, linear, or tunneling, got {mode!r}")


def _e_policy_from_config(cfg, manifold, potential, params, grid_spec):
    mode = _get(cfg, "sweep.e.mode", "fixed", str)
    if mode == "fixed":
        return None
    if mode == "trapped":
        well = (_get(cfg, "trap.well_lo"), _get(cfg, "trap.well_hi"))

        def policy(h: float) -> float:
            p = dataclasses.replace(params, h=h)
            return trapped_level_energy(manifold, potential, p, grid_spec, well=well)

        return policy
    raise ValueError(f"sweep.e.mode must be fixed or trapped, got {mode!r}")


def cmd_resolve(cfg: Dict[str, str], args, out_dir: str) -> int:
    manifold = manifold_from_config(cfg)
    potential = potential_from_config(cfg, manifold)
    params = params_from_config(cfg, potential)
    grid_spec = radial_grid_spec_from_config(cfg)
    seed = int(_get(cfg, "seed", DEFAULT_SEED, int))
    workers = args.workers if args.workers else _get(cfg, "workers", 1, int)
    sign = _get(cfg, "resolve.sign", 1, int)
    weighted = _get(cfg, "resolve.weighted", True, bool)
    failures: List[dict] = []
    files: List[str] = []

    sweep_mode = any(k.startswith("sweep.") for k in cfg)
    if sweep_mode:
        hs = _h_list_from_config(cfg)
        sweep = h_sweep(
            manifold, potential, params, hs, grid_spec,
            sign=sign, weighted=weighted,
            eps_policy=_eps_policy_from_config(cfg, potential, params),
            e_policy=_e_policy_from_config(cfg, manifold, potential, params, grid_spec),
            workers=workers, seed=seed,
            check_truncation_at_largest=_get(cfg, "sweep.check_truncation", True, bool),
        )
        log_power_raw = _get(cfg, "sweep.log_power", "free", str)
        log_power = None if log_power_raw == "free" else float(log_power_raw)
        fit = fit_exponent(sweep, log_power=log_power)
        check = bound_check(sweep, manifold, potential)
        pred = predicted_bound_exponent(manifold, potential)

        write_csv(os.path.join(out_dir, "sweep.csv"), *sweep_table(sweep))
        write_csv(os.path.join(out_dir, "timing.csv"), *sweep_timing_table(sweep))
        write_json(os.path.join(out_dir, "sweep.json"), sweep_metadata(sweep, fit, check))
        hdr, rows = loglog_series(sweep, fit)
        write_csv(os.path.join(out_dir, "series.csv"), hdr, rows)
        if rows:
            svg_series_plot(
                os.path.join(out_dir, "series.svg"),
                [r[0] for r in rows],
                [("measured", [r[1] for r in rows]), ("fitted", [r[2] for r in rows])],
                title="cutoff resolvent norm growth",
                xlabel="log 1/h",
                ylabel="log log norm",
            )
        files += ["sweep.csv", "timing.csv", "sweep.json", "series.csv"] + (
            ["series.svg"] if rows else []
        )
        if _get(cfg, "sweep.eps.mode", "fixed", str) == "tunneling":
            # trapping diagnostic: h log||R|| should level off at the action
            hdr2 = ("h", "h_log_norm")
            rows2 = [[e.h, e.h * math.log(e.norm)] for e in sweep.entries if math.isfinite(e.norm) and e.norm > 0]
            write_csv(os.path.join(out_dir, "hlog.csv"), hdr2, rows2)
            files.append("hlog.csv")
        print(
            f"fit: p={fit.exponent:.4f} q={fit.log_power:.4f} c={fit.coefficient:.6g} "
            f"rms={fit.residual_rms:.3g} | predicted: p={float(pred.p):.4f} q={float(pred.log_power):.4f} | "
            f"implied_C={check.implied_C:.6g} consistent={check.consistent}"
        )
        for e in sweep.entries:
            for flag in e.flags:
                failures.append({"reason": flag, "h": e.h})
        if not check.consistent:
            failures.append({"reason": "bound_check_inconsistent", "implied_C": check.implied_C})
    else:
        res = cutoff_resolvent_norm(
            manifold, potential, params, grid_spec, sign=sign, weighted=weighted, seed=seed
        )
        scan_rows = [
            [j, float(res.scan.mode_eigenvalues[j]), float(res.scan.sigma[j]),
             bool(res.scan.evaluated[j])]
            for j in range(len(res.scan.sigma))
        ]
        write_csv(
            os.path.join(out_dir, "mode_scan.csv"),
            ("mode", "lambda", "sigma", "evaluated"),
            scan_rows,
        )
        write_json(
            os.path.join(out_dir, "resolve.json"),
            {
                "norm": res.norm,
                "dominant_mode": res.dominant_mode,
                "modes_used": res.modes_used,
                "n_grid": res.n_grid,
                "excluded_sigma": res.excluded_sigma,
                "truncation_stable": res.truncation_stable,
                "flags": list(res.flags),
                "params": dataclasses.asdict(params),
            },
        )
        files += ["mode_scan.csv", "resolve.json"]
        print(
            f"resolve: norm={res.norm:.6g} dominant_mode={res.dominant_mode} "
            f"modes={res.modes_used} N={res.n_grid} flags={list(res.flags)}"
        )
        for flag in res.flags:
            failures.append({"reason": flag})
        if args.oracle:
            files.append("oracle.csv")
            _write_oracle_table(
                os.path.join(out_dir, "oracle.csv"), cfg, manifold, potential, params,
                grid_spec, res, seed,
            )
    return _finish(out_dir, "resolve", cfg, seed, files, failures, args.report_only)


def _write_oracle_table(path, cfg, manifold, potential, params, grid_spec, res, seed):
    """Dense-SVD cross-check of the banded sigma_min on a few modes."""
    limit = _get(cfg, "resolve.oracle_max_n", 2000, int)
    grid = scenario_grid(manifold, potential, params, grid_spec)
    if grid.size - 2 > limit:
        print(f"oracle: skipped (N={grid.size - 2} exceeds resolve.oracle_max_n={limit})")
        write_csv(path, ("mode", "sigma_banded", "sigma_dense", "rel_diff"), [])
        return
    evaluated = np.flatnonzero(res.scan.evaluated)
    order = evaluated[np.argsort(res.scan.sigma[evaluated])]
    rows = []
    for j in order[: _get(cfg, "resolve.oracle_modes", 5, int)]:
        op = build_mode_operator(manifold, potential, params, int(j), grid)
        banded = sigma_min_tridiagonal(op.offdiag, op.diag, op.offdiag, seed=seed).value
        dense = dense_sigma_min(op.offdiag, op.diag, op.offdiag)
        rows.append([int(j), banded, dense, abs(banded - dense) / dense])
    write_csv(path, ("mode", "sigma_banded", "sigma_dense", "rel_diff"), rows)
    worst = max(r[3] for r in rows) if rows else 0.0
    print(f"oracle: {len(rows)} modes, worst rel diff {worst:.3g}")


def cmd_chain(cfg: Dict[str, str], args, out_dir: str) -> int:
    graph_path = _get(cfg, "chain.graph", None, str)
    if graph_path is None:
        raise KeyError("config key 'chain.graph' (path to a JSON edge list) is required")
    with open(graph_path, "r", encoding="utf-8") as fh:
        g = json.load(fh)
    graph = BallCoverGraph(
        n_balls=int(g["n_balls"]),
        edges=tuple((int(a), int(b)) for a, b in g["edges"]),
        rho=float(g["rho"]),
        lambda_carleman=float(g["lambda"]),
    )
    consts = chain_constants(graph.lambda_carleman, graph.rho)
    beta = _get(cfg, "chain.beta", 1.0)
    h = _get(cfg, "chain.h", _get(cfg, "params.h", 0.01))
    target = _get(cfg, "chain.target", graph.n_balls, int)
    path_balls = chain_find(graph, target)
    length = len(path_balls)
    report: Dict[str, object] = {
        "constants": {"c1": consts.c1, "c2": consts.c2, "rho": consts.rho,
                      "lambda": consts.lambda_carleman},
        "target": target,
        "path": list(path_balls),
        "chain_length": length,
        "h": h,
        "beta": beta,
        # the certified loss covers the chaining steps only; collar and
        # prefactor constants are tracked by their own factors below
        "gamma_scope": "chain contribution",
    }
    files = ["chain.json"]
    if length >= 2:
        schedule = kappa_schedule(length, consts.c1, consts.c2, beta)
        q = q_factors(schedule, consts.c1, consts.c2, h)
        write_csv(
            os.path.join(out_dir, "kappa.csv"),
            ("nu", "kappa"),
            [[i + 2, float(k)] for i, k in enumerate(schedule)],
        )
        files.append("kappa.csv")
        report["kappa_schedule"] = [float(k) for k in schedule]
        report["q_factors"] = {
            "log_q1": q.log_q1, "log_q2": q.log_q2, "log_q3": q.log_q3,
            "chain_length": q.chain_length,
        }
    gamma_total, per_target = gamma_aggregate(graph, consts.c1, consts.c2, beta)
    report["gamma_total"] = gamma_total
    report["gamma_per_target"] = {str(k): v for k, v in sorted(per_target.items())}
    write_json(os.path.join(out_dir, "chain.json"), report)
    print(
        f"chain: length={length} c1={consts.c1:.6g} c2={consts.c2:.6g} "
        f"gamma_total={gamma_total:.6g}"
    )
    return _finish(out_dir, "chain", cfg, int(_get(cfg, "seed", DEFAULT_SEED, int)), files, [], args.report_only)


def cmd_sweep(cfg: Dict[str, str], args, out_dir: str) -> int:
    """Phase-strength scaling study: fit max(phi)/h = c h^-p (log 1/h)^q."""
    manifold = manifold_from_config(cfg)
    potential = potential_from_config(cfg, manifold)
    params = params_from_config(cfg, potential)
    hs = _h_list_from_config(cfg)
    log_power_raw = _get(cfg, "sweep.log_power", "free", str)
    log_power = None if log_power_raw == "free" else float(log_power_raw)
    fit = phase_max_scaling(params, manifold, potential, hs, log_power=log_power)

    rows = []
    for h in hs:
        p = dataclasses.replace(params, h=float(h))
        sc = derive_scales(p, manifold.warp, potential)
        top = float(phi_eval(manifold.warp, manifold.r1, sc.a, sc.tau, np.array([sc.a]))[0])
        rows.append([float(h), top / float(h)])
    write_csv(os.path.join(out_dir, "scaling.csv"), ("h", "phase_max_over_h"), rows)
    write_json(
        os.path.join(out_dir, "scaling.json"),
        {
            "fit": dataclasses.asdict(fit),
            "h_list": [float(h) for h in hs],
            "values": [r[1] for r in rows],
        },
    )
    x = [math.log(1.0 / h) for h, _ in rows]
    y = [math.log(v) for _, v in rows]
    yf = [math.log(float(fit.predict(h))) for h, _ in rows]
    svg_series_plot(
        os.path.join(out_dir, "scaling.svg"), x,
        [("measured", y), ("fitted", yf)],
        title="phase strength scaling",
        xlabel="log 1/h",
        ylabel="log max phi / h",
    )
    print(
        f"scaling: p={fit.exponent:.4f} q={fit.log_power:.4f} c={fit.coefficient:.6g} "
        f"rms={fit.residual_rms:.3g}"
    )
    files = ["scaling.csv", "scaling.json", "scaling.svg"]
    return _finish(out_dir, "sweep", cfg, int(_get(cfg, "seed", DEFAULT_SEED, int)), files, [], args.report_only)


# ---------------------------------------------------------------------------
# argument parsing


_COMMANDS = {
    "profile": cmd_profile,
    "carleman": cmd_carleman,
    "resolve": cmd_resolve,
    "chain": cmd_chain,
    "sweep": cmd_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="resolventlab",
        description="Scenario drivers for weighted-estimate and resolvent-norm studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario file (dotted keys)")
        p.add_argument("--seed", type=int, default=None, help="override the seed key")
        p.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
        p.add_argument("--out", default=None, help="override output.dir")
        p.add_argument("--oracle", action="store_true", help="emit dense cross-check tables")
        p.add_argument(
            "--report-only", action="store_true",
            help="always exit 0; failures are still recorded in the reports",
        )
        p.add_argument(
            "--find-tau0", action="store_true",
            help="search for an admissible phase strength (profile command)",
        )
    args = parser.parse_args(argv)

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = str(args.seed)
    if args.workers is not None:
        cfg["workers"] = str(args.workers)
    out_dir = args.out or cfg.get("output.dir") or os.path.join("runs", args.command)
    os.makedirs(out_dir, exist_ok=True)
    return _COMMANDS[args.command](cfg, args, out_dir)


if __name__ == "__main__":
    sys.exit(main())
