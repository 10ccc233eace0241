"""resolventlab: numerical laboratory for semiclassical resolvent scaling.

The package studies -h^2 Laplacian + V on manifolds with a warped radial end
dr^2 + f(r)^2 omega.  It constructs the weight/phase profiles behind weighted
a-priori (Carleman) estimates, checks the differential inequalities that make
them work, measures cutoff resolvent norms of the separated radial operators
across h sweeps, fits the resulting growth exponents, and aggregates
single-ball estimates along chains of overlapping balls.
"""

from .geometry import (
    BoundExponent,
    CompactSupportPotential,
    DecayingPotential,
    ExponentialWarp,
    ManifoldProfile,
    PolynomialWarp,
    Q0Condition,
    certify_f_growth,
    check_decay_envelope,
    double_bump_potential,
    m0_compute,
    power_decay_potential,
    predicted_bound_exponent,
    q0_closed_form,
    q0_condition_classify,
    q0_eval,
    q0_prime,
    resolve_r1,
    square_well_potential,
    warp_eval,
    warp_f_inverse,
    zero_potential,
)
from .carleman import (
    CarlemanRatioReport,
    FIdentityReport,
    MetricPerturbation,
    PerturbationBoundsReport,
    PhiMatrixReport,
    TestFunction,
    b_selection,
    carleman_ratio,
    check_perturbation_bounds,
    exact_metric_perturbation,
    phi_matrix_check,
    quasimode_testfunction,
    random_metric_perturbation,
    windowed_random_testfunction,
)
from .chain import (
    BallCoverGraph,
    ChainConstants,
    chain_constants,
    chain_find,
    gamma_aggregate,
    kappa_schedule,
    q_factors,
)
from .fitting import ExponentFit, fit_power_log
from .operators import (
    ModeOperator,
    apply_mode_operator,
    build_mode_operator,
    chi_s_weight,
    make_radial_grid,
)
from .phaseweight import (
    CarlemanParams,
    DerivedScales,
    GridSpec,
    KeyInequalityReport,
    RatioBounds,
    Tau0Search,
    WeightPhaseProfile,
    build_profile,
    check_key_inequality,
    check_ratio_bounds,
    derive_scales,
    find_admissible_tau0,
    mu_eval,
    phase_max,
    phase_max_scaling,
    margin_components,
    phi_eval,
    phi_prime_eval,
)
from .reports import (
    bound_check_report,
    carleman_suite_report,
    certificate_report,
    histogram_table,
    load_csv,
    load_json,
    loglog_series,
    manifest_report,
    profile_table,
    svg_series_plot,
    sweep_metadata,
    sweep_table,
    sweep_timing_table,
    write_csv,
    write_json,
)
from .resolvent import (
    BoundCheck,
    HSweepEntry,
    ModeScan,
    NormResult,
    RadialGridSpec,
    SweepResult,
    bound_check,
    cutoff_resolvent_norm,
    fit_exponent,
    h_sweep,
    mode_monotonicity_check,
    scenario_grid,
    sigma_min,
    trapped_level_energy,
    tunneling_action,
)
from .tridiag import (
    SigmaMinResult,
    backward_error,
    dense_sigma_min,
    factor_tridiagonal,
    sigma_lower_bound,
    sigma_min_tridiagonal,
    solve_factored,
)

__version__ = "0.1.0"
