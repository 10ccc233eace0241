"""
Warped ends, effective potentials, and predicted growth exponents
=================================================================

A scene in this package is a manifold with one radial end carrying the
metric dr^2 + f(r)^2 omega.  Two warp families are built in:

* polynomial  f(r) = r^k        (k > 0)
* exponential f(r) = exp(r^a)   (0 < a <= 1)

Separating variables turns the Laplacian into a family of half-line
operators, and the warp leaves behind an effective radial potential
q0(r).  This script prints q0 against its per-family closed form and
tabulates the predicted norm-growth exponents for a few scenes.
"""

import numpy as np

from resolventlab import (
    ExponentialWarp,
    ManifoldProfile,
    PolynomialWarp,
    certify_f_growth,
    power_decay_potential,
    predicted_bound_exponent,
    q0_closed_form,
    q0_condition_classify,
    q0_eval,
    warp_eval,
    zero_potential,
)


def main():
    r = np.geomspace(0.5, 200.0, 2001)

    # --- the effective potential, general formula vs closed form ----------
    print("q0 agreement on a log grid (max relative error):")
    for warp, n in [
        (PolynomialWarp(1.0), 3),
        (PolynomialWarp(0.5), 5),
        (PolynomialWarp(2.0), 4),
        (ExponentialWarp(0.5), 3),
    ]:
        scene = ManifoldProfile(n=n, warp=warp, r0=0.5, r1=8.0)
        general = q0_eval(scene, r)
        closed = q0_closed_form(warp, n, r)
        scale = np.max(np.abs(closed))
        err = np.max(np.abs(general - closed)) / scale if scale else np.max(np.abs(general))
        print(f"  {type(warp).__name__:16s} n={n}: {err:.3e}")

    # two degenerate scenes collapse to constants
    flat = ManifoldProfile(n=3, warp=PolynomialWarp(1.0), r0=0.5, r1=8.0)
    print(f"flat scene (linear warp, n=3): q0 is identically {q0_eval(flat, r).max():g}")
    hyp = ManifoldProfile(n=3, warp=ExponentialWarp(1.0), r0=0.5, r1=8.0)
    print(f"hyperbolic-like scene (alpha=1, n=3): q0 is identically {q0_eval(hyp, r).max():g}")

    # --- growth certificates and the boundedness condition ---------------
    c = certify_f_growth(PolynomialWarp(0.7), r)
    print(f"\nwarp growth certificate for k=0.7: min r f'/f = {c:.4f} (exactly k)")
    for n, k in [(2, 1.5), (3, 1.5), (2, 0.8)]:
        verdict = q0_condition_classify(ManifoldProfile(n=n, warp=PolynomialWarp(k), r0=0.5, r1=8.0))
        print(f"q0 condition for n={n}, k={k}: holds={verdict.holds} ({verdict.reason})")

    # --- predicted exponents of log||R|| <= C h^-p (log 1/h)^q ------------
    print("\npredicted growth exponents (p, log power):")
    scenes = [
        ("linear warp, compact support", PolynomialWarp(1.0), zero_potential()),
        ("sqrt warp, compact support", PolynomialWarp(0.5), zero_potential()),
        ("sqrt warp, power decay d=3", PolynomialWarp(0.5), None),
        ("fast polynomial warp k=2", PolynomialWarp(2.0), zero_potential()),
        ("exponential warp a=1", ExponentialWarp(1.0), zero_potential()),
    ]
    for label, warp, pot in scenes:
        if pot is None:
            pot = power_decay_potential(warp, delta=3.0, amplitude=1.0)
        scene = ManifoldProfile(n=3, warp=warp, r0=0.5, r1=8.0)
        bound = predicted_bound_exponent(scene, pot)
        print(f"  {label:32s} p={bound.p:.4f} q={bound.log_power:.4f}")
    f_poly = warp_eval(PolynomialWarp(2.0), 2.0)[0]
    f_exp = warp_eval(ExponentialWarp(0.5), 2.0)[0]
    print(f"\nwarp values f(2): r^2 -> {float(f_poly):g}, "
          f"exp(sqrt r) -> {float(f_exp):.4f}")


if __name__ == "__main__":
    main()
