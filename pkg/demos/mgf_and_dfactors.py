"""
Exponential time: the MGF, D-factors and the Laplace recursion
==============================================================

Stopping the spider at an independent exponential time T with rate lambda
turns occupation-time moments into Laplace transforms. This script evaluates
the moment generating function of the occupation times at T both in closed
form and by quadrature of the Bessel eigenfunctions, checks the D-factors
against their integral representation, and inverts the Laplace recursion
numerically back to time t.
"""

from fractions import Fraction

from spider_moments import (
    BesselLaw,
    ClosedFormD,
    MgfQuery,
    MultiIndex,
    SpiderConfig,
    d_factor_closed,
    d_factor_numeric,
    joint_moment_closed,
    laplace_invert,
    laplace_joint_moment,
    laplace_to_moment,
    mgf_bessel_closed,
    mgf_general_quadrature,
)

nu = Fraction(-1, 4)
law = BesselLaw(nu)
config = SpiderConfig((Fraction(1, 3), Fraction(2, 3)))

print("E[exp(-z1 A1 - z2 A2)] at T ~ Exp(1)")
for z in [(0.1, 5.0), (1.0, 0.0), (2.0, 2.0)]:
    q = MgfQuery(1.0, z)
    print(f"  z={z}: closed {mgf_bessel_closed(nu, config, q):.12f}"
          f"  quadrature {mgf_general_quadrature(law, config, q):.12f}")
# equal arguments only see the total time T, hence lambda/(lambda+z) = 1/3 here

print("\nD-factors do not depend on lambda:")
for k in (1, 2, 3):
    numeric = [d_factor_numeric(law, config.beta(0), k, lam) for lam in (0.5, 1.0, 2.0)]
    print(f"  k={k}: exact {float(d_factor_closed(nu, config.beta(0), k)):+.10f}  "
          + "  ".join(f"{v:+.10f}" for v in numeric))

idx = MultiIndex.of(2, 1)
print("\nLaplace recursion at several rates, mapped back to t=1:")
for lam in (Fraction(1, 2), Fraction(1), Fraction(3)):
    transform = laplace_joint_moment(ClosedFormD(nu), config, idx, lam)
    print(f"  lambda={lam}: transform {transform}, moment {laplace_to_moment(transform, idx.total, lam)}")
print("  closed form:", joint_moment_closed(nu, config, idx))

t = 1.5
inverted = laplace_invert(lambda s: laplace_joint_moment(ClosedFormD(nu), config, idx, s), t, 18)
print(f"\nGaver-Stehfest at t={t}: {inverted:.10f}  vs  m t^3 = {float(joint_moment_closed(nu, config, idx)) * t ** 3:.10f}")
