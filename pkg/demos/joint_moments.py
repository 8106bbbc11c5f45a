"""
Joint moments by three routes
=============================

Joint moments E[A_1^n1 ... A_r^nr] of the occupation times at t=1 come out
of the combinatorial formula, of the self-similar recursion and of the
coefficients of the exponential-time moment generating function. All three
are exact rationals and agree to the last digit.
"""

from fractions import Fraction

from spider_moments import (
    ClosedFormD,
    MultiIndex,
    SpiderConfig,
    brownian_joint_moment,
    joint_moment_closed,
    joint_moment_poly,
    joint_moment_recursive,
    mgf_series_moments,
)

nu = Fraction(-1, 4)
config = SpiderConfig((Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)))

series = mgf_series_moments(nu, config, 4)
print(f"{'index':>14} {'closed':>22} {'recursive':>22} {'series':>22}")
for idx in [MultiIndex.of(1, 1, 1), MultiIndex.of(2, 1), MultiIndex({1: 2, 2: 2}), MultiIndex.of(1, 1, 2)]:
    a = joint_moment_closed(nu, config, idx)
    b = joint_moment_recursive(ClosedFormD(nu), config, idx)
    c = series[idx]
    print(f"{str(idx):>14} {str(a):>22} {str(b):>22} {str(c):>22}")

# with three first powers the formula collapses to (-nu)^(r-1) b1 b2 b3
print("\n(1,1,1):", joint_moment_closed(nu, config, MultiIndex.of(1, 1, 1)),
      "=", (-nu) ** 2 * Fraction(1, 6) * Fraction(1, 3) * Fraction(1, 2))

# each moment is a polynomial in nu; print one
coeffs = joint_moment_poly(config, MultiIndex.of(2, 1)).coeffs
print("\nE[A1^2 A2] =", " + ".join(f"({c}) nu^{d}" for d, c in enumerate(coeffs) if c))

# at nu = -1/2 the Brownian formula gives the same values
print("\nBrownian check:", joint_moment_closed(Fraction(-1, 2), config, MultiIndex.of(2, 2)),
      brownian_joint_moment(config, MultiIndex.of(2, 2)))
