"""
The arcsine law from the moment formulas
========================================

A Brownian spider with two legs of weight 1/2 is reflected Brownian motion
with a fair coin deciding the side of each excursion, so the time spent on
one leg up to t=1 follows the arcsine law. Its moments are binom(2n,n)/4^n.
"""

import math
from fractions import Fraction

from scipy import integrate

from spider_moments import MultiIndex, SpiderConfig, joint_moment_closed, single_moment_closed

half = Fraction(1, 2)
brownian = Fraction(-1, 2)

# exact moments straight from the closed formula
for n in range(1, 8):
    m = single_moment_closed(brownian, half, n)
    print(f"E[A^{n}] = {str(m):>10}   binom(2n,n)/4^n = {Fraction(math.comb(2 * n, n), 4 ** n)}")

# the same numbers through the joint-moment formula on a two-leg spider
sym = SpiderConfig((half, half))
assert all(joint_moment_closed(brownian, sym, MultiIndex({0: n})) == single_moment_closed(brownian, half, n)
           for n in range(1, 11))

# and against the arcsine density itself
print()
for n in (1, 5, 10):
    quad, _ = integrate.quad(lambda x: x ** n / math.pi, 0, 1, weight="alg", wvar=(-0.5, -0.5))
    exact = single_moment_closed(brownian, half, n)
    print(f"n={n:2d}  exact {float(exact):.15f}  quadrature {quad:.15f}")

# other Bessel orders bend the law; the second moment is b(1 + nu(1-b))
print()
for nu in (Fraction(-1, 4), Fraction(-1, 2), Fraction(-3, 4)):
    print(f"nu={str(nu):>5}  E[A^2] on a leg of weight 1/3: {single_moment_closed(nu, Fraction(1, 3), 2)}")
