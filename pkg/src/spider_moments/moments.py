"""Joint moments of occupation times on the legs of a Bessel spider.

Several independent engines compute the same numbers:

* the explicit Stirling-number sum (:func:`joint_moment_closed`),
* the Brownian specialization (:func:`brownian_joint_moment`),
* the self-similar recursion over sub-multi-indices
  (:func:`joint_moment_recursive`),
* the fixed-lambda Laplace-transform recursion
  (:func:`laplace_joint_moment`), which also accepts numerically computed
  D-factors and feeds :func:`laplace_invert`.

Moments are at time 1 and start from the vertex. Legs are 0-based.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Mapping

import mpmath

from .algebra import NuPolynomial
from .combinatorics import binomial, stirling1, stirling2
from .spider import (
    BesselLaw,
    MultiIndex,
    SpiderConfig,
    d_factor_closed,
    d_factor_numeric,
    to_fraction,
)


class MissingDFactorError(KeyError):
    """A D-factor table lacks an entry the recursion needs."""


class PaperLiteralError(RuntimeError):
    """Single-leg Laplace recursion refused in literal-reading mode."""


# ---------------------------------------------------------------------------
# closed forms


def single_moment_closed(nu, beta, n: int) -> Fraction:
    """``E[(A_1)^n]`` on one leg of weight ``beta``, as a double Stirling sum."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    nu, beta = to_fraction(nu), to_fraction(beta)
    total = Fraction(0)
    for l in range(1, n + 1):
        s1 = stirling1(n, l)
        for k in range(1, l + 1):
            term = Fraction(factorial(k - 1), factorial(n - 1)) * s1 * stirling2(l, k)
            term *= nu ** (l - 1) * beta ** k
            total += term if k % 2 else -term
    return total


def joint_moment_poly(config: SpiderConfig, idx: MultiIndex) -> NuPolynomial:
    """The explicit joint moment as a polynomial in ``nu``.

    The sum over ``(k_j, l_j)`` couples legs only through ``K = sum k_j``, so
    each leg is first collapsed to polynomials indexed by ``k_j`` and the
    legs are then convolved in ``K``.
    """
    idx.check(config)
    if len(idx) == 0:
        return NuPolynomial.constant(1)
    n_total = idx.total
    # by_k[K] is the nu-polynomial sum over legs processed so far, with nu**L kept
    by_k: dict[int, NuPolynomial] = {0: NuPolynomial.constant(1)}
    for leg, n in idx.entries:
        beta = config.beta(leg)
        leg_terms: dict[int, NuPolynomial] = {}
        for k in range(1, n + 1):
            coeffs = [Fraction(0)] * (n + 1)
            for l in range(k, n + 1):
                coeffs[l] = Fraction(stirling1(n, l) * stirling2(l, k))
            leg_terms[k] = NuPolynomial(coeffs).scale(beta ** k)
        merged: dict[int, NuPolynomial] = {}
        for ka, pa in by_k.items():
            for kb, pb in leg_terms.items():
                prod = pa * pb
                merged[ka + kb] = merged[ka + kb] + prod if ka + kb in merged else prod
        by_k = merged
    out = NuPolynomial()
    for k, poly in by_k.items():
        weight = Fraction(factorial(k - 1), factorial(n_total - 1))
        out = out + poly.scale(weight if k % 2 else -weight)
    # every term carries nu**L with L >= r >= 1, so nu**(L-1) is a clean shift
    return out.shift_down()


def joint_moment_closed(nu, config: SpiderConfig, idx: MultiIndex) -> Fraction:
    """``E[prod_i (A_1^{(i)})^{n_i}]`` from the explicit Stirling-number formula."""
    nu = to_fraction(nu)
    if len(idx) == 1:
        (leg, n), = idx.entries
        idx.check(config)
        return single_moment_closed(nu, config.beta(leg), n)
    return joint_moment_poly(config, idx)(nu)


def brownian_joint_moment(config: SpiderConfig, idx: MultiIndex) -> Fraction:
    """Joint moment for the Brownian spider (``nu = -1/2``) via Bessel numbers."""
    idx.check(config)
    if len(idx) == 0:
        return Fraction(1)
    n_total = idx.total
    # per-leg polynomial in the K-grading, then convolution as above
    by_k: dict[int, Fraction] = {0: Fraction(1)}
    for leg, n in idx.entries:
        beta = config.beta(leg)
        leg_terms = {
            k: Fraction(factorial(2 * n - k - 1), factorial(k - 1) * factorial(n - k)) * beta ** k
            for k in range(1, n + 1)
        }
        merged: dict[int, Fraction] = {}
        for ka, va in by_k.items():
            for kb, vb in leg_terms.items():
                merged[ka + kb] = merged.get(ka + kb, 0) + va * vb
        by_k = merged
    total = Fraction(0)
    for k, v in by_k.items():
        total += Fraction(factorial(k - 1), factorial(n_total - 1) * 2 ** (2 * n_total - k - 1)) * v
    return total


# ---------------------------------------------------------------------------
# D-factor providers


class ClosedFormD:
    """Exact Bessel D-factors ``-beta binom(nu+k-1, k)``; lambda is ignored."""

    exact = True

    def __init__(self, nu):
        self.nu = to_fraction(nu)

    def __call__(self, config: SpiderConfig, leg: int, k: int, lam=None) -> Fraction:
        return d_factor_closed(self.nu, config.beta(leg), k)

    def __repr__(self) -> str:
        return f"ClosedFormD(nu={self.nu})"


class NumericD:
    """D-factors by quadrature of their integral definition (``k <= 4``)."""

    exact = False

    def __init__(self, law: BesselLaw):
        self.law = law
        self._cache: dict[tuple, float] = {}

    def __call__(self, config: SpiderConfig, leg: int, k: int, lam) -> float:
        key = (config.beta(leg), k, float(lam))
        if key not in self._cache:
            self._cache[key] = d_factor_numeric(self.law, config.beta(leg), k, float(lam))
        return self._cache[key]


class TableD:
    """User-supplied D-factor values keyed by ``(leg, k, lam)``."""

    exact = False

    def __init__(self, table: Mapping[tuple, float]):
        self.table = dict(table)

    def __call__(self, config: SpiderConfig, leg: int, k: int, lam):
        try:
            return self.table[(leg, k, lam)]
        except KeyError:
            raise MissingDFactorError(f"no D-factor for leg={leg}, k={k}, lambda={lam}") from None


DFactorProvider = Callable[[SpiderConfig, int, int, object], object]


# ---------------------------------------------------------------------------
# self-similar recursion


def _single_leg_moments(nu: Fraction, beta: Fraction, n: int) -> list[Fraction]:
    # E[A^m] = beta - sum_k D_k (1 - E[A^(m-k)]), with E[A^0] = 1
    moments = [Fraction(1)]
    d = [None] + [d_factor_closed(nu, beta, k) for k in range(1, n + 1)]
    for m in range(1, n + 1):
        acc = beta
        for k in range(1, m + 1):
            acc -= d[k] * (1 - moments[m - k])
        moments.append(acc)
    return moments


@lru_cache(maxsize=None)
def _recursive_moment(nu: Fraction, items: tuple[tuple[Fraction, int], ...]) -> Fraction:
    """Moment for a canonical tuple of ``(beta, n)`` pairs (sorted, so legs with
    equal weight and exponent share cache entries)."""
    if not items:
        return Fraction(1)
    if len(items) == 1:
        beta, n = items[0]
        return _single_leg_moments(nu, beta, n)[n]
    n_total = sum(n for _, n in items)
    total = Fraction(0)
    for pos, (beta, n) in enumerate(items):
        for k in range(1, n + 1):
            rest = list(items)
            if n == k:
                del rest[pos]
            else:
                rest[pos] = (beta, n - k)
            coeff = Fraction(binomial(n, k), binomial(n_total, k))
            total += coeff * d_factor_closed(nu, beta, k) * _recursive_moment(nu, tuple(sorted(rest)))
    return total


def joint_moment_recursive(provider: ClosedFormD, config: SpiderConfig,
                           idx: MultiIndex) -> Fraction:
    """Joint moment from the self-similar recursion with exact D-factors."""
    if not isinstance(provider, ClosedFormD):
        raise TypeError("the self-similar recursion needs the exact closed-form provider")
    idx.check(config)
    items = tuple(sorted((config.beta(leg), n) for leg, n in idx.entries))
    return _recursive_moment(provider.nu, items)


def selfsimilar_coefficient(n_i: int, n_total: int, k: int) -> Fraction:
    """Weight of the k-th term on a leg in the self-similar recursion."""
    return Fraction(binomial(n_i, k), binomial(n_total, k))


# ---------------------------------------------------------------------------
# Laplace-transform recursion at fixed lambda


def laplace_joint_moment(provider: DFactorProvider, config: SpiderConfig, idx: MultiIndex,
                         lam, paper_literal: bool = False):
    """Laplace transform in ``t`` of ``E[prod_i (A_t^{(i)})^{n_i}]`` at ``lam``.

    Works for any D-factor provider. Exact when the provider and ``lam``
    are exact. Single-leg orders ``n >= 2`` use the one-leg recursion, whose
    trailing sum is read with the leg's own D-factors; ``paper_literal``
    refuses that branch instead.
    """
    idx.check(config)
    if isinstance(lam, mpmath.mpf):
        # binary floats are exact dyadic rationals
        man, exp = lam.man_exp
        lam = Fraction(man) * Fraction(2) ** exp
    if isinstance(lam, (int, Fraction)) and getattr(provider, "exact", False):
        lam = Fraction(lam)
    else:
        lam = float(lam)
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")

    memo: dict[MultiIndex, object] = {}
    d_cache: dict[tuple[int, int], object] = {}

    def d(leg: int, k: int):
        if (leg, k) not in d_cache:
            d_cache[(leg, k)] = provider(config, leg, k, lam)
        return d_cache[(leg, k)]

    def single(leg: int, n: int):
        if n == 0:
            return 1 / lam
        if n == 1:
            return config.beta(leg) / lam ** 2
        if paper_literal:
            raise PaperLiteralError(
                "the one-leg Laplace recursion is printed with an undefined leg index in its "
                "final sum; literal mode refuses single-leg orders n >= 2")
        total = 0
        for k in range(1, n + 1):
            total += math.perm(n, k) * d(leg, k) / lam ** k * rec(MultiIndex(((leg, n - k),))
                                                               if n > k else MultiIndex())
        total += factorial(n) / lam ** (n - 1) * single(leg, 1)
        total -= factorial(n) / lam ** (n + 1) * sum(d(leg, k) for k in range(1, n + 1))
        return total

    def rec(m: MultiIndex):
        if m in memo:
            return memo[m]
        if len(m) == 0:
            value = 1 / lam
        elif len(m) == 1:
            (leg, n), = m.entries
            value = single(leg, n)
        else:
            value = 0
            for leg, n in m.entries:
                for k in range(1, n + 1):
                    value += math.perm(n, k) * d(leg, k) / lam ** k * rec(m.reduced(leg, k))
        memo[m] = value
        return value

    return rec(idx)


def laplace_to_moment(value, n_total: int, lam):
    """Self-similar link: transform times ``lam**(N+1) / N!``."""
    return value * lam ** (n_total + 1) / factorial(n_total)


# ---------------------------------------------------------------------------
# numerical inversion


@lru_cache(maxsize=None)
def stehfest_weights(terms: int) -> tuple[Fraction, ...]:
    """Exact Gaver-Stehfest weights ``V_1 .. V_terms``."""
    if terms % 2 or terms < 2:
        raise ValueError("the number of Stehfest terms must be even and positive")
    half = terms // 2
    weights = []
    for k in range(1, terms + 1):
        acc = Fraction(0)
        for j in range((k + 1) // 2, min(k, half) + 1):
            acc += Fraction(j ** half * factorial(2 * j),
                            factorial(half - j) * factorial(j) * factorial(j - 1)
                            * factorial(k - j) * factorial(2 * j - k))
        weights.append(acc if (k + half) % 2 == 0 else -acc)
    return tuple(weights)


def _to_mpf(value):
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def laplace_invert(transform: Callable, t: float, terms: int = 14) -> float:
    """Gaver-Stehfest inversion of ``transform`` at time ``t``.

    The alternating sum is formed at roughly ``2.2 * terms`` significant
    digits. ``transform`` receives ``mpmath.mpf`` points; if it rejects them
    it is called with floats, and accuracy is then limited by cancellation
    against weights of size up to ``1e10``.
    """
    if not 10 <= terms <= 18 or terms % 2:
        raise ValueError("terms must be an even number between 10 and 18")
    if t <= 0:
        raise ValueError("t must be positive")
    with mpmath.workdps(max(30, int(2.2 * terms) + 10)):
        ln2_t = mpmath.log(2) / _to_mpf(t)
        total = mpmath.mpf(0)
        for k, v in enumerate(stehfest_weights(terms), start=1):
            s = k * ln2_t
            try:
                f = transform(s)
            except TypeError:
                f = transform(float(s))
            total += _to_mpf(v) * _to_mpf(f)
        return float(ln2_t * total)
