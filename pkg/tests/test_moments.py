import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from spider_moments.algebra import NuPolynomial
from spider_moments.moments import (
    ClosedFormD,
    MissingDFactorError,
    NumericD,
    PaperLiteralError,
    TableD,
    brownian_joint_moment,
    joint_moment_closed,
    joint_moment_poly,
    joint_moment_recursive,
    laplace_invert,
    laplace_joint_moment,
    laplace_to_moment,
    selfsimilar_coefficient,
    single_moment_closed,
    stehfest_weights,
)
from spider_moments.spider import BesselLaw, MultiIndex, SpiderConfig, d_factor_closed

HALF = Fraction(1, 2)
BROWNIAN = Fraction(-1, 2)
SYM2 = SpiderConfig((HALF, HALF))


def random_config(rng, legs):
    cuts = sorted(Fraction(rng.randint(1, 97), 98) for _ in range(legs - 1))
    while len(set(cuts)) != len(cuts):
        cuts = sorted(Fraction(rng.randint(1, 97), 98) for _ in range(legs - 1))
    edges = [Fraction(0)] + cuts + [Fraction(1)]
    return SpiderConfig(tuple(b - a for a, b in zip(edges, edges[1:])))


def indices(legs, max_total):
    for exps in itertools.product(range(max_total + 1), repeat=legs):
        if 0 < sum(exps) <= max_total:
            yield MultiIndex({i: n for i, n in enumerate(exps) if n})


class TestClosedForms:

    def test_single_leg(self):
        assert single_moment_closed(Fraction(-1, 3), Fraction(2, 7), 1) == Fraction(2, 7)
        assert single_moment_closed(BROWNIAN, HALF, 2) == Fraction(3, 8)
        nu, b = Fraction(-2, 5), Fraction(1, 3)
        assert single_moment_closed(nu, b, 2) == b * (1 + nu * (1 - b))

    def test_arcsine_moments(self):
        for n in range(1, 11):
            assert single_moment_closed(BROWNIAN, HALF, n) == Fraction(math.comb(2 * n, n), 4 ** n)

    def test_arcsine_against_density(self):
        # arcsine density 1 / (pi sqrt(x(1-x))) via an algebraic-weight rule
        for n in (1, 4, 9):
            val, _ = integrate.quad(lambda x: x ** n / math.pi, 0, 1, weight="alg",
                                    wvar=(-0.5, -0.5), epsabs=1e-14, epsrel=1e-13)
            assert float(single_moment_closed(BROWNIAN, HALF, n)) == pytest.approx(val, abs=1e-10)

    def test_first_powers_product(self):
        rng = random.Random(3)
        for r in range(1, 6):
            cfg = random_config(rng, r)
            nu = -Fraction(rng.randint(1, 30), 31)
            expected = (-nu) ** (r - 1) * math.prod(cfg.betas)
            assert joint_moment_closed(nu, cfg, MultiIndex.of(*[1] * r)) == expected

    def test_symbolic_two_one(self):
        b1, b2 = Fraction(1, 3), Fraction(2, 3)
        nu = NuPolynomial.nu()
        expected = (nu * nu * b1 - (nu * nu + nu) * HALF) * (b1 * b2)
        assert joint_moment_poly(SpiderConfig((b1, b2)), MultiIndex.of(2, 1)) == expected

    def test_brownian_values(self):
        assert brownian_joint_moment(SYM2, MultiIndex.of(1, 1)) == Fraction(1, 8)
        assert brownian_joint_moment(SYM2, MultiIndex.of(2, 1)) == Fraction(1, 16)
        assert joint_moment_closed(BROWNIAN, SYM2, MultiIndex.of(2, 1)) == Fraction(1, 16)

    def test_recursive_examples(self):
        nu, b = Fraction(-3, 7), Fraction(2, 9)
        cfg = SpiderConfig((b, 1 - b))
        assert joint_moment_recursive(ClosedFormD(nu), cfg, MultiIndex.of(1, 1)) == -nu * b * (1 - b)
        assert joint_moment_recursive(ClosedFormD(nu), cfg, MultiIndex.of(2)) == b + nu * b * (1 - b)

    def test_recursive_needs_exact_provider(self):
        with pytest.raises(TypeError):
            joint_moment_recursive(NumericD(BesselLaw(BROWNIAN)), SYM2, MultiIndex.of(1))


class TestEngineAgreement:

    def test_three_way_small(self):
        rng = random.Random(11)
        for _ in range(4):
            legs = rng.randint(1, 3)
            cfg = random_config(rng, legs)
            nu = -Fraction(rng.randint(1, 40), 41)
            for idx in indices(legs, 5):
                closed = joint_moment_closed(nu, cfg, idx)
                assert joint_moment_recursive(ClosedFormD(nu), cfg, idx) == closed
                assert joint_moment_closed(BROWNIAN, cfg, idx) == brownian_joint_moment(cfg, idx)

    def test_polynomial_matches_evaluation(self):
        cfg = SpiderConfig((Fraction(1, 5), Fraction(4, 5)))
        for idx in indices(2, 5):
            p = joint_moment_poly(cfg, idx)
            for nu in (Fraction(-1, 9), Fraction(-5, 6)):
                assert p(nu) == joint_moment_closed(nu, cfg, idx)

    def test_symmetry(self):
        cfg = SpiderConfig((Fraction(1, 6), Fraction(1, 3), HALF))
        nu = Fraction(-2, 7)
        for idx in indices(3, 5):
            for perm in itertools.permutations(range(3)):
                moved = MultiIndex({perm.index(leg): n for leg, n in idx.entries})
                assert joint_moment_closed(nu, cfg.permuted(perm), moved) == \
                    joint_moment_closed(nu, cfg, idx)

    def test_bounds_and_first_moments(self):
        cfg = SpiderConfig((Fraction(1, 6), Fraction(1, 3), HALF))
        nu = Fraction(-5, 8)
        for idx in indices(3, 6):
            m = joint_moment_closed(nu, cfg, idx)
            assert 0 < m < 1
        assert sum(joint_moment_closed(nu, cfg, MultiIndex({i: 1})) for i in range(3)) == 1

    def test_selfsimilar_coefficient(self):
        # the Laplace recursion's n!/(n-k)! (N-k)!/N! collapses to binomial ratios
        for n_total in range(1, 10):
            for n in range(1, n_total + 1):
                for k in range(1, n + 1):
                    c = Fraction(math.perm(n, k) * math.factorial(n_total - k),
                                 math.factorial(n_total))
                    assert selfsimilar_coefficient(n, n_total, k) == c


class TestLaplace:

    def test_order_zero(self):
        assert laplace_joint_moment(ClosedFormD(BROWNIAN), SYM2, MultiIndex(), 3) == Fraction(1, 3)

    def test_two_leg_value(self):
        nu = Fraction(-1, 4)
        cfg = SpiderConfig((Fraction(1, 3), Fraction(2, 3)))
        v = laplace_joint_moment(ClosedFormD(nu), cfg, MultiIndex.of(1, 1), 1)
        assert v == 2 * (-nu) * Fraction(2, 9)

    @pytest.mark.parametrize("lam", [Fraction(1, 2), Fraction(1), Fraction(3)])
    def test_selfsimilar_link(self, lam):
        nu = Fraction(-3, 5)
        cfg = SpiderConfig((Fraction(1, 4), Fraction(1, 4), HALF))
        for idx in indices(3, 4):
            v = laplace_joint_moment(ClosedFormD(nu), cfg, idx, lam)
            assert laplace_to_moment(v, idx.total, lam) == joint_moment_closed(nu, cfg, idx)

    def test_numeric_provider(self):
        law = BesselLaw(Fraction(-1, 4))
        cfg = SpiderConfig((Fraction(1, 3), Fraction(2, 3)))
        idx = MultiIndex.of(2, 1)
        v = laplace_joint_moment(NumericD(law), cfg, idx, 2.0)
        assert laplace_to_moment(v, 3, 2.0) == pytest.approx(
            float(joint_moment_closed(law.order.nu, cfg, idx)), abs=1e-8)

    def test_table_provider(self):
        nu = Fraction(-1, 2)
        table = {(leg, k, 1): d_factor_closed(nu, HALF, k) for leg in (0, 1) for k in (1, 2)}
        v = laplace_joint_moment(TableD(table), SYM2, MultiIndex.of(1, 1), 1)
        assert v == pytest.approx(2 / 8)
        with pytest.raises(MissingDFactorError):
            laplace_joint_moment(TableD(table), SYM2, MultiIndex.of(3, 1), 1)

    def test_paper_literal(self):
        provider = ClosedFormD(BROWNIAN)
        with pytest.raises(PaperLiteralError):
            laplace_joint_moment(provider, SYM2, MultiIndex.of(2), 1, paper_literal=True)
        # (1,1) only reduces to order-one bases, which literal mode accepts
        assert laplace_joint_moment(provider, SYM2, MultiIndex.of(1, 1), 1, paper_literal=True) \
            == Fraction(1, 4)

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(ValueError):
            laplace_joint_moment(ClosedFormD(BROWNIAN), SYM2, MultiIndex.of(1), 0)


class TestStehfest:

    def test_weights(self):
        for terms in (10, 14, 18):
            w = stehfest_weights(terms)
            assert len(w) == terms
            # inverting 1/s gives exactly sum V_k / k, which must be 1
            assert sum(w) == 0
            assert sum(v / k for k, v in enumerate(w, start=1)) == 1

    def test_examples(self):
        assert laplace_invert(lambda s: 1 / s ** 2, 2.0, terms=18) == pytest.approx(2, abs=1e-8)
        assert laplace_invert(lambda s: 2 / s ** 3, 1.0, terms=18) == pytest.approx(1, abs=1e-6)
        assert laplace_invert(lambda s: 1 / (s + 1), 1.0, terms=14) == pytest.approx(
            math.exp(-1), abs=1e-6)

    def test_power_function(self):
        m = Fraction(3, 10)
        got = laplace_invert(lambda s: 6 * m / s ** 4, 1.5, terms=18)
        assert got == pytest.approx(float(m) * 1.5 ** 3, rel=1e-4)

    def test_float_only_transform(self):
        got = laplace_invert(lambda s: float(np.exp(-0.0 * s)) / float(s), 1.0, terms=12)
        assert got == pytest.approx(1.0, abs=1e-6)

    def test_laplace_engine_inversion(self):
        nu = Fraction(-1, 4)
        cfg = SpiderConfig((Fraction(1, 3), Fraction(2, 3)))
        idx = MultiIndex.of(2, 2)
        m = float(joint_moment_closed(nu, cfg, idx))
        got = laplace_invert(lambda s: laplace_joint_moment(ClosedFormD(nu), cfg, idx, s), 0.7, 18)
        assert got == pytest.approx(m * 0.7 ** 4, rel=1e-4)

    @pytest.mark.parametrize("terms", [8, 11, 20])
    def test_terms_guard(self, terms):
        with pytest.raises(ValueError):
            laplace_invert(lambda s: 1 / s, 1.0, terms)
