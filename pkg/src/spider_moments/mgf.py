"""Moment generating function of the leg occupation times at an exponential time.

``T`` is exponential with rate ``lam`` and independent of the spider. Three
evaluations are provided: the closed Bessel form in terms of the vertex
constant ratio, the general integral form by quadrature, and exact
extraction of joint moments from the closed form's power series at
``lam = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .algebra import NuPolynomial, TruncatedSeries, series_binomial, _monomials
from .spider import (
    BesselLaw,
    MultiIndex,
    SpiderConfig,
    c_normalized,
    c_ratio,
    phi_normalized,
    speed_integral,
    to_fraction,
)

MAX_SERIES_ORDER = 10


@dataclass(frozen=True)
class MgfQuery:
    """Rate ``lam`` and arguments ``z`` on the selected legs (all legs by default)."""

    lam: float
    z: tuple
    legs: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(self.z))
        if self.legs is not None:
            object.__setattr__(self, "legs", tuple(self.legs))
            if len(self.legs) != len(self.z):
                raise ValueError("one z value is needed per selected leg")
            if len(set(self.legs)) != len(self.legs):
                raise ValueError("legs must be distinct")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if any(z < 0 for z in self.z):
            raise ValueError("z values must be nonnegative")

    def selected(self, config: SpiderConfig) -> list[tuple[int, object]]:
        legs = self.legs if self.legs is not None else tuple(range(len(self.z)))
        for leg in legs:
            if not 0 <= leg < config.leg_count:
                raise ValueError(f"leg {leg} does not exist on a {config.leg_count}-leg spider")
        return list(zip(legs, self.z))


def mgf_bessel_closed(nu, config: SpiderConfig, query: MgfQuery,
                      exponent_scale=1) -> float:
    """``E_0[exp(-sum z_i A_T^(i))]`` for a Bessel spider.

    Uses ``c_{lam+z}/c_lam = ((lam+z)/lam)**(-nu)``. ``exponent_scale``
    multiplies that exponent and exists only to demonstrate what a wrong
    convention does to the moments.
    """
    pairs = [(config.beta(leg), z) for leg, z in query.selected(config)]
    return bessel_mgf_value(nu, query.lam, pairs, exponent_scale)


def bessel_mgf_value(nu, lam, pairs: Sequence[tuple[object, float]], exponent_scale=1) -> float:
    """Closed form for ``(beta_j, z_j)`` pairs without argument checks.

    Only ``lam + z_j > 0`` is needed, which lets difference stencils step
    across ``z = 0``.
    """
    nu, lam = float(nu), float(lam)
    rest = 1.0
    num, den = [], []
    for b, z in pairs:
        b, z = float(b), float(z)
        ratio = c_ratio(nu, lam, z, exponent_scale)
        rest -= b
        num.append(lam * b / (lam + z) * ratio)
        den.append(b * ratio)
    return (rest + math.fsum(num)) / (rest + math.fsum(den))


def mgf_general_quadrature(law: BesselLaw, config: SpiderConfig, query: MgfQuery) -> float:
    """The same MGF from the resolvent density and hitting-time transforms.

    Each leg with ``z_j > 0`` contributes two speed-measure integrals,
    evaluated by adaptive quadrature.
    """
    lam = float(query.lam)
    c = c_normalized(law, lam)
    num, den = [1.0], [1.0]
    for leg, z in query.selected(config):
        z = float(z)
        if z == 0.0:
            continue
        b = float(config.beta(leg))
        # 1 - phi_{lam+z} does not vanish at infinity, so the tail decays only like phi_lam
        escape = speed_integral(
            law, lambda y: phi_normalized(law, lam, y) * (1.0 - phi_normalized(law, lam + z, y)),
            lam / 4.0)
        overlap = speed_integral(
            law, lambda y: phi_normalized(law, lam, y) * phi_normalized(law, lam + z, y),
            min(lam, lam + z))
        num.append(-lam * z / (lam + z) * b / c * escape)
        den.append(z * b / c * overlap)
    return math.fsum(num) / math.fsum(den)


def mgf_partial(mgf: Callable[[Sequence[float]], float], z: Sequence[float], position: int) -> float:
    """``d/dz_position`` of ``mgf`` by a 5-point central difference, step ``1e-4 (1+|z|)``."""
    z = [float(v) for v in z]
    h = 1e-4 * (1.0 + abs(z[position]))

    def at(shift: float) -> float:
        zz = list(z)
        zz[position] += shift
        return mgf(zz)

    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h)


def mgf_series(config: SpiderConfig, max_total_order: int, legs: Sequence[int] | None = None,
               exponent_scale=1) -> TruncatedSeries:
    """Power series of the closed MGF at ``lam = 1`` in ``z`` over ``legs``.

    Coefficients are exact polynomials in ``nu``.
    """
    if not 1 <= max_total_order <= MAX_SERIES_ORDER:
        raise ValueError(f"max_total_order must lie in 1..{MAX_SERIES_ORDER}")
    legs = tuple(range(config.leg_count)) if legs is None else tuple(legs)
    if not legs or len(set(legs)) != len(legs) or any(
            not 0 <= leg < config.leg_count for leg in legs):
        raise ValueError(f"invalid leg selection {legs}")
    scale = to_fraction(exponent_scale)
    r = len(legs)
    rest = 1 - sum(config.beta(leg) for leg in legs)
    num = TruncatedSeries.constant(rest, r, max_total_order)
    den = TruncatedSeries.constant(rest, r, max_total_order)
    e = NuPolynomial.linear(-scale, 0)
    for j, leg in enumerate(legs):
        b = config.beta(leg)
        num = num + series_binomial(e - 1, j, r, max_total_order) * b
        den = den + series_binomial(e, j, r, max_total_order) * b
    return num / den


def mgf_series_polynomials(config: SpiderConfig, max_total_order: int,
                           legs: Sequence[int] | None = None,
                           exponent_scale=1) -> dict[MultiIndex, NuPolynomial]:
    """Joint moments at time 1 as polynomials in ``nu``, read off the MGF series.

    ``E[prod A_T^n] = N!/lam**N E[prod A_1^n]`` turns the coefficient ``c_n``
    of ``prod z^n`` into ``(-1)**N prod(n_i!) c_n / N!``.
    """
    legs = tuple(range(config.leg_count)) if legs is None else tuple(legs)
    series = mgf_series(config, max_total_order, legs, exponent_scale)
    out: dict[MultiIndex, NuPolynomial] = {}
    for exps in _monomials(len(legs), max_total_order):
        n = sum(exps)
        if n == 0:
            continue
        factor = Fraction((-1) ** n * math.prod(math.factorial(k) for k in exps), math.factorial(n))
        idx = MultiIndex({leg: k for leg, k in zip(legs, exps) if k})
        out[idx] = series.coefficient(exps).scale(factor)
    return out


def mgf_series_moments(nu, config: SpiderConfig, max_total_order: int,
                       legs: Sequence[int] | None = None,
                       exponent_scale=1) -> dict[MultiIndex, Fraction]:
    """Exact joint moments ``E_0[prod (A_1^(i))^n_i]`` for every index up to the order."""
    nu = to_fraction(nu)
    return {idx: p(nu) for idx, p in
            mgf_series_polynomials(config, max_total_order, legs, exponent_scale).items()}
