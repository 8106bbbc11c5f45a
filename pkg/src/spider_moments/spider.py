"""Spider configurations and the Bessel-diffusion ingredients.

Everything analytic here uses the hitting-time transform normalized to one
at the vertex, ``phi(0+) = 1``. With that normalization the vertex constant
``c_lam = -d phi / dS (0+)`` scales like ``lam ** (-nu)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import integrate, special


class SpiderConfigError(ValueError):
    """Invalid leg weights, Bessel order or multi-index."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, abserr: float):
        super().__init__(f"{message} (achieved error estimate {abserr:.3e})")
        self.abserr = abserr


def to_fraction(value) -> Fraction:
    """Parse ``"p/q"`` strings, ints and Fractions; floats are taken exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


@dataclass(frozen=True)
class SpiderConfig:
    """Leg weights of a spider: positive rationals summing exactly to one."""

    betas: tuple[Fraction, ...]

    def __post_init__(self):
        try:
            betas = tuple(to_fraction(b) for b in self.betas)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise SpiderConfigError(f"cannot parse leg weights {self.betas!r}: {exc}") from None
        if not betas:
            raise SpiderConfigError("a spider needs at least one leg")
        if any(b <= 0 for b in betas):
            raise SpiderConfigError(f"leg weights must be positive, got {[str(b) for b in betas]}")
        if sum(betas) != 1:
            raise SpiderConfigError(f"leg weights must sum to 1, they sum to {sum(betas)}")
        object.__setattr__(self, "betas", betas)

    @classmethod
    def uniform(cls, legs: int) -> "SpiderConfig":
        return cls(tuple(Fraction(1, legs) for _ in range(legs)))

    @property
    def leg_count(self) -> int:
        return len(self.betas)

    def beta(self, leg: int) -> Fraction:
        return self.betas[leg]

    def permuted(self, order: Sequence[int]) -> "SpiderConfig":
        return SpiderConfig(tuple(self.betas[i] for i in order))


@dataclass(frozen=True)
class BesselOrder:
    """The Bessel parameter ``nu`` in (-1, 0); dimension ``2 + 2 nu``."""

    nu: Fraction

    def __post_init__(self):
        try:
            nu = to_fraction(self.nu)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise SpiderConfigError(f"cannot parse nu={self.nu!r}: {exc}") from None
        if not -1 < nu < 0:
            raise SpiderConfigError(f"nu must lie in (-1, 0), got {nu}")
        object.__setattr__(self, "nu", nu)

    @property
    def dimension(self) -> Fraction:
        return 2 + 2 * self.nu


@dataclass(frozen=True)
class BesselLaw:
    """Reflecting Bessel diffusion of parameter ``nu`` on the half-line.

    Speed density ``2 y**(2 nu + 1)``, scale ``-x**(-2 nu) / (2 nu)`` and
    decreasing eigenfunction ``y**(-nu) K_nu(y sqrt(2 lam))``.
    """

    order: BesselOrder

    def __post_init__(self):
        if not isinstance(self.order, BesselOrder):
            object.__setattr__(self, "order", BesselOrder(self.order))

    @property
    def nu(self) -> float:
        return float(self.order.nu)

    def speed_density(self, y):
        return 2.0 * np.power(y, 2.0 * self.nu + 1.0)

    def scale(self, x):
        return -np.power(x, -2.0 * self.nu) / (2.0 * self.nu)

    def inverse_scale(self, s):
        return np.power(-2.0 * self.nu * np.asarray(s, dtype=float), -1.0 / (2.0 * self.nu))

    def phi(self, lam: float, y):
        """Unnormalized eigenfunction ``y**(-nu) K_nu(y sqrt(2 lam))``."""
        y = np.asarray(y, dtype=float)
        return np.power(y, -self.nu) * bessel_k(self.nu, y * math.sqrt(2.0 * lam))

    def phi_at_zero(self, lam: float) -> float:
        """Limit of :meth:`phi` at the vertex, ``Gamma(-nu) 2**(-nu/2-1) lam**(nu/2)``."""
        nu = self.nu
        return math.gamma(-nu) * 2.0 ** (-nu / 2.0 - 1.0) * lam ** (nu / 2.0)


@dataclass(frozen=True)
class MultiIndex:
    """Exponents ``n_i >= 1`` attached to a set of (0-based) legs.

    The empty multi-index stands for the order-0 moment.
    """

    entries: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        items = self.entries.items() if isinstance(self.entries, Mapping) else self.entries
        merged: dict[int, int] = {}
        for leg, n in items:
            leg, n = int(leg), int(n)
            if leg < 0:
                raise SpiderConfigError(f"leg index must be nonnegative, got {leg}")
            if n < 1:
                raise SpiderConfigError(f"exponent on leg {leg} must be at least 1, got {n}")
            if leg in merged:
                raise SpiderConfigError(f"leg {leg} appears twice")
            merged[leg] = n
        object.__setattr__(self, "entries", tuple(sorted(merged.items())))

    @classmethod
    def of(cls, *exponents: int) -> "MultiIndex":
        """Exponents for legs 0, 1, ... in order."""
        return cls(tuple(enumerate(exponents)))

    @property
    def legs(self) -> tuple[int, ...]:
        return tuple(leg for leg, _ in self.entries)

    @property
    def exponents(self) -> tuple[int, ...]:
        return tuple(n for _, n in self.entries)

    @property
    def total(self) -> int:
        return sum(self.exponents)

    def __len__(self) -> int:
        return len(self.entries)

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def reduced(self, leg: int, k: int) -> "MultiIndex":
        """Lower the exponent on ``leg`` by ``k``; the leg is dropped at zero."""
        d = self.as_dict()
        d[leg] -= k
        if d[leg] < 0:
            raise ValueError(f"cannot lower exponent {d[leg] + k} by {k}")
        if d[leg] == 0:
            del d[leg]
        return MultiIndex(tuple(d.items()))

    def check(self, config: SpiderConfig) -> "MultiIndex":
        for leg in self.legs:
            if leg >= config.leg_count:
                raise SpiderConfigError(
                    f"leg {leg} does not exist on a spider with {config.leg_count} legs")
        return self

    def __str__(self) -> str:
        return "(" + ",".join(f"{leg}:{n}" for leg, n in self.entries) + ")"


# ---------------------------------------------------------------------------
# special functions


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind ``K_nu(x)`` for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("K_nu is only evaluated at positive arguments")
    with np.errstate(over="ignore"):
        out = special.kv(abs(float(nu)), x)
    if np.any(np.isinf(out)):
        raise OverflowError(f"K_{nu} overflows for argument(s) {x[np.isinf(out)]}")
    return out if out.ndim else float(out)


def phi_normalized(law: BesselLaw, lam: float, y):
    """``E_y[exp(-lam H_0)]``: the eigenfunction divided by its vertex value."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    y = np.asarray(y, dtype=float)
    out = np.ones_like(y)
    pos = y > 0
    if np.any(pos):
        yp = y[pos]
        arg = yp * math.sqrt(2.0 * lam)
        with np.errstate(under="ignore"):
            # kve keeps the large-argument end from underflowing before the product
            val = np.power(yp, -law.nu) * special.kve(abs(law.nu), arg) * np.exp(-arg)
        out[pos] = val / law.phi_at_zero(lam)
    return out if out.ndim else float(out)


def c_normalized(law: BesselLaw, lam: float) -> float:
    """Vertex constant for the normalized eigenfunction.

    ``2**(nu+1) Gamma(nu+1) / Gamma(-nu) * lam**(-nu)``.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    nu = law.nu
    return 2.0 ** (nu + 1.0) * math.gamma(nu + 1.0) / math.gamma(-nu) * lam ** (-nu)


def c_ratio(nu, lam, z, exponent_scale=1):
    """``c_{lam+z} / c_lam = ((lam + z) / lam) ** (-nu * exponent_scale)``."""
    return ((lam + z) / lam) ** (-nu * exponent_scale)


def green_at_vertex(law: BesselLaw, lam: float, y):
    """Resolvent density between the vertex and a point at distance ``y``."""
    return phi_normalized(law, lam, y) / c_normalized(law, lam)


# ---------------------------------------------------------------------------
# quadrature against the speed measure


def _tail_cutoff(lam: float, extra_power: int = 0, tol: float = 1e-13) -> float:
    a = math.sqrt(2.0 * lam)
    y = 1.0 / a
    while math.exp(-2.0 * a * y) * (1.0 + a * y) ** (extra_power + 2) > tol:
        y *= 1.25
    return y


def speed_integral(law: BesselLaw, f: Callable[[float], float], lam: float,
                   extra_power: int = 0, epsabs: float = 1e-11, epsrel: float = 1e-10) -> float:
    """``int_0^inf f(y) m(dy)`` for integrands decaying like ``phi_lam(y)**2``.

    The algebraic factor of the speed density is handled by a weighted rule,
    and the range is cut where the exponential tail is below 1e-13.
    """
    upper = _tail_cutoff(lam, extra_power)
    alpha = 2.0 * law.nu + 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr, info = integrate.quad(
            lambda y: 2.0 * f(y), 0.0, upper, weight="alg", wvar=(alpha, 0.0),
            epsabs=epsabs, epsrel=epsrel, limit=400, full_output=True)[:3]
    if abserr > max(1e-8, 1e-7 * abs(value)):
        raise QuadratureError("speed-measure quadrature did not converge", abserr)
    return value


# ---------------------------------------------------------------------------
# derivatives in lambda

_STENCILS = {
    # offsets -2h..2h, leading error order
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, 4),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, 4),
    3: (np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0, 2),
}


def lambda_derivative(f: Callable[[np.ndarray], np.ndarray], lam: float, order: int,
                      rel_step: float = 5e-2, levels: int = 2):
    """Derivative of ``f`` at ``lam`` by 5-point central differences.

    ``f`` maps an array of lambda values to values (it may return a 2-D
    array with lambda on the first axis). Steps ``h, h/2, ...`` are combined
    by Richardson extrapolation over ``levels`` levels in even powers of h.
    The extrapolation removes truncation error through h**6 or beyond, so
    a coarse base step (5% of lambda) keeps round-off in the third
    derivative near 1e-8 instead of 1e-4.
    """
    if order == 0:
        return f(np.array([lam]))[0]
    weights, lead = _STENCILS[order]
    h0 = rel_step * lam
    steps = [h0 / 2 ** i for i in range(levels + 1)]
    grid = np.concatenate([lam + h * np.arange(-2, 3) for h in steps])
    vals = f(grid)
    ests = []
    for i, h in enumerate(steps):
        block = vals[5 * i:5 * i + 5]
        ests.append(np.tensordot(weights, block, axes=(0, 0)) / h ** order)
    # Richardson table; successive columns remove h**lead, h**(lead+2), ...
    table = ests
    p = lead
    for _ in range(levels):
        factor = 2.0 ** p
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
        p += 2
    return table[0]


# ---------------------------------------------------------------------------
# D-factors


def d_factor_closed(nu, beta, k: int) -> Fraction:
    """``-beta * binom(nu + k - 1, k)``, exact and independent of lambda."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    nu, beta = to_fraction(nu), to_fraction(beta)
    rising = Fraction(1)
    for i in range(k):
        rising *= nu + i
    return -beta * rising / factorial(k)


def d_factor_numeric(law: BesselLaw, beta, k: int, lam: float,
                     rel_step: float = 5e-2) -> float:
    """D-factor from its integral definition by quadrature.

    Integrates the vertex resolvent density against
    ``E_y[H**(k-1) exp(-lam H)] = (-1)**(k-1) d^(k-1)/dlam^(k-1) phi``
    over the speed measure, then multiplies by ``beta lam**k / (k-1)!``.
    """
    if not 1 <= k <= 4:
        raise ValueError("numeric D-factors are limited to k <= 4")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    c = c_normalized(law, lam)
    sign = (-1.0) ** (k - 1)

    def integrand(y: float) -> float:
        phi = phi_normalized(law, lam, y)
        if k == 1:
            return phi * phi / c
        deriv = lambda_derivative(lambda ls: _phi_over_lambdas(law, ls, y), lam, k - 1,
                                  rel_step=rel_step)
        return phi / c * sign * deriv

    value = speed_integral(law, integrand, lam, extra_power=k, epsabs=1e-10, epsrel=1e-9)
    return float(beta) * lam ** k / factorial(k - 1) * value


def _phi_over_lambdas(law: BesselLaw, lams: np.ndarray, y: float) -> np.ndarray:
    if y <= 0:
        return np.ones_like(lams)
    arg = y * np.sqrt(2.0 * lams)
    nu = law.nu
    phi0 = math.gamma(-nu) * 2.0 ** (-nu / 2.0 - 1.0) * np.power(lams, nu / 2.0)
    with np.errstate(under="ignore"):
        return y ** (-nu) * special.kve(abs(nu), arg) * np.exp(-arg) / phi0


# ---------------------------------------------------------------------------
# sectors of the plane


def sector_weights(angle_cdf: Callable[[float], float], boundaries: Iterable[float],
                   max_denominator: int = 10 ** 12) -> SpiderConfig:
    """Leg weights for occupation of angular sectors ``[theta_{i-1}, theta_i)``.

    ``boundaries`` runs from 0 to 2*pi. CDF values are rationalized with
    bounded denominators so the weights telescope to exactly one.
    """
    thetas = [float(t) for t in boundaries]
    two_pi = 2.0 * math.pi
    if len(thetas) < 2 or abs(thetas[0]) > 1e-12 or abs(thetas[-1] - two_pi) > 1e-9:
        raise SpiderConfigError("sector boundaries must start at 0 and end at 2*pi")
    if any(b <= a for a, b in zip(thetas, thetas[1:])):
        raise SpiderConfigError("sector boundaries must be strictly increasing")
    values = [float(angle_cdf(t)) for t in thetas]
    if abs(values[0]) > 1e-12 or abs(values[-1] - 1.0) > 1e-12:
        raise SpiderConfigError("angle distribution must have cdf(0)=0 and cdf(2*pi)=1")
    if any(b < a for a, b in zip(values, values[1:])):
        raise SpiderConfigError("angle cdf must be nondecreasing")
    exact = [Fraction(0)] + [Fraction(v).limit_denominator(max_denominator) for v in values[1:-1]] \
        + [Fraction(1)]
    betas = [b - a for a, b in zip(exact, exact[1:])]
    for i, b in enumerate(betas):
        if b <= 0:
            raise SpiderConfigError(f"sector {i} has zero probability")
    return SpiderConfig(tuple(betas))


def uniform_angle_cdf(theta: float) -> float:
    return min(max(theta / (2.0 * math.pi), 0.0), 1.0)
