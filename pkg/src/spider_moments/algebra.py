"""Exact polynomials in the Bessel parameter and truncated power series over them."""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from numbers import Rational
from typing import Iterable, Mapping


class NonUnitError(ArithmeticError):
    """Raised when a series without an invertible constant term is inverted."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class NuPolynomial:
    """Polynomial in ``nu`` with rational coefficients, lowest power first.

    Instances are immutable and kept in canonical form (no trailing zero
    coefficients), so equality is structural.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [_as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self._coeffs = tuple(cs)

    @classmethod
    def constant(cls, value) -> "NuPolynomial":
        return cls([value])

    @classmethod
    def nu(cls) -> "NuPolynomial":
        return cls([0, 1])

    @classmethod
    def linear(cls, a, b) -> "NuPolynomial":
        """The form ``a*nu + b``."""
        return cls([b, a])

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return self._coeffs

    @property
    def degree(self) -> int:
        # zero polynomial reported as degree 0, like a constant
        return max(len(self._coeffs) - 1, 0)

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_constant(self) -> bool:
        return len(self._coeffs) <= 1

    def constant_term(self) -> Fraction:
        return self._coeffs[0] if self._coeffs else Fraction(0)

    def _coerce(self, other) -> "NuPolynomial":
        if isinstance(other, NuPolynomial):
            return other
        return NuPolynomial.constant(other)

    def __add__(self, other) -> "NuPolynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        a, b = self._coeffs, other._coeffs
        if len(a) < len(b):
            a, b = b, a
        return NuPolynomial([x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)])

    __radd__ = __add__

    def __neg__(self) -> "NuPolynomial":
        return NuPolynomial([-c for c in self._coeffs])

    def __sub__(self, other) -> "NuPolynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "NuPolynomial":
        return (-self) + other

    def __mul__(self, other) -> "NuPolynomial":
        if not isinstance(other, NuPolynomial):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        a, b = self._coeffs, other._coeffs
        if not a or not b:
            return NuPolynomial()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                out[i + j] += x * y
        return NuPolynomial(out)

    __rmul__ = __mul__

    def scale(self, factor) -> "NuPolynomial":
        f = _as_fraction(factor)
        return NuPolynomial([f * c for c in self._coeffs])

    def shift_down(self) -> "NuPolynomial":
        """Divide by ``nu``; the constant coefficient must vanish."""
        if self._coeffs and self._coeffs[0] != 0:
            raise ArithmeticError("polynomial is not divisible by nu")
        return NuPolynomial(self._coeffs[1:])

    def __call__(self, nu) -> Fraction:
        return self.evaluate_at(nu)

    def evaluate_at(self, nu):
        """Exact for rational ``nu``; floating point otherwise."""
        if isinstance(nu, (int, Fraction)):
            acc, coeffs = Fraction(0), self._coeffs
        else:
            acc, coeffs = 0.0, [float(c) for c in self._coeffs]
        for c in reversed(coeffs):
            acc = acc * nu + c
        return acc

    def __eq__(self, other) -> bool:
        if isinstance(other, NuPolynomial):
            return self._coeffs == other._coeffs
        try:
            return self._coeffs == NuPolynomial.constant(other)._coeffs
        except TypeError:
            return NotImplemented

    def __hash__(self) -> int:
        return hash(self._coeffs)

    def __repr__(self) -> str:
        if not self._coeffs:
            return "NuPolynomial(0)"
        terms = []
        for i, c in enumerate(self._coeffs):
            if c == 0:
                continue
            mono = "" if i == 0 else ("nu" if i == 1 else f"nu^{i}")
            terms.append(f"{c}*{mono}" if mono else f"{c}")
        return "NuPolynomial(" + " + ".join(terms) + ")"


def generalized_binomial(p: NuPolynomial, k: int) -> NuPolynomial:
    """``binom(p, k) = p (p-1) ... (p-k+1) / k!`` for a polynomial argument ``p``."""
    out = NuPolynomial.constant(1)
    for i in range(k):
        out = (out * (p - i)).scale(Fraction(1, i + 1))
    return out


Exponents = tuple[int, ...]


class TruncatedSeries:
    """Power series in ``z_0 .. z_{r-1}`` truncated at a total degree.

    Coefficients are :class:`NuPolynomial` values keyed by exponent tuples;
    absent keys are zero.
    """

    __slots__ = ("variables", "max_total_degree", "_terms")

    def __init__(self, variables: int, max_total_degree: int,
                 terms: Mapping[Exponents, NuPolynomial] | None = None):
        if variables < 1:
            raise ValueError("a series needs at least one variable")
        if max_total_degree < 0:
            raise ValueError("truncation order must be nonnegative")
        self.variables = variables
        self.max_total_degree = max_total_degree
        clean: dict[Exponents, NuPolynomial] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != variables:
                raise ValueError(f"exponent {exps} does not have {variables} entries")
            if sum(exps) > max_total_degree:
                continue
            if not isinstance(c, NuPolynomial):
                c = NuPolynomial.constant(c)
            if not c.is_zero():
                clean[exps] = c
        self._terms = clean

    @classmethod
    def constant(cls, value, variables: int, max_total_degree: int) -> "TruncatedSeries":
        return cls(variables, max_total_degree, {(0,) * variables: value})

    @classmethod
    def variable(cls, j: int, variables: int, max_total_degree: int) -> "TruncatedSeries":
        exps = tuple(1 if i == j else 0 for i in range(variables))
        return cls(variables, max_total_degree, {exps: 1})

    @property
    def terms(self) -> dict[Exponents, NuPolynomial]:
        return dict(self._terms)

    def coefficient(self, exps: Exponents) -> NuPolynomial:
        return self._terms.get(tuple(exps), NuPolynomial())

    def _compatible(self, other: "TruncatedSeries") -> int:
        if other.variables != self.variables:
            raise ValueError("series have different numbers of variables")
        return min(self.max_total_degree, other.max_total_degree)

    def _lift(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return other
        return TruncatedSeries.constant(other, self.variables, self.max_total_degree)

    def __add__(self, other) -> "TruncatedSeries":
        other = self._lift(other)
        order = self._compatible(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out[e] + c if e in out else c
        return TruncatedSeries(self.variables, order, out)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.variables, self.max_total_degree,
                               {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "TruncatedSeries":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "TruncatedSeries":
        return (-self) + other

    def __mul__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(self.variables, self.max_total_degree,
                                   {e: c * other for e, c in self._terms.items()})
        order = self._compatible(other)
        out: dict[Exponents, NuPolynomial] = {}
        right = list(other._terms.items())
        for ea, ca in self._terms.items():
            da = sum(ea)
            for eb, cb in right:
                if da + sum(eb) > order:
                    continue
                e = tuple(x + y for x, y in zip(ea, eb))
                prod_ = ca * cb
                out[e] = out[e] + prod_ if e in out else prod_
        return TruncatedSeries(self.variables, order, out)

    __rmul__ = __mul__

    def reciprocal(self) -> "TruncatedSeries":
        """Multiplicative inverse up to the truncation order.

        The constant term must be a nonzero constant polynomial; anything
        else has no inverse among series with polynomial coefficients.
        """
        zero = (0,) * self.variables
        c0 = self._terms.get(zero)
        if c0 is None or not c0.is_constant():
            raise NonUnitError("constant term is not a nonzero rational; series is not a unit")
        inv0 = 1 / c0.constant_term()
        order = self.max_total_degree
        out: dict[Exponents, NuPolynomial] = {zero: NuPolynomial.constant(inv0)}
        # b_m = -inv0 * sum_{0 < p <= m} a_p b_{m-p}, filled by increasing total degree
        for m in _monomials(self.variables, order):
            if m == zero:
                continue
            acc = NuPolynomial()
            for p, ap in self._terms.items():
                if p == zero or any(pi > mi for pi, mi in zip(p, m)):
                    continue
                rest = tuple(mi - pi for mi, pi in zip(m, p))
                b = out.get(rest)
                if b is not None:
                    acc = acc + ap * b
            if not acc.is_zero():
                out[m] = acc.scale(-inv0)
        return TruncatedSeries(self.variables, order, out)

    def __truediv__(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return self * (Fraction(1) / _as_fraction(other))

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.variables, min(order, self.max_total_degree), self._terms)

    def evaluate_nu(self, nu) -> dict[Exponents, Fraction]:
        return {e: c(nu) for e, c in self._terms.items()}

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.variables == other.variables
                and self.max_total_degree == other.max_total_degree
                and self._terms == other._terms)

    def __repr__(self) -> str:
        return (f"TruncatedSeries(variables={self.variables}, "
                f"order={self.max_total_degree}, terms={len(self._terms)})")


def _monomials(variables: int, order: int):
    """Exponent tuples with total degree <= order, sorted by total degree."""
    all_exps = [e for e in product(range(order + 1), repeat=variables) if sum(e) <= order]
    all_exps.sort(key=lambda e: (sum(e), e))
    return all_exps


def series_binomial(exponent: NuPolynomial, variable: int, variables: int,
                    order: int, lam=1) -> TruncatedSeries:
    """Truncation of ``(1 + z_j / lam) ** exponent`` with ``exponent`` polynomial in nu.

    The coefficient of ``z_j**k`` is ``binom(exponent, k) / lam**k``.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    lam = _as_fraction(lam)
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not isinstance(exponent, NuPolynomial):
        exponent = NuPolynomial.constant(exponent)
    terms = {}
    for k in range(order + 1):
        exps = tuple(k if i == variable else 0 for i in range(variables))
        terms[exps] = generalized_binomial(exponent, k).scale(1 / lam ** k)
    return TruncatedSeries(variables, order, terms)
