"""Exact combinatorial kernel.

Stirling numbers of both kinds, Bessel numbers of the first kind and
binomial coefficients, all as Python integers. Values come from the
triangle recurrences and are memoized in tables that grow on demand.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from math import factorial

MAX_INDEX = 10_000

_lock = threading.Lock()
_s1_rows: list[list[int]] = [[1]]
_s2_rows: list[list[int]] = [[1]]
_pascal_rows: list[list[int]] = [[1]]
_bessel_rows: list[list[int]] = [[1]]


def _check_index(n: int, name: str = "n") -> None:
    if n < 0:
        raise ValueError(f"{name} must be nonnegative, got {n}")
    if n > MAX_INDEX:
        raise ValueError(f"{name}={n} exceeds the table limit {MAX_INDEX}")


def _grow(rows: list[list[int]], n: int, step) -> None:
    # Readers only ever see complete rows: a row is appended after it is built.
    if len(rows) > n:
        return
    with _lock:
        while len(rows) <= n:
            m = len(rows)
            prev = rows[m - 1]
            row = [0] * (m + 1)
            for k in range(m + 1):
                left = prev[k - 1] if k > 0 else 0
                right = prev[k] if k < m else 0
                row[k] = step(m, k, left, right)
            rows.append(row)


def stirling1(n: int, k: int) -> int:
    """Unsigned Stirling number of the first kind ``[n, k]``.

    Counts permutations of ``n`` elements with exactly ``k`` cycles.
    """
    _check_index(n)
    _check_index(k, "k")
    if k > n:
        return 0
    _grow(_s1_rows, n, lambda m, k, left, right: left + (m - 1) * right)
    return _s1_rows[n][k]


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind ``{n, k}`` (set partitions into k blocks)."""
    _check_index(n)
    _check_index(k, "k")
    if k > n:
        return 0
    _grow(_s2_rows, n, lambda m, k, left, right: left + k * right)
    return _s2_rows[n][k]


def binomial(n: int, k: int) -> int:
    _check_index(n)
    _check_index(k, "k")
    if k > n:
        return 0
    _grow(_pascal_rows, n, lambda m, k, left, right: left + right)
    return _pascal_rows[n][k]


def bessel_number(n: int, k: int) -> int:
    """Signed Bessel number of the first kind.

    ``b(n, k) = (-1)**(n-k) (2n-k-1)! / (2**(n-k) (k-1)! (n-k)!)``, which is
    also the coefficient relating the two Stirling kinds through
    ``sum_i [n, i] {i, k} (-2)**(n-i)``.
    """
    if not 1 <= k <= n:
        raise ValueError(f"bessel_number needs 1 <= k <= n, got n={n}, k={k}")
    _check_index(n)
    _grow(_bessel_rows, n, lambda m, k, left, right: left - (2 * m - k - 2) * right)
    return _bessel_rows[n][k]


def rising_binomial_poly(k: int):
    """The polynomial ``binom(nu + k - 1, k)`` in ``nu`` as a :class:`NuPolynomial`.

    Equal to ``(1/k!) * sum_j [k, j] nu**j``.
    """
    from .algebra import NuPolynomial

    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    fk = factorial(k)
    coeffs = [Fraction(0)] + [Fraction(stirling1(k, j), fk) for j in range(1, k + 1)]
    return NuPolynomial(coeffs)
