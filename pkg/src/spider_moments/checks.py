"""Cross-validation suites behind ``spider-moments validate``.

Each suite returns :class:`Check` records with the achieved discrepancy
and the tolerance it was held to.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import combinatorics as cb
from .mgf import MgfQuery, mgf_bessel_closed, mgf_general_quadrature, mgf_series_moments
from .moments import (
    ClosedFormD,
    brownian_joint_moment,
    joint_moment_closed,
    joint_moment_recursive,
    laplace_invert,
    laplace_joint_moment,
)
from .simulator import SimConfig, estimate_joint_moments
from .spider import BesselLaw, MultiIndex, SpiderConfig, d_factor_closed, d_factor_numeric

SUITES = ("identities", "engines", "dfactor", "mgf", "laplace", "mc")
DEFAULT_SUITES = ("identities", "engines", "dfactor", "mgf", "laplace")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    achieved: float
    tolerance: float
    detail: str = ""


def _exact(suite: str, name: str, ok: bool, detail: str = "") -> Check:
    return Check(suite, name, ok, 0.0 if ok else 1.0, 0.0, detail)


def indices_up_to(legs: int, order: int) -> list[MultiIndex]:
    out = []
    for exps in itertools.product(range(order + 1), repeat=legs):
        if 0 < sum(exps) <= order:
            out.append(MultiIndex({i: n for i, n in enumerate(exps) if n}))
    return out


def identity_suite(max_n: int = 12) -> list[Check]:
    s1, s2, bn = cb.stirling1, cb.stirling2, cb.binomial
    bad = []
    for n in range(max_n + 1):
        for k in range(n + 1):
            for m in range(n - k + 1):
                lhs = sum(s1(i, k) * s1(n - i, m) * bn(n, i) for i in range(k, n - m + 1))
                if lhs != bn(k + m, k) * s1(n, k + m):
                    bad.append(("s1 convolution", n, k, m))
                lhs = sum(s1(i + 1, k + 1) * s1(n - i, m) * bn(n, i) for i in range(k, n - m + 1))
                if lhs != bn(k + m, k) * s1(n + 1, k + m + 1):
                    bad.append(("shifted s1 convolution", n, k, m))
            if sum(s2(i, k) * bn(n, i) for i in range(k, n + 1)) != s2(n + 1, k + 1):
                bad.append(("S2 binomial sum", n, k))
            if sum(s2(i, k) * bn(n, i - 1) for i in range(max(k, 1), n + 1)) != k * s2(n + 1, k + 1):
                bad.append(("shifted S2 binomial sum", n, k))
            if k >= 1 and sum(s1(n, i) * s2(i, k) * (-2) ** (n - i)
                              for i in range(k, n + 1)) != cb.bessel_number(n, k):
                bad.append(("Bessel number", n, k))
    return [_exact("identities", f"Stirling and Bessel-number identities, n <= {max_n}",
                   not bad, f"first failure {bad[0]}" if bad else "")]


def engine_suite(nu: Fraction, config: SpiderConfig, indices: Sequence[MultiIndex],
                 exponent_scale=1) -> list[Check]:
    order = max(idx.total for idx in indices)
    series = mgf_series_moments(nu, config, min(order, 10), exponent_scale=exponent_scale)
    out = []
    for idx in indices:
        closed = joint_moment_closed(nu, config, idx)
        values = {"recursive": joint_moment_recursive(ClosedFormD(nu), config, idx),
                  "series": series[idx]}
        if nu == Fraction(-1, 2):
            values["brownian"] = brownian_joint_moment(config, idx)
        for engine, v in values.items():
            out.append(Check("engines", f"closed == {engine} at {idx}", v == closed,
                             abs(float(v - closed)), 0.0))
    return out


def dfactor_suite(nu: Fraction, config: SpiderConfig,
                  lams: Sequence[float] = (0.5, 1.0, 2.0)) -> list[Check]:
    law = BesselLaw(nu)
    out = []
    beta = config.beta(0)
    for k in range(1, 5):
        exact = d_factor_closed(nu, beta, k)
        tol = 1e-6 if k <= 2 else 1e-4
        err = max(abs(d_factor_numeric(law, beta, k, lam) - float(exact)) for lam in lams)
        out.append(Check("dfactor", f"D_{k} quadrature vs closed over lambda {tuple(lams)}",
                         err <= tol, err, tol))
    return out


def mgf_suite(nu: Fraction, config: SpiderConfig, lam: float = 1.0,
              grid: Sequence[float] = (0.1, 1.0, 5.0), exponent_scale=1) -> list[Check]:
    law = BesselLaw(nu)
    r = min(config.leg_count, 2)
    err = 0.0
    for z in itertools.product(grid, repeat=r):
        q = MgfQuery(lam, z)
        err = max(err, abs(mgf_general_quadrature(law, config, q)
                           - mgf_bessel_closed(nu, config, q, exponent_scale)))
    out = [Check("mgf", f"quadrature vs closed form at lambda={lam}", err <= 1e-6, err, 1e-6)]
    series = mgf_series_moments(nu, config, 4, exponent_scale=exponent_scale)
    bad = [idx for idx, v in series.items() if v != joint_moment_closed(nu, config, idx)]
    out.append(_exact("mgf", "series moments == closed form, N <= 4", not bad,
                      f"{len(bad)} of {len(series)} disagree" if bad else ""))
    return out


def laplace_suite(nu: Fraction, config: SpiderConfig, indices: Sequence[MultiIndex],
                  paper_literal: bool = False) -> list[Check]:
    provider = ClosedFormD(nu)
    out = []
    for idx in indices:
        n = idx.total
        m = joint_moment_closed(nu, config, idx)
        ok = all(laplace_joint_moment(provider, config, idx, lam, paper_literal)
                 * lam ** (n + 1) / math.factorial(n) == m
                 for lam in (Fraction(1, 2), Fraction(1), Fraction(3)))
        out.append(_exact("laplace", f"lambda-invariance at {idx}", ok))
        if m != 0:
            t = 1.5
            got = laplace_invert(lambda s: laplace_joint_moment(provider, config, idx, s), t, 18)
            rel = abs(got / (float(m) * t ** n) - 1)
            out.append(Check("laplace", f"Stehfest inversion at {idx}", rel <= 1e-4, rel, 1e-4))
    return out


def mc_suite(nu: Fraction, config: SpiderConfig, indices: Sequence[MultiIndex],
             sim: SimConfig, bias: float = 0.02) -> list[Check]:
    ests = estimate_joint_moments(BesselLaw(nu), config, list(indices), sim)
    out = []
    for idx, est in zip(indices, ests):
        ref = float(joint_moment_closed(nu, config, idx))
        band = 3 * est.std_error + bias * abs(ref)
        err = abs(est.mean - ref)
        out.append(Check("mc", f"Monte Carlo at {idx}", err <= band, err, band,
                         f"mean {est.mean:.6g} se {est.std_error:.3g}"))
    return out
