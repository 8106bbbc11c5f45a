"""Monte Carlo oracle for leg occupation times.

The radial part is simulated exactly on a time grid through the squared
Bessel transition. Legs are chosen i.i.d. from the weights, one per
excursion away from the vertex. By default a new excursion is detected by
sampling, given the two grid endpoints, whether the radial bridge touched
zero in between; the older threshold rule (resample when the radius drops
below ``eps``) is available as ``leg_rule="crossing"``.

Every replicate seeds its own stream from ``(master_seed, replicate)``, so
results do not depend on the number of threads.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .mgf import MgfQuery
from .spider import BesselLaw, MultiIndex, SpiderConfig

LEG_RULES = ("bridge", "crossing")
_HIT_CUTOFF = 35.0


def _apply_thread_cap() -> None:
    cap = os.environ.get("SPIDER_MOMENTS_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


@dataclass(frozen=True)
class SimConfig:
    step: float = 1e-4
    threshold: float = 1e-2
    horizon: float = 1.0
    replicates: int = 100_000
    master_seed: int = 20240611
    leg_rule: str = "bridge"

    def __post_init__(self):
        if not 0 < self.step <= 1e-2:
            raise ValueError(f"step must lie in (0, 1e-2], got {self.step}")
        ratio = self.threshold / math.sqrt(self.step)
        if not 0.1 * (1 - 1e-12) <= ratio <= 5 * (1 + 1e-12):
            raise ValueError(f"threshold/sqrt(step) = {ratio:.4g} is outside [0.1, 5]")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.replicates < 2:
            raise ValueError("at least two replicates are needed for a standard error")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.leg_rule not in LEG_RULES:
            raise ValueError(f"leg_rule must be one of {LEG_RULES}")


@dataclass(frozen=True)
class OccupationSample:
    occupations: tuple[float, ...]
    horizon: float


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    std_error: float
    replicates: int

    def z_score(self, reference: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == reference else math.inf
        return (self.mean - reference) / self.std_error


def besq_step(delta: float, x, dt: float, rng: np.random.Generator):
    """Exact squared-Bessel transition of dimension ``delta`` over ``dt``.

    Poisson mixture of gammas; ``x`` may be an array of starting points.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or dt <= 0:
        raise ValueError("need x >= 0 and dt > 0")
    n = rng.poisson(x / (2.0 * dt))
    out = rng.gamma(delta / 2.0 + n, 2.0 * dt)
    return out if np.ndim(out) else float(out)


@numba.njit(cache=True)
def _series(mu, q):
    # sum_k q**k / (k! Gamma(k+mu+1))
    t = 1.0 / math.gamma(1.0 + mu)
    s = t
    k = 0
    while True:
        t *= q / ((k + 1.0) * (k + 1.0 + mu))
        s += t
        k += 1
        if t < 1e-17 * s and k * k > q:
            return s


@numba.njit(cache=True)
def zero_hit_probability(nu, r0, r1, dt):
    """Chance that the reflected Bessel bridge from ``r0`` to ``r1`` over ``dt`` touches 0.

    Equals ``1 - I_{-nu}(z)/I_nu(z)`` with ``z = r0 r1 / dt``.
    """
    z = r0 * r1 / dt
    if z <= 0.0:
        return 1.0
    if z > _HIT_CUTOFF:
        return 0.0
    q = 0.25 * z * z
    ratio = (0.5 * z) ** (-2.0 * nu) * _series(-nu, q) / _series(nu, q)
    return max(0.0, 1.0 - ratio)


@numba.njit(cache=True)
def _draw_leg(cum):
    u = np.random.random()
    for i in range(cum.shape[0] - 1):
        if u < cum[i]:
            return i
    return cum.shape[0] - 1


@numba.njit(cache=True)
def _one_path(nu, cum, dt, eps, horizon, exp_rate, bridge, seed, out):
    np.random.seed(seed)
    if exp_rate > 0.0:
        horizon = np.random.exponential(1.0 / exp_rate)
    delta = 2.0 + 2.0 * nu
    half = 0.5 * delta
    legs = cum.shape[0]
    counts = np.zeros(legs, dtype=np.int64)
    n_full = int(horizon / dt)
    rest = horizon - n_full * dt
    if rest < 1e-15 * horizon:
        rest = 0.0
    leg = _draw_leg(cum)
    x = 0.0
    r = 0.0
    last_leg = leg
    for j in range(n_full + (1 if rest > 0.0 else 0)):
        h = dt if j < n_full else rest
        n = np.random.poisson(x / (2.0 * h)) if x > 0.0 else 0
        x_new = np.random.gamma(half + n, 2.0 * h)
        r_new = math.sqrt(x_new)
        if bridge:
            p = zero_hit_probability(nu, r, r_new, h)
            if p > 0.0 and np.random.random() < p:
                leg = _draw_leg(cum)
        elif r_new <= eps and r > eps:
            leg = _draw_leg(cum)
        if j < n_full:
            counts[leg] += 1
        else:
            last_leg = leg
        x = x_new
        r = r_new
    for i in range(legs):
        out[i] = counts[i] * dt
    if rest > 0.0:
        out[last_leg] += rest
    return horizon


@numba.njit(parallel=True, cache=True)
def _kernel(nu, cum, dt, eps, horizon, exp_rate, bridge, seeds, occ, horizons):
    for i in numba.prange(seeds.shape[0]):
        horizons[i] = _one_path(nu, cum, dt, eps, horizon, exp_rate, bridge, seeds[i], occ[i])


def replicate_seeds(master_seed: int, start: int, count: int) -> np.ndarray:
    return np.array([np.random.SeedSequence(master_seed, spawn_key=(i,)).generate_state(1)[0]
                     for i in range(start, start + count)], dtype=np.uint32)


def _cumulative(config: SpiderConfig) -> np.ndarray:
    cum = np.cumsum([float(b) for b in config.betas])
    cum[-1] = 1.0
    return cum


def simulate(law: BesselLaw, config: SpiderConfig, sim: SimConfig,
             exp_rate: float | None = None, start: int = 0,
             count: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Occupation times for replicates ``start .. start+count-1``.

    Returns ``(occupations, horizons)`` with one row per replicate. With
    ``exp_rate`` the horizon of each path is an independent exponential
    time of that rate instead of ``sim.horizon``.
    """
    _apply_thread_cap()
    count = sim.replicates if count is None else count
    seeds = replicate_seeds(sim.master_seed, start, count)
    occ = np.zeros((count, config.leg_count))
    horizons = np.zeros(count)
    rate = 0.0 if exp_rate is None else float(exp_rate)
    if exp_rate is not None and rate <= 0:
        raise ValueError("exp_rate must be positive")
    _kernel(law.nu, _cumulative(config), sim.step, sim.threshold, sim.horizon, rate,
            sim.leg_rule == "bridge", seeds, occ, horizons)
    return occ, horizons


def simulate_path(law: BesselLaw, config: SpiderConfig, sim: SimConfig,
                  replicate_index: int) -> OccupationSample:
    occ, horizons = simulate(law, config, sim, start=replicate_index, count=1)
    return OccupationSample(tuple(float(v) for v in occ[0]), float(horizons[0]))


def _summarize(values: np.ndarray) -> MomentEstimate:
    n = values.shape[0]
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return MomentEstimate(mean, math.sqrt(var / n), n)


def moment_from_occupations(occ: np.ndarray, idx: MultiIndex) -> MomentEstimate:
    values = np.ones(occ.shape[0])
    for leg, n in idx.entries:
        values = values * occ[:, leg] ** n
    return _summarize(values)


def estimate_joint_moments(law: BesselLaw, config: SpiderConfig,
                           indices: Sequence[MultiIndex], sim: SimConfig) -> list[MomentEstimate]:
    """Several moments from one batch of paths."""
    if sim.horizon != 1.0:
        raise ValueError("moment estimates are compared at horizon 1")
    for idx in indices:
        idx.check(config)
    occ, _ = simulate(law, config, sim)
    return [moment_from_occupations(occ, idx) for idx in indices]


def estimate_joint_moment(law: BesselLaw, config: SpiderConfig, idx: MultiIndex,
                          sim: SimConfig) -> MomentEstimate:
    return estimate_joint_moments(law, config, [idx], sim)[0]


def estimate_mgf(law: BesselLaw, config: SpiderConfig, query: MgfQuery,
                 sim: SimConfig) -> MomentEstimate:
    """Mean of ``exp(-sum z_j A_T^(j))`` with ``T`` exponential of rate ``query.lam``."""
    pairs = query.selected(config)
    occ, _ = simulate(law, config, sim, exp_rate=float(query.lam))
    expo = np.zeros(occ.shape[0])
    for leg, z in pairs:
        expo += float(z) * occ[:, leg]
    return _summarize(np.exp(-expo))
