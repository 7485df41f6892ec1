"""Finite-sample simulation of the curation loop, and goodness-of-fit checks.

These routines draw actual candidate pools, select winners with the
proportional rule, and compare the resulting frequencies to the population
formulas. Rounds are partitioned into fixed-size blocks with pre-derived
random streams and integer counts merged by summation, so histograms are
reproducible for a given seed no matter how blocks are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from . import rng as rngmod
from .dynamics import RegimeConfig
from .errors import DegenerateRound, InsufficientData, UnsupportedNoise
from .measure import Density, _readonly, make_density
from .preferences import PreferenceModel

_BLOCK = 1 << 16


@dataclass(frozen=True, eq=False)
class EmpiricalHistogram:
    """Winner counts per state."""

    counts: np.ndarray
    total: int

    def __init__(self, counts, total):
        counts = _readonly(counts, dtype=np.int64)
        if int(np.sum(counts)) != int(total):
            raise ValueError("counts must sum to total")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(total))

    def as_density(self, space) -> Density:
        """Frequencies as a density against the space's base weights."""
        if self.total < 1:
            raise DegenerateRound("cannot fit a density to zero samples")
        return make_density(space, self.counts / space.pi)


def _pool_draws(
    p: Density,
    model: PreferenceModel,
    k: int,
    n_rounds: int,
    seed: int,
    stream: int,
):
    """Yield (states, utilities, generator) per block, in fixed block order."""
    state_cum = np.cumsum(p.values * p.space.pi)
    noise_cum = np.cumsum(model.noise.probs)
    n_blocks = (n_rounds + _BLOCK - 1) // _BLOCK
    for b in range(n_blocks):
        size = min(_BLOCK, n_rounds - b * _BLOCK)
        gen = rngmod.generator(seed, stream, b)
        states = rngmod.categorical(gen, state_cum, (size, k))
        noise = model.noise.support[rngmod.categorical(gen, noise_cum, (size, k))]
        utilities = np.exp(model.reward[states] + noise)
        yield states, utilities, gen


def _select_rows(utilities: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    csum = np.cumsum(utilities, axis=1)
    pick = gen.random(utilities.shape[0]) * csum[:, -1]
    idx = np.sum(csum <= pick[:, None], axis=1)
    return np.minimum(idx, utilities.shape[1] - 1)


def curation_round(
    p: Density, model: PreferenceModel, k: int, n_rounds: int, seed: int
) -> EmpiricalHistogram:
    """Repeatedly draw a k-pool from p, pick one winner per pool, count winners."""
    if not model.noise.has_noise_law:
        raise UnsupportedNoise("finite-sample curation needs an explicit noise law")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("pool size k must be an integer >= 1")
    if n_rounds < 1:
        raise ValueError("n_rounds must be at least 1")
    counts = np.zeros(p.space.n, dtype=np.int64)
    for states, utilities, gen in _pool_draws(p, model, k, n_rounds, seed, rngmod.CURATION):
        winners = states[np.arange(states.shape[0]), _select_rows(utilities, gen)]
        counts += np.bincount(winners, minlength=p.space.n)
    return EmpiricalHistogram(counts, n_rounds)


def empirical_selection_mass(
    p: Density,
    model: PreferenceModel,
    k: int,
    member_mask,
    n_rounds: int,
    seed: int,
) -> tuple[float, float]:
    """Mean and standard error of the selection weight landing in a state set.

    Per pool, sums the proportional selection probabilities of the candidates
    that fall in the set; its expectation is the curated measure of the set.
    """
    if not model.noise.has_noise_law:
        raise UnsupportedNoise("finite-sample curation needs an explicit noise law")
    member_mask = np.asarray(member_mask, dtype=bool)
    total = 0.0
    total_sq = 0.0
    for states, utilities, _ in _pool_draws(
        p, model, k, n_rounds, seed, rngmod.SELECTION_MASS
    ):
        weights = utilities / np.sum(utilities, axis=1, keepdims=True)
        vals = np.sum(weights * member_mask[states], axis=1)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
    mean = total / n_rounds
    var = max(total_sq - n_rounds * mean * mean, 0.0) / max(n_rounds - 1, 1)
    return mean, math.sqrt(var / n_rounds)


@dataclass(frozen=True, eq=False)
class FiniteSampleTrajectory:
    """Sampled loop: per-round winner histograms and the fitted densities."""

    histograms: list[EmpiricalHistogram]
    densities: list[Density]


def finite_sample_trajectory(
    p0: Density,
    config: RegimeConfig,
    model: PreferenceModel,
    n_per_round: int,
    t_rounds: int,
    seed: int,
) -> FiniteSampleTrajectory:
    """Agent-based version of the loop: sample winners, refit, iterate.

    The refit is the closed-form maximizer over all densities on the space:
    the reference mixed with the normalized winner histogram.
    """
    if config.is_infinite_pool:
        raise ValueError("no finite-sample simulator exists for the infinite pool")
    if n_per_round < 1:
        raise ValueError("n_per_round must be at least 1")
    if t_rounds < 0:
        raise ValueError("t_rounds must be nonnegative")
    histograms: list[EmpiricalHistogram] = []
    densities = [p0]
    p = p0
    for t in range(t_rounds):
        hist = curation_round(
            p, model, int(config.pool), n_per_round, rngmod.derive_seed(seed, rngmod.SAMPLE_LOOP, t)
        )
        if hist.total == 0:
            raise DegenerateRound(f"round {t} produced no samples")
        histograms.append(hist)
        fitted = hist.as_density(p.space)
        if config.is_pure:
            p = fitted
        else:
            p = make_density(
                p.space,
                config.alpha * config.p_ref.values + (1.0 - config.alpha) * fitted.values,
            )
        densities.append(p)
    return FiniteSampleTrajectory(histograms=histograms, densities=densities)


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    critical_value: float
    reject_at_1pct: bool


def gof_chi_square(observed: EmpiricalHistogram, expected: Density) -> GofResult:
    """Pearson test of observed counts against an expected density, at 1%.

    Cells with expected count below 5 are pooled into one; a still-small pool
    is merged into the smallest remaining regular cell. Observed mass on a
    zero-probability cell is an automatic rejection.
    """
    probs = expected.values * expected.space.pi
    counts = np.asarray(observed.counts, dtype=float)
    if counts.shape != probs.shape:
        raise InsufficientData("histogram and density have different state counts")
    n = observed.total
    zero = probs <= 0.0
    if np.any(counts[zero] > 0):
        return GofResult(math.inf, int(np.sum(~zero)), 0.0, True)
    probs, counts = probs[~zero], counts[~zero]
    exp_counts = probs * n
    small = exp_counts < 5.0
    obs_cells = list(counts[~small])
    exp_cells = list(exp_counts[~small])
    if np.any(small):
        pooled_obs = float(np.sum(counts[small]))
        pooled_exp = float(np.sum(exp_counts[small]))
        if pooled_exp >= 5.0 or not exp_cells:
            obs_cells.append(pooled_obs)
            exp_cells.append(pooled_exp)
        else:
            j = int(np.argmin(exp_cells))
            obs_cells[j] += pooled_obs
            exp_cells[j] += pooled_exp
    dof = len(exp_cells) - 1
    if dof < 1:
        raise InsufficientData("fewer than two cells remain after pooling")
    obs_arr, exp_arr = np.array(obs_cells), np.array(exp_cells)
    statistic = float(np.sum((obs_arr - exp_arr) ** 2 / exp_arr))
    critical = float(scipy_stats.chi2.ppf(0.99, dof))
    return GofResult(statistic, dof, critical, statistic > critical)
