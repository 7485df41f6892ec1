"""Selection kernels for pools of candidates ranked by noisy preferences.

A pool of K candidates is drawn from the current density, each candidate gets
an independent noise draw on top of its reward, and one candidate is kept with
probability proportional to its exponentiated utility. The per-state kernel
H(x) is the expected factor by which that selection reweights state x; the
curated (post-selection) density is the current density times H.

Three evaluation routes are provided:

* ``kernel_finite_exact`` sums the expectation exactly. The competitor total
  is a sum of K-1 i.i.d. utility draws, so its law is built by repeated
  convolution of the single-draw utility distribution instead of enumerating
  candidate tuples. Atom counts are capped; overflow is an explicit error
  steering callers to the Monte Carlo route.
* ``kernel_finite_mc`` estimates the same expectation from seeded samples and
  reports a per-state standard error.
* ``kernel_infinite`` is the closed-form infinite-pool limit
  ``q(x) / E_p[q]``, which removes finite-pool selection randomness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import (
    NonPositiveUtility,
    NormalizationDrift,
    SpaceMismatch,
    SupportOverflow,
    UnsupportedNoise,
)
from .measure import Density, _readonly, expectation, require_same_space
from .preferences import PreferenceModel

#: atoms closer than this relative gap are merged into one
MERGE_RTOL = 1e-12
#: default budget for convolution supports (pre- and post-merge)
DEFAULT_SUPPORT_CAP = 2_000_000
#: acceptable unit-mass drift for exact / infinite-pool curated densities
CURATION_DRIFT_TOL = 1e-8

_MC_BLOCK = 1 << 16


def _merge_atoms(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = probs > 0.0
    values, probs = values[keep], probs[keep]
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    if values.size == 0:
        return values, probs
    # consecutive grouping; at 1e-12 relative gaps chained groups are harmless
    new_group = np.empty(values.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(values) > MERGE_RTOL * values[1:]
    ids = np.cumsum(new_group) - 1
    mass = np.bincount(ids, weights=probs)
    value = np.bincount(ids, weights=probs * values) / mass
    return value, mass


@dataclass(frozen=True, eq=False)
class ValueDistribution:
    """Finite law of a strictly positive utility draw."""

    values: np.ndarray
    probs: np.ndarray

    def __init__(self, values, probs):
        values, probs = _merge_atoms(np.asarray(values, float), np.asarray(probs, float))
        if values.size == 0:
            raise NonPositiveUtility("a utility law needs at least one atom of mass")
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            raise NonPositiveUtility("utility atoms must be finite and > 0")
        total = float(np.sum(probs))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom masses sum to {total!r}, not 1")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "probs", _readonly(probs))

    @property
    def size(self) -> int:
        return int(self.values.size)

    def convolve(self, other: "ValueDistribution", cap: int = DEFAULT_SUPPORT_CAP) -> "ValueDistribution":
        """Law of the sum of independent draws from self and other."""
        if self.size * other.size > cap:
            raise SupportOverflow(
                f"convolution needs {self.size * other.size} atoms, cap is {cap}; "
                "use the Monte Carlo kernel instead"
            )
        values = np.add.outer(self.values, other.values).ravel()
        probs = np.multiply.outer(self.probs, other.probs).ravel()
        out = ValueDistribution(values, probs)
        if out.size > cap:
            raise SupportOverflow(f"merged support {out.size} exceeds cap {cap}")
        return out


@dataclass(frozen=True, eq=False)
class KernelEstimate:
    """Per-state selection kernel values with provenance."""

    h_values: np.ndarray
    method: str  # "exact" | "mc" | "infinite"
    k: float  # pool size; math.inf for the infinite pool
    stderr: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "h_values", _readonly(self.h_values))
        if self.stderr is not None:
            object.__setattr__(self, "stderr", _readonly(self.stderr))


def utility_distribution(p: Density, model: PreferenceModel) -> ValueDistribution:
    """Law of exp(reward + noise) for one candidate drawn from ``p``."""
    require_same_space(p, model)
    if not model.noise.has_noise_law:
        raise UnsupportedNoise("finite-pool kernels need an explicit noise law")
    values = np.exp(np.add.outer(model.reward, model.noise.support)).ravel()
    probs = np.multiply.outer(p.values * p.space.pi, model.noise.probs).ravel()
    return ValueDistribution(values, probs)


def _own_utilities(model: PreferenceModel) -> np.ndarray:
    # rows: states, cols: noise atoms — exp(r(x) + e_j)
    return np.exp(np.add.outer(model.reward, model.noise.support))


def kernel_finite_exact(
    p: Density,
    model: PreferenceModel,
    k: int,
    support_cap: int = DEFAULT_SUPPORT_CAP,
) -> KernelEstimate:
    """Exact finite-pool kernel via convolution of the utility law."""
    require_same_space(p, model)
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("pool size k must be an integer >= 1")
    if not model.noise.has_noise_law:
        raise UnsupportedNoise("the exact finite-pool kernel needs an explicit noise law")
    if k == 1:
        return KernelEstimate(np.ones(p.space.n), "exact", 1)
    base = utility_distribution(p, model)
    competitors = base
    for _ in range(k - 2):
        competitors = competitors.convolve(base, cap=support_cap)
    own = _own_utilities(model)  # (n, m)
    # H(x) = sum_j q_j sum_s P(S=s) * k*u_xj / (u_xj + s)
    u = own[:, :, None]
    s = competitors.values[None, None, :]
    shares = k * u / (u + s)
    h = np.einsum("j,s,xjs->x", model.noise.probs, competitors.probs, shares)
    return KernelEstimate(h, "exact", int(k))


def kernel_finite_mc(
    p: Density,
    model: PreferenceModel,
    k: int,
    n_samples: int,
    seed: int,
) -> KernelEstimate:
    """Monte Carlo finite-pool kernel with per-state standard errors.

    Streams are pre-assigned per (state, block), so the result depends only on
    the seed, never on scheduling.
    """
    require_same_space(p, model)
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("pool size k must be an integer >= 1")
    if not model.noise.has_noise_law:
        raise UnsupportedNoise("the Monte Carlo kernel needs an explicit noise law")
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    n = p.space.n
    if k == 1:
        return KernelEstimate(np.ones(n), "mc", 1, stderr=np.zeros(n))
    state_cum = np.cumsum(p.values * p.space.pi)
    noise_cum = np.cumsum(model.noise.probs)
    reward = model.reward
    noise_vals = model.noise.support
    h = np.empty(n)
    stderr = np.empty(n)
    n_blocks = (n_samples + _MC_BLOCK - 1) // _MC_BLOCK
    for x in range(n):
        total = 0.0
        total_sq = 0.0
        for b in range(n_blocks):
            size = min(_MC_BLOCK, n_samples - b * _MC_BLOCK)
            gen = rngmod.generator(seed, rngmod.MC_KERNEL, x, b)
            own_noise = noise_vals[rngmod.categorical(gen, noise_cum, size)]
            u = np.exp(reward[x] + own_noise)
            comp_states = rngmod.categorical(gen, state_cum, (size, k - 1))
            comp_noise = noise_vals[rngmod.categorical(gen, noise_cum, (size, k - 1))]
            s = np.exp(reward[comp_states] + comp_noise).sum(axis=1)
            vals = k * u / (u + s)
            total += float(np.sum(vals))
            total_sq += float(np.sum(vals * vals))
        mean = total / n_samples
        var = max(total_sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
        h[x] = mean
        stderr[x] = math.sqrt(var / n_samples)
    return KernelEstimate(h, "mc", int(k), stderr=stderr)


def kernel_infinite(p: Density, model: PreferenceModel) -> KernelEstimate:
    """Infinite-pool kernel q(x) / E_p[q]; valid for every noise kind."""
    require_same_space(p, model)
    mean_q = expectation(p, model.q_values)
    return KernelEstimate(model.q_values / mean_q, "infinite", math.inf)


def pl_select(utilities, rng: np.random.Generator) -> int:
    """Sample one index with probability proportional to its utility."""
    utilities = np.asarray(utilities, dtype=float)
    if utilities.ndim != 1 or utilities.size == 0:
        raise NonPositiveUtility("utilities must be a nonempty 1-d sequence")
    if np.any(utilities <= 0.0) or not np.all(np.isfinite(utilities)):
        raise NonPositiveUtility("utilities must be finite and strictly positive")
    cum = np.cumsum(utilities)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(idx, utilities.size - 1)


def curated_density(p: Density, kernel: KernelEstimate) -> Density:
    """Post-selection density p(x) * H(x).

    Exact and infinite-pool kernels must integrate to one against p up to
    float drift; Monte Carlo kernels are renormalized without complaint.
    """
    if kernel.h_values.shape != (p.space.n,):
        raise SpaceMismatch("kernel was computed on a different state space")
    values = p.values * kernel.h_values
    mass = float(np.sum(values * p.space.pi))
    if kernel.method != "mc" and abs(mass - 1.0) >= CURATION_DRIFT_TOL:
        raise NormalizationDrift(
            f"kernel-reweighted mass {mass!r} drifted beyond {CURATION_DRIFT_TOL}"
        )
    return Density(p.space, values / mass)
