"""Finite weighted state spaces, densities, and discrepancy metrics.

States carry strictly positive base weights, so integrals are weighted sums
and every density is a nonnegative vector normalized against those weights.
The three metrics used throughout (total variation, KL divergence, Hilbert
projective distance) may legitimately evaluate to ``math.inf``; infinity is a
returned value here, never an exception.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllZeroError, EmptySupport, NegativeEntryError, SpaceMismatch

#: absolute tolerance for the unit-mass invariant of a density
NORMALIZATION_ATOL = 1e-12
#: absolute tolerance below which a metric value counts as zero
METRIC_ZERO_ATOL = 1e-10


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Finite set of labeled states with strictly positive base weights."""

    labels: tuple[str, ...]
    pi: np.ndarray

    def __init__(self, labels, pi):
        labels = tuple(str(x) for x in labels)
        pi = _readonly(pi)
        if len(labels) == 0:
            raise ValueError("a state space needs at least one state")
        if len(labels) != len(set(labels)):
            raise ValueError("state labels must be unique")
        if pi.shape != (len(labels),):
            raise ValueError("pi must supply exactly one weight per state")
        if not np.all(np.isfinite(pi)) or np.any(pi <= 0.0):
            raise ValueError("base weights must be finite and strictly positive")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.pi, other.pi)

    def __hash__(self) -> int:
        return hash((self.labels, self.pi.tobytes()))

    def __repr__(self) -> str:
        return f"StateSpace(n={self.n})"


@dataclass(frozen=True, eq=False)
class Density:
    """Nonnegative per-state values integrating to one against the base weights."""

    space: StateSpace
    values: np.ndarray

    def __init__(self, space: StateSpace, values):
        values = _readonly(values)
        if values.shape != (space.n,):
            raise ValueError("density needs one value per state")
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise NegativeEntryError("density values must be finite and nonnegative")
        mass = float(np.sum(values * space.pi))
        if abs(mass - 1.0) > NORMALIZATION_ATOL:
            raise ValueError(f"density mass {mass!r} deviates from 1 beyond tolerance")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", values)

    @property
    def support(self) -> np.ndarray:
        return self.values > 0.0

    def __repr__(self) -> str:
        return f"Density({np.array2string(self.values, precision=6)})"


def make_density(space: StateSpace, raw) -> Density:
    """Rescale nonnegative raw weights into a density on ``space``."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (space.n,):
        raise ValueError("raw weights need one entry per state")
    if np.any(raw < 0.0) or not np.all(np.isfinite(raw)):
        raise NegativeEntryError("raw weights must be finite and nonnegative")
    mass = float(np.sum(raw * space.pi))
    if mass <= 0.0:
        raise AllZeroError("cannot normalize: all raw weights are zero")
    return Density(space, raw / mass)


def require_same_space(*objects) -> StateSpace:
    """Return the shared space of densities/models, or raise SpaceMismatch."""
    spaces = [obj.space for obj in objects]
    first = spaces[0]
    for other in spaces[1:]:
        if other != first:
            raise SpaceMismatch("operands live on different state spaces")
    return first


def expectation(p: Density, f) -> float:
    """Weighted mean of per-state values ``f`` under ``p``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (p.space.n,):
        raise SpaceMismatch("f needs one value per state of p's space")
    return float(np.sum(f * p.values * p.space.pi))


def set_mass(p: Density, member_mask) -> float:
    """Probability mass of the states flagged in ``member_mask``."""
    mask = np.asarray(member_mask, dtype=bool)
    if mask.shape != (p.space.n,):
        raise SpaceMismatch("mask needs one entry per state of p's space")
    return float(np.sum(p.values[mask] * p.space.pi[mask]))


def tv_distance(p: Density, q: Density) -> float:
    """Total variation distance, in [0, 1]."""
    space = require_same_space(p, q)
    return float(0.5 * np.sum(np.abs(p.values - q.values) * space.pi))


def kl_divergence(p: Density, q: Density) -> float:
    """KL divergence of p from q; ``inf`` when p charges a q-null state.

    Uses the 0*log(0) = 0 convention, and clamps the tiny negative values
    float cancellation can produce for near-identical inputs.
    """
    space = require_same_space(p, q)
    mask = p.values > 0.0
    if np.any(q.values[mask] == 0.0):
        return math.inf
    terms = p.values[mask] * np.log(p.values[mask] / q.values[mask]) * space.pi[mask]
    return max(float(np.sum(terms)), 0.0)


def hilbert_metric(u, v, support=None) -> float:
    """Projective distance between positive vectors, restricted to ``support``.

    Scale-invariant: rescaling either argument by a positive constant leaves
    the value unchanged. Returns ``inf`` when exactly one argument vanishes at
    some supported state, i.e. the pair sits on the boundary of the cone.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise SpaceMismatch("u and v must have the same length")
    if support is None:
        support = np.ones(u.shape, dtype=bool)
    else:
        support = np.asarray(support, dtype=bool)
        if support.shape != u.shape:
            raise SpaceMismatch("support mask must match the vectors")
    if not np.any(support):
        raise EmptySupport("the support mask selects no state")
    us, vs = u[support], v[support]
    if np.any(us < 0.0) or np.any(vs < 0.0):
        raise NegativeEntryError("projective distance needs nonnegative vectors")
    uz, vz = us == 0.0, vs == 0.0
    if np.any(uz != vz):
        return math.inf
    both = ~uz
    if not np.any(both):
        raise EmptySupport("both vectors vanish everywhere on the support")
    ratios = us[both] / vs[both]
    return float(np.log(np.max(ratios) / np.min(ratios)))
