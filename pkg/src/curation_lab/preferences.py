"""Rewards, rater-noise models, and the averaged per-state utility.

The utility of a state is the exponential reward averaged over rater noise.
With stationary discrete noise that average factorizes into
``exp(reward) * E[exp(noise)]``, so the noise only rescales utilities by a
common constant; heterogeneity enters finite-pool selection through the full
noise law, kept on the model for that purpose. A model may instead be built
from directly supplied positive utilities when only the infinite-pool
dynamics are of interest.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    NonFiniteReward,
    NonPositiveQ,
    SpaceMismatch,
    UnsupportedNoise,
)
from .measure import Density, StateSpace, _readonly, require_same_space, set_mass

#: relative slack when deciding membership of the utility-maximizing set
MAXIMIZER_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Rater-noise specification.

    ``stationary`` noise is a finite-support random variable added to the
    reward of every candidate independently; ``zero`` is its trivial case.
    ``direct_q`` marks models whose utilities were supplied verbatim, with no
    usable noise law attached.
    """

    kind: str
    support: np.ndarray
    probs: np.ndarray

    def __init__(self, kind: str, support=(), probs=()):
        if kind not in ("zero", "stationary", "direct_q"):
            raise ValueError(f"unknown noise kind {kind!r}")
        support = _readonly(support)
        probs = _readonly(probs)
        if kind == "direct_q":
            if support.size or probs.size:
                raise ValueError("direct_q noise carries no atoms")
        else:
            if support.shape != probs.shape or support.ndim != 1 or support.size == 0:
                raise ValueError("noise needs matching 1-d support and probs")
            if not np.all(np.isfinite(support)):
                raise ValueError("noise support values must be finite")
            if np.any(probs < 0.0) or abs(float(np.sum(probs)) - 1.0) > 1e-12:
                raise ValueError("noise probs must be nonnegative and sum to 1")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls("zero", [0.0], [1.0])

    @classmethod
    def stationary(cls, support, probs) -> "NoiseModel":
        return cls("stationary", support, probs)

    @classmethod
    def direct_q(cls) -> "NoiseModel":
        return cls("direct_q")

    @property
    def has_noise_law(self) -> bool:
        """True when the full noise law is available (zero / stationary)."""
        return self.kind != "direct_q"

    def mean_exp(self) -> float:
        """E[exp(noise)] for stationary noise."""
        if not self.has_noise_law:
            raise UnsupportedNoise("direct_q noise has no attached law")
        return float(np.sum(self.probs * np.exp(self.support)))


@dataclass(frozen=True, eq=False)
class PreferenceModel:
    """Per-state rewards plus the derived utility profile and its extremes."""

    space: StateSpace
    reward: np.ndarray
    noise: NoiseModel
    q_values: np.ndarray
    q_star: float
    q_min: float
    maximizer_set: frozenset[int]

    @property
    def maximizer_mask(self) -> np.ndarray:
        mask = np.zeros(self.space.n, dtype=bool)
        mask[list(self.maximizer_set)] = True
        return mask


def _maximizers(q: np.ndarray, q_star: float) -> frozenset[int]:
    return frozenset(int(i) for i in np.nonzero(q >= q_star * (1.0 - MAXIMIZER_RTOL))[0])


def build_preference(
    space: StateSpace,
    reward=None,
    noise: NoiseModel | None = None,
    q_values=None,
) -> PreferenceModel:
    """Assemble a preference model from rewards + noise, or from utilities.

    With zero/stationary noise the utilities are derived from the reward; with
    direct_q noise the (strictly positive) utilities are taken verbatim and
    the reward is their log.
    """
    noise = noise if noise is not None else NoiseModel.zero()
    if noise.has_noise_law:
        if q_values is not None:
            raise UnsupportedNoise("q_values may only be supplied with direct_q noise")
        if reward is None:
            raise NonFiniteReward("a reward profile is required")
        reward = _readonly(reward)
        if reward.shape != (space.n,):
            raise SpaceMismatch("reward needs one value per state")
        if not np.all(np.isfinite(reward)):
            raise NonFiniteReward("rewards must be finite")
        q = np.exp(reward) * noise.mean_exp()
        if not np.all(np.isfinite(q)):
            raise NonFiniteReward("rewards so large that utilities overflow")
    else:
        if q_values is None:
            raise NonPositiveQ("direct_q noise requires explicit q_values")
        if reward is not None:
            raise ValueError("reward is derived from q_values under direct_q noise")
        q = _readonly(q_values)
        if q.shape != (space.n,):
            raise SpaceMismatch("q_values needs one value per state")
        if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
            raise NonPositiveQ("supplied utilities must be finite and > 0")
        reward = _readonly(np.log(q))
    q = _readonly(q)
    q_star = float(np.max(q))
    q_min = float(np.min(q))
    return PreferenceModel(
        space=space,
        reward=reward,
        noise=noise,
        q_values=q,
        q_star=q_star,
        q_min=q_min,
        maximizer_set=_maximizers(q, q_star),
    )


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of one checkable modeling assumption."""

    name: str
    holds: bool
    margin: float
    detail: str


def check_assumption_A1(model: PreferenceModel, p0: Density) -> AssumptionReport:
    """Positive initial mass on the utility-maximizing set."""
    require_same_space(model, p0)
    mass = set_mass(p0, model.maximizer_mask)
    return AssumptionReport(
        name="A1",
        holds=mass > 0.0,
        margin=mass,
        detail=f"start mass on the maximizing set = {mass!r}",
    )


def check_assumption_A2(p0: Density, p_ref: Density) -> AssumptionReport:
    """Bounded start-to-reference density ratio (support containment)."""
    require_same_space(p0, p_ref)
    off_support = p_ref.values == 0.0
    if np.any(p0.values[off_support] > 0.0):
        return AssumptionReport(
            name="A2",
            holds=False,
            margin=0.0,
            detail="start density charges states outside the reference support",
        )
    on = ~off_support
    ratio = float(np.max(p0.values[on] / p_ref.values[on]))
    return AssumptionReport(
        name="A2",
        holds=True,
        margin=ratio,
        detail=f"max start/reference density ratio = {ratio!r}",
    )


def a3_threshold(model: PreferenceModel, p_ref: Density) -> float:
    """Minimal admissible mixing weight for a nondegenerate fixed point.

    Computes 1 / integral of q_star/(q_star - q) against the reference; any
    reference mass on the maximizing set drives the integral to infinity and
    the threshold to zero.
    """
    require_same_space(model, p_ref)
    a_mask = model.maximizer_mask
    if set_mass(p_ref, a_mask) > 0.0:
        return 0.0
    keep = (~a_mask) & (p_ref.values > 0.0)
    gaps = model.q_star - model.q_values[keep]
    integral = float(np.sum(model.q_star / gaps * p_ref.values[keep] * p_ref.space.pi[keep]))
    return 1.0 / integral


def check_assumption_A3(model: PreferenceModel, p_ref: Density, alpha: float) -> AssumptionReport:
    """Mixing weight clears the nondegenerate-fixed-point threshold."""
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange("alpha must lie strictly between 0 and 1")
    threshold = a3_threshold(model, p_ref)
    return AssumptionReport(
        name="A3",
        holds=alpha > threshold,
        margin=alpha - threshold,
        detail=f"alpha = {alpha!r} vs threshold = {threshold!r}",
    )


def exp_reward_stats(p: Density, model: PreferenceModel) -> tuple[float, float]:
    """Mean and variance of the utility under ``p``."""
    require_same_space(model, p)
    w = p.values * p.space.pi
    mean = float(np.sum(model.q_values * w))
    second = float(np.sum(model.q_values**2 * w))
    return mean, max(second - mean**2, 0.0)
