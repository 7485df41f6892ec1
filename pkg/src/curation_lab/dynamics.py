"""Round-by-round population updates and trajectory diagnostics.

One retraining round reweights the current density by the selection kernel
and, when a mixing weight is configured, blends the result with a fixed
reference density:

    pure:   p <- p * H_p
    mixed:  p <- alpha * p_ref + (1 - alpha) * p * H_p

Four regimes arise from (alpha == 0 or not) x (finite or infinite pool).
``run_trajectory`` iterates the update and records the diagnostics the
convergence statements are phrased in: expected utility and its variance,
the kernel value on the maximizing set, the mass of that set, step-to-step
movement, and distances to the known limit when one exists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .errors import AlphaOutOfRange, SupportViolation, TMaxZero
from .kernels import (
    KernelEstimate,
    curated_density,
    kernel_finite_exact,
    kernel_finite_mc,
    kernel_infinite,
)
from .measure import (
    Density,
    hilbert_metric,
    kl_divergence,
    make_density,
    require_same_space,
    set_mass,
    tv_distance,
)
from .preferences import PreferenceModel, exp_reward_stats

DEFAULT_STOP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RegimeConfig:
    """Pool size, mixing weight, reference anchor, and kernel evaluation route."""

    alpha: float
    pool: float  # integer >= 1, or math.inf
    p_ref: Density | None = None
    kernel_method: str = "exact"  # "exact" | "mc"
    mc_samples: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise AlphaOutOfRange("alpha must lie in [0, 1)")
        if math.isinf(self.pool):
            if self.kernel_method == "mc":
                raise ValueError("the infinite pool has a closed-form kernel; mc does not apply")
        else:
            if not float(self.pool).is_integer() or self.pool < 1:
                raise ValueError("a finite pool size must be an integer >= 1")
            object.__setattr__(self, "pool", int(self.pool))
        if self.alpha > 0.0 and self.p_ref is None:
            raise ValueError("a mixed regime (alpha > 0) requires p_ref")
        if self.kernel_method not in ("exact", "mc"):
            raise ValueError(f"unknown kernel method {self.kernel_method!r}")
        if self.kernel_method == "mc" and (self.mc_samples is None or self.mc_samples < 100):
            raise ValueError("mc kernels need mc_samples >= 100")

    @property
    def is_pure(self) -> bool:
        return self.alpha == 0.0

    @property
    def is_infinite_pool(self) -> bool:
        return math.isinf(self.pool)

    @property
    def regime_label(self) -> str:
        side = "infinite" if self.is_infinite_pool else "finite"
        return ("pure-" if self.is_pure else "mixed-") + side


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Per-round diagnostics; field names match the trajectory CSV columns."""

    t: int
    density: Density
    exp_reward: float
    var_reward: float
    h_t: float
    mass_on_A: float
    step_tv: float | None
    tv_to_limit: float | None
    kl_star_to_pt: float | None
    hilbert_to_limit: float | None


def _step_kernel(p: Density, config: RegimeConfig, model: PreferenceModel, step: int) -> KernelEstimate:
    if config.is_infinite_pool:
        return kernel_infinite(p, model)
    if config.kernel_method == "exact":
        return kernel_finite_exact(p, model, int(config.pool))
    seed = rngmod.derive_seed(config.seed, rngmod.TRAJECTORY, step)
    return kernel_finite_mc(p, model, int(config.pool), config.mc_samples, seed)


def _apply_update(p: Density, kernel: KernelEstimate, config: RegimeConfig) -> Density:
    curated = curated_density(p, kernel)
    if config.is_pure:
        return curated
    mixed = config.alpha * config.p_ref.values + (1.0 - config.alpha) * curated.values
    return make_density(p.space, mixed)


def update_once(p: Density, config: RegimeConfig, model: PreferenceModel, step: int = 0) -> Density:
    """One retraining round. ``step`` only seeds the Monte Carlo kernel route."""
    require_same_space(p, model)
    if config.p_ref is not None:
        require_same_space(p, config.p_ref)
    return _apply_update(p, _step_kernel(p, config, model, step), config)


def reweighted_density(p: Density, p_ref: Density) -> np.ndarray:
    """Pointwise ratio p / p_ref, a density against the reference measure."""
    require_same_space(p, p_ref)
    off = p_ref.values == 0.0
    if np.any(p.values[off] > 0.0):
        raise SupportViolation("p charges states outside the reference support")
    w = np.zeros(p.space.n)
    on = ~off
    w[on] = p.values[on] / p_ref.values[on]
    return w


def reweighted_update(w: np.ndarray, model: PreferenceModel, p_ref: Density, alpha: float) -> np.ndarray:
    """Infinite-pool mixed update expressed in reference-ratio coordinates."""
    require_same_space(model, p_ref)
    ref_w = p_ref.values * p_ref.space.pi
    inner = float(np.sum(w * model.q_values * ref_w))
    return alpha + (1.0 - alpha) * model.q_values * w / inner


def _resolve_limit(
    p0: Density, config: RegimeConfig, model: PreferenceModel
) -> tuple[Density | None, bool]:
    """Known limit for this regime, plus whether ratio-space distances apply."""
    from . import fixed_points
    from .errors import AssumptionA3Violated, CurationLabError
    from .preferences import check_assumption_A2

    if config.is_pure:
        try:
            return fixed_points.pure_limit(p0, model).density, False
        except CurationLabError:
            return None, False
    if config.is_infinite_pool:
        if not check_assumption_A2(p0, config.p_ref).holds:
            return None, False
        try:
            res = fixed_points.fixed_point_regime_iv(model, config.p_ref, config.alpha)
        except (AssumptionA3Violated, CurationLabError):
            return None, False
        return res.density, True
    return None, False  # finite mixed pools have no closed form; pass one in


def _record(
    t: int,
    p: Density,
    kernel: KernelEstimate,
    prev: Density | None,
    model: PreferenceModel,
    config: RegimeConfig,
    limit: Density | None,
    ratio_space: bool,
) -> TrajectoryRecord:
    mean, var = exp_reward_stats(p, model)
    a_mask = model.maximizer_mask
    h_t = float(np.max(kernel.h_values[a_mask]))
    tv_lim = kl_lim = hil_lim = None
    if limit is not None:
        tv_lim = tv_distance(p, limit)
        if config.is_pure:
            kl_lim = kl_divergence(limit, p)
        if ratio_space:
            hil_lim = hilbert_metric(p.values, limit.values, support=config.p_ref.support)
    return TrajectoryRecord(
        t=t,
        density=p,
        exp_reward=mean,
        var_reward=var,
        h_t=h_t,
        mass_on_A=set_mass(p, a_mask),
        step_tv=None if prev is None else tv_distance(p, prev),
        tv_to_limit=tv_lim,
        kl_star_to_pt=kl_lim,
        hilbert_to_limit=hil_lim,
    )


def _iterate(
    p0: Density,
    config: RegimeConfig,
    model: PreferenceModel,
    t_max: int,
    stop_tol: float | None,
    limit: Density | None,
    ratio_space: bool,
) -> list[TrajectoryRecord]:
    records: list[TrajectoryRecord] = []
    p, prev = p0, None
    for t in range(t_max + 1):
        kernel = _step_kernel(p, config, model, t)
        rec = _record(t, p, kernel, prev, model, config, limit, ratio_space)
        records.append(rec)
        if t == t_max:
            break
        if stop_tol is not None and rec.step_tv is not None and rec.step_tv < stop_tol:
            break
        prev = p
        p = _apply_update(p, kernel, config)
    return records


def run_trajectory(
    p0: Density,
    config: RegimeConfig,
    model: PreferenceModel,
    t_max: int,
    stop_tol: float = DEFAULT_STOP_TOL,
    limit: Density | None = None,
) -> list[TrajectoryRecord]:
    """Iterate the regime update from ``p0`` and record diagnostics.

    Stops at ``t_max`` rounds or as soon as one round moves the density less
    than ``stop_tol`` in total variation. When the regime has a computable
    limit and none is passed in, it is resolved automatically (pure limit, or
    the infinite-pool mixed fixed point); the finite mixed pool has no closed
    form, so its limit is only used when supplied by the caller.
    """
    require_same_space(p0, model)
    if config.p_ref is not None:
        require_same_space(p0, config.p_ref)
    if t_max < 1:
        raise TMaxZero("t_max must be at least 1")
    if not stop_tol > 0.0:
        raise ValueError("stop_tol must be positive")
    ratio_space = False
    if limit is None:
        limit, ratio_space = _resolve_limit(p0, config, model)
    else:
        require_same_space(p0, limit)
        ratio_space = (not config.is_pure) and config.is_infinite_pool
    return _iterate(p0, config, model, t_max, stop_tol, limit, ratio_space)
