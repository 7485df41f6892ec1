"""Bounded reward perturbations: instability of pure loops, stability of mixed ones.

A perturbation adds a bounded per-state shift to the reward, multiplying the
utility profile by exp(shift). Pure self-consuming loops are brittle: an
explicit shift of sup-norm eta, built here, relocates the utility-maximizing
set onto a disjoint band, so the two pure limits end up at total-variation
distance one. Mixed loops are robust: the finite-pool contractive regime obeys
the closed-form bound eta*rho / (4*(1-rho)) uniformly in time, and the
infinite-pool regime's trajectory deviation vanishes with eta (no rate, so
only trends are asserted).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .dynamics import RegimeConfig, TrajectoryRecord, _iterate, _resolve_limit
from .errors import AlphaOutOfRange, HypothesisViolated, NotContractive, SpaceMismatch
from .fixed_points import (
    contraction_rate,
    fixed_point_regime_iii,
    fixed_point_regime_iv,
    pure_limit,
)
from .kernels import kernel_finite_exact
from .measure import Density, _readonly, require_same_space, set_mass, tv_distance
from .preferences import (
    AssumptionReport,
    NoiseModel,
    PreferenceModel,
    a3_threshold,
    build_preference,
)


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """Per-state reward shift together with its sup norm."""

    delta_r: np.ndarray
    eta: float

    def __init__(self, delta_r):
        delta_r = _readonly(delta_r)
        if delta_r.ndim != 1 or not np.all(np.isfinite(delta_r)):
            raise ValueError("delta_r must be a finite 1-d array")
        object.__setattr__(self, "delta_r", delta_r)
        object.__setattr__(self, "eta", float(np.max(np.abs(delta_r))) if delta_r.size else 0.0)


def perturb_model(model: PreferenceModel, spec: PerturbationSpec) -> PreferenceModel:
    """Model with reward shifted by delta_r (utilities scaled by exp(delta_r))."""
    if spec.delta_r.shape != (model.space.n,):
        raise SpaceMismatch("delta_r needs one entry per state")
    if model.noise.has_noise_law:
        return build_preference(model.space, model.reward + spec.delta_r, model.noise)
    return build_preference(
        model.space,
        noise=NoiseModel.direct_q(),
        q_values=model.q_values * np.exp(spec.delta_r),
    )


def adversarial_delta_r(
    model: PreferenceModel, p0: Density, eta: float, delta: float
) -> PerturbationSpec:
    """Explicit sup-norm-eta shift that relocates the maximizing set.

    Needs initial mass on the band of states within delta of the top utility
    (top excluded), and eta large enough that the band can be lifted to the
    top: (q_star - delta) * exp(eta) >= q_star. The shift lifts band states
    exactly to q_star, pushes the current maximizers down by eta, and leaves
    the rest untouched.
    """
    require_same_space(model, p0)
    if eta <= 0.0 or delta <= 0.0:
        raise HypothesisViolated("eta and delta must be positive")
    a_mask = model.maximizer_mask
    band = (model.q_values >= model.q_star - delta) & ~a_mask
    band_mass = set_mass(p0, band)
    if not band_mass > 0.0:
        raise HypothesisViolated(
            "no initial mass on the near-top utility band {q_star - delta <= q < q_star}"
        )
    if not (model.q_star - delta) * math.exp(eta) >= model.q_star:
        raise HypothesisViolated(
            f"(q_star - delta) * exp(eta) = {(model.q_star - delta) * math.exp(eta)!r} "
            f"< q_star = {model.q_star!r}"
        )
    delta_r = np.zeros(model.space.n)
    delta_r[band] = np.log(model.q_star / model.q_values[band])
    delta_r[a_mask] = -eta
    return PerturbationSpec(delta_r)


@dataclass(frozen=True, eq=False)
class InstabilityReport:
    """Pure-regime limits under the original and shifted rewards."""

    spec: PerturbationSpec
    tv_between_limits: float
    limit_base: Density
    limit_perturbed: Density


def instability_experiment(
    model: PreferenceModel, p0: Density, eta: float, delta: float
) -> InstabilityReport:
    """Both pure limits and their total-variation distance (one, when valid)."""
    spec = adversarial_delta_r(model, p0, eta, delta)
    base = pure_limit(p0, model).density
    shifted = pure_limit(p0, perturb_model(model, spec)).density
    return InstabilityReport(
        spec=spec,
        tv_between_limits=tv_distance(base, shifted),
        limit_base=base,
        limit_perturbed=shifted,
    )


def stability_bound_regime_iii(k: int, alpha: float, eta: float) -> float:
    """Uniform-in-time TV bound eta * rho / (4 * (1 - rho)) , rho = k*(1-alpha)."""
    if eta < 0.0:
        raise ValueError("eta must be nonnegative")
    rho = contraction_rate(k, alpha)
    if rho >= 1.0:
        raise NotContractive(f"k*(1-alpha) = {rho!r} >= 1; the bound needs a contraction")
    return eta * rho / (4.0 * (1.0 - rho))


@dataclass(frozen=True, eq=False)
class PerturbedPairResult:
    """Paired trajectories under original vs shifted rewards, from one start."""

    base_records: list[TrajectoryRecord]
    perturbed_records: list[TrajectoryRecord]
    pair_tv: np.ndarray  # d_TV(p_t_perturbed, p_t_base), t = 0..t_max
    pair_tv_infinity: float  # distance between the two limits
    sup_tv: float  # max over all recorded t and the limit pair


def _limit_pair_distance(
    config: RegimeConfig, model: PreferenceModel, perturbed: PreferenceModel, p0: Density
) -> float:
    if config.is_pure:
        return tv_distance(pure_limit(p0, model).density, pure_limit(p0, perturbed).density)
    if config.is_infinite_pool:
        base = fixed_point_regime_iv(model, config.p_ref, config.alpha)
        pert = fixed_point_regime_iv(perturbed, config.p_ref, config.alpha)
    else:
        base = fixed_point_regime_iii(config, model)
        pert = fixed_point_regime_iii(config, perturbed)
    return tv_distance(base.density, pert.density)


def run_perturbed_pair(
    p0: Density,
    config: RegimeConfig,
    model: PreferenceModel,
    spec: PerturbationSpec,
    t_max: int,
) -> PerturbedPairResult:
    """Run the same regime under both reward profiles and track their gap.

    Both trajectories run the full t_max rounds (no early stop) so the
    per-step distances stay aligned; the supremum also includes the distance
    between the two limits, playing the role of t = infinity.
    """
    require_same_space(p0, model)
    perturbed = perturb_model(model, spec)
    base_limit, base_ratio = _resolve_limit(p0, config, model)
    pert_limit, pert_ratio = _resolve_limit(p0, config, perturbed)
    base_records = _iterate(p0, config, model, t_max, None, base_limit, base_ratio)
    pert_records = _iterate(p0, config, perturbed, t_max, None, pert_limit, pert_ratio)
    pair = np.array(
        [tv_distance(b.density, q.density) for b, q in zip(base_records, pert_records)]
    )
    d_inf = _limit_pair_distance(config, model, perturbed, p0)
    return PerturbedPairResult(
        base_records=base_records,
        perturbed_records=pert_records,
        pair_tv=pair,
        pair_tv_infinity=d_inf,
        sup_tv=float(max(float(np.max(pair)), d_inf)),
    )


@dataclass(frozen=True, eq=False)
class KernelShiftReport:
    """Worst-case kernel movement under a reward shift, against its bound."""

    max_deviation: float
    bound: float
    ok: bool


def kernel_perturbation_check(
    p: Density, model: PreferenceModel, k: int, spec: PerturbationSpec
) -> KernelShiftReport:
    """Compare exact finite-pool kernels before/after the shift to (k/2)*eta."""
    base = kernel_finite_exact(p, model, k)
    shifted = kernel_finite_exact(p, perturb_model(model, spec), k)
    dev = float(np.max(np.abs(shifted.h_values - base.h_values)))
    bound = 0.5 * k * spec.eta
    return KernelShiftReport(max_deviation=dev, bound=bound, ok=dev <= bound + 1e-10)


def check_assumption_A4(
    model: PreferenceModel,
    p_ref: Density,
    alpha: float,
    eta_star: float,
    n_probe: int,
    seed: int,
) -> AssumptionReport:
    """Probe the perturbed fixed-point threshold over sign-pattern shifts.

    Evaluates the admissibility threshold at n_probe random +/- eta_star sign
    patterns plus the zero shift, and reports the largest one — a lower bound
    on the true supremum over the eta_star ball. "holds" is therefore
    heuristic; "fails" is definitive. Constant shifts cannot move the
    threshold (the utility-gap ratio is scale-free), so extreme sign patterns
    are the informative probes.
    """
    require_same_space(model, p_ref)
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange("alpha must lie strictly between 0 and 1")
    if eta_star <= 0.0:
        raise ValueError("eta_star must be positive")
    thresholds = [a3_threshold(model, p_ref)]
    n = model.space.n
    for i in range(n_probe):
        gen = rngmod.generator(seed, rngmod.PROBE, i)
        pattern = eta_star * np.where(gen.random(n) < 0.5, -1.0, 1.0)
        probed = perturb_model(model, PerturbationSpec(pattern))
        thresholds.append(a3_threshold(probed, p_ref))
    worst = max(thresholds)
    return AssumptionReport(
        name="A4",
        holds=alpha > worst,
        margin=alpha - worst,
        detail=(
            f"max probed threshold = {worst!r} over {n_probe} sign patterns at "
            f"eta_star = {eta_star!r}; lower bound on the true supremum (heuristic)"
        ),
    )
