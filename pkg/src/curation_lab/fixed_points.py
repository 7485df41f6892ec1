"""Limits of the four regimes: closed forms, scalar roots, and iteration.

* Pure regimes concentrate on the utility-maximizing set: the limit is the
  start density restricted there and renormalized.
* The infinite-pool mixed regime has an explicit fixed point in reference-
  ratio coordinates, ``w(x) = alpha / (1 - (1 - alpha) q(x) / c)``, once the
  scalar normalizer ``c`` is pinned down. ``u(c) = integral of w(.; c)``
  against the reference is strictly decreasing on the admissible bracket, so
  the root is found by bisection — safe where a Newton step is not, because
  u'(c) blows up at the lower bracket end.
* The finite mixed pool has no closed form; its fixed point is produced by
  iterating the update from the reference density, with the termination
  threshold chosen so the Banach a-posteriori bound certifies the requested
  accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import RegimeConfig, update_once
from .errors import (
    AssumptionA1Violated,
    AssumptionA3Violated,
    BracketFailure,
    MaxIterations,
    NotContractive,
)
from .measure import Density, make_density, require_same_space, tv_distance
from .preferences import PreferenceModel, check_assumption_A1, check_assumption_A3

BISECTION_MAX_ITER = 200
BISECTION_BRACKET_RTOL = 1e-14
DEFAULT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    """A limit density plus solver provenance."""

    density: Density
    w_star: np.ndarray | None
    c_star: float | None
    residual: float
    iterations: int
    regime: str


def pure_limit(p0: Density, model: PreferenceModel) -> FixedPointResult:
    """Start density restricted to the utility-maximizing set."""
    require_same_space(p0, model)
    report = check_assumption_A1(model, p0)
    if not report.holds:
        raise AssumptionA1Violated(report.detail)
    restricted = np.where(model.maximizer_mask, p0.values, 0.0)
    return FixedPointResult(
        density=make_density(p0.space, restricted),
        w_star=None,
        c_star=None,
        residual=0.0,
        iterations=0,
        regime="pure",
    )


def contraction_rate(k: int, alpha: float) -> float:
    """Total-variation Lipschitz factor k*(1 - alpha) of the mixed update."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("pool size k must be an integer >= 1")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    return float(k) * (1.0 - alpha)


def _normalizer_curve(model: PreferenceModel, p_ref: Density, alpha: float):
    support = p_ref.values > 0.0
    q = model.q_values[support]
    weights = p_ref.values[support] * p_ref.space.pi[support]

    def u(c: float) -> float:
        return float(np.sum(alpha / (1.0 - (1.0 - alpha) * q / c) * weights))

    return u


def _solve_c_star(
    model: PreferenceModel, p_ref: Density, alpha: float, tol: float
) -> tuple[float, int, float]:
    report = check_assumption_A3(model, p_ref, alpha)
    if not report.holds:
        raise AssumptionA3Violated(report.detail)
    q_star = model.q_star
    u = _normalizer_curve(model, p_ref, alpha)
    hi = q_star
    u_hi = u(hi)
    if u_hi >= 1.0 - tol:
        return q_star, 0, abs(u_hi - 1.0)
    lo = (1.0 - alpha) * q_star * (1.0 + 1e-15)
    if not u(lo) > 1.0:
        raise BracketFailure("u(c) fails to exceed 1 at the lower bracket end")
    best_c, best_res = hi, abs(u_hi - 1.0)
    iterations = 0
    for iterations in range(1, BISECTION_MAX_ITER + 1):
        mid = 0.5 * (lo + hi)
        val = u(mid)
        if abs(val - 1.0) < best_res:
            best_c, best_res = mid, abs(val - 1.0)
        if val > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECTION_BRACKET_RTOL * q_star and best_res <= tol:
            break
    if best_res > tol:
        raise BracketFailure(
            f"bisection exhausted with residual {best_res!r} above tol {tol!r}"
        )
    return best_c, iterations, best_res


def solve_c_star(model: PreferenceModel, p_ref: Density, alpha: float, tol: float = DEFAULT_TOL) -> float:
    """Scalar normalizer of the infinite-pool mixed fixed point.

    Lies in ((1 - alpha) * q_star, q_star]; equals q_star exactly when the
    utility is constant on the reference support.
    """
    c, _, _ = _solve_c_star(model, p_ref, alpha, tol)
    return c


def fixed_point_regime_iv(
    model: PreferenceModel,
    p_ref: Density,
    alpha: float,
    tol: float = DEFAULT_TOL,
) -> FixedPointResult:
    """Explicit infinite-pool mixed fixed point, with self-consistency checks."""
    require_same_space(model, p_ref)
    c, iterations, _ = _solve_c_star(model, p_ref, alpha, tol)
    w = alpha / (1.0 - (1.0 - alpha) * model.q_values / c)
    ref_w = p_ref.values * p_ref.space.pi
    inner = float(np.sum(w * model.q_values * ref_w))
    total = float(np.sum(w * ref_w))
    if abs(inner - c) > 10.0 * tol * max(c, 1.0) or abs(total - 1.0) > 10.0 * tol:
        raise BracketFailure(
            f"fixed point self-consistency failed: <w,q>={inner!r} vs c={c!r}, mass={total!r}"
        )
    density = make_density(p_ref.space, w * p_ref.values)
    config = RegimeConfig(alpha=alpha, pool=math.inf, p_ref=p_ref)
    residual = tv_distance(update_once(density, config, model), density)
    return FixedPointResult(
        density=density,
        w_star=w,
        c_star=c,
        residual=residual,
        iterations=iterations,
        regime="mixed-infinite",
    )


def fixed_point_regime_iii(
    config: RegimeConfig,
    model: PreferenceModel,
    tol: float = DEFAULT_TOL,
    t_max: int = 100_000,
) -> FixedPointResult:
    """Finite-pool mixed fixed point by contraction iteration from p_ref.

    Requires alpha > (k - 1) / k so the update contracts; stopping when one
    step moves less than tol * (1 - rho) / rho guarantees the returned density
    is within tol of the true fixed point.
    """
    if config.is_infinite_pool or config.is_pure:
        raise ValueError("expected a mixed finite-pool configuration")
    require_same_space(model, config.p_ref)
    k = int(config.pool)
    rho = contraction_rate(k, config.alpha)
    if rho >= 1.0:
        raise NotContractive(
            f"k*(1-alpha) = {rho!r} >= 1; need alpha > {(k - 1) / k!r} for pool size {k}"
        )
    threshold = math.inf if rho == 0.0 else tol * (1.0 - rho) / rho
    p = config.p_ref
    for iterations in range(1, t_max + 1):
        p_next = update_once(p, config, model, step=iterations)
        step = tv_distance(p_next, p)
        p = p_next
        if step < threshold:
            residual = tv_distance(update_once(p, config, model), p)
            return FixedPointResult(
                density=p,
                w_star=None,
                c_star=None,
                residual=residual,
                iterations=iterations,
                regime="mixed-finite",
            )
    raise MaxIterations(f"no fixed point within {t_max} iterations")
