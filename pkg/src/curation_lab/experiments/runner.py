"""Execute one experiment config and write its reports.

Outputs per run directory:

* ``trajectory.csv`` — one row per recorded round, fixed header, '.' decimals,
  empty cells for unavailable metrics, the literal ``inf`` for infinite ones.
* ``summary.json`` — regime facts, assumption reports, limit objects
  (including the scalar normalizer and ratio profile where they exist), and
  the stability supremum when a perturbation block is present.
* ``stability.csv`` — per-round distance between the paired trajectories plus
  a final row for the limit pair, when a perturbation block is present.
* matching ``.png`` figures for each delimited report (optional).

CSV/JSON bytes depend only on the config contents and seed.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import rng as rngmod
from ..dynamics import TrajectoryRecord, run_trajectory
from ..errors import CurationLabError
from ..fixed_points import (
    FixedPointResult,
    contraction_rate,
    fixed_point_regime_iii,
    fixed_point_regime_iv,
    pure_limit,
)
from ..perturbations import (
    PerturbationSpec,
    PerturbedPairResult,
    adversarial_delta_r,
    run_perturbed_pair,
    stability_bound_regime_iii,
)
from ..preferences import (
    check_assumption_A1,
    check_assumption_A2,
    check_assumption_A3,
)
from .config import ExperimentConfig

TRAJECTORY_HEADER = (
    "t,exp_reward,var_reward,h_t,mass_on_A,step_tv,tv_to_limit,kl_star_to_pt,hilbert_to_limit"
)
STABILITY_HEADER = "t,d_tv_pair"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_ready(float(v)) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_json(path: Path, obj) -> None:
    write_text_atomic(path, json.dumps(_json_ready(obj), indent=2, sort_keys=True) + "\n")


def trajectory_csv(records: list[TrajectoryRecord]) -> str:
    lines = [TRAJECTORY_HEADER]
    for r in records:
        lines.append(
            ",".join(
                _cell(v)
                for v in (
                    r.t,
                    r.exp_reward,
                    r.var_reward,
                    r.h_t,
                    r.mass_on_A,
                    r.step_tv,
                    r.tv_to_limit,
                    r.kl_star_to_pt,
                    r.hilbert_to_limit,
                )
            )
        )
    return "\n".join(lines) + "\n"


def stability_csv(pair: PerturbedPairResult) -> str:
    lines = [STABILITY_HEADER]
    for t, d in enumerate(pair.pair_tv):
        lines.append(f"{t},{_cell(float(d))}")
    lines.append(f"inf,{_cell(pair.pair_tv_infinity)}")
    return "\n".join(lines) + "\n"


def build_perturbation_spec(config: ExperimentConfig) -> PerturbationSpec:
    """Materialize the config's perturbation block as a concrete reward shift."""
    block = config.perturbation
    if block is None:
        raise ValueError("the config has no perturbation block")
    if block.mode == "adversarial":
        return adversarial_delta_r(config.model, config.p0, block.eta, block.delta)
    if block.mode == "explicit":
        return PerturbationSpec(np.array(block.delta_r))
    gen = rngmod.generator(config.seed, rngmod.PERTURB)
    return PerturbationSpec(gen.uniform(-block.eta, block.eta, size=config.space.n))


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """In-memory results backing the emitted files."""

    records: list[TrajectoryRecord]
    limit: FixedPointResult | None
    limit_error: str | None
    assumptions: list
    pair: PerturbedPairResult | None
    stability_bound: float | None
    spec_eta: float | None


def _limit_for(config: ExperimentConfig) -> tuple[FixedPointResult | None, str | None]:
    regime = config.regime
    try:
        if regime.is_pure:
            return pure_limit(config.p0, config.model), None
        if regime.is_infinite_pool:
            return fixed_point_regime_iv(config.model, config.p_ref, regime.alpha), None
        return fixed_point_regime_iii(regime, config.model), None
    except CurationLabError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def execute(config: ExperimentConfig) -> ExperimentResult:
    """Run the trajectory (and paired perturbed run) for a validated config."""
    regime = config.regime
    limit, limit_error = _limit_for(config)
    records = run_trajectory(
        config.p0,
        regime,
        config.model,
        t_max=config.t_max,
        stop_tol=config.stop_tol,
        limit=limit.density if limit is not None else None,
    )
    assumptions = [check_assumption_A1(config.model, config.p0)]
    if config.p_ref is not None:
        assumptions.append(check_assumption_A2(config.p0, config.p_ref))
        if 0.0 < regime.alpha < 1.0:
            assumptions.append(check_assumption_A3(config.model, config.p_ref, regime.alpha))

    pair = None
    bound = None
    spec_eta = None
    if config.perturbation is not None:
        spec = build_perturbation_spec(config)
        spec_eta = spec.eta
        pair = run_perturbed_pair(config.p0, regime, config.model, spec, config.t_max)
        if not regime.is_pure and not regime.is_infinite_pool:
            rho = contraction_rate(int(regime.pool), regime.alpha)
            if rho < 1.0:
                bound = stability_bound_regime_iii(int(regime.pool), regime.alpha, spec.eta)
    return ExperimentResult(records, limit, limit_error, assumptions, pair, bound, spec_eta)


def summary_payload(config: ExperimentConfig, result: ExperimentResult) -> dict:
    regime = config.regime
    last = result.records[-1]
    payload: dict = {
        "regime": regime.regime_label,
        "alpha": regime.alpha,
        "k": "inf" if regime.is_infinite_pool else int(regime.pool),
        "seed": config.seed,
        "rounds_recorded": len(result.records),
        "stopped_early": last.t < config.t_max,
        "terminal": {
            "t": last.t,
            "exp_reward": last.exp_reward,
            "var_reward": last.var_reward,
            "mass_on_A": last.mass_on_A,
            "step_tv": last.step_tv,
            "tv_to_limit": last.tv_to_limit,
            "kl_star_to_pt": last.kl_star_to_pt,
            "hilbert_to_limit": last.hilbert_to_limit,
        },
        "assumptions": [
            {"name": a.name, "holds": a.holds, "margin": a.margin, "detail": a.detail}
            for a in result.assumptions
        ],
    }
    if not regime.is_infinite_pool:
        payload["contraction_rate"] = contraction_rate(int(regime.pool), regime.alpha)
    if result.limit is not None:
        lim = result.limit
        payload["limit"] = {
            "regime": lim.regime,
            "density": lim.density.values,
            "residual": lim.residual,
            "iterations": lim.iterations,
        }
        if lim.c_star is not None:
            payload["limit"]["c_star"] = lim.c_star
        if lim.w_star is not None:
            payload["limit"]["w_star"] = lim.w_star
    elif result.limit_error is not None:
        payload["limit"] = {"unavailable": result.limit_error}
    if result.pair is not None:
        payload["stability"] = {
            "eta": result.spec_eta,
            "sup_tv": result.pair.sup_tv,
            "tv_at_limits": result.pair.pair_tv_infinity,
            "bound": result.stability_bound,
        }
    return payload


def run_experiment(config: ExperimentConfig, out_dir: str | Path, make_plots: bool = True) -> list[Path]:
    """Execute a config and write its reports into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = execute(config)
    written: list[Path] = []

    traj_path = out / "trajectory.csv"
    write_text_atomic(traj_path, trajectory_csv(result.records))
    written.append(traj_path)

    summary_path = out / "summary.json"
    write_json(summary_path, summary_payload(config, result))
    written.append(summary_path)

    if result.pair is not None:
        stab_path = out / "stability.csv"
        write_text_atomic(stab_path, stability_csv(result.pair))
        written.append(stab_path)

    if make_plots:
        from . import plots

        written.append(plots.trajectory_figure(result.records, out / "trajectory.png"))
        if result.pair is not None:
            written.append(
                plots.stability_figure(result.pair, result.stability_bound, out / "stability.png")
            )
    return written
