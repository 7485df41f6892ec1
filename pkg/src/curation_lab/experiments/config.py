"""Versioned JSON experiment configs with parse-time validation.

Every module precondition that can be checked statically is checked here, so
experiment failures surface as a named precondition at load time instead of
deep inside a run. Unknown keys are rejected at every nesting level. The
formal schema ships in docs/experiment_schema.json; this module is the source
of truth.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dynamics import RegimeConfig
from ..errors import CurationLabError, ParseError, ValidationError
from ..measure import Density, StateSpace, make_density
from ..preferences import NoiseModel, PreferenceModel, build_preference

CONFIG_VERSION = 1

_NOISE_KINDS = ("zero", "stationary", "direct_q")
_PERTURBATION_MODES = ("adversarial", "random", "explicit")


def _require_keys(obj: dict, where: str, required: set[str], optional: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where} must be an object")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ValidationError(f"missing keys in {where}: {sorted(missing)}")


def _number_list(obj, where: str, length: int | None = None) -> list[float]:
    if not isinstance(obj, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
        raise ValidationError(f"{where} must be a list of numbers")
    if length is not None and len(obj) != length:
        raise ValidationError(f"{where} must have length {length}")
    return [float(x) for x in obj]


def _positive_int(obj, where: str, minimum: int = 1) -> int:
    if not isinstance(obj, int) or isinstance(obj, bool) or obj < minimum:
        raise ValidationError(f"{where} must be an integer >= {minimum}")
    return obj


@dataclass(frozen=True, eq=False)
class PerturbationBlock:
    mode: str
    eta: float | None = None
    delta: float | None = None
    delta_r: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class MonteCarloBlock:
    n_per_round: int
    t_rounds: int
    n_rounds: int


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A fully validated experiment: raw fields plus built domain objects."""

    space: StateSpace
    model: PreferenceModel
    p0: Density
    p_ref: Density | None
    regime: RegimeConfig
    t_max: int
    stop_tol: float
    seed: int
    perturbation: PerturbationBlock | None
    montecarlo: MonteCarloBlock | None


def _parse_noise(obj) -> tuple[NoiseModel, list[float] | None]:
    """Returns the noise model and, for direct_q, the q profile."""
    _require_keys(obj, "noise", {"kind"}, {"support", "probs", "q_values"})
    kind = obj.get("kind")
    if kind not in _NOISE_KINDS:
        raise ValidationError(f"noise.kind must be one of {_NOISE_KINDS}")
    if kind == "zero":
        if set(obj) - {"kind"}:
            raise ValidationError("zero noise takes no extra fields")
        return NoiseModel.zero(), None
    if kind == "stationary":
        _require_keys(obj, "noise", {"kind", "support", "probs"})
        support = _number_list(obj["support"], "noise.support")
        probs = _number_list(obj["probs"], "noise.probs", length=len(support))
        try:
            return NoiseModel.stationary(support, probs), None
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
    _require_keys(obj, "noise", {"kind", "q_values"})
    return NoiseModel.direct_q(), _number_list(obj["q_values"], "noise.q_values")


def _parse_regime(obj) -> tuple[float, float, str, int | None]:
    _require_keys(obj, "regime", {"alpha", "k"}, {"kernel"})
    alpha = obj["alpha"]
    if not isinstance(alpha, (int, float)) or isinstance(alpha, bool) or not 0.0 <= alpha < 1.0:
        raise ValidationError("alpha must be in [0,1)")
    k = obj["k"]
    if k == "inf":
        pool = math.inf
    else:
        pool = float(_positive_int(k, "regime.k"))
    kernel = obj.get("kernel", "exact")
    if kernel == "exact":
        method, mc_samples = "exact", None
    elif isinstance(kernel, dict):
        _require_keys(kernel, "regime.kernel", {"method", "n_samples"})
        if kernel["method"] != "mc":
            raise ValidationError('regime.kernel.method must be "mc"')
        method = "mc"
        mc_samples = _positive_int(kernel["n_samples"], "regime.kernel.n_samples", minimum=100)
        if math.isinf(pool):
            raise ValidationError("the infinite pool has a closed-form kernel; mc does not apply")
    else:
        raise ValidationError('regime.kernel must be "exact" or {"method": "mc", ...}')
    return float(alpha), pool, method, mc_samples


def _parse_perturbation(obj, n: int) -> PerturbationBlock:
    _require_keys(obj, "perturbation", {"mode"}, {"eta", "delta", "delta_r"})
    mode = obj.get("mode")
    if mode not in _PERTURBATION_MODES:
        raise ValidationError(f"perturbation.mode must be one of {_PERTURBATION_MODES}")
    eta = obj.get("eta")
    delta = obj.get("delta")
    delta_r = obj.get("delta_r")
    if mode == "adversarial":
        if eta is None or delta is None or delta_r is not None:
            raise ValidationError("adversarial perturbations take eta and delta only")
        if not (isinstance(eta, (int, float)) and eta > 0) or not (
            isinstance(delta, (int, float)) and delta > 0
        ):
            raise ValidationError("perturbation eta and delta must be positive numbers")
        return PerturbationBlock(mode, eta=float(eta), delta=float(delta))
    if mode == "random":
        if eta is None or delta is not None or delta_r is not None:
            raise ValidationError("random perturbations take eta only")
        if not (isinstance(eta, (int, float)) and eta > 0):
            raise ValidationError("perturbation.eta must be a positive number")
        return PerturbationBlock(mode, eta=float(eta))
    if eta is not None or delta is not None or delta_r is None:
        raise ValidationError("explicit perturbations take delta_r only")
    values = _number_list(delta_r, "perturbation.delta_r", length=n)
    return PerturbationBlock(mode, delta_r=tuple(values))


def _parse_montecarlo(obj, pool: float) -> MonteCarloBlock:
    _require_keys(obj, "montecarlo", {"n_per_round", "t_rounds", "n_rounds"})
    if math.isinf(pool):
        raise ValidationError("no finite-sample simulator exists for the infinite pool")
    return MonteCarloBlock(
        n_per_round=_positive_int(obj["n_per_round"], "montecarlo.n_per_round"),
        t_rounds=_positive_int(obj["t_rounds"], "montecarlo.t_rounds", minimum=0),
        n_rounds=_positive_int(obj["n_rounds"], "montecarlo.n_rounds"),
    )


def parse_experiment(raw: dict) -> ExperimentConfig:
    """Validate a decoded config object and build its domain objects."""
    _require_keys(
        raw,
        "config",
        {"version", "space", "noise", "regime", "p0", "t_max", "stop_tol", "seed"},
        {"reward", "p_ref", "perturbation", "montecarlo"},
    )
    if raw["version"] != CONFIG_VERSION:
        raise ValidationError(f"config version must be {CONFIG_VERSION}")

    _require_keys(raw["space"], "space", {"labels", "pi"})
    labels = raw["space"]["labels"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels) or not labels:
        raise ValidationError("space.labels must be a nonempty list of strings")
    pi = _number_list(raw["space"]["pi"], "space.pi", length=len(labels))
    try:
        space = StateSpace(labels, pi)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    n = space.n

    noise, q_values = _parse_noise(raw["noise"])
    if noise.has_noise_law:
        if "reward" not in raw:
            raise ValidationError("a reward profile is required unless noise.kind is direct_q")
        reward = _number_list(raw["reward"], "reward", length=n)
    else:
        if "reward" in raw:
            raise ValidationError("direct_q noise derives the reward from q_values")
        reward = None

    alpha, pool, method, mc_samples = _parse_regime(raw["regime"])
    if not noise.has_noise_law and not math.isinf(pool):
        raise ValidationError("finite pools need an explicit noise law (zero or stationary)")

    t_max = _positive_int(raw["t_max"], "t_max")
    stop_tol = raw["stop_tol"]
    if not isinstance(stop_tol, (int, float)) or isinstance(stop_tol, bool) or not stop_tol > 0:
        raise ValidationError("stop_tol must be a positive number")
    seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError("seed must be a nonnegative integer")

    try:
        model = build_preference(space, reward, noise, q_values=q_values)
        p0 = make_density(space, _number_list(raw["p0"], "p0", length=n))
        p_ref = None
        if "p_ref" in raw:
            p_ref = make_density(space, _number_list(raw["p_ref"], "p_ref", length=n))
        if alpha > 0.0 and p_ref is None:
            raise ValidationError("a mixed regime (alpha > 0) requires p_ref")
        regime = RegimeConfig(
            alpha=alpha,
            pool=pool,
            p_ref=p_ref,
            kernel_method=method,
            mc_samples=mc_samples,
            seed=seed,
        )
    except ValidationError:
        raise
    except (CurationLabError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc

    perturbation = None
    if "perturbation" in raw:
        perturbation = _parse_perturbation(raw["perturbation"], n)
    montecarlo = None
    if "montecarlo" in raw:
        montecarlo = _parse_montecarlo(raw["montecarlo"], pool)

    return ExperimentConfig(
        space=space,
        model=model,
        p0=p0,
        p_ref=p_ref,
        regime=regime,
        t_max=t_max,
        stop_tol=float(stop_tol),
        seed=seed,
        perturbation=perturbation,
        montecarlo=montecarlo,
    )


def load_experiment(path: str | Path) -> ExperimentConfig:
    """Read, decode, and validate a JSON experiment file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_experiment(raw)
