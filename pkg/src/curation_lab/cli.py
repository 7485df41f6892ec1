"""Command-line front end: run, verify, sweep, mc-check.

Exit codes: 0 success, 1 check failure, 2 configuration/IO error.
Config arguments accept a filesystem path or the name of a bundled fixture.
"""
from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import click

from . import rng as rngmod
from .errors import CurationLabError
from .experiments.config import ExperimentConfig, load_experiment
from .experiments.runner import (
    _cell,
    run_experiment,
    write_json,
    write_text_atomic,
)
from .experiments.sweep import sweep as run_sweep
from .experiments.verify import verify_theorems
from .kernels import curated_density, kernel_finite_exact
from .measure import tv_distance
from .sampling import curation_round, finite_sample_trajectory, gof_chi_square


def fixture_names() -> list[str]:
    root = resources.files("curation_lab.experiments") / "fixtures"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    root = resources.files("curation_lab.experiments") / "fixtures"
    for candidate in (name, name + ".json"):
        fixture = root / candidate
        if fixture.is_file():
            return Path(str(fixture))
    raise CurationLabError(f"no such config file or bundled fixture: {name}")


def _load(name: str) -> ExperimentConfig:
    return load_experiment(_resolve_config(name))


def _fail_config(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


@click.group()
def main():
    """Numerical laboratory for preference-curated retraining loops."""


@main.command()
def fixtures():
    """List the bundled example configs."""
    for name in fixture_names():
        click.echo(name)


@main.command()
@click.argument("config")
@click.option("-o", "--out-dir", default="out", show_default=True, help="report directory")
@click.option("--plots/--no-plots", default=True, show_default=True)
def run(config, out_dir, plots):
    """Run one experiment and write trajectory/summary/stability reports."""
    try:
        cfg = _load(config)
        written = run_experiment(cfg, out_dir, make_plots=plots)
    except CurationLabError as exc:
        _fail_config(exc)
    for path in written:
        click.echo(f"wrote {path}")


@main.command()
@click.argument("config")
@click.option("--json-out", default=None, help="also write the report as JSON")
def verify(config, json_out):
    """Check every applicable convergence/stability claim for a config."""
    try:
        cfg = _load(config)
        report = verify_theorems(cfg)
    except CurationLabError as exc:
        _fail_config(exc)
    for line in report.lines():
        click.echo(line)
    if json_out:
        payload = {
            "superalignment": report.superalignment,
            "overall": report.overall,
            "checks": [
                {
                    "id": c.check_id,
                    "claim": c.claim,
                    "status": c.status,
                    "measured": c.measured,
                    "bound": c.bound,
                    "slack": c.slack,
                    "heuristic": c.heuristic,
                    "note": c.note,
                }
                for c in report.checks
            ],
        }
        write_json(Path(json_out), payload)
        click.echo(f"wrote {json_out}")
    sys.exit(0 if report.overall else 1)


def _parse_grid(text, kind):
    if text is None:
        return None
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if kind == "k":
            values.append("inf" if part == "inf" else int(part))
        else:
            values.append(float(part))
    return values or None


@main.command()
@click.argument("config")
@click.option("--alphas", default=None, help="comma-separated mixing weights")
@click.option("--ks", default=None, help='comma-separated pool sizes (integers or "inf")')
@click.option("--etas", default=None, help="comma-separated perturbation magnitudes")
@click.option("-o", "--out-dir", default="out", show_default=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
def sweep(config, alphas, ks, etas, out_dir, plots):
    """Run a grid of experiments and aggregate terminal diagnostics."""
    try:
        cfg = _load(config)
        path = run_sweep(
            cfg,
            alphas=_parse_grid(alphas, "alpha"),
            ks=_parse_grid(ks, "k"),
            etas=_parse_grid(etas, "eta"),
            out_dir=out_dir,
            make_plots=plots,
        )
    except (CurationLabError, ValueError) as exc:
        _fail_config(exc)
    click.echo(f"wrote {path}")


@main.command(name="mc-check")
@click.argument("config")
@click.option("-o", "--out-dir", default="out", show_default=True)
@click.option("--plots/--no-plots", default=True, show_default=True)
def mc_check(config, out_dir, plots):
    """Validate the sampled curation loop against the population formulas."""
    try:
        cfg = _load(config)
        if cfg.montecarlo is None:
            raise CurationLabError("this config has no montecarlo block")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        mc = cfg.montecarlo
        k = int(cfg.regime.pool)

        target = curated_density(cfg.p0, kernel_finite_exact(cfg.p0, cfg.model, k))
        hist = curation_round(
            cfg.p0, cfg.model, k, mc.n_rounds, rngmod.derive_seed(cfg.seed, rngmod.VERIFY, 3)
        )
        gof = gof_chi_square(hist, target)

        lines = ["check,value,threshold,pass"]
        lines.append(
            f"chi_square_statistic,{_cell(gof.statistic)},{_cell(gof.critical_value)},"
            f"{not gof.reject_at_1pct}"
        )
        ok = not gof.reject_at_1pct
        emp_final = pop_final = None
        if mc.t_rounds >= 1:
            from .dynamics import run_trajectory

            fst = finite_sample_trajectory(
                cfg.p0, cfg.regime, cfg.model, mc.n_per_round, mc.t_rounds,
                rngmod.derive_seed(cfg.seed, rngmod.VERIFY, 6),
            )
            pop = run_trajectory(cfg.p0, cfg.regime, cfg.model, t_max=mc.t_rounds, stop_tol=1e-300)
            for t, (emp_d, pop_r) in enumerate(zip(fst.densities, pop)):
                gap = tv_distance(emp_d, pop_r.density)
                lines.append(f"loop_tv_round_{t},{_cell(gap)},{_cell(0.01)},{gap <= 0.01}")
                ok = ok and gap <= 0.01
            emp_final = fst.densities[-1].values * cfg.space.pi
            pop_final = pop[-1].density.values * cfg.space.pi
        csv_path = out / "mc_check.csv"
        write_text_atomic(csv_path, "\n".join(lines) + "\n")
        click.echo(f"wrote {csv_path}")
        if plots and emp_final is not None:
            from .experiments import plots as plotmod

            fig = plotmod.mc_figure(cfg.space, emp_final, pop_final, out / "mc_check.png")
            click.echo(f"wrote {fig}")
    except CurationLabError as exc:
        _fail_config(exc)
    click.echo("mc-check: " + ("PASS" if ok else "FAIL"))
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
