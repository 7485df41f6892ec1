"""Figure rendering for the report paths (Agg backend, file output only)."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finite_series(records, attr):
    ts, vals = [], []
    for r in records:
        v = getattr(r, attr)
        if v is not None and math.isfinite(v) and v > 0:
            ts.append(r.t)
            vals.append(v)
    return ts, vals


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def trajectory_figure(records, path: str | Path) -> Path:
    path = Path(path)
    ts = [r.t for r in records]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5))

    ax = axes[0, 0]
    ax.plot(ts, [r.exp_reward for r in records], marker=".", lw=1)
    ax.set_xlabel("round")
    ax.set_ylabel("expected utility")
    ax.set_title("expected utility")

    ax = axes[0, 1]
    for attr, label in (
        ("tv_to_limit", "TV to limit"),
        ("kl_star_to_pt", "KL(limit || current)"),
        ("hilbert_to_limit", "projective dist to limit"),
    ):
        xs, ys = _finite_series(records, attr)
        if xs:
            ax.semilogy(xs, ys, marker=".", lw=1, label=label)
    xs, ys = _finite_series(records, "step_tv")
    if xs:
        ax.semilogy(xs, ys, ls="--", lw=1, label="one-round TV movement")
    ax.set_xlabel("round")
    ax.set_title("distances (log scale)")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)

    ax = axes[1, 0]
    ax.plot(ts, [r.mass_on_A for r in records], marker=".", lw=1)
    ax.set_xlabel("round")
    ax.set_ylabel("mass on the top set")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("top-set mass")

    ax = axes[1, 1]
    ax.plot(ts, [r.h_t for r in records], marker=".", lw=1)
    ax.axhline(1.0, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("round")
    ax.set_ylabel("kernel value on the top set")
    ax.set_title("top-set selection factor")

    return _save(fig, path)


def stability_figure(pair, bound, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ts = np.arange(len(pair.pair_tv))
    ax.plot(ts, pair.pair_tv, marker=".", lw=1, label="TV between paired rounds")
    ax.axhline(pair.pair_tv_infinity, color="tab:orange", lw=1, ls="--", label="TV between limits")
    if bound is not None:
        ax.axhline(bound, color="tab:red", lw=1, label="uniform bound")
    ax.set_xlabel("round")
    ax.set_ylabel("total variation")
    ax.set_title("trajectory gap under the reward shift")
    ax.legend(fontsize=8)
    return _save(fig, path)


def sweep_figure(rows, path: str | Path) -> Path:
    path = Path(path)
    ok = [r for r in rows if r[3] == "ok"]
    fig, ax = plt.subplots(figsize=(7, 4.2))
    if ok:
        by_k: dict = {}
        for r in ok:
            by_k.setdefault(r[1], []).append(r)
        for kval, group in sorted(by_k.items(), key=lambda kv: str(kv[0])):
            group = sorted(group, key=lambda r: r[0])
            alphas = [r[0] for r in group]
            iters = [r[6] if r[6] is not None else float("nan") for r in group]
            ax.plot(alphas, iters, marker="o", lw=1, label=f"pool k={kval}")
        ax.set_xlabel("mixing weight alpha")
        ax.set_ylabel("fixed-point iterations")
        ax.set_title("iterations to the fixed point across the grid")
        ax.legend(fontsize=8)
    else:
        ax.text(0.5, 0.5, "no successful grid points", ha="center", va="center")
        ax.set_axis_off()
    return _save(fig, path)


def mc_figure(space, empirical, population, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.2))
    x = np.arange(space.n)
    width = 0.4
    ax.bar(x - width / 2, empirical, width, label="sampled frequency")
    ax.bar(x + width / 2, population, width, label="population mass")
    ax.set_xticks(x)
    ax.set_xticklabels(space.labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("probability mass")
    ax.set_title("final-round sampled loop vs population loop")
    ax.legend(fontsize=8)
    return _save(fig, path)
