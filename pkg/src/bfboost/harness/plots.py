"""Figure rendering for experiment outputs.

Each experiment command writes its figures next to the delimited output.
Figures are a view of the CSV records, never an extra computation, so a run
with plotting disabled loses nothing but the pictures.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_KIND_COLORS = {
    "gaussian": "tab:blue",
    "uniform": "tab:orange",
    "leverage": "tab:green",
    "leveraged_volume": "tab:red",
    "cpqr": "tab:purple",
}


def _color(kind: str) -> str:
    return _KIND_COLORS.get(kind, "tab:gray")


def render_bound_figure(rows, eps: float, path) -> None:
    """Selection gap vs nu, one marker per grid cell, with the bound curve."""
    kinds = sorted({r[0] for r in rows})
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for kind in kinds:
        nus = [r[3] for r in rows if r[0] == kind]
        gaps = [r[6] for r in rows if r[0] == kind]
        ax.scatter(nus, gaps, s=14, alpha=0.75, label=kind, color=_color(kind))
    lo = min(min((r[3] for r in rows), default=0.0), 0.0)
    grid = [lo + (1.0 - lo) * k / 400 for k in range(401)]
    ax.plot(grid, [2.0 * math.sqrt(6.0 * (1.0 - v) * eps) for v in grid],
            "k--", lw=1, label=f"bound, eps={eps:g}")
    ax.set_xlabel("nu")
    ax.set_ylabel("selection gap")
    ax.legend(frameon=False)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_corr_figure(scatter_rows, summary_rows, path) -> None:
    """Squared-coefficient scatter, one panel per (kind, cell)."""
    panels = []
    for kind, kappa, phi, corr in summary_rows:
        pts = [(r[4], r[5]) for r in scatter_rows
               if r[0] == kind and r[1] == kappa and r[2] == phi]
        panels.append((kind, kappa, phi, corr, pts))
    ncols = max(1, len({(p[1], p[2]) for p in panels}))
    nrows = max(1, math.ceil(len(panels) / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.0 * ncols, 2.9 * nrows),
                             squeeze=False)
    for ax in axes.ravel():
        ax.set_axis_off()
    for k, (kind, kappa, phi, corr, pts) in enumerate(panels):
        ax = axes[k // ncols][k % ncols]
        ax.set_axis_on()
        if pts:
            ax.scatter(*zip(*pts), s=10, alpha=0.7, color=_color(kind))
        ax.set_title(f"{kind}, k={kappa:g}, phi={phi:g}\ncorr={corr:.2f}", fontsize=9)
        ax.tick_params(labelsize=7)
        ax.grid(alpha=0.25)
    fig.supxlabel("squared coefficient, low fidelity", fontsize=9)
    fig.supylabel("squared coefficient, high fidelity", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_boost_figure(trial_rows, summary_rows, path) -> None:
    """Box plots of relative error: boosted vs single sketch per (kind, m)."""
    combos = sorted({(r[0], r[1]) for r in trial_rows}, key=lambda c: (c[0], c[1]))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(combos)), 4.2))
    data, labels, colors = [], [], []
    for kind, m in combos:
        bfb = [r[3] for r in trial_rows if r[0] == kind and r[1] == m]
        single = [r[4] for r in trial_rows if r[0] == kind and r[1] == m]
        data.extend([bfb, single])
        labels.extend([f"{kind}\nm={m}\nboost", f"{kind}\nm={m}\nsingle"])
        colors.extend([_color(kind), "lightgray"])
    bp = ax.boxplot(data, tick_labels=labels, patch_artist=True, showfliers=False)
    for patch, color in zip(bp["boxes"], colors):
        patch.set_facecolor(color)
        patch.set_alpha(0.6)
    refs = {(r[0], r[1]): (r[8], r[9]) for r in summary_rows}
    if refs:
        full = next(iter(refs.values()))[0]
        ax.axhline(full, color="k", lw=1, ls=":", label="full solve")
        ax.legend(frameon=False, fontsize=8)
    ax.set_ylabel("relative error")
    ax.tick_params(axis="x", labelsize=7)
    ax.grid(alpha=0.25, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_wick_figure(checks, path) -> None:
    """Relative error vs sample count on log axes, with a 1/sqrt(n) guide."""
    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    ns = [c.samples for c in checks]
    errs = [max(c.rel_err, 1e-17) for c in checks]
    ax.loglog(ns, errs, "o-", color="tab:blue", label="observed")
    guide = [errs[0] * math.sqrt(ns[0] / n) for n in ns]
    ax.loglog(ns, guide, "k--", lw=1, label="1/sqrt(n)")
    ax.set_xlabel("samples")
    ax.set_ylabel("relative error")
    ax.legend(frameon=False)
    ax.grid(alpha=0.25, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
