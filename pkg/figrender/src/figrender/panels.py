"""Figure builders: 3x3 power grids, deviation-correlation grids, and example
trajectories.

Conventions throughout: the valid smoothing is a solid coloured line, the two
wrong smoothings dashed black and dashed grey; vertical dashed markers bound
the steady-state window.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "figrender"   # deterministic SVG ids
import matplotlib.pyplot as plt

from .io import (
    PANEL_LABELS,
    PANEL_PAIRS,
    SchemaError,
    load_examples,
    load_powers,
    load_window,
    wrong_setups,
)

VALID_COLORS = {
    ("X", "X"): "tab:green",
    ("Y", "Y"): "tab:blue",
    ("N", "N"): "tab:red",
    ("X", "Y"): "tab:purple",
    ("Y", "X"): "tab:cyan",
    ("X", "N"): "tab:olive",
    ("N", "X"): "tab:orange",
    ("Y", "N"): "magenta",
    ("N", "Y"): "deeppink",
}
WRONG_STYLES = (("black", "--"), ("grey", "--"))

SQRT_HALF = np.sqrt(0.5)


def _window_markers(ax, window):
    for edge in window:
        ax.axvline(edge, color="grey", linestyle="--", linewidth=0.8, alpha=0.8)


def _blank(ax, combo, reason):
    ax.text(
        0.5, 0.5, f"{combo}\n{reason}", ha="center", va="center",
        transform=ax.transAxes, fontsize=8, color="grey",
    )
    ax.set_xticks([])
    ax.set_yticks([])


def power_grid(indir, column: str, out_path, window=None):
    """3x3 grid of smoothing-power curves, one panel per observed/valid pair."""
    if window is None:
        window = load_window(indir)
    fig, axes = plt.subplots(3, 3, figsize=(12, 9), sharex=True)
    ylabel = {"R_S": "TrSD power", "R_F": "fidelity power"}[column]
    for k, (so, sv) in enumerate(PANEL_PAIRS):
        ax = axes.flat[k]
        valid_combo = f"d{so}d{sv}d{sv}"
        try:
            valid = load_powers(indir, valid_combo)
        except SchemaError as err:
            if "missing input file" in str(err):
                _blank(ax, f"d{so}d{sv}", "no data")
                continue
            raise
        color = VALID_COLORS[(so, sv)]
        ax.plot(
            valid["t"], valid[column], color=color, linewidth=1.4,
            label=f"{valid_combo} (valid)",
        )
        for (wcolor, wstyle), sw in zip(WRONG_STYLES, wrong_setups(sv)):
            combo = f"d{so}d{sv}d{sw}"
            try:
                wrong = load_powers(indir, combo)
            except SchemaError as err:
                if "missing input file" in str(err):
                    continue
                raise
            ax.plot(
                wrong["t"], wrong[column], color=wcolor, linestyle=wstyle,
                linewidth=1.1, label=combo,
            )
        ax.axhline(0.0, color="grey", linewidth=0.6, alpha=0.6)
        _window_markers(ax, window)
        ax.set_title(f"({PANEL_LABELS[k]}) dOdV = d{so}d{sv}", fontsize=10)
        ax.legend(fontsize=7, frameon=False)
        if k % 3 == 0:
            ax.set_ylabel(ylabel)
        if k >= 6:
            ax.set_xlabel("t (decay times)")
    fig.suptitle(
        f"Smoothing power {column} under valid (solid) and wrong (dashed) "
        "assumed setups",
        fontsize=12,
    )
    fig.tight_layout()
    _save(fig, out_path)


def alpha_grid(indir, out_path, window=None):
    """3x3 grid of the deviation correlation for the two wrong setups."""
    if window is None:
        window = load_window(indir)
    fig, axes = plt.subplots(3, 3, figsize=(12, 9), sharex=True, sharey=True)
    for k, (so, sv) in enumerate(PANEL_PAIRS):
        ax = axes.flat[k]
        drew = False
        for (wcolor, wstyle), sw in zip(WRONG_STYLES, wrong_setups(sv)):
            combo = f"d{so}d{sv}d{sw}"
            try:
                data = load_powers(indir, combo)
            except SchemaError as err:
                if "missing input file" in str(err):
                    continue
                raise
            mask = (data["t"] >= window[0]) & (data["t"] <= window[1])
            ax.plot(
                data["t"], data["alpha"], color=wcolor, linestyle=wstyle,
                linewidth=1.0, label=combo,
            )
            if mask.any():
                avg = np.nanmean(data["alpha"][mask])
                ax.axhline(avg, color=wcolor, linestyle="-.", linewidth=0.8, alpha=0.7)
            drew = True
        if not drew:
            _blank(ax, f"d{so}d{sv}", "no data")
            continue
        # reference levels bounding the typical range of the correlation
        ax.axhline(SQRT_HALF, color="red", linewidth=0.9)
        ax.axhline(1.0, color="red", linewidth=0.9)
        _window_markers(ax, window)
        ax.set_ylim(-0.1, 1.15)
        ax.set_title(f"({PANEL_LABELS[k]}) dOdV = d{so}d{sv}", fontsize=10)
        ax.legend(fontsize=7, frameon=False)
        if k % 3 == 0:
            ax.set_ylabel("deviation correlation")
        if k >= 6:
            ax.set_xlabel("t (decay times)")
    fig.suptitle(
        "Correlation between valid and wrong smoothed-state deviations "
        "(reference lines at sqrt(1/2) and 1)",
        fontsize=12,
    )
    fig.tight_layout()
    _save(fig, out_path)


def trajectory_example(indir, out_path, combos=None, window=None):
    """Bloch components and estimation metrics for example trajectories.

    One row per combo: x, y, z panels with the true state in light grey, the
    filtered state solid blue, valid smoothing dashed red, wrong smoothing
    dashed black; the last column shows -TrSD (solid) and fidelity (dotted)
    to the true state for the three estimates.
    """
    if window is None:
        window = load_window(indir)
    if combos is None:
        from .io import available_example_combos

        combos = available_example_combos(indir)[:2]
    if not combos:
        raise SchemaError(f"no examples_*.csv files in {indir}")
    fig, axes = plt.subplots(
        len(combos), 4, figsize=(14, 3.2 * len(combos)), squeeze=False
    )
    series_style = (
        ("T", "0.75", "-", 1.6, "true"),
        ("F", "tab:blue", "-", 1.0, "filtered"),
        ("SV", "tab:red", "--", 1.0, "valid smoothed"),
        ("SW", "black", "--", 1.0, "wrong smoothed"),
    )
    for r, combo in enumerate(combos):
        data = load_examples(indir, combo)
        t = data["t"]
        for c, comp in enumerate("xyz"):
            ax = axes[r][c]
            for key, color, style, width, label in series_style:
                ax.plot(
                    t, data[f"{comp}_{key}"], color=color, linestyle=style,
                    linewidth=width, label=label if (r, c) == (0, 0) else None,
                )
            _window_markers(ax, window)
            ax.set_ylim(-1.05, 1.05)
            ax.set_ylabel(f"{comp}  [{combo}]" if c == 0 else comp)
            if r == len(combos) - 1:
                ax.set_xlabel("t (decay times)")
        ax = axes[r][3]
        for key, color, _, _, _ in series_style[1:]:
            ax.plot(t, data[f"ntrsd_{key}"], color=color, linestyle="-", linewidth=1.0)
            ax.plot(t, data[f"fid_{key}"], color=color, linestyle=":", linewidth=1.0)
        _window_markers(ax, window)
        ax.set_ylabel("-TrSD (solid), fidelity (dotted)")
        if r == len(combos) - 1:
            ax.set_xlabel("t (decay times)")
    axes[0][0].legend(fontsize=7, frameon=False)
    fig.tight_layout()
    _save(fig, out_path)


def _save(fig, out_path):
    out_path = str(out_path)
    metadata = {"Date": None} if out_path.endswith(".svg") else None
    fig.savefig(out_path, dpi=150, metadata=metadata)
    plt.close(fig)
