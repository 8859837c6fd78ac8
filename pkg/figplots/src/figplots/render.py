"""Figure rendering for simulator outputs.

Rendering is a pure function of the input files: fixed style, fixed dpi, no
timestamps or hostnames in the image, so repeated invocations are
byte-identical.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .plotspec import PlotSpec
from .readers import read_csv, read_pgm, read_sidecar, require_columns

EP1_COLOR = "#de8f05"  # orange
EP2_COLOR = "#0173b2"  # blue
MARKERS = ("^", "o", "s", "d", "v", "*")

RC = {
    "figure.dpi": 160,
    "savefig.dpi": 160,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}


def render(spec: PlotSpec) -> Path:
    """Render the spec to its output image; returns the written path."""
    spec.validate_inputs()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(RC):
        if spec.kind == "fringes":
            fig = _fringes(spec)
        elif spec.kind == "frame_gallery":
            fig = _frame_gallery(spec)
        elif spec.kind == "morph_heatmap":
            fig = _morph_heatmap(spec)
        else:
            fig = _ring_profile(spec)
        try:
            fig.savefig(out, metadata={"Software": None})
        finally:
            plt.close(fig)
    return out


def _port_probabilities(cols) -> tuple[np.ndarray, np.ndarray]:
    s1, s2 = cols["singles_ep1"], cols["singles_ep2"]
    total = s1 + s2
    p1 = np.divide(s1, total, out=np.full_like(s1, np.nan, dtype=float), where=total > 0)
    return p1, 1.0 - p1


def _fringes(spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for i, path in enumerate(spec.inputs):
        cols = read_csv(path)
        require_columns(cols, ["theta", "singles_ep1", "singles_ep2"], path)
        order = np.argsort(cols["theta"])
        theta = cols["theta"][order]
        p1, p2 = _port_probabilities({k: v[order] for k, v in cols.items()})
        marker = MARKERS[i % len(MARKERS)]
        stem = Path(path).stem
        ax.plot(theta, p1, marker=marker, color=EP1_COLOR, lw=1.0, ms=4,
                label=f"{stem} EP1")
        ax.plot(theta, p2, marker=marker, color=EP2_COLOR, lw=1.0, ms=4,
                mfc="none", label=f"{stem} EP2")
    ax.set_xlabel(spec.x_label or "theta (rad)")
    ax.set_ylabel(spec.y_label or "detection probability")
    ax.set_ylim(-0.05, 1.05)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return fig


def _frame_gallery(spec: PlotSpec):
    n = len(spec.inputs)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4))
    if n == 1:
        axes = [axes]
    for ax, path in zip(axes, spec.inputs):
        frame = read_pgm(path)
        ax.imshow(frame, cmap="gray", interpolation="nearest")
        meta = read_sidecar(path)
        label = Path(path).stem
        if "theta_rad" in meta:
            label = f"theta = {float(meta['theta_rad']):.3f} rad"
        ax.set_title(label, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        ax.grid(False)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig


def _morph_heatmap(spec: PlotSpec):
    cols = read_csv(spec.inputs[0])
    require_columns(cols, ["theta", "phi", "prob"], spec.inputs[0])
    thetas = np.unique(cols["theta"])
    phis = np.unique(cols["phi"])
    grid = np.full((phis.size, thetas.size), np.nan)
    ti = np.searchsorted(thetas, cols["theta"])
    pi = np.searchsorted(phis, cols["phi"])
    grid[pi, ti] = cols["prob"]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    # fixed probability scale so maps from different runs are comparable
    mesh = ax.pcolormesh(thetas, phis, grid, cmap="viridis", vmin=0.0, vmax=1.0)
    fig.colorbar(mesh, ax=ax, label="detection probability")
    ax.set_xlabel(spec.x_label or "theta (rad)")
    ax.set_ylabel(spec.y_label or "phi (rad)")
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def _ring_profile(spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i, path in enumerate(spec.inputs):
        cols = read_csv(path)
        require_columns(cols, ["phi", "intensity"], path)
        order = np.argsort(cols["phi"])
        ax.plot(
            cols["phi"][order],
            cols["intensity"][order],
            marker=MARKERS[i % len(MARKERS)],
            ms=4,
            lw=1.0,
            label=Path(path).stem,
        )
    ax.set_xlabel(spec.x_label or "phi (rad)")
    ax.set_ylabel(spec.y_label or "mean intensity")
    if spec.title:
        ax.set_title(spec.title)
    if len(spec.inputs) > 1:
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig
