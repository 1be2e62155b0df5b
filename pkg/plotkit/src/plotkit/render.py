"""Figure builders: every public function takes snapshot directories plus an
output path and writes one file.  All rendering is pure matplotlib/Agg —
deterministic for identical inputs and style options."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib import animation  # noqa: E402

from .colormap import angle_cmap, angle_to_rgb  # noqa: E402
from .snapshots import MacroSnapshot, MicroSnapshot, SnapshotError, load_dir  # noqa: E402

DENSITY_CMAP = "viridis"


def _draw_panel(ax, snap, point_size: float = 2.0) -> None:
    """Orientation-colored view of one snapshot (particles or field)."""
    if isinstance(snap, MicroSnapshot):
        ax.scatter(snap.x[:, 0], snap.x[:, 1], s=point_size,
                   c=angle_to_rgb(snap.theta), linewidths=0.0)
    else:
        angle = np.arctan2(snap.Omega[:, :, 1], snap.Omega[:, :, 0])
        # transpose: row index of the array is x, imshow rows are y
        ax.imshow(angle_to_rgb(angle).transpose(1, 0, 2), origin="lower",
                  extent=(0.0, snap.L, 0.0, snap.L), interpolation="nearest")
    ax.set_xlim(0.0, snap.L)
    ax.set_ylim(0.0, snap.L)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])


def _angle_colorbar(fig, axes) -> None:
    sm = plt.cm.ScalarMappable(cmap=angle_cmap(),
                               norm=plt.Normalize(-math.pi, math.pi))
    cbar = fig.colorbar(sm, ax=axes, fraction=0.03, pad=0.02)
    cbar.set_ticks([-math.pi, 0.0, math.pi])
    cbar.set_ticklabels([r"$-\pi$", "0", r"$\pi$"])
    cbar.set_label("orientation")


def render_mosaic(dirs, out, *, labels=None, dpi=120) -> Path:
    """One panel per run directory (its final snapshot), in a near-square
    grid; panels are labeled with ``labels`` or the directory names."""
    if labels is not None and len(labels) != len(dirs):
        raise SnapshotError("need exactly one label per input directory")
    snaps = [load_dir(d)[-1] for d in dirs]
    names = labels if labels is not None else [Path(d).name for d in dirs]

    k = len(snaps)
    nrows = max(1, int(math.floor(math.sqrt(k))))
    ncols = math.ceil(k / nrows)
    fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                             figsize=(3.0 * ncols, 3.0 * nrows))
    for idx, (snap, name) in enumerate(zip(snaps, names)):
        ax = axes[idx // ncols][idx % ncols]
        _draw_panel(ax, snap)
        ax.set_title(str(name), fontsize=9)
    for idx in range(k, nrows * ncols):
        axes[idx // ncols][idx % ncols].set_axis_off()
    _angle_colorbar(fig, [a for row in axes for a in row])
    fig.savefig(out, dpi=dpi)
    plt.close(fig)
    return Path(out)


def render_sequence(dirs, out, *, max_frames: int = 5, dpi=120) -> Path:
    """A row of time-ordered snapshots from one run directory."""
    if len(dirs) != 1:
        raise SnapshotError("sequence takes exactly one input directory")
    snaps = load_dir(dirs[0])
    if len(snaps) > max_frames:
        idx = np.linspace(0, len(snaps) - 1, max_frames).round().astype(int)
        snaps = [snaps[i] for i in idx]
    fig, axes = plt.subplots(1, len(snaps), squeeze=False,
                             figsize=(3.0 * len(snaps), 3.4))
    for ax, snap in zip(axes[0], snaps):
        _draw_panel(ax, snap)
        ax.set_title(f"t = {snap.t:g}", fontsize=9)
    _angle_colorbar(fig, list(axes[0]))
    fig.savefig(out, dpi=dpi)
    plt.close(fig)
    return Path(out)


def render_heatmap_quiver(dirs, out, *, dpi=120) -> Path:
    """Density heatmap of the final field snapshot with the unit direction
    field overlaid as arrows."""
    if len(dirs) != 1:
        raise SnapshotError("heatmap_quiver takes exactly one input directory")
    snap = load_dir(dirs[0])[-1]
    if not isinstance(snap, MacroSnapshot):
        raise SnapshotError("heatmap_quiver needs field (macro) snapshots")
    nx, ny = snap.rho.shape
    xc = (np.arange(nx) + 0.5) * snap.L / nx
    yc = (np.arange(ny) + 0.5) * snap.L / ny

    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    mesh = ax.pcolormesh(xc, yc, snap.rho.T, cmap=DENSITY_CMAP,
                         shading="nearest")
    fig.colorbar(mesh, ax=ax, label="density")
    step = max(1, nx // 24, ny // 24)
    ax.quiver(xc[::step], yc[::step],
              snap.Omega[::step, ::step, 0].T, snap.Omega[::step, ::step, 1].T,
              color="white", scale=30.0, width=0.003)
    ax.set_xlim(0.0, snap.L)
    ax.set_ylim(0.0, snap.L)
    ax.set_aspect("equal")
    ax.set_title(f"t = {snap.t:g}")
    fig.savefig(out, dpi=dpi)
    plt.close(fig)
    return Path(out)


def _order_series(snaps):
    """(t, polar order, mean frequency) from a list of snapshots."""
    t = np.array([s.t for s in snaps])
    polar = np.empty(len(snaps))
    mean_omega = np.empty(len(snaps))
    for i, s in enumerate(snaps):
        if isinstance(s, MicroSnapshot):
            z = np.exp(1j * s.theta).mean()
            polar[i] = abs(z)
            mean_omega[i] = s.omega.mean()
        else:
            mass = s.rho.sum()
            mx = (s.rho * s.Omega[:, :, 0]).sum()
            my = (s.rho * s.Omega[:, :, 1]).sum()
            polar[i] = math.hypot(mx, my) / mass
            mean_omega[i] = (s.rho * s.omega_bar).sum() / mass
    return t, polar, mean_omega


def render_order_timeseries(dirs, out, *, labels=None, dpi=120) -> Path:
    """Polar order and mean frequency against time, one curve per run."""
    if labels is not None and len(labels) != len(dirs):
        raise SnapshotError("need exactly one label per input directory")
    names = labels if labels is not None else [Path(d).name for d in dirs]
    fig, (ax_p, ax_w) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
    for d, name in zip(dirs, names):
        t, polar, mean_omega = _order_series(load_dir(d))
        ax_p.plot(t, polar, label=str(name))
        ax_w.plot(t, mean_omega, label=str(name))
    ax_p.set_ylabel("polar order")
    ax_p.set_ylim(0.0, 1.05)
    ax_w.set_ylabel("mean frequency")
    ax_w.set_xlabel("t")
    if len(dirs) > 1:
        ax_p.legend(fontsize=8)
    fig.savefig(out, dpi=dpi)
    plt.close(fig)
    return Path(out)


def render_animation(dirs, out, *, fps: int = 5, dpi=80) -> Path:
    """Animated GIF of one run, one frame per snapshot."""
    if len(dirs) != 1:
        raise SnapshotError("animation takes exactly one input directory")
    snaps = load_dir(dirs[0])
    fig, ax = plt.subplots(figsize=(4.0, 4.0))

    def frame(i):
        ax.clear()
        _draw_panel(ax, snaps[i])
        ax.set_title(f"t = {snaps[i].t:g}", fontsize=9)
        return []

    anim = animation.FuncAnimation(fig, frame, frames=len(snaps), blit=False)
    anim.save(str(out), writer=animation.PillowWriter(fps=fps), dpi=dpi)
    plt.close(fig)
    return Path(out)


RENDERERS = {
    "mosaic": render_mosaic,
    "sequence": render_sequence,
    "heatmap_quiver": render_heatmap_quiver,
    "order_timeseries": render_order_timeseries,
    "animation": render_animation,
}
