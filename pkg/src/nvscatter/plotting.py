"""Static figures for run reports (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_field", "plot_scattering", "plot_small_k", "plot_comparison"]


def _extent(grid):
    a = grid.axis
    return [a[0], a[-1] + grid.h, a[0], a[-1] + grid.h]


def plot_field(f, path, title="", part="real"):
    vals = f.values.real if part == "real" else np.abs(f.values)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(vals.T, origin="lower", extent=_extent(f.grid), cmap="RdBu_r")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=110)
    plt.close(fig)


def plot_scattering(sd, path, title="|t(k)|"):
    t = np.where(sd.mask, np.nan, np.abs(sd.t))
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(t.T, origin="lower", extent=_extent(sd.kgrid.grid), cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("k1")
    ax.set_ylabel("k2")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=110)
    plt.close(fig)


def plot_small_k(sd, path):
    r = np.abs(sd.ray_k)
    if r.size == 0 or not np.any(sd.ray_t):
        return
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.5))
    a1.loglog(r, np.abs(sd.ray_t), "o-", ms=3)
    a1.set_xlabel("|k|")
    a1.set_ylabel("|t|")
    ok = sd.ray_t != 0
    a2.semilogx(r[ok], (1.0 / sd.ray_t[ok]).real, "o-", ms=3)
    a2.set_xlabel("|k|")
    a2.set_ylabel("Re 1/t")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=110)
    plt.close(fig)


def plot_comparison(a, b, path, labels=("reconstructed", "reference")):
    """Central x2 = 0 slice of two real fields on the same grid."""
    j = a.grid.n // 2
    x = a.grid.axis
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, a.values.real[:, j], label=labels[0])
    ax.plot(x, b.values.real[:, j], "--", label=labels[1])
    ax.set_xlabel("x1")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), dpi=110)
    plt.close(fig)
