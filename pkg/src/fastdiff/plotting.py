"""Static figures written next to the CLI outputs.

Figures are built on the Agg canvas directly, so importing this module never
touches the global pyplot state or needs a display.
"""

from __future__ import annotations

import os

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .core import Profile


def _new(nrows=1, ncols=1, size=(6.0, 4.0)):
    fig = Figure(figsize=size, dpi=100)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig, path):
    path = os.fspath(path)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    # no software or date stamp, so reruns produce identical files
    fig.savefig(path, metadata={"Software": None})
    return path


def plot_profiles(path, profiles: dict, title=None, logy=True):
    """Densities against r, one curve per {label: Profile}."""
    fig, ax = _new()
    ax = ax[0, 0]
    for label, u in profiles.items():
        dens = u.density if isinstance(u, Profile) else np.asarray(u)
        r = u.grid.centers
        (ax.semilogy if logy else ax.plot)(r, np.where(dens > 0, dens, np.nan), label=label)
    ax.set_xlabel("r")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_series(path, cols: dict, names=("free_energy", "rel_entropy", "weighted_l2", "fisher")):
    """Diagnostics against t; positive-valued columns on a log axis."""
    names = [n for n in names if n in cols]
    fig, axes = _new(len(names), 1, size=(6.0, 2.2 * max(len(names), 1)))
    t = np.asarray(cols["t"])
    for ax, name in zip(axes[:, 0], names):
        y = np.asarray(cols[name])
        if np.all(y[1:] > 0):
            ax.semilogy(t, y)
        else:
            ax.plot(t, y)
        ax.set_ylabel(name)
    axes[-1, 0].set_xlabel("t")
    return _save(fig, path)


def plot_fit(path, t, y, fits: dict, label="y"):
    """Samples on a log axis with the fitted decay laws over their windows."""
    fig, ax = _new()
    ax = ax[0, 0]
    t, y = np.asarray(t), np.asarray(y)
    pos = y > 0
    ax.semilogy(t[pos], y[pos], ".", label=label)
    for kind, fit in fits.items():
        tt = np.linspace(fit.window[0], fit.window[1], 200)
        law = np.exp(-fit.rate * tt) if str(kind.value) == "exponential" else (1.0 + tt) ** (-fit.rate)
        ax.semilogy(tt, fit.prefactor * law, label=f"{kind.value}: rate {fit.rate:.4g}, r2 {fit.r_squared:.5f}")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, path)


def plot_eigenvector(path, grid, vector, title=None):
    fig, ax = _new()
    ax = ax[0, 0]
    ax.plot(grid.centers, vector)
    ax.set_xlabel("r")
    ax.set_ylabel("f")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_trials(path, values, reference, ylabel="value"):
    """Per-trial values with a horizontal reference line."""
    fig, ax = _new()
    ax = ax[0, 0]
    ax.plot(np.arange(len(values)), values, ".", label="trials")
    ax.axhline(reference, color="k", lw=0.8, label="reference")
    ax.set_xlabel("trial")
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)


def plot_pair(path, grid, f0, f1, title=None):
    fig, ax = _new()
    ax = ax[0, 0]
    ax.plot(grid.centers, f0, label="mode 0")
    ax.plot(grid.centers, f1, label="mode 1")
    ax.set_xlabel("r")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)
