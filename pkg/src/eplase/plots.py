"""Quick-look figures rendered next to the delimited output files."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finite(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.isfinite(x) & np.isfinite(y)
    return x[m], y[m]


def _log_worthy(vals) -> bool:
    v = np.asarray([x for x in vals if isinstance(x, (int, float)) and math.isfinite(x)])
    v = v[v > 0]
    return v.size > 3 and v.max() / max(v.min(), 1e-300) > 1e3


def line_plot(path, x, series: dict, xlabel: str, logx: bool = False):
    """One panel, one line per named series; log axes chosen from the data span."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    logy = all(_log_worthy(y) for y in series.values()) and len(series) > 0
    for label, y in series.items():
        xs, ys = _finite(x, y)
        if logy:
            keep = ys > 0
            xs, ys = xs[keep], ys[keep]
        ax.plot(xs, ys, marker=".", ms=3, lw=1, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    if len(series) == 1:
        ax.set_ylabel(next(iter(series)))
    else:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def eigenvalue_plot(path, g, re_plus, im_plus, re_minus, im_minus):
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.0, 5.0))
    ax1.plot(g, re_plus, lw=1.2, label="Re +")
    ax1.plot(g, re_minus, lw=1.2, label="Re -")
    ax2.plot(g, im_plus, lw=1.2, label="Im +")
    ax2.plot(g, im_minus, lw=1.2, label="Im -")
    ax1.set_ylabel("Re eigenvalue (Hz)")
    ax2.set_ylabel("Im eigenvalue (Hz)")
    ax2.set_xlabel("tunneling G (Hz)")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def map_plot(path, x, y, z, xlabel: str, ylabel: str, zlabel: str,
             logx: bool = False, logy: bool = False):
    """Pseudocolor panel from long-format (x, y, z) columns on a full grid."""
    xu = np.unique(np.asarray(x, dtype=float))
    yu = np.unique(np.asarray(y, dtype=float))
    zz = np.full((yu.size, xu.size), np.nan)
    xi = {v: i for i, v in enumerate(xu)}
    yi = {v: i for i, v in enumerate(yu)}
    for xv, yv, zv in zip(x, y, z):
        if isinstance(zv, (int, float)) and math.isfinite(zv):
            zz[yi[float(yv)], xi[float(xv)]] = zv
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    norm = None
    finite = zz[np.isfinite(zz)]
    if finite.size and (finite > 0).all() and finite.max() / finite.min() > 1e2:
        from matplotlib.colors import LogNorm
        norm = LogNorm(vmin=finite.min(), vmax=finite.max())
    pcm = ax.pcolormesh(xu, yu, zz, shading="nearest", norm=norm)
    fig.colorbar(pcm, ax=ax, label=zlabel)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
