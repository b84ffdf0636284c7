"""Figure rendering for sweep reports.

Renders the standard diagnostic figures (scaling of time/memory with
problem size, residual versus the swept parameter) from sweep rows to
image files next to the CSV output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["render_sweep_figures"]


def _fit_exponent(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0)
    if mask.sum() < 2:
        return float("nan")
    p, _ = np.polyfit(np.log(x[mask]), np.log(y[mask]), 1)
    return float(p)


def render_sweep_figures(rows, axis: str, out_stem: str) -> list:
    """Render figures for a sweep and return the written paths.

    ``rows`` are dicts with the sweep CSV fields; ``axis`` is the swept
    parameter; ``out_stem`` is the path prefix for the image files.
    """
    paths = []
    if axis == "n":
        N = [r["N"] for r in rows]
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
        for ax, key, label in [
            (axes[0], "reduce_ms", "solve time [ms]"),
            (axes[1], "storage_bytes", "memory [bytes]"),
        ]:
            y = [r[key] + r.get("backsub_ms", 0.0) if key == "reduce_ms" else r[key]
                 for r in rows]
            p = _fit_exponent(N, y)
            ax.loglog(N, y, "o-", label=f"measured (p={p:.2f})")
            ax.set_xlabel("N")
            ax.set_ylabel(label)
            ax.grid(True, which="both", alpha=0.3)
            ax.legend()
        fig.tight_layout()
        path = f"{out_stem}_scaling.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)

    x = [r["param"] for r in rows]
    res = [r["residual"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    if min(x) > 0 and max(x) / max(min(x), 1e-300) > 50:
        ax.loglog(x, res, "o-")
    else:
        ax.semilogy(x, res, "o-")
    ax.set_xlabel(axis)
    ax.set_ylabel("relative residual")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = f"{out_stem}_residual.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    ranks = [r["max_rank"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.plot(x, ranks, "s-")
    if min(x) > 0 and max(x) / max(min(x), 1e-300) > 50:
        ax.set_xscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel("max off-diagonal rank")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = f"{out_stem}_ranks.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths
