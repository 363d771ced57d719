"""Figures written to files: convergence plots and solution surfaces."""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from .mesh import Side  # noqa: E402


def plot_convergence(rows, path, title=None):
    """Log-log plot of combined L2 error against h, one line per scheme.

    ``rows`` are dicts with at least ``scheme``, ``h`` and ``l2_error``.
    Diverged entries (infinite error) are left out of the lines.
    """
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    labels = []
    for row in rows:
        if row["scheme"] not in labels:
            labels.append(row["scheme"])
    hs = set()
    anchor = None
    for label in labels:
        pts = [(r["h"], r["l2_error"]) for r in rows
               if r["scheme"] == label and math.isfinite(r["l2_error"])]
        if not pts:
            continue
        h, e = np.array(sorted(pts)).T
        hs.update(h)
        ax.loglog(h, e, "o-", label=label)
        if anchor is None or e[-1] < anchor[1]:
            anchor = (h[-1], e[-1])
    if anchor is not None:
        # second-order reference slope through the coarsest point of the lowest line
        h = np.array(sorted(hs))
        ax.loglog(h, anchor[1] * (h / anchor[0]) ** 2, "k--", lw=0.8, label="h^2")
        ax.set_xticks(h)
        ax.set_xticks([], minor=True)
        ax.set_xticklabels([f"1/{round(1 / v)}" for v in h])
    ax.set_xlabel("h")
    ax.set_ylabel("L2 error at final time")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_solution(run, path, title=None):
    """Surface plot of the final nodal field on both subdomains."""
    fig = plt.figure(figsize=(7, 4.2))
    ax = fig.add_subplot(projection="3d")
    for side in Side:
        mesh = run.mesh(side)
        tri = mtri.Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)
        ax.plot_trisurf(tri, run.state.u[side], cmap="viridis", linewidth=0.1,
                        edgecolor="k", antialiased=True)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("u")
    ax.set_title(title or f"{run.config.kind}, n={run.config.n}, t={run.t_final:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
