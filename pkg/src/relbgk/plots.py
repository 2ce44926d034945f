"""Report figures rendered next to the delimited outputs.

Kept separate from diagnostics (which stays plot-free); the CLI report path
calls these after writing the corresponding CSV files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_run_report(records, csv_path) -> list:
    """Entropy and conservation-defect series as PNGs alongside the CSV."""
    stem = str(csv_path).rsplit(".", 1)[0]
    t = [r.t for r in records]
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, [r.entropy for r in records], lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\int\!\!\int f\,\log f\;dq\,dx$")
    ax.set_title("entropy")
    fig.tight_layout()
    path = stem + "_entropy.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, [abs(r.mass_defect) for r in records], lw=1.2, label="mass")
    ax.plot(t, [abs(r.energy_defect) for r in records], lw=1.2,
            label="energy")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("relative defect")
    ax.set_title("conservation defects")
    ax.legend()
    fig.tight_layout()
    path = stem + "_conservation.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)
    return paths


def render_sweep_report(rows, csv_path) -> list:
    """Convergence columns of the beta_sup sweep on a log scale."""
    stem = str(csv_path).rsplit(".", 1)[0]
    bs = [row["beta_sup"] for row in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for key, label in (("cauchy_l1", "L1 Cauchy difference"),
                       ("jtilde_vs_j", "truncated vs exact projection"),
                       ("entropy_bound_cb", "entropy budget C_b")):
        ys = [row[key] for row in rows]
        pts = [(b, y) for b, y in zip(bs, ys) if y == y]  # drop NaN tail
        ax.plot([p[0] for p in pts], [max(p[1], 1e-300) for p in pts],
                marker="o", lw=1.2, label=label)
    ax.set_yscale("log")
    ax.set_xlabel(r"$\beta_{\sup}$")
    ax.set_title("truncation convergence")
    ax.legend()
    fig.tight_layout()
    path = stem + "_convergence.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]
