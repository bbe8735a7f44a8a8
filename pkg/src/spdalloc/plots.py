"""Figure rendering for benchmark suites (headless, PNG files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["render_bench_plot"]


def render_bench_plot(rows: list[dict], suite: str, path: str) -> None:
    """Plot cost ratio against instance size, one line per algorithm."""
    series: dict[str, list[tuple[int, float]]] = {}
    for row in rows:
        ratio = row.get("ratio")
        if isinstance(ratio, (int, float)) and ratio != "":
            series.setdefault(row["algorithm"], []).append((row["n"], float(ratio)))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for alg in sorted(series):
        points = sorted(series[alg])
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, marker="o", label=alg)
    ax.set_xlabel("tasks n")
    ax.set_ylabel("cost ratio")
    ax.set_title(suite)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
