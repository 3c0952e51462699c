"""Matplotlib renderers for the CLI report path. Figures are written to
files; nothing is shown interactively."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .distribution import DistributionGrid  # noqa: E402
from .expected_norm import ExpectedNormTable, full_circle_points  # noqa: E402


def plot_distribution_surface(grid: DistributionGrid, path, state: int = 0) -> None:
    """Surface of F_state(t, x) over the unit square."""
    T, X = np.meshgrid(grid.t_axis, grid.x_axis, indexing="ij")
    fig = plt.figure(figsize=(7, 5))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(T, X, grid.state_row(state), cmap="viridis",
                    rcount=100, ccount=100, linewidth=0)
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_zlabel(f"F_{state}(t, x)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_unit_circle(table: ExpectedNormTable, path) -> None:
    """Expected-norm unit circle with the max-norm and 1-norm balls."""
    pts = full_circle_points(table)
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.plot([1, -1, -1, 1, 1], [1, 1, -1, -1, 1], ":", color="0.6",
            label="max-norm ball")
    ax.plot([1, 0, -1, 0, 1], [0, 1, 0, -1, 0], ":", color="0.6",
            label="1-norm ball")
    ax.plot(pts[:, 0], pts[:, 1], "-", color="#1f4e9c", label="expected norm")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_unit_sphere(table: ExpectedNormTable, path) -> None:
    """Octant mesh of the expected-norm unit sphere, mirrored to the full
    sphere for display."""
    pts = table.points
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d")
    for sx in (1, -1):
        for sy in (1, -1):
            for sz in (1, -1):
                mirrored = pts * np.array([sx, sy, sz])
                ax.plot_trisurf(mirrored[:, 0], mirrored[:, 1], mirrored[:, 2],
                                triangles=table.faces, cmap="viridis",
                                linewidth=0, antialiased=False, alpha=0.9)
    ax.set_box_aspect((1, 1, 1))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
