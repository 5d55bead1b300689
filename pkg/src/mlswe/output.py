"""Field snapshots, run summaries and the optional figure report."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .physics import State, layer_heights, velocity
from .scenarios import Case


def snapshot_columns(n_layers: int) -> list[str]:
    cols = ["cell_id", "x", "y", "zb"] + [f"h_{i + 1}" for i in range(n_layers)]
    for i in range(n_layers):
        cols += [f"u_{i + 1}", f"v_{i + 1}"]
    return cols


def write_snapshot(path, case: Case, state: State) -> None:
    """Plain-text table, one row per cell in mesh order, header line first."""
    L = case.stack.n_layers
    h = layer_heights(case.stack, state.H)
    u = velocity(state.H, state.q).reshape(state.H.shape[0], 2 * L)
    ids = np.arange(case.mesh.n_cells)
    with open(path, "w") as fh:
        fh.write(" ".join(snapshot_columns(L)) + "\n")
        for k in ids:
            values = [case.mesh.centroid[k, 0], case.mesh.centroid[k, 1], state.zb[k], *h[k], *u[k]]
            fh.write(f"{k} " + " ".join(repr(float(v)) for v in values) + "\n")


def read_snapshot(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().split()
    return header, np.loadtxt(path, skiprows=1, ndmin=2)


def write_summary(path, items: dict) -> None:
    Path(path).write_text("".join(f"{k} = {v}\n" for k, v in items.items()))


def write_figures(out_dir, case: Case, state: State, record) -> list[Path]:
    """Energy history and final top-layer thickness map as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    paths = []
    t, e = record.column("time"), record.energy
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(t, e / e[0] if e[0] else e, marker=".")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("E / E(0)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    paths.append(out / "energy.png")
    fig.savefig(paths[-1], dpi=120)
    plt.close(fig)

    if case.mesh.shape is not None:
        nx, ny = case.mesh.shape
        h = layer_heights(case.stack, state.H)[:, 0].reshape(ny, nx)
        fig, ax = plt.subplots(figsize=(5, 4))
        x0, y0 = case.mesh.centroid.min(axis=0)
        x1, y1 = case.mesh.centroid.max(axis=0)
        im = ax.imshow(h, origin="lower", extent=(x0, x1, y0, y1), aspect="auto")
        fig.colorbar(im, ax=ax, label="h_1")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        fig.tight_layout()
        paths.append(out / "thickness_top.png")
        fig.savefig(paths[-1], dpi=120)
        plt.close(fig)
    return paths
