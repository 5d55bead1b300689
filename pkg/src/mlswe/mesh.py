"""Finite-volume meshes: connectivity, geometry and the per-edge constants
used by the layered scheme.

Edges are stored once. ``normal[e]`` points out of ``left[e]``; ``right[e]``
is the neighbouring cell, or -1 on a physical boundary where ``tag[e]`` says
how the ghost state is built (mirror for slip walls, copy for outflow).
Periodic closures are plain interior edges whose ``offset`` (vector from the
left centroid to the right centroid) accounts for the wrap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

INTERIOR = 0
SLIP = 1
OUTFLOW = 2

_TAG_NAMES = {"slip": SLIP, "slip-wall": SLIP, "wall": SLIP, "outflow": OUTFLOW}
_SIDES = ("west", "east", "south", "north")


@dataclass(frozen=True, eq=False)
class Mesh:
    area: np.ndarray            # (nc,)
    perimeter: np.ndarray       # (nc,)
    centroid: np.ndarray        # (nc, 2)
    edge_length: np.ndarray     # (ne,)
    edge_mid: np.ndarray        # (ne, 2)
    normal: np.ndarray          # (ne, 2), outward from left
    left: np.ndarray            # (ne,)
    right: np.ndarray           # (ne,), -1 on boundary
    tag: np.ndarray             # (ne,)
    offset: np.ndarray          # (ne, 2), x_right - x_left (ghost mirror on boundary)
    shape: tuple[int, int] | None = None
    extent: tuple[float, float] | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if np.any(self.area <= 0) or np.any(self.edge_length <= 0):
            raise ValueError("cell areas and edge lengths must be positive")
        for name in ("area", "perimeter", "centroid", "edge_length", "edge_mid",
                     "normal", "left", "right", "tag", "offset"):
            getattr(self, name).setflags(write=False)

    @property
    def n_cells(self) -> int:
        return self.area.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_length.shape[0]

    @property
    def boundary(self) -> np.ndarray:
        return self.right < 0

    @property
    def right_or_left(self) -> np.ndarray:
        """Right cell index, falling back to the left cell on boundary edges."""
        return self._cached("right_or_left", lambda: np.where(self.right >= 0, self.right, self.left))

    def _cached(self, key, build):
        if key not in self._cache:
            value = build()
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            self._cache[key] = value
        return self._cache[key]

    # ---- per-edge geometric constants -------------------------------------

    @property
    def boundary_ratio(self) -> np.ndarray:
        """m_dK / m_K per cell."""
        return self._cached("boundary_ratio", lambda: self.perimeter / self.area)

    @property
    def side_ratios(self) -> tuple[np.ndarray, np.ndarray]:
        """(m_dK/m_K, m_dKe/m_Ke) per edge; the ghost copies the inner cell."""
        def build():
            r = self.boundary_ratio
            return (r[self.left], r[self.right_or_left])
        return self._cached("side_ratios", build)

    @property
    def inv_delta(self) -> np.ndarray:
        """1/Delta_e = (m_dK/m_K + m_dKe/m_Ke) / 2."""
        def build():
            a, b = self.side_ratios
            return 0.5 * (a + b)
        return self._cached("inv_delta", build)

    def edge_delta(self, edge: int | np.ndarray | None = None):
        delta = 1.0 / self.inv_delta
        return delta if edge is None else delta[edge]

    # ---- cell to edge incidence ------------------------------------------

    @property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """Padded (nc, d) tables of incident edges and orientation signs.

        Sign is +1 where the cell is the left cell, -1 where it is the right
        cell and 0 on padding. Padding points at edge index ``n_edges`` so
        callers append one zero row to their edge arrays.
        """
        return self._cached("incidence", self._build_incidence)

    def _build_incidence(self):
        nc, ne = self.n_cells, self.n_edges
        interior = np.nonzero(self.right >= 0)[0]
        cells = np.concatenate([self.left, self.right[interior]])
        edges = np.concatenate([np.arange(ne), interior])
        signs = np.concatenate([np.ones(ne), -np.ones(interior.size)])
        order = np.lexsort((edges, cells))
        cells, edges, signs = cells[order], edges[order], signs[order]
        counts = np.bincount(cells, minlength=nc)
        if np.any(counts == 0):
            raise ValueError("every cell needs at least one edge")
        width = counts.max()
        start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        slot = np.arange(cells.size) - start[cells]
        table = np.full((nc, width), ne, dtype=np.int64)
        sign = np.zeros((nc, width))
        table[cells, slot] = edges
        sign[cells, slot] = signs
        return table, sign

    def accumulate(self, edge_values: np.ndarray, signed: bool = True) -> np.ndarray:
        """Sum edge values onto cells (left gets +v, right gets -v when signed).

        Contributions are added in edge order, so results are reproducible
        bit for bit.
        """
        nc = self.n_cells
        inner = self._cached("inner_edges", lambda: np.nonzero(self.right >= 0)[0])
        right = self._cached("inner_right", lambda: self.right[inner])
        flat = np.ascontiguousarray(edge_values).reshape(self.n_edges, -1)
        inner_vals = flat[inner]
        out = np.empty((nc, flat.shape[1]))
        for c in range(flat.shape[1]):
            from_left = np.bincount(self.left, flat[:, c], nc)
            from_right = np.bincount(right, inner_vals[:, c], nc)
            out[:, c] = from_left - from_right if signed else from_left + from_right
        return out.reshape((nc,) + edge_values.shape[1:])

    @property
    def neighbours(self) -> np.ndarray:
        """(nc, d) neighbour table; boundary and padding slots point at the cell itself."""
        def build():
            table, sign = self.incidence
            padded_left = np.concatenate([self.left, [-1]])
            padded_right = np.concatenate([self.right_or_left, [-1]])
            other = np.where(sign > 0, padded_right[table], padded_left[table])
            own = np.arange(self.n_cells)[:, None]
            return np.where(sign == 0, own, other)
        return self._cached("neighbours", build)

    @property
    def trace_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """x_e - x_K seen from the left and from the right cell of every edge."""
        def build():
            left_off = self.edge_mid - self.centroid[self.left]
            return left_off, left_off - self.offset
        return self._cached("trace_offsets", build)

    # ---- sanity -----------------------------------------------------------

    def gauss_residual(self) -> np.ndarray:
        """Per-cell sum of m_e n_{e,K}; zero for closed polygons."""
        return self.accumulate(self.normal * self.edge_length[:, None])

    def characteristic_length(self) -> float:
        return float(np.sqrt(self.area.mean()))


# ---------------------------------------------------------------------------
# Cartesian generator
# ---------------------------------------------------------------------------

def _parse_bc(bc) -> dict[str, str]:
    if isinstance(bc, str):
        sides = {s: bc for s in _SIDES}
    else:
        sides = dict(bc)
        missing = set(_SIDES) - set(sides)
        if missing:
            raise ValueError(f"boundary spec misses sides {sorted(missing)}")
    for name, kind in sides.items():
        if kind != "periodic" and kind not in _TAG_NAMES:
            raise ValueError(f"unknown boundary kind {kind!r} on {name}")
    if (sides["west"] == "periodic") != (sides["east"] == "periodic"):
        raise ValueError("periodicity in x must be set on both west and east")
    if (sides["south"] == "periodic") != (sides["north"] == "periodic"):
        raise ValueError("periodicity in y must be set on both south and north")
    return sides


def build_cartesian(nx: int, ny: int, Lx: float, Ly: float, bc="slip",
                    origin=(0.0, 0.0)) -> Mesh:
    """Uniform nx-by-ny rectangle mesh of [x0, x0+Lx] x [y0, y0+Ly].

    ``bc`` is a boundary kind for all sides or a mapping with keys
    west/east/south/north and values periodic, slip (slip-wall) or outflow.
    Cells are numbered x-fastest.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive integers")
    if not (Lx > 0 and Ly > 0):
        raise ValueError("domain lengths must be positive")
    nx, ny = int(nx), int(ny)
    sides = _parse_bc(bc)
    dx, dy = Lx / nx, Ly / ny
    x0, y0 = origin

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    cid = (jj * nx + ii).ravel()
    cx = x0 + (ii.ravel() + 0.5) * dx
    cy = y0 + (jj.ravel() + 0.5) * dy
    centroid = np.empty((nx * ny, 2))
    centroid[cid, 0] = cx
    centroid[cid, 1] = cy
    area = np.full(nx * ny, dx * dy)
    perimeter = np.full(nx * ny, 2.0 * (dx + dy))

    lefts, rights, tags, mids, normals, lengths, offsets = [], [], [], [], [], [], []

    def add(left, right, tag, mid, nrm, length, off):
        lefts.append(left); rights.append(right); tags.append(tag)
        mids.append(mid); normals.append(nrm); lengths.append(length); offsets.append(off)

    # faces normal to x, row by row
    px = sides["west"] == "periodic"
    for j in range(ny):
        yc = y0 + (j + 0.5) * dy
        if not px:
            c = j * nx
            add(c, -1, _TAG_NAMES[sides["west"]], (x0, yc), (-1.0, 0.0), dy, (-dx, 0.0))
        for i in range(nx - 1 + px):
            c = j * nx + i
            r = j * nx + (i + 1) % nx
            add(c, r, INTERIOR, (x0 + (i + 1) * dx, yc), (1.0, 0.0), dy, (dx, 0.0))
        if not px:
            c = j * nx + nx - 1
            add(c, -1, _TAG_NAMES[sides["east"]], (x0 + Lx, yc), (1.0, 0.0), dy, (dx, 0.0))
    # faces normal to y, column-major within each row of faces
    py = sides["south"] == "periodic"
    if not py:
        for i in range(nx):
            add(i, -1, _TAG_NAMES[sides["south"]], (x0 + (i + 0.5) * dx, y0), (0.0, -1.0), dx, (0.0, -dy))
    for j in range(ny - 1 + py):
        for i in range(nx):
            c = j * nx + i
            r = ((j + 1) % ny) * nx + i
            add(c, r, INTERIOR, (x0 + (i + 0.5) * dx, y0 + (j + 1) * dy), (0.0, 1.0), dx, (0.0, dy))
    if not py:
        for i in range(nx):
            c = (ny - 1) * nx + i
            add(c, -1, _TAG_NAMES[sides["north"]], (x0 + (i + 0.5) * dx, y0 + Ly), (0.0, 1.0), dx, (0.0, dy))

    return Mesh(
        area=area, perimeter=perimeter, centroid=centroid,
        edge_length=np.asarray(lengths, dtype=float),
        edge_mid=np.asarray(mids, dtype=float),
        normal=np.asarray(normals, dtype=float),
        left=np.asarray(lefts, dtype=np.int64),
        right=np.asarray(rights, dtype=np.int64),
        tag=np.asarray(tags, dtype=np.int8),
        offset=np.asarray(offsets, dtype=float),
        shape=(nx, ny), extent=(float(Lx), float(Ly)),
    )


# ---------------------------------------------------------------------------
# Plain-text connectivity files
# ---------------------------------------------------------------------------

def write_mesh(mesh: Mesh, path) -> None:
    tag_word = {SLIP: "slip", OUTFLOW: "outflow"}

    def f(x):
        return repr(float(x))
    lines = [f"cells {mesh.n_cells} edges {mesh.n_edges}"]
    for k in range(mesh.n_cells):
        lines.append(f"{k} {f(mesh.area[k])} {f(mesh.perimeter[k])} {f(mesh.centroid[k, 0])} {f(mesh.centroid[k, 1])}")
    for e in range(mesh.n_edges):
        right = str(mesh.right[e]) if mesh.right[e] >= 0 else tag_word[int(mesh.tag[e])]
        lines.append(f"{e} {f(mesh.edge_length[e])} {f(mesh.edge_mid[e, 0])} {f(mesh.edge_mid[e, 1])} "
                     f"{f(mesh.normal[e, 0])} {f(mesh.normal[e, 1])} {mesh.left[e]} {right}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    """Read a mesh written as ``cells N edges M`` followed by cell and edge lines.

    Interior offsets are taken from centroid differences, so periodic wraps
    cannot be expressed in this format.
    """
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    head = rows[0]
    if len(head) != 4 or head[0] != "cells" or head[2] != "edges":
        raise ValueError("mesh file must start with 'cells N edges M'")
    nc, ne = int(head[1]), int(head[3])
    if len(rows) != 1 + nc + ne:
        raise ValueError(f"expected {nc} cell lines and {ne} edge lines")
    cells = np.array([[float(v) for v in r[1:5]] for r in rows[1:1 + nc]])
    ids = [int(r[0]) for r in rows[1:1 + nc]]
    if ids != list(range(nc)):
        raise ValueError("cell ids must be 0..N-1 in order")
    erows = rows[1 + nc:]
    geo = np.array([[float(v) for v in r[1:6]] for r in erows])
    left = np.array([int(r[6]) for r in erows])
    right, tag = [], []
    for r in erows:
        word = r[7]
        if word.lstrip("-").isdigit():
            right.append(int(word)); tag.append(INTERIOR)
        elif word in _TAG_NAMES:
            right.append(-1); tag.append(_TAG_NAMES[word])
        else:
            raise ValueError(f"unknown edge neighbour {word!r}")
    right = np.array(right)
    centroid = cells[:, 2:4]
    normal = geo[:, 3:5]
    mid = geo[:, 1:3]
    offset = np.empty((ne, 2))
    inner = right >= 0
    offset[inner] = centroid[right[inner]] - centroid[left[inner]]
    # ghost centroid mirrored across the edge line
    d = mid[~inner] - centroid[left[~inner]]
    offset[~inner] = 2.0 * np.sum(d * normal[~inner], axis=1)[:, None] * normal[~inner]
    return Mesh(area=cells[:, 0], perimeter=cells[:, 1], centroid=centroid,
                edge_length=geo[:, 0], edge_mid=mid, normal=normal,
                left=left, right=right, tag=np.array(tag, dtype=np.int8), offset=offset)
