"""Discretized weighted planar metric measure spaces.

A :class:`GridSpace` is a uniform cell grid over a rectangle carrying a
strictly positive weight sampled at cell centers.  Every measure in the
package is a weighted cell sum, ``mu(region) = sum_c w(c) h^2``, and ball
membership is decided by the cell center.  The row-prefix machinery at the
bottom is the shared engine behind every "integrate something over a ball"
operation: it reduces a ball sum to one gather per covered grid row, stays
exact for the center-membership convention, and vectorizes over thousands
of balls at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpace",
    "Ball",
    "DoublingReport",
    "row_prefix",
    "ball_sums",
    "ball_cells",
    "mu",
    "mu_ball",
    "estimate_doubling",
]


def _weight_values(kind: str, param: float, X: np.ndarray, Y: np.ndarray, h: float) -> np.ndarray:
    if kind == "constant":
        return np.full(X.shape, float(param))
    if kind == "power":
        # |x|^alpha about the coordinate origin; a cell center sitting exactly
        # on the singularity is resampled at center + (h/4, h/4).
        r2 = X * X + Y * Y
        sing = r2 < (1e-9 * h) ** 2
        if np.any(sing):
            r2 = np.where(sing, (X + h / 4.0) ** 2 + (Y + h / 4.0) ** 2, r2)
        return r2 ** (param / 2.0)
    raise ValueError(f"unknown weight kind {kind!r}")


class GridSpace:
    """Uniform grid over ``[x0, x0+wx] x [y0, y0+wy]`` with cell size h.

    Cell centers sit at ``origin + (i + 1/2) h``.  Arrays are indexed
    ``[iy, ix]``.  ``weight`` is ``("constant", c)`` or ``("power", alpha)``.
    """

    def __init__(self, origin, extent, h, weight=("constant", 1.0)):
        if h <= 0:
            raise ValueError("cell size must be positive")
        nx = int(round(extent[0] / h))
        ny = int(round(extent[1] / h))
        if nx < 1 or ny < 1:
            raise ValueError("empty grid")
        if abs(nx * h - extent[0]) > 1e-9 * h or abs(ny * h - extent[1]) > 1e-9 * h:
            raise ValueError("extent must be an integer number of cells")
        self.origin = (float(origin[0]), float(origin[1]))
        self.h = float(h)
        self.nx = nx
        self.ny = ny
        self.weight = (str(weight[0]), float(weight[1]))
        self.xs = self.origin[0] + (np.arange(nx) + 0.5) * self.h
        self.ys = self.origin[1] + (np.arange(ny) + 0.5) * self.h
        X, Y = np.meshgrid(self.xs, self.ys)
        self.w = _weight_values(self.weight[0], self.weight[1], X, Y, self.h)
        self.cell_mass = self.w * self.h * self.h
        self._mass_prefix = None

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def extent(self):
        return (self.nx * self.h, self.ny * self.h)

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys)

    @property
    def mass_prefix(self):
        if self._mass_prefix is None:
            self._mass_prefix = row_prefix(self.cell_mass)
        return self._mass_prefix

    def contains_ball(self, ball: "Ball") -> bool:
        (cx, cy), r = ball.center, ball.radius
        x0, y0 = self.origin
        wx, wy = self.extent
        return (cx - r >= x0 and cx + r <= x0 + wx
                and cy - r >= y0 and cy + r <= y0 + wy)

    def cell_center(self, iy, ix):
        return np.stack([self.xs[np.asarray(ix)], self.ys[np.asarray(iy)]], axis=-1)

    def to_json(self) -> dict:
        return {
            "origin": list(self.origin),
            "extent": [self.nx * self.h, self.ny * self.h],
            "cell": self.h,
            "weight": {"kind": self.weight[0],
                       ("value" if self.weight[0] == "constant" else "alpha"): self.weight[1]},
        }

    @classmethod
    def from_json(cls, d: dict) -> "GridSpace":
        wspec = d.get("weight", {"kind": "constant", "value": 1.0})
        kind = wspec.get("kind", "constant")
        param = wspec.get("value", wspec.get("alpha", 1.0))
        return cls(d["origin"], d["extent"], d["cell"], (kind, param))

    def __repr__(self):
        return (f"GridSpace(origin={self.origin}, shape=({self.nx},{self.ny}), "
                f"h={self.h:g}, weight={self.weight})")


@dataclass(frozen=True)
class Ball:
    """Euclidean ball; cell membership is strict: |center(c) - x| < r."""

    center: tuple
    radius: float

    def scaled(self, tau: float) -> "Ball":
        return Ball(self.center, tau * self.radius)


@dataclass
class DoublingReport:
    """Empirical doubling diagnostics: C_d, the mass-bound exponent Q, and
    the witness (ball, ratio) pairs behind C_d."""

    C_d: float
    Q: float
    samples: list


def row_prefix(field: np.ndarray) -> np.ndarray:
    """Zero-padded cumulative row sums; partial row sums become one gather."""
    ny, nx = field.shape
    out = np.zeros((ny, nx + 1), dtype=np.float64)
    np.cumsum(field, axis=1, out=out[:, 1:])
    return out


def _row_range(lo, hi, grid_lo, h, n):
    """Index range of cell centers strictly inside (lo, hi); may be empty."""
    i0 = np.floor((lo - grid_lo) / h - 0.5).astype(np.int64) + 1
    i1 = np.ceil((hi - grid_lo) / h - 0.5).astype(np.int64) - 1
    return np.clip(i0, 0, n - 1), np.clip(i1, -1, n - 1), i1 >= i0


def ball_sums(space: GridSpace, prefix: np.ndarray, centers, radii) -> np.ndarray:
    """Sum a prefix-encoded cell field over many balls at once.

    centers: (M, 2) points, radii: scalar or (M,).  Cells outside the grid
    contribute nothing (balls are silently truncated at the grid edge).
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    cx, cy = centers[:, 0], centers[:, 1]
    r = np.broadcast_to(np.asarray(radii, dtype=np.float64), cx.shape)
    h, (x0, y0) = space.h, space.origin
    jlo, jhi, ok = _row_range(cy - r, cy + r, y0, h, space.ny)
    out = np.zeros(cx.shape, dtype=np.float64)
    if not np.any(ok):
        return out
    nrows = np.where(ok, jhi - jlo + 1, 0)
    for k in range(int(nrows.max())):
        act = k < nrows
        j = jlo[act] + k
        dy = space.ys[j] - cy[act]
        s = np.sqrt(np.maximum(r[act] ** 2 - dy * dy, 0.0))
        ilo, ihi, iok = _row_range(cx[act] - s, cx[act] + s, x0, h, space.nx)
        vals = np.where(iok, prefix[j, ihi + 1] - prefix[j, ilo], 0.0)
        out[act] += vals
    return out


def ball_cells(space: GridSpace, centers, radii):
    """Flat cell indices covered by each ball, as a CSR pair (indptr, cells).

    Entries for ball m live in cells[indptr[m]:indptr[m+1]], ordered by row.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    cx, cy = centers[:, 0], centers[:, 1]
    r = np.broadcast_to(np.asarray(radii, dtype=np.float64), cx.shape).astype(np.float64)
    h, (x0, y0) = space.h, space.origin
    nx = space.nx
    jlo, jhi, ok = _row_range(cy - r, cy + r, y0, h, space.ny)
    nrows = np.where(ok, jhi - jlo + 1, 0)
    chunks_ball, chunks_cell = [], []
    for k in range(int(nrows.max()) if len(nrows) else 0):
        act_idx = np.nonzero(k < nrows)[0]
        j = jlo[act_idx] + k
        dy = space.ys[j] - cy[act_idx]
        s = np.sqrt(np.maximum(r[act_idx] ** 2 - dy * dy, 0.0))
        ilo, ihi, iok = _row_range(cx[act_idx] - s, cx[act_idx] + s, x0, h, nx)
        act_idx, j, ilo, ihi = act_idx[iok], j[iok], ilo[iok], ihi[iok]
        lens = ihi - ilo + 1
        if len(lens) == 0:
            continue
        total = int(lens.sum())
        # expand [ilo, ihi] ranges: offsets within the concatenated runs
        starts = np.zeros(len(lens), dtype=np.int64)
        np.cumsum(lens[:-1], out=starts[1:])
        offs = np.arange(total, dtype=np.int64) - np.repeat(starts, lens)
        cells = np.repeat(j * nx + ilo, lens) + offs
        chunks_ball.append(np.repeat(act_idx, lens))
        chunks_cell.append(cells)
    if not chunks_ball:
        return np.zeros(len(cx) + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    ball_id = np.concatenate(chunks_ball)
    cell_id = np.concatenate(chunks_cell)
    order = np.argsort(ball_id, kind="stable")
    ball_id, cell_id = ball_id[order], cell_id[order]
    indptr = np.zeros(len(cx) + 1, dtype=np.int64)
    np.cumsum(np.bincount(ball_id, minlength=len(cx)), out=indptr[1:])
    return indptr, cell_id


def mu(space: GridSpace, region=None) -> float:
    """Weighted measure of a cell region (boolean mask; None = whole grid)."""
    if region is None:
        return float(space.cell_mass.sum())
    return float(space.cell_mass[region].sum())


def mu_ball(space: GridSpace, ball: Ball, mask=None) -> float:
    """mu(B cap mask); raises for balls below the grid resolution."""
    if ball.radius < space.h:
        raise ValueError("ball below resolution")
    if mask is None:
        prefix = space.mass_prefix
    else:
        prefix = getattr(mask, "mass_prefix", None)
        if prefix is None:
            prefix = row_prefix(space.cell_mass * np.asarray(mask))
    return float(ball_sums(space, prefix, [ball.center], ball.radius)[0])


def estimate_doubling(space: GridSpace, sample_centers, radii, mask=None) -> DoublingReport:
    """Empirical doubling constant and mass-bound exponent.

    C_d is the max of mu(B(x,2r))/mu(B(x,r)) over the samples; Q comes from a
    pooled least-squares fit of log mu(B(x,r))/mu(B(x,R)) against log(r/R),
    with R the largest radius at the same center.
    """
    radii = np.sort(np.asarray(radii, dtype=np.float64))
    if len(radii) == 0 or radii[0] < space.h:
        raise ValueError("degenerate sample")
    if mask is None:
        prefix = space.mass_prefix
    else:
        prefix = getattr(mask, "mass_prefix", None)
        if prefix is None:
            prefix = row_prefix(space.cell_mass * np.asarray(mask))
    centers = np.atleast_2d(np.asarray(sample_centers, dtype=np.float64))
    n_c, n_r = len(centers), len(radii)
    ctr = np.repeat(centers, n_r, axis=0)
    rad = np.tile(radii, n_c)
    m1 = ball_sums(space, prefix, ctr, rad).reshape(n_c, n_r)
    m2 = ball_sums(space, prefix, ctr, 2.0 * rad).reshape(n_c, n_r)
    if np.any(m1 <= 0.0):
        raise ValueError("degenerate sample")
    ratios = m2 / m1
    order = np.argsort(-ratios, axis=None)
    samples = []
    for flat in order[: min(8, ratios.size)]:
        i, j = divmod(int(flat), n_r)
        samples.append((Ball(tuple(centers[i]), float(radii[j])), float(ratios[i, j])))
    # pooled fit: each center contributes points (log r/R, log mu_r/mu_R)
    logs_x = np.log(radii / radii[-1])
    lx = np.tile(logs_x[:-1], n_c)
    ly = (np.log(m1[:, :-1]) - np.log(m1[:, -1:])).ravel()
    if np.allclose(lx, 0.0):
        raise ValueError("degenerate sample")
    Q = float(np.dot(lx, ly) / np.dot(lx, lx))
    return DoublingReport(C_d=float(ratios.max()), Q=Q, samples=samples)
