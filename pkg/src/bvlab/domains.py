"""Domain catalog and boundary machinery.

Domains are boolean cell masks whose inside set agrees with the analytic
definition at cell centers.  The topological boundary convention is fixed
package-wide: the cells of the boundary are the OUTSIDE cells 4-adjacent to
an inside cell, and analytic domains additionally expose exact boundary
sample points in named groups for trace and density experiments.

Grid alignment is kind-specific.  The slit disk aligns y = 0 with a cell
center row so the slit exists as a removed one-cell band; the cusp kinds
corner-align instead, because a y = 0 center row would thread a one-cell
whisker of mass down to the tip and distort the zero-extended measure there.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .mmspace import GridSpace, Ball, ball_sums, mu, row_prefix

__all__ = [
    "DomainMask",
    "BoundaryMask",
    "DensityReport",
    "make_domain",
    "mask_from_pgm",
    "parse_domain_spec",
    "measure_theoretic_boundary",
    "check_measure_density",
    "check_codim_boundary",
    "shrink_domain",
]

THETA_DENSITY = 0.05  # upper-density threshold for the measure-theoretic boundary


def _adjacent_to(mask: np.ndarray) -> np.ndarray:
    """Cells 4-adjacent to a True cell (the mask itself not included)."""
    out = np.zeros_like(mask)
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out & ~mask


class DomainMask:
    """A domain as a boolean cell mask plus its analytic boundary samplers."""

    def __init__(self, space: GridSpace, inside: np.ndarray, name: str = "mask",
                 samplers: dict | None = None):
        inside = np.asarray(inside, dtype=bool)
        if inside.shape != space.shape:
            raise ValueError("mask shape does not match the grid")
        self.space = space
        self.inside = inside
        self.name = name
        self.samplers = samplers or {}
        self._boundary = None
        self._dist = None
        self._mass_prefix = None

    @property
    def area(self) -> float:
        return mu(self.space, self.inside)

    @property
    def boundary_cells(self) -> np.ndarray:
        if self._boundary is None:
            self._boundary = _adjacent_to(self.inside)
        return self._boundary

    @property
    def dist_inside(self) -> np.ndarray:
        """Distance (in length units) from each inside cell center to the
        complement, via the Euclidean distance transform; 0 outside."""
        if self._dist is None:
            self._dist = ndimage.distance_transform_edt(self.inside) * self.space.h
        return self._dist

    @property
    def mass_prefix(self) -> np.ndarray:
        if self._mass_prefix is None:
            self._mass_prefix = row_prefix(self.space.cell_mass * self.inside)
        return self._mass_prefix

    def boundary_points(self, group: str, n: int) -> np.ndarray:
        """n deterministic analytic boundary points from a named group."""
        try:
            sampler = self.samplers[group]
        except KeyError:
            raise KeyError(f"domain {self.name!r} has no boundary group {group!r}") from None
        return np.atleast_2d(np.asarray(sampler(n), dtype=np.float64))

    @property
    def groups(self):
        return sorted(self.samplers)

    def __repr__(self):
        return f"DomainMask({self.name!r}, cells={int(self.inside.sum())}, h={self.space.h:g})"


class BoundaryMask:
    """Cell-set approximation of a boundary, with the source mask attached."""

    def __init__(self, domain: DomainMask, cells: np.ndarray, kind: str):
        self.domain = domain
        self.cells = np.asarray(cells, dtype=bool)
        self.kind = kind

    def __repr__(self):
        return f"BoundaryMask({self.kind}, cells={int(self.cells.sum())})"


class DensityReport:
    """Boundary regularity diagnostics.

    c_m: worst measure-density ratio mu(B cap Omega)/mu(B) over the samples;
    C_bdry: worst codimension ratio H(B cap dOmega) r / mu(B);
    gamma: empirical density bound, capped at 1/2;
    failures: sample points whose ratio decays to 0 with the radius.
    """

    def __init__(self, c_m=None, C_bdry=None, gamma=None, failures=None,
                 points=None, radii=None, ratios=None):
        self.c_m = c_m
        self.C_bdry = C_bdry
        self.gamma = gamma
        self.failures = failures if failures is not None else []
        self.points = points
        self.radii = radii
        self.ratios = ratios

    def __repr__(self):
        parts = []
        if self.c_m is not None:
            parts.append(f"c_m={self.c_m:.4g}")
        if self.C_bdry is not None:
            parts.append(f"C_bdry={self.C_bdry:.4g}")
        parts.append(f"failures={len(self.failures)}")
        return "DensityReport(" + ", ".join(parts) + ")"


# ---------------------------------------------------------------------------
# catalog


def _snap(v: float, h: float) -> float:
    return round(v / h) * h


def _cantor_member(t: np.ndarray, level: int) -> np.ndarray:
    """Membership in the level-k middle-thirds prefix of [0,1]."""
    inside = (t >= 0.0) & (t <= 1.0)
    x = np.clip(t, 0.0, 1.0)
    for _ in range(level):
        x = x * 3.0
        digit = np.floor(x)
        inside &= digit != 1.0
        x = x - digit
        x = np.where(digit == 1.0, 0.0, x)
    return inside


def _koch_points(level: int) -> np.ndarray:
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    c, s = np.cos(np.pi / 3), np.sin(np.pi / 3)
    for _ in range(level):
        p, q = pts[:-1], pts[1:]
        d = q - p
        a = p + d / 3.0
        b = p + 2.0 * d / 3.0
        rot = np.stack([c * d[:, 0] / 3 - s * d[:, 1] / 3,
                        s * d[:, 0] / 3 + c * d[:, 1] / 3], axis=1)
        peak = a + rot
        pts = np.concatenate(
            [np.stack([p, a, peak, b], axis=1).reshape(-1, 2), pts[-1:]], axis=0)
    return pts


def _polygon_inside(space: GridSpace, verts: np.ndarray) -> np.ndarray:
    """Even-odd scanline rasterization of a closed polygon at cell centers."""
    v0 = verts
    v1 = np.roll(verts, -1, axis=0)
    keep = ~np.all(v0 == v1, axis=1)
    v0, v1 = v0[keep], v1[keep]
    inside = np.zeros(space.shape, dtype=bool)
    y0s, y1s = v0[:, 1], v1[:, 1]
    for jy, y in enumerate(space.ys):
        crosses = ((y0s <= y) & (y < y1s)) | ((y1s <= y) & (y < y0s))
        if not crosses.any():
            continue
        a, b = v0[crosses], v1[crosses]
        t = (y - a[:, 1]) / (b[:, 1] - a[:, 1])
        xi = np.sort(a[:, 0] + t * (b[:, 0] - a[:, 0]))
        n_ge = len(xi) - np.searchsorted(xi, space.xs, side="right")
        inside[jy] = (n_ge % 2) == 1
    return inside


def _circle_sampler(radius, n, lo=0.0, hi=2.0 * np.pi):
    th = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    return np.stack([radius * np.cos(th), radius * np.sin(th)], axis=1)


def _square_edge_sampler(n):
    t = (np.arange(n) + 0.5) / n
    side, u = np.divmod(t * 4.0, 1.0)
    pts = np.empty((n, 2))
    for k in range(n):
        s = int(side[k])
        if s == 0:
            pts[k] = (u[k], 0.0)
        elif s == 1:
            pts[k] = (1.0, u[k])
        elif s == 2:
            pts[k] = (1.0 - u[k], 1.0)
        else:
            pts[k] = (0.0, 1.0 - u[k])
    return pts


def _log_spaced(lo, hi, n):
    return np.exp(np.linspace(np.log(lo), np.log(hi), n))


def make_domain(kind: str, h: float = 1 / 256, weight=("constant", 1.0),
                margin: float = 0.25, space: GridSpace | None = None,
                **params) -> DomainMask:
    """Build a catalog domain on a fresh (or supplied) grid.

    Kinds: unit_square, disk(radius), slit_disk, exterior_cusp(beta),
    interior_cusp, cantor_complement(level), koch_prefix(level),
    strip(i, beta).  Raises "under-resolved domain" when the defining
    feature falls below 2h.
    """
    if space is not None:
        h = space.h

    def grid(x0, y0, wx, wy, center_row=False):
        if space is not None:
            return space
        m = max(h, _snap(margin, h))
        y_off = 0.5 * h if center_row else 0.0
        return GridSpace((_snap(x0 - m, h), _snap(y0 - m, h) - y_off),
                         (_snap(wx + 2 * m, h), _snap(wy + 2 * m, h)), h, weight)

    if kind == "unit_square":
        g = grid(0.0, 0.0, 1.0, 1.0)
        X, Y = g.meshgrid()
        inside = (X > 0) & (X < 1) & (Y > 0) & (Y < 1)
        samplers = {
            "edge": _square_edge_sampler,
            "corner": lambda n: np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)[:n],
        }
        return DomainMask(g, inside, "unit_square", samplers)

    if kind == "disk":
        radius = float(params.get("radius", 1.0))
        if radius < 2 * h:
            raise ValueError("under-resolved domain")
        g = grid(-radius, -radius, 2 * radius, 2 * radius)
        X, Y = g.meshgrid()
        inside = X * X + Y * Y < radius * radius
        return DomainMask(g, inside, "disk",
                          {"circle": lambda n: _circle_sampler(radius, n)})

    if kind == "slit_disk":
        g = grid(-1.0, -1.0, 2.0, 2.0, center_row=True)
        X, Y = g.meshgrid()
        inside = (X * X + Y * Y < 1.0) & ~((X > 0) & (np.abs(Y) < h / 4))
        samplers = {
            "slit": lambda n: np.stack([0.05 + 0.9 * (np.arange(n) + 0.5) / n,
                                        np.zeros(n)], axis=1),
            "arc": lambda n: _circle_sampler(1.0, n, lo=0.3, hi=2 * np.pi - 0.3),
        }
        return DomainMask(g, inside, "slit_disk", samplers)

    if kind == "exterior_cusp":
        beta = float(params.get("beta", 2.0))
        g = grid(0.0, -1.0, 1.0, 2.0)
        X, Y = g.meshgrid()
        inside = (X > 0) & (X < 1) & (np.abs(Y) < np.maximum(X, 0.0) ** beta)
        def wall(n):
            x = _log_spaced(0.02, 0.98, (n + 1) // 2)
            pts = np.stack([x, x ** beta], axis=1)
            return np.concatenate([pts, pts * [1, -1]], axis=0)[:n]
        samplers = {
            "tip": lambda n: np.zeros((1, 2)),
            "wall": wall,
            "end": lambda n: np.stack([np.ones(n), -0.9 + 1.8 * (np.arange(n) + 0.5) / n],
                                      axis=1),
        }
        return DomainMask(g, inside, "exterior_cusp", samplers)

    if kind == "interior_cusp":
        g = grid(-1.0, -1.0, 2.0, 2.0)
        X, Y = g.meshgrid()
        inside = (X * X + Y * Y < 1.0) & ~((X >= 0) & (np.abs(Y) <= X * X))
        x_join = 0.7861513777574233  # x^2 + x^4 = 1
        def wall(n):
            x = np.linspace(0.05, x_join - 0.02, (n + 1) // 2)
            pts = np.stack([x, x ** 2], axis=1)
            return np.concatenate([pts, pts * [1, -1]], axis=0)[:n]
        samplers = {
            "origin": lambda n: np.zeros((1, 2)),
            "wall": wall,
            "arc": lambda n: _circle_sampler(1.0, n, lo=0.8, hi=2 * np.pi - 0.8),
        }
        return DomainMask(g, inside, "interior_cusp", samplers)

    if kind == "cantor_complement":
        level = int(params.get("level", 5))
        if 3.0 ** (-level) < 2 * h:
            raise ValueError("under-resolved domain")
        g = grid(0.0, 0.0, 1.0, 1.0)
        X, Y = g.meshgrid()
        inside = ((X > 0) & (X < 1) & (Y > 0) & (Y < 1)
                  & ~(_cantor_member(X, level) & _cantor_member(Y, level)))
        # endpoints of the level-k intervals, used as analytic boundary points
        ends = [0.0, 1.0]
        for _ in range(level):
            ends = sorted({e / 3.0 for e in ends} | {e / 3.0 + 2.0 / 3.0 for e in ends})
        ends = np.asarray(ends)
        def corners(n):
            k = max(1, int(np.sqrt(n)))
            sub = ends[np.linspace(0, len(ends) - 1, k).astype(int)]
            P = np.stack(np.meshgrid(sub, sub), axis=-1).reshape(-1, 2)
            return P[:n]
        return DomainMask(g, inside, "cantor_complement",
                          {"edge": _square_edge_sampler, "cantor": corners})

    if kind == "koch_prefix":
        level = int(params.get("level", 6))
        if 3.0 ** (-level) < h:
            raise ValueError("under-resolved domain")
        g = grid(0.0, -0.5, 1.0, 0.5 + np.sqrt(3) / 6)
        pts = _koch_points(level)
        poly = np.concatenate([pts, [[1.0, -0.5], [0.0, -0.5]]], axis=0)
        inside = _polygon_inside(g, poly)
        def curve(n):
            idx = np.linspace(0, len(pts) - 1, n).astype(int)
            return pts[idx]
        return DomainMask(g, inside, f"koch_prefix_{level}", {"curve": curve})

    if kind == "strip":
        i = int(params.get("i", 4))
        beta = float(params.get("beta", 2.0))
        if (1.0 / i) ** beta < 2 * h:
            raise ValueError("under-resolved domain")
        if space is None:
            raise ValueError("strip requires the ambient cusp's grid (pass space=...)")
        g = space
        X, Y = g.meshgrid()
        inside = (X > 0) & (X < 1.0 / i) & (np.abs(Y) < np.maximum(X, 0.0) ** beta)
        half = (1.0 / i) ** beta
        def interface(n):
            y = -half + 2 * half * (np.arange(n) + 0.5) / n
            return np.stack([np.full(n, 1.0 / i), y], axis=1)
        return DomainMask(g, inside, f"strip_{i}", {"interface": interface})

    raise ValueError(f"unknown domain kind {kind!r}")


def mask_from_pgm(path, h: float, origin=(0.0, 0.0), weight=("constant", 1.0),
                  name: str = "pgm") -> DomainMask:
    """Read a P2/P5 PGM bitmap as a domain mask (nonzero = inside).

    Row 0 of the file is the TOP row of the image; the grid stores rows
    bottom-up, so the image is flipped vertically on load.
    """
    with open(path, "rb") as f:
        data = f.read()
    tokens = []
    i = 0
    while len(tokens) < 4:
        if data[i:i + 1] == b"#":
            i = data.index(b"\n", i) + 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j > i:
            tokens.append(data[i:j])
        i = j + 1
    magic, w, ht, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P5":
        raw = np.frombuffer(data[i:], dtype=np.uint8 if maxval < 256 else ">u2",
                            count=w * ht)
    elif magic == b"P2":
        raw = np.array(data[i:].split()[: w * ht], dtype=np.int64)
    else:
        raise ValueError("not a PGM file")
    img = raw.reshape(ht, w)[::-1]
    g = GridSpace(origin, (w * h, ht * h), h, weight)
    return DomainMask(g, img > 0, name)


def parse_domain_spec(spec: str, h: float, weight=("constant", 1.0)) -> DomainMask:
    """CLI-style domain addressing: 'exterior_cusp:beta=2' or 'disk:radius=0.5'."""
    kind, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            params[key.strip()] = float(val)
    if kind == "strip":
        cusp = make_domain("exterior_cusp", h=h, weight=weight,
                           beta=params.get("beta", 2.0))
        return make_domain("strip", space=cusp.space, **params)
    return make_domain(kind, h=h, weight=weight, **params)


# ---------------------------------------------------------------------------
# boundary diagnostics


def measure_theoretic_boundary(E: DomainMask, radii, ambient: DomainMask | None = None,
                               theta: float = THETA_DENSITY) -> BoundaryMask:
    """Cells of the topological boundary where both E and its complement keep
    upper density above theta (max over the sampled radii)."""
    space = E.space
    cand = E.boundary_cells.copy()
    if ambient is not None:
        cand |= _adjacent_to(~E.inside & ambient.inside) & E.inside
    jy, jx = np.nonzero(cand)
    if len(jy) == 0:
        return BoundaryMask(E, cand, "measure_theoretic")
    pts = np.stack([space.xs[jx], space.ys[jy]], axis=1)
    amb_inside = ambient.inside if ambient is not None else np.ones(space.shape, bool)
    pref_E = row_prefix(space.cell_mass * (E.inside & amb_inside))
    pref_A = row_prefix(space.cell_mass * amb_inside)
    dens_E = np.zeros(len(pts))
    dens_C = np.zeros(len(pts))
    for r in np.asarray(radii, dtype=float):
        mE = ball_sums(space, pref_E, pts, r)
        mA = ball_sums(space, pref_A, pts, r)
        good = mA > 0
        dE = np.where(good, mE / np.maximum(mA, 1e-300), 0.0)
        dens_E = np.maximum(dens_E, dE)
        dens_C = np.maximum(dens_C, np.where(good, 1.0 - dE, 0.0))
    keep = (dens_E > theta) & (dens_C > theta)
    out = np.zeros(space.shape, dtype=bool)
    out[jy[keep], jx[keep]] = True
    return BoundaryMask(E, out, "measure_theoretic")


def check_measure_density(omega: DomainMask, points, radii,
                          fail_ratio: float = 0.1) -> DensityReport:
    """Ratios mu(B cap Omega)/mu(B) at boundary points across radii.

    A point fails when the fitted log-log slope is >= 1/2 and the smallest
    ratio sits below fail_ratio, i.e. the ratio genuinely decays to zero.
    """
    space = omega.space
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.sort(np.asarray(radii, dtype=float))
    n_p, n_r = len(points), len(radii)
    ctr = np.repeat(points, n_r, axis=0)
    rad = np.tile(radii, n_p)
    m_in = ball_sums(space, omega.mass_prefix, ctr, rad).reshape(n_p, n_r)
    m_all = ball_sums(space, space.mass_prefix, ctr, rad).reshape(n_p, n_r)
    if np.any(m_all <= 0):
        raise ValueError("degenerate sample")
    ratios = m_in / m_all
    lx = np.log(radii) - np.log(radii).mean()
    safe = np.maximum(ratios, 1e-300)
    slopes = (np.log(safe) @ lx) / np.dot(lx, lx)
    failing = (slopes >= 0.5) & (ratios[:, 0] < fail_ratio)
    ok = ~failing
    c_m = float(ratios[ok].min()) if np.any(ok) else 0.0
    if np.any(ok):
        gamma = float(np.clip(ratios[ok].min(), 1e-12, 0.5))
    else:
        gamma = None
    failures = [tuple(points[i]) for i in np.nonzero(failing)[0]]
    return DensityReport(c_m=c_m, gamma=gamma, failures=failures,
                         points=points, radii=radii, ratios=ratios)


def check_codim_boundary(omega: DomainMask, points, radii,
                         content_scale: float | None = None) -> DensityReport:
    """Worst ratio H(B(x,r) cap dOmega) * r / mu(B(x,r)) over samples.

    H is the Hausdorff content of the boundary cells at scale R = 4h
    (overridable), computed by the greedy cover.
    """
    from .hausdorff import content_HR

    space = omega.space
    R = content_scale if content_scale is not None else 4 * space.h
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.sort(np.asarray(radii, dtype=float))
    bcells = omega.boundary_cells
    jy, jx = np.nonzero(bcells)
    bx, by = space.xs[jx], space.ys[jy]
    ratios = np.zeros((len(points), len(radii)))
    for ip, p in enumerate(points):
        d2 = (bx - p[0]) ** 2 + (by - p[1]) ** 2
        for ir, r in enumerate(radii):
            sel = d2 < r * r
            if not sel.any():
                continue
            target = np.zeros(space.shape, dtype=bool)
            target[jy[sel], jx[sel]] = True
            content = content_HR(space, target, R).content
            mB = ball_sums(space, space.mass_prefix, [p], r)[0]
            if mB <= 0:
                raise ValueError("degenerate sample")
            ratios[ip, ir] = content * r / mB
    return DensityReport(C_bdry=float(ratios.max()), points=points,
                         radii=radii, ratios=ratios)


def shrink_domain(omega: DomainMask, delta: float) -> DomainMask:
    """Inner domain Omega_delta = {dist(., complement) > delta}."""
    if delta < 2 * omega.space.h:
        raise ValueError("shrink distance below resolution (need delta >= 2h)")
    inside = omega.dist_inside > delta
    if not inside.any():
        raise ValueError("over-shrunk")
    return DomainMask(omega.space, inside, f"{omega.name}_shrunk", {})
