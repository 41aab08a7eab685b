"""Pencil-of-curves criterion for the Poincare inequality on the cusp.

For axis points x = (x1, 0), y = (y1, 0) with 0 < x1 < y1 < 1 inside the
cusp {0 < x1 < 1, |x2| < x1^beta}, the family gamma_s, s in (-1, 1), runs
in three regimes over t in [0, y1 - x1]:

* a pencil of angle pi/2 spreading from x while the line (x1+t, t) still
  fits in the closed domain,
* scaled copies of the cusp wall (the parabola regime) while there is
  room before y, and
* a pencil converging on y.

The regimes depend on t only, never on s, so one case vector serves every
curve.  Ties at the closure boundary go to the pencil case (first match in
the stated order).  With the uniform probability alpha = (1/2) ds on the
parameter interval, the occupation integral of any Borel set A inside the
domain is dominated by the two-pole Riesz sum

    int_A d(z,x)/mu(B(x, d(z,x)) cap Omega) + (same with y) dmu(z),

which is what ``check_semmes_condition`` measures on a battery of test
rectangles; ``riesz_kernel_check`` verifies the pointwise kernel bound
(1/8) z1^(-2) that powers the parabola-regime estimate.

Curve integrals use arc length along the sampled polylines rather than the
bare parameter; the parametrization is comparable to arc length (speed in
[1, sqrt(5)]), so the choice only moves the empirical constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import DomainMask

PENCIL_FROM_X, PARABOLA, PENCIL_TO_Y = 1, 2, 3


@dataclass
class CurveFamily:
    x: tuple
    y: tuple
    beta: float
    s_values: np.ndarray      # (n_curves,) midpoints of (-1, 1)
    t_values: np.ndarray      # (n_samples,) midpoints of [0, y1 - x1]
    points: np.ndarray        # (n_curves, n_samples, 2)
    cases: np.ndarray         # (n_samples,) regime labels 1 | 2 | 3
    alpha: np.ndarray         # (n_curves,) probability weights, sum 1
    seg_len: np.ndarray       # (n_curves, n_samples) arc length per sample

    @property
    def n_curves(self) -> int:
        return len(self.s_values)

    @property
    def n_samples(self) -> int:
        return len(self.t_values)

    def speeds(self) -> np.ndarray:
        dt = self.t_values[1] - self.t_values[0]
        return self.seg_len / dt

    def to_csv(self, path) -> None:
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "t", "x", "y", "case"])
            for i, s in enumerate(self.s_values):
                for k, t in enumerate(self.t_values):
                    w.writerow([f"{s:.12g}", f"{t:.12g}",
                                f"{self.points[i, k, 0]:.12g}",
                                f"{self.points[i, k, 1]:.12g}",
                                int(self.cases[k])])


@dataclass
class SemmesReport:
    sets: list
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray
    C: float
    flagged: list


def build_family(x, y, beta: float = 2.0, n_curves: int = 256,
                 n_samples: int = 512) -> CurveFamily:
    """The three-regime curve family between two axis points of the cusp."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x1, y1 = float(x[0]), float(y[0])
    if x[1] != 0.0 or y[1] != 0.0 or not (0.0 < x1 < y1 < 1.0):
        raise ValueError(
            "case not covered by paper (need x=(x1,0), y=(y1,0), 0<x1<y1<1)")

    span = y1 - x1
    dt = span / n_samples
    t = (np.arange(n_samples) + 0.5) * dt
    s = -1.0 + (np.arange(n_curves) + 0.5) * (2.0 / n_curves)
    alpha = np.full(n_curves, 1.0 / n_curves)

    a = x1 + t                      # running abscissa
    wall = a ** beta
    room = (y1 - a) >= wall         # still space before the y-pencil
    in_closure = t <= wall          # (x1+t, t) inside the closed domain
    cases = np.where(room & in_closure, PENCIL_FROM_X,
                     np.where(room, PARABOLA, PENCIL_TO_Y))

    height = np.where(cases == PENCIL_FROM_X, t,
                      np.where(cases == PARABOLA, wall, y1 - a))
    pts = np.empty((n_curves, n_samples, 2))
    pts[:, :, 0] = a[None, :]
    pts[:, :, 1] = s[:, None] * height[None, :]

    steps = np.gradient(pts, axis=1)
    seg = np.hypot(steps[:, :, 0], steps[:, :, 1])
    return CurveFamily(tuple(x), tuple(y), float(beta), s, t, pts,
                       cases.astype(np.int8), alpha, seg)


def _radial_profile(omega: DomainMask, point):
    """Sorted center distances and cumulative masses: mu(B(point, rho) cap
    Omega) with the package's strict ball membership."""
    space = omega.space
    X, Y = space.meshgrid()
    d = np.hypot(X - point[0], Y - point[1])[omega.inside]
    m = space.cell_mass[omega.inside]
    order = np.argsort(d)
    return d[order], np.cumsum(m[order])


def _pole_kernel(dsort: np.ndarray, csum: np.ndarray, d) -> np.ndarray:
    """d / mu(B(pole, d) cap Omega), with d clamped up to the first resolved
    radius: the continuum kernel diverges at the pole, so cells below the
    resolution floor take the largest resolved value instead of zero."""
    d_eff = np.maximum(np.asarray(d, dtype=float),
                       dsort[0] + 1e-12 * (dsort[0] + 1.0))
    idx = np.searchsorted(dsort, d_eff, side="left") - 1
    m = csum[np.maximum(idx, 0)]
    return d_eff / m


def riesz_pole(omega: DomainMask, point, z_points) -> np.ndarray:
    """d(z, p) / mu(B(p, d(z, p)) cap Omega) at the given z samples."""
    dsort, csum = _radial_profile(omega, point)
    z = np.atleast_2d(np.asarray(z_points, dtype=float))
    d = np.hypot(z[:, 0] - point[0], z[:, 1] - point[1])
    return _pole_kernel(dsort, csum, d)


def default_test_rectangles(x1: float, y1: float, beta: float = 2.0,
                            n: int = 50, min_half: float = 0.0) -> list:
    """Axis-aligned rectangles log-spaced toward the tip, each hugging the
    local cusp width.  min_half floors the half-height so no rectangle is
    thinner than the grid can resolve (a sliver between two cell rows has
    occupation but no cells, a pure resolution artifact)."""
    rects = []
    for c in np.geomspace(max(x1 * 0.25, 1e-3), min(1.5 * y1, 0.95), n):
        half = max(0.5 * (c ** beta), min_half)
        rects.append((0.8 * c, 1.2 * c, -half, half))
    return rects


def check_semmes_condition(family: CurveFamily, omega: DomainMask,
                           test_sets=None) -> SemmesReport:
    """Empirical constant of the occupation bound over the test sets.

    lhs: arc-length occupation of the set, averaged over curves with the
    uniform alpha.  rhs: the two-pole Riesz integral over the set's cells.
    rhs = 0 with lhs > 0 is recorded as a flagged violation.
    """
    if test_sets is None:
        test_sets = default_test_rectangles(family.x[0], family.y[0],
                                            family.beta,
                                            min_half=2 * omega.space.h)
    space = omega.space
    X, Y = space.meshgrid()
    mass = space.cell_mass

    ds_x, cs_x = _radial_profile(omega, family.x)
    ds_y, cs_y = _radial_profile(omega, family.y)
    d_x = np.hypot(X - family.x[0], Y - family.x[1])
    d_y = np.hypot(X - family.y[0], Y - family.y[1])
    kernel = _pole_kernel(ds_x, cs_x, d_x) + _pole_kernel(ds_y, cs_y, d_y)

    px = family.points[:, :, 0]
    py = family.points[:, :, 1]
    lhs = np.empty(len(test_sets))
    rhs = np.empty(len(test_sets))
    for j, spec in enumerate(test_sets):
        if len(spec) == 5 and spec[0] == "annulus":
            _, cx, cy, r0, r1 = spec
            rc = np.hypot(px - cx, py - cy)
            on_curve = (rc >= r0) & (rc < r1)
            rg = np.hypot(X - cx, Y - cy)
            in_set = omega.inside & (rg >= r0) & (rg < r1)
        else:
            rx0, rx1, ry0, ry1 = spec
            on_curve = (px >= rx0) & (px < rx1) & (py >= ry0) & (py < ry1)
            in_set = (omega.inside & (X >= rx0) & (X < rx1)
                      & (Y >= ry0) & (Y < ry1))
        lhs[j] = float((family.alpha[:, None] * on_curve * family.seg_len).sum())
        rhs[j] = float((kernel[in_set] * mass[in_set]).sum())

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rhs > 0, lhs / np.maximum(rhs, 1e-300), 0.0)
    flagged = [test_sets[j] for j in range(len(test_sets))
               if rhs[j] <= 0 and lhs[j] > 0]
    C = float(ratios.max()) if len(ratios) else 0.0
    return SemmesReport(list(test_sets), lhs, rhs, ratios, C, flagged)


def riesz_kernel_check(omega: DomainMask, x1: float, n_points: int = 100,
                       slack: float = 0.05, seed: int = 11) -> dict:
    """Spot-check d(z,x)/mu(B(x,d) cap Omega) >= (1/8) z1^{-2} at sampled
    parabola-regime cells (z1 - x1 > z1^2, the degree-2 cusp bound)."""
    space = omega.space
    X, Y = space.meshgrid()
    eligible = omega.inside & (X - x1 > X ** 2) & (X > x1)
    iy, ix = np.nonzero(eligible)
    if len(iy) == 0:
        raise ValueError("no parabola-regime cells at this resolution")
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(iy), size=min(n_points, len(iy)), replace=False)
    z = np.stack([space.xs[ix[pick]], space.ys[iy[pick]]], axis=1)
    lhs = riesz_pole(omega, (x1, 0.0), z)
    rhs = 0.125 / z[:, 0] ** 2
    ok = lhs >= rhs * (1.0 - slack)
    margin = lhs / rhs
    return {"ok": bool(ok.all()), "checked": len(z), "min_margin":
            float(margin.min()), "points": z, "lhs": lhs, "rhs": rhs}
