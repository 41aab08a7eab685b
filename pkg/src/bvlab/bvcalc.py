"""Total variation, perimeter, coarea, and pointwise BV diagnostics.

The gradient discretization is fixed package-wide: one pass of 3x3 tent
mollification, then central differences, then the weighted cell sum of the
gradient magnitude.  Fields supported on a strict subdomain are extended by
nearest-inside values before differentiation so the support boundary itself
contributes no spurious variation; the zero-extension operator in the traces
module is the place where boundary jumps are meant to appear.

For indicator fields an exact edge-counting alternative ("interface") is
available; it is the sharp choice for axis-aligned sets and the honest
cross-check for everything else.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .mmspace import GridSpace, Ball, ball_sums, row_prefix
from .domains import DomainMask

__all__ = [
    "ScalarField",
    "VariationResult",
    "ApproxLimits",
    "PoincareReport",
    "total_variation",
    "tv_density",
    "perimeter",
    "coarea_check",
    "approx_limits",
    "surface_density",
    "poincare_BV_check",
    "find_good_radius",
]


class ScalarField:
    """Cell-sampled scalar function, optionally supported on a domain mask."""

    def __init__(self, space: GridSpace, values: np.ndarray,
                 support: DomainMask | None = None):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != space.shape:
            raise ValueError("field shape does not match the grid")
        self.space = space
        self.support = support
        if support is not None:
            values = np.where(support.inside, values, 0.0)
        self.values = values
        self._extended = None

    @classmethod
    def from_function(cls, space: GridSpace, fn, support: DomainMask | None = None):
        X, Y = space.meshgrid()
        return cls(space, fn(X, Y), support)

    @property
    def inside(self) -> np.ndarray:
        if self.support is None:
            return np.ones(self.space.shape, dtype=bool)
        return self.support.inside

    def extended(self) -> np.ndarray:
        """Values extended off the support by the nearest inside cell."""
        if self.support is None:
            return self.values
        if self._extended is None:
            idx = ndimage.distance_transform_edt(
                ~self.support.inside, return_distances=False, return_indices=True)
            self._extended = self.values[tuple(idx)]
        return self._extended

    def l1_norm(self) -> float:
        return float((np.abs(self.values) * self.space.cell_mass)[self.inside].sum())

    def value_range(self) -> float:
        vals = self.values[self.inside]
        return float(vals.max() - vals.min()) if vals.size else 0.0

    def is_indicator(self, tol: float = 1e-9) -> bool:
        v = self.values[self.inside]
        return bool(np.all((np.abs(v) < tol) | (np.abs(v - 1.0) < tol)))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.space, values, self.support)

    # --- flat file interfaces -------------------------------------------

    def to_csv(self, path):
        X, Y = self.space.meshgrid()
        m = self.inside
        data = np.stack([X[m], Y[m], self.values[m]], axis=1)
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header="x,y,value",
                   comments="")

    @classmethod
    def from_csv(cls, path, space: GridSpace, support: DomainMask | None = None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        vals = np.zeros(space.shape)
        ix = np.clip(((data[:, 0] - space.origin[0]) / space.h - 0.5).round().astype(int),
                     0, space.nx - 1)
        iy = np.clip(((data[:, 1] - space.origin[1]) / space.h - 0.5).round().astype(int),
                     0, space.ny - 1)
        vals[iy, ix] = data[:, 2]
        return cls(space, vals, support)

    def to_binary(self, path_prefix):
        """Row-major float64 dump plus a JSON header next to it."""
        import json
        self.values.astype("<f8").tofile(str(path_prefix) + ".bin")
        with open(str(path_prefix) + ".json", "w") as f:
            json.dump({"dtype": "<f8", "order": "C", "shape": list(self.space.shape),
                       "grid": self.space.to_json()}, f, indent=2, sort_keys=True)

    @classmethod
    def from_binary(cls, path_prefix, support: DomainMask | None = None):
        import json
        with open(str(path_prefix) + ".json") as f:
            head = json.load(f)
        space = GridSpace.from_json(head["grid"])
        vals = np.fromfile(str(path_prefix) + ".bin", dtype=head["dtype"])
        return cls(space, vals.reshape(head["shape"]), support)


@dataclass
class VariationResult:
    total: float
    density: np.ndarray
    method: str


@dataclass
class ApproxLimits:
    points: np.ndarray
    lower: np.ndarray        # u-wedge
    upper: np.ndarray        # u-vee
    representative: np.ndarray
    jump: np.ndarray         # upper - lower > jump_tol
    inconclusive: np.ndarray
    jump_tol: float


@dataclass
class PoincareReport:
    balls: list
    constants: np.ndarray
    C: float
    lam: float
    violations: list = field(default_factory=list)


def _tent3(a: np.ndarray) -> np.ndarray:
    k = np.array([0.25, 0.5, 0.25])
    out = ndimage.convolve1d(a, k, axis=0, mode="nearest")
    return ndimage.convolve1d(out, k, axis=1, mode="nearest")


def tv_density(u: ScalarField) -> np.ndarray:
    """Per-cell contribution |grad u~| w h^2 of the mollified gradient."""
    space = u.space
    v = _tent3(u.extended())
    gx = np.empty_like(v)
    gy = np.empty_like(v)
    gx[:, 1:-1] = (v[:, 2:] - v[:, :-2]) / (2 * space.h)
    gx[:, 0] = (v[:, 1] - v[:, 0]) / space.h
    gx[:, -1] = (v[:, -1] - v[:, -2]) / space.h
    gy[1:-1, :] = (v[2:, :] - v[:-2, :]) / (2 * space.h)
    gy[0, :] = (v[1, :] - v[0, :]) / space.h
    gy[-1, :] = (v[-1, :] - v[-2, :]) / space.h
    out = np.hypot(gx, gy) * space.cell_mass
    if u.support is not None:
        out = np.where(u.support.inside, out, 0.0)
    return out


def _region_mask(u: ScalarField, region) -> np.ndarray:
    if region is None:
        return u.inside
    if isinstance(region, DomainMask):
        return region.inside
    return np.asarray(region, dtype=bool)


def _interface_variation(u: ScalarField, region: np.ndarray) -> np.ndarray:
    """Edge-counting perimeter density for indicator fields.

    Each 4-adjacent pair of support cells with differing values contributes
    an edge of length h weighted by the mean cell weight; half of the edge
    mass is booked on each side so region restriction stays symmetric.
    """
    if not u.is_indicator():
        raise ValueError("interface method needs an indicator field")
    space = u.space
    v = u.values > 0.5
    ins = u.inside
    out = np.zeros(space.shape)
    h, w = space.h, space.w
    for axis, sl_a, sl_b in (
        (0, (slice(1, None), slice(None)), (slice(None, -1), slice(None))),
        (1, (slice(None), slice(1, None)), (slice(None), slice(None, -1))),
    ):
        both = ins[sl_a] & ins[sl_b]
        diff = both & (v[sl_a] != v[sl_b])
        contrib = np.where(diff, 0.5 * (w[sl_a] + w[sl_b]) * h, 0.0)
        out[sl_a] += 0.5 * contrib
        out[sl_b] += 0.5 * contrib
    return out


def total_variation(u: ScalarField, region=None, method: str = "gradient") -> VariationResult:
    """||Du||(region) with the package gradient discretization (or exact edge
    counting for indicators)."""
    reg = _region_mask(u, region)
    if method == "gradient":
        dens = tv_density(u)
    elif method == "interface":
        dens = _interface_variation(u, u.inside)
    else:
        raise ValueError(f"unknown method {method!r}")
    return VariationResult(float(dens[reg].sum()), dens, method)


def perimeter(E, region=None, method: str = "gradient") -> float:
    """P(E, region) = ||D chi_E||(region).

    E may be a DomainMask or a boolean cell mask; when region is a
    DomainMask the indicator is treated as a function on that subdomain
    (its boundary portion shared with the region boundary does not count).
    """
    if isinstance(E, DomainMask):
        space, cells = E.space, E.inside
    else:
        raise ValueError("perimeter expects a DomainMask; wrap raw masks first")
    support = region if isinstance(region, DomainMask) else None
    u = ScalarField(space, cells.astype(np.float64), support)
    return total_variation(u, region=region, method=method).total


@dataclass
class CoareaReport:
    lhs: float
    rhs: float
    rel_gap: float
    levels: np.ndarray
    perimeters: np.ndarray


def coarea_check(u: ScalarField, region=None, n_levels: int = 64) -> CoareaReport:
    """Compare ||Du||(region) with the coarea integral of P({u > t}, region)."""
    if n_levels < 64:
        raise ValueError("need at least 64 levels")
    reg = _region_mask(u, region)
    lhs = total_variation(u, region).total
    vals = u.values[u.inside]
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo <= 0:
        return CoareaReport(lhs, 0.0, abs(lhs), np.array([]), np.array([]))
    pad = 1e-9 * (hi - lo)
    levels = np.linspace(lo + pad, hi - pad, n_levels)
    per = np.empty(n_levels)
    for i, t in enumerate(levels):
        Et = ScalarField(u.space, (u.values > t).astype(np.float64), u.support)
        per[i] = total_variation(Et, region).total
    rhs = float(np.trapezoid(per, levels))
    # the level integrand extends to the range endpoints as a constant
    rhs += per[0] * (levels[0] - lo) + per[-1] * (hi - levels[-1])
    gap = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return CoareaReport(lhs, rhs, gap, levels, per)


def approx_limits(u: ScalarField, points, radii, ambient: DomainMask | None = None,
                  jump_tol: float | None = None, depth: int = 20,
                  theta: float = 0.05) -> ApproxLimits:
    """Approximate lower/upper limits by bisection on level-set densities.

    u-wedge(x) = sup{t : density of {u < t} at the finest radius < theta},
    u-vee dually; representative = midpoint.  Flagged inconclusive when the
    two finest radii disagree grossly at the decision level.
    """
    space = u.space
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.sort(np.asarray(radii, dtype=float))
    if jump_tol is None:
        jump_tol = 0.05 * u.value_range()
    amb = ambient.inside if ambient is not None else u.inside
    pref_amb = row_prefix(space.cell_mass * amb)
    m_amb = np.stack([ball_sums(space, pref_amb, points, r) for r in radii[:2]])
    if np.any(m_amb[0] <= 0):
        raise ValueError("no interior mass at resolution")
    vals = u.values[u.inside]
    lo0, hi0 = float(vals.min()), float(vals.max())
    span = max(hi0 - lo0, 1e-300)

    def density(level: np.ndarray, sign: int, r_idx: int) -> np.ndarray:
        # density of {u < level} (sign=+1) or {u > level} (sign=-1) per point
        dens = np.empty(len(points))
        for ip, p in enumerate(points):
            if sign > 0:
                cells = amb & (u.values < level[ip]) & u.inside
            else:
                cells = amb & (u.values > level[ip]) & u.inside
            pref = row_prefix(space.cell_mass * cells)
            dens[ip] = ball_sums(space, pref, [p], radii[r_idx])[0] / m_amb[r_idx][ip]
        return dens

    results = {}
    for sign, name in ((+1, "lower"), (-1, "upper")):
        a = np.full(len(points), lo0 - 1e-9 * span)
        b = np.full(len(points), hi0 + 1e-9 * span)
        for _ in range(depth):
            mid = 0.5 * (a + b)
            small = density(mid, sign, 0) < theta
            if sign > 0:
                a, b = np.where(small, mid, a), np.where(small, b, mid)
            else:
                b, a = np.where(small, mid, b), np.where(small, a, mid)
        results[name] = a if sign > 0 else b
        # cross-check the decision at the second radius
        if len(radii) > 1:
            d0 = density(results[name], sign, 0)
            d1 = density(results[name], sign, 1)
            results[name + "_flag"] = np.abs(d1 - d0) > 0.25
        else:
            results[name + "_flag"] = np.zeros(len(points), dtype=bool)
    lower, upper = results["lower"], results["upper"]
    # the two bisections can cross by a resolution quantum on smooth fields
    lower, upper = np.minimum(lower, upper), np.maximum(lower, upper)
    rep = 0.5 * (lower + upper)
    jump = (upper - lower) > jump_tol
    inconclusive = results["lower_flag"] | results["upper_flag"]
    return ApproxLimits(points, lower, upper, rep, jump, inconclusive, jump_tol)


def surface_density(E: DomainMask, points, radii, n_avg: int = 2):
    """theta_E(x) ~ P(E, B(x,r)) r / mu(B(x,r)) averaged over the finest radii.

    Returns (theta, ok) where ok flags points that carry interface mass at
    the finest radius (the precondition that x sits on the measure-theoretic
    boundary, checked rather than assumed).
    """
    space = E.space
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.sort(np.asarray(radii, dtype=float))
    dens = tv_density(ScalarField(space, E.inside.astype(float)))
    pref_d = row_prefix(dens)
    pref_E = row_prefix(space.cell_mass * E.inside)
    vals = np.zeros((min(n_avg, len(radii)), len(points)))
    ok = np.ones(len(points), dtype=bool)
    for k in range(vals.shape[0]):
        r = radii[k]
        P = ball_sums(space, pref_d, points, r)
        m = ball_sums(space, space.mass_prefix, points, r)
        mE = ball_sums(space, pref_E, points, r)
        frac = np.where(m > 0, mE / np.maximum(m, 1e-300), 0.0)
        ok &= (P > 0) & (frac > 0.05) & (frac < 0.95)
        vals[k] = np.where(m > 0, P * r / np.maximum(m, 1e-300), 0.0)
    return vals.mean(axis=0), ok


def poincare_BV_check(u: ScalarField, balls, lam: float = 2.0,
                      mask: DomainMask | None = None) -> PoincareReport:
    """Empirical constants of the (1,1)-Poincare inequality on the given balls.

    C(B) = [mean_B |u - u_B|] mu(lam B) / (r ||Du||(lam B)); averages are
    restricted to mask when given.  0/0 counts as 0; nonzero/0 is flagged.
    """
    space = u.space
    ins = u.inside if mask is None else (u.inside & mask.inside)
    pref_m = row_prefix(space.cell_mass * ins)
    pref_u = row_prefix(space.cell_mass * ins * u.values)
    dens = tv_density(u)
    pref_tv = row_prefix(dens * ins)
    consts = np.zeros(len(balls))
    violations = []
    for i, b in enumerate(balls):
        c, r = np.asarray([b.center]), b.radius
        m = ball_sums(space, pref_m, c, r)[0]
        if m <= 0:
            raise ValueError("degenerate sample")
        u_mean = ball_sums(space, pref_u, c, r)[0] / m
        pref_dev = row_prefix(space.cell_mass * ins * np.abs(u.values - u_mean))
        dev = ball_sums(space, pref_dev, c, r)[0] / m
        m_lam = ball_sums(space, pref_m, c, lam * r)[0]
        tv_lam = ball_sums(space, pref_tv, c, lam * r)[0]
        if tv_lam <= 0:
            if dev > 1e-12 * max(1.0, abs(u_mean)):
                violations.append((b, dev))
            consts[i] = 0.0
        else:
            consts[i] = dev * m_lam / (r * tv_lam)
    return PoincareReport(list(balls), consts, float(consts.max(initial=0.0)),
                          lam, violations)


def find_good_radius(space: GridSpace, x, i: int, C_d: float,
                     n_sub: int = 9, mask: DomainMask | None = None) -> float:
    """A radius r in [2^i, 2^(i+1)] with P(B(x,r)) <= C_d mu(B(x,r))/r.

    Scans n_sub dyadic subdivisions; raises "no good radius" if none passes.
    """
    X, Y = space.meshgrid()
    for t in np.linspace(0.0, 1.0, n_sub):
        r = (2.0 ** i) * (2.0 ** t)
        ball_set = (X - x[0]) ** 2 + (Y - x[1]) ** 2 < r * r
        if mask is not None:
            ball_set &= mask.inside
        if not ball_set.any():
            continue
        E = DomainMask(space, ball_set, "ball", {})
        P = perimeter(E)
        mu_val = float(space.cell_mass[ball_set].sum())
        if P <= C_d * mu_val / r:
            return float(r)
    raise ValueError("no good radius")
