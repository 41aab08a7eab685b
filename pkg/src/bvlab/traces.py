"""Boundary traces: estimation, existence/failure certificates, the zero-trace
class, zero extensions, and the L1 trace inequality.

A trace exists at x when averages of |u - c| over Omega cap B(x, r) vanish
along a geometric radius ladder.  At grid resolution "vanish" means: the
final average drops below a tolerance set by u's own cell-scale oscillation
near x, and the last three averages are nonincreasing up to 5% slack.
Failure is certified, not inferred: either every candidate constant from 33
local quantiles keeps the average above a floor at every radius, or the
plain ball averages run away with growing increments.  Everything in
between stays inconclusive.

The zero-trace check normalizes by mu(B(x, r)) over the full space, not by
mu(B cap Omega); domains that pinch at a boundary point can therefore carry
nonzero boundary values and still pass there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mmspace import GridSpace, ball_sums, ball_cells, row_prefix, estimate_doubling
from .domains import DomainMask
from .bvcalc import ScalarField, tv_density, total_variation
from . import hausdorff

__all__ = [
    "TraceResult",
    "ZeroExtension",
    "ZeroTraceReport",
    "radius_ladder",
    "trace_at",
    "trace_field",
    "trace_linearity_check",
    "zero_trace_check",
    "zero_extension",
    "l1_trace_inequality_check",
    "radon_boundary_lemma_check",
    "same_boundary_values",
    "trace_results_to_csv",
]

N_CANDIDATES = 33
CAUCHY_SLACK = 1.05
FAIL_FLOOR_FACTOR = 10.0
TOL_OSC_FACTOR = 3.0
GROWTH_MIN = 1.15


@dataclass
class TraceResult:
    point: tuple
    status: str                  # exists | fails | inconclusive
    value: float | None
    radii: np.ndarray
    diagnostics: np.ndarray      # avg over Omega cap B of |u - c*|
    averages: np.ndarray         # plain averages of u
    certificate: np.ndarray      # per radius, min over candidate c of avg|u - c|
    tol: float
    fail_floor: float
    lq_diagnostic: float | None = None
    q: float | None = None


@dataclass
class ZeroExtension:
    u_hat: ScalarField
    tv_interior: float
    tv_collar: float
    tv_exterior: float

    @property
    def total(self) -> float:
        return self.tv_interior + self.tv_collar + self.tv_exterior


@dataclass
class ZeroTraceReport:
    points: np.ndarray
    radii: np.ndarray
    ratios: np.ndarray           # (n_points, n_radii)
    tols: np.ndarray
    per_point: np.ndarray        # bool
    passed: bool


def radius_ladder(omega: DomainMask, r0: float | None = None) -> np.ndarray:
    """Geometric radii from about diam/8 down to exactly 4h.

    The top rung is diam/8 rounded down to a dyadic multiple of 4h, so the
    bottom rung (which sets the tolerance comparison) always sits at 4h.
    """
    space = omega.space
    if r0 is None:
        iy, ix = np.nonzero(omega.inside)
        dx = (ix.max() - ix.min()) * space.h
        dy = (iy.max() - iy.min()) * space.h
        r0 = float(np.hypot(dx, dy)) / 8.0
    base = 4 * space.h
    if r0 < base:
        raise ValueError("domain too small for the radius ladder (need diam >= 32h)")
    K = int(np.floor(np.log2(r0 / base)))
    return base * 2.0 ** np.arange(K, -1, -1)


def _oscillation_field(u: ScalarField) -> np.ndarray:
    """Cell oscillation: largest jump to a 4-neighbour, inside pairs only."""
    v, ins = u.values, u.inside
    osc = np.zeros(v.shape)
    for sl_a, sl_b in (((slice(1, None), slice(None)), (slice(None, -1), slice(None))),
                       ((slice(None), slice(1, None)), (slice(None), slice(None, -1)))):
        both = ins[sl_a] & ins[sl_b]
        d = np.where(both, np.abs(v[sl_a] - v[sl_b]), 0.0)
        osc[sl_a] = np.maximum(osc[sl_a], d)
        osc[sl_b] = np.maximum(osc[sl_b], d)
    return osc


def _gather(space: GridSpace, inside_flat, point, r):
    _, cells = ball_cells(space, [point], float(r))
    return cells[inside_flat[cells]]


def trace_at(u: ScalarField, omega: DomainMask, x, radii=None) -> TraceResult:
    """Classify the trace of u at boundary point x along the radius ladder."""
    space = omega.space
    radii = radius_ladder(omega) if radii is None else np.asarray(radii, dtype=float)
    inside_flat = omega.inside.ravel()
    vals_flat = u.values.ravel()
    w_flat = space.cell_mass.ravel()
    osc_flat = _oscillation_field(u).ravel()

    cells_per_r = [_gather(space, inside_flat, x, r) for r in radii]
    nonempty = [k for k, c in enumerate(cells_per_r) if len(c)]
    if not nonempty:
        raise ValueError("no interior mass at resolution")
    k_min = nonempty[-1]
    fine = cells_per_r[k_min]
    wf = w_flat[fine]
    c_star = float(np.average(vals_flat[fine], weights=wf))
    tol = TOL_OSC_FACTOR * float(np.average(osc_flat[fine], weights=wf))
    floor = FAIL_FLOOR_FACTOR * tol

    n = len(radii)
    diag = np.full(n, np.nan)
    avgs = np.full(n, np.nan)
    cert = np.full(n, np.nan)
    all_vals = vals_flat[cells_per_r[nonempty[0]]]
    cands = np.quantile(all_vals, np.linspace(0.0, 1.0, N_CANDIDATES))
    for k in nonempty:
        cells = cells_per_r[k]
        v, w = vals_flat[cells], w_flat[cells]
        wsum = w.sum()
        avgs[k] = (v * w).sum() / wsum
        diag[k] = (np.abs(v - c_star) * w).sum() / wsum
        cert[k] = (np.abs(v[:, None] - cands[None, :]) * w[:, None]).sum(axis=0).min() / wsum

    live = [k for k in nonempty]
    d_live = diag[live]
    # Runaway averages are a divergence certificate in their own right and
    # must win over the within-tolerance check: near a pole the oscillation
    # tolerance blows up together with the field, so "diag <= tol" says
    # nothing there.  Geometric growth of the increments over the three
    # finest rungs cannot come from a convergent average.
    inc = np.abs(np.diff(avgs[live]))
    spread = float(cands[-1] - cands[0])
    runaway = len(inc) >= 3 and inc[-1] > 0.02 * spread \
        and inc[-1] >= GROWTH_MIN * inc[-2] \
        and inc[-2] >= GROWTH_MIN * inc[-3]
    exists = d_live[-1] <= tol
    if len(d_live) >= 3:
        exists = exists and d_live[-1] <= d_live[-2] * CAUCHY_SLACK \
            and d_live[-2] <= d_live[-3] * CAUCHY_SLACK
    if runaway:
        status, value = "fails", None
    elif exists:
        status, value = "exists", c_star
    elif np.all(cert[live] >= floor) and floor > 0:
        status, value = "fails", None
    else:
        status, value = "inconclusive", None
    return TraceResult(tuple(np.asarray(x, dtype=float)), status, value,
                       radii, diag, avgs, cert, tol, floor)


def trace_field(u: ScalarField, omega: DomainMask, points, radii=None,
                q: float | None = None) -> list:
    """Traces at many boundary points, with the L^q variant reported.

    q defaults to Q/(Q-1) for the grid's fitted mass-bound exponent Q.
    Per-point errors are recorded as inconclusive results, not raised.
    """
    space = omega.space
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = radius_ladder(omega) if radii is None else np.asarray(radii, dtype=float)
    if q is None:
        rng = np.random.default_rng(7)
        iy, ix = np.nonzero(omega.inside)
        pick = rng.choice(len(iy), size=min(32, len(iy)), replace=False)
        samples = np.stack([space.xs[ix[pick]], space.ys[iy[pick]]], axis=1)
        try:
            Q = max(estimate_doubling(space, samples,
                                      [4 * space.h, 8 * space.h, 16 * space.h]).Q, 1.25)
        except ValueError:
            Q = 2.0
        q = Q / (Q - 1.0)
    inside_flat = omega.inside.ravel()
    vals_flat = u.values.ravel()
    w_flat = space.cell_mass.ravel()
    out = []
    for p in points:
        try:
            res = trace_at(u, omega, p, radii)
        except ValueError as exc:
            res = TraceResult(tuple(p), "inconclusive", None, radii,
                              np.full(len(radii), np.nan),
                              np.full(len(radii), np.nan),
                              np.full(len(radii), np.nan),
                              np.nan, np.nan)
            res.error = str(exc)
            out.append(res)
            continue
        if res.status == "exists":
            for r in radii[::-1]:
                cells = _gather(space, inside_flat, p, r)
                if len(cells):
                    v, w = vals_flat[cells], w_flat[cells]
                    lq = (np.abs(v - res.value) ** q * w).sum() / w.sum()
                    res.lq_diagnostic = float(lq ** (1.0 / q))
                    res.q = float(q)
                    break
        out.append(res)
    return out


def trace_linearity_check(u: ScalarField, v: ScalarField, omega: DomainMask,
                          points, a: float = 1.0, b: float = 1.0,
                          radii=None) -> dict:
    """|T(au+bv) - (aTu + bTv)| <= 2 tol at points where all three exist."""
    w = ScalarField(u.space, a * u.values + b * v.values, omega)
    ru = trace_field(u, omega, points, radii)
    rv = trace_field(v, omega, points, radii)
    rw = trace_field(w, omega, points, radii)
    devs, tols, used = [], [], 0
    for tu, tv_, tw in zip(ru, rv, rw):
        if "exists" == tu.status == tv_.status == tw.status:
            devs.append(abs(tw.value - (a * tu.value + b * tv_.value)))
            tols.append(2.0 * max(tw.tol, a * tu.tol + b * tv_.tol))
            used += 1
    devs, tols = np.asarray(devs), np.asarray(tols)
    ok = bool(np.all(devs <= tols)) if used else True
    return {"ok": ok, "checked": used, "max_dev": float(devs.max()) if used else 0.0,
            "devs": devs, "tols": tols}


def zero_trace_check(u: ScalarField, omega: DomainMask | None = None,
                     points=None, radii=None) -> ZeroTraceReport:
    """Vanishing of int_{B cap Omega} |u| dmu / mu(B(x, r)) at boundary samples.

    The normalizer is the full-space ball mass.  Passing at every sample is
    the discrete stand-in for membership in the zero-trace class.
    """
    omega = omega or u.support
    if omega is None:
        raise ValueError("field needs a support domain")
    space = omega.space
    radii = radius_ladder(omega) if radii is None else np.asarray(radii, dtype=float)
    if points is None:
        if omega.groups:
            points = np.concatenate(
                [omega.boundary_points(g, 16) for g in sorted(omega.groups)])
        else:
            iy, ix = np.nonzero(omega.boundary_cells)
            step = max(1, len(iy) // 64)
            points = np.stack([space.xs[ix[::step]], space.ys[iy[::step]]], axis=1)
    points = np.atleast_2d(np.asarray(points, dtype=float))

    pref_absu = row_prefix(np.abs(u.values) * space.cell_mass * omega.inside)
    pref_mass_omega = omega.mass_prefix
    osc = _oscillation_field(u)
    pref_osc = row_prefix(osc * space.cell_mass * omega.inside)

    n_p, n_r = len(points), len(radii)
    ratios = np.full((n_p, n_r), np.nan)
    m_omega = np.zeros((n_p, n_r))
    for k, r in enumerate(radii):
        num = ball_sums(space, pref_absu, points, r)
        den = ball_sums(space, space.mass_prefix, points, r)
        if np.any(den <= 0):
            raise ValueError("degenerate sample")
        ratios[:, k] = num / den
        m_omega[:, k] = ball_sums(space, pref_mass_omega, points, r)
    if np.any((m_omega > 0).sum(axis=1) == 0):
        raise ValueError("no interior mass at resolution")

    tols = np.zeros(n_p)
    per_point = np.zeros(n_p, dtype=bool)
    for i in range(n_p):
        fin = np.nonzero(m_omega[i] > 0)[0]
        k_fin = fin[-1]
        r_fin = radii[k_fin]
        osum = ball_sums(space, pref_osc, points[i:i + 1], r_fin)[0]
        tols[i] = TOL_OSC_FACTOR * osum / m_omega[i, k_fin]
        seq = ratios[i]
        ok = seq[-1] <= tols[i]
        if n_r >= 3:
            ok = ok and seq[-1] <= seq[-3] * CAUCHY_SLACK
        per_point[i] = ok
    return ZeroTraceReport(points, radii, ratios, tols, per_point,
                           bool(per_point.all()))


def zero_extension(u: ScalarField, omega: DomainMask | None = None,
                   collar_cells: int = 2) -> ZeroExtension:
    """Extend by zero and split the extension's variation across a boundary
    collar: interior, collar (2 cells to each side), exterior."""
    omega = omega or u.support
    if omega is None:
        raise ValueError("field needs a support domain")
    space = omega.space
    u_hat = ScalarField(space, np.where(omega.inside, u.values, 0.0))
    dens = tv_density(u_hat)
    from scipy import ndimage
    d_in = omega.dist_inside
    d_out = ndimage.distance_transform_edt(~omega.inside) * space.h
    eps = 0.5 * space.h
    collar = ((omega.inside & (d_in <= collar_cells * space.h + eps))
              | (~omega.inside & (d_out <= collar_cells * space.h + eps)))
    interior = omega.inside & ~collar
    exterior = ~omega.inside & ~collar
    return ZeroExtension(u_hat,
                         float(dens[interior].sum()),
                         float(dens[collar].sum()),
                         float(dens[exterior].sum()))


def l1_trace_inequality_check(corpus, omega: DomainMask, points,
                              content_R: float | None = None) -> dict:
    """Empirical C_T in int_bdry |Tu| dH <= C_T (||u||_L1 + ||Du||(Omega)).

    The boundary integral weights each sample by the greedy-cover content
    of its share of the boundary (every cover ball's mass mu(B)/r goes to
    the nearest sample).
    """
    space = omega.space
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if content_R is None:
        content_R = 16 * space.h
    sol = hausdorff.content_HR(space, omega.boundary_cells, content_R)
    from scipy.spatial import cKDTree
    from .mmspace import mu_ball
    tree = cKDTree(points)
    weights = np.zeros(len(points))
    for b in sol.balls:
        _, j = tree.query(b.center)
        weights[j] += mu_ball(space, b) / b.radius
    ratios, excluded = [], []
    for name, u in corpus:
        res = trace_field(u, omega, points)
        if any(r.status != "exists" for r in res):
            excluded.append(name)
            continue
        tu = np.array([r.value for r in res])
        lhs = float((weights * np.abs(tu)).sum())
        den = u.l1_norm() + total_variation(u).total
        if den <= 0:
            continue
        ratios.append((name, lhs / den))
    C_T = max((r for _, r in ratios), default=0.0)
    return {"C_T": C_T, "ratios": ratios, "excluded": excluded,
            "H_boundary": sol.content, "weights": weights}


def radon_boundary_lemma_check(nu: np.ndarray, omega: DomainMask, points,
                               radii=None, threshold: float = 0.5) -> dict:
    """Fraction of boundary samples where limsup_r r nu(B cap Omega)/mu(B)
    exceeds the threshold; vanishes under refinement for finite nu."""
    space = omega.space
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = radius_ladder(omega) if radii is None else np.asarray(radii, dtype=float)
    pref_nu = row_prefix(np.asarray(nu, dtype=float) * omega.inside)
    sup = np.zeros(len(points))
    for r in radii:
        nuB = ball_sums(space, pref_nu, points, float(r))
        muB = ball_sums(space, space.mass_prefix, points, float(r))
        sup = np.maximum(sup, r * nuB / np.maximum(muB, 1e-300))
    frac = float((sup > threshold).mean())
    return {"fraction": frac, "sup_values": sup, "threshold": threshold}


def same_boundary_values(u: ScalarField, f: ScalarField, omega: DomainMask,
                         points=None, radii=None) -> bool:
    """u and f share boundary values iff u - f passes the zero-trace check."""
    diff = ScalarField(u.space, u.values - f.values, omega)
    return zero_trace_check(diff, omega, points, radii).passed


def trace_results_to_csv(results, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "status", "value", "final_avg"])
        for r in results:
            fin = r.diagnostics[np.isfinite(r.diagnostics)]
            w.writerow([f"{r.point[0]:.12g}", f"{r.point[1]:.12g}", r.status,
                        "" if r.value is None else f"{r.value:.12g}",
                        "" if not len(fin) else f"{fin[-1]:.12g}"])
