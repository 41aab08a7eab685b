"""Whitney-type ball covers, partitions of unity, and discrete convolutions.

Ball radii follow the rule r_j = min{dist(x_j, complement)/(20 lambda), R}.
Centers are chosen per dyadic radius level on a cell lattice of pitch 2^m
(offset 2^(m-1)), which puts every cell of the level strictly within
0.71 * 2^m h of a selected node; stragglers whose lattice node misses the
level are swept up afterwards in raster order.  Cells whose distance-driven
radius falls below the tip floor of 4h cannot carry a resolvable ball and
are kept as reported singletons: the partition of unity gives them their
own cell so downstream convolutions reproduce the function there.

All cover invariants are re-verified numerically on every build; the
comparability check exploits the dyadic stratification so it stays
exhaustive without enumerating same-level pairs (whose radius ratio is
below 2 by construction).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .mmspace import GridSpace, Ball, ball_sums, ball_cells, row_prefix, _row_range
from .domains import DomainMask, shrink_domain
from .bvcalc import ScalarField, tv_density, total_variation

__all__ = [
    "WhitneyCover",
    "PartitionOfUnity",
    "DiscreteConvolution",
    "build_cover",
    "verify_cover",
    "partition_of_unity",
    "discrete_convolution",
    "boundary_chain_check",
    "pasted_approximation",
    "truncate",
    "truncation_tail",
    "compact_support_approximation",
]

TIP_FLOOR_CELLS = 4


@dataclass
class WhitneyCover:
    domain: DomainMask
    centers: np.ndarray          # (n, 2)
    radii: np.ndarray            # (n,)
    levels: np.ndarray           # (n,) dyadic level floor(log2(r/h))
    center_cells: np.ndarray     # (n,) flat cell index of each center
    singleton_cells: np.ndarray  # flat indices of tip cells kept as singletons
    scale_R: float
    lam: float
    overlap_C0: int
    meets_scale_pre: bool
    n_swept: int

    @property
    def space(self) -> GridSpace:
        return self.domain.space

    @property
    def n_balls(self) -> int:
        return len(self.radii)

    def balls(self):
        return [Ball(tuple(c), float(r)) for c, r in zip(self.centers, self.radii)]

    def to_json(self) -> dict:
        return {
            "scale_R": None if np.isinf(self.scale_R) else self.scale_R,
            "lambda": self.lam,
            "centers": [[float(a), float(b)] for a, b in self.centers],
            "radii": [float(r) for r in self.radii],
            "overlap_C0": int(self.overlap_C0),
            "n_singletons": int(len(self.singleton_cells)),
            "meets_scale_pre": bool(self.meets_scale_pre),
        }


@dataclass
class PartitionOfUnity:
    """Sparse phi_j, CSR over the cover's balls then its singleton cells."""
    cover: WhitneyCover
    indptr: np.ndarray
    cells: np.ndarray
    phi: np.ndarray
    lipschitz_C: float

    @property
    def lipschitz_bounds(self) -> np.ndarray:
        r_single = np.full(len(self.cover.singleton_cells), self.cover.space.h / 2)
        return self.lipschitz_C / np.concatenate([self.cover.radii, r_single])


@dataclass
class DiscreteConvolution:
    u_W: ScalarField
    cover: WhitneyCover
    upper_gradient: np.ndarray
    ball_means: np.ndarray
    gradient_mass_ratio: float


def _paint_balls(space: GridSpace, centers, radii, values=None) -> np.ndarray:
    """Sum of values[j] * chi_{B_j} on the grid via row-range difference adds."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    cx, cy = centers[:, 0], centers[:, 1]
    r = np.broadcast_to(np.asarray(radii, dtype=np.float64), cx.shape)
    vals = None if values is None else np.broadcast_to(
        np.asarray(values, dtype=np.float64), cx.shape)
    h, (x0, y0) = space.h, space.origin
    diff = np.zeros((space.ny, space.nx + 1),
                    dtype=np.int64 if values is None else np.float64)
    jlo, jhi, ok = _row_range(cy - r, cy + r, y0, h, space.ny)
    nrows = np.where(ok, jhi - jlo + 1, 0)
    for k in range(int(nrows.max()) if len(nrows) else 0):
        act = np.nonzero(k < nrows)[0]
        j = jlo[act] + k
        dy = space.ys[j] - cy[act]
        s = np.sqrt(np.maximum(r[act] ** 2 - dy * dy, 0.0))
        ilo, ihi, iok = _row_range(cx[act] - s, cx[act] + s, x0, h, space.nx)
        act, j, ilo, ihi = act[iok], j[iok], ilo[iok], ihi[iok]
        v = 1 if vals is None else vals[act]
        np.add.at(diff, (j, ilo), v)
        np.add.at(diff, (j, ihi + 1), -v)
    return np.cumsum(diff[:, :-1], axis=1)


def build_cover(omega: DomainMask, R: float, lam: float = 2.0) -> WhitneyCover:
    """Whitney-type covering of omega at scale R with dilation parameter lam."""
    space = omega.space
    h = space.h
    if not omega.inside.any():
        raise ValueError("empty domain")
    if lam < 1.0:
        raise ValueError("lambda must be >= 1")
    if R < h:
        raise ValueError("scale below resolution (need R >= h)")
    d = omega.dist_inside
    formula = d / (20.0 * lam)
    singleton = omega.inside & (formula < TIP_FLOOR_CELLS * h)
    proper = omega.inside & ~singleton
    r_field = np.minimum(formula, R)

    iy, ix = np.nonzero(proper)
    radii_all = r_field[iy, ix]
    lev_all = np.floor(np.log2(radii_all / h)).astype(np.int64)
    sel_iy, sel_ix = [], []
    for m in np.unique(lev_all):
        p = 1 << int(m)
        on_level = lev_all == m
        if p == 1:
            keep = on_level
        else:
            off = p // 2
            keep = on_level & (iy % p == off) & (ix % p == off)
        sel_iy.append(iy[keep])
        sel_ix.append(ix[keep])
    sel_iy = np.concatenate(sel_iy) if sel_iy else np.zeros(0, dtype=np.int64)
    sel_ix = np.concatenate(sel_ix) if sel_ix else np.zeros(0, dtype=np.int64)
    centers = np.stack([space.xs[sel_ix], space.ys[sel_iy]], axis=1) \
        if len(sel_iy) else np.zeros((0, 2))
    radii = r_field[sel_iy, sel_ix]

    counts = _paint_balls(space, centers, radii) if len(radii) else \
        np.zeros(space.shape, dtype=np.int64)
    covered = counts > 0

    # raster sweep: any proper cell left uncovered becomes its own center
    extra_iy, extra_ix = [], []
    leftover = np.flatnonzero((proper & ~covered).ravel())
    covered_flat = covered.ravel()
    for flat in leftover:
        if covered_flat[flat]:
            continue
        cy_i, cx_i = divmod(int(flat), space.nx)
        extra_iy.append(cy_i)
        extra_ix.append(cx_i)
        c = np.array([[space.xs[cx_i], space.ys[cy_i]]])
        _, cells = ball_cells(space, c, r_field[cy_i, cx_i])
        covered_flat[cells] = True
    n_swept = len(extra_iy)
    if n_swept:
        e_iy = np.asarray(extra_iy, dtype=np.int64)
        e_ix = np.asarray(extra_ix, dtype=np.int64)
        centers = np.concatenate(
            [centers, np.stack([space.xs[e_ix], space.ys[e_iy]], axis=1)])
        radii = np.concatenate([radii, r_field[e_iy, e_ix]])
        sel_iy = np.concatenate([sel_iy, e_iy])
        sel_ix = np.concatenate([sel_ix, e_ix])

    levels = np.floor(np.log2(radii / h)).astype(np.int64) if len(radii) \
        else np.zeros(0, dtype=np.int64)
    dil = _paint_balls(space, centers, 5.0 * lam * radii) if len(radii) else \
        np.zeros(space.shape, dtype=np.int64)
    s_iy, s_ix = np.nonzero(singleton)
    if len(s_iy):
        s_centers = np.stack([space.xs[s_ix], space.ys[s_iy]], axis=1)
        dil += _paint_balls(space, s_centers, 5.0 * lam * h / 2)
    overlap_C0 = int(dil[omega.inside].max(initial=0))

    cover = WhitneyCover(
        domain=omega,
        centers=centers,
        radii=radii,
        levels=levels,
        center_cells=sel_iy * space.nx + sel_ix,
        singleton_cells=np.flatnonzero(singleton.ravel()),
        scale_R=float(R),
        lam=float(lam),
        overlap_C0=overlap_C0,
        meets_scale_pre=bool(R >= 8 * h * 20 * lam),
        n_swept=n_swept,
    )
    verify_cover(cover)
    return cover


def verify_cover(cover: WhitneyCover) -> dict:
    """Re-check the four cover invariants; raises AssertionError on defect."""
    omega, space, lam = cover.domain, cover.space, cover.lam
    h = space.h
    d = omega.dist_inside
    flat_d = d.ravel()

    # (2) radius rule, exact
    d_at = flat_d[cover.center_cells]
    want = np.minimum(d_at / (20.0 * lam), cover.scale_R)
    assert np.array_equal(cover.radii, want), "radius rule violated"

    # (4) distance of 2B_j to the complement: d(x_j) >= 20 lam r_j implies
    # dist(2B_j, complement) >= d(x_j) - 2 r_j >= 18 lam r_j
    assert np.all(d_at >= 20.0 * lam * cover.radii - 1e-12), \
        "dilated ball too close to the complement"

    # (1) covering: proper balls plus singleton cells reach every inside cell
    counts = _paint_balls(space, cover.centers, cover.radii) \
        if cover.n_balls else np.zeros(space.shape, dtype=np.int64)
    covered = counts.ravel() > 0
    covered[cover.singleton_cells] = True
    assert covered[omega.inside.ravel()].all(), "cover misses cells"

    # (3) comparability across touching dilations; same-level ratios are
    # below 2 by dyadic construction, so only cross-level pairs need looking at
    pairs_checked = 0
    if cover.n_balls:
        levels = np.unique(cover.levels)
        trees = {int(m): cKDTree(cover.centers[cover.levels == m]) for m in levels}
        idx = {int(m): np.nonzero(cover.levels == m)[0] for m in levels}
        for a in levels:
            for b in levels[levels < a]:
                ra = cover.radii[idx[int(a)]]
                rb = cover.radii[idx[int(b)]]
                reach = 5.0 * lam * (ra.max() + rb.max())
                hits = trees[int(a)].query_ball_tree(trees[int(b)], reach)
                for ja, jbs in enumerate(hits):
                    if not jbs:
                        continue
                    jbs = np.asarray(jbs)
                    dist = np.hypot(
                        *(cover.centers[idx[int(a)][ja]] - trees[int(b)].data[jbs]).T)
                    touching = dist < 5.0 * lam * (ra[ja] + rb[jbs])
                    if touching.any():
                        ratio = ra[ja] / rb[jbs][touching]
                        assert ratio.max() <= 2.0 and (1.0 / ratio).max() <= 2.0, \
                            "touching balls with incomparable radii"
                        pairs_checked += int(touching.sum())
    return {"covering": True, "radius_rule": True, "dist_rule": True,
            "comparability_pairs": pairs_checked, "overlap_C0": cover.overlap_C0}


def _chunks(n: int, size: int):
    for a in range(0, n, size):
        yield slice(a, min(a + size, n))


def _pou_entries(cover: WhitneyCover):
    """CSR triples (ball -> cell, psi) over 2B_j, then singleton own-cells."""
    space = cover.space
    nx = space.nx
    ent_ptr = [0]
    ent_cells, ent_psi = [], []
    # keep roughly 4M expanded cells in flight per chunk
    per_ball = np.maximum((2 * cover.radii / space.h) ** 2 * np.pi / 4, 1.0)
    mean_cells = float(per_ball.mean()) if per_ball.size else 1.0
    for sl in _chunks(cover.n_balls, max(1, int(4e6 / max(mean_cells, 1.0)))):
        indptr, cells = ball_cells(space, cover.centers[sl], 2.0 * cover.radii[sl])
        lens = np.diff(indptr)
        cx = np.repeat(cover.centers[sl, 0], lens)
        cy = np.repeat(cover.centers[sl, 1], lens)
        rr = np.repeat(cover.radii[sl], lens)
        dist = np.hypot(space.xs[cells % nx] - cx, space.ys[cells // nx] - cy)
        psi = np.clip(2.0 - dist / rr, 0.0, 1.0)
        ent_cells.append(cells)
        ent_psi.append(psi)
        base = ent_ptr[-1]
        ent_ptr.extend((base + indptr[1:]).tolist())
    base = ent_ptr[-1]
    ent_ptr.extend(range(base + 1, base + 1 + len(cover.singleton_cells)))
    ent_cells.append(cover.singleton_cells)
    ent_psi.append(np.ones(len(cover.singleton_cells)))
    return (np.asarray(ent_ptr, dtype=np.int64),
            np.concatenate(ent_cells) if ent_cells else np.zeros(0, np.int64),
            np.concatenate(ent_psi) if ent_psi else np.zeros(0))


def partition_of_unity(cover: WhitneyCover, lipschitz_samples: int = 256) -> PartitionOfUnity:
    space = cover.space
    indptr, cells, psi = _pou_entries(cover)
    Z = np.zeros(space.nx * space.ny)
    np.add.at(Z, cells, psi)
    inside_flat = cover.domain.inside.ravel()
    if not (Z[inside_flat] > 0).all():
        raise ValueError("cover defect: cell with empty partition normalizer")
    phi = psi / Z[cells]
    check = np.zeros_like(Z)
    np.add.at(check, cells, phi)
    assert np.abs(check[inside_flat] - 1.0).max() < 1e-12

    # shared empirical Lipschitz constant: max over sampled balls of Lip(phi_j) r_j
    lip_C = 0.0
    n_proper = cover.n_balls
    step = max(1, n_proper // lipschitz_samples)
    for j in range(0, n_proper, step):
        sl = slice(indptr[j], indptr[j + 1])
        if sl.stop - sl.start < 2:
            continue
        c = cells[sl]
        ys, xs = c // space.nx, c % space.nx
        y0, x0 = ys.min(), xs.min()
        win = np.zeros((ys.max() - y0 + 2, xs.max() - x0 + 2))
        win[ys - y0, xs - x0] = phi[sl]
        lip = max(np.abs(np.diff(win, axis=0)).max(),
                  np.abs(np.diff(win, axis=1)).max()) / space.h
        lip_C = max(lip_C, lip * cover.radii[j])
    return PartitionOfUnity(cover, indptr, cells, phi, lip_C)


def discrete_convolution(u: ScalarField, cover: WhitneyCover,
                         pou: PartitionOfUnity | None = None) -> DiscreteConvolution:
    """u_W = sum_j (ball average of u over B_j) phi_j, plus its upper gradient."""
    space = cover.space
    if u.space is not space and u.space.shape != space.shape:
        raise ValueError("field and cover live on different grids")
    if pou is None:
        pou = partition_of_unity(cover)
    mass_u = row_prefix(space.cell_mass * u.values)
    m_ball = ball_sums(space, space.mass_prefix, cover.centers, cover.radii) \
        if cover.n_balls else np.zeros(0)
    s_ball = ball_sums(space, mass_u, cover.centers, cover.radii) \
        if cover.n_balls else np.zeros(0)
    means = np.concatenate([s_ball / m_ball, u.values.ravel()[cover.singleton_cells]])

    vals = np.zeros(space.nx * space.ny)
    lens = np.diff(pou.indptr)
    np.add.at(vals, pou.cells, pou.phi * np.repeat(means, lens))
    u_W = ScalarField(space, vals.reshape(space.shape), u.support or cover.domain)

    dens = tv_density(u)
    pref_tv = row_prefix(dens)
    g = np.zeros(space.shape)
    if cover.n_balls:
        tv5 = ball_sums(space, pref_tv, cover.centers, 5.0 * cover.lam * cover.radii)
        g += _paint_balls(space, cover.centers, cover.radii, tv5 / m_ball)
    if len(cover.singleton_cells):
        s_cells = cover.singleton_cells
        s_centers = np.stack([space.xs[s_cells % space.nx],
                              space.ys[s_cells // space.nx]], axis=1)
        tv5s = ball_sums(space, pref_tv, s_centers, 5.0 * cover.lam * space.h / 2)
        np.add.at(g.reshape(-1), s_cells,
                  tv5s / space.cell_mass.ravel()[s_cells])
    g = np.where(cover.domain.inside, g, 0.0)
    tv_total = float(dens[cover.domain.inside].sum())
    g_mass = float((g * space.cell_mass)[cover.domain.inside].sum())
    ratio = g_mass / tv_total if tv_total > 0 else 0.0
    return DiscreteConvolution(u_W, cover, g, means, ratio)


@dataclass
class ChainReport:
    points: np.ndarray
    radii: np.ndarray
    constants: np.ndarray   # (n_points, n_radii), nan where both sides vanish
    C: float
    flagged: list


def boundary_chain_check(u: ScalarField, conv: DiscreteConvolution,
                         points, radii) -> ChainReport:
    """Per-sample constants of avg_{B cap Omega}|u - u_W| against
    r ||Du||(B(x,2r) cap Omega) / mu(B(x,r))."""
    cover = conv.cover
    space = cover.space
    inside = cover.domain.inside
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.asarray(radii, dtype=float)
    dev = np.abs(u.values - conv.u_W.values) * space.cell_mass * inside
    pref_dev = row_prefix(dev)
    pref_tv = row_prefix(tv_density(u) * inside)
    consts = np.full((len(points), len(radii)), np.nan)
    flagged = []
    for k, r in enumerate(radii):
        lhs = ball_sums(space, pref_dev, points, r)
        muB = ball_sums(space, space.mass_prefix, points, r)
        rhs = r * ball_sums(space, pref_tv, points, 2.0 * r)
        for i in range(len(points)):
            if rhs[i] <= 0:
                if lhs[i] / max(muB[i], 1e-300) > 1e-12:
                    flagged.append((tuple(points[i]), float(r)))
                continue
            consts[i, k] = lhs[i] / rhs[i]
    C = float(np.nanmax(consts)) if np.isfinite(consts).any() else 0.0
    return ChainReport(points, radii, consts, C, flagged)


@dataclass
class PastedReport:
    fields: list
    l1_gaps: np.ndarray
    tv_gaps: np.ndarray
    g_mass: np.ndarray      # mass of the Leibniz upper gradient, per cover
    eta: np.ndarray
    tv_u: float


def pasted_approximation(u: ScalarField, covers, delta: float,
                         anchor_x) -> PastedReport:
    """Cutoff-glued convolution sequence eta u + (1 - eta) u_W per cover.

    eta = max{0, 1 - (4/delta) dist(y, Omega_{delta/2} cap B(x, 2/delta))},
    so the approximants keep u's own values deep inside and hand over to the
    discrete convolution towards the boundary.  Each pasted field carries the
    Leibniz upper gradient (4/delta)|u - u_W| + eta g_u + (1 - eta) g_W whose
    mass should drop to the variation of u as the collar shrinks, unlike the
    convolution's own gradient mass which carries the cover overlap constant.
    """
    omega = u.support
    if omega is None:
        raise ValueError("field needs a support domain")
    space = u.space
    if delta < 8 * space.h:
        raise ValueError("delta below resolution (need delta >= 8h)")
    core = shrink_domain(omega, delta / 2.0)
    X, Y = space.meshgrid()
    G = core.inside & (np.hypot(X - anchor_x[0], Y - anchor_x[1]) < 2.0 / delta)
    if not G.any():
        raise ValueError("over-shrunk")
    D = ndimage.distance_transform_edt(~G) * space.h
    eta = np.clip(1.0 - 4.0 * D / delta, 0.0, 1.0)
    tv_u = total_variation(u).total
    dens_u = tv_density(u)
    ramp = (eta > 0.0) & (eta < 1.0) & omega.inside
    fields, l1g, tvg, gm = [], [], [], []
    for cov in covers:
        conv = discrete_convolution(u, cov)
        v = conv.u_W
        w = ScalarField(space, eta * u.values + (1.0 - eta) * v.values, omega)
        fields.append(w)
        l1g.append(ScalarField(space, np.abs(w.values - u.values), omega).l1_norm())
        tvg.append(abs(total_variation(w).total - tv_u) / max(tv_u, 1e-300))
        cut = (4.0 / delta) * np.abs(u.values - v.values) * space.cell_mass
        gm.append(float(cut[ramp].sum()
                        + (eta * dens_u)[omega.inside].sum()
                        + ((1.0 - eta) * conv.upper_gradient
                           * space.cell_mass)[omega.inside].sum()))
    return PastedReport(fields, np.asarray(l1g), np.asarray(tvg),
                        np.asarray(gm), eta, tv_u)


def truncate(u: ScalarField, n: float) -> ScalarField:
    if n <= 0:
        raise ValueError("truncation level must be positive")
    return u.with_values(np.clip(u.values, -n, n))


def truncation_tail(u: ScalarField, n: float, n_levels: int = 64) -> float:
    """Coarea tail: integral of P({u > t}, Omega) over levels beyond [-n, n]."""
    vals = u.values[u.inside]
    tail = 0.0
    for lo, hi in ((n, float(vals.max())), (float(vals.min()), -n)):
        if hi - lo <= 0:
            continue
        pad = 1e-9 * (hi - lo)
        levels = np.linspace(lo + pad, hi - pad, n_levels)
        per = [total_variation(
            ScalarField(u.space, (u.values > t).astype(float), u.support)).total
            for t in levels]
        tail += float(np.trapezoid(per, levels))
    return tail


@dataclass
class CompactSupportReport:
    field: ScalarField
    delta: float
    scale: float
    l1_gap: float
    tv_gap: float
    bv_norm: float
    support_ok: bool
    target: float | None
    target_met: bool


def compact_support_approximation(u: ScalarField, eps: float | None = None,
                                  delta: float | None = None,
                                  scale: float | None = None,
                                  lam: float = 1.0) -> CompactSupportReport:
    """Approximate a zero-trace field by one supported inside Omega_delta.

    Builds w = eta_delta u + (1 - eta_delta) zeta v with v a discrete
    convolution, eta_delta and zeta both vanishing on the delta-collar, and
    reports the achieved L1 and TV gaps (the eps target is advisory).
    """
    omega = u.support
    if omega is None:
        raise ValueError("field needs a support domain")
    from .traces import zero_trace_check
    space = u.space
    h = space.h
    if np.abs(u.values).max() == 0.0:
        zero = u.with_values(np.zeros(space.shape))
        return CompactSupportReport(zero, 0.0, 0.0, 0.0, 0.0, 0.0, True, eps, True)
    ztc = zero_trace_check(u)
    if not ztc.passed:
        raise ValueError("not in BV0")
    delta = max(8 * h, delta) if delta is not None else 8 * h
    scale = max(h, scale) if scale is not None else max(h, delta / 2.0)
    d = omega.dist_inside
    eta = np.clip((d - delta) / delta, 0.0, 1.0)
    zeta = np.clip((d - delta) / (delta / 4.0), 0.0, 1.0)
    cov = build_cover(omega, scale, lam=lam)
    v = discrete_convolution(u, cov).u_W
    w_vals = eta * u.values + (1.0 - eta) * zeta * v.values
    w = ScalarField(space, w_vals, omega)
    support_ok = bool(np.all(w.values[d <= delta] == 0.0))
    l1_gap = ScalarField(space, np.abs(w.values - u.values), omega).l1_norm()
    tv_gap = abs(total_variation(w).total - total_variation(u).total)
    bv_norm = u.l1_norm() + total_variation(u).total
    met = eps is not None and l1_gap <= eps and tv_gap <= eps
    return CompactSupportReport(w, float(delta), float(scale), l1_gap, tv_gap,
                                bv_norm, support_ok, eps, bool(met))
