"""BV capacity and relative capacity on weighted grids.

The capacity of a cell set A is the least BV norm among fields equal to 1
on a one-cell neighbourhood of A; the relative variant fixes an ambient
ball B, forces competitors to vanish outside 2B, and drops the L1 term.
Each value is computed by two independent routes and the smaller one wins:

* a parametric scan over level sets of the distance function to A (with
  truncated-cone profiles alongside, as a cross-check the coarea argument
  says they can never beat), and
* a first-order primal-dual minimization of the discrete total variation
  under the box and pinning constraints, followed by a coarea rounding
  step that evaluates every level set of the relaxed iterate.

Candidates from both routes are priced with the package's own
total-variation functional, never with the solver's internal energy, so
the two methods are directly comparable and a shallow solver state cannot
inflate a reported value.

The module also hosts the two capacitary inequality checks: the Mazya-type
bound (both the cap_BV and the relative-capacity variant) and the
measure-largeness Sobolev inequality, which trades the capacity of the
zero set for its measure fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .bvcalc import ScalarField, total_variation
from .mmspace import Ball, GridSpace, estimate_doubling

MAX_ITERS = 2000
GAP_TOL = 1e-4
GAP_EVERY = 25
N_SCAN = 24
N_ROUND_LEVELS = 33
ZERO_SET_RTOL = 1e-9
Q_FLOOR = 1.25


@dataclass
class CapacityValue:
    kind: str                 # "cap_BV" | "rcap_BV"
    value: float
    minimizer: ScalarField    # feasible certificate; value re-priced from it
    method: str               # "parametric" | "variational"
    parametric: float
    variational: float | None
    iterations: int
    gap: float

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "method": self.method,
            "parametric": self.parametric,
            "variational": self.variational,
            "iterations": self.iterations,
            "gap": self.gap,
        }


@dataclass
class MazyaReport:
    ball: Ball
    lam: float
    Q: float
    q: float
    q_floored: bool
    lhs: float
    tv_wide: float            # ||Du||(2 lambda B)
    zero_cells: int
    vacuous: bool
    flagged: bool
    cap: float | None = None
    rcap: float | None = None
    const_cap: float | None = None
    const_rcap: float | None = None


def _bv_value(space: GridSpace, values: np.ndarray, kind: str) -> float:
    u = ScalarField(space, np.asarray(values, dtype=np.float64))
    tv = total_variation(u).total
    if kind == "cap_BV":
        return tv + float((np.abs(u.values) * space.cell_mass).sum())
    return tv


def _pin_masks(space: GridSpace, A: np.ndarray, kind: str, B: Ball | None,
               neighborhood: bool):
    if kind not in ("cap_BV", "rcap_BV"):
        raise ValueError(f"unknown capacity kind {kind!r}")
    pinned = ndimage.binary_dilation(A, np.ones((3, 3), bool)) if neighborhood else A
    out = None
    if kind == "rcap_BV":
        if B is None:
            raise ValueError("relative capacity needs an ambient ball")
        big = Ball(B.center, 2.0 * B.radius)
        if not space.contains_ball(big):
            raise ValueError("infeasible: 2B exceeds the grid")
        X, Y = space.meshgrid()
        out = np.hypot(X - big.center[0], Y - big.center[1]) >= big.radius
        if (pinned & out).any():
            raise ValueError("infeasible: the set reaches the complement of 2B")
    return pinned, out


def _parametric(space: GridSpace, pinned: np.ndarray, out: np.ndarray | None,
                kind: str):
    h = space.h
    d = ndimage.distance_transform_edt(~pinned) * h
    best_v = _bv_value(space, pinned.astype(np.float64), kind)
    best_f = pinned.astype(np.float64)
    if out is not None:
        s_max = float(d[out].min()) - h
    else:
        s_max = 0.25 * min(space.extent)
    if s_max > 2 * h:
        for s in np.geomspace(2 * h, s_max, N_SCAN):
            flat = (d < s) | pinned
            if out is not None and (flat & out).any():
                continue
            for cand in (flat.astype(np.float64),
                         np.clip(1.0 - d / s, 0.0, 1.0)):
                if out is not None:
                    cand = np.where(out, 0.0, cand)
                v = _bv_value(space, cand, kind)
                if v < best_v:
                    best_v, best_f = v, cand
    return best_v, best_f


def _solve_primal_dual(space: GridSpace, pinned: np.ndarray,
                       out: np.ndarray | None, kind: str,
                       iters: int, gap_tol: float):
    """Primal-dual iteration for min TV(+L1) over the pinned box.

    The operator is the unit-step forward difference (norm^2 <= 8), the
    per-cell dual radius h*w carries the metric, and the duality gap uses
    the exact dual value of the linear-over-box problem, so the stopping
    test is a true certificate.
    """
    h = space.h
    alpha = (space.cell_mass / h).astype(np.float32)   # = w * h
    c = (space.cell_mass if kind == "cap_BV"
         else np.zeros(space.shape)).astype(np.float32)
    free = ~pinned if out is None else ~(pinned | out)

    u = pinned.astype(np.float32)
    ubar = u.copy()
    px = np.zeros_like(u)
    py = np.zeros_like(u)
    step = np.float32(1.0 / np.sqrt(8.0))

    def energy(f):
        gx = np.zeros_like(f)
        gy = np.zeros_like(f)
        gx[:, :-1] = f[:, 1:] - f[:, :-1]
        gy[:-1, :] = f[1:, :] - f[:-1, :]
        tv = float((alpha.astype(np.float64) * np.hypot(gx, gy)).sum())
        return tv + float((c.astype(np.float64) * f).sum())

    e0 = max(energy(u), 1e-12)
    it_done, gap = 0, np.inf
    for k in range(iters):
        px[:, :-1] += step * (ubar[:, 1:] - ubar[:, :-1])
        px[:, -1] = 0.0
        py[:-1, :] += step * (ubar[1:, :] - ubar[:-1, :])
        py[-1, :] = 0.0
        mag = np.hypot(px, py)
        np.maximum(mag, 1e-30, out=mag)
        shrink = np.minimum(np.float32(1.0), alpha / mag)
        px *= shrink
        py *= shrink

        div = np.zeros_like(u)
        div[:, 0] = px[:, 0]
        div[:, 1:] = px[:, 1:] - px[:, :-1]
        div[0, :] += py[0, :]
        div[1:, :] += py[1:, :] - py[:-1, :]

        u_prev = u
        u = np.clip(u + step * (div - c), 0.0, 1.0)
        u[pinned] = 1.0
        if out is not None:
            u[out] = 0.0
        ubar = 2.0 * u - u_prev
        it_done = k + 1

        if it_done % GAP_EVERY == 0 or it_done == iters:
            g = (c - div).astype(np.float64)           # K^T p + c
            dual = float(g[pinned].sum()) + float(np.minimum(0.0, g[free]).sum())
            gap = energy(u) - dual
            if gap < gap_tol * e0:
                break
    return u.astype(np.float64), it_done, float(gap)


def _round_by_coarea(space: GridSpace, u_var: np.ndarray, pinned: np.ndarray,
                     out: np.ndarray | None, kind: str):
    """Price the relaxed iterate and each of its level sets; keep the best.

    Every level set contains the pinned cells and respects the outer zero
    constraint, so each candidate is feasible on its own.
    """
    best_v = _bv_value(space, u_var, kind)
    best_f = u_var
    for t in np.linspace(0.0, 1.0, N_ROUND_LEVELS + 2)[1:-1]:
        E = (u_var > t) | pinned
        if out is not None:
            E &= ~out
        cand = E.astype(np.float64)
        v = _bv_value(space, cand, kind)
        if v < best_v:
            best_v, best_f = v, cand
    return best_v, best_f


def capacity(space: GridSpace, A, kind: str = "cap_BV", B: Ball | None = None,
             *, neighborhood: bool = True, iters: int = MAX_ITERS,
             gap_tol: float = GAP_TOL, variational: bool = True) -> CapacityValue:
    """Capacity of the cell set A, by parametric scan and TV minimization.

    kind "cap_BV" prices competitors by TV plus L1 mass; "rcap_BV" uses TV
    alone and needs the ambient ball B (competitors vanish outside 2B).
    ``neighborhood=False`` pins A itself instead of its one-cell dilation
    (the compact-set relaxation).
    """
    A = np.asarray(A, dtype=bool)
    if A.shape != tuple(space.shape):
        raise ValueError("mask shape does not match the grid")
    if not A.any():
        zero = ScalarField(space, np.zeros(space.shape))
        return CapacityValue(kind, 0.0, zero, "parametric", 0.0, None, 0, 0.0)
    pinned, out = _pin_masks(space, A, kind, B, neighborhood)

    par_v, par_f = _parametric(space, pinned, out, kind)
    var_v, it_done, gap = None, 0, 0.0
    if variational:
        u_var, it_done, gap = _solve_primal_dual(space, pinned, out, kind,
                                                 iters, gap_tol)
        var_v, var_f = _round_by_coarea(space, u_var, pinned, out, kind)
    if var_v is not None and var_v < par_v:
        value, field, method = var_v, var_f, "variational"
    else:
        value, field, method = par_v, par_f, "parametric"
    return CapacityValue(kind, value, ScalarField(space, field), method,
                         par_v, var_v, it_done, gap)


def cap_BV(space: GridSpace, A, **kw) -> CapacityValue:
    return capacity(space, A, "cap_BV", **kw)


def rcap_BV(space: GridSpace, A, ambient: Ball, **kw) -> CapacityValue:
    return capacity(space, A, "rcap_BV", ambient, **kw)


def representative_and_jump(u: ScalarField, jump_tol: float | None = None):
    """Midpoint representative and jump cells from 3x3 extremal filters.

    The window minimum and maximum stand in for the lower and upper
    approximate limits at cell scale; their midpoint is the precise
    representative and a window spread above jump_tol marks a jump cell.
    """
    lo = ndimage.minimum_filter(u.values, size=3, mode="nearest")
    hi = ndimage.maximum_filter(u.values, size=3, mode="nearest")
    if jump_tol is None:
        jump_tol = 0.05 * float(np.ptp(u.values))
    jump = (hi - lo) > jump_tol if jump_tol > 0 else np.zeros(u.values.shape, bool)
    return 0.5 * (lo + hi), jump


def _local_Q(space: GridSpace, B: Ball) -> tuple[float, bool]:
    radii = np.geomspace(max(4 * space.h, B.radius / 8), B.radius, 5)
    try:
        Q = estimate_doubling(space, [B.center], radii).Q
    except ValueError:
        Q = 2.0
    return (Q_FLOOR, True) if Q < Q_FLOOR else (float(Q), False)


def _window(space: GridSpace, B: Ball, margin_cells: int = 8):
    """Sub-grid holding 2B plus a margin; the weight stays in absolute
    coordinates, so the slice carries the same measure."""
    h = space.h
    R = 2.0 * B.radius + margin_cells * h
    ix0 = max(0, int(np.floor((B.center[0] - R - space.origin[0]) / h)))
    ix1 = min(space.nx, int(np.ceil((B.center[0] + R - space.origin[0]) / h)))
    iy0 = max(0, int(np.floor((B.center[1] - R - space.origin[1]) / h)))
    iy1 = min(space.ny, int(np.ceil((B.center[1] + R - space.origin[1]) / h)))
    sub = GridSpace((space.origin[0] + ix0 * h, space.origin[1] + iy0 * h),
                    ((ix1 - ix0) * h, (iy1 - iy0) * h), h, space.weight)
    return sub, (slice(iy0, iy1), slice(ix0, ix1))


def mazya_check(u: ScalarField, B: Ball, lam: float = 2.0,
                Q: float | None = None, iters: int = MAX_ITERS) -> MazyaReport:
    """Both capacitary Sobolev bounds for u on the ball B.

    lhs = (avg over 2B of |u|^q)^(1/q) with q = Q/(Q-1); the zero set S is
    the exact-zero part of the representative away from jump cells.  The
    report carries the empirical constants lhs*cap/((r+1)*TV) and
    lhs*rcap/TV.  S cap B empty makes the bound vacuous (the capacity factor
    vanishes, so no constant is tested); TV = 0 with a nonzero lhs on a
    non-vacuous sample is a flagged violation.
    """
    space = u.space
    if Q is None:
        Q, q_floored = _local_Q(space, B)
    else:
        Q, q_floored = (Q_FLOOR, True) if Q < Q_FLOOR else (float(Q), False)
    q = Q / (Q - 1.0)

    u_tilde, jump = representative_and_jump(u)
    rng = float(np.ptp(u.values))
    S = (np.abs(u_tilde) <= ZERO_SET_RTOL * max(rng, 1.0)) & ~jump

    X, Y = space.meshgrid()
    dist = np.hypot(X - B.center[0], Y - B.center[1])
    in_B = dist < B.radius
    in_2B = dist < 2.0 * B.radius
    in_wide = dist < 2.0 * lam * B.radius
    SB = S & in_B

    mass = space.cell_mass
    mu_2B = float(mass[in_2B].sum())
    lhs = float(((np.abs(u.values[in_2B]) ** q * mass[in_2B]).sum()
                 / mu_2B) ** (1.0 / q))
    tv_wide = total_variation(u, region=in_wide).total

    vacuous = not SB.any()
    report = MazyaReport(B, lam, Q, q, q_floored, lhs, tv_wide,
                         int(SB.sum()), vacuous=vacuous,
                         flagged=bool(not vacuous and tv_wide <= 0
                                      and lhs > 1e-12))
    if report.vacuous:
        return report

    sub, sl = _window(space, B)
    cap = capacity(sub, SB[sl], "cap_BV", iters=iters)
    rcap = capacity(sub, SB[sl], "rcap_BV", B, iters=iters)
    report.cap = cap.value
    report.rcap = rcap.value
    if tv_wide > 0:
        report.const_cap = lhs * cap.value / ((B.radius + 1.0) * tv_wide)
        report.const_rcap = lhs * rcap.value / tv_wide
    return report


def measure_largeness_sobolev_check(u: ScalarField, B: Ball, lam: float = 2.0,
                                    Q: float | None = None) -> dict:
    """Empirical constant in the Sobolev bound with the zero-set measure
    factor (1 - (mu(A)/mu(B))^(1/Q))^(-1), A = {|u| > 0} within B."""
    space = u.space
    if Q is None:
        Q, _ = _local_Q(space, B)
    q = Q / (Q - 1.0)
    X, Y = space.meshgrid()
    dist = np.hypot(X - B.center[0], Y - B.center[1])
    in_B = dist < B.radius
    in_wide = dist < 2.0 * lam * B.radius
    mass = space.cell_mass
    A = in_B & (np.abs(u.values) > 0)
    mu_A = float(mass[A].sum())
    mu_B = float(mass[in_B].sum())
    if mu_A >= mu_B * (1.0 - 1e-12):
        raise ValueError("degenerate (no zero set)")
    lhs = float(((np.abs(u.values[in_B]) ** q * mass[in_B]).sum()
                 / mu_B) ** (1.0 / q))
    tv = total_variation(u, region=in_wide).total
    mu_wide = float(mass[in_wide].sum())
    factor = 1.0 / (1.0 - (mu_A / mu_B) ** (1.0 / Q))
    rhs_core = B.radius * factor * tv / mu_wide
    C = lhs / rhs_core if rhs_core > 0 else (0.0 if lhs <= 1e-15 else np.inf)
    return {"C": C, "lhs": lhs, "factor": factor, "tv_wide": tv,
            "mu_A": mu_A, "mu_B": mu_B, "Q": Q, "q": q}
