"""Named experiment catalog tying the laboratory together.

Every checkable claim the package cares about has a slug in CLAIMS, and every
experiment declares which claims it covers.  ``run`` executes one experiment
and emits a deterministic JSON report (schema ``bvlab-report/1``): no wall
clock, sorted keys, seeded randomness, so two runs of the same config are
byte-identical.  ``regress`` replays golden reports and compares numeric
fields using the tolerances stored in the reports themselves.  ``coverage``
is the gate that no claim is left without an experiment.

Report records carry a ``claim`` slug or the string "plumbing"; ``passed`` is
True/False for checks and None for purely informational records.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import bvcalc, capacity, domains, hausdorff, semmes, traces, whitney
from .bvcalc import ScalarField, coarea_check, total_variation, tv_density
from .domains import DomainMask, make_domain, parse_domain_spec
from .mmspace import Ball, GridSpace, estimate_doubling, mu_ball, row_prefix

SCHEMA = "bvlab-report/1"

# --------------------------------------------------------------------------
# claim registry: one slug per checkable statement handled by the laboratory

CLAIMS = {
    "weighted-ball-measure-law": "mu(B(0,r)) = 2 pi r under the |x|^-1 weight",
    "cusp-ball-mass-bound": "mu(B(0,r) cap cusp) <= r^2 under the |x|^-1 weight",
    "point-content-dichotomy": "H({0}) stays above 2pi/C while the zero-extended content vanishes",
    "doubling-constant": "mu(2B) <= C_d mu(B) with a finite empirical C_d",
    "mass-exponent": "iterated doubling gives mu(B')/mu(B) >= c (r'/r)^Q",
    "codim1-content": "codimension-1 content H_R via inf of sum mu(B_i)/r_i over covers",
    "codim1-measure": "H = lim of H_R as the scale R decreases (monotone in R)",
    "measure-theoretic-boundary": "boundary points where the set and its complement keep density",
    "density-set-bounds": "interface densities sit inside the two-sided density band",
    "surface-density": "P(E, B(x,r)) r / mu(B) approximates the surface density theta_E",
    "total-variation": "grid total variation matches closed-form perimeters and gradients",
    "bv-space": "the BV norm ||u||_L1 + ||Du|| is finite and splits as expected",
    "coarea-formula": "||Du|| equals the integral of level-set perimeters",
    "approximate-limits": "upper and lower approximate limits bracket the jump",
    "jump-set": "the jump set concentrates on the discontinuity interface",
    "poincare-bv": "mean oscillation on a ball controlled by r ||Du||(2B)",
    "trace-definition": "the trace is the limit of solid ball averages over Omega",
    "trace-theorem-power": "traces are q-integrable on the boundary, q = Q/(Q-1)",
    "trace-h-ae-upgrade": "measure density pushes trace existence to H-a.e. boundary point",
    "slit-disk-dichotomy": "Arg has convergent averages but no trace on the slit, a trace on the arc",
    "cantor-complement-example": "Cantor-square complement: traces exist yet boundary content diverges",
    "snowflake-boundary-divergence": "von Koch prefix content grows without bound as the scale drops",
    "interior-cusp-exceptional-set": "interior cusp keeps both conditions and an a.e. trace",
    "measure-density-condition": "mu(B cap Omega) >= c mu(B) at boundary points",
    "codim-boundary-condition": "H(B cap dOmega) <= C mu(B)/r at boundary points",
    "zero-extension-bound": "||u-hat||_BV(X) <= C ||u||_BV(Omega) under both conditions",
    "strip-perimeter-scaling": "strip perimeters in the cusp decay like 1/i^2",
    "extension-failure-strips": "full-plane strip perimeter outgrows the in-domain one linearly",
    "l1-trace-estimate": "boundary integral of |Tu| controlled by the BV norm",
    "l1-trace-necessity": "shrinking indicators break the L1 estimate on the unweighted cusp",
    "good-radius": "each dyadic range holds a radius with P(B) <= C mu(B)/r",
    "weak-zero-trace": "vanishing boundary averages characterise the zero-trace class",
    "radon-boundary-lemma": "the set where r nu(B cap Omega)/mu(B) stays large is content-null",
    "whitney-cover-properties": "cover radii, covering, comparability and distance rules hold",
    "partition-of-unity": "the subordinate partition sums to one with Lipschitz control",
    "discrete-convolution": "ball-average smoothing converges in L1 with a bounded gradient ratio",
    "chain-estimate": "averaged |u - u_W| bounded by r ||Du||(2B)/mu(B) with one constant",
    "pasted-approximation": "cutoff-glued smoothings approximate in L1 with controlled variation",
    "truncation-tail": "the BV gap of a truncation equals the coarea tail",
    "compact-support-density": "zero-trace fields approximated by compactly supported ones",
    "zero-extension-theorem": "zero extension of a zero-trace field carries no boundary variation",
    "bv-capacity": "cap_BV as constrained minimization of the BV norm",
    "relative-capacity": "rcap_BV with support pinned inside the double ball",
    "capacity-comparability": "set pinning and neighborhood pinning give comparable capacities",
    "mazya-inequality": "both capacitary trace inequalities hold with one constant",
    "measure-largeness-sobolev": "Sobolev inequality with the measure-largeness factor",
    "semmes-family": "curve-family occupation bounded by the two-pole kernel energy",
    "riesz-kernel-bound": "pencil kernel dominates (1/8) z_1^{-2} in the parabola regime",
}


# --------------------------------------------------------------------------
# report plumbing


@dataclass
class CheckRecord:
    name: str
    claim: str
    passed: bool | None
    lhs: float | None = None
    rhs: float | None = None
    constant: float | None = None
    tol: float | None = None
    note: str = ""

    def to_json(self) -> dict:
        def num(v):
            return None if v is None else float(v)
        return {
            "name": self.name,
            "claim": self.claim,
            "passed": self.passed,
            "lhs": num(self.lhs),
            "rhs": num(self.rhs),
            "constant": num(self.constant),
            "tol": num(self.tol),
            "note": self.note,
        }


@dataclass
class Report:
    experiment: str
    config: dict
    checks: list
    artifacts: list

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "experiment": self.experiment,
            "config": self.config,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "artifacts": list(self.artifacts),
        }

    def write(self, out_dir) -> str:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{self.experiment}.report.json")
        blob = json.dumps(self.to_json(), sort_keys=True, indent=1)
        tmp = path + ".tmp"
        with open(tmp, "w") as f:
            f.write(blob + "\n")
        os.replace(tmp, path)
        return path


class ArtifactSink:
    """Collects CSV artifacts; writes them only when a directory is given,
    but always records their names so reports do not depend on --out."""

    def __init__(self, out_dir=None):
        self.out_dir = out_dir
        self.names = []

    def csv(self, name: str, header, rows) -> None:
        self.names.append(name)
        if self.out_dir is None:
            return
        os.makedirs(self.out_dir, exist_ok=True)
        with open(os.path.join(self.out_dir, name), "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for row in rows:
                w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def rec(out: list, name: str, claim: str, passed, lhs=None, rhs=None,
        constant=None, tol=None, note="") -> None:
    if claim != "plumbing" and claim not in CLAIMS:
        raise KeyError(f"unknown claim {claim!r}")
    # numpy bools break json encoding and `is False` checks downstream
    passed = passed if passed is None else bool(passed)
    out.append(CheckRecord(name, claim, passed, lhs, rhs, constant, tol, note))


# --------------------------------------------------------------------------
# function catalog


def catalog_function(name: str, omega: DomainMask) -> ScalarField:
    """Build a named field on a domain.

    Names: constant, coordinate (alias coord_x), coord_y, tent, arg,
    inv_sqrt, quadratic, sine, gauss, half_x, half_y, disk_indicator,
    ring_indicator, or ``csv:<path>`` for a saved field.
    """
    space = omega.space
    if name.startswith("csv:"):
        return ScalarField.from_csv(name[4:], space, omega)
    X, Y = space.meshgrid()
    iy, ix = np.nonzero(omega.inside)
    cx = 0.5 * (space.xs[ix.min()] + space.xs[ix.max()])
    cy = 0.5 * (space.ys[iy.min()] + space.ys[iy.max()])
    wx = (space.xs[ix.max()] - space.xs[ix.min()])
    r_clip = np.maximum(np.hypot(X, Y), space.h / 2)
    table = {
        "constant": lambda: np.ones(space.shape),
        "coordinate": lambda: X,
        "coord_x": lambda: X,
        "coord_y": lambda: Y,
        "tent": lambda: omega.dist_inside,
        "arg": lambda: np.mod(np.arctan2(Y, X), 2 * np.pi),
        "inv_sqrt": lambda: 1.0 / np.sqrt(r_clip),
        "quadratic": lambda: (X - cx) ** 2 + (Y - cy) ** 2,
        "sine": lambda: np.sin(2 * np.pi * X) * np.cos(np.pi * Y),
        "gauss": lambda: np.exp(-8.0 * ((X - cx) ** 2 + (Y - cy) ** 2) / wx ** 2),
        "half_x": lambda: (X > cx).astype(float),
        "half_y": lambda: (Y > cy).astype(float),
        "disk_indicator": lambda: (np.hypot(X - cx, Y - cy) < 0.25 * wx).astype(float),
        "ring_indicator": lambda: ((np.hypot(X - cx, Y - cy) > 0.15 * wx)
                                   & (np.hypot(X - cx, Y - cy) < 0.35 * wx)).astype(float),
    }
    try:
        vals = table[name]()
    except KeyError:
        raise KeyError(f"unknown function {name!r}") from None
    return ScalarField(space, np.where(omega.inside, vals, 0.0), omega)


def _corpus(omega: DomainMask, names) -> list:
    return [(n, catalog_function(n, omega)) for n in names]


def _weight(cfg) -> tuple:
    w = cfg.get("weight", ["constant", 1.0])
    return (str(w[0]), float(w[1]))


def _domain(cfg, key="domain") -> DomainMask:
    return parse_domain_spec(cfg[key], float(cfg["h"]), _weight(cfg))


# --------------------------------------------------------------------------
# experiment runners


def _run_measure_calibration(cfg, out, sink):
    h = float(cfg["h"])
    g = GridSpace((-0.625, -0.625), (1.25, 1.25), h, ("power", -1.0))
    radii = np.asarray(cfg["radii"], dtype=float)
    mus = np.array([mu_ball(g, Ball((0.0, 0.0), r)) for r in radii])
    oracle = 2 * np.pi * radii
    err = float(np.abs(mus / oracle - 1.0).max())
    rec(out, "ball_measure_vs_2pir", "weighted-ball-measure-law",
        err <= cfg["tol_measure"], lhs=err, rhs=0.0, tol=cfg["tol_measure"],
        note=f"max relative error over {len(radii)} radii")
    sink.csv("measure_law.csv", ["r", "mu_ball", "oracle"],
             [(float(r), float(m), float(o)) for r, m, o in zip(radii, mus, oracle)])

    centers = [(0.3, 0.3), (-0.2, 0.4), (0.25, -0.25), (0.05, 0.05)]
    rep = estimate_doubling(g, centers, np.asarray([0.02, 0.04, 0.08, 0.16]))
    rec(out, "doubling_constant_weighted", "doubling-constant",
        np.isfinite(rep.C_d) and rep.C_d <= cfg["max_Cd"],
        constant=rep.C_d, tol=cfg["max_Cd"])
    rec(out, "mass_exponent_weighted", "mass-exponent",
        1.0 <= rep.Q <= 3.0, constant=rep.Q, tol=3.0,
        note="fitted exponent, planar weighted target near 2")

    sq = make_domain("unit_square", h=h)
    rep2 = estimate_doubling(sq.space, [(0.5, 0.5), (0.3, 0.6)],
                             np.asarray([0.02, 0.04, 0.08, 0.16]))
    rec(out, "doubling_constant_flat", "doubling-constant",
        abs(rep2.C_d - 4.0) <= 0.5, constant=rep2.C_d, rhs=4.0, tol=0.5,
        note="unweighted plane doubles area by 4")

    cusp = make_domain("exterior_cusp", h=h, weight=("power", -1.0))
    for r in cfg["cusp_radii"]:
        m = mu_ball(cusp.space, Ball((0.0, 0.0), float(r)), mask=cusp.inside)
        rec(out, f"cusp_mass_r={r:g}", "cusp-ball-mass-bound",
            m <= (1.0 + cfg["tol_mass"]) * r * r, lhs=m, rhs=float(r) ** 2,
            tol=cfg["tol_mass"], note="mu(B cap Omega) against r^2")


def _run_cusp_H_vs_Hbar(cfg, out, sink):
    h = float(cfg["h"])
    cusp = make_domain("exterior_cusp", h=h, weight=("power", -1.0))
    space = cusp.space
    target = np.zeros(space.shape, dtype=bool)
    jx = int(np.argmin(np.abs(space.xs)))
    jy = int(np.argmin(np.abs(space.ys)))
    target[jy, jx] = True

    scales = [4 * h * 2.0 ** k for k in range(int(cfg["n_scales"]))]
    est = hausdorff.measure_H(space, target, scales)
    est_bar = hausdorff.measure_H(space, target, scales, mask=cusp.inside)
    vals = np.asarray(est.values)
    vals_bar = np.asarray(est_bar.values)
    rec(out, "H_point_lower", "point-content-dichotomy",
        float(vals.min()) >= cfg["H_min"], lhs=float(vals.min()),
        rhs=cfg["H_min"], tol=cfg["H_min"], note="oracle 2 pi up to cover slack")
    rec(out, "Hbar_point_upper", "point-content-dichotomy",
        float(vals_bar.min()) <= cfg["Hbar_max"], lhs=float(vals_bar.min()),
        rhs=cfg["Hbar_max"], tol=cfg["Hbar_max"],
        note="zero-extended content at the smallest feasible scale")
    # scales come back largest first; shrinking R restricts the covers, so
    # the content can only grow along the sequence
    mono = bool(np.all(np.diff(vals) >= -1e-9 * (1 + np.abs(vals[:-1]))))
    rec(out, "content_monotone_in_R", "codim1-content", mono,
        lhs=float(vals[0]), rhs=float(vals[-1]), tol=0.0)
    rec(out, "H_limit_positive", "codim1-measure",
        est.extrapolated >= cfg["H_min"] and not est.divergent,
        constant=est.extrapolated, tol=cfg["H_min"])
    sink.csv("content_scales.csv", ["R", "H_R_full", "H_R_cusp"],
             [(float(s), float(a), float(b))
              for s, a, b in zip(est.scales, vals, vals_bar)])


def _run_slit_disk_trace(cfg, out, sink):
    h = float(cfg["h"])
    omega = make_domain("slit_disk", h=h)
    u = catalog_function("arg", omega)
    n = int(cfg["n_points"])

    slit = omega.boundary_points("slit", n)
    res_s = traces.trace_field(u, omega, slit)
    avg_err = max(abs(r.averages[-1] - np.pi) for r in res_s)
    cert_min = min(float(np.nanmin(r.certificate)) for r in res_s)
    n_exists = sum(r.status == "exists" for r in res_s)
    rec(out, "slit_averages_to_pi", "slit-disk-dichotomy",
        avg_err <= cfg["tol_avg"], lhs=avg_err, rhs=0.0, tol=cfg["tol_avg"],
        note="plain ball averages at the slit converge to pi")
    rec(out, "slit_certificate_floor", "slit-disk-dichotomy",
        cert_min >= cfg["cert_min"], lhs=cert_min, rhs=cfg["cert_min"],
        tol=cfg["cert_min"], note="min over candidate constants of avg|u-c|")
    rec(out, "slit_no_trace", "slit-disk-dichotomy", n_exists == 0,
        lhs=float(n_exists), rhs=0.0, tol=0.0)

    arc = omega.boundary_points("arc", n)
    res_a = traces.trace_field(u, omega, arc)
    ok = [r.status == "exists" for r in res_a]
    val_err = max((abs(r.value - np.mod(np.arctan2(p[1], p[0]), 2 * np.pi))
                   for r, p in zip(res_a, arc) if r.status == "exists"),
                  default=np.inf)
    rec(out, "arc_traces_exist", "trace-definition", all(ok),
        lhs=float(sum(ok)), rhs=float(n), tol=0.0)
    rec(out, "arc_value_matches_arg", "slit-disk-dichotomy",
        val_err <= cfg["tol_avg"], lhs=val_err, rhs=0.0, tol=cfg["tol_avg"])
    traces.trace_results_to_csv(list(res_s) + list(res_a), _sink_path(sink, "slit_traces.csv"))


def _sink_path(sink: ArtifactSink, name: str):
    """Register a CSV that a module writer produces itself."""
    sink.names.append(name)
    if sink.out_dir is None:
        return os.devnull
    os.makedirs(sink.out_dir, exist_ok=True)
    return os.path.join(sink.out_dir, name)


def _run_boundary_density_suite(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    space = sq.space
    X, _ = space.meshgrid()
    E = DomainMask(space, sq.inside & (X < 0.5), "left_half")
    radii = np.asarray([4 * h, 8 * h, 16 * h])

    # at the finest radius only the interface tube carries two-sided density
    btm = domains.measure_theoretic_boundary(E, [4 * h], ambient=sq)
    jy, jx = np.nonzero(btm.cells)
    on_interface = np.abs(space.xs[jx] - 0.5) <= 5 * h
    rec(out, "boundary_cells_on_interface", "measure-theoretic-boundary",
        len(jy) >= 100 and bool(np.all(on_interface)),
        lhs=float(len(jy) - on_interface.sum()), rhs=0.0,
        constant=float(len(jy)), tol=0.0,
        note="every detected cell sits within 5h of {x=1/2}")

    pts = np.stack([np.full(8, 0.5), np.linspace(0.2, 0.8, 8)], axis=1)
    m_E = np.array([mu_ball(space, Ball(tuple(p), 8 * h), mask=E.inside) for p in pts])
    m_B = np.array([mu_ball(space, Ball(tuple(p), 8 * h), mask=sq.inside) for p in pts])
    dens = m_E / m_B
    rec(out, "interface_density_band", "density-set-bounds",
        bool(np.all((dens > 0.35) & (dens < 0.65))),
        lhs=float(dens.min()), rhs=float(dens.max()), tol=0.15,
        note="two-sided density near 1/2 along the interface")

    theta, okq = bvcalc.surface_density(E, pts, radii)
    oracle = 2.0 / np.pi
    err = float(np.abs(theta[okq] / oracle - 1.0).max()) if okq.any() else np.inf
    rec(out, "surface_density_flat", "surface-density",
        err <= cfg["tol_theta"], lhs=err, rhs=0.0, constant=oracle,
        tol=cfg["tol_theta"], note="flat interface oracle 2/pi")
    sink.csv("surface_density.csv", ["x", "y", "theta"],
             [(float(p[0]), float(p[1]), float(t)) for p, t in zip(pts, theta)])


def _run_tv_calibration(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    disk = make_domain("disk", h=h, radius=1.0)

    per_g = bvcalc.perimeter(disk, method="gradient")
    per_i = bvcalc.perimeter(disk, method="interface")
    rec(out, "disk_perimeter_gradient", "total-variation",
        abs(per_g / (2 * np.pi) - 1.0) <= cfg["tol_smooth"],
        lhs=per_g, rhs=2 * np.pi, tol=cfg["tol_smooth"])
    rec(out, "disk_perimeter_interface", "total-variation",
        1.15 <= per_i / (2 * np.pi) <= 1.40, lhs=per_i, rhs=2 * np.pi,
        constant=per_i / (2 * np.pi), tol=0.4,
        note="edge counting overshoots a circle by about 4/pi")

    ux = catalog_function("coordinate", sq)
    tvx = total_variation(ux).total
    rec(out, "gradient_field_unit", "total-variation",
        abs(tvx - 1.0) <= cfg["tol_smooth"], lhs=tvx, rhs=1.0,
        tol=cfg["tol_smooth"], note="||Du|| of x on the unit square")

    tent = catalog_function("tent", sq)
    tvt = total_variation(tent).total
    rec(out, "tent_variation", "total-variation",
        abs(tvt - 1.0) <= 0.05, lhs=tvt, rhs=1.0, tol=0.05,
        note="distance tent has unit gradient a.e.")

    for name, u in (("coordinate", ux), ("tent", tent)):
        bv = u.l1_norm() + total_variation(u).total
        rec(out, f"bv_norm_{name}", "bv-space", np.isfinite(bv),
            lhs=u.l1_norm(), rhs=total_variation(u).total, constant=bv, tol=1e3)


def _run_coarea_gallery(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    worst = 0.0
    for name in cfg["smooth"]:
        rep = coarea_check(catalog_function(name, sq))
        worst = max(worst, rep.rel_gap)
        rec(out, f"coarea_{name}", "coarea-formula",
            rep.rel_gap <= cfg["tol_smooth"], lhs=rep.lhs, rhs=rep.rhs,
            constant=rep.rel_gap, tol=cfg["tol_smooth"])
    for name in cfg["indicators"]:
        rep = coarea_check(catalog_function(name, sq))
        rec(out, f"coarea_{name}", "coarea-formula",
            rep.rel_gap <= 1e-6, lhs=rep.lhs, rhs=rep.rhs,
            constant=rep.rel_gap, tol=1e-6,
            note="single-level indicator integrates exactly")


def _run_jump_set_demo(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    half = catalog_function("half_x", sq)
    pts = np.stack([np.full(6, 0.5), np.linspace(0.25, 0.75, 6)], axis=1)
    radii = np.asarray([4 * h, 8 * h, 16 * h])
    # the finest radius still sees slope*8h of oscillation on smooth fields,
    # so the jump cut must sit above that but far below the unit jump
    jtol = 0.1
    ap = bvcalc.approx_limits(half, pts, radii, ambient=sq, jump_tol=jtol)
    rec(out, "half_jump_flagged", "jump-set", bool(np.all(ap.jump)),
        lhs=float(ap.jump.sum()), rhs=float(len(pts)), tol=0.0)
    span_ok = np.all(ap.lower <= 0.2) and np.all(ap.upper >= 0.8)
    rec(out, "half_limits_bracket", "approximate-limits", bool(span_ok),
        lhs=float(ap.lower.max()), rhs=float(ap.upper.min()), tol=0.2,
        note="u-wedge near 0, u-vee near 1 across the interface")

    tent = catalog_function("tent", sq)
    inner = np.array([[0.4, 0.5], [0.6, 0.35], [0.3, 0.3]])
    ap2 = bvcalc.approx_limits(tent, inner, radii, ambient=sq, jump_tol=jtol)
    err = float(np.abs(ap2.representative
                       - tent.values[_cell_index(sq.space, inner)]).max())
    rec(out, "smooth_no_jump", "jump-set", not ap2.jump.any(),
        lhs=float(ap2.jump.sum()), rhs=0.0, tol=0.0)
    rec(out, "smooth_representative", "approximate-limits",
        err <= 6 * h, lhs=err, rhs=0.0, tol=6 * h)

    rep, jump = capacity.representative_and_jump(half)
    interior = sq.dist_inside > 2 * h  # the outer boundary is its own jump
    jy, jx = np.nonzero(jump & interior)
    near = np.abs(sq.space.xs[jx] - 0.5) <= 3 * h
    rec(out, "jump_cells_on_interface", "jump-set",
        len(jy) > 0 and bool(np.all(near)),
        lhs=float(len(jy) - near.sum()), rhs=0.0, tol=0.0)


def _cell_index(space: GridSpace, pts):
    pts = np.atleast_2d(pts)
    jx = np.clip(((pts[:, 0] - space.origin[0]) / space.h - 0.5).round().astype(int),
                 0, space.shape[1] - 1)
    jy = np.clip(((pts[:, 1] - space.origin[1]) / space.h - 0.5).round().astype(int),
                 0, space.shape[0] - 1)
    return jy, jx


def _run_poincare_survey(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    balls = [Ball((0.5, 0.5), 0.125), Ball((0.4, 0.6), 0.0625),
             Ball((0.55, 0.35), 0.09375)]
    ux = catalog_function("coordinate", sq)
    repx = bvcalc.poincare_BV_check(ux, balls, mask=sq)
    oracle = 4.0 / (3.0 * np.pi)
    err = float(np.abs(repx.constants / oracle - 1.0).max())
    rec(out, "linear_field_constant", "poincare-bv",
        err <= cfg["tol_linear"], lhs=err, rhs=0.0, constant=oracle,
        tol=cfg["tol_linear"], note="mean|x - mean| on a disk is 4r/(3pi)")
    worst = repx.C
    for name in ("tent", "gauss", "half_x"):
        rep = bvcalc.poincare_BV_check(catalog_function(name, sq), balls, mask=sq)
        worst = max(worst, rep.C)
        if rep.violations:
            rec(out, f"poincare_flag_{name}", "poincare-bv", False,
                note=f"{len(rep.violations)} balls with oscillation over zero variation")
    rec(out, "poincare_constant_band", "poincare-bv", worst <= cfg["max_C"],
        constant=worst, tol=cfg["max_C"])


def _run_trace_power_integrability(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    pts = sq.boundary_points("edge", int(cfg["n_points"]))
    rows = []
    worst_ratio = 0.0
    frac_min = 1.0
    for name in cfg["functions"]:
        u = catalog_function(name, sq)
        res = traces.trace_field(u, sq, pts, q=2.0)
        exist = np.array([r.status == "exists" for r in res])
        frac = float(exist.mean())
        frac_min = min(frac_min, frac)
        lq = np.array([r.lq_diagnostic for r in res if r.status == "exists"])
        bv = u.l1_norm() + total_variation(u).total
        ratio = float(lq.max() / max(bv, 1e-300)) if len(lq) else np.inf
        worst_ratio = max(worst_ratio, ratio)
        rows.append((name, frac, float(lq.max() if len(lq) else np.nan), bv))
    rec(out, "square_existence_fraction", "trace-h-ae-upgrade",
        frac_min >= cfg["min_fraction"], lhs=frac_min,
        rhs=cfg["min_fraction"], tol=cfg["min_fraction"],
        note="measure-dense domain: traces at nearly every sample")
    rec(out, "lq_diagnostic_band", "trace-theorem-power",
        np.isfinite(worst_ratio) and worst_ratio <= cfg["max_ratio"],
        constant=worst_ratio, tol=cfg["max_ratio"],
        note="q-average of |u| near the boundary against the BV norm, q = Q/(Q-1)")
    sink.csv("lq_traces.csv", ["function", "exists_fraction", "lq_max", "bv_norm"], rows)

    cusp = make_domain("exterior_cusp", h=h, weight=("power", -1.0))
    wall = cusp.boundary_points("wall", 20)
    wall = wall[wall[:, 0] > 0.15]
    res = traces.trace_field(catalog_function("quadratic", cusp), cusp, wall)
    frac = float(np.mean([r.status == "exists" for r in res]))
    rec(out, "cusp_wall_existence", "trace-h-ae-upgrade",
        frac >= cfg["min_fraction"], lhs=frac, rhs=cfg["min_fraction"],
        tol=cfg["min_fraction"], note="away from the tip the wall behaves")


def _run_whitney_properties(cfg, out, sink):
    omega = _domain(cfg)
    overlaps = {}
    degenerate = 0
    for lam in cfg["lams"]:
        for R in cfg["scales"]:
            cover = whitney.build_cover(omega, float(R), lam=float(lam))
            info = whitney.verify_cover(cover)
            degenerate += int(cover.n_balls == 0)
            rec(out, f"cover_lam={lam:g}_R={R:g}", "whitney-cover-properties",
                bool(info["covering"] and info["radius_rule"] and info["dist_rule"]),
                constant=float(info["overlap_C0"]), tol=0.0,
                note=f"{cover.n_balls} balls, {len(cover.singleton_cells)} singletons")
            overlaps.setdefault(float(lam), []).append(info["overlap_C0"])
        c0 = overlaps[float(lam)]
        rec(out, f"overlap_stable_lam={lam:g}", "whitney-cover-properties",
            max(c0) - min(c0) <= 1, lhs=float(min(c0)), rhs=float(max(c0)), tol=1.0,
            note="C0 identical across scale caps up to 1")

    # On coarse grids every cell can fall below the singleton floor and the
    # checks above pass vacuously, so demand that each cover has real balls.
    rec(out, "covers_nondegenerate", "whitney-cover-properties", degenerate == 0,
        lhs=float(degenerate), rhs=0.0, tol=0.0,
        note="number of covers with zero non-singleton balls")

    cover = whitney.build_cover(omega, float(cfg["scales"][0]), lam=float(cfg["lams"][0]))
    pou = whitney.partition_of_unity(cover)
    sums = np.zeros(omega.space.shape)
    np.add.at(sums.ravel(), pou.cells, pou.phi)
    gap = float(np.abs(sums[omega.inside] - 1.0).max())
    rec(out, "partition_sums_to_one", "partition-of-unity", gap <= 1e-9,
        lhs=gap, rhs=0.0, tol=1e-9)
    rec(out, "partition_lipschitz", "partition-of-unity",
        np.isfinite(pou.lipschitz_C) and pou.lipschitz_C <= cfg["max_lip"],
        constant=pou.lipschitz_C, tol=cfg["max_lip"],
        note="sampled Lipschitz constant times ball radius")


def _run_discrete_convolution_convergence(cfg, out, sink):
    # Radii obey min(dist/20, R), so R only caps balls where dist > 20R; the
    # scales all sit below max dist / 20 = 0.025 or the cover would not change.
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    scales = np.asarray(cfg["scales"], dtype=float)
    fields = {name: catalog_function(name, sq) for name in cfg["functions"]}
    gaps = {name: [] for name in fields}
    gratio = {name: [] for name in fields}
    rows = []
    for R in scales:
        cover = whitney.build_cover(sq, R, lam=1.0)
        pou = whitney.partition_of_unity(cover)
        for name, u in fields.items():
            conv = whitney.discrete_convolution(u, cover, pou)
            gaps[name].append(ScalarField(
                sq.space, np.abs(conv.u_W.values - u.values), sq).l1_norm())
            gratio[name].append(conv.gradient_mass_ratio)
            rows.append((name, float(R), gaps[name][-1], gratio[name][-1]))
    for name in fields:
        g = np.asarray(gaps[name])
        steps = g[:-1] / g[1:]
        geo = float((g[0] / g[-1]) ** (1.0 / (len(g) - 1)))
        rec(out, f"l1_halving_{name}", "discrete-convolution",
            geo >= cfg["min_ratio"], lhs=geo, rhs=cfg["min_ratio"],
            tol=cfg["min_ratio"],
            note="per-halving L1 shrink over the ladder; steps "
                 + ", ".join(f"{s:.3f}" for s in steps))
        band = float(max(gratio[name]) / max(min(gratio[name]), 1e-300))
        rec(out, f"gradient_band_{name}", "discrete-convolution",
            band <= cfg["max_band"] and max(gratio[name]) > 0,
            constant=band, tol=cfg["max_band"],
            note="int g dmu / ||Du|| across scales")
    sink.csv("convolution_gaps.csv", ["function", "R", "l1_gap", "gradient_ratio"], rows)


def _run_boundary_chain_estimate(cfg, out, sink):
    h = float(cfg["h"])
    consts = {}
    for hh in (h, 2 * h):
        cs = []
        n_triples = 0
        for kind in cfg["domains"]:
            omega = make_domain(kind, h=hh)
            group = "edge" if kind == "unit_square" else "circle"
            pts = np.concatenate([omega.boundary_points(group, 8),
                                  _interior_grid(omega, 5)], axis=0)
            u = catalog_function("tent", omega)
            radii = np.asarray(cfg["radii"], dtype=float)
            for R in cfg["scales"]:
                conv = whitney.discrete_convolution(
                    u, whitney.build_cover(omega, float(R), lam=1.0))
                cr = whitney.boundary_chain_check(u, conv, pts, radii)
                if cr.flagged:
                    rec(out, f"chain_flag_{kind}_h={hh:g}", "chain-estimate", False,
                        note=f"{len(cr.flagged)} samples with deviation over zero variation")
                cs.append(np.nanmax(cr.constants))
                n_triples += int(np.isfinite(cr.constants).sum())
        consts[hh] = float(np.nanmax(cs))
        if hh == h:
            rec(out, "triples_count", "chain-estimate",
                n_triples >= int(cfg["min_triples"]),
                lhs=float(n_triples), rhs=float(cfg["min_triples"]), tol=0.0)
            rec(out, "single_constant", "chain-estimate",
                np.isfinite(consts[hh]) and 0.0 < consts[hh] <= cfg["max_C"],
                constant=consts[hh], tol=cfg["max_C"],
                note="positive, so the boundary balls see real smoothing")
    drift = abs(consts[h] / consts[2 * h] - 1.0)
    rec(out, "constant_stable_under_halving", "chain-estimate",
        drift <= cfg["drift"], lhs=consts[h], rhs=consts[2 * h],
        constant=drift, tol=cfg["drift"])

    sq = make_domain("unit_square", h=h)
    rep = estimate_doubling(sq.space, [(0.5, 0.5)], np.asarray([0.05, 0.1, 0.2]))
    worst = 0.0
    for x in ((0.5, 0.5), (0.3, 0.4)):
        for i in (-5, -4, -3):
            r = bvcalc.find_good_radius(sq.space, x, i, rep.C_d, mask=sq)
            E = DomainMask(sq.space, _ball_mask(sq.space, x, r), "ball")
            P = total_variation(ScalarField(sq.space, E.inside.astype(float)),
                                method="interface").total
            mB = mu_ball(sq.space, Ball(x, r))
            worst = max(worst, P * r / mB)
    rec(out, "good_radius_bound", "good-radius", worst <= 1.5 * rep.C_d,
        constant=worst, rhs=rep.C_d, tol=1.5 * rep.C_d,
        note="P(B) r / mu(B) at the selected radii")


def _interior_grid(omega: DomainMask, n: int):
    iy, ix = np.nonzero(omega.inside)
    xs, ys = omega.space.xs, omega.space.ys
    gx = np.linspace(xs[ix.min()], xs[ix.max()], n + 2)[1:-1]
    gy = np.linspace(ys[iy.min()], ys[iy.max()], n + 2)[1:-1]
    P = np.stack(np.meshgrid(gx, gy), axis=-1).reshape(-1, 2)
    jy, jx = _cell_index(omega.space, P)
    return P[omega.inside[jy, jx]]


def _ball_mask(space: GridSpace, x, r):
    X, Y = space.meshgrid()
    return (X - x[0]) ** 2 + (Y - x[1]) ** 2 < r * r


def _run_strip_perimeter_scaling(cfg, out, sink):
    h = float(cfg["h"])
    rows = []
    per, growth = {}, {}
    for i in cfg["indices"]:
        omega = make_domain("exterior_cusp", h=h)
        X, _ = omega.space.meshgrid()
        E = ScalarField(omega.space, ((X < 1.0 / i) & omega.inside).astype(float), omega)
        p_in = total_variation(E, method="interface").total
        hat = ScalarField(omega.space, E.values)
        p_full = total_variation(hat, method="interface").total
        per[i], growth[i] = p_in, p_full / p_in
        rows.append((int(i), p_in, 2.0 / i ** 2, p_full, growth[i]))
    for i in cfg["ratio_at"]:
        ratio = per[i] / per[2 * i]
        rec(out, f"perimeter_ratio_i={i}", "strip-perimeter-scaling",
            abs(ratio - 4.0) <= 4.0 * cfg["tol_ratio"], lhs=ratio, rhs=4.0,
            tol=cfg["tol_ratio"], note="P(E_i)/P(E_2i) under 1/i^2 scaling")
    # the zero-extension side needs resolved cusp walls (height 1/i^2 well
    # above h), so the growth law is read off the coarser strips only
    g = [growth[i] for i in cfg["growth_at"]]
    lin = all(g[k + 1] / g[k] >= cfg["min_growth"] for k in range(len(g) - 1))
    rec(out, "extension_growth_linear", "extension-failure-strips",
        lin and g[0] > 1.5, lhs=float(g[0]), rhs=float(g[-1]),
        constant=float(g[-1] / g[0]), tol=cfg["min_growth"],
        note="||D chi-hat||(X) / P(E_i, Omega) grows with i")
    sink.csv("strip_perimeters.csv",
             ["i", "P_in", "oracle", "P_full", "growth"], rows)


def _run_l1_trace_inequality(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    pts = sq.boundary_points("edge", int(cfg["n_points"]))
    corpus = _corpus(sq, cfg["functions"])
    res = traces.l1_trace_inequality_check(corpus, sq, pts)
    rec(out, "empirical_C_T", "l1-trace-estimate",
        np.isfinite(res["C_T"]) and 0 < res["C_T"] <= cfg["max_C"],
        constant=res["C_T"], tol=cfg["max_C"],
        note=f"max over {len(res['ratios'])} corpus fields; "
             f"excluded: {', '.join(res['excluded']) or 'none'}")
    sink.csv("l1_ratios.csv", ["function", "ratio"],
             [(n, float(v)) for n, v in res["ratios"]])

    # shrinking indicators on the unweighted cusp: boundary content of the
    # wet wall outgrows the BV norm, so no single constant can work
    cusp = make_domain("exterior_cusp", h=h)
    space = cusp.space
    ratios = []
    for i in cfg["indices"]:
        ball = _ball_mask(space, (0.0, 0.0), 1.0 / i)
        ui = ScalarField(space, (ball & cusp.inside).astype(float), cusp)
        wall = cusp.boundary_cells & _ball_mask(space, (0.0, 0.0), 0.8 / i)
        lhs = hausdorff.content_HR(space, wall, max(4 * h, 0.2 / i)).content
        rhs = ui.l1_norm() + total_variation(ui, method="interface").total
        ratios.append(lhs / rhs)
    ok = all(ratios[k + 1] / ratios[k] >= cfg["min_growth"]
             for k in range(len(ratios) - 1))
    rec(out, "necessity_ratio_growth", "l1-trace-necessity", ok,
        lhs=float(ratios[0]), rhs=float(ratios[-1]),
        constant=float(ratios[-1] / ratios[0]), tol=cfg["min_growth"],
        note="int |Tu_i| dH / ||u_i||_BV along u_i = chi_{B(0,1/i)}")


def _run_bv0_membership(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    tent = catalog_function("tent", sq)
    one = catalog_function("constant", sq)
    zt = traces.zero_trace_check(tent)
    zo = traces.zero_trace_check(one)
    rec(out, "tent_in_bv0", "weak-zero-trace", zt.passed,
        lhs=float(np.max(zt.ratios[:, -1])), rhs=float(np.max(zt.tols)),
        tol=float(np.max(zt.tols)), note="boundary averages of |u| vanish")
    rec(out, "indicator_not_in_bv0", "weak-zero-trace", not zo.passed,
        lhs=float(np.min(zo.ratios[:, -1])), rhs=0.0, tol=0.0,
        note="chi_Omega keeps mass at every boundary point")
    shifted = ScalarField(sq.space, one.values + tent.values, sq)
    rec(out, "same_boundary_values", "weak-zero-trace",
        traces.same_boundary_values(shifted, one, sq), tol=0.0,
        note="u and u + tent share boundary values")


def _run_radon_boundary_refinement(cfg, out, sink):
    # nu = ||D half_x|| concentrates on {x = 1/2}; the limsup density
    # r nu(B cap Omega)/mu(B) survives only where that line meets the
    # boundary, a two-point (content-null) set, so only the two junction
    # samples may exceed the threshold at the finest radii
    fracs = {}
    for h in cfg["h_values"]:
        h = float(h)
        sq = make_domain("unit_square", h=h)
        nu = tv_density(catalog_function("half_x", sq))
        n = int(cfg["n_points"])
        pts = np.concatenate([sq.boundary_points("edge", n),
                              [[0.5, 0.0], [0.5, 1.0]]], axis=0)
        res = traces.radon_boundary_lemma_check(nu, sq, pts,
                                                radii=[4 * h, 8 * h],
                                                threshold=cfg["threshold"])
        fracs[h] = res["fraction"]
        rec(out, f"fraction_h={h:g}", "radon-boundary-lemma",
            res["fraction"] <= 4.0 / (n + 2), lhs=res["fraction"],
            rhs=2.0 / (n + 2), tol=2.0 / (n + 2))
    hs = sorted(fracs)
    rec(out, "fraction_nonincreasing", "radon-boundary-lemma",
        fracs[hs[0]] <= fracs[hs[-1]] + 1e-12,
        lhs=fracs[hs[0]], rhs=fracs[hs[-1]], tol=0.0,
        note="the bad set does not grow under refinement")


def _run_zero_extension_bound(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    worst = 0.0
    rows = []
    for name in cfg["functions"]:
        u = catalog_function(name, sq)
        ze = traces.zero_extension(u)
        bv_in = u.l1_norm() + total_variation(u).total
        bv_hat = u.l1_norm() + ze.total
        ratio = bv_hat / max(bv_in, 1e-300)
        worst = max(worst, ratio)
        rows.append((name, bv_in, bv_hat, ze.tv_collar))
    rec(out, "extension_norm_bound", "zero-extension-bound",
        np.isfinite(worst) and worst <= cfg["max_C"], constant=worst,
        tol=cfg["max_C"], note="||u-hat||_BV(X) / ||u||_BV(Omega) over the corpus")
    sink.csv("zero_extension.csv", ["function", "bv_in", "bv_hat", "collar"], rows)

    tent = catalog_function("tent", sq)
    zt = traces.zero_extension(tent)
    share = zt.tv_collar / max(zt.total, 1e-300)
    rec(out, "zero_trace_no_boundary_term", "zero-extension-theorem",
        share <= cfg["collar_share"], lhs=share, rhs=0.0,
        tol=cfg["collar_share"], note="collar variation share for a zero-trace field")
    zo = traces.zero_extension(catalog_function("constant", sq))
    per = total_variation(ScalarField(sq.space, sq.inside.astype(float)),
                          method="interface").total
    rec(out, "unit_field_boundary_term", "zero-extension-theorem",
        abs(zo.tv_collar / per - 1.0) <= 0.05, lhs=zo.tv_collar, rhs=per,
        tol=0.05, note="nonzero trace shows up as a perimeter-sized collar term")


def _run_compact_support_density(cfg, out, sink):
    h = float(cfg["h"])
    sq = make_domain("unit_square", h=h)
    tent = catalog_function("tent", sq)
    rep = whitney.compact_support_approximation(tent, delta=float(cfg["delta"]))
    rec(out, "support_inside_domain", "compact-support-density",
        rep.support_ok, tol=0.0,
        note=f"approximant vanishes on the {rep.delta:g}-collar")
    rec(out, "l1_gap_share", "compact-support-density",
        rep.l1_gap <= cfg["gap_share"] * rep.bv_norm, lhs=rep.l1_gap,
        rhs=rep.bv_norm, tol=cfg["gap_share"])
    rec(out, "tv_gap_share", "compact-support-density",
        rep.tv_gap <= cfg["gap_share"] * rep.bv_norm, lhs=rep.tv_gap,
        rhs=rep.bv_norm, tol=cfg["gap_share"])

    spike = ScalarField(sq.space, tent.values * catalog_function("inv_sqrt", sq).values, sq)
    n_cut = float(cfg["truncation_level"])
    tail = whitney.truncation_tail(spike, n_cut)
    un = whitney.truncate(spike, n_cut)
    direct = abs(total_variation(spike).total - total_variation(un).total)
    rec(out, "truncation_tail_matches", "truncation-tail",
        abs(direct - tail) <= cfg["tail_tol"] * max(tail, 1e-300),
        lhs=direct, rhs=tail, tol=cfg["tail_tol"],
        note="TV drop against the coarea tail beyond the cut level")

    # Strict convergence of the cutoff-glued sequence shows up in the Leibniz
    # upper-gradient mass: it falls to TV(u) as the handover collar shrinks,
    # while the raw convolution keeps the cover overlap constant.  The collar
    # L1 gap itself sits below grid resolution (handover radii are dist/20).
    cover = whitney.build_cover(sq, float(cfg["paste_R"]), lam=1.0)
    deltas = [float(d) for d in cfg["paste_deltas"]]
    ratios = []
    for delta in deltas:
        pr = whitney.pasted_approximation(tent, [cover], delta, (0.5, 0.5))
        ratios.append(float(pr.g_mass[0] / pr.tv_u))
    # the residual above 1 is the overlap constant times the collar share of
    # TV(u), so it falls linearly with delta rather than hitting 1 outright
    excess = [r - 1.0 for r in ratios]
    shrink = all(a >= 1.5 * b for a, b in zip(excess, excess[1:]))
    rec(out, "pasted_gradient_mass_drops", "pasted-approximation",
        shrink and ratios[-1] <= cfg["paste_cap"],
        lhs=float(ratios[0]), rhs=float(ratios[-1]), tol=cfg["paste_cap"],
        note="pasted upper-gradient mass over TV(u) as the collar shrinks")
    plain = whitney.discrete_convolution(tent, cover).gradient_mass_ratio
    rec(out, "pasted_beats_raw_convolution", "pasted-approximation",
        plain >= 5.0 * ratios[-1], lhs=float(plain), rhs=float(ratios[-1]),
        constant=float(plain / max(ratios[-1], 1e-300)),
        note="raw convolution gradient mass carries the overlap constant")
    covers = [whitney.build_cover(sq, R, lam=1.0) for R in cfg["paste_scales"]]
    pr = whitney.pasted_approximation(tent, covers, deltas[-1], (0.5, 0.5))
    dec = bool(np.all(np.diff(pr.l1_gaps) <= 1e-12 + 0.05 * pr.l1_gaps[:-1]))
    rec(out, "pasted_l1_converged", "pasted-approximation",
        dec and pr.l1_gaps[-1] <= 1e-6 * tent.l1_norm(),
        lhs=float(pr.l1_gaps[0]), rhs=float(pr.l1_gaps[-1]), tol=1e-6,
        note="pasted fields match u up to the sub-resolution collar")
    rec(out, "pasted_tv_controlled", "pasted-approximation",
        float(pr.tv_gaps[-1]) <= cfg["paste_tv"], lhs=float(pr.tv_gaps[-1]),
        rhs=0.0, tol=cfg["paste_tv"],
        note="relative variation excess at the finest pasting scale")


def _run_capacity_oracle(cfg, out, sink):
    h = float(cfg["h"])
    g = GridSpace((-2.25, -2.25), (4.5, 4.5), h, ("constant", 1.0))
    X, Y = g.meshgrid()
    A = X ** 2 + Y ** 2 <= 0.25
    # support region is the doubled ball, so the ambient ball is B(0, 1)
    val = capacity.rcap_BV(g, A, Ball((0.0, 0.0), 1.0), iters=int(cfg["iters"]))
    err = abs(val.value / np.pi - 1.0)
    rec(out, "rcap_disk_oracle", "relative-capacity",
        err <= cfg["tol_oracle"], lhs=val.value, rhs=np.pi,
        tol=cfg["tol_oracle"], note="annular ramp oracle rcap = pi")
    agree = abs(val.parametric / val.variational - 1.0)
    rec(out, "methods_agree", "relative-capacity",
        agree <= cfg["tol_methods"], lhs=val.parametric, rhs=val.variational,
        tol=cfg["tol_methods"], note="cone scan against primal-dual plus rounding")

    cap = capacity.cap_BV(g, A, iters=int(cfg["iters"]))
    oracle = np.pi / 4 + np.pi     # best indicator: the pinned disk itself
    rec(out, "cap_includes_mass", "bv-capacity",
        abs(cap.value / oracle - 1.0) <= cfg["tol_oracle"]
        and cap.value >= val.value - 0.05,
        lhs=cap.value, rhs=oracle, constant=cap.value, tol=cfg["tol_oracle"],
        note="cap_BV prices the L1 mass on top of the variation")
    rec(out, "minimizer_certifies", "bv-capacity",
        float(cap.minimizer.values.min()) >= 0.0
        and float(cap.minimizer.values.max()) <= 1.0 + 1e-9,
        tol=0.0, note="certifying field stays in [0, 1]")


def _run_capacity_comparability(cfg, out, sink):
    h = float(cfg["h"])
    g = GridSpace((-1.0, -1.0), (2.0, 2.0), h, ("constant", 1.0))
    X, Y = g.meshgrid()
    K = (np.abs(X) <= 0.25) & (np.abs(Y) <= 0.25)
    B = Ball((0.0, 0.0), 0.5)
    it = int(cfg["iters"])

    nb = capacity.capacity(g, K, "rcap_BV", B, neighborhood=True, iters=it)
    st = capacity.capacity(g, K, "rcap_BV", B, neighborhood=False, iters=it)
    ratio = nb.value / max(st.value, 1e-300)
    rec(out, "pinning_modes_comparable", "capacity-comparability",
        1.0 - 1e-9 <= ratio <= cfg["max_ratio"], lhs=nb.value, rhs=st.value,
        constant=ratio, tol=cfg["max_ratio"],
        note="neighborhood pinning costs at least as much, within a constant")

    from scipy import ndimage
    K2 = ndimage.binary_dilation(K, iterations=2)
    big = capacity.capacity(g, K2, "rcap_BV", B, neighborhood=False, iters=it)
    rec(out, "monotone_in_the_set", "capacity-comparability",
        big.value >= st.value - 1e-6, lhs=st.value, rhs=big.value, tol=1e-6)

    inner = capacity.capacity(g, ndimage.binary_erosion(K, iterations=1),
                              "rcap_BV", B, neighborhood=False, iters=it)
    gap = abs(st.value - inner.value) / max(st.value, 1e-300)
    rec(out, "inner_regular", "capacity-comparability",
        gap <= cfg["inner_tol"], lhs=inner.value, rhs=st.value,
        constant=gap, tol=cfg["inner_tol"],
        note="one-cell erosion moves the value by little")


def _mazya_corpus(space: GridSpace, omega: DomainMask):
    X, Y = space.meshgrid()
    r_clip = np.maximum(np.hypot(X, Y), space.h / 2)
    d0 = np.hypot(X - 0.25, Y)
    fields = {
        "constant": np.ones(space.shape),
        "coord_x": X,
        "coord_y": Y,
        "plane": X + Y,
        "quadratic": X ** 2 + Y ** 2,
        "cone": np.clip(1.0 - 2.0 * d0, 0.0, 1.0),
        "sine": np.sin(2 * np.pi * X) * np.cos(np.pi * Y),
        "gauss": np.exp(-6.0 * (X ** 2 + Y ** 2)),
        "inv_sqrt": 1.0 / np.sqrt(r_clip),
        "half_x": (X > 0.0).astype(float),
        "disk_ind": (np.hypot(X - 0.2, Y + 0.1) < 0.18).astype(float),
        "ring_ind": ((r_clip > 0.2) & (r_clip < 0.4)).astype(float),
    }
    return [(n, ScalarField(space, v, omega)) for n, v in fields.items()]


def _run_mazya_suite(cfg, out, sink):
    h = float(cfg["h"])
    balls = [Ball(tuple(b[:2]), float(b[2])) for b in cfg["balls"]]
    rows = []
    worst_cap, worst_rcap, n_flag, n_vac = 0.0, 0.0, 0, 0
    for wname, weight in (("flat", ("constant", 1.0)), ("power", ("power", -1.0))):
        g = GridSpace((-0.75, -0.75), (1.5, 1.5), h, weight)
        omega = DomainMask(g, np.ones(g.shape, bool), f"plane_{wname}")
        for fname, u in _mazya_corpus(g, omega):
            for b in balls:
                rep = capacity.mazya_check(u, b, iters=int(cfg["iters"]))
                n_flag += int(rep.flagged)
                n_vac += int(rep.vacuous)
                if rep.vacuous or rep.flagged:
                    rows.append((wname, fname, b.radius, np.nan, np.nan,
                                 int(rep.vacuous), int(rep.flagged)))
                    continue
                worst_cap = max(worst_cap, rep.const_cap)
                worst_rcap = max(worst_rcap, rep.const_rcap)
                rows.append((wname, fname, b.radius, rep.const_cap,
                             rep.const_rcap, 0, 0))
    rec(out, "no_flagged_violations", "mazya-inequality", n_flag == 0,
        lhs=float(n_flag), rhs=0.0, tol=0.0,
        note=f"{n_vac} vacuous samples (zero set misses the ball) skipped")
    rec(out, "single_constant_cap", "mazya-inequality",
        np.isfinite(worst_cap) and 0 < worst_cap <= cfg["max_C"],
        constant=worst_cap, tol=cfg["max_C"],
        note="worst constant, neighborhood-capacity variant")
    rec(out, "single_constant_rcap", "mazya-inequality",
        np.isfinite(worst_rcap) and 0 < worst_rcap <= cfg["max_C"],
        constant=worst_rcap, tol=cfg["max_C"],
        note="worst constant, relative-capacity variant")
    sink.csv("mazya_constants.csv",
             ["weight", "function", "r", "const_cap", "const_rcap",
              "vacuous", "flagged"], rows)

    g = GridSpace((-0.75, -0.75), (1.5, 1.5), h, ("constant", 1.0))
    omega = DomainMask(g, np.ones(g.shape, bool), "plane")
    X, _ = g.meshgrid()
    quarter = ScalarField(g, np.clip(4.0 * (X - 0.125), 0.0, 1.0), omega)
    rep = capacity.measure_largeness_sobolev_check(quarter, Ball((0.0, 0.0), 0.5))
    rec(out, "measure_largeness_constant", "measure-largeness-sobolev",
        np.isfinite(rep["C"]) and rep["C"] <= cfg["max_C"],
        constant=rep["C"], lhs=rep["lhs"], tol=cfg["max_C"],
        note="ramp with a quarter-mass zero set")


def _run_semmes_family_check(cfg, out, sink):
    h = float(cfg["h"])
    omega = make_domain("exterior_cusp", h=h)
    x, y = (float(cfg["x1"]), 0.0), (float(cfg["y1"]), 0.0)
    n_c, n_s = int(cfg["n_curves"]), int(cfg["n_samples"])

    fam = semmes.build_family(x, y, n_curves=n_c, n_samples=n_s)
    rep = semmes.check_semmes_condition(fam, omega)
    rec(out, "occupation_constant_finite", "semmes-family",
        np.isfinite(rep.C) and rep.C > 0 and not rep.flagged,
        constant=rep.C, tol=cfg["max_C"],
        note=f"{len(rep.ratios)} test sets, none with zero kernel mass")
    spd = fam.speeds()
    rec(out, "speeds_bounded", "semmes-family",
        bool(np.all((spd >= 1.0 - 1e-6) & (spd <= np.sqrt(5.0) + 1e-6))),
        lhs=float(spd.min()), rhs=float(spd.max()), tol=np.sqrt(5.0))

    fam2 = semmes.build_family(x, y, n_curves=2 * n_c, n_samples=2 * n_s)
    rep2 = semmes.check_semmes_condition(fam2, omega)
    drift = abs(rep2.C / rep.C - 1.0)
    rec(out, "constant_stable_under_doubling", "semmes-family",
        drift <= cfg["stability"], lhs=rep.C, rhs=rep2.C, constant=drift,
        tol=cfg["stability"])

    rk = semmes.riesz_kernel_check(omega, float(cfg["x1"]),
                                   n_points=int(cfg["n_kernel"]),
                                   slack=cfg["kernel_slack"])
    rec(out, "kernel_lower_bound", "riesz-kernel-bound", rk["ok"],
        lhs=rk["min_margin"], rhs=1.0, tol=cfg["kernel_slack"],
        note=f"pole kernel against (1/8) z1^-2 at {rk['checked']} cells")
    fam.to_csv(_sink_path(sink, "semmes_family.csv"))


def _run_snowflake_content(cfg, out, sink):
    h = float(cfg["h"])
    koch = make_domain("koch_prefix", h=h, level=int(cfg["level"]))
    space = koch.space
    # the finest rung stays a step above 4h: prefix squares of the last
    # generation are only a couple of cells wide and would flatten the fit
    scales = [8 * h * 2.0 ** k for k in range(int(cfg["n_scales"]))]
    est = hausdorff.measure_H(space, koch.boundary_cells, scales)
    vals = np.asarray(est.values)  # ordered from coarsest scale to finest
    ratios = vals[1:] / vals[:-1]
    rec(out, "content_grows_as_scale_drops", "snowflake-boundary-divergence",
        bool(np.all(ratios >= cfg["min_ratio"])), lhs=float(ratios.min()),
        rhs=cfg["min_ratio"], tol=cfg["min_ratio"])
    rec(out, "divergence_flag", "snowflake-boundary-divergence",
        bool(est.divergent), constant=float(np.log(ratios).mean() / np.log(2)),
        tol=hausdorff.DIVERGENCE_SLOPE,
        note="fitted growth exponent of H_R in 1/R")

    disk = make_domain("disk", h=h, radius=1.0)
    est2 = hausdorff.measure_H(disk.space, disk.boundary_cells, scales[:3])
    rec(out, "smooth_boundary_bounded", "snowflake-boundary-divergence",
        not est2.divergent and est2.extrapolated <= 4 * np.pi,
        constant=est2.extrapolated, rhs=2 * np.pi, tol=2 * np.pi,
        note="control case: circle content stays near its length scale")
    sink.csv("koch_content.csv", ["R", "H_R"],
             [(float(s), float(v)) for s, v in zip(est.scales, vals)])


def _run_domain_conditions(cfg, out, sink):
    h = float(cfg["h"])
    radii = np.asarray([4 * h, 8 * h, 16 * h, 32 * h])
    for kind, group in (("unit_square", "edge"), ("disk", "circle")):
        omega = make_domain(kind, h=h)
        pts = omega.boundary_points(group, 12)
        dr = domains.check_measure_density(omega, pts, radii)
        rec(out, f"measure_density_{kind}", "measure-density-condition",
            not dr.failures and dr.c_m >= cfg["min_cm"], lhs=dr.c_m,
            rhs=cfg["min_cm"], tol=cfg["min_cm"])
        cr = domains.check_codim_boundary(omega, pts[::3], radii[1:])
        rec(out, f"codim_bound_{kind}", "codim-boundary-condition",
            np.isfinite(cr.C_bdry) and cr.C_bdry <= cfg["max_codim"],
            constant=cr.C_bdry, tol=cfg["max_codim"])

    cusp = make_domain("exterior_cusp", h=h, weight=("power", -1.0))
    tip = cusp.boundary_points("tip", 1)
    dr = domains.check_measure_density(cusp, tip, radii)
    rec(out, "cusp_tip_fails_density", "measure-density-condition",
        len(dr.failures) == 1, lhs=float(len(dr.failures)), rhs=1.0, tol=0.0,
        note="the exterior cusp loses measure density exactly at the tip")

    icusp = make_domain("interior_cusp", h=h)
    pts = np.concatenate([icusp.boundary_points("origin", 1),
                          icusp.boundary_points("wall", 8),
                          icusp.boundary_points("arc", 6)], axis=0)
    dr = domains.check_measure_density(icusp, pts, radii)
    rec(out, "interior_cusp_density", "interior-cusp-exceptional-set",
        not dr.failures, lhs=float(len(dr.failures)), rhs=0.0, tol=0.0,
        note="the wedge is thin, so density survives at the tip")
    res = traces.trace_field(catalog_function("quadratic", icusp), icusp, pts)
    frac = float(np.mean([r.status == "exists" for r in res]))
    rec(out, "interior_cusp_traces", "interior-cusp-exceptional-set",
        frac >= cfg["min_fraction"], lhs=frac, rhs=cfg["min_fraction"],
        tol=cfg["min_fraction"],
        note="traces exist away from a small exceptional set")


def _run_cantor_complement_content(cfg, out, sink):
    h = float(cfg["h"])
    level = int(cfg["level"])
    omega = make_domain("cantor_complement", h=h, level=level)
    space = omega.space
    radii = np.asarray([4 * h, 8 * h, 16 * h])

    pts = omega.boundary_points("cantor", 25)
    # the four unit-square corners sit inside removed prefix squares, a
    # finite-level artifact; interior dust corners are the honest samples
    inner = (pts[:, 0] > 0) & (pts[:, 0] < 1) & (pts[:, 1] > 0) & (pts[:, 1] < 1)
    pts = pts[inner]
    dr = domains.check_measure_density(omega, pts, radii)
    rec(out, "dust_measure_density", "cantor-complement-example",
        not dr.failures and dr.c_m >= cfg["min_cm"], lhs=dr.c_m,
        rhs=cfg["min_cm"], tol=cfg["min_cm"],
        note="removed dust is null, so density holds at dust corners")

    vals = []
    for lv in range(1, level + 1):
        dom = make_domain("cantor_complement", h=h, level=lv)
        dust = dom.boundary_cells.copy()
        X, Y = space.meshgrid()
        interior = (X > 2 * h) & (X < 1 - 2 * h) & (Y > 2 * h) & (Y < 1 - 2 * h)
        dust &= interior
        vals.append(hausdorff.content_HR(space, dust, 4 * h).content)
    ratios = [vals[k + 1] / vals[k] for k in range(len(vals) - 1)]
    rec(out, "dust_content_grows_by_level", "cantor-complement-example",
        all(r >= cfg["min_ratio"] for r in ratios), lhs=float(vals[0]),
        rhs=float(vals[-1]), constant=float(min(ratios)), tol=cfg["min_ratio"],
        note="level-k dust content grows, pointing at infinite H")

    u = catalog_function("quadratic", omega)
    res = traces.trace_field(u, omega, pts)
    frac = float(np.mean([r.status == "exists" for r in res]))
    rec(out, "traces_exist_on_dust", "cantor-complement-example",
        frac >= cfg["min_fraction"], lhs=frac, rhs=cfg["min_fraction"],
        tol=cfg["min_fraction"])
    sink.csv("cantor_content.csv", ["level", "H_R"],
             [(k + 1, float(v)) for k, v in enumerate(vals)])


# --------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class Experiment:
    name: str
    runner: object
    covers: tuple
    defaults: dict
    summary: str


def _exp(name, runner, covers, defaults, summary):
    for c in covers:
        if c not in CLAIMS:
            raise KeyError(f"experiment {name} covers unknown claim {c!r}")
    return name, Experiment(name, runner, tuple(covers), defaults, summary)


EXPERIMENTS = dict([
    _exp("measure_calibration", _run_measure_calibration,
         ["weighted-ball-measure-law", "doubling-constant", "mass-exponent",
          "cusp-ball-mass-bound"],
         {"h": 1 / 1024, "radii": [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5],
          "tol_measure": 0.02, "tol_mass": 0.1, "max_Cd": 64.0,
          "cusp_radii": [0.1, 0.2, 0.4], "weight": ["power", -1.0]},
         "weighted ball measure, doubling diagnostics, cusp mass bound"),
    _exp("cusp_H_vs_Hbar", _run_cusp_H_vs_Hbar,
         ["point-content-dichotomy", "codim1-content", "codim1-measure"],
         {"h": 1 / 512, "n_scales": 5, "H_min": 4.0, "Hbar_max": 0.05},
         "codimension-1 content of the cusp tip under both measures"),
    _exp("slit_disk_trace", _run_slit_disk_trace,
         ["slit-disk-dichotomy", "trace-definition"],
         {"h": 1 / 256, "n_points": 20, "tol_avg": 0.05, "cert_min": 1.5},
         "Arg on the slit disk: averages converge, trace fails, arc is fine"),
    _exp("boundary_density_suite", _run_boundary_density_suite,
         ["measure-theoretic-boundary", "density-set-bounds", "surface-density"],
         {"h": 1 / 256, "tol_theta": 0.2},
         "measure-theoretic boundary and surface density of a half square"),
    _exp("tv_calibration", _run_tv_calibration,
         ["total-variation", "bv-space"],
         {"h": 1 / 256, "tol_smooth": 0.02},
         "perimeters and gradients against closed forms, both TV routes"),
    _exp("coarea_gallery", _run_coarea_gallery,
         ["coarea-formula"],
         {"h": 1 / 128, "smooth": ["coordinate", "tent", "gauss"],
          "indicators": ["half_x", "disk_indicator"], "tol_smooth": 0.05},
         "coarea identity on smooth fields and indicators"),
    _exp("jump_set_demo", _run_jump_set_demo,
         ["approximate-limits", "jump-set"],
         {"h": 1 / 128},
         "approximate limits bracket jumps; jump set sits on the interface"),
    _exp("poincare_survey", _run_poincare_survey,
         ["poincare-bv"],
         {"h": 1 / 256, "tol_linear": 0.15, "max_C": 3.0},
         "Poincare constants on interior balls, linear-field oracle"),
    _exp("trace_power_integrability", _run_trace_power_integrability,
         ["trace-theorem-power", "trace-h-ae-upgrade"],
         {"h": 1 / 256, "n_points": 40, "min_fraction": 0.9, "max_ratio": 60.0,
          "functions": ["coordinate", "tent", "quadratic", "gauss"]},
         "existence fractions and q-integrability of traces"),
    _exp("whitney_properties", _run_whitney_properties,
         ["whitney-cover-properties", "partition-of-unity"],
         {"h": 1 / 512, "domain": "unit_square", "lams": [1.0, 2.0],
          "scales": [0.25, 0.0625], "max_lip": 4.0},
         "cover invariants, overlap stability, partition of unity"),
    _exp("discrete_convolution_convergence", _run_discrete_convolution_convergence,
         ["discrete-convolution"],
         {"h": 1 / 2048, "functions": ["coordinate", "tent", "half_x"],
          "scales": [1 / 64, 1 / 128, 1 / 256, 1 / 512],
          "min_ratio": 1.8, "max_band": 3.0},
         "L1 convergence and gradient band of ball-average smoothing"),
    _exp("boundary_chain_estimate", _run_boundary_chain_estimate,
         ["chain-estimate", "good-radius"],
         {"h": 1 / 1024, "domains": ["unit_square", "disk"],
          "radii": [0.03125, 0.0625, 0.125, 0.25], "scales": [0.0625, 0.03125],
          "min_triples": 200, "max_C": 10.0, "drift": 0.3},
         "one constant across point/radius/scale triples; good radii"),
    _exp("strip_perimeter_scaling", _run_strip_perimeter_scaling,
         ["strip-perimeter-scaling", "extension-failure-strips"],
         {"h": 1 / 512, "indices": [2, 4, 8, 16], "ratio_at": [2, 4, 8],
          "growth_at": [2, 4, 8], "tol_ratio": 0.1, "min_growth": 1.3},
         "strip perimeters in the cusp and their zero-extension blow-up"),
    _exp("l1_trace_inequality", _run_l1_trace_inequality,
         ["l1-trace-estimate", "l1-trace-necessity"],
         {"h": 1 / 256, "n_points": 40, "max_C": 10.0,
          "functions": ["constant", "coordinate", "tent", "gauss"],
          "indices": [2, 4, 8], "min_growth": 1.5},
         "boundary L1 estimate on the square; failure on the unweighted cusp"),
    _exp("bv0_membership", _run_bv0_membership,
         ["weak-zero-trace"],
         {"h": 1 / 256},
         "zero-trace check separates the tent from the indicator"),
    _exp("radon_boundary_refinement", _run_radon_boundary_refinement,
         ["radon-boundary-lemma"],
         {"h_values": [1 / 128, 1 / 256], "n_points": 40, "threshold": 0.2},
         "the high-density boundary set of a finite measure is negligible"),
    _exp("zero_extension_bound", _run_zero_extension_bound,
         ["zero-extension-bound", "zero-extension-theorem"],
         {"h": 1 / 256, "functions": ["constant", "coordinate", "tent", "half_x"],
          "max_C": 8.0, "collar_share": 0.1},
         "zero extension is norm-bounded; boundary term iff nonzero trace"),
    _exp("compact_support_density", _run_compact_support_density,
         ["compact-support-density", "truncation-tail", "pasted-approximation"],
         {"h": 1 / 512, "delta": 1 / 32, "gap_share": 0.1,
          "truncation_level": 2.0, "tail_tol": 0.2,
          "paste_R": 1 / 128, "paste_deltas": [0.5, 0.25, 0.125],
          "paste_scales": [1 / 32, 1 / 64, 1 / 128], "paste_tv": 0.15,
          "paste_cap": 6.0},
         "compactly supported approximants, truncation tails, pasting"),
    _exp("capacity_oracle", _run_capacity_oracle,
         ["bv-capacity", "relative-capacity"],
         {"h": 1 / 128, "iters": 800, "tol_oracle": 0.07, "tol_methods": 0.05},
         "relative capacity of a disk against the radial oracle"),
    _exp("capacity_comparability", _run_capacity_comparability,
         ["capacity-comparability"],
         {"h": 1 / 128, "iters": 600, "max_ratio": 2.5, "inner_tol": 0.15},
         "set pinning vs neighborhood pinning; monotone and inner regular"),
    _exp("mazya_suite", _run_mazya_suite,
         ["mazya-inequality", "measure-largeness-sobolev"],
         {"h": 1 / 128, "iters": 600, "max_C": 20.0,
          "balls": [[0.25, 0.0, 0.2], [-0.2, 0.2, 0.15], [0.0, 0.0, 0.25]]},
         "capacitary trace inequalities on a 12-function corpus, two weights"),
    _exp("semmes_family_check", _run_semmes_family_check,
         ["semmes-family", "riesz-kernel-bound"],
         {"h": 1 / 256, "x1": 0.2, "y1": 0.75, "n_curves": 128,
          "n_samples": 256, "max_C": 10.0, "stability": 0.25,
          "n_kernel": 100, "kernel_slack": 0.05},
         "pencil-of-curves occupation against the two-pole kernel"),
    _exp("snowflake_content", _run_snowflake_content,
         ["snowflake-boundary-divergence"],
         {"h": 1 / 512, "level": 5, "n_scales": 4, "min_ratio": 1.05},
         "von Koch prefix content diverges; circle control stays bounded"),
    _exp("domain_conditions", _run_domain_conditions,
         ["measure-density-condition", "codim-boundary-condition",
          "interior-cusp-exceptional-set"],
         {"h": 1 / 256, "min_cm": 0.15, "max_codim": 6.0, "min_fraction": 0.8},
         "measure density and codimension conditions across the catalog"),
    _exp("cantor_complement_content", _run_cantor_complement_content,
         ["cantor-complement-example"],
         {"h": 1 / 512, "level": 3, "min_cm": 0.2, "min_ratio": 1.3,
          "min_fraction": 0.8},
         "Cantor dust boundary: density holds, content grows, traces exist"),
])


# --------------------------------------------------------------------------
# operations


def run(name: str, overrides: dict | None = None, out_dir=None) -> Report:
    """Run one experiment; unknown names or config keys raise."""
    try:
        exp = EXPERIMENTS[name]
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}") from None
    cfg = dict(exp.defaults)
    if overrides:
        bad = sorted(set(overrides) - set(cfg))
        if bad:
            raise ValueError(f"unknown config keys for {name}: {', '.join(bad)}")
        cfg.update(overrides)
    sink = ArtifactSink(out_dir)
    checks: list = []
    try:
        exp.runner(cfg, checks, sink)
    except Exception as e:  # per-check errors become failed records
        checks.append(CheckRecord("runner", "plumbing", False,
                                  note=f"{type(e).__name__}: {e}"))
    report = Report(name, cfg, checks, sink.names)
    if out_dir is not None:
        report.write(out_dir)
    return report


def coverage() -> dict:
    """Map every claim to the experiments that cover it; list gaps."""
    by_claim = {c: [] for c in CLAIMS}
    for name, exp in sorted(EXPERIMENTS.items()):
        for c in exp.covers:
            by_claim[c].append(name)
    unmapped = sorted(c for c, exps in by_claim.items() if not exps)
    return {
        "n_claims": len(CLAIMS),
        "n_experiments": len(EXPERIMENTS),
        "by_claim": by_claim,
        "unmapped": unmapped,
    }


def regress(golden_dir, names=None, out_dir=None) -> dict:
    """Re-run golden reports and diff numeric fields.

    Each golden record's ``tol`` is the allowed relative drift of its own
    lhs/rhs/constant fields (absolute when the stored value is below 1);
    pass/fail states must match exactly.  Returns a summary with a ``diffs``
    list; empty means the regression is clean.
    """
    goldens = sorted(f for f in os.listdir(golden_dir) if f.endswith(".report.json"))
    if names is not None:
        keep = set(names)
        goldens = [f for f in goldens if f[: -len(".report.json")] in keep]
    if not goldens:
        raise FileNotFoundError(f"no golden reports in {golden_dir}")
    diffs = []
    compared = 0
    for fname in goldens:
        with open(os.path.join(golden_dir, fname)) as f:
            gold = json.load(f)
        name = gold["experiment"]
        fresh = run(name, overrides=None, out_dir=out_dir)
        if gold.get("schema") != SCHEMA:
            diffs.append({"experiment": name, "check": "-", "field": "schema",
                          "old": gold.get("schema"), "new": SCHEMA})
            continue
        new_by_name = {c.name: c for c in fresh.checks}
        for g in gold["checks"]:
            compared += 1
            c = new_by_name.get(g["name"])
            if c is None:
                diffs.append({"experiment": name, "check": g["name"],
                              "field": "missing", "old": g["passed"], "new": None})
                continue
            if bool(g["passed"]) != bool(c.passed) and g["passed"] is not None:
                diffs.append({"experiment": name, "check": g["name"],
                              "field": "passed", "old": g["passed"],
                              "new": c.passed})
            tol = g.get("tol")
            allowed = float(tol) if tol is not None else 1e-9
            for fieldname in ("lhs", "rhs", "constant"):
                old, new = g.get(fieldname), getattr(c, fieldname)
                if old is None or new is None:
                    continue
                scale = max(abs(float(old)), 1.0)
                if abs(float(new) - float(old)) > allowed * scale:
                    diffs.append({"experiment": name, "check": g["name"],
                                  "field": fieldname, "old": float(old),
                                  "new": float(new), "allowed": allowed * scale})
    return {"compared": compared, "experiments": len(goldens),
            "diffs": diffs, "ok": not diffs}
