from __future__ import annotations

import numpy as np
import pytest

from bvlab.domains import (check_codim_boundary, check_measure_density,
                           make_domain, mask_from_pgm,
                           measure_theoretic_boundary, parse_domain_spec,
                           shrink_domain)


def test_square_area(square128):
    assert square128.area == pytest.approx(1.0, rel=0.02)
    assert square128.groups == ["corner", "edge"]


def test_disk_area_and_sampler(disk64):
    assert disk64.area == pytest.approx(np.pi * 0.25, rel=0.02)
    pts = disk64.boundary_points("circle", 32)
    assert pts.shape == (32, 2)
    assert np.allclose(np.hypot(pts[:, 0], pts[:, 1]), 0.5, atol=1e-12)


def test_under_resolved_kinds_raise():
    with pytest.raises(ValueError):
        make_domain("disk", h=1 / 16, radius=0.05)
    with pytest.raises(ValueError):
        make_domain("cantor_complement", h=1 / 64, level=6)
    with pytest.raises(ValueError):
        make_domain("strip", h=1 / 256, i=4)  # needs the ambient cusp grid


def test_unknown_kind_and_group(square64):
    with pytest.raises(ValueError):
        make_domain("pentagon", h=1 / 32)
    with pytest.raises(KeyError):
        square64.boundary_points("arc", 4)


def test_exterior_cusp_profile(cusp256):
    X, Y = cusp256.space.meshgrid()
    assert not np.any(cusp256.inside & (np.abs(Y) >= np.maximum(X, 0.0) ** 2))
    # |{0 < x < 1, |y| < x^2}| = 2/3; the tip columns below resolution are empty
    assert cusp256.area == pytest.approx(2 / 3, rel=0.05)
    assert cusp256.boundary_points("tip", 1).tolist() == [[0.0, 0.0]]


def test_slit_disk_is_cut(slit128):
    X, Y = slit128.space.meshgrid()
    h = slit128.space.h
    on_slit = (X > 0.05) & (np.abs(Y) < h / 4)
    assert not np.any(slit128.inside & on_slit)
    assert slit128.area == pytest.approx(np.pi, rel=0.05)


def test_parse_domain_spec():
    d = parse_domain_spec("disk:radius=0.5", h=1 / 64)
    assert d.name == "disk"
    assert d.area == pytest.approx(np.pi * 0.25, rel=0.02)
    s = parse_domain_spec("strip:i=4", h=1 / 256)
    assert s.name == "strip_4"
    X, _ = s.space.meshgrid()
    assert not np.any(s.inside & (X >= 0.25))


def test_measure_theoretic_boundary_hugs_circle(disk64):
    h = disk64.space.h
    bm = measure_theoretic_boundary(disk64, radii=[4 * h, 8 * h])
    jy, jx = np.nonzero(bm.cells)
    assert len(jy) > 0
    rr = np.hypot(disk64.space.xs[jx], disk64.space.ys[jy])
    assert np.all(np.abs(rr - 0.5) <= 1.5 * h)
    # stays inside the topological boundary cells by construction
    assert not np.any(bm.cells & ~disk64.boundary_cells)


def test_measure_density_square_passes(square128):
    h = square128.space.h
    pts = square128.boundary_points("edge", 16)
    rep = check_measure_density(square128, pts, [4 * h, 8 * h, 16 * h])
    assert rep.failures == []
    assert rep.c_m >= 0.2
    assert rep.gamma is not None and 0.0 < rep.gamma <= 0.5


def test_measure_density_fails_at_cusp_tip(cusp256):
    h = cusp256.space.h
    rep = check_measure_density(cusp256, cusp256.boundary_points("tip", 1),
                                [4 * h, 8 * h, 16 * h, 32 * h])
    assert len(rep.failures) == 1


def test_codim_boundary_bounded_on_square(square64):
    h = square64.space.h
    pts = square64.boundary_points("edge", 8)
    rep = check_codim_boundary(square64, pts, [8 * h, 16 * h])
    assert np.isfinite(rep.C_bdry)
    assert 0.0 < rep.C_bdry < 10.0


def test_shrink_domain(square64):
    inner = shrink_domain(square64, 0.1)
    assert inner.inside.sum() < square64.inside.sum()
    assert np.all(square64.inside[inner.inside])
    with pytest.raises(ValueError):
        shrink_domain(square64, 1 / 128)  # below 2h
    with pytest.raises(ValueError):
        shrink_domain(square64, 0.6)  # nothing left


def test_mask_from_pgm(tmp_path):
    p = tmp_path / "m.pgm"
    p.write_text("P2\n# comment line\n3 2\n255\n255 0 0\n255 255 0\n")
    d = mask_from_pgm(p, h=1.0)
    assert d.space.shape == (2, 3)
    # file row 0 is the top of the image, so it lands in grid row 1
    assert d.inside[1].tolist() == [True, False, False]
    assert d.inside[0].tolist() == [True, True, False]


def test_domain_on_supplied_space(square64):
    # building on an existing grid keeps that grid
    d = make_domain("disk", space=square64.space, radius=0.3)
    assert d.space is square64.space
