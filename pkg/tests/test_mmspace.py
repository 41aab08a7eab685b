from __future__ import annotations

import numpy as np
import pytest

from bvlab.mmspace import (Ball, GridSpace, ball_cells, ball_sums,
                           estimate_doubling, mu, mu_ball, row_prefix)


def test_grid_rejects_misaligned_extent():
    with pytest.raises(ValueError):
        GridSpace((0.0, 0.0), (1.0, 0.7), 1 / 3)
    with pytest.raises(ValueError):
        GridSpace((0.0, 0.0), (1.0, 1.0), -0.1)


def test_grid_cell_centers():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 0.25)
    assert g.shape == (4, 4)
    assert np.allclose(g.xs, [0.125, 0.375, 0.625, 0.875])
    assert g.extent == (1.0, 1.0)


def test_mu_splits_over_complementary_regions():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 64, ("power", -0.5))
    X, _ = g.meshgrid()
    left = X < 0.5
    assert mu(g, left) + mu(g, ~left) == pytest.approx(mu(g))


def test_power_weight_ball_mass_law():
    # mu(B(0, r)) = 2 pi r for w = |x|^{-1}; coarse grid, loose tolerance
    g = GridSpace((-0.75, -0.75), (1.5, 1.5), 1 / 256, ("power", -1.0))
    for r in (0.2, 0.4, 0.6):
        assert mu_ball(g, Ball((0.0, 0.0), r)) == pytest.approx(2 * np.pi * r, rel=0.03)


def test_flat_weight_ball_mass():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 128)
    assert mu_ball(g, Ball((0.5, 0.5), 0.25)) == pytest.approx(np.pi * 0.25 ** 2,
                                                               rel=0.01)


def test_mu_ball_below_resolution_raises():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 16)
    with pytest.raises(ValueError):
        mu_ball(g, Ball((0.5, 0.5), 1 / 32))


def test_ball_sums_matches_direct_mask():
    rng = np.random.default_rng(7)
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 64)
    X, Y = g.meshgrid()
    field = rng.standard_normal(g.shape)
    prefix = row_prefix(field)
    centers = rng.uniform(0.1, 0.9, size=(20, 2))
    radii = rng.uniform(0.05, 0.3, size=20)
    got = ball_sums(g, prefix, centers, radii)
    for k in range(20):
        m = (X - centers[k, 0]) ** 2 + (Y - centers[k, 1]) ** 2 < radii[k] ** 2
        assert got[k] == pytest.approx(field[m].sum(), abs=1e-9)


def test_ball_sums_truncates_at_grid_edge():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 32)
    inside = ball_sums(g, g.mass_prefix, [(0.0, 0.0)], 0.5)[0]
    # quarter of the ball lies on the grid
    assert inside == pytest.approx(np.pi * 0.25 / 4.0, rel=0.05)


def test_ball_cells_exact_membership():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 32)
    X, Y = g.meshgrid()
    centers = [(0.5, 0.5), (0.1, 0.9)]
    radii = [0.25, 0.17]
    indptr, cells = ball_cells(g, centers, radii)
    for k in range(2):
        c, r = centers[k], radii[k]
        want = np.nonzero(((X - c[0]) ** 2 + (Y - c[1]) ** 2 < r * r).ravel())[0]
        got = np.sort(cells[indptr[k]:indptr[k + 1]])
        assert np.array_equal(got, want)


def test_row_prefix_partial_sums():
    rng = np.random.default_rng(3)
    a = rng.uniform(size=(5, 9))
    p = row_prefix(a)
    assert p[2, 7] - p[2, 3] == pytest.approx(a[2, 3:7].sum())
    assert np.allclose(p[:, 0], 0.0)


def test_doubling_flat_weight():
    g = GridSpace((0.0, 0.0), (2.0, 2.0), 1 / 64)
    rep = estimate_doubling(g, [(1.0, 1.0)], [0.1, 0.2, 0.4])
    assert rep.C_d == pytest.approx(4.0, rel=0.05)
    assert rep.Q == pytest.approx(2.0, abs=0.05)
    assert len(rep.samples) > 0
    ball, ratio = rep.samples[0]
    assert ratio == pytest.approx(rep.C_d)


def test_doubling_q_drops_at_weight_singularity():
    # mu(B(0, r)) = 2 pi r, so the fitted mass exponent is 1 at the origin
    g = GridSpace((-1.0, -1.0), (2.0, 2.0), 1 / 256, ("power", -1.0))
    rep = estimate_doubling(g, [(0.0, 0.0)], [0.05, 0.1, 0.2, 0.4])
    assert rep.Q == pytest.approx(1.0, abs=0.05)


def test_doubling_degenerate_samples_raise():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 16)
    with pytest.raises(ValueError):
        estimate_doubling(g, [(0.5, 0.5)], [])
    with pytest.raises(ValueError):
        estimate_doubling(g, [(0.5, 0.5)], [1 / 64])


def test_grid_json_round_trip():
    g = GridSpace((-0.5, 0.25), (1.5, 0.75), 1 / 16, ("power", -0.5))
    g2 = GridSpace.from_json(g.to_json())
    assert g2.origin == g.origin
    assert g2.shape == g.shape
    assert g2.weight == g.weight
