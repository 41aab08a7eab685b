from __future__ import annotations

import numpy as np
import pytest

from bvlab.hausdorff import content_HR, measure_H
from bvlab.mmspace import GridSpace


def _segment_target(g: GridSpace, y0: float = 0.5, x_lo: float = 0.2,
                    x_hi: float = 0.8) -> np.ndarray:
    X, Y = g.meshgrid()
    return (np.abs(Y - y0) < g.space_h if False else np.abs(Y - y0) < g.h / 2) \
        & (X > x_lo) & (X < x_hi)


def test_segment_content_matches_length_oracle():
    # covering a length-L segment with balls of radius r costs about
    # (pi r^2 / r) * (L / 2r) = pi L / 2, independent of r
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 128)
    target = _segment_target(g)
    sol = content_HR(g, target, R=16 / 128)
    oracle = np.pi * 0.6 / 2.0
    assert 0.5 * oracle <= sol.content <= 2.0 * oracle
    assert sol.lower_bound <= sol.content + 1e-9
    assert sol.target_count == int(target.sum())


def test_cover_actually_covers():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 64)
    target = _segment_target(g)
    sol = content_HR(g, target, R=8 / 64)
    jy, jx = np.nonzero(target)
    pts = np.stack([g.xs[jx], g.ys[jy]], axis=1)
    covered = np.zeros(len(pts), dtype=bool)
    for b in sol.balls:
        covered |= np.hypot(pts[:, 0] - b.center[0],
                            pts[:, 1] - b.center[1]) < b.radius + 1e-12
    assert covered.all()


def test_point_content_scales_with_h():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 128)
    target = np.zeros(g.shape, dtype=bool)
    target[64, 64] = True
    sol = content_HR(g, target, R=16 / 128)
    # a single cell is covered by one smallest ball: cost ~ pi * 4h
    assert 0.0 < sol.content <= 2.0 * np.pi * 4 * g.h
    assert len(sol.balls) == 1


def test_empty_target_and_bad_scale():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 32)
    empty = np.zeros(g.shape, dtype=bool)
    sol = content_HR(g, empty, R=0.25)
    assert sol.content == 0.0 and sol.balls == []
    with pytest.raises(ValueError):
        content_HR(g, empty | True, R=2 * g.h)  # below the 4h floor


def test_masked_content_collapses_in_the_cusp(cusp256):
    # zero-extended measure of the tip: ball masses shrink like r^3, so the
    # cheapest cover of the tip cell costs almost nothing
    g = cusp256.space
    target = np.zeros(g.shape, dtype=bool)
    ix = int(np.argmin(np.abs(g.xs)))
    iy = int(np.argmin(np.abs(g.ys)))
    target[iy, ix] = True
    plain = content_HR(g, target, R=8 * g.h).content
    masked = content_HR(g, target, R=8 * g.h, mask=cusp256.inside).content
    assert plain > 0.05
    assert masked < 0.05 * plain


def test_measure_H_flat_for_rectifiable_targets():
    g = GridSpace((0.0, 0.0), (1.0, 1.0), 1 / 128)
    target = _segment_target(g)
    est = measure_H(g, target, scales=[32 / 128, 16 / 128, 8 / 128],
                    keep_covers=True)
    assert not est.divergent
    assert est.scales == sorted(est.scales, reverse=True)
    assert len(est.covers) == 3
    vals = np.asarray(est.values)
    assert np.all(vals > 0)
    # rectifiable: no growth beyond cover slack under scale refinement
    assert vals.max() / vals.min() < 1.7
    assert est.extrapolated == vals[-1]
