import math

import numpy as np
import pytest

from restriction_lab.broad import (CapField, bil_values, bilinear_l4_l2_norms,
                                   bilinear_orthogonality_check, broad_values, cap_field,
                                   cap_pairs, cascade_check, cell_tube_incidence, plane_wall,
                                   qualifying_pairs, random_tangential_config, separated_config,
                                   sort_wall_tubes, tube_meets_cube, wall_grid)
from restriction_lab.errors import InvalidParameterError
from restriction_lab.extension import EvalGrid, evaluate_extension
from restriction_lab.families import random_smooth, single_cap
from restriction_lab.geometry import OmegaCap, Params, Tube, build_caps, build_tubes, make_cap
from restriction_lab.polypart import Ball, MassSample, Partition, TrivariatePolynomial, partition
from restriction_lab.surface import SurfaceFunction
from restriction_lab.wavepacket import decompose

P4 = Params(R=64, K=4)
GRID = EvalGrid.random_ball(10, 60, seed=1)
H = 1 / 128


def field_of(f, params=P4, grid=GRID):
    return cap_field(f, grid, params)


# -- cap fields ---------------------------------------------------------------

def test_cap_field_zero():
    cf = field_of(SurfaceFunction.zeros(1 / 64))
    assert not np.any(cf.values)
    assert not np.any(broad_values(cf, 0.5))


def test_cap_field_sums_to_extension():
    f = random_smooth(3).sample(H)
    cf = field_of(f)
    np.testing.assert_allclose(cf.total, evaluate_extension(f, GRID), atol=1e-10)


def test_single_cap_field():
    f = single_cap(make_cap(1, 2, 4)).sample(H)
    cf = field_of(f)
    live = [c.index for c, row in zip(cf.caps, cf.values) if np.any(row)]
    assert live == [(1, 2)]
    np.testing.assert_array_equal(cf[make_cap(1, 2, 4)], cf.total)
    with pytest.raises(KeyError):
        cf[make_cap(9, 9, 16)]


# -- broad part ------------------------------------------------------------------

def test_broad_single_cap_thresholds():
    # cap and strip maxima are both |Ef|, so the sum is exactly 2 |Ef|
    cf = field_of(single_cap(make_cap(2, 1, 4)).sample(H))
    assert not np.any(broad_values(cf, 1.9))
    np.testing.assert_array_equal(broad_values(cf, 2.0), cf.total)


def test_broad_spread_function():
    p = Params(R=64, K=8)
    grid = EvalGrid.random_ball(20, 400, seed=4)
    cf = field_of(random_smooth(2).sample(1 / 256), p, grid)
    b = broad_values(cf, p.alpha)
    frac = np.mean(b != 0)
    assert 0 < frac < 1
    nz = b != 0
    np.testing.assert_array_equal(b[nz], cf.total[nz])


# -- bil ----------------------------------------------------------------------

def two_cap_field(i, j, grid=GRID):
    a, b = make_cap(*i, 4), make_cap(*j, 4)
    fa = single_cap(a).sample(H)
    fb = single_cap(b).sample(H)
    return CapField.from_parts([(a, fa), (b, fb)], grid, P4), fa, fb


def test_bil_axis_parallel_pair_is_zero():
    cf, _, _ = two_cap_field((0, 1), (3, 1))
    assert qualifying_pairs(cf.caps, P4) == []
    assert not np.any(bil_values(cf))


def test_bil_separated_diagonal_pair():
    cf, fa, fb = two_cap_field((0, 0), (3, 3))
    assert qualifying_pairs(cf.caps, P4) == [(0, 1)]
    ea = evaluate_extension(fa, GRID)
    eb = evaluate_extension(fb, GRID)
    np.testing.assert_allclose(bil_values(cf), np.sqrt(np.abs(ea) * np.abs(eb)), rtol=1e-12)


def test_bil_zero():
    cf = field_of(SurfaceFunction.zeros(1 / 64))
    assert not np.any(bil_values(cf))


# -- incidence ----------------------------------------------------------------------

def plane(axis, R=64.0):
    e = [0, 0, 0]
    e[axis] = 1
    return Partition([TrivariatePolynomial.from_terms({tuple(e): 1.0}, R)], R, P4.delta)


def tubes_of(index, params=P4):
    s = params.omega_spacing
    return build_tubes(OmegaCap((index[0] * s, index[1] * s), s / 2, index, s), params)


def test_incidence_horizontal_plane():
    tubes = tubes_of((2, 1))[::5]
    _, rep = cell_tube_incidence(plane(2), tubes, P4)
    assert rep["max_visits"] <= 2 and rep["violations"] == 0


def test_incidence_random_partition():
    sample = MassSample.uniform_ball(2048, 64, seed=2)
    part = partition(sample, P4.with_(M_override=2))
    rng = np.random.default_rng(0)
    tubes = tubes_of((1, -2))
    tubes = [tubes[k] for k in rng.choice(len(tubes), 100, replace=False)]
    tab, rep = cell_tube_incidence(part, tubes, P4)
    assert rep["bound"] == part.degree + 1
    assert rep["violations"] == 0
    assert sum(len(v) for v in tab.cells.values()) == int(tab.visits.sum())


def test_tube_inside_wall_visits_nothing():
    # Omega on the xi1 axis gives a direction inside the plane x1 = 0
    t = min(tubes_of((3, 0)), key=lambda t: abs(t.base[0]) + abs(t.base[1]))
    tab, _ = cell_tube_incidence(plane(0), [t], P4)
    assert tab.visits[0] == 0


def test_sort_wall_tubes_empty():
    ball = Ball((0.0, 0.0, 0.0), 20.0)
    tab, rep = sort_wall_tubes(plane(0), [ball], [], P4)
    assert rep["flat_total"] == rep["sharp_total"] == 0
    assert rep["violations"] == 0


def test_sort_wall_tubes_plane():
    ball = Ball((0.0, 0.0, 0.0), 64 ** (1 - P4.delta))
    tubes = [t for t in tubes_of((3, 0)) if abs(t.base[0]) < 5] + \
            [t for t in tubes_of((3, 3)) if abs(t.base[0]) < 5]
    tab, rep = sort_wall_tubes(plane(0), [ball], tubes, P4)
    assert rep["flat_total"] > 0 and rep["sharp_total"] > 0
    assert all(tubes[k].omega_index == (3, 0) for k in tab.flat[0])
    assert all(tubes[k].omega_index == (3, 3) for k in tab.sharp[0])
    assert tab.direction_counts() == {0: 1}


# -- tangential configurations ------------------------------------------------------

def test_plane_wall_orientation():
    w = plane_wall(P4, "diag", 2.0)
    assert w.locate([[1.0 + 100, 1.0, 0.0]]) == ["+"]
    assert w.locate([[2.0, 0.0, 5.0], [0.0, 101.0, 0.0]]) == ["wall", "-"]


def test_random_config_cube_on_wall():
    p = Params(R=64, K=8)
    for seed in range(5):
        cfg = random_tangential_config(p, seed)
        c = np.array(cfg.cube_center)
        assert np.linalg.norm(c) <= 32 + 1e-9
        assert cfg.wall.wall_distance([c])[0] <= 1e-9
        a, b = cfg.caps
        assert max(abs(a.index[0] - b.index[0]), abs(a.index[1] - b.index[1])) == 1


def test_separated_pairs():
    for a, b in cap_pairs(Params(R=64, K=8), "anti", True):
        assert abs(a.index[0] - b.index[0]) >= 2
    cfg = separated_config(P4)
    assert cfg.caps[0].index != cfg.caps[1].index
    with pytest.raises(InvalidParameterError):
        separated_config(Params(R=64, K=2))


def test_tube_meets_cube():
    t = Tube((0.0, 0.0), (0.0, 0.0, -1.0), 5.0, 64.0, (0.0, 0.0))
    assert tube_meets_cube(t, (0, 0, 0), 8.0)
    assert tube_meets_cube(t, (8.9, 0, 0), 8.0)
    assert not tube_meets_cube(t, (9.1, 0, 0), 8.0)
    assert not tube_meets_cube(t, (0, 0, 80), 8.0)


# -- orthogonality and norms ------------------------------------------------------

R16 = Params(R=16, epsilon=math.sqrt(0.05), K=4)


def test_orthogonality_single_tube_ratio_one():
    wps = decompose(random_smooth(5).sample(1 / (8 * 16 * 2.0)), R16)
    om = max(wps.omegas, key=lambda o: wps.block(o).mass)
    t = wps.block(om).tubes[0]
    rep = bilinear_orthogonality_check(wps, [t], [t], (0.0, 0.0, 0.0), 4.0, R16, n=6)
    assert rep.ratio == pytest.approx(1.0, abs=1e-6)
    assert rep.passed


def test_orthogonality_flags():
    wps = decompose(SurfaceFunction.zeros(1 / (8 * 16 * 2.0)), R16)
    t = next(wps.all_tubes())
    rep = bilinear_orthogonality_check(wps, [t], [t], (0.0, 0.0, 0.0), 4.0, R16, n=4)
    assert rep.flag == "zero packets" and rep.passed
    rep = bilinear_orthogonality_check(wps, [], [t], (0.0, 0.0, 0.0), 4.0, R16, n=4)
    assert rep.flag == "empty tube selection" and not rep.passed


def test_norms_zero_and_empty():
    region = wall_grid(plane(0), Ball((0.0, 0.0, 0.0), 30.0), 2000)
    assert np.all(region.points[:, 0] ** 2 <= P4.tube_radius ** 2 + 1e-9)
    cf = CapField.from_parts([(c, None) for c in build_caps(P4)], region, P4)
    n = bilinear_l4_l2_norms(cf, region, P4, 0.0)
    assert n.L4 == n.L2 == n.Lp0 == 0
    with pytest.raises(InvalidParameterError):
        bilinear_l4_l2_norms(cf, EvalGrid.from_points(np.zeros((0, 3))), P4, 0.0)
    with pytest.raises(InvalidParameterError):
        wall_grid(plane(0), Ball((60.0, 0.0, 0.0), 5.0), 100)


def test_cascade_trivial_split():
    p = Params(R=64, K=8)
    grid = EvalGrid.random_ball(20, 200, seed=6)
    cf = field_of(random_smooth(2).sample(1 / 256), p, grid)
    zero = CapField(cf.caps, np.zeros_like(cf.values), grid, p)
    res = cascade_check(cf, cf, zero, p.alpha)
    assert res["broad_points"] > 0 and res["violations"] == 0
    assert res["worst_ratio"] <= 1.0
