import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restriction_lab.errors import DegeneratePairError, InvalidParameterError
from restriction_lab.geometry import (Cylinder, OmegaCap, Params, Tube, build_caps,
                                      build_omega_caps, build_strips, build_tubes, cap_index,
                                      hex_lattice, make_cap, normal_at, omega_index, pair_strip,
                                      parabolic_rescale, tube_overlap_measure)


def disk_points(n, seed=0):
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.random(n))
    a = rng.uniform(0, 2 * np.pi, n)
    return r * np.cos(a), r * np.sin(a)


# -- params --------------------------------------------------------------

def test_params_ladder():
    p = Params(R=64, epsilon=0.5, K=4)
    assert p.delta == pytest.approx(0.25)
    assert p.delta1 == pytest.approx(0.0625)
    assert p.delta2 == pytest.approx(0.5 ** 6)
    assert p.alpha == pytest.approx(4 ** -0.5)
    assert p.M == math.ceil(64 ** 0.0625)


@pytest.mark.parametrize("kw", [{"R": 2}, {"epsilon": 0}, {"epsilon": 1.5}, {"K": 1},
                                {"K": 2.5}, {"p0": 0.5}, {"alpha": 1.0}])
def test_params_rejects(kw):
    with pytest.raises(InvalidParameterError):
        Params(**kw)


# -- caps and strips -----------------------------------------------------------

def test_caps_k10_cover_disk_once():
    caps = build_caps(Params(K=10))
    interior = [c for c in caps if all(abs(x) + c.half_width <= 1 for x in c.center)]
    assert len(interior) >= 36
    assert len(caps) <= 100
    s, t = disk_points(20000)
    hits = sum(c.contains(s, t).astype(int) for c in caps)
    assert np.all(hits == 1)


def test_caps_k2():
    caps = build_caps(Params(K=2))
    assert len(caps) == 4
    s, t = disk_points(2000, 1)
    assert np.all(sum(c.contains(s, t).astype(int) for c in caps) == 1)


def test_cap_index_k16():
    # oracle: floor((xi + 1) K / 2)
    assert tuple(int(v) for v in cap_index(0.31, -0.77, 16)) == (10, 1)


def test_cap_boundary_is_half_open():
    K = 4
    c0, c1 = make_cap(1, 1, K), make_cap(2, 1, K)
    edge = c0.center[0] + c0.half_width
    assert not c0.contains(edge, c0.center[1])
    assert c1.contains(edge, c0.center[1])


@pytest.mark.parametrize("K,n", [(10, 20), (2, 4), (7, 14)])
def test_strip_count(K, n):
    assert len(build_strips(Params(K=K))) == n


def test_each_cap_in_one_strip_per_family():
    p = Params(K=6)
    strips = build_strips(p)
    for cap in build_caps(p):
        for fam in ("e1", "e2"):
            assert sum(L.has_cap(cap) for L in strips if L.family == fam) == 1


def test_pair_strip_flags():
    p = Params(K=4)
    a, b = make_cap(2, 2, 4), make_cap(1, 1, 4)
    assert a.center == (0.25, 0.25) and b.center == (-0.25, -0.25)
    ps = pair_strip(a, b, p)
    assert ps.axis_angle == pytest.approx(math.pi / 4)
    assert ps.nonparallel
    assert not ps.separated  # corner-adjacent
    c = make_cap(3, 2, 4)
    assert c.center == (0.75, 0.25)
    ps = pair_strip(a, c, p)
    assert ps.axis_angle == 0 and not ps.nonparallel
    assert not ps.separated
    far = make_cap(0, 0, 4)
    assert pair_strip(make_cap(2, 2, 4), far, p).separated


def test_pair_strip_symmetric_and_degenerate():
    p = Params(K=8)
    a, b = make_cap(1, 2, 8), make_cap(5, 6, 8)
    assert pair_strip(a, b, p) == pair_strip(b, a, p)
    with pytest.raises(DegeneratePairError):
        pair_strip(a, a, p)


# -- fine caps -------------------------------------------------------------

def test_omega_count_r64():
    # oracle: distinct lattice squares hit by dense disk samples plus the circle
    caps = build_omega_caps(Params(R=64))
    assert len(caps) == 241
    th = np.linspace(0, 2 * np.pi, 100001)
    s, t = disk_points(400000, 3)
    s = np.concatenate([s, np.cos(th)])
    t = np.concatenate([t, np.sin(th)])
    k1, k2 = omega_index(s, t, 1 / 8)
    hit = set(zip(k1.tolist(), k2.tolist()))
    assert hit == {c.index for c in caps}


def test_omega_r4():
    caps = build_omega_caps(Params(R=4))
    assert caps[0].spacing == 0.5
    assert len(caps) == 21


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0, 1))
def test_omega_covering(a, r):
    caps = build_omega_caps(Params(R=64))
    x = np.array([r * np.cos(a), r * np.sin(a)])
    d = min(np.hypot(*(x - np.array(c.center))) for c in caps)
    assert d <= 64 ** -0.5


@pytest.mark.parametrize("omega,expected", [
    ((0, 0), (0, 0, -1)),
    ((1, 1), (1 / math.sqrt(3),) * 2 + (-1 / math.sqrt(3),)),
    ((0.6, 0.8), (0.8 / math.sqrt(2), 0.6 / math.sqrt(2), -1 / math.sqrt(2))),
])
def test_normal_at(omega, expected):
    np.testing.assert_allclose(normal_at(omega), expected, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_normal_is_orthogonal_to_tangents(v, w):
    n = normal_at((v, w))
    # tangent vectors of (s, t, s t) at (v, w)
    assert abs(n @ [1, 0, w]) < 1e-12 and abs(n @ [0, 1, v]) < 1e-12
    assert np.linalg.norm(n) == pytest.approx(1)


# -- tubes -----------------------------------------------------------------

def test_tube_radius_and_extent():
    p = Params(R=64, epsilon=math.sqrt(0.05))
    t = build_tubes(OmegaCap((0, 0), 1 / 16, (0, 0), 1 / 8), p)
    assert t[0].radius == pytest.approx(64 ** 0.55)
    assert t[0].extent == 64
    assert t[0].radius == pytest.approx(9.849, abs=1e-3)


def test_vertical_axis_at_origin():
    p = Params(R=64)
    t = build_tubes(OmegaCap((0, 0), 1 / 16, (0, 0), 1 / 8), p)[0]
    np.testing.assert_array_equal(t.slope, [0, 0])
    np.testing.assert_array_equal(t.axis_point(np.array([-64.0, 64.0])), [t.base, t.base])


def test_tube_count_delta0():
    # oracle: hex lattice points of spacing r within R + 0.75 r of the origin
    p = Params(R=64, delta=0.0)
    tubes = build_tubes(OmegaCap((0, 0), 1 / 16, (0, 0), 1 / 8), p)
    r = 8.0
    pts = [(x, y) for _, _, x, y in hex_lattice(r, 200)]
    expect = sum(math.hypot(x, y) <= 64 + 0.75 * r for x, y in pts)
    assert len(tubes) == expect == 283


def test_tubes_cover_cylinder():
    p = Params(R=64)
    om = OmegaCap((0.25, -0.125), 1 / 16, (2, -1), 1 / 8)
    tubes = build_tubes(om, p)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-64, 64, (500, 2)), rng.uniform(-64, 64, 500)])
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= 64]
    inside = np.zeros(len(pts), bool)
    for t in tubes:
        inside |= t.contains(pts)
    assert inside.all()


def test_tube_slope_follows_normal():
    om = OmegaCap((0.25, 0.5), 1 / 16, (2, 4), 1 / 8)
    t = build_tubes(om, Params(R=64))[0]
    d = np.asarray(t.direction)
    # moving along the direction by dz changes x' by slope * dz
    np.testing.assert_allclose(d[:2] / d[2], t.slope)


# -- overlap -------------------------------------------------------------------

def test_overlap_parallel_separated():
    p = Params(R=64)
    a = Tube((0.0, 0.0), (0.0, 0.0, -1.0), 5.0, 64.0, (0.0, 0.0))
    b = Tube((10.5, 0.0), (0.0, 0.0, -1.0), 5.0, 64.0, (0.0, 0.0))
    assert tube_overlap_measure(a, b, 10000).volume == 0.0


def test_overlap_unit_cylinders():
    a = Cylinder((0, 0, 0), (1, 0, 0), 1.0, 2.0)
    b = Cylinder((0, 0, 0), (0, 1, 0), 1.0, 2.0)
    ov = tube_overlap_measure(a, b, 1_000_000, seed=0)
    assert abs(ov.volume - 16 / 3) <= 0.02 * 16 / 3
    assert ov.stderr < 0.01


def test_overlap_symmetric():
    a = Cylinder((0, 0, 0), (1, 0, 0), 1.0, 2.0)
    b = Cylinder((0.2, 0, 0), (1, 1, 0), 1.0, 3.0)
    assert tube_overlap_measure(a, b, 5000, 4) == tube_overlap_measure(b, a, 5000, 4)


def test_overlap_transverse_tubes():
    p = Params(R=64, K=8)
    K, R, r = p.K, p.R, p.tube_radius
    t1 = Tube((0.0, 0.0), tuple(normal_at((0, 0))), r, R, (0.0, 0.0))
    t2 = Tube((0.0, 0.0), tuple(normal_at((1 / K, 1 / K))), r, R, (1 / K, 1 / K))
    v = tube_overlap_measure(t1, t2, 200_000).volume
    assert 1 / 8 <= v / (K * R ** 1.5) <= 8


def test_overlap_rejects_few_samples():
    a = Cylinder((0, 0, 0), (1, 0, 0), 1.0, 2.0)
    with pytest.raises(InvalidParameterError):
        tube_overlap_measure(a, a, 10)


# -- rescaling ---------------------------------------------------------------

def test_rescale_cap_maps_to_unit_square():
    from restriction_lab.surface import SurfaceFunction
    p = Params(R=64, K=4)
    f = SurfaceFunction.from_callable(lambda s, t: np.ones_like(s), 1 / 64)
    cap = make_cap(2, 1, 4)
    g, cmap = parabolic_rescale(f, cap, p, "cap")
    S, T = g.nodes()
    assert np.all(np.abs(S[g.mask]) <= 1) and np.all(np.abs(T[g.mask]) <= 1)
    assert cmap.prefactor == pytest.approx(1 / 16)
    np.testing.assert_allclose(cmap.matrix @ [0, 0, 16], [cap.center[1] * 4, cap.center[0] * 4, 1])


def test_rescale_rejects_unknown_mode():
    from restriction_lab.surface import SurfaceFunction
    f = SurfaceFunction.zeros(0.1)
    with pytest.raises(InvalidParameterError):
        parabolic_rescale(f, make_cap(0, 0, 4), Params(K=4), "twist")


def test_rescale_k1_is_identity():
    from restriction_lab.surface import SurfaceFunction
    f = SurfaceFunction.from_callable(lambda s, t: s + 1j * t, 1 / 32)
    g, cmap = parabolic_rescale(f, make_cap(0, 0, 1), Params(K=4), "cap", K=1)
    np.testing.assert_array_equal(g.values, f.values)
    np.testing.assert_array_equal(cmap.matrix, np.eye(3))
    assert cmap.prefactor == 1 and not np.any(cmap.phase)
