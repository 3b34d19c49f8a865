import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as npoly

from restriction_lab.errors import InvalidParameterError
from restriction_lab.geometry import OmegaCap, Params, build_tubes
from restriction_lab.polypart import (Ball, MassSample, Partition, TrivariatePolynomial,
                                      classify_tube, classify_tubes, degree_schedule,
                                      ham_sandwich_bisect, imbalance, line_crossings,
                                      monomials, n_monomials, partition, perturb_nonsingular,
                                      random_line_check, singularity_margin)

P64 = Params(R=64)


def poly(terms, scale=1.0):
    return TrivariatePolynomial.from_terms(terms, scale)


def random_poly(d, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return TrivariatePolynomial(tuple(rng.standard_normal(n_monomials(d))), scale)


# -- polynomials -------------------------------------------------------------

def test_monomial_count():
    for d in range(6):
        assert len(monomials(d)) == n_monomials(d)


def test_bad_coefficient_count():
    with pytest.raises(InvalidParameterError):
        TrivariatePolynomial((1.0, 2.0))


def test_degree_ignores_zero_top_terms():
    P = poly({(0, 0, 0): 1.0, (1, 0, 0): 2.0, (0, 0, 3): 0.0})
    assert P.nominal_degree == 3 and P.degree == 1


coef3 = st.lists(st.floats(-10, 10), min_size=n_monomials(3), max_size=n_monomials(3))
point = st.tuples(*[st.floats(-3, 3)] * 3)


@settings(max_examples=40, deadline=None)
@given(coef3, point, st.floats(0.5, 4))
def test_eval_matches_monomial_sum(c, x, scale):
    P = TrivariatePolynomial(tuple(c), scale)
    u = np.array(x) / scale
    direct = sum(ci * u[0] ** i * u[1] ** j * u[2] ** k for ci, (i, j, k) in zip(c, monomials(3)))
    assert P([x])[0] == pytest.approx(direct, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(coef3, point, point, st.floats(-2, 2))
def test_restrict_to_line(c, x0, v, t):
    P = TrivariatePolynomial(tuple(c), 2.0)
    q = P.restrict_to_line(x0, v)
    x = np.array(x0) + t * np.array(v)
    assert npoly.polyval(t, q) == pytest.approx(P([x])[0], rel=1e-8, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(coef3, point)
def test_gradient_finite_difference(c, x):
    P = TrivariatePolynomial(tuple(c), 1.5)
    x = np.array(x)
    h = 1e-6
    fd = [(P([x + h * e])[0] - P([x - h * e])[0]) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(P.gradient([x])[0], fd, rtol=1e-5, atol=1e-4)


def test_dict_roundtrip():
    P = random_poly(2, 1, 7.0)
    assert TrivariatePolynomial.from_dict(P.to_dict()) == P


# -- bisection ----------------------------------------------------------------

def test_degree_schedule():
    degs, c, ok = degree_schedule(4)
    assert degs == [1, 2, 2, 2, 3, 4] and ok
    assert degree_schedule(1)[0] == [1]
    # each round can bisect all current cells
    for j, d in enumerate(degs, 1):
        assert n_monomials(d) - 1 >= 2 ** (j - 1)


def test_bisect_two_points():
    pts = [MassSample([[1.0, 2.0, 3.0], [-1.0, 0.5, 2.0]])]
    b = ham_sandwich_bisect(pts, 1)
    assert b.achieved
    assert sorted(np.sign(b.polynomial(pts[0].points))) == [-1, 1]


def test_bisect_three_sets_linear():
    rng = np.random.default_rng(4)
    sets = [MassSample(rng.standard_normal((4, 3))) for _ in range(3)]
    # oracle: some plane through three of the twelve points bisects every set
    allp = np.vstack([s.points for s in sets])
    found = False
    for a, b, c in itertools.combinations(range(12), 3):
        n = np.cross(allp[b] - allp[a], allp[c] - allp[a])
        if np.linalg.norm(n) < 1e-12:
            continue
        if all(max(np.sum((s.points - allp[a]) @ n > 1e-12), np.sum((s.points - allp[a]) @ n < -1e-12)) <= 2
               for s in sets):
            found = True
            break
    assert found
    res = ham_sandwich_bisect(sets, 1, eta=0.05)
    assert res.achieved and res.max_imbalance <= 0.05


def test_bisect_nine_sets_quadratic():
    rng = np.random.default_rng(5)
    sets = [MassSample(rng.standard_normal((300, 3)) + rng.standard_normal(3) * 3) for _ in range(9)]
    res = ham_sandwich_bisect(sets, 2, eta=0.05)
    assert res.achieved
    assert all(i <= 0.05 for i in res.imbalances)


def test_bisect_too_many_sets():
    sets = [MassSample(np.random.default_rng(k).standard_normal((5, 3))) for k in range(4)]
    with pytest.raises(InvalidParameterError):
        ham_sandwich_bisect(sets, 1)


# -- partitions -------------------------------------------------------------------

def test_partition_m1():
    sample = MassSample.uniform_ball(2000, 64, seed=1)
    part = partition(sample, P64.with_(M_override=1))
    assert part.rounds == 1 and len(part.nonempty_cells) == 2
    assert part.mass_ratio <= 0.55 / 0.45


@pytest.fixture(scope="module")
def part4():
    sample = MassSample.uniform_ball(4096, 64, seed=0)
    return partition(sample, P64.with_(M_override=4)), sample


def test_partition_m4(part4):
    part, sample = part4
    assert part.rounds == 6 and part.degree <= 16
    assert len(part.nonempty_cells) <= 64
    assert part.mass_ratio <= part.ratio_bound
    assert part.ratio_bound == pytest.approx((0.55 / 0.45) ** 6)
    assert sum(part.masses.values()) == pytest.approx(sample.total_mass)


def test_partition_lines(part4):
    res = random_line_check(part4[0], n=300, seed=2)
    assert res["violations"] == 0 and res["max_crossings"] <= res["bound"]


def test_partition_degenerate():
    part = partition(MassSample(np.ones((10, 3))), P64)
    assert part.degenerate and part.rounds == 0


def test_partition_rejects_zero_mass():
    with pytest.raises(InvalidParameterError):
        partition(MassSample(np.eye(3), np.zeros(3)), P64)


def test_imbalance_balanced_plane():
    s = MassSample([[1, 0, 0], [-1, 0, 0], [2, 0, 0], [-2, 0, 0]])
    assert imbalance(poly({(1, 0, 0): 1.0}), s) == 0


# -- perturbation -------------------------------------------------------------

def test_perturb_singular_square():
    P = poly({(2, 0, 0): 1.0}, 10.0)
    assert singularity_margin(P, 2000) < 1e-6
    Q = perturb_nonsingular(P, 1e-3, n_samples=2000)
    assert singularity_margin(Q, 2000) > 0


def test_perturb_sphere_is_small():
    P = poly({(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0, (0, 0, 0): -0.25}, 10.0)
    Q = perturb_nonsingular(P, 1e-6, n_samples=2000)
    assert np.linalg.norm(Q.coef - P.coef) <= 1e-6 * np.linalg.norm(P.coef)


def test_perturb_random_product():
    a, b = random_poly(2, 8), random_poly(2, 9)
    cube = np.zeros((5, 5, 5))
    for ea, va in zip(monomials(2), a.coefficients):
        for eb, vb in zip(monomials(2), b.coefficients):
            cube[tuple(np.add(ea, eb))] += va * vb
    P = TrivariatePolynomial(tuple(cube[e] for e in monomials(4)), 1.0)
    Q = perturb_nonsingular(P, 1e-6, n_samples=2000)
    assert singularity_margin(Q, 2000) > 1e-8


def test_perturb_zero_rejected():
    with pytest.raises(InvalidParameterError):
        perturb_nonsingular(TrivariatePolynomial((0.0,) * 4))


# -- locating ---------------------------------------------------------------

def plane_partition(axis):
    e = [0, 0, 0]
    e[axis] = 1
    return Partition([poly({tuple(e): 1.0}, 64.0)], 64.0, P64.delta)


def test_locate_plane():
    part = plane_partition(0)
    assert part.locate([[40, 0, 0], [0, 5, 5], [-40, 0, 0]]) == ["+", "wall", "-"]


def test_locate_sphere_band():
    # oracle: for |x| = 30 the first-order distance |P| / |grad P| is
    # d (|x| + 30) / (2 |x|) with d the exact distance to the sphere
    P = poly({(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0, (0, 0, 0): -(30 / 64) ** 2}, 64.0)
    part = Partition([P], 64.0, P64.delta)
    w = part.wall_width
    x = MassSample.uniform_ball(1000, 64, seed=3).points
    r = np.linalg.norm(x, axis=1)
    alg = np.abs(r - 30) * (r + 30) / (2 * r)
    wall = part.locate_codes(x) < 0
    assert np.all(wall[alg < 0.99 * w])
    assert not np.any(wall[alg > 1.01 * w])
    assert 0 < wall.sum() < len(x)


# -- lines ----------------------------------------------------------------------

def test_line_crossings_examples():
    sphere = poly({(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0, (0, 0, 0): -1.0})
    lc = line_crossings(sphere, [0, 0, 0], [1, 0, 0])
    np.testing.assert_allclose(lc.roots, [-1, 1])
    assert line_crossings(sphere, [0, 0, 5], [1, 0, 0]).count == 0
    assert line_crossings(sphere, [0, 1, 0], [0, 0, 1]).count == 1  # tangent
    plane = poly({(1, 0, 0): 1.0})
    assert line_crossings(plane, [0, 3, 0], [0, 1, 0]).infinite
    with pytest.raises(InvalidParameterError):
        line_crossings(plane, [0, 0, 0], [0, 0, 0])


def test_line_crossings_degree6_sign_changes():
    # oracle: sign changes on a fine grid are a lower bound; degree an upper bound
    factors = [random_poly(2, k, 10.0) for k in range(3)]
    rng = np.random.default_rng(0)
    t = np.linspace(-30, 30, 60001)
    for _ in range(100):
        x0, v = rng.standard_normal(3) * 5, rng.standard_normal(3)
        lc = line_crossings(factors, x0, v, window=(-30, 30))
        changes = 0
        for F in factors:
            vals = npoly.polyval(t, F.restrict_to_line(x0, v))
            changes += int(np.sum(np.sign(vals[1:]) * np.sign(vals[:-1]) < 0))
        assert changes <= lc.count
        assert lc.count <= 6


# -- tube classification ---------------------------------------------------------

def tube_at(index, base=(0.0, 0.0)):
    s = P64.omega_spacing
    om = OmegaCap((index[0] * s, index[1] * s), s / 2, index, s)
    return min(build_tubes(om, P64), key=lambda t: math.hypot(t.base[0] - base[0], t.base[1] - base[1]))


BALL = Ball((0.0, 0.0, 0.0), 64 ** (1 - P64.delta))


@pytest.mark.parametrize("index,axis,label", [
    ((3, 0), 0, "tangential"),   # direction lies in the plane x1 = 0
    ((2, 2), 0, "transversal"),  # angle 0.238 above the 0.189 threshold
    ((0, 0), 2, "transversal"),
    ((3, 0), 2, "transversal"),
])
def test_classify_plane_walls(index, axis, label):
    t = tube_at(index)
    part = plane_partition(axis)
    assert classify_tube(t, part, BALL, P64).label == label
    codes, _ = classify_tubes([t], part, BALL, P64)
    assert ("none", "tangential", "transversal")[codes[0]] == label


def test_classify_far_tube():
    t = tube_at((0, 0), (60.0, 0.0))
    assert classify_tube(t, plane_partition(0), BALL, P64).label == "none"


def test_classify_batch_agrees(part4):
    part = part4[0]
    s = P64.omega_spacing
    om = OmegaCap((2 * s, -s), s / 2, (2, -1), s)
    tubes = build_tubes(om, P64)[::7]
    ball = Ball((20.0, 0.0, 0.0), BALL.radius)
    codes, _ = classify_tubes(tubes, part, ball, P64)
    single = [("none", "tangential", "transversal").index(classify_tube(t, part, ball, P64).label)
              for t in tubes]
    agree = np.mean(np.array(single) == codes)
    assert agree >= 0.9
    assert np.array_equal(np.array(single) == 0, codes == 0)
