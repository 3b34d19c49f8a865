import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restriction_lab import kernels
from restriction_lab.errors import InvalidParameterError, ResolutionError
from restriction_lab.extension import (SIGMA_S, EvalGrid, cap_measure_convolution_sup,
                                       convolution_density, diagonal_omega_pair,
                                       evaluate_extension, evaluate_multires,
                                       evaluate_product_grid, lp_norm, rescale_identity_error,
                                       surface_l2)
from restriction_lab.families import constant, make_family, random_smooth, single_cap
from restriction_lab.geometry import OmegaCap, Params, build_caps, build_strips, make_cap
from restriction_lab.surface import SurfaceFunction, disk_grid


@pytest.fixture(scope="module")
def smooth():
    return random_smooth(7).sample(1 / 256)


def test_sigma_closed_form():
    # oracle: 2 pi int_0^1 sqrt(1 + r^2) r dr
    assert SIGMA_S == pytest.approx(3.8294488, abs=1e-6)


def test_zero_density():
    f = SurfaceFunction.zeros(1 / 128)
    v = evaluate_extension(f, EvalGrid.random_ball(10, 50))
    assert np.all(v == 0)


def test_constant_at_origin():
    f = constant().sample(1 / 512)
    v = evaluate_extension(f, [[0.0, 0.0, 0.0]])[0]
    assert v.real == pytest.approx(SIGMA_S, rel=2e-4)
    assert abs(v.imag) < 1e-12


def test_real_density_conjugate_symmetry(smooth):
    g = smooth.like(smooth.values.real)
    pts = EvalGrid.random_ball(20, 100, seed=2).points
    a = evaluate_extension(g, pts)
    b = evaluate_extension(g, -pts)
    np.testing.assert_allclose(a, np.conj(b), atol=1e-12)


def test_resolution_error_carries_hint():
    f = constant().sample(1 / 16)
    with pytest.raises(ResolutionError) as exc:
        evaluate_extension(f, [[100.0, 0.0, 0.0]])
    assert exc.value.required_h == pytest.approx(1 / (8 * 100 * f.radius))


def test_product_grid_matches_pointwise(smooth):
    x = np.linspace(-5, 5, 4)
    grid = evaluate_product_grid(smooth, x, x, x)
    X1, X2, X3 = np.meshgrid(x, x, x, indexing="ij")
    pts = np.column_stack([X1.ravel(), X2.ravel(), X3.ravel()])
    np.testing.assert_allclose(grid.ravel(), evaluate_extension(smooth, pts), atol=1e-12)


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled kernel not built")
def test_backends_agree(smooth):
    pts = EvalGrid.random_ball(30, 64, seed=5).points
    a = evaluate_extension(smooth, pts, backend="compiled")
    b = evaluate_extension(smooth, pts, backend="python")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled kernel not built")
def test_threads_bit_identical(smooth):
    pts = EvalGrid.random_ball(30, 200, seed=6).points
    old = kernels.get_num_threads()
    try:
        kernels.set_num_threads(1)
        a = evaluate_extension(smooth, pts)
        kernels.set_num_threads(4)
        b = evaluate_extension(smooth, pts)
    finally:
        kernels.set_num_threads(old)
    assert a.tobytes() == b.tobytes()


def test_multires_matches_fine(smooth):
    fam = random_smooth(7)
    pts = EvalGrid.random_ball(30, 40, seed=1).points
    a = evaluate_multires(fam, pts, h_max=1 / 64)
    b = evaluate_extension(fam.sample(1 / 512), pts)
    np.testing.assert_allclose(a, b, atol=5e-3)


# -- norms -----------------------------------------------------------------

def test_lp_constant_on_unit_ball():
    g = EvalGrid.ball(1.0, n_shells=6, per_shell=200)
    for p in (1, 2, 3.25):
        assert lp_norm(np.ones(len(g)), g, p) == pytest.approx((4 * math.pi / 3) ** (1 / p))


def test_lp_inf():
    g = EvalGrid.from_points(np.zeros((3, 3)))
    assert lp_norm([1, -2j, 0.5], g, math.inf) == 2


def test_lp_rejects():
    g = EvalGrid.from_points(np.zeros((1, 3)))
    with pytest.raises(InvalidParameterError):
        lp_norm([1.0], g, 0.5)
    with pytest.raises(InvalidParameterError):
        lp_norm([], g, 2)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False), min_size=1, max_size=20),
       st.floats(1, 8))
def test_lp_homogeneous(vals, p):
    g = EvalGrid.from_points(np.zeros((len(vals), 3)), 0.5)
    a = lp_norm(np.array(vals) * 3, g, p)
    b = 3 * lp_norm(np.array(vals), g, p)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-300)


def test_l2_plancherel_type_bound():
    R = 64.0
    f = random_smooth(11).sample(1 / (8 * R * 1.05))
    g = EvalGrid.ball(R, n_shells=12, per_shell=96)
    lhs = lp_norm(evaluate_extension(f, g), g, 2)
    assert lhs <= 10 * math.sqrt(R) * math.sqrt(surface_l2(f))


def test_surface_l2():
    assert surface_l2(SurfaceFunction.zeros(1 / 32)) == 0
    assert surface_l2(constant().sample(1 / 1024)) == pytest.approx(SIGMA_S, rel=1e-4)


def test_surface_l2_cap_additivity(smooth):
    caps = build_caps(Params(K=4))
    total = sum(surface_l2(smooth, c) for c in caps)
    assert total == pytest.approx(surface_l2(smooth, "all"), rel=1e-13)


def test_disk_grid_spacing():
    a, h, n = disk_grid(0.3)
    assert h <= 0.3 and n * h == pytest.approx(2)
    assert a == pytest.approx(-1 + h / 2)


def test_sample_box_alignment():
    fam = random_smooth(2)
    full = fam.sample(1 / 64)
    part = fam.sample(1 / 64, box=(0.1, 0.4, -0.3, 0.0))
    S, T = part.nodes()
    i = np.rint((S[:, 0] - full.a1) / full.h1).astype(int)
    j = np.rint((T[0] - full.a2) / full.h2).astype(int)
    np.testing.assert_allclose(part.values, full.values[np.ix_(i, j)])


def test_save_load_roundtrip(tmp_path, smooth):
    path = tmp_path / "f.npz"
    smooth.save(path)
    back = SurfaceFunction.load(path)
    np.testing.assert_array_equal(back.values, smooth.values)
    fam = make_family({"kind": "file", "path": str(path)})
    assert fam.sample(smooth.h * 2) is not None
    with pytest.raises(InvalidParameterError):
        fam.sample(smooth.h / 2)


def test_family_specs():
    assert make_family({"kind": "zero"}).sample(0.1).sup_norm == 0
    f = make_family({"kind": "single_cap", "K": 4, "index": [1, 2]}).sample(1 / 32)
    S, T = f.nodes()
    assert np.all(make_cap(1, 2, 4).contains(S, T)[np.abs(f.values) > 0])
    with pytest.raises(InvalidParameterError):
        make_family({"kind": "random_smooth"})
    with pytest.raises(InvalidParameterError):
        make_family({"kind": "nope"})


def test_random_smooth_sup_below_one():
    for seed in range(3):
        assert random_smooth(seed).sample(1 / 256).sup_norm <= 1.0


# -- rescaling identities ------------------------------------------------------

def test_rescale_cap_identity():
    p = Params(R=64, K=4)
    f = random_smooth(3).sample(1 / (8 * 64 * 1.05))
    pts = [[3.1, -2.0, 5.5]]
    for cap in build_caps(p):
        assert rescale_identity_error(f, cap, p, "cap", points=pts) <= 1e-6 * f.sup_norm


def test_rescale_strip_identity():
    p = Params(R=64, K=4)
    f = random_smooth(4).sample(1 / (8 * 64 * 1.05))
    for strip in build_strips(p):
        assert rescale_identity_error(f, strip, p, "strip", n=50, seed=9) <= 1e-6


# -- convolution -------------------------------------------------------------

def test_convolution_same_cap_positive():
    s = 1 / 8
    o = OmegaCap((0.0, 0.0), s / 2, (0, 0), s)
    res = cap_measure_convolution_sup(o, o)
    assert 0 < res.value < math.inf


def test_convolution_matches_histogram():
    # oracle: mass of the pair measure falling in a small box, divided by its volume
    p = Params(R=64, K=4)
    o1, o2 = diagonal_omega_pair(p, 0.5)
    z = np.array(cap_measure_convolution_sup(o1, o2).argmax)
    n = 200
    def nodes(o):
        h = 3 * o.spacing / n
        x = o.center[0] - 1.5 * o.spacing + h * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(x, x - o.center[0] + o.center[1], indexing="ij")
        return X.ravel(), Y.ravel(), np.sqrt(1 + X.ravel() ** 2 + Y.ravel() ** 2) * h * h
    a1, b1, w1 = nodes(o1)
    a2, b2, w2 = nodes(o2)
    bw = np.array([0.02, 0.02, 0.004])
    mass = 0.0
    for k in range(0, len(a2), 100):
        A, B, W = a2[k:k + 100, None], b2[k:k + 100, None], w2[k:k + 100, None]
        Z1, Z2, Z3 = a1[None] + A, b1[None] + B, a1[None] * b1[None] + A * B
        m = (np.abs(Z1 - z[0]) <= bw[0] / 2) & (np.abs(Z2 - z[1]) <= bw[1] / 2) \
            & (np.abs(Z3 - z[2]) <= bw[2] / 2)
        mass += float(np.sum((w1[None] * W)[m]))
    hist = mass / np.prod(bw)
    dens = convolution_density(o1, o2, [z])[0]
    assert hist == pytest.approx(dens, rel=0.1)


def test_convolution_vanishes_outside_sumset():
    p = Params(R=64, K=4)
    o1, o2 = diagonal_omega_pair(p)
    assert convolution_density(o1, o2, [[5.0, 5.0, 0.0]])[0] == 0
    assert convolution_density(o1, o2, [[0.0, 0.0, 3.0]])[0] == 0


def test_diagonal_pair_gap():
    for R in (64, 128, 256):
        p = Params(R=R, K=4)
        o1, o2 = diagonal_omega_pair(p, 0.5)
        gap = o2.center[0] - o1.center[0]
        assert 1 / 8 <= gap <= 1 / 2
        assert o2.center[1] - o1.center[1] == gap
