"""Extension operator, spatial quadrature grids and norms."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.stats import qmc

from . import kernels
from .errors import InvalidParameterError, ResolutionError
from .surface import SurfaceFunction, jacobian

SIGMA_S = 2.0 * math.pi / 3.0 * (2.0 ** 1.5 - 1.0)


@dataclass
class EvalGrid:
    """Evaluation points with per-point integration weights."""
    points: np.ndarray
    cell_volume: np.ndarray
    region: str = "arbitrary"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.ascontiguousarray(np.atleast_2d(self.points), dtype=np.float64)
        if self.points.shape[1] != 3:
            raise InvalidParameterError("points must have shape (P, 3)")
        cv = np.asarray(self.cell_volume, dtype=np.float64)
        self.cell_volume = np.ascontiguousarray(np.broadcast_to(cv, (len(self.points),)))
        if np.any(self.cell_volume <= 0):
            raise InvalidParameterError("cell volumes must be positive")

    def __len__(self):
        return len(self.points)

    @property
    def total_volume(self):
        return float(np.sum(self.cell_volume))

    def subset(self, keep):
        keep = np.asarray(keep)
        return EvalGrid(self.points[keep], self.cell_volume[keep], self.region, dict(self.meta))

    @classmethod
    def from_points(cls, points, cell_volume=1.0, region="arbitrary"):
        return cls(points, cell_volume, region)

    @classmethod
    def ball(cls, R, n_shells=20, per_shell=96, center=(0.0, 0.0, 0.0), r_inner=1.0,
             region="B(R)"):
        """Stratified quasi-random quadrature of the ball of radius ``R``.

        Shell edges are 0, r_inner, then geometric up to ``R``; each shell
        gets ``per_shell`` volume-uniform Halton points, each weighted by
        the shell volume over ``per_shell``.
        """
        if R <= 0:
            raise InvalidParameterError("radius must be positive")
        r_inner = min(r_inner, R / 2.0)
        n_outer = max(1, n_shells - 1)
        edges = np.concatenate([[0.0], r_inner * (R / r_inner) ** (np.arange(n_outer + 1) / n_outer)])
        edges[-1] = R
        u = qmc.Halton(d=3, scramble=False).random(per_shell + 1)[1:]
        pts, vols = [], []
        for k in range(len(edges) - 1):
            lo3, hi3 = edges[k] ** 3, edges[k + 1] ** 3
            # shift the sequence per shell so directions do not line up radially
            uk = (u + 0.6180339887498949 * k) % 1.0
            r = np.cbrt(lo3 + uk[:, 0] * (hi3 - lo3))
            z = 1.0 - 2.0 * uk[:, 1]
            phi = 2.0 * math.pi * uk[:, 2]
            rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
            pts.append(np.column_stack([r * rho * np.cos(phi), r * rho * np.sin(phi), r * z]))
            vols.append(np.full(per_shell, 4.0 * math.pi / 3.0 * (hi3 - lo3) / per_shell))
        pts = np.vstack(pts) + np.asarray(center, float)
        return cls(pts, np.concatenate(vols), region, {"R": float(R), "center": list(center)})

    @classmethod
    def random_ball(cls, R, n, seed=0, center=(0.0, 0.0, 0.0), region="B(R)"):
        rng = np.random.default_rng(seed)
        d = rng.standard_normal((n, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        r = R * np.cbrt(rng.random(n))
        vol = 4.0 * math.pi / 3.0 * R ** 3 / n
        return cls(d * r[:, None] + np.asarray(center, float), vol, region,
                   {"R": float(R), "center": list(center)})

    @classmethod
    def cube(cls, center, side, n, region="Q"):
        """Midpoint tensor grid on the cube of the given side."""
        c = np.asarray(center, float)
        g = (np.arange(n) + 0.5) / n * side - side / 2.0
        X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]) + c
        return cls(pts, (side / n) ** 3, region, {"center": c.tolist(), "side": float(side)})


def _as_points(points):
    if isinstance(points, EvalGrid):
        return points.points
    return np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))


def check_resolution(f, pts):
    if len(pts) == 0:
        return
    rmax = float(np.sqrt(np.max(np.sum(pts * pts, axis=1))))
    if rmax > f.r_max * (1.0 + 1e-12):
        raise ResolutionError(f"grid spacing {f.h:.6g} does not resolve |x| = {rmax:.6g}",
                              1.0 / (8.0 * rmax * f.radius))


def evaluate_extension(f, points, backend=None, check=True):
    """Ef(x) = sum over nodes of f J w exp(i(x1 s + x2 t + x3 s t))."""
    pts = _as_points(points)
    if check:
        check_resolution(f, pts)
    dens = np.ascontiguousarray(f.density())
    jlo, jhi = f.row_ranges(dens)
    return kernels.extension_sum(dens, f.a1, f.h1, f.a2, f.h2, jlo, jhi, pts, backend=backend)


def evaluate_product_grid(f, x1, x2, x3, check=True):
    """Ef on the tensor product x1 x x2 x x3 using the separable phase.

    For each x3 the sum factors as E1 @ (D * exp(i x3 s t)) @ E2 with
    E1[a, i] = exp(i x1_a s_i) and E2[j, b] = exp(i x2_b t_j).
    """
    x1, x2, x3 = (np.asarray(v, float) for v in (x1, x2, x3))
    if check:
        corner = np.array([[np.max(np.abs(x1)), np.max(np.abs(x2)), np.max(np.abs(x3))]])
        check_resolution(f, corner)
    s, t = f.axes()
    dens = f.density()
    E1 = np.exp(1j * np.outer(x1, s))
    E2 = np.exp(1j * np.outer(t, x2))
    out = np.empty((len(x1), len(x2), len(x3)), complex)
    st = np.outer(s, t)
    for k, z in enumerate(x3):
        out[:, :, k] = E1 @ ((dens * np.exp(1j * z * st)) @ E2)
    return out


def lp_norm(values, grid, p):
    """(sum |v|^p * cell_volume)^(1/p); p = inf gives max |v|."""
    v = np.abs(np.asarray(values))
    if v.size == 0:
        raise InvalidParameterError("empty grid")
    if p == math.inf or p == "inf":
        return float(np.max(v))
    p = float(p)
    if p < 1:
        raise InvalidParameterError("p must be >= 1")
    w = grid.cell_volume if isinstance(grid, EvalGrid) else np.broadcast_to(np.asarray(grid, float), v.shape)
    scale = float(np.max(v))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((v / scale) ** p * w)) ** (1.0 / p)


def surface_l2(f, region=None):
    """Sum over nodes in ``region`` of |f|^2 J w (the squared surface L2 mass)."""
    if region is None or region == "all":
        return f.l2_squared()
    return f.l2_squared(region.contains)


class FunctionFamily:
    """A density given by a formula, sampled at whatever spacing a query needs."""

    def __init__(self, func, name="custom"):
        self.func = func
        self.name = name
        self._cache = {}

    def sample(self, h, pad=0.0, box=None):
        key = (round(float(h), 15), float(pad), None if box is None else tuple(map(float, box)))
        if key not in self._cache:
            self._cache[key] = SurfaceFunction.from_callable(self.func, h, pad, box=box)
        return self._cache[key]

    def clear(self):
        self._cache.clear()

    def sup_norm(self, h):
        return self.sample(h).sup_norm


def evaluate_multires(family, points, h_max=1.0 / 64, backend=None):
    """Evaluate E of a formula-defined density, sampling it per radial band.

    Points with |x| <= rho use spacing ``min(h_max, 1/(8 rho))`` where rho
    runs over powers of two, so inner points do not pay for the resolution
    needed far out.
    """
    pts = _as_points(points)
    out = np.zeros(len(pts), complex)
    radii = np.sqrt(np.sum(pts * pts, axis=1))
    band = np.maximum(0, np.ceil(np.log2(np.maximum(radii, 1e-300) * 8.0 * h_max))).astype(int)
    for b in np.unique(band):
        sel = np.nonzero(band == b)[0]
        h = h_max / 2.0 ** b
        f = family.sample(h)
        out[sel] = evaluate_extension(f, pts[sel], backend=backend)
    return out


# -- cap-measure convolution ------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _dilate_box(cap, factor):
    half = 0.5 * factor * cap.spacing
    c = cap.center
    return (c[0] - half, c[0] + half), (c[1] - half, c[1] + half)


def convolution_density(o1, o2, zeta, factor=3.0):
    """Density of (J dxi on factor*Omega1) * (J dxi on factor*Omega2) lifted to the surface.

    For fixed xi2 = t the constraint is linear in xi1 with slope 2t - zeta2,
    so the delta function integrates out exactly and leaves a 1-D integral
    over t, evaluated by Gauss-Legendre on each feasible interval.
    """
    zeta = np.atleast_2d(np.asarray(zeta, float))
    z1, z2, z3 = zeta[:, 0], zeta[:, 1], zeta[:, 2]
    (a1, b1), (a2, b2) = _dilate_box(o1, factor)
    (c1, d1), (c2, d2) = _dilate_box(o2, factor)
    L = np.maximum(a1, z1 - d1)
    U = np.minimum(b1, z1 - c1)
    TL = np.maximum(a2, z2 - d2)
    TU = np.minimum(b2, z2 - c2)
    A = z3 - z1 * z2
    pole = z2 / 2.0
    total = np.zeros(len(zeta))
    for sign in (1.0, -1.0):
        # branch where sign * (2t - zeta2) > 0
        lo = np.where(sign > 0, np.maximum(TL, pole), TL)
        hi = np.where(sign > 0, TU, np.minimum(TU, pole))
        # sign*(xi1*(2t - z2)) in [sign*L*(2t-z2), sign*U*(2t-z2)] with xi1*(2t-z2) = A + z1 t
        for coef, const in (((z1 - 2 * L) * sign, (A + L * z2) * sign),
                            ((2 * U - z1) * sign, -(U * z2 + A) * sign)):
            with np.errstate(divide="ignore", invalid="ignore"):
                root = -const / coef
            pos = coef > 0
            neg = coef < 0
            lo = np.where(pos, np.maximum(lo, root), lo)
            hi = np.where(neg, np.minimum(hi, root), hi)
            dead = (coef == 0) & (const < 0)
            hi = np.where(dead, lo, hi)
        ok = (hi > lo) & (U > L)
        if not np.any(ok):
            continue
        lo_o, hi_o = lo[ok], hi[ok]
        mid = 0.5 * (lo_o + hi_o)
        half = 0.5 * (hi_o - lo_o)
        t = mid[:, None] + half[:, None] * _GL_X[None, :]
        zz1, zz2, AA = z1[ok][:, None], z2[ok][:, None], A[ok][:, None]
        den = 2 * t - zz2
        xi1 = (AA + zz1 * t) / den
        integrand = jacobian(xi1, t) * jacobian(zz1 - xi1, zz2 - t) / np.abs(den)
        total[ok] += half * (integrand @ _GL_W)
    return total


@dataclass
class ConvolutionSup:
    value: float
    argmax: tuple
    evaluations: int


def _zeta3_range(o1, o2, z1, z2, factor):
    (a1, b1), (a2, b2) = _dilate_box(o1, factor)
    (c1, d1), (c2, d2) = _dilate_box(o2, factor)
    L, U = np.maximum(a1, z1 - d1), np.minimum(b1, z1 - c1)
    TL, TU = np.maximum(a2, z2 - d2), np.minimum(b2, z2 - c2)
    vals = []
    for x in (L, U):
        for t in (TL, TU):
            vals.append(x * t + (z1 - x) * (z2 - t))
    vals = np.array(vals)
    valid = (U >= L) & (TU >= TL)
    return vals.min(axis=0), vals.max(axis=0), valid


def cap_measure_convolution_sup(o1, o2, params=None, n=25, refinements=3, factor=3.0):
    """Sup over a 3-D frequency grid of the lifted convolution density.

    A coarse grid over the sumset (with the third coordinate spanning the
    attainable range for each (zeta1, zeta2)) is followed by ``refinements``
    zoomed grids around the current maximizer.
    """
    (a1, b1), (a2, b2) = _dilate_box(o1, factor)
    (c1, d1), (c2, d2) = _dilate_box(o2, factor)
    box = np.array([[a1 + c1, b1 + d1], [a2 + c2, b2 + d2]])
    best_val, best_arg, count = -1.0, None, 0
    frac = np.linspace(0.0, 1.0, n + 2)[1:-1]
    for level in range(refinements + 1):
        g1 = box[0, 0] + frac * (box[0, 1] - box[0, 0])
        g2 = box[1, 0] + frac * (box[1, 1] - box[1, 0])
        Z1, Z2 = np.meshgrid(g1, g2, indexing="ij")
        Z1, Z2 = Z1.ravel(), Z2.ravel()
        lo3, hi3, valid = _zeta3_range(o1, o2, Z1, Z2, factor)
        if level > 0:
            lo3 = np.maximum(lo3, z3_box[0])
            hi3 = np.minimum(hi3, z3_box[1])
        Z3 = lo3[:, None] + frac[None, :] * (hi3 - lo3)[:, None]
        zeta = np.column_stack([np.repeat(Z1, n), np.repeat(Z2, n), Z3.ravel()])
        keep = np.repeat(valid & (hi3 > lo3), n)
        dens = np.zeros(len(zeta))
        dens[keep] = convolution_density(o1, o2, zeta[keep], factor)
        count += int(keep.sum())
        k = int(np.argmax(dens))
        if dens[k] > best_val:
            best_val, best_arg = float(dens[k]), tuple(float(v) for v in zeta[k])
        # zoom around the maximizer
        w1 = (box[0, 1] - box[0, 0]) / (n + 1) * 2
        w2 = (box[1, 1] - box[1, 0]) / (n + 1) * 2
        w3 = float((hi3 - lo3).max()) / (n + 1) * 2 if level == 0 else (z3_box[1] - z3_box[0]) / (n + 1) * 2
        box = np.array([[best_arg[0] - w1, best_arg[0] + w1], [best_arg[1] - w2, best_arg[1] + w2]])
        z3_box = (best_arg[2] - w3, best_arg[2] + w3)
    return ConvolutionSup(best_val, best_arg, count)


def diagonal_omega_pair(params, gap=0.5, lo=None, hi=None):
    """Fine caps at -k1 s (1, 1) and k2 s (1, 1) whose coordinate gap is
    closest to ``gap`` within [lo, hi] (default [1/(2K), 2/K]) and above 3s.
    """
    from .geometry import OmegaCap
    s = params.omega_spacing
    lo = 0.5 / params.K if lo is None else lo
    hi = 2.0 / params.K if hi is None else hi
    best = None
    for tot in range(1, int(hi / s) + 2):
        g = tot * s
        if lo <= g <= hi and g > 3 * s and (best is None or abs(g - gap) < abs(best * s - gap)):
            best = tot
    if best is None:
        raise InvalidParameterError("no fine-cap pair with an admissible gap")
    k1 = best // 2
    k2 = best - k1
    return (OmegaCap((-k1 * s, -k1 * s), s / 2, (-k1, -k1), s),
            OmegaCap((k2 * s, k2 * s), s / 2, (k2, k2), s))


def rescale_identity_error(f, region, params, mode="cap", points=None, n=100, seed=0, K=None):
    """Max over ``points`` of |E f_region(x) - prefactor e^{i phase.x} E g(A x)|.

    Both sides are direct quadrature sums; ``g`` is evaluated without the
    resolution check since the identity holds node by node.
    """
    from .geometry import parabolic_rescale
    if points is None:
        points = EvalGrid.random_ball(params.R, n, seed).points
    pts = _as_points(points)
    part = f.restrict(region.contains)
    g, cmap = parabolic_rescale(f, region, params, mode, K)
    lhs = evaluate_extension(part, pts)
    rhs = cmap.pull_back(pts, evaluate_extension(g, cmap.apply(pts), check=False))
    return float(np.max(np.abs(lhs - rhs), initial=0.0))
