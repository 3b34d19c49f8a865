"""Caps, strips, tubes and rescaling maps for the saddle xi3 = xi1*xi2."""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DegeneratePairError, InvalidParameterError
from .surface import SurfaceFunction


@dataclass(frozen=True)
class Params:
    """Scale and exponent ladder.

    ``delta``, ``delta1``, ``delta2`` default to eps^2, eps^4, eps^6 and
    ``alpha`` to K^(-eps); any of them may be given explicitly.
    """
    R: float = 64.0
    epsilon: float = 0.2236
    K: int = 4
    delta: float = None
    delta1: float = None
    delta2: float = None
    p0: float = 3.25
    alpha: float = None
    seed: int = 0
    M_override: int = None

    def __post_init__(self):
        if not (self.R >= 4):
            raise InvalidParameterError(f"R must be >= 4, got {self.R}")
        if not (0 < self.epsilon < 1):
            raise InvalidParameterError("epsilon must lie in (0, 1)")
        if int(self.K) != self.K or self.K < 2:
            raise InvalidParameterError(f"K must be an integer >= 2, got {self.K}")
        object.__setattr__(self, "K", int(self.K))
        eps = self.epsilon
        for name, power in (("delta", 2), ("delta1", 4), ("delta2", 6)):
            if getattr(self, name) is None:
                object.__setattr__(self, name, eps ** power)
        if self.alpha is None:
            object.__setattr__(self, "alpha", self.K ** (-eps))
        if not (0 < self.alpha < 1):
            raise InvalidParameterError("alpha must lie in (0, 1)")
        if not self.p0 >= 1:
            raise InvalidParameterError("p0 must be >= 1")

    @property
    def M(self):
        if self.M_override is not None:
            return max(1, int(self.M_override))
        return max(1, math.ceil(self.R ** self.delta1 - 1e-12))

    @property
    def tube_radius(self):
        return self.R ** (0.5 + self.delta)

    @property
    def omega_spacing(self):
        return self.R ** -0.5

    @property
    def angle_threshold(self):
        """Tangency angle R^(-1/2 + 2 delta)."""
        return self.R ** (-0.5 + 2 * self.delta)

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {"R": self.R, "epsilon": self.epsilon, "K": self.K, "delta": self.delta,
                "delta1": self.delta1, "delta2": self.delta2, "p0": self.p0,
                "alpha": self.alpha, "seed": self.seed, "M": self.M}


# -- caps ------------------------------------------------------------------

def cap_index(xi1, xi2, K):
    """Half-open lattice index of the coarse cap containing (xi1, xi2)."""
    i = np.floor((np.asarray(xi1) + 1.0) * K / 2.0).astype(np.int64)
    j = np.floor((np.asarray(xi2) + 1.0) * K / 2.0).astype(np.int64)
    return i, j


@dataclass(frozen=True)
class Cap:
    """Half-open square of side 2/K in the parameter plane."""
    center: tuple
    half_width: float
    index: tuple
    K: int

    def contains(self, xi1, xi2):
        i, j = cap_index(xi1, xi2, self.K)
        return (i == self.index[0]) & (j == self.index[1])

    def bounds(self):
        c1, c2 = self.center
        w = self.half_width
        return (c1 - w, c1 + w), (c2 - w, c2 + w)

    def to_dict(self):
        return {"center": list(self.center), "half_width": self.half_width,
                "index": list(self.index)}


def make_cap(i, j, K):
    if K < 1:
        raise InvalidParameterError("K must be >= 1")
    side = 2.0 / K
    return Cap((-1.0 + (i + 0.5) * side, -1.0 + (j + 0.5) * side), side / 2.0, (int(i), int(j)), int(K))


def _square_meets_disk(lo1, hi1, lo2, hi2):
    n1 = min(max(0.0, lo1), hi1)
    n2 = min(max(0.0, lo2), hi2)
    return n1 * n1 + n2 * n2 <= 1.0


def build_caps(params):
    """Row-major list of the K x K lattice squares that meet the closed unit disk."""
    K = params.K if isinstance(params, Params) else int(params)
    if K < 2:
        raise InvalidParameterError("K must be >= 2")
    caps = []
    for i in range(K):
        for j in range(K):
            cap = make_cap(i, j, K)
            (a1, b1), (a2, b2) = cap.bounds()
            if _square_meets_disk(a1, b1, a2, b2):
                caps.append(cap)
    return caps


# -- strips ----------------------------------------------------------------

@dataclass(frozen=True)
class Strip:
    """Band of the given width around a line ``{p : n.p = offset}``.

    ``direction`` is the line direction and ``n = (-d2, d1)``. Axis strips
    carry ``family`` ('e1' or 'e2') and ``index``; membership of caps in an
    axis strip is by lattice index, so each cap lies in exactly one strip
    per family.
    """
    direction: tuple
    offset: float
    width: float
    family: str = "pair"
    index: int = -1
    K: int = 0

    @property
    def normal(self):
        return (-self.direction[1], self.direction[0])

    def contains(self, xi1, xi2):
        if self.family == "e1":
            return cap_index(xi1, xi2, self.K)[1] == self.index
        if self.family == "e2":
            return cap_index(xi1, xi2, self.K)[0] == self.index
        n1, n2 = self.normal
        return np.abs(n1 * np.asarray(xi1) + n2 * np.asarray(xi2) - self.offset) <= self.width / 2

    def has_cap(self, cap):
        if self.family == "e1":
            return cap.index[1] == self.index
        if self.family == "e2":
            return cap.index[0] == self.index
        n1, n2 = self.normal
        dist = abs(n1 * cap.center[0] + n2 * cap.center[1] - self.offset)
        reach = cap.half_width * (abs(n1) + abs(n2))
        return dist - reach <= self.width / 2

    def distance_to_line(self, point):
        n1, n2 = self.normal
        return abs(n1 * point[0] + n2 * point[1] - self.offset)

    def to_dict(self):
        return {"direction": list(self.direction), "offset": self.offset,
                "width": self.width, "family": self.family, "index": self.index}


def build_strips(params):
    """Both axis families: K strips parallel to e1, then K parallel to e2."""
    K = params.K
    if K < 2:
        raise InvalidParameterError("K must be >= 2")
    w = 2.0 / K
    out = []
    for fam, direction in (("e1", (1.0, 0.0)), ("e2", (0.0, 1.0))):
        for k in range(K):
            c = -1.0 + (k + 0.5) * w
            # normal of e1 is (0, 1), of e2 is (-1, 0)
            offset = c if fam == "e1" else -c
            out.append(Strip(direction, offset, w, fam, k, K))
    return out


@dataclass(frozen=True)
class PairStrip:
    strip: Strip
    separated: bool
    nonparallel: bool
    distance: float
    axis_angle: float


def pair_strip(t1, t2, params):
    """Strip through both cap centers with separation and non-parallel flags."""
    K = params.K
    c1 = np.asarray(t1.center, float)
    c2 = np.asarray(t2.center, float)
    d = c2 - c1
    length = float(np.hypot(d[0], d[1]))
    if length == 0.0:
        raise DegeneratePairError("caps have identical centers")
    # canonical orientation keeps the result symmetric in (t1, t2)
    if d[0] < 0 or (d[0] == 0 and d[1] < 0):
        d = -d
    u = d / length
    n = np.array([-u[1], u[0]])
    offset = float(n @ c1)
    gaps = np.maximum(0.0, np.abs(c2 - c1) - (t1.half_width + t2.half_width))
    dist = float(np.hypot(gaps[0], gaps[1]))
    theta = math.atan2(abs(d[1]), abs(d[0]))
    axis_angle = min(theta, math.pi / 2 - theta)
    strip = Strip((float(u[0]), float(u[1])), offset, 2.0 / K, "pair", -1, K)
    return PairStrip(strip, dist >= 1.0 / K - 1e-12, axis_angle > 1.5 / K, dist, axis_angle)


# -- fine caps -------------------------------------------------------------

@dataclass(frozen=True)
class OmegaCap:
    """Fine cap: half-open square of side s = R^(-1/2) centered at ``index * s``."""
    center: tuple
    radius: float
    index: tuple
    spacing: float

    def contains(self, xi1, xi2):
        s = self.spacing
        k1 = np.floor(np.asarray(xi1) / s + 0.5)
        k2 = np.floor(np.asarray(xi2) / s + 0.5)
        return (k1 == self.index[0]) & (k2 == self.index[1])

    def in_dilate(self, xi1, xi2, factor):
        """Closed concentric square of side ``factor * s``."""
        half = 0.5 * factor * self.spacing
        return ((np.abs(np.asarray(xi1) - self.center[0]) <= half)
                & (np.abs(np.asarray(xi2) - self.center[1]) <= half))

    def to_dict(self):
        return {"center": list(self.center), "radius": self.radius, "index": list(self.index)}


def omega_index(xi1, xi2, spacing):
    return (np.floor(np.asarray(xi1) / spacing + 0.5).astype(np.int64),
            np.floor(np.asarray(xi2) / spacing + 0.5).astype(np.int64))


def build_omega_caps(params):
    """Row-major lattice of fine caps meeting the closed unit disk."""
    s = params.omega_spacing
    kmax = int(math.ceil(1.0 / s + 0.5))
    caps = []
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            lo1, hi1 = (k1 - 0.5) * s, (k1 + 0.5) * s
            lo2, hi2 = (k2 - 0.5) * s, (k2 + 0.5) * s
            if _square_meets_disk(lo1, hi1, lo2, hi2):
                caps.append(OmegaCap((k1 * s, k2 * s), s / 2.0, (k1, k2), s))
    return caps


def normal_at(omega):
    """Unit normal (w, v, -1)/sqrt(v^2 + w^2 + 1) at omega = (v, w)."""
    v, w = float(omega[0]), float(omega[1])
    norm = math.sqrt(v * v + w * w + 1.0)
    return np.array([w / norm, v / norm, -1.0 / norm])


# -- tubes -----------------------------------------------------------------

@dataclass(frozen=True)
class Tube:
    """Slanted cylinder with horizontal disc sections.

    Membership: ``|x' - base - x3 * slope| <= radius`` and ``|x3| <= extent``,
    where ``slope = -(w, v)`` for ``omega = (v, w)``.
    """
    base: tuple
    direction: tuple
    radius: float
    extent: float
    omega_center: tuple
    omega_index: tuple = (0, 0)
    lattice_index: tuple = (0, 0)

    @property
    def slope(self):
        return np.array([-self.omega_center[1], -self.omega_center[0]])

    @property
    def key(self):
        return (self.omega_index, self.lattice_index)

    def axis_point(self, x3):
        x3 = np.asarray(x3, float)
        return np.asarray(self.base)[None, :] + x3[..., None] * self.slope[None, :]

    def horizontal_offset(self, points):
        points = np.atleast_2d(points)
        return points[:, :2] - self.axis_point(points[:, 2])

    def contains(self, points):
        points = np.atleast_2d(np.asarray(points, float))
        off = self.horizontal_offset(points)
        return (np.hypot(off[:, 0], off[:, 1]) <= self.radius) & (np.abs(points[:, 2]) <= self.extent)

    def axis_distance(self, points):
        """Euclidean distance to the (infinite) axis line."""
        points = np.atleast_2d(np.asarray(points, float))
        d = np.asarray(self.direction)
        rel = points - np.array([self.base[0], self.base[1], 0.0])
        along = rel @ d
        perp = rel - along[:, None] * d[None, :]
        return np.sqrt(np.sum(perp * perp, axis=1))

    def bbox(self):
        sl = self.slope
        b = np.asarray(self.base)
        ends = np.array([b + self.extent * sl, b - self.extent * sl])
        lo = np.append(ends.min(axis=0) - self.radius, -self.extent)
        hi = np.append(ends.max(axis=0) + self.radius, self.extent)
        return lo, hi

    def sort_key(self):
        return ("tube",) + tuple(self.base) + tuple(self.direction) + (self.radius, self.extent)

    def to_dict(self):
        return {"base": list(self.base), "direction": list(self.direction),
                "radius": self.radius, "extent": self.extent,
                "omega_center": list(self.omega_center)}


def hex_lattice(spacing, reach):
    """Points i*(a,0) + j*(a/2, a*sqrt(3)/2) within ``reach`` of the origin."""
    a = spacing
    row = a * math.sqrt(3.0) / 2.0
    jmax = int(math.ceil(reach / row)) + 1
    out = []
    for j in range(-jmax, jmax + 1):
        imax = int(math.ceil(reach / a + abs(j) / 2.0)) + 1
        for i in range(-imax, imax + 1):
            x, y = i * a + j * a / 2.0, j * row
            if x * x + y * y <= reach * reach:
                out.append((i, j, x, y))
    return out


def _segment_distance(p, half):
    """Distance from points p (N,2) to the segment [-half, half]."""
    hh = float(half @ half)
    if hh == 0.0:
        return np.hypot(p[:, 0], p[:, 1])
    t = np.clip((p @ half) / hh, -1.0, 1.0)
    q = p - t[:, None] * half[None, :]
    return np.hypot(q[:, 0], q[:, 1])


def build_tubes(omega, params, margin=0.0, radius=None):
    """Tube family of one fine cap covering the cylinder D(R) x [-R, R].

    Bases lie on a hexagonal lattice of spacing equal to the radius, so the
    covering radius is radius/sqrt(3). Every lattice point whose window
    (radius 3/4 of the tube radius) meets the sheared footprint
    ``D(R) + [-R, R] * (w, v)`` is kept, plus ``margin``.
    """
    R = params.R
    r = params.tube_radius if radius is None else float(radius)
    center = omega.center if isinstance(omega, OmegaCap) else tuple(omega)
    idx = omega.index if isinstance(omega, OmegaCap) else (0, 0)
    v, w = center
    shear = np.array([w, v]) * R
    reach = R + float(np.hypot(*shear)) + 0.75 * r + margin + 2 * r
    pts = hex_lattice(r, reach)
    xy = np.array([[p[2], p[3]] for p in pts])
    dist = _segment_distance(xy, shear) - R
    keep = dist <= 0.75 * r + margin
    direction = tuple(normal_at(center))
    tubes = []
    for (i, j, x, y), k in zip(pts, keep):
        if k:
            tubes.append(Tube((x, y), direction, r, float(R), tuple(center), tuple(idx), (i, j)))
    return tubes


@dataclass(frozen=True)
class Cylinder:
    """Right circular cylinder; ``half_length`` may be infinite."""
    point: tuple
    direction: tuple
    radius: float
    half_length: float = math.inf

    def contains(self, points):
        points = np.atleast_2d(np.asarray(points, float))
        d = np.asarray(self.direction, float)
        d = d / np.linalg.norm(d)
        rel = points - np.asarray(self.point, float)
        along = rel @ d
        perp = rel - along[:, None] * d[None, :]
        return (np.sum(perp * perp, axis=1) <= self.radius ** 2) & (np.abs(along) <= self.half_length)

    def bbox(self):
        d = np.asarray(self.direction, float)
        d = d / np.linalg.norm(d)
        p = np.asarray(self.point, float)
        side = self.radius * np.sqrt(np.clip(1.0 - d * d, 0.0, None))
        with np.errstate(invalid="ignore"):
            reach = np.where(np.abs(d) > 0, self.half_length * np.abs(d), 0.0) + side
        return p - reach, p + reach

    def sort_key(self):
        return ("cyl",) + tuple(self.point) + tuple(self.direction) + (self.radius, self.half_length)


@dataclass(frozen=True)
class Overlap:
    volume: float
    stderr: float
    samples: int
    box_volume: float


def tube_overlap_measure(t1, t2, mc_samples=100_000, seed=0):
    """Monte Carlo volume of the intersection of two solids.

    Samples are drawn uniformly from the intersection of the bounding
    boxes. The pair is put in a canonical order first, so swapping the
    arguments gives a bit-identical result.
    """
    if mc_samples < 1000:
        raise InvalidParameterError("at least 1000 samples are required")
    a, b = sorted((t1, t2), key=lambda t: t.sort_key())
    lo1, hi1 = a.bbox()
    lo2, hi2 = b.bbox()
    lo = np.maximum(lo1, lo2)
    hi = np.minimum(hi1, hi2)
    if np.any(hi <= lo):
        return Overlap(0.0, 0.0, int(mc_samples), 0.0)
    if not np.all(np.isfinite(hi - lo)):
        raise InvalidParameterError("intersection of bounding boxes is unbounded")
    box = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    left = int(mc_samples)
    while left > 0:
        n = min(left, 250_000)
        pts = lo + (hi - lo) * rng.random((n, 3))
        hits += int(np.count_nonzero(a.contains(pts) & b.contains(pts)))
        left -= n
    p = hits / mc_samples
    return Overlap(box * p, box * math.sqrt(p * (1 - p) / mc_samples), int(mc_samples), box)


# -- rescaling -------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateMap:
    """Ef_region(x) = prefactor * exp(i phase.x) * [E g](matrix @ x).

    ``translation`` is the frequency shift applied before scaling.
    """
    phase: np.ndarray
    matrix: np.ndarray
    prefactor: float
    translation: tuple
    scale: tuple

    def apply(self, points):
        return np.atleast_2d(points) @ self.matrix.T

    def pull_back(self, points, values):
        points = np.atleast_2d(points)
        return self.prefactor * np.exp(1j * (points @ self.phase)) * values


def parabolic_rescale(f, region, params, mode="cap", K=None):
    """Restrict ``f`` to a cap or axis strip, translate it to the origin and
    rescale it to unit size.

    Returns ``(g, cmap)``. The nodes of ``g`` are the images of the nodes of
    the restriction; values and Jacobians are carried over unchanged, so the
    extension identity in ``cmap`` holds node by node.
    """
    K = params.K if K is None else int(K)
    if K < 1:
        raise InvalidParameterError("K must be >= 1")
    part = f.restrict(region.contains)
    if mode == "cap":
        c1, c2 = region.center
        phase = np.array([c1, c2, c1 * c2])
        shear = np.array([[1.0, 0.0, c2], [0.0, 1.0, c1], [0.0, 0.0, 1.0]])
        scale = np.diag([1.0 / K, 1.0 / K, 1.0 / K ** 2])
        k1 = k2 = K
        pref = float(K) ** -2
        shift = (c1, c2)
    elif mode == "strip":
        if region.family == "e1":
            c = region.offset
            phase = np.array([0.0, c, 0.0])
            shear = np.array([[1.0, 0.0, c], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            scale = np.diag([1.0, 1.0 / K, 1.0 / K])
            k1, k2 = 1, K
            shift = (0.0, c)
        elif region.family == "e2":
            c = -region.offset
            phase = np.array([c, 0.0, 0.0])
            shear = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, c], [0.0, 0.0, 1.0]])
            scale = np.diag([1.0 / K, 1.0, 1.0 / K])
            k1, k2 = K, 1
            shift = (c, 0.0)
        else:
            raise InvalidParameterError("strip mode needs an axis strip")
        pref = 1.0 / K
    else:
        raise InvalidParameterError(f"unknown rescale mode {mode!r}")
    g = SurfaceFunction(part.values, (part.a1 - shift[0]) * k1, (part.a2 - shift[1]) * k2,
                        part.h1 * k1, part.h2 * k2, part.mask, part.jac, "rescaled")
    cmap = CoordinateMap(phase, scale @ shear, pref, shift, (k1, k2))
    return g, cmap
