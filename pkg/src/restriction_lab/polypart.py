"""Polynomial partitioning in R^3: bisecting polynomials, cells, walls, tube sorting."""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq
from scipy.stats import qmc

from .errors import InvalidParameterError

GRADIENT_FLOOR = 1e-8


@lru_cache(maxsize=None)
def monomials(d):
    """Exponents (i, j, k) with i + j + k <= d in lexicographic order."""
    return tuple((i, j, k) for i in range(d + 1) for j in range(d + 1 - i)
                 for k in range(d + 1 - i - j))


def n_monomials(d):
    return math.comb(d + 3, 3)


def design_matrix(u, d):
    """Rows u^alpha over ``monomials(d)`` for points u of shape (n, 3)."""
    u = np.atleast_2d(np.asarray(u, float))
    pw = np.ones((d + 1, len(u), 3))
    for e in range(1, d + 1):
        pw[e] = pw[e - 1] * u
    exps = np.array(monomials(d))
    return pw[exps[:, 0], :, 0].T * pw[exps[:, 1], :, 1].T * pw[exps[:, 2], :, 2].T


@dataclass(frozen=True)
class TrivariatePolynomial:
    """P(x) = sum_alpha c_alpha (x / scale)^alpha over ``monomials(nominal)``.

    ``scale`` keeps the coefficients of order one for points in B(scale).
    """
    coefficients: tuple
    scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coefficients, float).ravel()
        d = 0
        while n_monomials(d) < len(c):
            d += 1
        if n_monomials(d) != len(c):
            raise InvalidParameterError(f"{len(c)} coefficients is not a dense monomial count")
        if not self.scale > 0:
            raise InvalidParameterError("scale must be positive")
        object.__setattr__(self, "coefficients", tuple(float(v) for v in c))

    @classmethod
    def from_terms(cls, terms, scale=1.0):
        """Build from ``{(i, j, k): coefficient}``."""
        d = max(sum(e) for e in terms)
        idx = {e: n for n, e in enumerate(monomials(d))}
        c = np.zeros(n_monomials(d))
        for e, v in terms.items():
            c[idx[tuple(e)]] = v
        return cls(tuple(c), scale)

    @property
    def coef(self):
        return np.asarray(self.coefficients)

    @property
    def nominal_degree(self):
        d = 0
        while n_monomials(d) < len(self.coefficients):
            d += 1
        return d

    @property
    def degree(self):
        c = self.coef
        nz = np.nonzero(c)[0]
        if len(nz) == 0:
            return -1
        return max(sum(monomials(self.nominal_degree)[k]) for k in nz)

    @property
    def cube(self):
        d = self.nominal_degree
        out = np.zeros((d + 1,) * 3)
        for e, v in zip(monomials(d), self.coefficients):
            out[e] = v
        return out

    def __call__(self, points):
        u = np.atleast_2d(np.asarray(points, float)) / self.scale
        # nested Horner in x3, x2, x1
        return npoly.polyval3d(u[:, 0], u[:, 1], u[:, 2], self.cube)

    def gradient(self, points):
        u = np.atleast_2d(np.asarray(points, float)) / self.scale
        c = self.cube
        g = [npoly.polyval3d(u[:, 0], u[:, 1], u[:, 2], npoly.polyder(c, axis=a)) if c.shape[a] > 1
             else np.zeros(len(u)) for a in range(3)]
        return np.column_stack(g) / self.scale

    def normalized(self):
        n = float(np.linalg.norm(self.coef))
        if n == 0:
            raise InvalidParameterError("zero polynomial")
        return TrivariatePolynomial(tuple(self.coef / n), self.scale)

    def restrict_to_line(self, x0, v):
        """Power-basis coefficients (ascending) of t -> P(x0 + t v)."""
        a = np.asarray(x0, float) / self.scale
        b = np.asarray(v, float) / self.scale
        d = self.nominal_degree
        lin = [np.array([a[m], b[m]]) for m in range(3)]
        pows = [[np.array([1.0])] for _ in range(3)]
        for m in range(3):
            for _ in range(d):
                pows[m].append(npoly.polymul(pows[m][-1], lin[m]))
        out = np.zeros(d + 1)
        for (i, j, k), c in zip(monomials(d), self.coefficients):
            if c != 0.0:
                term = npoly.polymul(npoly.polymul(pows[0][i], pows[1][j]), pows[2][k])
                out[: len(term)] += c * term
        return out

    def to_dict(self):
        return {"degree": self.nominal_degree, "scale": self.scale,
                "coefficients": list(self.coefficients)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["coefficients"]), float(d.get("scale", 1.0)))


# -- mass samples and bisection ---------------------------------------------

@dataclass
class MassSample:
    """Weighted points standing in for a nonnegative density."""
    points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, float))
        if self.weights is None:
            self.weights = np.ones(len(self.points))
        self.weights = np.asarray(self.weights, float)
        if self.weights.shape != (len(self.points),) or np.any(self.weights < 0):
            raise InvalidParameterError("weights must be nonnegative, one per point")

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def __len__(self):
        return len(self.points)

    def subset(self, keep):
        return MassSample(self.points[keep], self.weights[keep])

    @property
    def degenerate(self):
        live = self.points[self.weights > 0]
        return len(live) == 0 or bool(np.all(np.ptp(live, axis=0) == 0))

    @classmethod
    def uniform_ball(cls, n, R, seed=0):
        rng = np.random.default_rng(seed)
        d = rng.standard_normal((n, 3))
        d /= np.linalg.norm(d, axis=1)[:, None]
        return cls(d * (R * np.cbrt(rng.random(n)))[:, None])


def side_masses(P, sample):
    vals = P(sample.points)
    return float(np.sum(sample.weights[vals > 0])), float(np.sum(sample.weights[vals < 0]))


def imbalance(P, sample):
    """Largest open-side share minus 1/2."""
    tot = sample.total_mass
    if tot == 0:
        return 0.0
    pos, neg = side_masses(P, sample)
    return max(pos, neg) / tot - 0.5


def _weighted_median(vals, w):
    order = np.argsort(vals, kind="stable")
    cw = np.cumsum(w[order])
    half = 0.5 * cw[-1]
    lo = order[min(np.searchsorted(cw, half * (1 - 1e-12), "left"), len(cw) - 1)]
    hi = order[min(np.searchsorted(cw, half * (1 + 1e-12), "right"), len(cw) - 1)]
    return 0.5 * (vals[lo] + vals[hi])


@dataclass
class Bisection:
    polynomial: TrivariatePolynomial
    imbalances: list
    achieved: bool
    degenerate_sets: list
    starts_used: int

    @property
    def max_imbalance(self):
        return max(self.imbalances, default=0.0)


def ham_sandwich_bisect(sets, degree, eta=0.05, seed=0, starts=12, iterations=80,
                        band=0.08, scale=None):
    """Find P of degree <= ``degree`` leaving <= 1/2 + eta of every set's mass per side.

    Median-Newton iteration: each step moves the coefficients by the
    minimum-norm update that shifts every set's weighted median of P to
    zero, using monomial rows averaged over a band of points around the
    current median as the linearization. Seeded restarts; the best start wins.
    """
    if degree < 1:
        raise InvalidParameterError("degree must be >= 1")
    sets = [s if isinstance(s, MassSample) else MassSample(s) for s in sets]
    dim = n_monomials(degree)
    degenerate = [k for k, s in enumerate(sets) if s.degenerate]
    active = [k for k in range(len(sets)) if k not in degenerate]
    if len(active) > dim - 1:
        raise InvalidParameterError(
            f"{len(active)} sets exceed the {dim - 1} a degree-{degree} polynomial can bisect")
    if scale is None:
        allpts = np.vstack([s.points for s in sets]) if sets else np.zeros((1, 3))
        scale = max(1.0, float(np.max(np.linalg.norm(allpts, axis=1))))
    V = [design_matrix(sets[k].points / scale, degree) for k in active]
    W = [sets[k].weights for k in active]

    def shares(c):
        out = []
        for Vk, wk in zip(V, W):
            vals = Vk @ c
            tot = float(np.sum(wk))
            out.append(max(float(np.sum(wk[vals > 0])), float(np.sum(wk[vals < 0]))) / tot - 0.5
                       if tot > 0 else 0.0)
        return out

    best_c, best = None, (math.inf, math.inf)
    used = 0
    for start in range(starts):
        used += 1
        rng = np.random.default_rng([int(seed), start])
        c = rng.standard_normal(dim)
        if not active:
            best_c = c / np.linalg.norm(c)
            break
        c /= np.linalg.norm(c)
        for _ in range(iterations):
            rows, med = [], []
            for Vk, wk in zip(V, W):
                vals = Vk @ c
                m = _weighted_median(vals, wk)
                k = max(1, int(math.ceil(band * len(vals))))
                near = np.argsort(np.abs(vals - m), kind="stable")[:k]
                rows.append(np.average(Vk[near], axis=0, weights=wk[near] + 1e-300))
                med.append(m)
            A, m = np.array(rows), np.array(med)
            step = np.linalg.lstsq(A, -m, rcond=None)[0]
            c = c + step
            c /= np.linalg.norm(c)
            sh = shares(c)
            score = (max(sh), float(np.sum(np.square(sh))))
            if score < best:
                best, best_c = score, c.copy()
            if score[0] <= eta * 0.5:
                break
        if best[0] <= eta:
            break
    P = TrivariatePolynomial(tuple(best_c), scale)
    imb = [imbalance(P, s) for s in sets]
    achieved = all(imb[k] <= eta for k in active)
    return Bisection(P, imb, achieved, degenerate, used)


# -- non-singular perturbation -------------------------------------------------

def _newton_project(P, x, steps=40):
    for _ in range(steps):
        val = P(x)
        g = P.gradient(x)
        g2 = np.sum(g * g, axis=1)
        ok = g2 > 0
        x = x.copy()
        x[ok] -= (val[ok] / g2[ok])[:, None] * g[ok]
    return x


def singularity_margin(P, n=10_000, seed=0, radius=None):
    """Minimum of |grad P| / ||coef|| over near-zero-set samples of B(radius)."""
    radius = P.scale if radius is None else radius
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((10 * n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    pts = d * (radius * np.cbrt(rng.random(10 * n)))[:, None]
    vals = np.abs(P(pts))
    near = pts[np.argsort(vals, kind="stable")[:n]]
    z = _newton_project(P, near)
    g = np.linalg.norm(P.gradient(z), axis=1) * P.scale
    return float(np.min(g)) / float(np.linalg.norm(P.coef))


def perturb_nonsingular(P, magnitude=1e-6, seed=0, n_samples=10_000, retries=8,
                        floor=GRADIENT_FLOOR):
    """Add a random coefficient perturbation of relative size <= ``magnitude``
    and check on sampled near-zero points that the gradient stays away from zero."""
    c = P.coef
    norm = float(np.linalg.norm(c))
    if norm == 0:
        raise InvalidParameterError("cannot perturb the zero polynomial")
    for attempt in range(retries):
        rng = np.random.default_rng([int(seed), attempt, 7])
        g = rng.standard_normal(len(c))
        g *= magnitude * norm * rng.uniform(0.5, 1.0) / np.linalg.norm(g)
        Q = TrivariatePolynomial(tuple(c + g), P.scale)
        if singularity_margin(Q, n_samples, seed=int(seed) + attempt) > floor:
            return Q
    raise InvalidParameterError(f"no non-singular perturbation found after {retries} tries")


# -- partitions ------------------------------------------------------------------

def degree_schedule(M, C_deg=4.0):
    """Per-round degrees ceil(c 2^(j/3)) for s = 3 ceil(log2 M) rounds (at least one).

    ``c`` is the least constant for which round j can bisect its 2^(j-1)
    cells, i.e. C(d+3, 3) - 1 >= 2^(j-1).
    """
    s = max(1, 3 * int(math.ceil(math.log2(M)))) if M > 1 else 1
    need = []
    for j in range(1, s + 1):
        d = 1
        while n_monomials(d) - 1 < 2 ** (j - 1):
            d += 1
        need.append(d)
    c = max((need[j - 1] - 1) / 2 ** (j / 3) for j in range(1, s + 1)) * (1 + 1e-9) + 1e-12
    degs = [max(1, int(math.ceil(c * 2 ** (j / 3)))) for j in range(1, s + 1)]
    return degs, c, sum(degs) <= C_deg * M


@dataclass
class Partition:
    """Sign-vector cells of a factor list plus the wall of width R^(1/2 + delta)."""
    factors: list
    R: float
    delta: float
    eta: float = 0.05
    masses: dict = field(default_factory=dict)
    interior_masses: dict = field(default_factory=dict)
    wall_mass: float = 0.0
    total_mass: float = 0.0
    round_imbalances: list = field(default_factory=list)
    degenerate: bool = False
    flags: list = field(default_factory=list)

    @property
    def degree(self):
        return sum(max(P.degree, 0) for P in self.factors)

    @property
    def rounds(self):
        return len(self.factors)

    @property
    def wall_width(self):
        return self.R ** (0.5 + self.delta)

    def codes(self, points):
        """Bitmask sign codes: bit k set iff factor k is positive."""
        points = np.atleast_2d(np.asarray(points, float))
        code = np.zeros(len(points), np.int64)
        for k, P in enumerate(self.factors):
            code |= (P(points) > 0).astype(np.int64) << k
        return code

    def label(self, code):
        return "".join("+" if (int(code) >> k) & 1 else "-" for k in range(len(self.factors))) or "*"

    def wall_distance(self, points):
        """Min over factors of |P| / max(|grad P|, floor); +inf without factors."""
        points = np.atleast_2d(np.asarray(points, float))
        out = np.full(len(points), np.inf)
        for P in self.factors:
            g = np.linalg.norm(P.gradient(points), axis=1)
            out = np.minimum(out, np.abs(P(points)) / np.maximum(g, GRADIENT_FLOOR))
        return out

    def locate_codes(self, points):
        """Sign code per point, or -1 inside the wall."""
        code = self.codes(points)
        code[self.wall_distance(points) <= self.wall_width] = -1
        return code

    def locate(self, points):
        return [("wall" if c < 0 else self.label(c)) for c in self.locate_codes(points)]

    @property
    def nonempty_cells(self):
        return sorted(k for k, v in self.masses.items() if v > 0)

    @property
    def mass_ratio(self):
        vals = [v for v in self.masses.values() if v > 0]
        return max(vals) / min(vals) if vals else 1.0

    @property
    def ratio_bound(self):
        return ((0.5 + self.eta) / (0.5 - self.eta)) ** self.rounds

    def tally(self, sample):
        code = self.codes(sample.points)
        loc = self.locate_codes(sample.points)
        self.masses = {self.label(c): float(np.sum(sample.weights[code == c]))
                       for c in np.unique(code)}
        self.interior_masses = {self.label(c): float(np.sum(sample.weights[loc == c]))
                                for c in np.unique(loc) if c >= 0}
        self.wall_mass = float(np.sum(sample.weights[loc < 0]))
        self.total_mass = sample.total_mass
        return self

    def to_dict(self):
        return {"factors": [P.to_dict() for P in self.factors], "eta": self.eta,
                "rounds": self.rounds, "degree": self.degree, "R": self.R, "delta": self.delta,
                "masses": dict(sorted(self.masses.items())),
                "interior_masses": dict(sorted(self.interior_masses.items())),
                "wall_mass": self.wall_mass, "total_mass": self.total_mass,
                "round_imbalances": self.round_imbalances, "degenerate": self.degenerate,
                "flags": self.flags}


def partition(sample, params, eta=0.05, C_deg=4.0, seed=None, perturb=1e-6):
    """Iterated simultaneous bisection of all current cells."""
    sample = sample if isinstance(sample, MassSample) else MassSample(sample)
    if not sample.total_mass > 0:
        raise InvalidParameterError("total mass must be positive")
    seed = params.seed if seed is None else seed
    part = Partition([], params.R, params.delta, eta)
    live = sample.weights > 0
    if len(np.unique(sample.points[live], axis=0)) < 2:
        part.degenerate = True
        part.flags.append("mass on fewer than two distinct points")
        return part.tally(sample)
    degs, _, within = degree_schedule(params.M, C_deg)
    if not within:
        part.flags.append("degree schedule exceeds C_deg * M")
    scale = max(1.0, float(np.max(np.linalg.norm(sample.points, axis=1))))
    code = np.zeros(len(sample), np.int64)
    for j, d in enumerate(degs):
        groups = [sample.subset(code == c) for c in np.unique(code[live])]
        groups = [g.subset(g.weights > 0) for g in groups]
        bis = ham_sandwich_bisect(groups, d, eta, seed=int(seed) * 1000 + j, scale=scale)
        P = perturb_nonsingular(bis.polynomial, perturb, seed=int(seed) * 1000 + j)
        imb = [imbalance(P, g) for g in groups]
        part.factors.append(P)
        part.round_imbalances.append(max(imb, default=0.0))
        if not bis.achieved or max(imb, default=0.0) > eta:
            part.flags.append(f"round {j + 1}: imbalance {max(imb):.4f} exceeds eta")
        if bis.degenerate_sets:
            part.flags.append(f"round {j + 1}: degenerate sets {bis.degenerate_sets}")
        code |= (P(sample.points) > 0).astype(np.int64) << j
    return part.tally(sample)


# -- lines ------------------------------------------------------------------------

@dataclass
class LineCrossings:
    count: int
    roots: list
    infinite: bool = False


def _real_roots(q, lo, hi):
    """Distinct real roots of the ascending power series q in [lo, hi]."""
    q = np.trim_zeros(np.asarray(q, float), "b")
    if len(q) <= 1:
        return []
    if len(q) == 2:
        t = -q[0] / q[1]
        return [t] if lo <= t <= hi else []
    crit = _real_roots(npoly.polyder(q), lo, hi)
    knots = [lo] + crit + [hi]
    kn = np.array(knots)
    vals = npoly.polyval(kn, q)
    # rounding-error scale of evaluating q at each knot
    tol = 1e-13 * npoly.polyval(np.abs(kn), np.abs(q))
    roots = []
    for a, b, fa, fb in zip(knots[:-1], knots[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            roots.append(brentq(lambda t: npoly.polyval(t, q), a, b, xtol=1e-14, rtol=1e-15))
    for t, ft, tt in zip(knots, vals, tol):
        if abs(ft) <= tt:
            roots.append(t)
    roots.sort()
    out = []
    for t in roots:
        if not out or t - out[-1] > 1e-10 * max(1.0, abs(t)):
            out.append(t)
    return out


def line_crossings(P, x0, v, window=None):
    """Distinct zeros of t -> P(x0 + t v) in ``window`` (whole line by default).

    ``P`` may be a polynomial, a list of factors or a Partition; crossings
    of a product are the union of the factors' crossings.
    """
    v = np.asarray(v, float)
    if not np.any(v):
        raise InvalidParameterError("line direction must be nonzero")
    factors = P.factors if isinstance(P, Partition) else (P if isinstance(P, (list, tuple)) else [P])
    roots, infinite = [], False
    for F in factors:
        q = F.restrict_to_line(x0, v)
        size = float(np.linalg.norm(F.coef)) * max(1.0, float(np.linalg.norm(x0)) / F.scale,
                                                    float(np.linalg.norm(v)) / F.scale) ** F.nominal_degree
        if np.max(np.abs(q)) <= 1e-13 * size:
            infinite = True
            continue
        q = np.where(np.abs(q) <= 1e-15 * size, 0.0, q)
        qt = np.trim_zeros(q, "b")
        if window is None:
            bound = 1.0 + float(np.max(np.abs(qt[:-1] / qt[-1]))) if len(qt) > 1 else 1.0
            lo, hi = -bound, bound
        else:
            lo, hi = window
        roots += _real_roots(q, lo, hi)
    roots.sort()
    out = []
    for t in roots:
        if not out or t - out[-1] > 1e-10 * max(1.0, abs(t)):
            out.append(t)
    return LineCrossings(len(out), out, infinite)


def ball_chord(x0, v, R):
    """Parameter interval of the line x0 + t v inside B(R), or None."""
    x0, v = np.asarray(x0, float), np.asarray(v, float)
    a, b, c = v @ v, 2 * x0 @ v, x0 @ x0 - R * R
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    r = math.sqrt(disc)
    return ((-b - r) / (2 * a), (-b + r) / (2 * a))


# -- tube classification --------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def contains(self, points, factor=1.0):
        d = np.atleast_2d(points) - np.asarray(self.center)
        return np.sum(d * d, axis=1) <= (factor * self.radius) ** 2

    def to_dict(self):
        return {"center": list(self.center), "radius": self.radius}


def ball_cover(params):
    """Balls of radius R^(1 - delta) on a cubic lattice of the same spacing, meeting B(R)."""
    R = params.R
    rho = R ** (1.0 - params.delta)
    n = int(math.ceil(R / rho))
    out = []
    for i in range(-n, n + 1):
        for j in range(-n, n + 1):
            for k in range(-n, n + 1):
                c = np.array([i, j, k], float) * rho
                if np.linalg.norm(c) < R + rho:
                    out.append(Ball(tuple(float(v) for v in c), float(rho)))
    return out


def tube_samples(tube, spacing, rings=(0.5, 1.0), per_ring=6, window=None):
    """Axis points at the given spacing plus rings of horizontal offsets."""
    lo, hi = (-tube.extent, tube.extent) if window is None else window
    n = max(2, int(math.ceil((hi - lo) / spacing)) + 1)
    z = np.linspace(lo, hi, n)
    axis = np.column_stack([tube.axis_point(z), z])
    pts = [axis]
    ang = 2 * math.pi * np.arange(per_ring) / per_ring
    for rr in rings:
        for a in ang:
            off = np.array([math.cos(a), math.sin(a), 0.0]) * rr * tube.radius
            pts.append(axis + off)
    return np.vstack(pts)


@dataclass
class ZeroCloud:
    """Points of Z(P_k) in a region with unit normals, per factor."""
    points: np.ndarray
    normals: np.ndarray
    factor: np.ndarray


def zero_cloud(part, center, radius, n=1000, seed=0):
    """Quasi-random points of B(center, radius) Newton-projected onto each factor's zero set."""
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    r = radius * np.cbrt(u[:, 0])
    z = 1 - 2 * u[:, 1]
    ph = 2 * math.pi * u[:, 2]
    rho = np.sqrt(np.clip(1 - z * z, 0, None))
    pts = np.column_stack([r * rho * np.cos(ph), r * rho * np.sin(ph), r * z]) + np.asarray(center)
    return project_cloud(part, pts, center, radius)


def project_cloud(part, pts, center, radius, keep=None):
    P_out, N_out, F_out = [], [], []
    for k, P in enumerate(part.factors):
        z = _newton_project(P, pts)
        g = P.gradient(z)
        gn = np.linalg.norm(g, axis=1)
        ok = (gn > GRADIENT_FLOOR) & (np.abs(P(z)) <= 1e-9 * np.maximum(gn, 1.0) * max(1.0, radius))
        ok &= np.sum((z - np.asarray(center)) ** 2, axis=1) <= radius ** 2
        if keep is not None:
            ok &= keep(z)
        P_out.append(z[ok])
        N_out.append(g[ok] / gn[ok, None])
        F_out.append(np.full(int(ok.sum()), k))
    if not P_out:
        return ZeroCloud(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0, int))
    return ZeroCloud(np.vstack(P_out), np.vstack(N_out), np.concatenate(F_out))


@dataclass
class TubeClass:
    label: str
    zero_samples: int
    max_angle: float
    vacuous: bool = False


def tube_meets_wall(tube, part, ball):
    pts = tube_samples(tube, tube.radius / 4)
    pts = pts[ball.contains(pts)]
    if len(pts) == 0:
        return False
    return bool(np.any(part.locate_codes(pts) < 0))


def tangency_angles(direction, normals):
    d = np.asarray(direction, float)
    return np.arcsin(np.clip(np.abs(normals @ d), 0.0, 1.0))


def classify_tube(tube, part, ball, params, n_samples=1000, seed=0, cloud=None):
    """none / tangential / transversal relative to the wall inside ``ball``.

    Zero-set samples come from 2 B_j intersected with 10 T; pass a
    precomputed ``cloud`` on 2 B_j to share projections across tubes.
    """
    if not tube_meets_wall(tube, part, ball):
        return TubeClass("none", 0, 0.0)
    big = 10.0 * tube.radius
    if cloud is None:
        u = qmc.Halton(d=3, scramble=True, seed=seed).random(n_samples)
        c = np.asarray(ball.center)
        zlo, zhi = c[2] - 2 * ball.radius, c[2] + 2 * ball.radius
        z = zlo + (zhi - zlo) * u[:, 0]
        rr = big * np.sqrt(u[:, 1])
        ang = 2 * math.pi * u[:, 2]
        pts = np.column_stack([tube.axis_point(z), z])
        pts[:, 0] += rr * np.cos(ang)
        pts[:, 1] += rr * np.sin(ang)
        keep = (lambda q: (np.hypot(*tube.horizontal_offset(q).T) <= big)
                & (np.abs(q[:, 2]) <= 10 * tube.extent))
        cloud = project_cloud(part, pts, ball.center, 2 * ball.radius, keep)
        sel = np.ones(len(cloud.points), bool)
    else:
        sel = (np.hypot(*tube.horizontal_offset(cloud.points).T) <= big) \
            if len(cloud.points) else np.zeros(0, bool)
    if not np.any(sel):
        return TubeClass("tangential", 0, 0.0, vacuous=True)
    ang = tangency_angles(tube.direction, cloud.normals[sel])
    worst = float(np.max(ang))
    label = "tangential" if worst <= params.angle_threshold else "transversal"
    return TubeClass(label, int(sel.sum()), worst)


NONE, TANGENTIAL, TRANSVERSAL = 0, 1, 2
LABELS = ("none", "tangential", "transversal")


def _ring_offsets(radius, rings=(0.5, 1.0), per_ring=6):
    ang = 2 * math.pi * np.arange(per_ring) / per_ring
    offs = [np.zeros(2)]
    for rr in rings:
        offs += [np.array([math.cos(a), math.sin(a)]) * rr * radius for a in ang]
    return np.array(offs)


def classify_tubes(tubes, part, ball, params, cloud=None, n_cloud=2000, seed=0, chunk=256):
    """Batched ``classify_tube`` sharing one zero-set cloud on 2 B_j.

    Returns ``(codes, vacuous)``: 0 none, 1 tangential, 2 transversal, and
    a flag for tangential-by-vacuity. Tubes of one fine cap share a
    direction, so the cloud is sheared along it and searched with a KD-tree.
    """
    from scipy.spatial import cKDTree
    n = len(tubes)
    codes = np.zeros(n, np.int8)
    vacuous = np.zeros(n, bool)
    if n == 0 or not part.factors:
        return codes, vacuous
    if cloud is None:
        cloud = zero_cloud(part, ball.center, 2 * ball.radius, n_cloud, seed)
    c = np.asarray(ball.center, float)
    groups = {}
    for k, t in enumerate(tubes):
        groups.setdefault((t.omega_index, t.direction, t.radius, t.extent), []).append(k)
    thr = params.angle_threshold
    for (_, direction, r, extent), idx in groups.items():
        idx = np.array(idx)
        t0 = tubes[idx[0]]
        slope = t0.slope
        bases = np.array([tubes[k].base for k in idx])
        # a point of T inside the ball is within rho + r of the centre
        rel = np.column_stack([bases, np.zeros(len(bases))]) - c
        d = np.asarray(direction)
        perp = rel - (rel @ d)[:, None] * d[None, :]
        cand = np.nonzero(np.linalg.norm(perp, axis=1) <= ball.radius + r)[0]
        if len(cand) == 0:
            continue
        nz = max(2, int(math.ceil(2 * extent / (r / 4))) + 1)
        z = np.linspace(-extent, extent, nz)
        z = z[np.abs(z - c[2]) <= ball.radius]
        offs = _ring_offsets(r)
        meets = np.zeros(len(cand), bool)
        for lo in range(0, len(cand), chunk):
            sub = cand[lo:lo + chunk]
            xy = (bases[sub][:, None, None, :] + z[None, :, None, None] * slope[None, None, None, :]
                  + offs[None, None, :, :])
            zz = np.broadcast_to(z[None, :, None], xy.shape[:3])
            pts = np.concatenate([xy, zz[..., None]], axis=-1).reshape(-1, 3)
            owner = np.broadcast_to(np.arange(len(sub))[:, None, None], xy.shape[:3]).ravel()
            inside = np.sum((pts - c) ** 2, axis=1) <= ball.radius ** 2
            if not inside.any():
                continue
            wall = part.locate_codes(pts[inside]) < 0
            hit = np.zeros(len(sub), bool)
            hit[owner[inside][wall]] = True
            meets[lo:lo + len(sub)] = hit
        hits = idx[cand[meets]]
        if len(hits) == 0:
            continue
        hb = bases[cand[meets]]
        if len(cloud.points) == 0:
            codes[hits] = TANGENTIAL
            vacuous[hits] = True
            continue
        q = cloud.points[:, :2] - cloud.points[:, 2:3] * slope[None, :]
        bad = tangency_angles(direction, cloud.normals) > thr
        total = cKDTree(q).query_ball_point(hb, 10.0 * r, return_length=True)
        nbad = (cKDTree(q[bad]).query_ball_point(hb, 10.0 * r, return_length=True)
                if bad.any() else np.zeros(len(hb), int))
        codes[hits] = np.where(nbad > 0, TRANSVERSAL, TANGENTIAL)
        vacuous[hits] = total == 0
    return codes, vacuous


def random_line_check(part, n=1000, radius=None, seed=0):
    """Crossing counts of ``n`` random lines through B(radius) against the degree.

    Lines contained in the zero set are counted separately, not as violations.
    """
    radius = part.R if radius is None else float(radius)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    g = rng.standard_normal((n, 3))
    g /= np.linalg.norm(g, axis=1)[:, None]
    x0 = g * (radius * np.cbrt(rng.random(n)))[:, None]
    counts = np.zeros(n, int)
    infinite = 0
    for k in range(n):
        lc = line_crossings(part, x0[k], d[k])
        counts[k] = lc.count
        infinite += lc.infinite
    bound = part.degree
    return {"lines": int(n), "max_crossings": int(counts.max(initial=0)), "bound": int(bound),
            "violations": int(np.sum(counts > bound)), "contained": int(infinite)}
