"""Broad and bilinear quantities, tube-cell incidence and wall sorting."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.stats import qmc

from .errors import InvalidParameterError
from .extension import EvalGrid, evaluate_extension, lp_norm
from .geometry import build_caps, build_omega_caps, build_strips, cap_index, make_cap, pair_strip
from .polypart import (Ball, Partition, TrivariatePolynomial, TANGENTIAL, TRANSVERSAL,
                       classify_tubes, zero_cloud)
from .wavepacket import WavePacketSet


# -- cap fields -------------------------------------------------------------------

@dataclass
class CapField:
    """Ef_tau for every coarse cap on one evaluation grid."""
    caps: list
    values: np.ndarray
    grid: EvalGrid
    params: object

    @classmethod
    def from_parts(cls, parts, grid, params, backend=None):
        """Field from ``[(cap, SurfaceFunction or None), ...]``."""
        caps = [c for c, _ in parts]
        vals = np.zeros((len(parts), len(grid)), complex)
        for k, (_, g) in enumerate(parts):
            if g is not None and np.any(g.values):
                vals[k] = evaluate_extension(g, grid, backend=backend)
        return cls(caps, vals, grid, params)

    @property
    def total(self):
        out = np.zeros(self.values.shape[1], complex)
        for row in self.values:
            out += row
        return out

    def strip_sums(self):
        """Sums of Ef_tau over the caps of each axis strip (e1 family, then e2)."""
        strips = build_strips(self.params)
        out = np.zeros((len(strips), self.values.shape[1]), complex)
        for k, L in enumerate(strips):
            for c, row in zip(self.caps, self.values):
                if L.has_cap(c):
                    out[k] += row
        return out

    def __getitem__(self, cap):
        for c, row in zip(self.caps, self.values):
            if c.index == cap.index:
                return row
        raise KeyError(cap.index)


def cap_field(f, grid, params, backend=None):
    """Ef_tau with f_tau the sharp restriction of f to tau."""
    if not isinstance(grid, EvalGrid):
        grid = EvalGrid.from_points(grid)
    parts = []
    for cap in build_caps(params):
        g = f.restrict(cap.contains)
        parts.append((cap, g if g.mask.any() else None))
    return CapField.from_parts(parts, grid, params, backend)


def broad_values(cf, alpha):
    """B_alpha[Ef] at every grid point: Ef where the cap and strip maxima sum to
    at most alpha |Ef|, zero elsewhere."""
    total = cf.total
    cap_max = np.max(np.abs(cf.values), axis=0) if len(cf.values) else np.zeros(len(total))
    strip_max = np.max(np.abs(cf.strip_sums()), axis=0)
    broad = cap_max + strip_max <= alpha * np.abs(total)
    return np.where(broad, total, 0.0)


def broad_value(cf, index, alpha):
    """Broad value at grid point ``index``."""
    return complex(broad_values(cf, alpha)[index])


def qualifying_pairs(caps, params):
    """Unordered index pairs of separated caps whose joining strip is off both axes."""
    out = []
    for a in range(len(caps)):
        for b in range(a + 1, len(caps)):
            ps = pair_strip(caps[a], caps[b], params)
            if ps.separated and ps.nonparallel:
                out.append((a, b))
    return out


def bil_values(cf):
    """sum over qualifying unordered pairs of |Ef_t1|^(1/2) |Ef_t2|^(1/2)."""
    root = np.sqrt(np.abs(cf.values))
    out = np.zeros(cf.values.shape[1])
    for a, b in qualifying_pairs(cf.caps, cf.params):
        out += root[a] * root[b]
    return out


def bil_value(cf, index):
    return float(bil_values(cf)[index])


# -- incidence ----------------------------------------------------------------------

@dataclass
class IncidenceTables:
    tubes: list
    cells: dict = field(default_factory=dict)
    visits: np.ndarray = None
    balls: list = field(default_factory=list)
    flat: dict = field(default_factory=dict)
    sharp: dict = field(default_factory=dict)
    vacuous: dict = field(default_factory=dict)

    def sharp_membership(self):
        out = np.zeros(len(self.tubes), int)
        for lst in self.sharp.values():
            out[np.asarray(lst, int)] += 1
        return out

    def direction_counts(self):
        return {j: len({self.tubes[k].omega_index for k in lst}) for j, lst in self.flat.items()}

    def to_dict(self):
        out = {"tubes": len(self.tubes)}
        if self.visits is not None:
            out["cells"] = {c: len(v) for c, v in sorted(self.cells.items())}
            out["max_visits"] = int(np.max(self.visits, initial=0))
        if self.balls:
            out["balls"] = [b.to_dict() for b in self.balls]
            out["flat_sizes"] = [len(self.flat.get(j, [])) for j in range(len(self.balls))]
            out["sharp_sizes"] = [len(self.sharp.get(j, [])) for j in range(len(self.balls))]
            dc = self.direction_counts()
            out["direction_counts"] = [dc.get(j, 0) for j in range(len(self.balls))]
            out["vacuous"] = [self.vacuous.get(j, 0) for j in range(len(self.balls))]
        return out


def _axis_samples(tube, spacing):
    n = max(2, int(math.ceil(2 * tube.extent / spacing)) + 1)
    z = np.linspace(-tube.extent, tube.extent, n)
    return np.column_stack([tube.axis_point(z), z])


def cell_tube_incidence(part, tubes, params, spacing=None):
    """Cells met by each tube axis, sampled every R^(1/2 + delta)/4.

    Returns the tables and a report with the distinct-cell bound deg + 1.
    """
    spacing = params.tube_radius / 4 if spacing is None else spacing
    visits = np.zeros(len(tubes), int)
    cells = {}
    for k, t in enumerate(tubes):
        codes = np.unique(part.locate_codes(_axis_samples(t, spacing)))
        codes = codes[codes >= 0]
        visits[k] = len(codes)
        for c in codes:
            cells.setdefault(part.label(c), []).append(k)
    bound = part.degree + 1
    tables = IncidenceTables(list(tubes), cells, visits)
    report = {"max_visits": int(np.max(visits, initial=0)), "bound": bound,
              "violations": int(np.sum(visits > bound)), "tubes": len(tubes)}
    return tables, report


def sort_wall_tubes(part, balls, tubes, params, n_cloud=2000, seed=0, C=10.0):
    """Split the tubes meeting W inside each B_j into tangential and transversal lists."""
    tables = IncidenceTables(list(tubes), balls=list(balls))
    for j, ball in enumerate(balls):
        if not tubes:
            break
        cloud = zero_cloud(part, ball.center, 2 * ball.radius, n_cloud, seed + j)
        codes, vac = classify_tubes(tubes, part, ball, params, cloud=cloud)
        tables.flat[j] = [int(k) for k in np.nonzero(codes == TANGENTIAL)[0]]
        tables.sharp[j] = [int(k) for k in np.nonzero(codes == TRANSVERSAL)[0]]
        tables.vacuous[j] = int(vac.sum())
    R, M = params.R, params.M
    sharp_budget = C * M ** C
    dir_budget = C * R ** (0.5 + 2 * params.delta)
    memb = tables.sharp_membership()
    dc = tables.direction_counts()
    max_dir = max(dc.values(), default=0)
    report = {
        "max_sharp_membership": int(np.max(memb, initial=0)),
        "sharp_budget": sharp_budget,
        "max_direction_count": int(max_dir),
        "direction_budget": dir_budget,
        "nominal_sharp_scale": R ** (C * params.delta1),
        "nominal_direction_scale": R ** (0.5 + C * params.delta),
        "flat_total": sum(len(v) for v in tables.flat.values()),
        "sharp_total": sum(len(v) for v in tables.sharp.values()),
        "vacuous_total": sum(tables.vacuous.values()),
        "violations": int(np.sum(memb > sharp_budget)) + sum(int(v > dir_budget) for v in dc.values()),
    }
    return tables, report


# -- tangential configurations --------------------------------------------------------

def plane_wall(params, orientation="diag", offset=0.0):
    """Single-factor partition with Z = {x1 -+ x2 = offset}.

    Tubes of caps near the diagonal xi1 = xi2 (``diag``) or xi1 = -xi2
    (``anti``) are tangential to it.
    """
    sgn = -1.0 if orientation == "diag" else 1.0
    k = 1.0 / math.sqrt(2.0)
    P = TrivariatePolynomial.from_terms({(1, 0, 0): k, (0, 1, 0): sgn * k, (0, 0, 0): -offset * k})
    return Partition([P], params.R, params.delta)


@dataclass
class TangentialConfig:
    caps: tuple
    wall: Partition
    ball: Ball
    cube_center: tuple
    cube_side: float
    orientation: str
    offset: float
    seed: int

    def to_dict(self):
        return {"caps": [list(c.index) for c in self.caps], "orientation": self.orientation,
                "offset": self.offset, "ball": self.ball.to_dict(),
                "cube_center": list(self.cube_center), "cube_side": self.cube_side,
                "seed": self.seed}


def _diagonal_caps(K, orientation):
    caps = {c.index: c for c in build_caps(K)}
    idx = [(i, i) if orientation == "diag" else (i, K - 1 - i) for i in range(K)]
    return [caps[k] for k in idx if k in caps]


def _omegas_of_cap(cap, params):
    return [om for om in build_omega_caps(params)
            if tuple(int(v) for v in cap_index(om.center[0], om.center[1], cap.K)) == cap.index]


def cap_pairs(params, orientation, separated):
    """Cap pairs along one diagonal: adjacent, or at least one cap apart."""
    line = _diagonal_caps(params.K, orientation)
    out = []
    for a in range(len(line)):
        for b in range(a + 1, len(line)):
            gap = b - a
            if (gap == 1) != separated and _omegas_of_cap(line[a], params) and _omegas_of_cap(line[b], params):
                if separated:
                    ps = pair_strip(line[a], line[b], params)
                    if not (ps.separated and ps.nonparallel):
                        continue
                out.append((line[a], line[b]))
    return out


def random_tangential_config(params, seed, separated=False, cube_side=None, max_offset=None):
    """Random cap pair along a diagonal, a wall plane tangent to its tubes,
    and a cube Q of side R^(1/2) on the wall inside B(R/2)."""
    rng = np.random.default_rng(seed)
    R = params.R
    orientation = ("diag", "anti")[int(rng.integers(2))]
    pairs = cap_pairs(params, orientation, separated)
    if not pairs:
        raise InvalidParameterError("no admissible cap pair for this K")
    caps = pairs[int(rng.integers(len(pairs)))]
    r = params.tube_radius
    max_offset = r if max_offset is None else max_offset
    offset = float(rng.uniform(-max_offset, max_offset))
    n = np.array([1.0, -1.0 if orientation == "diag" else 1.0, 0.0]) / math.sqrt(2.0)
    d = rng.standard_normal(3)
    d /= np.linalg.norm(d)
    p = d * 0.5 * R * np.cbrt(rng.random())
    p = p - (p @ n - offset / math.sqrt(2.0)) * n
    side = math.sqrt(R) if cube_side is None else cube_side
    ball = Ball((0.0, 0.0, 0.0), R ** (1.0 - params.delta))
    return TangentialConfig(tuple(caps), plane_wall(params, orientation, offset), ball,
                            tuple(float(v) for v in p), float(side), orientation, offset, int(seed))


def packet_spacing(params, x_max):
    """Grid spacing resolving |x| <= x_max for packets on 3 Omega of unit-disk caps."""
    s = params.omega_spacing
    return min(s / 8.0, 1.0 / (8.0 * x_max * (1.0 + 3.0 * s)))


@dataclass
class FlatPackets:
    cap: object
    packets: WavePacketSet
    tubes: list
    codes: np.ndarray

    @property
    def flat_tubes(self):
        return [t for t, c in zip(self.tubes, self.codes) if c == TANGENTIAL]

    def flat_sum(self):
        keys = {t.key for t in self.flat_tubes}
        return self.packets.sum_selected(lambda blk: [t.key in keys for t in blk.tubes])


def flat_packets(family, cap, config, params, h, **wps_kw):
    """Packets of ``family`` over the fine caps centered in ``cap``, with the
    tangential tubes of ``config.ball`` marked."""
    omegas = _omegas_of_cap(cap, params)
    s = params.omega_spacing
    lo1 = min(o.center[0] for o in omegas) - s
    hi1 = max(o.center[0] for o in omegas) + s
    lo2 = min(o.center[1] for o in omegas) - s
    hi2 = max(o.center[1] for o in omegas) + s
    f = family.sample(h, box=(lo1, hi1, lo2, hi2))
    keys = {o.index for o in omegas}

    def region(S, T):
        k1 = np.floor(S / s + 0.5).astype(np.int64)
        k2 = np.floor(T / s + 0.5).astype(np.int64)
        out = np.zeros(S.shape, bool)
        for a, b in keys:
            out |= (k1 == a) & (k2 == b)
        return out

    f = f.restrict(region)
    wps = WavePacketSet(f, params, omegas=omegas, **wps_kw)
    tubes = list(wps.all_tubes())
    codes, _ = classify_tubes(tubes, config.wall, config.ball, params)
    return FlatPackets(cap, wps, tubes, codes)


def tube_meets_cube(tube, center, side, levels=65):
    """Horizontal disc sections of the tube against the axis-aligned cube."""
    c = np.asarray(center, float)
    z = np.linspace(c[2] - side / 2, c[2] + side / 2, levels)
    z = z[np.abs(z) <= tube.extent]
    if len(z) == 0:
        return False
    a = tube.axis_point(z)
    dx = np.maximum(np.abs(a[:, 0] - c[0]) - side / 2, 0.0)
    dy = np.maximum(np.abs(a[:, 1] - c[1]) - side / 2, 0.0)
    return bool(np.any(np.hypot(dx, dy) <= tube.radius))


@dataclass
class OrthogonalityReport:
    lhs: float
    rhs: float
    ratio: float
    n1: int
    n2: int
    bound: float
    passed: bool
    flag: str = ""

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "tubes1": self.n1,
                "tubes2": self.n2, "bound": self.bound, "pass": self.passed, "flag": self.flag}


def bilinear_orthogonality_check(packets, tubes1, tubes2, cube_center, cube_side, params,
                                 n=16, bound=100.0, backend=None):
    """int |sum_T1 sum_T2 F_T1 F_T2|^2 against sum_T1 sum_T2 int |F_T1 F_T2|^2 on 2Q.

    ``packets`` is one WavePacketSet or a pair, one per cap.
    """
    if isinstance(packets, WavePacketSet):
        packets = (packets, packets)
    grid = EvalGrid.cube(cube_center, 2.0 * cube_side, n)
    if not tubes1 or not tubes2:
        return OrthogonalityReport(0.0, 0.0, math.nan, len(tubes1), len(tubes2), bound, False,
                                   "empty tube selection")
    sums, sq = [], []
    for wps, tubes in zip(packets, (tubes1, tubes2)):
        F = np.zeros(len(grid), complex)
        A = np.zeros(len(grid))
        for t in tubes:
            v = evaluate_extension(wps.packet(t), grid, backend=backend)
            F += v
            A += np.abs(v) ** 2
        sums.append(F)
        sq.append(A)
    w = grid.cell_volume
    lhs = float(np.sum(np.abs(sums[0]) ** 2 * np.abs(sums[1]) ** 2 * w))
    rhs = float(np.sum(sq[0] * sq[1] * w))
    if rhs == 0.0:
        return OrthogonalityReport(lhs, rhs, math.nan, len(tubes1), len(tubes2), bound,
                                   lhs == 0.0, "zero packets")
    ratio = lhs / rhs
    return OrthogonalityReport(lhs, rhs, ratio, len(tubes1), len(tubes2), bound, ratio <= bound)


def orthogonality_trial(family, params, seed, n=16, bound=100.0):
    """One random tangential configuration with adjacent diagonal caps."""
    cfg = random_tangential_config(params, seed, separated=False)
    x_max = float(np.linalg.norm(cfg.cube_center)) + math.sqrt(3.0) * cfg.cube_side + 1.0
    h = packet_spacing(params, x_max)
    fp = [flat_packets(family, cap, cfg, params, h) for cap in cfg.caps]
    sel = [[t for t in p.flat_tubes if tube_meets_cube(t, cfg.cube_center, cfg.cube_side)] for p in fp]
    rep = bilinear_orthogonality_check((fp[0].packets, fp[1].packets), sel[0], sel[1],
                                       cfg.cube_center, cfg.cube_side, params, n, bound)
    return cfg, rep


# -- bilinear norms on the wall -------------------------------------------------------

def wall_grid(part, ball, n=8000, seed=0):
    """Quasi-random points of the ball that the partition places in the wall."""
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(n)
    r = ball.radius * np.cbrt(u[:, 0])
    z = 1 - 2 * u[:, 1]
    ph = 2 * math.pi * u[:, 2]
    rho = np.sqrt(np.clip(1 - z * z, 0, None))
    pts = np.column_stack([r * rho * np.cos(ph), r * rho * np.sin(ph), r * z]) + np.asarray(ball.center)
    keep = part.locate_codes(pts) < 0
    if not keep.any():
        raise InvalidParameterError("the wall does not meet the ball")
    vol = 4.0 * math.pi / 3.0 * ball.radius ** 3 / n
    return EvalGrid(pts[keep], vol, "B_j & W", {"ball": ball.to_dict(), "drawn": n})


@dataclass
class BilinearNorms:
    L4: float
    L2: float
    Lp0: float
    flat_mass: float
    pairs: dict

    def to_dict(self):
        return {"L4": self.L4, "L2": self.L2, "Lp0": self.Lp0, "flat_mass": self.flat_mass,
                "pairs": {k: list(v) for k, v in self.pairs.items()}}


def bilinear_l4_l2_norms(flat_field, region, params, flat_mass):
    """Norms of Bil over the wall region with their scale-only right-hand sides.

    ``flat_mass`` is sum_tau ||f_tau^flat||^2 on the surface.
    """
    if len(region) == 0:
        raise InvalidParameterError("empty region")
    bil = bil_values(flat_field)
    R, d = params.R, params.delta
    root = math.sqrt(max(flat_mass, 0.0))
    L4 = lp_norm(bil, region, 4)
    L2 = lp_norm(bil, region, 2)
    Lp = lp_norm(bil, region, params.p0)
    pairs = {"L4": (L4, R ** -0.125 * root),
             "L2": (L2, R ** d * R ** 0.5 * root),
             "tangential_mass": (flat_mass, R ** -0.5)}
    return BilinearNorms(L4, L2, Lp, flat_mass, pairs)


def flat_bilinear_run(family, params, config, n_region=8000, backend=None):
    """Bil of the tangential packets of both caps of ``config`` on B_j & W."""
    region = wall_grid(config.wall, config.ball, n_region, seed=config.seed)
    x_max = float(np.max(np.linalg.norm(region.points, axis=1)))
    h = packet_spacing(params, x_max)
    parts, mass = [], 0.0
    for cap in config.caps:
        fp = flat_packets(family, cap, config, params, h)
        g = fp.flat_sum() if fp.flat_tubes else None
        if g is not None:
            mass += g.l2_squared()
        parts.append((cap, g))
    fld = CapField.from_parts(parts, region, params, backend)
    return bilinear_l4_l2_norms(fld, region, params, mass), fld


def separated_config(params, orientation="diag", offset=0.0, seed=0):
    """Fixed configuration for scans: the widest separated pair on one diagonal."""
    pairs = cap_pairs(params, orientation, True)
    if not pairs:
        raise InvalidParameterError("no separated diagonal pair for this K")
    caps = min(pairs, key=lambda p: (max(math.hypot(*c.center) for c in p), p[0].index, p[1].index))
    ball = Ball((0.0, 0.0, 0.0), params.R ** (1.0 - params.delta))
    return TangentialConfig(tuple(caps), plane_wall(params, orientation, offset), ball,
                            (0.0, 0.0, 0.0), math.sqrt(params.R), orientation, offset, seed)


# -- decomposition cascade ----------------------------------------------------------------

def cascade_check(cf_total, cf_sharp, cf_flat, alpha, C=4.0):
    """Pointwise comparison at broad points of

        |B_alpha[Ef](x)|  vs  |B_{C alpha}[Ef_sharp](x)| + K^100 Bil(Ef_flat)(x) + |Ef - Ef_sharp - Ef_flat|(x).

    Returns the count of broad points, the violations and the worst ratio.
    """
    K = cf_total.params.K
    b = np.abs(broad_values(cf_total, alpha))
    pts = np.nonzero(b > 0)[0]
    if len(pts) == 0:
        return {"broad_points": 0, "violations": 0, "worst_ratio": 0.0, "C": C}
    rest = np.abs(cf_total.total - cf_sharp.total - cf_flat.total)
    bil = bil_values(cf_flat)
    sharp = np.abs(broad_values(cf_sharp, min(C * alpha, 1e300)))
    rhs = sharp + float(K) ** 100 * bil + rest
    ratio = np.where(rhs[pts] > 0, b[pts] / np.where(rhs[pts] > 0, rhs[pts], 1.0), np.inf)
    return {"broad_points": int(len(pts)), "violations": int(np.sum(b[pts] > rhs[pts])),
            "worst_ratio": float(np.max(ratio)), "C": C}
