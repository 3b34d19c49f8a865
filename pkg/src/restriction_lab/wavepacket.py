"""Wave-packet decomposition over fine caps and tubes.

For a fine cap Omega with spatial profile

    G(x) = (2 pi)^-2 * sum_{eta in Omega} w f~(eta) exp(i x.eta),

sampled on the square lattice ``x_m = dx * Z^2``, the packet of a tube T is

    f~_T(xi) = psi_Omega(xi) * sum_m dx^2 phi_T(x_m) G(x_m) exp(-i x_m.xi).

Because the phi_T sum to one and psi_Omega equals one on Omega, summing all
packets of Omega returns f~ restricted to Omega up to the truncation of the
tube family (Poisson summation makes the lattice sum exact as long as the
lattice period 2 pi / dx exceeds twice the cap spacing).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidParameterError, ResolutionError
from .extension import EvalGrid, evaluate_extension
from .geometry import OmegaCap, build_omega_caps, build_tubes
from .surface import SurfaceFunction, jacobian


def bump(t):
    """exp(-1/(1 - t^2)) on |t| < 1, zero elsewhere."""
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def smooth_step(y):
    """C-infinity step: 0 for y <= 0, 1 for y >= 1."""
    y = np.asarray(y, float)
    out = np.where(y >= 1.0, 1.0, 0.0)
    mid = (y > 0.0) & (y < 1.0)
    a = np.exp(-1.0 / y[mid])
    b = np.exp(-1.0 / (1.0 - y[mid]))
    out[mid] = a / (a + b)
    return out


class WindowSystem:
    """Spatial partition of unity phi_T and frequency windows psi_Omega.

    phi_T(x) = b(|x - x_T| / rho) / sum_y b(|x - y| / rho) over the full
    hexagonal base lattice, with rho = 3/4 of the tube radius. psi_Omega is a
    tensor product of smooth steps, equal to one on the concentric square of
    side 2s and zero outside the square of side 3s.
    """

    def __init__(self, params, support=0.75):
        self.params = params
        self.r = params.tube_radius
        self.rho = support * self.r
        self.s = params.omega_spacing
        a = self.r
        self.basis = np.array([[a, a / 2.0], [0.0, a * math.sqrt(3.0) / 2.0]])
        self._inv = np.linalg.inv(self.basis)

    def partition_sum(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        lc = x @ self._inv.T
        base = np.floor(lc).astype(np.int64)
        total = np.zeros(len(x))
        for di in range(-2, 4):
            for dj in range(-2, 4):
                ij = base + np.array([di, dj])
                y = ij @ self.basis.T
                d = np.hypot(x[:, 0] - y[:, 0], x[:, 1] - y[:, 1])
                total += bump(d / self.rho)
        return total

    def phi(self, x, base):
        x = np.atleast_2d(np.asarray(x, float))
        d = np.hypot(x[:, 0] - base[0], x[:, 1] - base[1])
        num = bump(d / self.rho)
        out = np.zeros(len(x))
        nz = num > 0
        if np.any(nz):
            out[nz] = num[nz] / self.partition_sum(x[nz])
        return out

    def psi_1d(self, u):
        """Profile in u = |xi_k - omega_k| / s."""
        return smooth_step((1.5 - np.asarray(u, float)) / 0.5)

    def psi(self, omega, xi1, xi2):
        c = omega.center if isinstance(omega, OmegaCap) else omega
        return (self.psi_1d(np.abs(np.asarray(xi1) - c[0]) / self.s)
                * self.psi_1d(np.abs(np.asarray(xi2) - c[1]) / self.s))


@dataclass
class OmegaBlock:
    """Everything needed to synthesize the packets of one fine cap."""
    omega: OmegaCap
    tubes: list
    x1: np.ndarray          # sample lattice axes
    x2: np.ndarray
    G: np.ndarray           # spatial profile on the sample lattice
    boxes: list             # per tube: (i0, j0, phi block)
    rows: slice             # 3 Omega block in the packet grid
    cols: slice
    xi1: np.ndarray
    xi2: np.ndarray
    psi: np.ndarray
    jac: np.ndarray
    mass: float             # sum over Omega of |f|^2 J w
    gram: dict = field(default_factory=dict)

    def weights(self, selected=None):
        """Sum of phi_T over the selected tubes, on the sample lattice."""
        if not self.boxes:
            return np.zeros(self.G.shape)
        if "flat" not in self.gram:
            n2 = self.G.shape[1]
            flat, vals = [], []
            for i0, j0, ph in self.boxes:
                ii, jj = np.meshgrid(np.arange(ph.shape[0]) + i0, np.arange(ph.shape[1]) + j0,
                                     indexing="ij")
                flat.append((ii * n2 + jj).ravel())
                vals.append(ph.ravel())
            self.gram["flat"] = np.array(flat)
            self.gram["vals"] = np.array(vals)
        flat, vals = self.gram["flat"], self.gram["vals"]
        if selected is not None:
            selected = np.asarray(selected, bool)
            flat, vals = flat[selected], vals[selected]
        W = np.bincount(flat.ravel(), weights=vals.ravel(), minlength=self.G.size)
        return W.reshape(self.G.shape)

    def synthesize(self, coef, x1, x2, xi1, xi2, psi):
        """psi * sum_m coef_m exp(-i x_m.xi) on the tensor grid xi1 x xi2."""
        A1 = np.exp(-1j * np.outer(xi1, x1))
        A2 = np.exp(-1j * np.outer(x2, xi2))
        return psi * (A1 @ (coef @ A2))


class WavePacketSet:
    """Lazily built packets f_T for all tubes of the requested fine caps.

    Packets live on the grid of ``f`` extended by ``pad`` nodes on every side
    so that each 3 Omega square fits.
    """

    def __init__(self, f, params, omegas=None, margin=None, samples_per_radius=3,
                 windows=None):
        s = params.omega_spacing
        if f.h > s / 8.0 * (1 + 1e-12):
            raise ResolutionError("surface grid too coarse for the fine-cap scale", s / 8.0)
        if abs(f.h1 - f.h2) > 1e-15:
            raise InvalidParameterError("packets need a square grid")
        self.f = f
        self.params = params
        self.windows = windows or WindowSystem(params)
        self.margin = 6.0 * params.tube_radius if margin is None else float(margin)
        self.dx = params.tube_radius / samples_per_radius
        if 2 * math.pi / self.dx <= 2 * s:
            raise InvalidParameterError("sample lattice too coarse for exact reconstruction")
        self.omegas = list(build_omega_caps(params) if omegas is None else omegas)
        h = f.h1
        self.h = h
        npad = int(math.ceil(1.5 * s / h)) + 2
        self.npad = npad
        self.a1 = f.a1 - npad * h
        self.a2 = f.a2 - npad * h
        self.n1 = f.shape[0] + 2 * npad
        self.n2 = f.shape[1] + 2 * npad
        self._dens = f.density()
        self._blocks = {}

    # -- grid helpers ------------------------------------------------------
    def axes(self):
        return (self.a1 + self.h * np.arange(self.n1), self.a2 + self.h * np.arange(self.n2))

    def _slice(self, a, n, lo, hi):
        i0 = max(0, int(math.ceil((lo - a) / self.h - 1e-9)))
        i1 = min(n, int(math.floor((hi - a) / self.h + 1e-9)) + 1)
        return slice(i0, max(i0, i1))

    def tubes(self, omega):
        return self.block(omega).tubes

    def all_tubes(self):
        for om in self.omegas:
            yield from self.block(om).tubes

    # -- block construction --------------------------------------------------
    def block(self, omega):
        key = omega.index
        if key in self._blocks:
            return self._blocks[key]
        p = self.params
        s = p.omega_spacing
        tubes = build_tubes(omega, p, margin=self.margin)
        bases = np.array([t.base for t in tubes]) if tubes else np.zeros((0, 2))
        rho = self.windows.rho
        dx = self.dx
        if len(bases):
            lo = np.floor((bases.min(axis=0) - rho) / dx).astype(int) - 3
            hi = np.ceil((bases.max(axis=0) + rho) / dx).astype(int) + 3
        else:
            lo = hi = np.zeros(2, int)
        x1 = dx * np.arange(lo[0], hi[0] + 1)
        x2 = dx * np.arange(lo[1], hi[1] + 1)
        # spatial profile from the nodes of f inside Omega
        f = self.f
        s1, s2 = f.axes()
        r = slice(*np.searchsorted(s1, [omega.center[0] - s, omega.center[0] + s]))
        c = slice(*np.searchsorted(s2, [omega.center[1] - s, omega.center[1] + s]))
        S1, S2 = np.meshgrid(s1[r], s2[c], indexing="ij")
        inside = omega.contains(S1, S2) & f.mask[r, c]
        D = np.where(inside, self._dens[r, c], 0.0)
        mass = float(np.sum((np.abs(f.values[r, c]) ** 2 * f.jac[r, c])[inside]) * f.h1 * f.h2)
        if np.any(D != 0):
            E1 = np.exp(1j * np.outer(x1, s1[r]))
            E2 = np.exp(1j * np.outer(s2[c], x2))
            G = (E1 @ D @ E2) / (4 * math.pi ** 2)
        else:
            G = np.zeros((len(x1), len(x2)), complex)
        # per-tube window blocks on the sample lattice: bump numerators for
        # all tubes at once, divided by the lattice partition sum
        k = int(math.ceil(rho / dx)) + 1
        boxes = []
        if tubes:
            X1, X2 = np.meshgrid(x1, x2, indexing="ij")
            psum = self.windows.partition_sum(
                np.column_stack([X1.ravel(), X2.ravel()])).reshape(X1.shape)
            ci = np.rint(bases[:, 0] / dx).astype(int) - lo[0]
            cj = np.rint(bases[:, 1] / dx).astype(int) - lo[1]
            off = np.arange(-k, k + 1)
            gi = ci[:, None] + off[None, :]
            gj = cj[:, None] + off[None, :]
            d1 = x1[gi] - bases[:, :1]
            d2 = x2[gj] - bases[:, 1:]
            dist = np.hypot(d1[:, :, None], d2[:, None, :])
            ph = bump(dist / rho) / psum[gi[:, :, None], gj[:, None, :]]
            boxes = [(int(gi[n, 0]), int(gj[n, 0]), ph[n]) for n in range(len(tubes))]
        xa, xb = self.axes()
        rows = self._slice(self.a1, self.n1, omega.center[0] - 1.5 * s, omega.center[0] + 1.5 * s)
        cols = self._slice(self.a2, self.n2, omega.center[1] - 1.5 * s, omega.center[1] + 1.5 * s)
        xi1, xi2 = xa[rows], xb[cols]
        X, Y = np.meshgrid(xi1, xi2, indexing="ij")
        psi = self.windows.psi(omega, X, Y)
        blk = OmegaBlock(omega, tubes, x1, x2, G, boxes, rows, cols, xi1, xi2, psi,
                         jacobian(X, Y), mass)
        self._blocks[key] = blk
        return blk

    def drop_cache(self):
        self._blocks.clear()

    # -- packets -------------------------------------------------------------
    def _coef(self, blk, k):
        i0, j0, ph = blk.boxes[k]
        sl = (slice(i0, i0 + ph.shape[0]), slice(j0, j0 + ph.shape[1]))
        return self.dx ** 2 * ph * blk.G[sl], blk.x1[sl[0]], blk.x2[sl[1]]

    def packet_density(self, tube, xi1=None, xi2=None):
        """f~_T on the 3 Omega block (or on the given axes)."""
        blk = self.block(self._omega_of(tube))
        k = self._tube_pos(blk, tube)
        coef, x1, x2 = self._coef(blk, k)
        if xi1 is None:
            return blk.synthesize(coef, x1, x2, blk.xi1, blk.xi2, blk.psi)
        X, Y = np.meshgrid(xi1, xi2, indexing="ij")
        return blk.synthesize(coef, x1, x2, xi1, xi2, self.windows.psi(blk.omega, X, Y))

    def packet(self, tube):
        """f_T as a SurfaceFunction on its 3 Omega block."""
        blk = self.block(self._omega_of(tube))
        dens = self.packet_density(tube)
        mask = np.ones(dens.shape, bool)
        return SurfaceFunction(dens / blk.jac, blk.xi1[0], blk.xi2[0], self.h, self.h,
                               mask, blk.jac, "packet")

    def _omega_of(self, tube):
        for om in self.omegas:
            if om.index == tube.omega_index:
                return om
        raise KeyError(f"no fine cap with index {tube.omega_index}")

    def _tube_pos(self, blk, tube):
        if "pos" not in blk.gram:
            blk.gram["pos"] = {t.key: k for k, t in enumerate(blk.tubes)}
        return blk.gram["pos"][tube.key]

    # -- sums ------------------------------------------------------------------
    def block_sum(self, blk, selected=None, xi1=None, xi2=None):
        W = blk.weights(selected)
        coef = self.dx ** 2 * W * blk.G
        if xi1 is None:
            return blk.synthesize(coef, blk.x1, blk.x2, blk.xi1, blk.xi2, blk.psi)
        X, Y = np.meshgrid(xi1, xi2, indexing="ij")
        return blk.synthesize(coef, blk.x1, blk.x2, xi1, xi2, self.windows.psi(blk.omega, X, Y))

    def sum_selected(self, selector=None):
        """Sum of packets on the padded grid.

        ``selector(block)`` returns a boolean array over ``block.tubes`` (or
        None for all of them).
        """
        total = np.zeros((self.n1, self.n2), complex)
        support = np.zeros((self.n1, self.n2), bool)
        for om in self.omegas:
            blk = self.block(om)
            sel = None if selector is None else np.asarray(selector(blk), bool)
            if sel is not None and not sel.any():
                continue
            if not np.any(blk.G):
                continue
            total[blk.rows, blk.cols] += self.block_sum(blk, sel)
            support[blk.rows, blk.cols] |= blk.psi > 0
        xa, xb = self.axes()
        X, Y = np.meshgrid(xa, xb, indexing="ij")
        J = jacobian(X, Y)
        return SurfaceFunction(total / J, self.a1, self.a2, self.h, self.h, support | self.padded_mask(),
                               J, "packets")

    def select_sum(self, predicate=None):
        """Sum of f_T over tubes with ``predicate(tube)`` true (all if None)."""
        if predicate is None:
            return self.sum_selected(None)
        return self.sum_selected(lambda blk: [bool(predicate(t)) for t in blk.tubes])

    def padded_mask(self):
        m = np.zeros((self.n1, self.n2), bool)
        p = self.npad
        m[p:p + self.f.shape[0], p:p + self.f.shape[1]] = self.f.mask
        return m

    def padded_f(self):
        vals = np.zeros((self.n1, self.n2), complex)
        p = self.npad
        vals[p:p + self.f.shape[0], p:p + self.f.shape[1]] = self.f.values
        xa, xb = self.axes()
        X, Y = np.meshgrid(xa, xb, indexing="ij")
        return SurfaceFunction(vals, self.a1, self.a2, self.h, self.h, self.padded_mask(),
                               jacobian(X, Y), "padded")

    def residual(self):
        """Surface L2 norm of f minus the sum of all packets."""
        g = self.select_sum()
        diff = self.padded_f().values - g.values
        J = g.jac
        return math.sqrt(float(np.sum(np.abs(diff) ** 2 * J)) * self.h ** 2)

    # -- norms -------------------------------------------------------------------
    def _gram_table(self, blk):
        """M(d) = h^2 sum psi^2 / J exp(-i dx d.xi) for lattice offsets d."""
        if "M" not in blk.gram:
            k = int(math.ceil(self.windows.rho / self.dx)) + 1
            d = np.arange(-2 * k, 2 * k + 1)
            A1 = np.exp(-1j * np.outer(d * self.dx, blk.xi1))
            A2 = np.exp(-1j * np.outer(blk.xi2, d * self.dx))
            Q = blk.psi ** 2 / blk.jac
            blk.gram["M"] = (A1 @ Q @ A2) * self.h ** 2
            blk.gram["k"] = 2 * k
        return blk.gram["M"], blk.gram["k"]

    def norms_squared(self, omega):
        """||f_T||^2 on the surface for every tube of ``omega`` (Gram form)."""
        blk = self.block(omega)
        M, K = self._gram_table(blk)
        out = np.zeros(len(blk.tubes))
        for k, (i0, j0, ph) in enumerate(blk.boxes):
            c = self.dx ** 2 * ph * blk.G[i0:i0 + ph.shape[0], j0:j0 + ph.shape[1]]
            idx = np.nonzero(c)
            if len(idx[0]) == 0:
                continue
            cv = c[idx]
            d1 = idx[0][:, None] - idx[0][None, :] + K
            d2 = idx[1][:, None] - idx[1][None, :] + K
            out[k] = float(np.real(cv @ M[d1, d2] @ np.conj(cv)))
        return out

    def inner(self, t1, t2):
        """<f_T1, f_T2> = sum f~_T1 conj(f~_T2) / J * h^2 over the common block."""
        if t1.omega_index != t2.omega_index:
            raise InvalidParameterError("inner products are computed within one fine cap")
        blk = self.block(self._omega_of(t1))
        a = self.packet_density(t1)
        b = self.packet_density(t2)
        return complex(np.sum(a * np.conj(b) / blk.jac) * self.h ** 2)


def decompose(f, params, omegas=None, **kw):
    """Build the (lazy) wave-packet set of ``f``."""
    return WavePacketSet(f, params, omegas=omegas, **kw)


# -- property checks -----------------------------------------------------------

@dataclass
class PropertyResult:
    property: int
    name: str
    measured: float
    threshold: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"property": self.property, "name": self.name, "measured": self.measured,
                "threshold": self.threshold, "pass": bool(self.passed), "detail": self.detail}


@dataclass
class PropertyReport:
    results: list
    params: dict

    @property
    def all_pass(self):
        return all(r.passed for r in self.results)

    def by_property(self, k):
        return next(r for r in self.results if r.property == k)

    def to_dict(self):
        return {"properties": [r.to_dict() for r in self.results], "params": self.params,
                "all_pass": self.all_pass}


DEFAULT_THRESHOLDS = {2: 1e-4, 3: 1e-3, 4: 1e-4, 5: 10.0, 6: 50.0}


def _ratio(num, den):
    if num == 0.0:
        return 0.0
    return num / den if den > 0 else math.inf


def _far_points(tube, R, factor, n, rng):
    """Points of B(R) whose distance to the tube axis is at least (1 + factor) r."""
    r = tube.radius
    need = (1.0 + factor) * r
    d = np.asarray(tube.direction)
    # points on the critical shell around the axis
    z = rng.uniform(-R, R, 4 * n)
    axis = np.column_stack([tube.axis_point(z), z])
    e1 = np.cross(d, [1.0, 0.0, 0.0] if abs(d[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    ang = rng.uniform(0, 2 * math.pi, 4 * n)
    shell = axis + need * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)
    # and uniform points of the ball
    g = rng.standard_normal((8 * n, 3))
    g /= np.linalg.norm(g, axis=1)[:, None]
    ball = g * (R * np.cbrt(rng.random(8 * n)))[:, None]
    out = []
    for cand in (shell, ball):
        ok = (np.linalg.norm(cand, axis=1) <= R) & (tube.axis_distance(cand) >= need * (1 - 1e-12))
        out.append(cand[ok][: n // 2])
    return np.vstack(out)


def verify_properties(wps, f=None, n_points=1000, n_subcollections=64, n_tubes=12,
                      n_far=64, n_pairs=40, n_omegas=6, thresholds=None, seed=0):
    """Measure the six packet properties and compare with desk-scale thresholds."""
    f = wps.f if f is None else f
    p = wps.params
    R = p.R
    th = dict(DEFAULT_THRESHOLDS)
    th.update(thresholds or {})
    rng = np.random.default_rng(seed)
    fl2 = math.sqrt(max(f.l2_squared(), 0.0))
    fsup = f.sup_norm
    blocks = [wps.block(om) for om in wps.omegas]
    live = [b for b in blocks if b.mass > 0]
    results = []

    # Omegas to probe individually: heaviest first, then a few random ones
    order = sorted(range(len(blocks)), key=lambda k: (-blocks[k].mass, k))
    probe = [blocks[k] for k in order[: max(1, n_omegas // 2)] if blocks[k].mass > 0]
    rest = [b for b in live if b not in probe]
    if rest:
        pick = rng.choice(len(rest), size=min(len(rest), n_omegas - len(probe)), replace=False)
        probe += [rest[k] for k in sorted(pick)]

    # (1) exact frequency support: packets vanish outside the closed 3 Omega square
    worst1, checked = 0.0, 0
    for blk in probe[:3]:
        norms = wps.norms_squared(blk.omega)
        for k in np.argsort(-norms, kind="stable")[:3]:
            t = blk.tubes[int(k)]
            pad = 4 * wps.h
            x1 = np.concatenate([blk.xi1[0] - pad + wps.h * np.arange(4), blk.xi1,
                                 blk.xi1[-1] + wps.h * (1 + np.arange(4))])
            x2 = np.concatenate([blk.xi2[0] - pad + wps.h * np.arange(4), blk.xi2,
                                 blk.xi2[-1] + wps.h * (1 + np.arange(4))])
            vals = wps.packet_density(t, x1, x2)
            X, Y = np.meshgrid(x1, x2, indexing="ij")
            outside = ~blk.omega.in_dilate(X, Y, 3.0)
            worst1 = max(worst1, float(np.max(np.abs(vals[outside]), initial=0.0)))
            checked += 1
    results.append(PropertyResult(1, "frequency support in 3 Omega", worst1, 0.0, worst1 == 0.0,
                                  {"packets_checked": checked}))

    # (2) decay away from the tube
    worst2, npts2 = 0.0, 0
    tubes2 = []
    for blk in probe:
        norms = wps.norms_squared(blk.omega)
        top = [int(k) for k in np.argsort(-norms, kind="stable")[: max(1, n_tubes // len(probe))]]
        tubes2 += [blk.tubes[k] for k in top if norms[k] > 0]
    for t in tubes2[:n_tubes]:
        pts = _far_points(t, R, 4.0, n_far, rng)
        if len(pts) == 0:
            continue
        vals = evaluate_extension(wps.packet(t), pts)
        worst2 = max(worst2, float(np.max(np.abs(vals))))
        npts2 += len(pts)
    m2 = _ratio(worst2, fl2)
    results.append(PropertyResult(2, "decay at distance 4 r from T", m2, th[2], m2 <= th[2],
                                  {"tubes": len(tubes2[:n_tubes]), "points": npts2}))

    # (3) reconstruction of Ef on a ball sample, and of f on the surface
    grid = EvalGrid.random_ball(R, n_points, seed=seed + 1)
    diff = wps.padded_f() - wps.select_sum()
    err = evaluate_extension(diff, grid) if np.any(diff.values) else np.zeros(len(grid))
    m3 = _ratio(float(np.max(np.abs(err))), fl2)
    surf = math.sqrt(float(np.sum(np.abs(diff.values) ** 2 * diff.jac)) * wps.h ** 2)
    results.append(PropertyResult(3, "Ef - sum Ef_T on B(R)", m3, th[3], m3 <= th[3],
                                  {"points": len(grid), "surface_residual": _ratio(surf, fl2)}))

    # (4) near-orthogonality of disjoint packets of one Omega
    worst4, npairs = 0.0, 0
    per = max(1, n_pairs // max(1, len(probe)))
    for blk in probe:
        norms = wps.norms_squared(blk.omega)
        heavy = [int(k) for k in np.argsort(-norms, kind="stable")[:12]]
        bases = np.array([blk.tubes[k].base for k in heavy])
        cand = []
        for a in range(len(heavy)):
            for b in range(a + 1, len(heavy)):
                d = float(np.hypot(*(bases[a] - bases[b])))
                if d > 2 * blk.tubes[heavy[a]].radius * (1 + 1e-9):
                    cand.append((d, heavy[a], heavy[b]))
        cand.sort()
        for d, a, b in cand[:per]:
            ip = abs(wps.inner(blk.tubes[a], blk.tubes[b]))
            worst4 = max(worst4, _ratio(ip, blk.mass))
            npairs += 1
    results.append(PropertyResult(4, "disjoint same-Omega packets", worst4, th[4], worst4 <= th[4],
                                  {"pairs": npairs}))

    # (5) L2 almost-conservation per Omega
    c5 = [(_ratio(float(np.sum(wps.norms_squared(b.omega))), b.mass), b.omega.index) for b in live]
    m5 = max((c for c, _ in c5), default=0.0)
    worst_idx = max(c5)[1] if c5 else None
    results.append(PropertyResult(5, "sum ||f_T||^2 / int_Omega |f|^2", m5, th[5], m5 <= th[5],
                                  {"omegas": len(c5), "worst_omega": list(worst_idx) if worst_idx else None}))

    # (6) sup-norm stability over random subcollections, on a grid of step s/16
    s = p.omega_spacing
    step = s / 16.0
    nk = int(math.ceil((1.0 + 1.5 * s) / step)) + 1
    axis = (np.arange(-nk, nk) + 0.5) * step
    AX, AY = np.meshgrid(axis, axis, indexing="ij")
    Jc = jacobian(AX, AY)
    subs = []
    for blk in live:
        r0 = np.searchsorted(axis, blk.omega.center[0] - 1.5 * s)
        r1 = np.searchsorted(axis, blk.omega.center[0] + 1.5 * s, side="right")
        c0 = np.searchsorted(axis, blk.omega.center[1] - 1.5 * s)
        c1 = np.searchsorted(axis, blk.omega.center[1] + 1.5 * s, side="right")
        subs.append((blk, slice(r0, r1), slice(c0, c1)))
    c6 = 0.0
    for _ in range(n_subcollections):
        total = np.zeros(AX.shape, complex)
        for blk, rs, cs in subs:
            sel = rng.random(len(blk.tubes)) < 0.5
            if sel.any():
                total[rs, cs] += wps.block_sum(blk, sel, axis[rs], axis[cs])
        c6 = max(c6, _ratio(float(np.max(np.abs(total) / Jc)), fsup))
    results.append(PropertyResult(6, "sup of random packet sums / ||f||_inf", c6, th[6], c6 <= th[6],
                                  {"subcollections": n_subcollections, "grid_step": step}))
    return PropertyReport(results, p.to_dict())
