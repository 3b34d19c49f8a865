"""Sampled densities on tensor grids in the (xi1, xi2) parameter plane."""
import json
import math
import os

import numpy as np

from .errors import InvalidParameterError


def jacobian(s, t):
    """Surface-measure factor sqrt(1 + xi1^2 + xi2^2)."""
    return np.sqrt(1.0 + s * s + t * t)


def disk_grid(h, pad=0.0):
    """Midpoint grid over [-1 - pad, 1 + pad] with spacing at most ``h``.

    Returns ``(a, h, n)``: first node, actual spacing, node count per axis.
    The node count over [-1, 1] alone is ``ceil(2/h)``.
    """
    if not h > 0:
        raise InvalidParameterError("grid spacing must be positive")
    n = int(math.ceil(2.0 / h - 1e-9))
    h = 2.0 / n
    extra = int(math.ceil(pad / h - 1e-9)) if pad > 0 else 0
    a = -1.0 + 0.5 * h - extra * h
    return a, h, n + 2 * extra


class SurfaceFunction:
    """Complex samples of f on a midpoint grid, with mask and Jacobian.

    Node (i, j) sits at ``(a1 + i*h1, a2 + j*h2)``. Only masked nodes carry
    mass; the quadrature weight of a node is ``h1*h2``. The extension density
    is ``f * J * h1 * h2`` where ``J`` is stored per node, so that rescaled
    copies keep the Jacobian of their preimage.
    """

    def __init__(self, values, a1, a2, h1, h2, mask=None, jac=None, clip="disk"):
        values = np.array(values, dtype=np.complex128)
        if values.ndim != 2:
            raise InvalidParameterError("values must be a 2-D array")
        self.a1, self.a2 = float(a1), float(a2)
        self.h1, self.h2 = float(h1), float(h2)
        if not (self.h1 > 0 and self.h2 > 0):
            raise InvalidParameterError("grid spacing must be positive")
        self.values = values
        s, t = self.axes()
        S, T = np.meshgrid(s, t, indexing="ij")
        if mask is None:
            mask = S * S + T * T <= 1.0 if clip == "disk" else np.ones(values.shape, bool)
        self.mask = np.ascontiguousarray(mask, dtype=bool)
        if self.mask.shape != values.shape:
            raise InvalidParameterError("mask shape does not match values")
        self.jac = jacobian(S, T) if jac is None else np.array(jac, dtype=np.float64)
        values[~self.mask] = 0.0
        self.clip = clip
        self._sup = None

    # -- construction ------------------------------------------------------
    @classmethod
    def from_callable(cls, func, h, pad=0.0, clip="disk", box=None):
        """Sample ``func(xi1, xi2)`` on the disk grid of spacing at most ``h``.

        ``box = (lo1, hi1, lo2, hi2)`` keeps only the nodes of that window;
        they stay aligned with the full grid.
        """
        a, h, n = disk_grid(h, pad)
        s = a + h * np.arange(n)
        s1 = s2 = s
        a1 = a2 = a
        if box is not None:
            i0, i1 = np.searchsorted(s, box[0], "left"), np.searchsorted(s, box[1], "right")
            j0, j1 = np.searchsorted(s, box[2], "left"), np.searchsorted(s, box[3], "right")
            i1, j1 = max(i1, i0 + 1), max(j1, j0 + 1)
            s1, s2 = s[i0:i1], s[j0:j1]
            a1, a2 = a + i0 * h, a + j0 * h
        S, T = np.meshgrid(s1, s2, indexing="ij")
        vals = np.broadcast_to(np.asarray(func(S, T), dtype=np.complex128), S.shape)
        return cls(vals, a1, a2, h, h, clip=clip)

    @classmethod
    def zeros(cls, h, pad=0.0):
        a, h, n = disk_grid(h, pad)
        return cls(np.zeros((n, n), complex), a, a, h, h)

    def like(self, values, mask=None):
        """Same grid and Jacobian, new values."""
        return SurfaceFunction(values, self.a1, self.a2, self.h1, self.h2,
                               self.mask if mask is None else mask, self.jac, self.clip)

    # -- grid queries ------------------------------------------------------
    @property
    def shape(self):
        return self.values.shape

    def axes(self):
        n1, n2 = self.values.shape
        return self.a1 + self.h1 * np.arange(n1), self.a2 + self.h2 * np.arange(n2)

    def nodes(self):
        s, t = self.axes()
        return np.meshgrid(s, t, indexing="ij")

    @property
    def weights(self):
        return np.where(self.mask, self.h1 * self.h2, 0.0)

    @property
    def h(self):
        return max(self.h1, self.h2)

    @property
    def radius(self):
        """Largest |xi| over masked nodes (at least 1)."""
        if not self.mask.any():
            return 1.0
        S, T = self.nodes()
        return max(1.0, float(np.sqrt(np.max((S * S + T * T)[self.mask]))))

    @property
    def r_max(self):
        """Largest |x| at which the grid resolves the phase (16 nodes per period)."""
        return 1.0 / (8.0 * self.h * self.radius)

    @property
    def sup_norm(self):
        if self._sup is None:
            self._sup = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        return self._sup

    def density(self):
        """Per-node extension density f * J * weight (zero off the mask)."""
        return np.where(self.mask, self.values * self.jac * (self.h1 * self.h2), 0.0)

    def row_ranges(self, dens=None):
        """Per-row half-open column range covering the nonzero density."""
        nz = self.mask if dens is None else dens != 0
        any_row = nz.any(axis=1)
        first = np.argmax(nz, axis=1)
        last = nz.shape[1] - np.argmax(nz[:, ::-1], axis=1)
        jlo = np.where(any_row, first, 0).astype(np.int64)
        jhi = np.where(any_row, last, 0).astype(np.int64)
        return jlo, jhi

    def l2_squared(self, region=None):
        """Sum of |f|^2 J w over masked nodes, optionally within ``region``."""
        m = self.mask
        if region is not None:
            S, T = self.nodes()
            m = m & region(S, T)
        return float(np.sum((np.abs(self.values) ** 2 * self.jac)[m]) * self.h1 * self.h2)

    def restrict(self, region):
        """Copy cropped to the bounding box of ``mask & region(xi1, xi2)``."""
        S, T = self.nodes()
        m = self.mask & np.asarray(region(S, T), dtype=bool)
        rows = np.nonzero(m.any(axis=1))[0]
        cols = np.nonzero(m.any(axis=0))[0]
        if rows.size == 0:
            return SurfaceFunction(np.zeros((1, 1)), self.a1, self.a2, self.h1, self.h2,
                                   np.zeros((1, 1), bool), self.jac[:1, :1], "region")
        r0, r1, c0, c1 = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
        return SurfaceFunction(self.values[r0:r1, c0:c1], self.a1 + r0 * self.h1,
                               self.a2 + c0 * self.h2, self.h1, self.h2,
                               m[r0:r1, c0:c1], self.jac[r0:r1, c0:c1], "region")

    def __add__(self, other):
        self._check_same_grid(other)
        return self.like(self.values + other.values, self.mask | other.mask)

    def __sub__(self, other):
        self._check_same_grid(other)
        return self.like(self.values - other.values, self.mask | other.mask)

    def scaled(self, c):
        return self.like(self.values * c)

    def _check_same_grid(self, other):
        if (self.shape != other.shape or self.a1 != other.a1 or self.a2 != other.a2
                or self.h1 != other.h1 or self.h2 != other.h2):
            raise InvalidParameterError("surface functions live on different grids")

    # -- binary I/O --------------------------------------------------------
    def header(self):
        jlo, jhi = self.row_ranges()
        return {"h": self.h, "h1": self.h1, "h2": self.h2, "a1": self.a1, "a2": self.a2,
                "n1": self.shape[0], "n2": self.shape[1], "clip": self.clip,
                "rows": [[int(a), int(b)] for a, b in zip(jlo, jhi)],
                "R_max": self.r_max}

    def save(self, path):
        """Write ``path`` (little-endian interleaved float64) and ``path.json``."""
        jlo, jhi = self.row_ranges()
        cols = np.arange(self.shape[1])
        rebuilt = (cols[None, :] >= jlo[:, None]) & (cols[None, :] < jhi[:, None])
        if not np.array_equal(rebuilt, self.mask):
            raise InvalidParameterError("only row-convex masks can be exported")
        S, T = self.nodes()
        if not np.array_equal(self.jac, jacobian(S, T)):
            raise InvalidParameterError("rescaled Jacobians cannot be exported")
        inter = np.empty(self.values.size * 2, dtype="<f8")
        inter[0::2] = self.values.real.ravel()
        inter[1::2] = self.values.imag.ravel()
        path = os.fspath(path)
        with open(path, "wb") as fh:
            fh.write(inter.tobytes())
        from .jsonio import dumps
        with open(path + ".json", "w", newline="\n") as fh:
            fh.write(dumps(self.header()))

    @classmethod
    def load(cls, path):
        path = os.fspath(path)
        with open(path + ".json") as fh:
            hdr = json.load(fh)
        n1, n2 = int(hdr["n1"]), int(hdr["n2"])
        raw = np.fromfile(path, dtype="<f8")
        if raw.size != 2 * n1 * n2:
            raise InvalidParameterError("binary size does not match header")
        vals = (raw[0::2] + 1j * raw[1::2]).reshape(n1, n2)
        cols = np.arange(n2)
        rows = np.asarray(hdr["rows"], dtype=np.int64).reshape(n1, 2)
        mask = (cols[None, :] >= rows[:, :1]) & (cols[None, :] < rows[:, 1:])
        return cls(vals, hdr["a1"], hdr["a2"], hdr["h1"], hdr["h2"], mask,
                   clip=hdr.get("clip", "disk"))
