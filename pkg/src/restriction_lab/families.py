"""Test densities used by the experiments."""
import math

import numpy as np

from .errors import InvalidParameterError
from .extension import FunctionFamily
from .geometry import cap_index, omega_index
from .surface import SurfaceFunction


def constant(value=1.0):
    return FunctionFamily(lambda s, t: np.full(np.shape(s), complex(value)), "constant")


def single_cap(cap, value=1.0):
    """Sharp indicator of one coarse cap."""
    def func(s, t):
        return np.where(cap.contains(s, t), complex(value), 0.0)
    return FunctionFamily(func, "single_cap")


def caps_indicator(caps, phases=None):
    """Sum of sharp cap indicators with optional unimodular phases."""
    phases = [1.0] * len(caps) if phases is None else phases

    def func(s, t):
        out = np.zeros(np.shape(s), complex)
        for cap, ph in zip(caps, phases):
            out = np.where(cap.contains(s, t), ph, out)
        return out
    return FunctionFamily(func, "caps")


def single_omega(omega, mollify=0.25):
    """Indicator of one fine cap, smoothed over ``mollify`` of its side.

    The profile stays inside the cap: it is a tensor product of smooth
    ramps that reach one at distance ``mollify * s`` from the cap edge.
    """
    from .wavepacket import smooth_step
    s = omega.spacing
    w = mollify * s

    def func(s1, s2):
        u1 = 0.5 * s - np.abs(np.asarray(s1) - omega.center[0])
        u2 = 0.5 * s - np.abs(np.asarray(s2) - omega.center[1])
        return (smooth_step(u1 / w) * smooth_step(u2 / w)).astype(complex)
    return FunctionFamily(func, "single_omega")


def random_smooth(seed, degree=4, decay=1.5, reference_n=1025):
    """Random trigonometric polynomial with sup norm just below one.

    Coefficients of exp(i pi (k1 xi1 + k2 xi2) / 2), |k_i| <= degree, are
    complex Gaussians damped by exp(-|k|^2 / (2 decay^2)). The sup over a
    fine reference grid is scaled to 0.99.
    """
    if seed is None:
        raise InvalidParameterError("random families need a seed")
    rng = np.random.default_rng(seed)
    k = np.arange(-degree, degree + 1)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    amp = np.exp(-(K1 ** 2 + K2 ** 2) / (2.0 * decay ** 2))
    coef = amp * (rng.standard_normal(K1.shape) + 1j * rng.standard_normal(K1.shape))
    freq = 0.5 * math.pi * k

    def raw(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        fs, ft = s.ravel(), t.ravel()
        out = np.empty(fs.shape, complex)
        step = 1 << 16
        for lo in range(0, len(fs), step):
            e1 = np.exp(1j * np.multiply.outer(fs[lo:lo + step], freq))
            e2 = np.exp(1j * np.multiply.outer(ft[lo:lo + step], freq))
            out[lo:lo + step] = np.einsum("na,ab,nb->n", e1, coef, e2)
        return out.reshape(s.shape)

    g = np.linspace(-1.0, 1.0, reference_n)
    G1, G2 = np.meshgrid(g, g, indexing="ij")
    inside = G1 ** 2 + G2 ** 2 <= 1.0
    sup = float(np.max(np.abs(raw(G1[inside], G2[inside]))))
    scale = 0.99 / sup

    def func(s, t):
        return scale * raw(s, t)
    fam = FunctionFamily(func, f"random_smooth[{seed}]")
    fam.coefficients = coef * scale
    return fam


def from_file(path):
    """A stored SurfaceFunction; it can only be used at its own spacing."""
    f = SurfaceFunction.load(path)

    class _Stored(FunctionFamily):
        def sample(self, h, pad=0.0, box=None):
            if h < f.h * (1 - 1e-12):
                raise InvalidParameterError(
                    f"stored function has spacing {f.h}, finer spacing {h} requested")
            return f

    return _Stored(None, f"file:{path}")


def make_family(spec):
    """Build a family from a config dict ``{"kind": ..., ...}``."""
    from .geometry import make_cap, OmegaCap
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return constant(spec.get("value", 1.0))
    if kind == "zero":
        fam = constant(0.0)
        fam.name = "zero"
        return fam
    if kind in ("single_cap", "single-cap"):
        K = int(spec["K"])
        i, j = spec.get("index", cap_index(*spec.get("point", (0.0, 0.0)), K))
        return single_cap(make_cap(int(i), int(j), K), spec.get("value", 1.0))
    if kind in ("random_smooth", "random-smooth"):
        if "seed" not in spec:
            raise InvalidParameterError("random_smooth requires a seed")
        return random_smooth(int(spec["seed"]), int(spec.get("degree", 4)),
                             float(spec.get("decay", 1.5)))
    if kind in ("single_omega", "single-omega"):
        s = float(spec["R"]) ** -0.5
        k = spec.get("index")
        if k is None:
            k = [int(v) for v in omega_index(*spec.get("point", (0.0, 0.0)), s)]
        om = OmegaCap((k[0] * s, k[1] * s), s / 2, tuple(k), s)
        return single_omega(om, spec.get("mollify", 0.25))
    if kind == "file":
        return from_file(spec["path"])
    raise InvalidParameterError(f"unknown function family {kind!r}")
