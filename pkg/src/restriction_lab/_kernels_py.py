"""Pure-NumPy fallback for the extension-sum kernel.

Same contract as the compiled ``extension_sum``; phases are evaluated directly
instead of by recurrence, so results agree with the compiled kernel to
rounding, not bit-for-bit.
"""
import numpy as np

_CHUNK = 256


def extension_sum(dens, a1, h1, a2, h2, jlo, jhi, points, num_threads=1):
    dens = np.ascontiguousarray(dens, dtype=np.complex128)
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    jlo = np.asarray(jlo, dtype=np.int64)
    jhi = np.asarray(jhi, dtype=np.int64)
    out = np.zeros(points.shape[0], dtype=np.complex128)
    rows = [i for i in range(dens.shape[0]) if jhi[i] > jlo[i]]
    if not rows or points.shape[0] == 0:
        return out
    for start in range(0, points.shape[0], _CHUNK):
        pts = points[start:start + _CHUNK]
        x1, x2, x3 = pts[:, 0:1], pts[:, 1:2], pts[:, 2:3]
        row_sums = np.empty((pts.shape[0], len(rows)), dtype=np.complex128)
        for k, i in enumerate(rows):
            s = a1 + i * h1
            t = a2 + np.arange(jlo[i], jhi[i]) * h2
            phase = x1 * s + (x2 + x3 * s) * t[None, :]
            row_sums[:, k] = np.sum(np.exp(1j * phase) * dens[i, jlo[i]:jhi[i]][None, :], axis=1)
        out[start:start + _CHUNK] = np.sum(row_sums, axis=1)
    return out
