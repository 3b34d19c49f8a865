# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled extension-sum kernel.

Computes, for every evaluation point x,

    sum_i sum_{jlo[i] <= j < jhi[i]} dens[i, j] * exp(i (x1 s_i + x2 t_j + x3 s_i t_j))

with s_i = a1 + i*h1 and t_j = a2 + j*h2. Each point is reduced independently:
rows are cut into blocks of BLOCK nodes, the phase inside a block is advanced
by a unit-modulus recurrence seeded with an exact sin/cos at the block start,
and block sums are merged by a fixed binary cascade. The result therefore does
not depend on how points are spread over threads.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sin, cos

cnp.import_array()

DEF BLOCK = 32
DEF MAXLEVEL = 64
DEF GROUP = 8


cdef inline void _cascade_push(double* sre, double* sim, int* lvl, int* top,
                               double re, double im) noexcept nogil:
    cdef int level = 0
    while top[0] > 0 and lvl[top[0] - 1] == level:
        top[0] -= 1
        re = sre[top[0]] + re
        im = sim[top[0]] + im
        level += 1
    sre[top[0]] = re
    sim[top[0]] = im
    lvl[top[0]] = level
    top[0] += 1


cdef void _point_group(const double complex[:, ::1] dens,
                       double a1, double h1, double a2, double h2,
                       const long[::1] jlo, const long[::1] jhi,
                       const double[:, ::1] points, Py_ssize_t p0, int npg,
                       double[:, ::1] buf) noexcept nogil:
    # GROUP points share each density load; their recurrences are independent
    # chains, which keeps the floating-point pipeline busy.
    cdef double sre[GROUP][MAXLEVEL]
    cdef double sim[GROUP][MAXLEVEL]
    cdef int lvl[GROUP][MAXLEVEL]
    cdef int top[GROUP]
    cdef double zr[GROUP]
    cdef double zi[GROUP]
    cdef double cr[GROUP]
    cdef double ci[GROUP]
    cdef double br[GROUP]
    cdef double bi[GROUP]
    cdef double th[GROUP]
    cdef Py_ssize_t n1 = dens.shape[0]
    cdef Py_ssize_t i, j, jb, je
    cdef int g
    cdef double s, base, tr, dr, di, rr, ii
    for g in range(GROUP):
        top[g] = 0
    for i in range(n1):
        if jhi[i] <= jlo[i]:
            continue
        s = a1 + i * h1
        for g in range(npg):
            th[g] = points[p0 + g, 1] + points[p0 + g, 2] * s
            zr[g] = cos(th[g] * h2)
            zi[g] = sin(th[g] * h2)
        jb = jlo[i]
        while jb < jhi[i]:
            je = jb + BLOCK
            if je > jhi[i]:
                je = jhi[i]
            for g in range(npg):
                base = points[p0 + g, 0] * s + th[g] * (a2 + jb * h2)
                cr[g] = cos(base)
                ci[g] = sin(base)
                br[g] = 0.0
                bi[g] = 0.0
            for j in range(jb, je):
                dr = dens[i, j].real
                di = dens[i, j].imag
                for g in range(npg):
                    br[g] = br[g] + (dr * cr[g] - di * ci[g])
                    bi[g] = bi[g] + (dr * ci[g] + di * cr[g])
                    tr = cr[g] * zr[g] - ci[g] * zi[g]
                    ci[g] = cr[g] * zi[g] + ci[g] * zr[g]
                    cr[g] = tr
            for g in range(npg):
                _cascade_push(sre[g], sim[g], lvl[g], &top[g], br[g], bi[g])
            jb = je
    for g in range(npg):
        rr = 0.0
        ii = 0.0
        while top[g] > 0:
            top[g] -= 1
            rr = sre[g][top[g]] + rr
            ii = sim[g][top[g]] + ii
        buf[p0 + g, 0] = rr
        buf[p0 + g, 1] = ii


def extension_sum(const double complex[:, ::1] dens,
                  double a1, double h1, double a2, double h2,
                  const long[::1] jlo, const long[::1] jhi,
                  const double[:, ::1] points, int num_threads=1):
    cdef Py_ssize_t npts = points.shape[0]
    cdef Py_ssize_t q, ngroups
    cdef int npg
    out = np.zeros(npts, dtype=np.complex128)
    cdef double[:, ::1] buf = np.zeros((npts, 2), dtype=np.float64)
    if npts == 0:
        return out
    if num_threads < 1:
        num_threads = 1
    ngroups = (npts + GROUP - 1) // GROUP
    for q in prange(ngroups, nogil=True, schedule="static", num_threads=num_threads):
        npg = GROUP
        if (q + 1) * GROUP > npts:
            npg = <int>(npts - q * GROUP)
        _point_group(dens, a1, h1, a2, h2, jlo, jhi, points, q * GROUP, npg, buf)
    arr = np.asarray(buf)
    out.real = arr[:, 0]
    out.imag = arr[:, 1]
    return out
