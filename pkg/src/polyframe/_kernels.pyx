# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled energy kernels. Same signatures as ``polyframe._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, acos

cnp.import_array()


def bond_energy(const double[:, ::1] x, const long[::1] bi, const long[::1] bj, const double[::1] l0, double k):
    cdef Py_ssize_t n = bi.shape[0], m
    cdef double dx, dy, dz, d, e = 0.0
    for m in range(n):
        dx = x[bi[m], 0] - x[bj[m], 0]
        dy = x[bi[m], 1] - x[bj[m], 1]
        dz = x[bi[m], 2] - x[bj[m], 2]
        d = sqrt(dx * dx + dy * dy + dz * dz) - l0[m]
        e += k * d * d
    return e


def angle_energy(const double[:, ::1] x, const long[::1] ai, const long[::1] aj, const long[::1] ak, const double[::1] theta0, double k):
    cdef Py_ssize_t n = ai.shape[0], m
    cdef double ux, uy, uz, vx, vy, vz, c, th, e = 0.0
    for m in range(n):
        ux = x[ai[m], 0] - x[aj[m], 0]
        uy = x[ai[m], 1] - x[aj[m], 1]
        uz = x[ai[m], 2] - x[aj[m], 2]
        vx = x[ak[m], 0] - x[aj[m], 0]
        vy = x[ak[m], 1] - x[aj[m], 1]
        vz = x[ak[m], 2] - x[aj[m], 2]
        c = (ux * vx + uy * vy + uz * vz) / sqrt((ux * ux + uy * uy + uz * uz) * (vx * vx + vy * vy + vz * vz))
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
        th = acos(c) - theta0[m]
        e += k * th * th
    return e


def lj_energy(const double[:, ::1] x, const long[::1] indptr, const long[::1] indices, double eps, double sigma, int min_sep):
    """Lennard-Jones sum over pairs at least ``min_sep`` bonds apart."""
    cdef Py_ssize_t n = x.shape[0], i, j, a, q, head, tail, depth_end
    cdef long[::1] stamp = np.full(n, -1, dtype=np.int64)
    cdef long[::1] queue = np.empty(n, dtype=np.int64)
    cdef long[::1] depth = np.zeros(n, dtype=np.int64)
    cdef double s2 = sigma * sigma, dx, dy, dz, r2, sr6, e = 0.0
    for i in range(n):
        # Mark atoms within min_sep - 1 bonds of i.
        head = 0
        tail = 1
        queue[0] = i
        depth[i] = 0
        stamp[i] = i
        while head < tail:
            a = queue[head]
            head += 1
            if depth[a] >= min_sep - 1:
                continue
            for q in range(indptr[a], indptr[a + 1]):
                j = indices[q]
                if stamp[j] != i:
                    stamp[j] = i
                    depth[j] = depth[a] + 1
                    queue[tail] = j
                    tail += 1
        for j in range(i + 1, n):
            if stamp[j] == i:
                continue
            dx = x[i, 0] - x[j, 0]
            dy = x[i, 1] - x[j, 1]
            dz = x[i, 2] - x[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            sr6 = s2 / r2
            sr6 = sr6 * sr6 * sr6
            e += 4.0 * eps * (sr6 * sr6 - sr6)
    return e
