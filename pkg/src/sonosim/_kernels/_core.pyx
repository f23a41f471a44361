# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels; mirrors _fallback.py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, exp, floor

cnp.import_array()


def transmission_and_boundaries(mu, impedance, double boundary_gain):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] mu_a = np.ascontiguousarray(mu, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] imp = np.ascontiguousarray(impedance, dtype=np.float64)
    cdef Py_ssize_t s_count = mu_a.shape[0]
    cdef Py_ssize_t z_count = mu_a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] trans = np.empty((s_count, z_count))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bterm = np.zeros((s_count, z_count))
    cdef Py_ssize_t s, z
    cdef double acc, loss, r, z1, z2
    for s in range(s_count):
        acc = 0.0
        loss = 1.0
        for z in range(z_count):
            acc += mu_a[s, z]
            if z > 0 and imp[s, z] != imp[s, z - 1]:
                z1 = imp[s, z - 1]
                z2 = imp[s, z]
                r = (z2 - z1) * (z2 - z1) / ((z2 + z1) * (z2 + z1))
                bterm[s, z] = boundary_gain * r
                loss *= 1.0 - r
            trans[s, z] = exp(-2.0 * acc) * loss
    return trans, bterm


def sample_polar(img, u, z, bint nearest=False):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] im = np.ascontiguousarray(img, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(np.asarray(u, dtype=np.float64).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zz = np.ascontiguousarray(np.asarray(z, dtype=np.float64).ravel())
    cdef Py_ssize_t s_count = im.shape[0]
    cdef Py_ssize_t z_count = im.shape[1]
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef Py_ssize_t i, u0, u1, z0, zb
    cdef double cu, cz, fu, fz, top, bot
    for i in range(n):
        cu = uu[i]
        cz = zz[i]
        if cu < 0.0:
            cu = 0.0
        elif cu > s_count - 1.0:
            cu = s_count - 1.0
        if cz < 0.0:
            cz = 0.0
        elif cz > z_count - 1.0:
            cz = z_count - 1.0
        if nearest:
            out[i] = im[<Py_ssize_t>floor(cu + 0.5), <Py_ssize_t>floor(cz + 0.5)]
            continue
        u0 = <Py_ssize_t>floor(cu)
        z0 = <Py_ssize_t>floor(cz)
        u1 = u0 + 1 if u0 + 1 < s_count else s_count - 1
        zb = z0 + 1 if z0 + 1 < z_count else z_count - 1
        fu = cu - u0
        fz = cz - z0
        top = im[u0, z0] * (1.0 - fz) + im[u0, zb] * fz
        bot = im[u1, z0] * (1.0 - fz) + im[u1, zb] * fz
        out[i] = top * (1.0 - fu) + bot * fu
    return out.reshape(np.shape(u))


def depth_lateral_blur(img, sigmas):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] im = np.ascontiguousarray(img, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sig = np.ascontiguousarray(np.asarray(sigmas, dtype=np.float64))
    cdef Py_ssize_t s_count = im.shape[0]
    cdef Py_ssize_t z_count = im.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((s_count, z_count))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kernel
    cdef Py_ssize_t z, s, k, radius, idx
    cdef double sigma, acc, wsum, w
    for z in range(z_count):
        sigma = sig[z]
        if sigma <= 0.0:
            for s in range(s_count):
                out[s, z] = im[s, z]
            continue
        radius = <Py_ssize_t>ceil(3.0 * sigma)
        if radius < 1:
            radius = 1
        kernel = np.empty(2 * radius + 1)
        wsum = 0.0
        for k in range(-radius, radius + 1):
            w = exp(-0.5 * (k / sigma) * (k / sigma))
            kernel[k + radius] = w
            wsum += w
        for k in range(2 * radius + 1):
            kernel[k] /= wsum
        for s in range(s_count):
            acc = 0.0
            for k in range(-radius, radius + 1):
                # reflect padding, matching np.pad(mode="reflect")
                idx = s + k
                if idx < 0:
                    idx = -idx
                elif idx >= s_count:
                    idx = 2 * (s_count - 1) - idx
                acc += kernel[k + radius] * im[idx, z]
            out[s, z] = acc
    return out
