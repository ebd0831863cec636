# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels; mirror of ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0
DRAWS_PER_ROUND = 4


cdef inline uint64_t _raw(uint64_t key, uint64_t c) noexcept nogil:
    cdef uint64_t z = key + (c + 1) * GAMMA
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _unit(uint64_t h) noexcept nogil:
    return <double>(h >> 11) * INV53


def raw64(uint64_t key, counters):
    cdef cnp.ndarray[uint64_t, ndim=1] c = np.ascontiguousarray(counters, dtype=np.uint64).reshape(-1)
    cdef cnp.ndarray[uint64_t, ndim=1] out = np.empty(c.shape[0], dtype=np.uint64)
    cdef Py_ssize_t i
    for i in range(c.shape[0]):
        out[i] = _raw(key, c[i])
    return out


def uniforms(uint64_t key, uint64_t start, Py_ssize_t count):
    cdef cnp.ndarray[double, ndim=1] out = np.empty(count, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(count):
            o[i] = _unit(_raw(key, start + i))
    return out


def play_rounds(uint64_t key, uint64_t start, uint64_t stop, cdf, double keep_threshold):
    cdef double[:, ::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    counts = np.zeros((16, 3), dtype=np.int64)
    cdef int64_t[:, ::1] n = counts
    cdef uint64_t r, h, base
    cdef Py_ssize_t cell, b
    cdef double u
    cdef int64_t kept = 0
    cdef bint lossy = keep_threshold < 1.0
    with nogil:
        for r in range(start, stop):
            base = r * 4
            h = _raw(key, base)
            cell = <Py_ssize_t>((h >> 62) * 4 + ((h >> 60) & 3))
            u = _unit(_raw(key, base + 1))
            b = (u >= c[cell, 0]) + (u >= c[cell, 1])
            if lossy and not (_unit(_raw(key, base + 2)) < keep_threshold):
                continue
            n[cell, b] += 1
            kept += 1
    return counts, kept


def count_below(uint64_t key, uint64_t start, Py_ssize_t count, double p):
    cdef Py_ssize_t i
    cdef int64_t total = 0
    with nogil:
        for i in range(count):
            if _unit(_raw(key, start + i)) < p:
                total += 1
    return total
