# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled supermex row scans; same contract as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport calloc, free

cnp.import_array()

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

cdef uint64_t ALL = 0xFFFFFFFFFFFFFFFFULL


cdef inline Py_ssize_t _first_zero(const uint64_t[::1] row, uint64_t* extra,
                                   Py_ssize_t nw) noexcept nogil:
    cdef Py_ssize_t j
    cdef uint64_t m
    for j in range(nw):
        m = row[j] | extra[j]
        if m != ALL:
            return (j << 6) + __builtin_ctzll(~m)
    return nw << 6


def nim_supermex(const uint64_t[:, ::1] words, Py_ssize_t width):
    cdef Py_ssize_t h = words.shape[0], nw = words.shape[1]
    cdef cnp.ndarray[int64_t, ndim=1] out = np.full(h, -1, dtype=np.int64)
    cdef int64_t[::1] zs = out
    cdef uint64_t* cols = <uint64_t*> calloc(nw + 1, sizeof(uint64_t))
    cdef Py_ssize_t y, z, fail = -1
    if cols == NULL:
        raise MemoryError()
    with nogil:
        for y in range(h):
            z = _first_zero(words[y], cols, nw)
            if z >= width:
                fail = y
                break
            zs[y] = z
            cols[z >> 6] |= (<uint64_t> 1) << (z & 63)
    free(cols)
    return out, fail


def chomp_supermex(const uint64_t[:, ::1] words, Py_ssize_t width, Py_ssize_t level):
    cdef Py_ssize_t h = words.shape[0], nw = words.shape[1]
    cdef Py_ssize_t nd = ((h + (nw << 6)) >> 6) + 2
    cdef cnp.ndarray[int64_t, ndim=1] out = np.full(h, -1, dtype=np.int64)
    cdef int64_t[::1] zs = out
    # diag: bit s set <=> anti-diagonal y + z = s holds M2-parents of a P-cell
    cdef uint64_t* diag = <uint64_t*> calloc(nd, sizeof(uint64_t))
    cdef uint64_t* shifted = <uint64_t*> calloc(nw + 1, sizeof(uint64_t))
    cdef Py_ssize_t y, j, q, r, z, s, fail = -1
    if diag == NULL or shifted == NULL:
        free(diag)
        free(shifted)
        raise MemoryError()
    with nogil:
        for y in range(h):
            q = y >> 6
            r = y & 63
            for j in range(nw):
                if q + j + 1 < nd:
                    if r:
                        shifted[j] = (diag[q + j] >> r) | (diag[q + j + 1] << (64 - r))
                    else:
                        shifted[j] = diag[q + j]
                elif q + j < nd:
                    shifted[j] = diag[q + j] >> r
                else:
                    shifted[j] = 0
            if level == 0 and y == 0:
                shifted[0] |= 1
            z = _first_zero(words[y], shifted, nw)
            if z >= width:
                fail = y
                break
            zs[y] = z
            if z == 0:
                break
            s = y + z
            diag[s >> 6] |= (<uint64_t> 1) << (s & 63)
    free(diag)
    free(shifted)
    return out, fail
