# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled term-arithmetic kernels: sparse product and multi-point evaluation.

Drop-in replacement for ``_core_ref``; selected at import time by
``possum.backend`` when the extension built successfully.
"""

import numpy as np

cimport numpy as cnp
from libcpp.unordered_map cimport unordered_map

cnp.import_array()


def mul_terms(cnp.ndarray[cnp.int64_t, ndim=2] exps_a,
              cnp.ndarray[cnp.float64_t, ndim=1] coefs_a,
              cnp.ndarray[cnp.int64_t, ndim=2] exps_b,
              cnp.ndarray[cnp.float64_t, ndim=1] coefs_b):
    cdef Py_ssize_t na = exps_a.shape[0]
    cdef Py_ssize_t nb = exps_b.shape[0]
    cdef Py_ssize_t nv = exps_a.shape[1]
    cdef Py_ssize_t i, j, k, idx

    # mixed-radix packing of the product exponents into one int64 key
    cdef cnp.ndarray[cnp.int64_t, ndim=1] radices = np.empty(nv, dtype=np.int64)
    cdef double bits = 0.0
    cdef long long ma, mb, rad
    for k in range(nv):
        ma = 0
        mb = 0
        for i in range(na):
            if exps_a[i, k] > ma:
                ma = exps_a[i, k]
        for j in range(nb):
            if exps_b[j, k] > mb:
                mb = exps_b[j, k]
        rad = ma + mb + 1
        radices[k] = rad
        bits += np.log2(<double> rad)
    if bits >= 62.0:
        from possum import _core_ref
        return _core_ref.mul_terms(exps_a, coefs_a, exps_b, coefs_b)

    cdef unordered_map[long long, double] acc
    cdef long long key, keya
    for i in range(na):
        keya = 0
        for k in range(nv):
            keya = keya * radices[k] + exps_a[i, k]
        # re-encode b against the shared radices and accumulate
        for j in range(nb):
            key = 0
            for k in range(nv):
                key = key * radices[k] + exps_a[i, k] + exps_b[j, k]
            acc[key] += coefs_a[i] * coefs_b[j]

    cdef Py_ssize_t nout = acc.size()
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out_e = np.empty((nout, nv), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_c = np.empty(nout, dtype=np.float64)
    idx = 0
    cdef long long rest
    for item in acc:
        rest = item.first
        out_c[idx] = item.second
        for k in range(nv - 1, -1, -1):
            out_e[idx, k] = rest % radices[k]
            rest //= radices[k]
        idx += 1
    return out_e, out_c


def eval_terms(cnp.ndarray[cnp.int64_t, ndim=2] exps,
               cnp.ndarray[cnp.float64_t, ndim=1] coefs,
               cnp.ndarray[cnp.float64_t, ndim=2] points):
    cdef Py_ssize_t nt = exps.shape[0]
    cdef Py_ssize_t nv = exps.shape[1]
    cdef Py_ssize_t m = points.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(m, dtype=np.float64)
    cdef Py_ssize_t i, t, k
    cdef double acc, base, powv
    cdef long long e
    for i in range(m):
        acc = 0.0
        for t in range(nt):
            powv = coefs[t]
            for k in range(nv):
                e = exps[t, k]
                base = points[i, k]
                while e > 0:
                    if e & 1:
                        powv *= base
                    base *= base
                    e >>= 1
            acc += powv
        out[i] = acc
    return out
