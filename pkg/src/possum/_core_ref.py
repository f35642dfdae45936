"""NumPy reference implementation of the term-arithmetic kernels.

Same contract as the compiled module ``_core_fast``: exponents are int64
arrays of shape (nterms, nvars), coefficients float64 of shape (nterms,).
Outputs carry no duplicate exponent rows but may contain zero coefficients;
pruning is the caller's job.
"""

import numpy as np


def _pack_keys(exps, radices):
    # mixed-radix encoding of exponent rows into a single int64 per row
    keys = np.zeros(exps.shape[0], dtype=np.int64)
    for j in range(exps.shape[1]):
        keys = keys * radices[j] + exps[:, j]
    return keys


def _unpack_keys(keys, radices):
    nv = len(radices)
    exps = np.empty((keys.shape[0], nv), dtype=np.int64)
    rest = keys.copy()
    for j in range(nv - 1, -1, -1):
        exps[:, j] = rest % radices[j]
        rest //= radices[j]
    return exps


def combine_terms(exps, coefs):
    """Sum coefficients of duplicate exponent rows."""
    if exps.shape[0] <= 1:
        return exps, coefs
    radices = exps.max(axis=0).astype(np.int64) + 1
    if np.log2(radices.astype(float)).sum() < 62.0:
        keys = _pack_keys(exps, radices)
        uniq, inverse = np.unique(keys, return_inverse=True)
        out_c = np.bincount(inverse, weights=coefs, minlength=uniq.shape[0])
        return _unpack_keys(uniq, radices), out_c
    uniq, inverse = np.unique(exps, axis=0, return_inverse=True)
    out_c = np.bincount(inverse.ravel(), weights=coefs, minlength=uniq.shape[0])
    return uniq, out_c


def mul_terms(exps_a, coefs_a, exps_b, coefs_b):
    """Product of two term lists, duplicates combined."""
    na, nv = exps_a.shape
    nb = exps_b.shape[0]
    exps = (exps_a[:, None, :] + exps_b[None, :, :]).reshape(na * nb, nv)
    coefs = (coefs_a[:, None] * coefs_b[None, :]).ravel()
    return combine_terms(exps, coefs)


def eval_terms(exps, coefs, points):
    """Evaluate a term list at many points; points has shape (m, nvars)."""
    m = points.shape[0]
    out = np.zeros(m)
    for t in range(exps.shape[0]):
        mono = np.full(m, coefs[t])
        for j in range(exps.shape[1]):
            e = exps[t, j]
            if e == 1:
                mono *= points[:, j]
            elif e > 1:
                mono *= points[:, j] ** e
        out += mono
    return out
