"""Gegenbauer (ultraspherical) polynomials for the weight parameter ``n``.

The weight is ``w_n(x) = c_n * (1 - x^2)**((n-2)/2)`` on [-1, 1], with
``c_n`` fixed so the weight integrates to one. Three normalizations are
supported:

* ``orthonormal``  -- unit norm against ``w_n``,
* ``C``            -- orthonormal value at one times the orthonormal
                      polynomial (so the value at one is the square of the
                      orthonormal value there),
* ``sup``          -- scaled to value one at ``x = 1``, which is also the
                      maximum of the absolute value on [-1, 1].

Recurrence coefficients come from the closed-form ultraspherical formulas
(not numerical orthogonalization), keeping roots and values accurate for
degrees well past one hundred. ``n = 1`` (Chebyshev weight of the first
kind) is supported for the weight, recurrence, roots and quadrature only;
the value-at-one normalizations are undefined there and rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from possum.poly import UniPoly

_NORMALIZATIONS = ("orthonormal", "C", "sup")


def recurrence_coeffs(n: int, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Three-term recurrence for the orthonormal family.

    Returns ``(a, b)`` with ``a[k] = 0`` (the weight is even) and ``b[k] > 0``
    for ``1 <= k <= kmax``, satisfying

        x * G_k = b[k+1] * G_{k+1} + a[k] * G_k + b[k] * G_{k-1}.

    ``b[0]`` is a zero placeholder.
    """
    if n < 1:
        raise ValueError("weight parameter n must be >= 1")
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    a = np.zeros(kmax + 1)
    b = np.zeros(kmax + 1)
    if kmax >= 1:
        b[1] = np.sqrt(1.0 / (n + 1))
    k = np.arange(2, kmax + 1, dtype=np.float64)
    b[2:] = np.sqrt(k * (k + n - 2) / ((2 * k + n - 1) * (2 * k + n - 3)))
    return a, b


@lru_cache(maxsize=None)
def _bvec(n: int, kmax: int) -> np.ndarray:
    b = recurrence_coeffs(n, kmax)[1]
    b.flags.writeable = False
    return b


def gegenbauer_at_one(n: int, k: int) -> float:
    """Value at one under the C normalization.

    Computed from ``(1 + 2k/(n-1)) * binom(k+n-2, k)`` through log-gamma to
    avoid overflow. The formula is singular at ``n = 1``, which is rejected.
    """
    if n < 2:
        raise ValueError("gegenbauer_at_one requires n >= 2")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0
    logbinom = gammaln(k + n - 1) - gammaln(k + 1) - gammaln(n - 1)
    return float((1.0 + 2.0 * k / (n - 1)) * np.exp(logbinom))


def eval_orthonormal_table(n: int, kmax: int, x) -> np.ndarray:
    """Orthonormal values for all degrees up to ``kmax``.

    Returns an array of shape ``(kmax+1, len(x))`` filled by the forward
    recurrence, which is stable on [-1, 1].
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    b = _bvec(n, kmax + 1)
    table = np.empty((kmax + 1, x.size))
    table[0] = 1.0
    if kmax >= 1:
        table[1] = x / b[1]
    for k in range(1, kmax):
        table[k + 1] = (x * table[k] - b[k] * table[k - 1]) / b[k + 1]
    return table


def eval_orthonormal_series(n: int, coeffs: np.ndarray, x) -> np.ndarray:
    """Evaluate ``sum_k coeffs[k] * G_k(x)`` (orthonormal basis) stably.

    This is the evaluation path for high-degree polynomials produced by the
    density solver; expanding them into the monomial basis loses roughly one
    digit per three degrees near the endpoints.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    coeffs = np.asarray(coeffs, dtype=np.float64)
    kmax = len(coeffs) - 1
    b = _bvec(n, kmax + 1)
    prev = np.ones_like(x)
    out = coeffs[0] * prev
    if kmax == 0:
        return out
    cur = x / b[1]
    out = out + coeffs[1] * cur
    for k in range(1, kmax):
        prev, cur = cur, (x * cur - b[k] * prev) / b[k + 1]
        out = out + coeffs[k + 1] * cur
    return out


@dataclass(frozen=True)
class GegenbauerFamily:
    """One Gegenbauer family under a fixed normalization."""

    n: int
    normalization: str = "orthonormal"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("weight parameter n must be >= 1")
        if self.normalization not in _NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def eval(self, k: int, x):
        """Value of the degree-``k`` member at ``x`` (scalar or array)."""
        table = self.eval_all(k, x)[k]
        return float(table[0]) if np.isscalar(x) else table

    def eval_all(self, kmax: int, x) -> np.ndarray:
        """Values of all members up to degree ``kmax``; shape (kmax+1, m)."""
        table = eval_orthonormal_table(self.n, kmax, x)
        if self.normalization == "orthonormal":
            return table
        at_one = np.sqrt(
            [gegenbauer_at_one(self.n, k) for k in range(kmax + 1)]
        )
        if self.normalization == "C":
            return table * at_one[:, None]
        return table / at_one[:, None]


def roots(n: int, k: int) -> np.ndarray:
    """The ``k`` roots of the degree-``k`` member, ascending.

    Eigenvalues of the symmetric tridiagonal Jacobi matrix built from the
    recurrence; all lie in (-1, 1) and are symmetric about zero.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    b = _bvec(n, k)
    if k == 1:
        return np.zeros(1)
    return np.sort(eigh_tridiagonal(np.zeros(k), b[1:k], eigvals_only=True))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for ``w_n``: nodes in (-1,1), positive weights, sum one."""

    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def integrate(self, values) -> float:
        """Integral of a function given its values at the nodes."""
        return float(np.dot(self.weights, values))


def gauss_quadrature(n: int, m: int) -> QuadratureRule:
    """The ``m``-node Gauss rule for ``w_n`` (exact through degree 2m-1).

    Weights are the squared first components of the Jacobi-matrix
    eigenvectors, rescaled to sum one since the weight is a probability
    density.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    b = _bvec(n, m)
    if m == 1:
        return QuadratureRule(np.zeros(1), np.ones(1), 1)
    vals, vecs = eigh_tridiagonal(np.zeros(m), b[1:m])
    weights = vecs[0] ** 2
    weights = weights / weights.sum()
    order = np.argsort(vals)
    return QuadratureRule(vals[order], weights[order], 2 * m - 1)


def expand(q: UniPoly, n: int) -> np.ndarray:
    """Expansion coefficients of ``q`` against the C-normalized family.

    ``lambda[k]`` is the integral of the sup-normalized member times ``q``
    against ``w_n``; the Gauss rule used is exact past twice the degree of
    ``q``, so the reconstruction ``sum_k lambda[k] C_k`` matches ``q``.
    """
    d = q.degree
    rule = gauss_quadrature(n, d + 1)
    qvals = q(rule.nodes)
    sup_table = GegenbauerFamily(n, "sup").eval_all(d, rule.nodes)
    return sup_table @ (rule.weights * qvals)


def expand_values(n: int, d: int, values_rule: tuple) -> np.ndarray:
    """Like :func:`expand` but from precomputed node values.

    ``values_rule`` is ``(qvals, rule)`` with the rule exact to at least
    ``d + deg(q)``; used when ``q`` is only available through stable
    evaluation rather than monomial coefficients.
    """
    qvals, rule = values_rule
    sup_table = GegenbauerFamily(n, "sup").eval_all(d, rule.nodes)
    return sup_table @ (rule.weights * qvals)


@lru_cache(maxsize=None)
def coefficient_table(n: int, kmax: int) -> np.ndarray:
    """Monomial coefficients of the orthonormal members up to ``kmax``.

    Row ``k`` holds the ascending coefficients of the degree-``k`` member.
    Entries grow like 2**k; the table is exact as a linear map but monomial
    evaluation of high-degree rows is ill-conditioned near the endpoints
    (use :func:`eval_orthonormal_series` for values).
    """
    b = _bvec(n, kmax + 1)
    table = np.zeros((kmax + 1, kmax + 1))
    table[0, 0] = 1.0
    if kmax >= 1:
        table[1, 1] = 1.0 / b[1]
    for k in range(1, kmax):
        table[k + 1, 1:] = table[k, :-1]
        table[k + 1] -= b[k] * table[k - 1]
        table[k + 1] /= b[k + 1]
    table.flags.writeable = False
    return table


def series_to_unipoly(n: int, coeffs: np.ndarray) -> UniPoly:
    """Monomial form of an orthonormal-basis series (see conditioning note)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    table = coefficient_table(n, len(coeffs) - 1)
    return UniPoly(coeffs @ table)
