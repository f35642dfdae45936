"""Selection of the univariate square shaping the perturbed kernel.

The kernel eigenvalues come from a univariate density ``q = p**2`` of degree
2r that concentrates mass at ``x = 1``. Among all such sums of squares with
unit integral against ``w_n``, we take the exact minimizer of the linearized
eigenvalue gap

    integral of (d - sum_{k<=d} sup-normalized member) * q * w_n,

which in orthonormal Gegenbauer coordinates is a plain symmetric eigenvalue
problem: the constraint Gram matrix is the identity, so the optimal ``q`` is
the squared eigenvector of the smallest eigenvalue. The objective value
equals ``sum_{k=1..d} (1 - lambda_k)`` and obeys the ``(n+1)^2 d^2 / r^2``
decay used by the certificate bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from possum import gegenbauer
from possum.errors import LambdaTooSmall
from possum.poly import UniPoly


@dataclass(frozen=True)
class DensitySolution:
    """Optimal single-square density for parameters (n, d, r).

    ``p_ortho`` holds the orthonormal-basis coefficients of the square root
    (the numerically reliable representation); ``p`` is its monomial form,
    which is exact as data but ill-conditioned to evaluate at high degree.
    ``lam`` are the expansion coefficients of ``q = p**2`` against the
    C-normalized family, with ``lam[0] = 1``.
    """

    n: int
    d: int
    r: int
    p: UniPoly
    p_ortho: np.ndarray
    lam: np.ndarray
    objective: float


@dataclass(frozen=True)
class Lemma43Report:
    """Measured eigenvalue gaps of a density solution."""

    sum_inv_gap: float
    sum_gap: float
    ok: bool


def linearized_objective(n: int, d: int) -> UniPoly:
    """The nonnegative weight polynomial with a root at one.

    ``h = d - sum_{k=1..d} (sup-normalized degree-k member)``; each summand
    is at most one on [-1, 1] with equality only at one, so ``h >= 0`` there
    and ``h(1) = 0``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if d < 1:
        raise ValueError("d must be >= 1")
    table = gegenbauer.coefficient_table(n, d)
    coeffs = np.zeros(d + 1)
    coeffs[0] = d
    for k in range(1, d + 1):
        scale = np.sqrt(gegenbauer.gegenbauer_at_one(n, k))
        coeffs[: k + 1] -= table[k, : k + 1] / scale
    return UniPoly(coeffs)


def solve_density(n: int, d: int, r: int) -> DensitySolution:
    """Minimize the linearized gap over unit-mass squares of degree 2r.

    Builds the (r+1) x (r+1) matrix of the objective against the orthonormal
    basis by Gauss quadrature exact past degree 2r + d and returns the
    eigenvector of its smallest eigenvalue. The sign is fixed by making the
    first nonzero orthonormal coefficient positive.
    """
    if r < d:
        raise ValueError("need r >= d")
    h = linearized_objective(n, d)
    m = r + (d + 1) // 2 + 1  # exact degree 2m-1 >= 2r + d
    rule = gegenbauer.gauss_quadrature(n, m)
    hvals = h(rule.nodes)
    table = gegenbauer.eval_orthonormal_table(n, r, rule.nodes)
    mat = (table * (rule.weights * hvals)) @ table.T
    mat = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(mat)
    v = vecs[:, 0]
    nz = np.nonzero(np.abs(v) > 1e-14)[0]
    if nz.size and v[nz[0]] < 0:
        v = -v
    v = v / np.linalg.norm(v)

    # lambda_k for k <= 2r needs exactness 4r; q is evaluated through the
    # recurrence, never through monomial coefficients
    lam_rule = gegenbauer.gauss_quadrature(n, 2 * r + 1)
    qvals = gegenbauer.eval_orthonormal_series(n, v, lam_rule.nodes) ** 2
    lam = gegenbauer.expand_values(n, 2 * r, (qvals, lam_rule))
    return DensitySolution(
        n=n,
        d=d,
        r=r,
        p=gegenbauer.series_to_unipoly(n, v),
        p_ortho=v,
        lam=lam,
        objective=float(vals[0]),
    )


def check_lemma43(sol: DensitySolution, d: int) -> Lemma43Report:
    """Measured gap sums of a solution, with the provable-regime flags.

    Raises :class:`LambdaTooSmall` when some ``lam[k] < 1/2`` for
    ``k <= d``, since the inverse-gap analysis assumes eigenvalues at least
    one half; increasing ``r`` restores the hypothesis. The ``ok`` flag
    additionally checks the doubling inequality between the two sums and,
    for ``r >= d``, the closed-form decay bound.
    """
    lam = sol.lam[1 : d + 1]
    if lam.size < d:
        raise ValueError(f"solution carries only {lam.size} eigenvalue gaps")
    if (lam < 0.5).any():
        bad = int(np.argmax(lam < 0.5)) + 1
        raise LambdaTooSmall(
            f"lambda_{bad} = {lam[bad - 1]:.6f} < 1/2 for (n={sol.n}, "
            f"d={d}, r={sol.r}); increase r"
        )
    sum_gap = float(np.sum(1.0 - lam))
    sum_inv_gap = float(np.sum(np.abs(1.0 - 1.0 / lam)))
    ok = sum_inv_gap <= 2.0 * sum_gap + 1e-10
    if sol.r >= d:
        bound = (sol.n + 1) ** 2 * d**2 / sol.r**2
        ok = ok and sum_gap <= bound + 1e-12
    return Lemma43Report(sum_inv_gap=sum_inv_gap, sum_gap=sum_gap, ok=ok)
