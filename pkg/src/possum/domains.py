"""Reference measures on the unit ball, standard simplex and unit sphere.

The three domains carry the probability measures under which the
Christoffel-Darboux kernels admit closed forms:

* ball    -- density proportional to ``(1 - |x|^2)**(-1/2)``,
* simplex -- Dirichlet(1/2, ..., 1/2) density
             ``prod x_i**(-1/2) * (1 - sum x_i)**(-1/2)``,
* sphere  -- uniform (rotation-invariant) surface measure.

Moments are closed-form gamma ratios. Positive cubature is built
constructively by lifting product rules on a sphere: the ball measure is the
pushforward of the uniform measure on the sphere one dimension up under
coordinate projection, and the simplex measure is its pushforward under
coordinatewise squaring (which doubles the required exactness degree).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import ndtri

from possum import gegenbauer
from possum.errors import ConditioningFailure, DimensionMismatch, DomainError
from possum.poly import MultiPoly

CHOLESKY_PIVOT_TOL = 1e-10
MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class DomainMeasure:
    """A supported domain with its reference probability measure."""

    kind: str  # "ball" | "simplex" | "sphere"
    n: int  # ambient dimension (sphere lives in R^n)

    def __post_init__(self):
        if self.kind not in ("ball", "simplex", "sphere"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("dimension must be >= 1")

    def __str__(self):
        return f"{self.kind}({self.n})"

    @property
    def weight_param(self) -> int:
        """Gegenbauer weight parameter tied to this domain's kernel."""
        return self.n - 1 if self.kind == "sphere" else self.n

    # -- membership ----------------------------------------------------

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            return False
        if self.kind == "ball":
            return float(x @ x) <= 1.0 + tol
        if self.kind == "simplex":
            return bool((x >= -tol).all()) and float(x.sum()) <= 1.0 + tol
        return abs(float(x @ x) - 1.0) <= tol

    def require_member(self, x, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not self.contains(x, tol):
            raise DomainError(f"point {x.tolist()} outside {self}")
        return x

    # -- deterministic sampling -----------------------------------------

    def special_points(self) -> np.ndarray:
        """Center/vertex points where extrema of simple polynomials sit."""
        eye = np.eye(self.n)
        if self.kind == "ball":
            return np.vstack([np.zeros((1, self.n)), eye, -eye])
        if self.kind == "simplex":
            centroid = np.full((1, self.n), 1.0 / (self.n + 1))
            return np.vstack([np.zeros((1, self.n)), eye, centroid])
        return np.vstack([eye, -eye])

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        """Deterministic low-discrepancy sample of the domain.

        A Kronecker sequence on the unit cube is mapped onto the domain
        (Gaussian directions with a radial correction for the ball, sorted
        uniform spacings for the simplex). ``seed`` offsets the sequence.
        """
        if count < 1:
            return np.zeros((0, self.n))
        dim = self.n + 1 if self.kind == "ball" else self.n
        u = _kronecker_sequence(count, dim, seed)
        if self.kind == "simplex":
            return _simplex_from_uniform(u)
        z = ndtri(np.clip(u[:, : self.n], 1e-12, 1 - 1e-12))
        norms = np.linalg.norm(z, axis=1)
        norms[norms == 0] = 1.0
        direction = z / norms[:, None]
        if self.kind == "sphere":
            return direction
        radius = u[:, self.n] ** (1.0 / self.n)
        return direction * radius[:, None]

    # -- generators of the semialgebraic description ---------------------

    def generators(self) -> list[MultiPoly]:
        """Defining inequalities g_j >= 0, indexed 1..m as used in certificates."""
        if self.kind == "ball":
            g = MultiPoly.constant(self.n, 1.0)
            for i in range(self.n):
                g = g - MultiPoly.variable(self.n, i) ** 2
            return [g]
        if self.kind == "simplex":
            gens = [MultiPoly.variable(self.n, i) for i in range(self.n)]
            last = MultiPoly.constant(self.n, 1.0)
            for i in range(self.n):
                last = last - MultiPoly.variable(self.n, i)
            gens.append(last)
            return gens
        raise ValueError("sphere has no inequality generators")


def ball(n: int) -> DomainMeasure:
    return DomainMeasure("ball", n)


def simplex(n: int) -> DomainMeasure:
    return DomainMeasure("simplex", n)


def sphere(n: int) -> DomainMeasure:
    """Unit sphere in R^n (an (n-1)-dimensional surface)."""
    return DomainMeasure("sphere", n)


_SQRT5 = np.sqrt(5.0)


def _kronecker_sequence(count: int, dim: int, seed: int) -> np.ndarray:
    # additive recurrence with the generalized golden ratio; irrational
    # increments keep coordinates away from exact 0 and 1
    phi = 2.0
    for _ in range(32):
        phi = (1 + phi) ** (1.0 / (dim + 1))
    alphas = (1.0 / phi) ** np.arange(1, dim + 1)
    idx = np.arange(1, count + 1, dtype=np.float64) + float(seed) * count
    return np.mod(0.5 + idx[:, None] * alphas[None, :], 1.0)


def _simplex_from_uniform(u: np.ndarray) -> np.ndarray:
    # sorted uniform spacings are uniform on the simplex
    m, n = u.shape
    s = np.sort(u, axis=1)
    bounds = np.hstack([np.zeros((m, 1)), s, np.ones((m, 1))])
    return np.diff(bounds, axis=1)[:, :n]


# -- moments ------------------------------------------------------------
#
# All three measures have rational moments (products of half-integer
# ratios), so they are computed exactly and cached; degree components and
# Gram matrices then only carry the rounding of the final linear algebra.
# The high-degree moment matrices are badly conditioned, which is why the
# basis construction below runs in extended precision.


@lru_cache(maxsize=None)
def _moment_fraction(kind: str, n: int, alpha: tuple) -> Fraction:
    if kind == "simplex":
        num = Fraction(1)
        for a in alpha:
            for j in range(a):
                num *= Fraction(1, 2) + j
        den = Fraction(1)
        for j in range(sum(alpha)):
            den *= Fraction(n + 1, 2) + j
        return num / den
    if any(a % 2 for a in alpha):
        return Fraction(0)
    m = n + 1 if kind == "ball" else n
    num = Fraction(1)
    for a in alpha:
        for j in range(a // 2):
            num *= Fraction(1, 2) + j
    den = Fraction(1)
    for j in range(sum(alpha) // 2):
        den *= Fraction(m, 2) + j
    return num / den


def _fraction_to_longdouble(fr: Fraction) -> np.longdouble:
    num, den = fr.numerator, fr.denominator
    if abs(num) < 2**62 and den < 2**62:
        return np.longdouble(num) / np.longdouble(den)
    return np.longdouble(format(num, "d")) / np.longdouble(format(den, "d"))


def monomial_moment(domain: DomainMeasure, alpha) -> float:
    """Integral of ``x**alpha`` against the domain's reference measure."""
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != domain.n:
        raise DimensionMismatch(f"alpha must have length {domain.n}")
    if any(a < 0 for a in alpha):
        raise ValueError("alpha must be componentwise nonnegative")
    return float(_moment_fraction(domain.kind, domain.n, alpha))


def moments_many(
    domain: DomainMeasure, alphas: np.ndarray, dtype=np.float64
) -> np.ndarray:
    """Vectorized :func:`monomial_moment` over rows of ``alphas``."""
    alphas = np.asarray(alphas, dtype=np.int64)
    out = np.empty(alphas.shape[0], dtype=dtype)
    cast = (
        _fraction_to_longdouble
        if dtype == np.longdouble
        else (lambda fr: float(fr))
    )
    for i, row in enumerate(map(tuple, alphas.tolist())):
        out[i] = cast(_moment_fraction(domain.kind, domain.n, row))
    return out


def _pair_moment_matrix(
    domain: DomainMeasure, monos_a, monos_b, dtype=np.float64
) -> np.ndarray:
    alphas = np.asarray(monos_a, dtype=np.int64)
    betas = np.asarray(monos_b, dtype=np.int64)
    pair = alphas[:, None, :] + betas[None, :, :]
    return moments_many(
        domain, pair.reshape(-1, domain.n), dtype=dtype
    ).reshape(len(monos_a), len(monos_b))


def inner_product(p: MultiPoly, q: MultiPoly, domain: DomainMeasure) -> float:
    """Bilinear moment form ``integral(p * q)`` over the domain.

    Evaluated directly as a coefficient-moment-coefficient product in
    extended precision, which avoids the cancellation incurred by expanding
    ``p * q`` when the factors have large coefficients (as orthonormal basis
    elements do).
    """
    if p.nvars != q.nvars or p.nvars != domain.n:
        raise DimensionMismatch("polynomials must match the domain dimension")
    if not p.terms or not q.terms:
        return 0.0
    ea, ca = p.arrays()
    eb, cb = q.arrays()
    mat = _pair_moment_matrix(domain, ea, eb, dtype=np.longdouble)
    return float(ca.astype(np.longdouble) @ mat @ cb.astype(np.longdouble))


# -- orthonormal bases and degree components ------------------------------


def monomials_upto(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """Monomial exponents of total degree at most ``degree``, graded-lex."""
    out = []
    for d in range(degree + 1):
        level = set()
        for comb in combinations_with_replacement(range(nvars), d):
            exp = [0] * nvars
            for i in comb:
                exp[i] += 1
            level.add(tuple(exp))
        out.extend(sorted(level))
    return out


@dataclass(frozen=True)
class OrthonormalBasis:
    """Graded orthonormal polynomial basis for (domain, degree).

    ``coeff_matrix`` is lower triangular over ``monomials``: row ``j`` holds
    the monomial coefficients of the basis element ``basis[j]``, which has
    exact degree ``degrees[j]``.
    """

    domain: DomainMeasure
    degree: int
    monomials: tuple
    basis: tuple
    coeff_matrix: np.ndarray
    degrees: np.ndarray

    def components_matrix(self, f: MultiPoly) -> np.ndarray:
        """Coefficients of ``f`` against the basis (via exact moments)."""
        monos = self.monomials
        index = {m: i for i, m in enumerate(monos)}
        phi = np.zeros(len(monos), dtype=np.longdouble)
        for exp, c in f.terms.items():
            if exp not in index:
                raise DimensionMismatch(
                    f"degree of f exceeds basis degree {self.degree}"
                )
            phi[index[exp]] = c
        moments = _pair_moment_matrix(
            self.domain, monos, monos, dtype=np.longdouble
        )
        coeff = self.coeff_matrix.astype(np.longdouble)
        return (coeff @ (moments @ phi)).astype(np.float64)


def _cholesky_with_pivot_guard(mat: np.ndarray) -> np.ndarray:
    n = mat.shape[0]
    low = np.zeros_like(mat)
    for i in range(n):
        pivot = mat[i, i] - low[i, :i] @ low[i, :i]
        if pivot <= 0 or np.sqrt(pivot) < CHOLESKY_PIVOT_TOL:
            raise ConditioningFailure(
                f"moment-matrix Cholesky pivot {float(pivot):.3e} at index "
                f"{i} is below the {CHOLESKY_PIVOT_TOL:g} threshold; "
                "requested degree too high for binary64 output"
            )
        low[i, i] = np.sqrt(pivot)
        if i + 1 < n:
            low[i + 1 :, i] = (
                mat[i + 1 :, i] - low[i + 1 :, :i] @ low[i, :i]
            ) / low[i, i]
    return low


def _lower_triangular_inverse(low: np.ndarray) -> np.ndarray:
    n = low.shape[0]
    inv = np.zeros_like(low)
    for col in range(n):
        inv[col, col] = 1.0 / low[col, col]
        for k in range(col + 1, n):
            inv[k, col] = -(low[k, col:k] @ inv[col:k, col]) / low[k, k]
    return inv


@lru_cache(maxsize=None)
def orthonormal_basis(domain: DomainMeasure, degree: int) -> OrthonormalBasis:
    """Cholesky-based Gram-Schmidt of the graded monomial basis.

    The moment matrix is assembled from exact rational moments and factored
    in extended precision (its condition number grows roughly like 100**k in
    the degree k, so binary64 factoring would corrupt the top-degree basis
    elements well before the pivot guard trips). Raises
    :class:`ConditioningFailure` when a pivot falls below the threshold.
    """
    monos = monomials_upto(domain.n, degree)
    mat = _pair_moment_matrix(domain, monos, monos, dtype=np.longdouble)
    low = _cholesky_with_pivot_guard(mat)
    coeff = _lower_triangular_inverse(low).astype(np.float64)
    degrees = np.asarray(monos, dtype=np.int64).sum(axis=1)
    basis = tuple(
        MultiPoly(
            domain.n,
            {m: c for m, c in zip(monos, coeff[j]) if c != 0.0},
        )
        for j in range(len(monos))
    )
    return OrthonormalBasis(
        domain, degree, tuple(monos), basis, coeff, degrees
    )


def project_components(f: MultiPoly, domain: DomainMeasure) -> list[MultiPoly]:
    """Split ``f`` into mutually orthogonal exact-degree components.

    Returns ``[f_0, ..., f_d]`` with ``f_k`` spanned by the exact-degree-k
    orthonormal basis elements and ``sum(f_k) = f``.
    """
    d = f.degree
    basis = orthonormal_basis(domain, d)
    coeffs = basis.components_matrix(f)
    parts = []
    for k in range(d + 1):
        sel = np.nonzero(basis.degrees == k)[0]
        part = MultiPoly.zero(domain.n)
        for j in sel:
            if coeffs[j] != 0.0:
                part = part + basis.basis[j].scale(coeffs[j])
        parts.append(part)
    return parts


# -- positive cubature ----------------------------------------------------


@dataclass(frozen=True)
class CubatureRule:
    """Positive rule integrating polynomials exactly to ``exact_degree``."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __len__(self):
        return len(self.weights)

    def integrate_values(self, values) -> float:
        return float(np.dot(self.weights, values))

    def integrate(self, p: MultiPoly) -> float:
        return self.integrate_values(p.evaluate_many(self.points))

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "exact_degree": self.exact_degree,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CubatureRule":
        return cls(
            np.asarray(data["points"], dtype=np.float64),
            np.asarray(data["weights"], dtype=np.float64),
            int(data["exact_degree"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "CubatureRule":
        return cls.from_dict(json.loads(text))


def _sphere_product_rule(m: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit sphere of R^m, exact through ``degree``."""
    if m == 1:
        return np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
    nphi = degree + 1
    angles = 2.0 * np.pi * (np.arange(nphi) + 0.5) / nphi
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    wts = np.full(nphi, 1.0 / nphi)
    nodes = degree // 2 + 1
    q = 2
    while q < m:
        rule = gegenbauer.gauss_quadrature(q, nodes)
        t = rule.nodes
        s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
        pts = np.concatenate(
            [
                np.repeat(t, len(pts))[:, None],
                np.kron(s[:, None], pts),
            ],
            axis=1,
        )
        wts = np.kron(rule.weights, wts)
        q += 1
    return pts, wts


@lru_cache(maxsize=32)
def cubature(domain: DomainMeasure, exact_degree: int) -> CubatureRule:
    """Positive cubature via the sphere lift (see module docstring)."""
    if exact_degree < 0:
        raise ValueError("exact_degree must be >= 0")
    if domain.kind == "sphere":
        pts, wts = _sphere_product_rule(domain.n, exact_degree)
    elif domain.kind == "ball":
        pts, wts = _sphere_product_rule(domain.n + 1, exact_degree)
        pts = pts[:, : domain.n]
    else:
        pts, wts = _sphere_product_rule(domain.n + 1, 2 * exact_degree)
        pts = pts[:, : domain.n] ** 2
    pts = np.ascontiguousarray(pts)
    pts.flags.writeable = False
    wts.flags.writeable = False
    return CubatureRule(pts, wts, exact_degree)
