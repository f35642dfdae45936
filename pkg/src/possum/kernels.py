"""Christoffel-Darboux kernel components, perturbed kernels, operator action.

``cd_component(domain, k, x, y)`` is the degree-k reproducing kernel of the
domain's measure, evaluated through its univariate closed form:

* sphere  -- C-normalized member of parameter n-1 at ``x . y``,
* ball    -- half the sum of the parameter-n member at
             ``x . y +- sqrt(1-|x|^2) sqrt(1-|y|^2)``,
* simplex -- the sign-average of the degree-2k member at
             ``sum_i sqrt(x_i y_i) t_i`` over all sign vectors ``t``, with
             the extra coordinate ``1 - sum x_i`` appended.

A :class:`PerturbedKernel` scales the degree-k component by an eigenvalue
derived from a univariate square ``q = p**2``; its operator acts on a
polynomial by scaling each orthogonal degree component. Evaluation always
goes through the orthonormal-coefficient form of ``p`` (forward recurrence),
never through monomial coefficients, so it stays accurate at high degree.
"""

from __future__ import annotations

import numpy as np

from possum import gegenbauer
from possum.density import DensitySolution
from possum.domains import DomainMeasure, cubature, project_components
from possum.errors import DomainError, SingularEigenvalue
from possum.poly import MultiPoly, UniPoly

_EIG_TOL = 1e-12


def _sign_vectors(m: int) -> np.ndarray:
    # rows: all of {-1, 1}^m, in a fixed order with row ~i the negation of i
    out = np.ones((2**m, m))
    for j in range(m):
        out[:, j] = np.where((np.arange(2**m) >> j) & 1, -1.0, 1.0)
    return out


def _ball_args(x: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = ys @ x
    vx = np.sqrt(max(1.0 - float(x @ x), 0.0))
    vy = np.sqrt(np.clip(1.0 - np.einsum("ij,ij->i", ys, ys), 0.0, None))
    v = vx * vy
    return np.clip(u + v, -1.0, 1.0), np.clip(u - v, -1.0, 1.0)


def _simplex_args(x: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Arguments ``sum_i sqrt(x_i y_i) t_i``; shape (nsigns, len(ys))."""
    xb = np.append(np.clip(x, 0.0, None), max(1.0 - x.sum(), 0.0))
    yb = np.hstack(
        [
            np.clip(ys, 0.0, None),
            np.clip(1.0 - ys.sum(axis=1), 0.0, None)[:, None],
        ]
    )
    w = np.sqrt(yb * xb[None, :])
    signs = _sign_vectors(len(xb))
    return np.clip(signs @ w.T, -1.0, 1.0)


def cd_component(domain: DomainMeasure, k: int, x, y) -> float:
    """Degree-k Christoffel-Darboux component via the closed form."""
    x = domain.require_member(x)
    y = domain.require_member(np.asarray(y, dtype=np.float64))
    return float(cd_component_many(domain, k, x, y[None, :])[0])


def cd_component_many(
    domain: DomainMeasure, k: int, x: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Vectorized :func:`cd_component` over the second argument."""
    n = domain.weight_param
    fam = gegenbauer.GegenbauerFamily(n, "C")
    if domain.kind == "sphere":
        if n < 2:
            raise DomainError(
                "sphere kernel needs ambient dimension >= 3 "
                "(value-at-one normalization undefined for parameter 1)"
            )
        return fam.eval_all(k, np.clip(ys @ x, -1.0, 1.0))[k]
    if domain.kind == "ball":
        plus, minus = _ball_args(x, ys)
        table = fam.eval_all(k, np.concatenate([plus, minus]))[k]
        return 0.5 * (table[: len(ys)] + table[len(ys) :])
    args = _simplex_args(x, ys)
    table = fam.eval_all(2 * k, args.ravel())[2 * k].reshape(args.shape)
    return table.mean(axis=0)


class PerturbedKernel:
    """A Christoffel-Darboux kernel with rescaled degree components.

    The shape on the ball is ``(q(u+v) + q(u-v)) / 2`` for a square
    ``q = p**2`` of degree 2r; on the simplex it is the sign-average of the
    even part of a degree-4r square. The degree-k component eigenvalue is
    the k-th (ball) or 2k-th (simplex) expansion coefficient of ``q``.

    Instances are immutable and shareable across threads; derived data is
    cached internally.
    """

    __slots__ = ("domain", "r", "p_ortho", "lam", "eigenvalues", "_cache")

    def __init__(self, domain: DomainMeasure, r: int, p_ortho, lam):
        if domain.kind not in ("ball", "simplex"):
            raise ValueError("perturbed kernels exist on ball and simplex")
        lam = np.asarray(lam, dtype=np.float64)
        want = (4 * r if domain.kind == "simplex" else 2 * r) + 1
        if len(lam) > want:
            raise ValueError("lambda vector longer than the degree budget")
        full = np.zeros(want)
        full[: len(lam)] = lam
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "r", int(r))
        object.__setattr__(
            self,
            "p_ortho",
            None if p_ortho is None else np.asarray(p_ortho, np.float64),
        )
        object.__setattr__(self, "lam", full)
        eig = full[::2] if domain.kind == "simplex" else full
        object.__setattr__(self, "eigenvalues", eig[: 2 * r + 1])
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("PerturbedKernel is immutable")

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_density(
        cls, domain: DomainMeasure, r: int, sol: DensitySolution
    ) -> "PerturbedKernel":
        expected = 2 * r if domain.kind == "simplex" else r
        if sol.r != expected:
            raise ValueError(
                f"density solved at half-degree {sol.r}, kernel needs "
                f"{expected} on the {domain.kind}"
            )
        if sol.n != domain.weight_param:
            raise ValueError("weight parameter does not match the domain")
        return cls(domain, r, sol.p_ortho, sol.lam)

    @classmethod
    def from_single_square(
        cls, domain: DomainMeasure, r: int, p_ortho
    ) -> "PerturbedKernel":
        """Kernel of ``q = p**2`` given orthonormal coefficients of ``p``."""
        n = domain.weight_param
        p_ortho = np.asarray(p_ortho, dtype=np.float64)
        deg_q = 2 * (len(p_ortho) - 1)
        budget = 4 * r if domain.kind == "simplex" else 2 * r
        if deg_q > budget:
            raise ValueError("square exceeds the kernel degree budget")
        rule = gegenbauer.gauss_quadrature(n, deg_q + 1)
        qvals = gegenbauer.eval_orthonormal_series(n, p_ortho, rule.nodes) ** 2
        lam = gegenbauer.expand_values(n, deg_q, (qvals, rule))
        return cls(domain, r, p_ortho, lam)

    @classmethod
    def reproducing(cls, domain: DomainMeasure, r: int) -> "PerturbedKernel":
        """Synthetic kernel with all eigenvalues one (the identity on
        polynomials of degree at most 2r); has no single-square form."""
        length = (4 * r if domain.kind == "simplex" else 2 * r) + 1
        return cls(domain, r, None, np.ones(length))

    # -- derived views ----------------------------------------------------

    @property
    def weight_n(self) -> int:
        return self.domain.weight_param

    @property
    def p(self) -> UniPoly:
        """Monomial form of the square root (see conditioning note)."""
        if self.p_ortho is None:
            raise ValueError("kernel has no single-square representation")
        if "p" not in self._cache:
            self._cache["p"] = gegenbauer.series_to_unipoly(
                self.weight_n, self.p_ortho
            )
        return self._cache["p"]

    @property
    def p_even(self) -> UniPoly:
        return self.p.even_part()

    @property
    def p_odd(self) -> UniPoly:
        return self.p.odd_part()

    @property
    def lambda_even(self) -> np.ndarray:
        if self.domain.kind != "simplex":
            raise ValueError("lambda_even is a simplex-kernel notion")
        return self.lam[::2]

    def p_values(self, args: np.ndarray) -> np.ndarray:
        """Stable values of the square root at the given arguments."""
        if self.p_ortho is None:
            raise ValueError("kernel has no single-square representation")
        return gegenbauer.eval_orthonormal_series(
            self.weight_n, self.p_ortho, args
        )


def kernel_eval(kernel: PerturbedKernel, x, y) -> float:
    """Kernel value through the univariate closed form (not component sums)."""
    x = kernel.domain.require_member(x)
    y = kernel.domain.require_member(np.asarray(y, dtype=np.float64))
    return float(kernel_eval_many(kernel, x, y[None, :])[0])


def kernel_eval_many(
    kernel: PerturbedKernel, x: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Vectorized :func:`kernel_eval` over the second argument."""
    if kernel.p_ortho is None:
        out = np.zeros(len(ys))
        for k, eig in enumerate(kernel.eigenvalues):
            if eig != 0.0:
                out += eig * cd_component_many(kernel.domain, k, x, ys)
        return out
    if kernel.domain.kind == "ball":
        plus, minus = _ball_args(x, ys)
        pv = kernel.p_values(np.concatenate([plus, minus]))
        return 0.5 * (pv[: len(ys)] ** 2 + pv[len(ys) :] ** 2)
    args = _simplex_args(x, ys)
    pv = kernel.p_values(args.ravel()).reshape(args.shape)
    # even part of q at the arguments; rows come in +-t pairs
    neg = _negation_index(args.shape[0])
    q_even = 0.5 * (pv**2 + pv[neg] ** 2)
    return q_even.mean(axis=0)


def _negation_index(nrows: int) -> np.ndarray:
    # row i of _sign_vectors(m) negated is row (2^m - 1) - i
    return np.arange(nrows)[::-1]


def apply_operator(kernel: PerturbedKernel, f: MultiPoly) -> MultiPoly:
    """Scale each orthogonal degree component of ``f`` by its eigenvalue."""
    if f.degree > 2 * kernel.r:
        raise ValueError(
            f"degree {f.degree} exceeds the kernel budget {2 * kernel.r}"
        )
    parts = project_components(f, kernel.domain)
    out = MultiPoly.zero(f.nvars)
    for k, part in enumerate(parts):
        out = out + part.scale(kernel.eigenvalues[k])
    return out


def apply_inverse(kernel: PerturbedKernel, f: MultiPoly) -> MultiPoly:
    """Inverse operator action; needs all touched eigenvalues nonzero."""
    if f.degree > 2 * kernel.r:
        raise ValueError(
            f"degree {f.degree} exceeds the kernel budget {2 * kernel.r}"
        )
    parts = project_components(f, kernel.domain)
    out = MultiPoly.zero(f.nvars)
    for k, part in enumerate(parts):
        eig = kernel.eigenvalues[k]
        if abs(eig) <= _EIG_TOL:
            if part:
                raise SingularEigenvalue(
                    f"component degree {k} carries eigenvalue {eig:.3e}"
                )
            continue
        out = out + part.scale(1.0 / eig)
    return out


def reproducing_check(
    domain: DomainMeasure, r: int, trials: int = 20, seed: int = 12345
) -> float:
    """End-to-end validation of the closed forms against the identity.

    Integrates the unperturbed kernel against random polynomials of degree
    at most r with a cubature rule exact to 2r and reports the worst
    deviation from reproduction at sampled probe points.
    """
    from possum.domains import monomials_upto

    rule = cubature(domain, 2 * r)
    rng = np.random.default_rng(seed)
    monos = monomials_upto(domain.n, r)
    probes = domain.sample_points(16, seed=1)
    fam = gegenbauer.GegenbauerFamily(domain.weight_param, "C")
    worst = 0.0
    for _ in range(trials):
        coefs = rng.standard_normal(len(monos))
        p = MultiPoly(domain.n, dict(zip(monos, coefs)))
        pvals = p.evaluate_many(rule.points)
        for x in probes:
            if domain.kind == "sphere":
                table = fam.eval_all(r, np.clip(rule.points @ x, -1, 1))
                ck = table[: r + 1].sum(axis=0)
            elif domain.kind == "ball":
                plus, minus = _ball_args(x, rule.points)
                table = fam.eval_all(r, np.concatenate([plus, minus]))
                ck = 0.5 * (
                    table[: r + 1, : len(rule.points)].sum(axis=0)
                    + table[: r + 1, len(rule.points) :].sum(axis=0)
                )
            else:
                args = _simplex_args(x, rule.points)
                table = fam.eval_all(2 * r, args.ravel()).reshape(
                    2 * r + 1, *args.shape
                )
                ck = table[: 2 * r + 1 : 2].sum(axis=0).mean(axis=0)
            got = float(rule.weights @ (ck * pvals))
            worst = max(worst, abs(got - p.evaluate(x)))
    return worst
