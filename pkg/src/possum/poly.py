"""Sparse multivariate and dense univariate polynomial arithmetic.

Multivariate polynomials are stored as a map from exponent tuples to float
coefficients; coefficients below ``PRUNE_TOL`` in magnitude are dropped so
that repeated products do not accumulate noise terms. Univariate polynomials
are dense ascending coefficient vectors.

All values are immutable after construction and the operations are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

import json
import math

import numpy as np

from possum import backend
from possum.errors import DimensionMismatch

PRUNE_TOL = 1e-15


class MultiPoly:
    """Sparse polynomial in ``nvars`` variables with float64 coefficients."""

    __slots__ = ("nvars", "terms", "_arrays")

    def __init__(self, nvars: int, terms=None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        clean = {}
        for exp, c in (terms or {}).items():
            c = float(c)
            if abs(c) < PRUNE_TOL:
                continue
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise DimensionMismatch(
                    f"exponent {exp} does not match nvars={nvars}"
                )
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            clean[exp] = c
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_arrays", None)

    def __setattr__(self, name, value):
        raise AttributeError("MultiPoly is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c: float) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "MultiPoly":
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1.0})

    @classmethod
    def from_arrays(cls, nvars, exps, coefs) -> "MultiPoly":
        exps, coefs = backend.combine_terms(
            np.ascontiguousarray(exps, dtype=np.int64),
            np.asarray(coefs, dtype=np.float64),
        )
        return cls(nvars, {tuple(e): c for e, c in zip(exps.tolist(), coefs)})

    # -- views ---------------------------------------------------------

    def arrays(self):
        """Exponent matrix (nterms, nvars) and coefficient vector."""
        cached = self._arrays
        if cached is None:
            items = sorted(self.terms.items())
            if items:
                exps = np.array([e for e, _ in items], dtype=np.int64)
                exps = exps.reshape(len(items), self.nvars)
                coefs = np.array([c for _, c in items], dtype=np.float64)
            else:
                exps = np.zeros((0, self.nvars), dtype=np.int64)
                coefs = np.zeros(0, dtype=np.float64)
            cached = (exps, coefs)
            object.__setattr__(self, "_arrays", cached)
        return cached

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return (
            isinstance(other, MultiPoly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        if not self.terms:
            return f"MultiPoly({self.nvars}, 0)"
        parts = []
        for exp, c in sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0])):
            mono = "*".join(
                f"x{i}" if e == 1 else f"x{i}^{e}"
                for i, e in enumerate(exp)
                if e
            )
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"MultiPoly({self.nvars}, {' + '.join(parts)})"

    # -- arithmetic ------------------------------------------------------

    def _check(self, other):
        if self.nvars != other.nvars:
            raise DimensionMismatch(
                f"nvars mismatch: {self.nvars} vs {other.nvars}"
            )

    def __add__(self, other):
        if np.isscalar(other):
            other = MultiPoly.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0.0) + c
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if np.isscalar(other):
            other = MultiPoly.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        self._check(other)
        if not self.terms or not other.terms:
            return MultiPoly.zero(self.nvars)
        ea, ca = self.arrays()
        eb, cb = other.arrays()
        exps, coefs = backend.mul_terms(ea, ca, eb, cb)
        return MultiPoly(
            self.nvars, {tuple(e): c for e, c in zip(exps.tolist(), coefs)}
        )

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c: float) -> "MultiPoly":
        c = float(c)
        return MultiPoly(self.nvars, {e: c * v for e, v in self.terms.items()})

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = MultiPoly.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # -- evaluation ------------------------------------------------------

    def evaluate(self, x) -> float:
        """Value at a single point (direct sum of monomial products)."""
        return float(self.evaluate_many(np.asarray(x, float)[None, :])[0])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        points = np.ascontiguousarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != self.nvars:
            raise DimensionMismatch(
                f"points must have shape (m, {self.nvars})"
            )
        if not self.terms:
            return np.zeros(points.shape[0])
        exps, coefs = self.arrays()
        return backend.eval_terms(exps, coefs, points)

    def __call__(self, x):
        return self.evaluate(x)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        items = sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]))
        return {
            "nvars": self.nvars,
            "terms": [{"exp": list(e), "c": c} for e, c in items],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MultiPoly":
        return cls(
            int(data["nvars"]),
            {tuple(t["exp"]): float(t["c"]) for t in data["terms"]},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MultiPoly":
        return cls.from_dict(json.loads(text))


class UniPoly:
    """Dense univariate polynomial, ascending coefficient order."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=np.float64))
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("UniPoly is immutable")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0.0

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def __add__(self, other):
        if np.isscalar(other):
            other = UniPoly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        out = np.zeros(n)
        out[: len(self.coeffs)] += self.coeffs
        out[: len(other.coeffs)] += other.coeffs
        return UniPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return UniPoly(-self.coeffs)

    def __sub__(self, other):
        if np.isscalar(other):
            other = UniPoly([other])
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return UniPoly(self.coeffs * other)
        return UniPoly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def even_part(self) -> "UniPoly":
        out = self.coeffs.copy()
        out[1::2] = 0.0
        return UniPoly(out)

    def odd_part(self) -> "UniPoly":
        out = self.coeffs.copy()
        out[0::2] = 0.0
        return UniPoly(out)

    def __eq__(self, other):
        return isinstance(other, UniPoly) and np.array_equal(
            self.coeffs, other.coeffs
        )

    def __repr__(self):
        return f"UniPoly({self.coeffs.tolist()})"


def even_odd_split(h: MultiPoly, var: int = 1) -> tuple[MultiPoly, MultiPoly]:
    """Split ``h`` by parity in one variable, substituting its square.

    Returns ``(h_even, h_odd)`` in the same variables, where the slot ``var``
    now stands for the square of the original variable:

        h(..., v, ...) = h_even(..., v**2, ...) + v * h_odd(..., v**2, ...)

    The identity is exact on coefficients (pure reindexing).
    """
    even, odd = {}, {}
    for exp, c in h.terms.items():
        j = exp[var]
        new = list(exp)
        if j % 2 == 0:
            new[var] = j // 2
            even[tuple(new)] = even.get(tuple(new), 0.0) + c
        else:
            new[var] = (j - 1) // 2
            odd[tuple(new)] = odd.get(tuple(new), 0.0) + c
    return MultiPoly(h.nvars, even), MultiPoly(h.nvars, odd)


def sup_norm_estimate(p: MultiPoly, domain, samples: int = 4096) -> float:
    """Heuristic lower estimate of ``max |p|`` over a domain.

    Evaluates ``p`` on a deterministic low-discrepancy sample of the domain
    plus its special points (center, vertices). The result never exceeds the
    true sup-norm; it is used for normalization and reporting only, never for
    certificate soundness.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pts = [domain.sample_points(samples), domain.special_points()]
    pts = np.vstack([q for q in pts if q.size])
    vals = p.evaluate_many(pts)
    return float(np.abs(vals).max()) if vals.size else 0.0


def _poly_from_json_file(path) -> MultiPoly:
    with open(path, "r", encoding="utf-8") as fh:
        return MultiPoly.from_dict(json.load(fh))


def lift_univariate(u: UniPoly, inner: MultiPoly) -> MultiPoly:
    """Compose ``u`` with a multivariate inner polynomial: ``u(inner)``."""
    out = MultiPoly.constant(inner.nvars, u.coeffs[-1])
    for c in u.coeffs[-2::-1]:
        out = out * inner + c
    return out


def binomial(n: int, k: int) -> float:
    return float(math.comb(n, k))
