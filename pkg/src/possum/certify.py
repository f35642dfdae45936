"""Explicit preordering certificates from perturbed kernels.

For a fixed second argument the perturbed kernel is an explicit member of
the truncated preordering: on the ball, splitting ``p(u+v)^2 + p(u-v)^2`` by
parity of ``v`` leaves one plain square plus ``v^2`` times a square, and
``v^2`` is the ball generator times a nonnegative constant; on the simplex
the same parity split is applied once per coordinate, producing one weighted
square per subset of the generators. Summing these fixed-argument members
over a positive cubature rule against ``g = K^{-1}(f - shift + eps)`` yields
the certificate

    f - shift + eps  =  sum_J  sigma_J * g_J,

an exact polynomial identity whenever the rule is exact to ``deg f + 2r``
and ``g`` is nonnegative at the nodes.

Certificate squares are kept in a structured split form carrying the
orthonormal coefficients of ``p``; residual evaluation then reduces to
recurrence-based values of ``p`` (stable at any degree), while the monomial
expansion of each square stays available for serialization and degree
checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from possum import gegenbauer
from possum.density import check_lemma43, solve_density
from possum.domains import DomainMeasure, ball, cubature, simplex
from possum.errors import CertificateInfeasible, DomainError
from possum.kernels import (
    PerturbedKernel,
    _ball_args,
    _sign_vectors,
    apply_inverse,
    kernel_eval_many,
)
from possum.poly import MultiPoly, UniPoly, even_odd_split

NODE_VALUE_TOL = 1e-10
_SQRT2 = math.sqrt(2.0)


# -- parity splitting -----------------------------------------------------


def split_square(p: UniPoly, r: int) -> tuple[MultiPoly, MultiPoly]:
    """Parity split of ``p(u+v)^2 + p(u-v)^2`` with the doubling absorbed.

    Returns bivariate ``(h_odd, h_even)`` in the variables ``(u, s)`` with
    ``s`` standing for ``v^2``, satisfying the exact coefficient identity

        p(u+v)**2 + p(u-v)**2 = v**2 * h_odd(u, v**2)**2 + h_even(u, v**2)**2.
    """
    if p.degree > r:
        raise ValueError(f"deg p = {p.degree} exceeds r = {r}")
    terms = {}
    for m, c in enumerate(p.coeffs):
        if c == 0.0:
            continue
        for j in range(m + 1):
            key = (m - j, j)
            terms[key] = terms.get(key, 0.0) + c * math.comb(m, j)
    h = MultiPoly(2, terms)
    h_even, h_odd = even_odd_split(h, var=1)
    return h_odd.scale(_SQRT2), h_even.scale(_SQRT2)


def _substitute(h: MultiPoly, subs: list[MultiPoly]) -> MultiPoly:
    """Compose ``h`` with one polynomial per variable."""
    nv = subs[0].nvars
    maxes = [0] * h.nvars
    for exp in h.terms:
        for i, e in enumerate(exp):
            maxes[i] = max(maxes[i], e)
    powers = []
    for i, sub in enumerate(subs):
        row = [MultiPoly.constant(nv, 1.0)]
        for _ in range(maxes[i]):
            row.append(row[-1] * sub)
        powers.append(row)
    out = MultiPoly.zero(nv)
    for exp, c in h.terms.items():
        term = MultiPoly.constant(nv, c)
        for i, e in enumerate(exp):
            if e:
                term = term * powers[i][e]
        out = out + term
    return out


def _simplex_split_leaves(
    p_part: UniPoly, n: int
) -> list[tuple[tuple[int, ...], MultiPoly]]:
    """Full recursion of the parity split over the n+1 simplex coordinates.

    Returns one leaf per bit vector ``a`` in {0,1}^(n+1): a polynomial
    ``h_a`` in the squared split variables ``s_0 .. s_n`` such that

        sum over signs t of p_part(sum_i v_i t_i)^2
            = sum_a prod_i v_i^(2 a_i) * h_a(v_0^2, ..., v_n^2)^2.

    ``a_i = 1`` marks the leaves multiplied by ``v_i^2``, which substitutes
    to coordinate ``n+1-i`` of the simplex times a nonnegative constant.
    """
    nv = n + 2  # variable 0 is the running linear argument u
    start = MultiPoly(
        nv,
        {
            (m,) + (0,) * (n + 1): c
            for m, c in enumerate(p_part.coeffs)
            if c != 0.0
        },
    )
    items = [((), start)]
    for i in range(n + 1):
        svar = 1 + i
        grown = []
        for bits, h in items:
            shifted = {}
            for exp, c in h.terms.items():
                m = exp[0]
                for j in range(m + 1):
                    key = list(exp)
                    key[0] = m - j
                    key = tuple(key)
                    shifted[key + (j,)] = shifted.get(key + (j,), 0.0) + (
                        c * math.comb(m, j)
                    )
            # parity in the fresh variable (last slot), then fold into s_i
            even, odd = {}, {}
            for exp, c in shifted.items():
                j = exp[-1]
                key = list(exp[:-1])
                key[svar] += j // 2
                key = tuple(key)
                target = even if j % 2 == 0 else odd
                target[key] = target.get(key, 0.0) + c
            grown.append((bits + (0,), MultiPoly(nv, even).scale(_SQRT2)))
            grown.append((bits + (1,), MultiPoly(nv, odd).scale(_SQRT2)))
        items = grown
    leaves = []
    for bits, h in items:
        reduced = {
            exp[1:]: c for exp, c in h.terms.items() if exp[0] == 0
        }
        leaves.append((bits, MultiPoly(n + 1, reduced)))
    return leaves


def _kernel_ball_split(kernel: PerturbedKernel):
    if "ball_split" not in kernel._cache:
        kernel._cache["ball_split"] = split_square(kernel.p, kernel.r)
    return kernel._cache["ball_split"]


def _kernel_simplex_leaves(kernel: PerturbedKernel):
    if "simplex_leaves" not in kernel._cache:
        n = kernel.domain.n
        kernel._cache["simplex_leaves"] = {
            "even": _simplex_split_leaves(kernel.p_even, n),
            "odd": _simplex_split_leaves(kernel.p_odd, n),
        }
    return kernel._cache["simplex_leaves"]


# -- structured certificate squares ----------------------------------------


@dataclass(frozen=True)
class BallSplitSquare:
    """One square of the fixed-argument split on the ball.

    ``kind`` selects the even branch (the plain square) or the odd branch
    (the square multiplied by the ball generator).
    """

    kernel: PerturbedKernel
    y: np.ndarray
    kind: str  # "even" | "odd"

    @property
    def degree(self) -> int:
        r = self.kernel.r
        return r if self.kind == "even" else max(r - 1, 0)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        plusminus = [_ball_args(x, self.y[None, :]) for x in points]
        args = np.array(plusminus).reshape(-1)
        pv = self.kernel.p_values(args).reshape(-1, 2)
        if self.kind == "even":
            return (pv[:, 0] + pv[:, 1]) / _SQRT2
        # odd branch: divide out v, switching to the derivative limit when
        # the product of boundary factors underflows
        vx = np.sqrt(np.clip(1.0 - np.einsum("ij,ij->i", points, points), 0, None))
        vy = math.sqrt(max(1.0 - float(self.y @ self.y), 0.0))
        v = vx * vy
        diff = (pv[:, 0] - pv[:, 1]) / _SQRT2
        out = np.empty(len(points))
        good = v > 1e-7
        out[good] = diff[good] / v[good]
        if (~good).any():
            u = points[~good] @ self.y
            out[~good] = _SQRT2 * self._derivative_values(u)
        return out

    def _derivative_values(self, u: np.ndarray) -> np.ndarray:
        dp = np.polynomial.polynomial.polyder(self.kernel.p.coeffs)
        return np.polynomial.polynomial.polyval(u, dp)

    def as_multipoly(self) -> MultiPoly:
        n = self.kernel.domain.n
        h_odd, h_even = _kernel_ball_split(self.kernel)
        u_poly = MultiPoly(n, {})
        for i, yi in enumerate(self.y):
            u_poly = u_poly + MultiPoly.variable(n, i).scale(float(yi))
        s_poly = MultiPoly.constant(n, 1.0)
        for i in range(n):
            s_poly = s_poly - MultiPoly.variable(n, i) ** 2
        s_poly = s_poly.scale(max(1.0 - float(self.y @ self.y), 0.0))
        h = h_even if self.kind == "even" else h_odd
        return _substitute(h, [u_poly, s_poly])


@dataclass(frozen=True)
class SimplexSplitSquare:
    """One leaf of the recursive split on the simplex at a fixed node.

    ``bits[i] = 1`` marks multiplication by the squared split variable
    ``v_i^2``, whose x-part is generator ``n+1-i``; the matching
    nonnegative node factors live in the piece weight, not here.
    """

    kernel: PerturbedKernel
    ybar: np.ndarray  # n+1 barycentric coordinates of the node
    bits: tuple[int, ...]
    parity: str  # "even" | "odd" part of p

    @property
    def degree(self) -> int:
        p_deg = self.kernel.p.degree
        return max((p_deg - sum(self.bits)) // 2, 0)

    def _leaf(self) -> MultiPoly:
        leaves = _kernel_simplex_leaves(self.kernel)[self.parity]
        for bits, h in leaves:
            if bits == self.bits:
                return h
        raise KeyError(f"no leaf with bits {self.bits}")

    def _subs(self) -> list[MultiPoly]:
        n = self.kernel.domain.n
        subs = []
        for i in range(n + 1):
            coord = n - i  # x_{n+1-i}, zero-based n-i; i=0 is 1-sum(x)
            if coord == n:
                xpart = MultiPoly.constant(n, 1.0)
                for j in range(n):
                    xpart = xpart - MultiPoly.variable(n, j)
            else:
                xpart = MultiPoly.variable(n, coord)
            subs.append(xpart.scale(float(self.ybar[coord])))
        return subs

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return self.as_multipoly().evaluate_many(points)

    def as_multipoly(self) -> MultiPoly:
        return _substitute(self._leaf(), self._subs())


def _square_values(square, points: np.ndarray) -> np.ndarray:
    if isinstance(square, MultiPoly):
        return square.evaluate_many(points)
    return square.evaluate_many(points)


def _square_degree(square) -> int:
    return square.degree


def _square_poly(square) -> MultiPoly:
    return square if isinstance(square, MultiPoly) else square.as_multipoly()


@dataclass
class SquareDecomposition:
    """A finite sum ``sum_i weights[i] * squares[i]**2`` with weights >= 0."""

    weights: np.ndarray
    squares: tuple

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)

    def __len__(self):
        return len(self.weights)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        out = np.zeros(len(points))
        for w, s in zip(self.weights, self.squares):
            if w != 0.0:
                out += w * _square_values(s, points) ** 2
        return out

    @property
    def degree(self) -> int:
        degs = [
            2 * _square_degree(s)
            for w, s in zip(self.weights, self.squares)
            if w != 0.0
        ]
        return max(degs, default=0)

    def as_multipoly(self, nvars: int) -> MultiPoly:
        out = MultiPoly.zero(nvars)
        for w, s in zip(self.weights, self.squares):
            if w != 0.0:
                sp = _square_poly(s)
                out = out + (sp * sp).scale(float(w))
        return out


# -- fixed-argument kernel membership --------------------------------------


@dataclass
class FixedYKernelSOS:
    """The kernel with fixed second argument as explicit weighted squares."""

    domain: DomainMeasure
    y: np.ndarray
    r: int
    terms: dict

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Values of ``sum_J g_J * sigma_J``; reconstructs the kernel."""
        gens = {} if self.domain.kind == "sphere" else _generator_values(
            self.domain, points
        )
        out = np.zeros(len(points))
        for J, dec in self.terms.items():
            gj = np.ones(len(points))
            for j in J:
                gj = gj * gens[j]
            out += gj * dec.evaluate_many(points)
        return out

    def evaluate(self, x) -> float:
        return float(self.evaluate_many(np.asarray(x, float)[None, :])[0])


def _generator_values(domain: DomainMeasure, points: np.ndarray) -> dict:
    vals = {}
    if domain.kind == "ball":
        vals[1] = 1.0 - np.einsum("ij,ij->i", points, points)
    else:
        for j in range(domain.n):
            vals[j + 1] = points[:, j]
        vals[domain.n + 1] = 1.0 - points.sum(axis=1)
    return vals


def ball_kernel_sos(kernel: PerturbedKernel, y) -> FixedYKernelSOS:
    """Fixed-argument membership of a ball kernel in the preordering."""
    if kernel.domain.kind != "ball":
        raise ValueError("kernel does not live on the ball")
    y = kernel.domain.require_member(y)
    boundary_gap = max(1.0 - float(y @ y), 0.0)
    terms = {
        frozenset(): SquareDecomposition(
            np.array([0.5]), (BallSplitSquare(kernel, y, "even"),)
        ),
        frozenset({1}): SquareDecomposition(
            np.array([0.5 * boundary_gap]),
            (BallSplitSquare(kernel, y, "odd"),),
        ),
    }
    return FixedYKernelSOS(kernel.domain, y, kernel.r, terms)


def simplex_kernel_sos(kernel: PerturbedKernel, y) -> FixedYKernelSOS:
    """Fixed-argument membership of a simplex kernel in the preordering."""
    if kernel.domain.kind != "simplex":
        raise ValueError("kernel does not live on the simplex")
    y = kernel.domain.require_member(y)
    n = kernel.domain.n
    ybar = np.append(np.clip(y, 0.0, None), max(1.0 - y.sum(), 0.0))
    scale = 0.5 ** (n + 1)
    leaves = _kernel_simplex_leaves(kernel)
    grouped: dict = {}
    for parity in ("even", "odd"):
        for bits, _ in leaves[parity]:
            J = frozenset(n + 1 - i for i, b in enumerate(bits) if b)
            w = scale
            for i, b in enumerate(bits):
                if b:
                    w *= float(ybar[n - i])
            entry = grouped.setdefault(J, ([], []))
            entry[0].append(w)
            entry[1].append(SimplexSplitSquare(kernel, ybar, bits, parity))
    terms = {
        J: SquareDecomposition(np.array(ws), tuple(sqs))
        for J, (ws, sqs) in grouped.items()
    }
    return FixedYKernelSOS(kernel.domain, y, kernel.r, terms)


# -- certificates -----------------------------------------------------------


@dataclass
class VerifyReport:
    max_residual: float
    degree_ok: bool
    sos_ok: bool

    def passed(self, tol: float = 1e-8) -> bool:
        return self.max_residual < tol and self.degree_ok and self.sos_ok


@dataclass
class PreorderingCertificate:
    """An explicit member ``f - lambda_shift + epsilon`` of the preordering."""

    domain: DomainMeasure
    r: int
    epsilon: float
    lambda_shift: float
    sigma: dict
    _stable: object = field(default=None, repr=False)

    def lhs_values(self, points: np.ndarray) -> np.ndarray:
        """Values of ``sum_J g_J * sigma_J`` at the given points."""
        if self._stable is not None:
            return self._stable.lhs_values(points)
        gens = _generator_values(self.domain, points)
        out = np.zeros(len(points))
        for J, dec in self.sigma.items():
            gj = np.ones(len(points))
            for j in J:
                gj = gj * gens[j]
            out += gj * dec.evaluate_many(points)
        return out

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        sigma = {}
        for J in sorted(self.sigma, key=sorted):
            dec = self.sigma[J]
            pieces = []
            for w, s in zip(dec.weights, dec.squares):
                if w == 0.0:
                    continue
                pieces.append(
                    {"w": float(w), "poly": _square_poly(s).to_dict()}
                )
            sigma[f"J:{sorted(J)}"] = {"pieces": pieces}
        return {
            "domain": self.domain.kind,
            "n": self.domain.n,
            "r": self.r,
            "epsilon": self.epsilon,
            "lambda_shift": self.lambda_shift,
            "sigma": sigma,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "PreorderingCertificate":
        domain = DomainMeasure(data["domain"], int(data["n"]))
        sigma = {}
        for key, entry in data["sigma"].items():
            J = frozenset(json.loads(key.split(":", 1)[1]))
            weights = [piece["w"] for piece in entry["pieces"]]
            squares = tuple(
                MultiPoly.from_dict(piece["poly"])
                for piece in entry["pieces"]
            )
            sigma[J] = SquareDecomposition(np.asarray(weights), squares)
        return cls(
            domain=domain,
            r=int(data["r"]),
            epsilon=float(data["epsilon"]),
            lambda_shift=float(data["lambda_shift"]),
            sigma=sigma,
        )

    @classmethod
    def from_json(cls, text: str) -> "PreorderingCertificate":
        return cls.from_dict(json.loads(text))


class _BallStable:
    def __init__(self, kernel, points, scale):
        self.kernel = kernel
        self.points = points
        self.scale = scale
        self.vy = np.sqrt(
            np.clip(1.0 - np.einsum("ij,ij->i", points, points), 0.0, None)
        )

    def lhs_values(self, probes: np.ndarray) -> np.ndarray:
        out = np.empty(len(probes))
        block = max(1, int(2e6 // max(len(self.points), 1)))
        for lo in range(0, len(probes), block):
            chunk = probes[lo : lo + block]
            u = chunk @ self.points.T
            vx = np.sqrt(
                np.clip(1.0 - np.einsum("ij,ij->i", chunk, chunk), 0.0, None)
            )
            v = vx[:, None] * self.vy[None, :]
            args = np.clip(
                np.stack([u + v, u - v]), -1.0, 1.0
            )
            pv = self.kernel.p_values(args.ravel()).reshape(args.shape)
            h_even = 0.5 * (pv[0] + pv[1])
            h_odd_v = 0.5 * (pv[0] - pv[1])
            out[lo : lo + len(chunk)] = (
                h_even**2 + h_odd_v**2
            ) @ self.scale
        return out


class _SimplexStable:
    def __init__(self, kernel, points, scale):
        self.kernel = kernel
        self.points = points
        self.scale = scale
        n = kernel.domain.n
        self.ybar = np.hstack(
            [
                np.clip(points, 0.0, None),
                np.clip(1.0 - points.sum(axis=1), 0.0, None)[:, None],
            ]
        )
        self.signs = _sign_vectors(n + 1)
        # character matrix: chi[a, t] = prod_i t_i**a_i over bit patterns a
        nsigns = len(self.signs)
        chi = np.ones((nsigns, nsigns))
        for a in range(nsigns):
            abits = [(a >> i) & 1 for i in range(n + 1)]
            chi[a] = np.prod(
                np.where(np.array(abits, bool)[None, :], self.signs, 1.0),
                axis=1,
            )
        self.chi = chi

    def lhs_values(self, probes: np.ndarray) -> np.ndarray:
        n = self.kernel.domain.n
        nsigns = len(self.signs)
        neg = np.arange(nsigns)[::-1]
        out = np.empty(len(probes))
        block = max(1, int(2e6 // (len(self.points) * nsigns)))
        for lo in range(0, len(probes), block):
            chunk = probes[lo : lo + block]
            xbar = np.hstack(
                [
                    np.clip(chunk, 0.0, None),
                    np.clip(1.0 - chunk.sum(axis=1), 0.0, None)[:, None],
                ]
            )
            w = np.sqrt(xbar[:, None, :] * self.ybar[None, :, :])
            args = np.clip(np.einsum("sk,mnk->smn", self.signs, w), -1, 1)
            pv = self.kernel.p_values(args.ravel()).reshape(args.shape)
            p_even = 0.5 * (pv + pv[neg])
            p_odd = 0.5 * (pv - pv[neg])
            m, nn = args.shape[1], args.shape[2]
            total = np.zeros((m, nn))
            for branch in (p_even, p_odd):
                filt = self.chi @ branch.reshape(nsigns, m * nn)
                total += 0.5 ** (n + 1) * (filt**2).sum(axis=0).reshape(
                    m, nn
                )
            out[lo : lo + len(chunk)] = (0.5 ** (n + 1) * total) @ self.scale
        return out


def _density_for(domain: DomainMeasure, d: int, r: int):
    if domain.kind == "ball":
        sol = solve_density(domain.weight_param, d, r)
        check_lemma43(sol, d)
    else:
        sol = solve_density(domain.weight_param, 2 * d, 2 * r)
        check_lemma43(sol, 2 * d)
    return sol


def build_kernel(domain: DomainMeasure, d: int, r: int) -> PerturbedKernel:
    """Kernel used to certify degree-``d`` inputs at half-degree ``r``.

    On the simplex the underlying univariate problem runs at doubled
    parameters because only the even part of the square enters the kernel.
    """
    return PerturbedKernel.from_density(domain, r, _density_for(domain, d, r))


@dataclass
class _FeasibilityContext:
    kernel: PerturbedKernel
    rule: object
    base_values: np.ndarray  # K^{-1}(f - shift) at the nodes
    f_shift_values: np.ndarray


def feasibility_context(
    f: MultiPoly, lambda_shift: float, r: int, domain: DomainMeasure
) -> _FeasibilityContext:
    """Shared context for feasibility tests across epsilon values.

    Since the constant-component eigenvalue is one, the inverse transform of
    ``f - shift + eps`` equals the inverse transform of ``f - shift`` plus
    ``eps``; a single projection serves every epsilon.
    """
    d = f.degree
    if d > r:
        raise ValueError(f"need r >= deg f = {d}")
    kernel = build_kernel(domain, d, r)
    g = apply_inverse(kernel, f - lambda_shift)
    rule = cubature(domain, d + 2 * r)
    return _FeasibilityContext(
        kernel=kernel,
        rule=rule,
        base_values=g.evaluate_many(rule.points),
        f_shift_values=f.evaluate_many(rule.points) - lambda_shift,
    )


def certificate_feasible(ctx: _FeasibilityContext, epsilon: float) -> bool:
    """Whether synthesis succeeds for this epsilon (no assembly performed)."""
    return float((ctx.base_values + epsilon).min()) >= -NODE_VALUE_TOL


def synthesize(
    f: MultiPoly,
    lambda_shift: float,
    epsilon: float,
    r: int,
    domain: DomainMeasure,
) -> PreorderingCertificate:
    """Assemble the full preordering certificate for ``f - shift + eps``.

    Pipeline: pick the kernel density, invert the operator on the shifted
    input, integrate the fixed-argument squares against a cubature rule
    exact to ``deg f + 2r``, and group the weighted squares by generator
    subset. Raises :class:`CertificateInfeasible` when the inverted
    polynomial dips below ``-1e-10`` at a node (epsilon or r too small).
    """
    if f.nvars != domain.n:
        raise ValueError("polynomial and domain dimensions differ")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if domain.kind not in ("ball", "simplex"):
        raise ValueError("certificates exist on ball and simplex")
    d = f.degree
    if d == 0:
        const = float(f.terms.get((0,) * f.nvars, 0.0))
        value = const - lambda_shift + epsilon
        if value < -NODE_VALUE_TOL:
            raise CertificateInfeasible(
                f"constant input {const} below shift {lambda_shift}"
            )
        sigma = {
            frozenset(): SquareDecomposition(
                np.array([max(value, 0.0)]),
                (MultiPoly.constant(domain.n, 1.0),),
            )
        }
        return PreorderingCertificate(domain, r, epsilon, lambda_shift, sigma)

    ctx = feasibility_context(f, lambda_shift, r, domain)
    if float(ctx.f_shift_values.min()) < -NODE_VALUE_TOL:
        raise CertificateInfeasible(
            "f - lambda_shift is negative at a cubature node: "
            f"min {float(ctx.f_shift_values.min()):.3e}"
        )
    gv = ctx.base_values + epsilon
    if float(gv.min()) < -NODE_VALUE_TOL:
        raise CertificateInfeasible(
            f"inverse-transformed polynomial reaches {float(gv.min()):.3e} "
            "at a cubature node; increase epsilon or r"
        )
    scale = ctx.rule.weights * np.clip(gv, 0.0, None)
    kernel = ctx.kernel
    points = ctx.rule.points

    sigma: dict = {}
    if domain.kind == "ball":
        keep = np.nonzero(scale > 0.0)[0]
        boundary_gap = np.clip(
            1.0 - np.einsum("ij,ij->i", points, points), 0.0, None
        )
        sigma[frozenset()] = SquareDecomposition(
            0.5 * scale[keep],
            tuple(
                BallSplitSquare(kernel, points[i], "even") for i in keep
            ),
        )
        sigma[frozenset({1})] = SquareDecomposition(
            0.5 * scale[keep] * boundary_gap[keep],
            tuple(BallSplitSquare(kernel, points[i], "odd") for i in keep),
        )
        stable = _BallStable(kernel, points, scale)
    else:
        n = domain.n
        ybar = np.hstack(
            [
                np.clip(points, 0.0, None),
                np.clip(1.0 - points.sum(axis=1), 0.0, None)[:, None],
            ]
        )
        leaves = _kernel_simplex_leaves(kernel)
        keep = np.nonzero(scale > 0.0)[0]
        grouped: dict = {}
        for parity in ("even", "odd"):
            for bits, _ in leaves[parity]:
                J = frozenset(n + 1 - i for i, b in enumerate(bits) if b)
                gen_scale = np.ones(len(keep))
                for i, b in enumerate(bits):
                    if b:
                        gen_scale = gen_scale * ybar[keep, n - i]
                ws = 0.5 ** (n + 1) * scale[keep] * gen_scale
                entry = grouped.setdefault(J, ([], []))
                entry[0].append(ws)
                entry[1].extend(
                    SimplexSplitSquare(
                        kernel, ybar[i], bits, parity
                    )
                    for i in keep
                )
        sigma = {
            J: SquareDecomposition(np.concatenate(ws), tuple(sqs))
            for J, (ws, sqs) in grouped.items()
        }
        stable = _SimplexStable(kernel, points, scale)

    return PreorderingCertificate(
        domain=domain,
        r=r,
        epsilon=epsilon,
        lambda_shift=lambda_shift,
        sigma=sigma,
        _stable=stable,
    )


def verify(
    cert: PreorderingCertificate,
    f: MultiPoly,
    samples: int = 200,
    seed: int = 0,
) -> VerifyReport:
    """Pointwise residual, degree and weight checks of a certificate.

    The residual is the worst deviation between ``f - shift + eps`` and the
    certificate's weighted-square combination over a deterministic sample of
    the domain plus its special points. Nonnegativity of each sigma is
    structural (explicit squares, nonnegative weights), so ``sos_ok`` only
    inspects the stored weights.
    """
    pts = np.vstack(
        [cert.domain.sample_points(samples, seed), cert.domain.special_points()]
    )
    target = f.evaluate_many(pts) - cert.lambda_shift + cert.epsilon
    got = cert.lhs_values(pts)
    max_residual = float(np.abs(got - target).max())

    gen_degree = {}
    if cert.domain.kind == "ball":
        gen_degree[1] = 2
    else:
        for j in range(1, cert.domain.n + 2):
            gen_degree[j] = 1
    degree_ok = True
    sos_ok = True
    for J, dec in cert.sigma.items():
        g_deg = sum(gen_degree[j] for j in J)
        if dec.degree + g_deg > 2 * cert.r:
            degree_ok = False
        if (np.asarray(dec.weights) < 0).any():
            sos_ok = False
    return VerifyReport(
        max_residual=max_residual, degree_ok=degree_ok, sos_ok=sos_ok
    )
