"""Bound computations tied to the certificate construction.

Three quantities are tracked per ``(f, domain, r)``:

* ``eps_theoretical`` -- the provable certificate slack: the harmonic-
  constant bound times the measured inverse-eigenvalue gap sum times the
  range of ``f``; decays like 1/r**2 once ``r >= 2(n+1)d``.
* ``eps_empirical``   -- the smallest feasible epsilon found by bisection
  with the synthesis feasibility test as predicate (a measurement, not a
  claim about the exact hierarchy value).
* ``upper_gap``       -- the kernel-density upper bound minus the minimum:
  the kernel with second argument frozen at a minimizer is a valid
  probability density, and integrating ``f`` against it overshoots the
  minimum by at most the eigenvalue gap sum times the harmonic constant.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from possum import certify, gegenbauer
from possum.density import check_lemma43
from possum.domains import DomainMeasure, cubature, project_components
from possum.errors import (
    CertificateInfeasible,
    ConditioningFailure,
    LambdaTooSmall,
)
from possum.kernels import kernel_eval_many
from possum.poly import MultiPoly, sup_norm_estimate


def harmonic_constant_bound(domain: DomainMeasure, d: int) -> float:
    """Upper bound on the degree-component sup-norm blowup.

    The squared constant is at most the largest diagonal kernel component,
    which the closed forms bound by the largest value-at-one coefficient
    (of even index on the simplex).
    """
    if domain.kind not in ("ball", "simplex"):
        raise ValueError("harmonic constant applies to ball and simplex")
    n = domain.weight_param
    if domain.kind == "ball":
        worst = max(gegenbauer.gegenbauer_at_one(n, k) for k in range(d + 1))
    else:
        worst = max(
            gegenbauer.gegenbauer_at_one(n, 2 * k) for k in range(d + 1)
        )
    return float(np.sqrt(worst))


def harmonic_constant_empirical(
    domain: DomainMeasure,
    d: int,
    trials: int = 100,
    seed: int = 2024,
    samples: int = 2048,
) -> float:
    """Largest observed component blowup over random degree-d polynomials.

    A lower estimate of the true constant (sampled sup-norms, finitely many
    polynomials); reported alongside :func:`harmonic_constant_bound`.
    """
    from possum.domains import monomials_upto

    rng = np.random.default_rng(seed)
    monos = monomials_upto(domain.n, d)
    worst = 1.0
    for _ in range(trials):
        coefs = rng.standard_normal(len(monos))
        f = MultiPoly(domain.n, dict(zip(monos, coefs)))
        denom = sup_norm_estimate(f, domain, samples)
        if denom == 0.0:
            continue
        for part in project_components(f, domain):
            if part:
                ratio = sup_norm_estimate(part, domain, samples) / denom
                worst = max(worst, ratio)
    return float(worst)


def _inverse_gap_sum(domain: DomainMeasure, d: int, r: int) -> float:
    """Measured ``sum_{k<=d} |1 - 1/lambda_k|`` over the kernel eigenvalues."""
    sol = certify._density_for(domain, d, r)
    if domain.kind == "ball":
        lam = sol.lam[1 : d + 1]
    else:
        lam = sol.lam[2 : 2 * d + 1 : 2]
    return float(np.sum(np.abs(1.0 - 1.0 / lam)))


def closed_form_constant(domain: DomainMeasure, d: int) -> float:
    """The constant ``2 (n+1)^2 d^2 * gamma`` in the 1/r**2 rate."""
    n = domain.n
    return 2.0 * (n + 1) ** 2 * d**2 * harmonic_constant_bound(domain, d)


def theoretical_epsilon(
    n: int,
    d: int,
    r: int,
    domain: DomainMeasure,
    fmax_minus_fmin: float,
) -> float:
    """Provable certificate slack for a degree-d input of the given range.

    Uses the measured eigenvalue gaps of the actual density (tighter than
    the closed form); for ``r >= 2(n+1)d`` the result is bounded by
    ``closed_form_constant / r**2`` times the range. Raises
    :class:`LambdaTooSmall` below the provable regime when an eigenvalue
    drops under one half.
    """
    if domain.n != n:
        raise ValueError("dimension mismatch with the domain")
    if d == 0 or fmax_minus_fmin == 0.0:
        return 0.0
    gamma = harmonic_constant_bound(domain, d)
    return gamma * _inverse_gap_sum(domain, d, r) * fmax_minus_fmin


def empirical_epsilon(
    f: MultiPoly,
    lambda_shift: float,
    r: int,
    domain: DomainMeasure,
    bracket_hi: float,
    iterations: int = 20,
) -> float:
    """Bisected minimal feasible epsilon for the certificate synthesis.

    The predicate is exactly the synthesis feasibility test (nonnegativity
    of the inverse-transformed polynomial at the cubature nodes), evaluated
    without assembling the certificate. Shows how much smaller the actual
    constants are than the provable slack; not claimed to equal the
    hierarchy's exact value.
    """
    if f.degree == 0:
        return 0.0
    ctx = certify.feasibility_context(f, lambda_shift, r, domain)
    if certify.certificate_feasible(ctx, 0.0):
        return 0.0
    hi = max(bracket_hi, 1e-15)
    attempts = 0
    while not certify.certificate_feasible(ctx, hi) and attempts < 8:
        hi *= 4.0
        attempts += 1
    if not certify.certificate_feasible(ctx, hi):
        raise CertificateInfeasible(
            f"no feasible epsilon found up to {hi:.3e} at r={r}"
        )
    lo = 0.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if certify.certificate_feasible(ctx, mid):
            hi = mid
        else:
            lo = mid
    return hi


def minimizer_search(
    f: MultiPoly, domain: DomainMeasure, samples: int = 8192
) -> np.ndarray:
    """Heuristic minimizer: dense sampling plus coordinate refinement.

    Good enough to seed the upper-bound density; analytic minimizers should
    be supplied whenever they are known.
    """
    pts = np.vstack([domain.sample_points(samples), domain.special_points()])
    vals = f.evaluate_many(pts)
    best = pts[int(np.argmin(vals))].copy()
    best_val = float(vals.min())
    step = 0.25
    for _ in range(60):
        improved = False
        for i in range(domain.n):
            for sign in (+1.0, -1.0):
                cand = best.copy()
                cand[i] += sign * step
                if domain.kind == "ball":
                    norm = np.linalg.norm(cand)
                    if norm > 1.0:
                        cand /= norm
                else:
                    cand = np.clip(cand, 0.0, None)
                    total = cand.sum()
                    if total > 1.0:
                        cand /= total
                val = f.evaluate(cand)
                if val < best_val - 1e-15:
                    best, best_val = cand, val
                    improved = True
        if not improved:
            step *= 0.5
            if step < 1e-9:
                break
    return best


def upper_bound(
    f: MultiPoly, r: int, domain: DomainMeasure, xstar
) -> float:
    """Kernel-density upper bound on the minimum of ``f``.

    Freezes the kernel's second argument at ``xstar`` (the claimed
    minimizer), making a preordering member of unit mass; the bound is the
    integral of ``f`` against it, computed both as the eigenvalue-weighted
    component sum at ``xstar`` and by cubature, cross-checked to 1e-9.
    """
    xstar = domain.require_member(np.asarray(xstar, dtype=np.float64))
    d = f.degree
    if d == 0:
        return float(f.terms.get((0,) * f.nvars, 0.0))
    kernel = certify.build_kernel(domain, d, r)
    parts = project_components(f, domain)
    value = sum(
        kernel.eigenvalues[k] * part.evaluate(xstar)
        for k, part in enumerate(parts)
    )

    rule = cubature(domain, d + 2 * r)
    sigma_vals = kernel_eval_many(kernel, xstar, rule.points)
    mass = float(rule.weights @ sigma_vals)
    integral = float(rule.weights @ (sigma_vals * f.evaluate_many(rule.points)))
    scale = max(1.0, abs(value))
    if abs(integral - value) > 1e-9 * scale or abs(mass - 1.0) > 1e-10:
        raise ArithmeticError(
            f"upper-bound cross-check failed: component sum {value!r}, "
            f"cubature {integral!r}, density mass {mass!r}"
        )
    return float(value)


@dataclass
class BoundReport:
    """All bound data for one ``(f, domain, r)`` triple."""

    domain: DomainMeasure
    n: int
    d: int
    r: int
    gamma_bound: float
    eps_theoretical: float
    eps_empirical: float
    upper_gap: float

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.kind,
            "n": self.n,
            "d": self.d,
            "r": self.r,
            "gamma_bound": self.gamma_bound,
            "eps_theoretical": self.eps_theoretical,
            "eps_empirical": self.eps_empirical,
            "upper_gap": self.upper_gap,
            "closed_form_constant": closed_form_constant(self.domain, self.d)
            if self.d > 0
            else 0.0,
        }


def compute_bound_report(
    f: MultiPoly,
    domain: DomainMeasure,
    r: int,
    xstar=None,
    lambda_shift: float | None = None,
    fmax_minus_fmin: float | None = None,
) -> BoundReport:
    """Assemble the theoretical and measured bounds for one input."""
    d = f.degree
    if xstar is None:
        xstar = minimizer_search(f, domain)
    if lambda_shift is None:
        lambda_shift = float(f.evaluate(xstar))
    if fmax_minus_fmin is None:
        shifted = f - lambda_shift
        fmax_minus_fmin = sup_norm_estimate(shifted, domain)
    eps_th = theoretical_epsilon(domain.n, d, r, domain, fmax_minus_fmin)
    eps_emp = empirical_epsilon(
        f, lambda_shift, r, domain, bracket_hi=2.0 * eps_th
    )
    gap = upper_bound(f, r, domain, xstar) - float(f.evaluate(xstar))
    return BoundReport(
        domain=domain,
        n=domain.n,
        d=d,
        r=r,
        gamma_bound=harmonic_constant_bound(domain, d) if d else 1.0,
        eps_theoretical=eps_th,
        eps_empirical=eps_emp,
        upper_gap=gap,
    )


@dataclass
class StudyRow:
    r: int
    eps_empirical: float | None
    eps_theoretical: float | None
    upper_gap: float | None
    error: str | None = None


@dataclass
class StudyResult:
    """Convergence-study rows with fitted log-log slopes."""

    rows: list
    slope_eps_theoretical: float | None
    slope_upper_gap: float | None

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["r", "eps_empirical", "eps_theoretical", "upper_gap", "slope_window"]
        )
        slope = self.slope_eps_theoretical
        for row in self.rows:
            if row.error is not None:
                writer.writerow([row.r, "", "", "", row.error])
                continue
            writer.writerow(
                [
                    row.r,
                    _sig12(row.eps_empirical),
                    _sig12(row.eps_theoretical),
                    _sig12(row.upper_gap),
                    _sig12(slope) if slope is not None else "",
                ]
            )
        return out.getvalue()


def _sig12(x: float) -> str:
    return format(float(x), ".12g")


def _loglog_slope(rs: np.ndarray, values: np.ndarray) -> float | None:
    mask = np.asarray(values) > 0
    rs, values = np.asarray(rs, float)[mask], np.asarray(values, float)[mask]
    if len(rs) < 2:
        return None
    coef = np.polynomial.polynomial.polyfit(np.log(rs), np.log(values), 1)
    return float(coef[1])


def max_workers() -> int:
    env = os.environ.get("POSSUM_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def convergence_study(
    f: MultiPoly,
    domain: DomainMeasure,
    r_list,
    xstar=None,
    lambda_shift: float | None = None,
) -> StudyResult:
    """Bound decay over an ascending list of half-degrees.

    Rows are computed independently (thread pool capped by POSSUM_THREADS)
    and reported in order; rows whose computation fails record the error
    and are skipped by the slope fit. Slopes are fitted over the top half
    of the successful rows.
    """
    r_list = list(r_list)
    if sorted(r_list) != r_list:
        raise ValueError("r_list must be ascending")
    if xstar is None:
        xstar = minimizer_search(f, domain)
    if lambda_shift is None:
        lambda_shift = float(f.evaluate(xstar))
    shifted_range = sup_norm_estimate(f - lambda_shift, domain)

    def one_row(r: int) -> StudyRow:
        try:
            eps_th = theoretical_epsilon(
                domain.n, f.degree, r, domain, shifted_range
            )
            eps_emp = empirical_epsilon(
                f, lambda_shift, r, domain, bracket_hi=2.0 * eps_th
            )
            gap = upper_bound(f, r, domain, xstar) - float(f.evaluate(xstar))
            return StudyRow(r, eps_emp, eps_th, gap)
        except (
            LambdaTooSmall,
            ConditioningFailure,
            CertificateInfeasible,
            ArithmeticError,
        ) as exc:
            return StudyRow(r, None, None, None, error=type(exc).__name__)

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        rows = list(pool.map(one_row, r_list))

    good = [row for row in rows if row.error is None]
    top = good[len(good) // 2 :]
    slope_eps = _loglog_slope(
        [row.r for row in top], [row.eps_theoretical for row in top]
    )
    slope_gap = _loglog_slope(
        [row.r for row in top], [row.upper_gap for row in top]
    )
    return StudyResult(
        rows=rows,
        slope_eps_theoretical=slope_eps,
        slope_upper_gap=slope_gap,
    )
