"""Berezin transform on a generalized Bergman space of CP^n and its spectral weights.

The transform commutes with the unitary group, so it acts on the ``k``-th
Fubini-Study eigenspace by a scalar ``W_k``.  Three routes to ``W_k`` live here:

* :func:`w_formula` - the closed form built from a terminating 4F3 sum,
* :func:`w_oracle` - direct Jacobi projection of the kernel (ground truth),
* :func:`weierstrass_w` - the infinite product valid for ``n = 1, m = 0``.

Eigenvalues are indexed by the integer ``k``; ``4k(k+n)`` is carried as a label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .geometry import as_point, cos2_fs, radial_integral, sample_fs, total_mass
from .specfun import (
    DegenerateSeriesError,
    JacobiIndex,
    KdFParams,
    gamma_ratio,
    gauss_jacobi_rule,
    _exact_poch,
    hyp_pfq_exact,
    jacobi_norm,
    jacobi_p,
    jacobi_p_at_one,
    kdf_f2222,
    pochhammer,
    rgamma,
)
from .spectra import LevelParams, laplacian_eigenvalue, norm_const_c, spectral_function_psi


def berezin_kernel(p: LevelParams, x):
    """Kernel of the Berezin transform as a function of ``x = cos 2 d_FS``.

    Equal to ``K(x)**2 / N`` with ``K`` the reproducing kernel.
    """
    x = np.asarray(x, dtype=float)
    idx = p.jacobi
    pm = np.asarray(jacobi_p(idx, x))
    val = norm_const_c(p) / jacobi_p_at_one(idx) * ((1.0 + x) / 2.0) ** p.two_nu * pm * pm
    return float(val) if val.ndim == 0 else val


def kernel_degree(p: LevelParams) -> int:
    """Polynomial degree of :func:`berezin_kernel` in ``x``."""
    return p.two_nu + 2 * p.m


def r_inverse(n: int, Lambda: float) -> float:
    """Invert ``Lambda = 4k(k+n)`` for ``k``: ``(sqrt(n^2 + Lambda) - n) / 2``."""
    if Lambda < 0:
        raise ValueError("Lambda must be nonnegative")
    # n^2 + 4k(k+n) = (n+2k)^2, so isqrt is exact on the integer lattice
    if float(Lambda).is_integer():
        s = math.isqrt(n * n + int(Lambda))
        if s * s == n * n + int(Lambda):
            return (s - n) / 2
    return (math.sqrt(n * n + Lambda) - n) / 2


def gamma_factor(p: LevelParams) -> float:
    n, tn, m = p.n, p.two_nu, p.m
    return ((2 * m + tn + n) * pochhammer(m + tn + 1, n - 1)
            * math.factorial(tn + m) ** 2 * math.factorial(n - 1)
            / (pochhammer(n, m) * math.factorial(m)))


def _w_prefactor(p: LevelParams, k: float) -> float:
    # Gamma(k+1) / (Gamma(n+k) Gamma(2nu-k+1) Gamma(n+k+2nu+1))
    n, tn = p.n, p.two_nu
    return gamma_factor(p) * gamma_ratio([k + 1], [n + k, n + k + tn + 1]) * rgamma(tn - k + 1)


def w_formula(p: LevelParams, k: int | float) -> float:
    """Closed-form weight ``W(4k(k+n))`` through the terminating 4F3 sum.

    Vanishes identically for integer ``k > 2 nu`` because of the
    ``1/Gamma(2nu - k + 1)`` prefactor.  Raises :class:`DegenerateSeriesError`
    when a denominator Pochhammer symbol vanishes while the prefactor does not.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    n, tn, m = p.n, p.two_nu, p.m
    pref = _w_prefactor(p, k)
    if pref == 0.0:
        return 0.0
    total = Fraction(0)
    for s in range(m + 1):
        den_poch = _exact_poch(Fraction(tn - k + 1), s) * _exact_poch(Fraction(n + tn + k + 1), s)
        if den_poch == 0:
            raise DegenerateSeriesError(f"(2nu-k+1)_s vanishes at s={s} for {p}, k={k}")
        outer = (_exact_poch(Fraction(-m), s) * _exact_poch(Fraction(tn + 1), s)
                 * _exact_poch(Fraction(tn + m + n), s) / (math.factorial(s) * den_poch))
        if outer == 0:
            continue
        inner = hyp_pfq_exact(
            (-m, tn + 1 + s, tn + 1 + s, tn + m + n),
            (tn - k + 1 + s, n + tn + 1 + k + s, tn + 1),
            1,
        )
        total += outer * inner
    return pref * float(total)


def w_formula_at(p: LevelParams, Lambda: float) -> float:
    """``W`` as a function of the eigenvalue ``Lambda`` of minus the Laplacian."""
    return w_formula(p, r_inverse(p.n, Lambda))


def w_closed_n1m0(two_nu: int, k: int) -> float:
    """Gamma closed form of the weight for ``n = 1, m = 0``."""
    g = gamma_factor(LevelParams(1, two_nu, 0))
    return g * rgamma(two_nu - k + 1) * rgamma(k + two_nu + 2)


def oracle_order(p: LevelParams, k: int) -> int:
    return (kernel_degree(p) + k) // 2 + 2


def w_oracle(p: LevelParams, k: int) -> float:
    """Weight ``W_k`` by projecting the kernel onto the ``k``-th eigenspace.

    Solves ``berezin_kernel = sum_k W_k psi_n(k; .)`` coefficientwise with an
    exact Gauss-Jacobi rule (the integrand is a polynomial).
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    n = p.n
    idx = JacobiIndex(k, n - 1, 0)
    rule = gauss_jacobi_rule(oracle_order(p, k), n - 1, 0)
    coeff = rule.integrate(berezin_kernel(p, rule.nodes) * jacobi_p(idx, rule.nodes))
    coeff /= jacobi_norm(idx)
    return coeff * math.exp(
        n * math.log(math.pi) + math.lgamma(k + 1) - math.lgamma(n + k)
    ) / (2 * k + n)


@dataclass
class WRow:
    k: int
    Lambda: int
    w_formula: float | None
    w_oracle: float
    residual: float | None
    error: str | None = None

    def as_dict(self) -> dict:
        return {"k": self.k, "lambda": self.Lambda, "w_formula": self.w_formula,
                "w_oracle": self.w_oracle, "residual": self.residual}


@dataclass
class WTable:
    params: LevelParams
    rows: list[WRow] = field(default_factory=list)

    @property
    def termination_report(self) -> float:
        """Largest ``|w_oracle|`` beyond ``k = 2 nu``; the closed form predicts 0."""
        tail = [abs(r.w_oracle) for r in self.rows if r.k > self.params.two_nu]
        return max(tail, default=0.0)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def build_wtable(p: LevelParams, kmax: int | None = None) -> WTable:
    kmax = kernel_degree(p) + 2 if kmax is None else kmax
    table = WTable(p)
    for k in range(kmax + 1):
        wo = w_oracle(p, k)
        try:
            wf = w_formula(p, k)
            err = None
        except DegenerateSeriesError as exc:
            wf, err = None, str(exc)
        res = None if wf is None else abs(wf - wo)
        table.rows.append(WRow(k, laplacian_eigenvalue(p.n, k), wf, wo, res, err))
    return table


def spectral_synthesis(n: int, coeffs: Mapping[int, float], x):
    """``sum_k coeffs[k] * psi_n(k; x)``."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for k, c in sorted(coeffs.items()):
        if c != 0.0:
            total = total + c * np.asarray(spectral_function_psi(n, k, x))
    return float(total) if total.ndim == 0 else total


def weierstrass_w(two_nu: int, k: int, P: int) -> float:
    """Partial product ``prod_{p=1}^{P} (1 - k(k+1) / ((p+2nu)(p+2nu+1)))``."""
    if P < 1:
        raise ValueError("need at least one factor")
    lam = k * (k + 1)
    out = 1.0
    if lam == 0:
        return out
    chunk = 1 << 16
    logsum = []
    sign = 1.0
    for start in range(1, P + 1, chunk):
        p = np.arange(start, min(P, start + chunk - 1) + 1, dtype=float)
        f = 1.0 - lam / ((p + two_nu) * (p + two_nu + 1))
        if np.any(f == 0.0):
            return 0.0
        sign *= float(np.prod(np.sign(f)))
        logsum.append(float(np.sum(np.log1p(-lam / ((p + two_nu) * (p + two_nu + 1)))))
                      if np.all(f > 0) else float(np.sum(np.log(np.abs(f)))))
    return sign * math.exp(math.fsum(logsum))


def weierstrass_telescoped(two_nu: int, k: int, P: int | None = None) -> float:
    """Telescoped form of :func:`weierstrass_w`; ``P=None`` gives the infinite product.

    Each factor is ``(p+2nu-k)(p+2nu+1+k) / ((p+2nu)(p+2nu+1))``.
    """
    a = two_nu
    if k > a:
        # the factor with p = k - 2nu vanishes
        if P is None or P >= k - a:
            return 0.0
    head = gamma_ratio([a + 1, a + 2], [a + 1 - k, a + 2 + k]) if k <= a else None
    if P is None:
        return head
    if head is None:
        prod = 1.0
        for p in range(1, P + 1):
            prod *= (p + a - k) * (p + a + 1 + k) / ((p + a) * (p + a + 1))
        return prod
    # Gamma ratio of the tail is the finite product (A+2)_k / (A+1-k)_k, A = P + 2nu
    A = P + a
    return head * pochhammer(A + 2, k) / pochhammer(A + 1 - k, k)


def linearization_coefficient(alpha1: float, beta: float, alpha: float, mu: int, m: int, k: int) -> float:
    """The ``k``-th coefficient of ``t^mu [P_m^{(alpha1,beta)}(1-2t)]^2`` in the basis
    ``P_k^{(alpha, beta)}(1-2t)`` as given by the Kampe de Feriet linearization.

    Only meaningful for ``k <= mu``; beyond that the expression is ``0 * inf``.
    """
    if k > mu:
        raise DegenerateSeriesError(f"k={k} exceeds mu={mu}: (-mu)_k vanishes against a pole")
    binom = math.exp(math.lgamma(alpha1 + m + 1) - math.lgamma(alpha1 + 1) - math.lgamma(m + 1))
    pref = pochhammer(alpha + 1, mu) * binom ** 2
    term = ((alpha + beta + 2 * k + 1) * pochhammer(-mu, k)
            / (pochhammer(alpha + 1, k) * pochhammer(alpha + beta + k + 1, mu + 1)))
    kdf = kdf_f2222(KdFParams(
        a1=mu + 1, a2=alpha + mu + 1,
        b1=-m, b2=alpha1 + beta + m + 1, b3=-m, b4=alpha1 + beta + m + 1,
        c1=mu - k + 1, c2=alpha + beta + mu + 2 + k,
        d1=alpha1 + 1, d2=alpha1 + 1,
    ))
    return pref * term * kdf


# exact rational Jacobi machinery for the linearization oracle

def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _jacobi_coeffs_exact(k: int, alpha: Fraction, beta: Fraction) -> list:
    """Monomial coefficients in ``t`` of ``P_k^{(alpha,beta)}(1-2t)``.

    Uses ``P_k(1-2t) = sum_j (k+alpha+beta+1)_j (alpha+j+1)_{k-j} / (j!(k-j)!) (-t)^j``.
    """
    def rising(a, j):
        out = Fraction(1)
        for i in range(j):
            out *= a + i
        return out
    coeffs = []
    for j in range(k + 1):
        c = rising(k + alpha + beta + 1, j) * rising(alpha + j + 1, k - j)
        c /= math.factorial(j) * math.factorial(k - j)
        coeffs.append(c * (-1) ** j)
    return coeffs


def exact_jacobi_expansion(poly_t: list, alpha, beta) -> list:
    """Coefficients of a polynomial in ``t`` in the basis ``P_k^{(alpha,beta)}(1-2t)``.

    Exact triangular solve from the top degree down.
    """
    alpha, beta = Fraction(alpha), Fraction(beta)
    rem = [Fraction(c) for c in poly_t]
    deg = len(rem) - 1
    out = [Fraction(0)] * (deg + 1)
    basis = {k: _jacobi_coeffs_exact(k, alpha, beta) for k in range(deg + 1)}
    for k in range(deg, -1, -1):
        lead = basis[k][k]
        c = rem[k] / lead
        out[k] = c
        for j, bj in enumerate(basis[k]):
            rem[j] -= c * bj
    return out


@dataclass(frozen=True)
class LinearizationCheck:
    max_residual_low: float
    residual_tail: float
    exact: tuple
    claimed: tuple


def linearization_check(alpha1: int, beta: int, mu: int, m: int, alpha: int = 0) -> LinearizationCheck:
    """Compare the Kampe de Feriet linearization with an exact rational projection.

    ``max_residual_low`` is the worst relative mismatch over ``k <= mu``;
    ``residual_tail`` sums ``|c_k|`` over ``k > mu`` of the exact expansion.
    """
    pm = _jacobi_coeffs_exact(m, Fraction(alpha1), Fraction(beta))
    lhs = [Fraction(0)] * mu + _poly_mul(pm, pm)
    exact = exact_jacobi_expansion(lhs, alpha, beta)
    claimed = []
    worst = 0.0
    for k in range(mu + 1):
        c = linearization_coefficient(alpha1, beta, alpha, mu, m, k)
        claimed.append(c)
        ref = float(exact[k])
        worst = max(worst, abs(c - ref) / max(1.0, abs(ref)))
    tail = float(sum(abs(c) for c in exact[mu + 1:]))
    return LinearizationCheck(worst, tail, tuple(float(c) for c in exact), tuple(claimed))


@dataclass(frozen=True)
class IntegrationMethod:
    """``radial`` (Gauss-Jacobi on the chord variable) or ``monte_carlo``."""

    tag: str
    order: int = 40
    seed: int = 0
    count: int = 1_000_000

    def __post_init__(self):
        if self.tag not in ("radial", "monte_carlo"):
            raise ValueError(f"unknown integration method {self.tag!r}")


@dataclass(frozen=True)
class TransformResult:
    value: float
    stderr: float


class RadialObservable:
    """An observable ``w -> g(cos 2d(w, center))`` that the radial method can integrate."""

    def __init__(self, g: Callable, center):
        self.g = g
        self.center = as_point(center)

    def __call__(self, w):
        return self.g(cos2_fs(w, self.center))


def berezin_apply(p: LevelParams, f: Callable, z, method: IntegrationMethod) -> TransformResult:
    """Evaluate ``B[f](z) = int berezin_kernel(cos 2d(z, w)) f(w) dmu_n(w)``.

    ``f`` takes an ``(N, n)`` array of points and returns ``N`` values.  The
    radial method needs ``f`` to be a :class:`RadialObservable` centred at ``z``.
    """
    z = as_point(z)
    if z.shape[-1] != p.n:
        raise ValueError("point dimension does not match the level")
    if method.tag == "radial":
        if not isinstance(f, RadialObservable):
            raise ValueError("radial method needs an observable depending only on the distance to z")
        if f.center.shape != z.shape or not np.allclose(f.center, z, rtol=0, atol=1e-12):
            raise ValueError("radial method needs the observable centred at z")
        order = max(method.order, kernel_degree(p) // 2 + 2)
        val = radial_integral(p.n, lambda x: berezin_kernel(p, x) * f.g(x), order=order)
        return TransformResult(val, 0.0)
    w = sample_fs(p.n, method.seed, method.count)
    vals = berezin_kernel(p, cos2_fs(z, w)) * np.asarray(f(w), dtype=float)
    mass = total_mass(p.n)
    mean = math.fsum(vals) / len(vals)
    se = float(np.std(vals, ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else float("inf")
    return TransformResult(mass * mean, mass * se)
