"""Classical special functions on which the Berezin weights are built.

Inputs and outputs are doubles.  Terminating series are summed in exact
rational arithmetic (every double is a dyadic rational) and rounded once at
the end: the sums cancel heavily, and term-wise rounding would cost several
digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

_INT_TOL = 1e-12
_DOMAIN_TOL = 1e-12


class DegenerateSeriesError(ArithmeticError):
    """A denominator Pochhammer symbol vanishes inside the summation range."""


class QuadratureError(RuntimeError):
    """The node solver for a Gauss-Jacobi rule failed."""


def is_nonpositive_integer(a: float) -> bool:
    return a <= _INT_TOL and abs(a - round(a)) < _INT_TOL


def pochhammer(a: float, k: int) -> float:
    """Rising factorial ``a (a+1) ... (a+k-1)``; ``(a)_0 = 1``."""
    if k < 0:
        raise ValueError(f"pochhammer index must be nonnegative, got {k}")
    out = 1.0
    for j in range(k):
        out *= a + j
        if out == 0.0:
            return 0.0
    if not math.isfinite(out):
        raise OverflowError(f"({a})_{k} exceeds the double range")
    return out


def rgamma(x: float) -> float:
    """``1/Gamma(x)``, exactly zero at the poles ``x = 0, -1, -2, ...``."""
    if is_nonpositive_integer(x):
        return 0.0
    sign, lg = lgamma_signed(x)
    return sign * math.exp(-lg)


def lgamma_signed(x: float) -> tuple[float, float]:
    """Return ``(sign Gamma(x), log|Gamma(x)|)``.

    Raises ``ValueError`` at the poles of Gamma.
    """
    if is_nonpositive_integer(x):
        raise ValueError(f"Gamma has a pole at {x}")
    sign = 1.0 if x > 0 or math.floor(x) % 2 == 0 else -1.0
    return sign, math.lgamma(x)


def gamma_ratio(num: Sequence[float], den: Sequence[float]) -> float:
    """``prod Gamma(num) / prod Gamma(den)`` through log-gamma differences.

    A pole in the denominator gives exactly 0; a pole in the numerator raises.
    """
    if any(is_nonpositive_integer(d) for d in den):
        return 0.0
    sign, logv = 1.0, 0.0
    for a in num:
        s, lg = lgamma_signed(a)
        sign *= s
        logv += lg
    for b in den:
        s, lg = lgamma_signed(b)
        sign *= s
        logv -= lg
    return sign * math.exp(logv)


@dataclass(frozen=True)
class JacobiIndex:
    degree: int
    alpha: float
    beta: float

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"Jacobi degree must be >= 0, got {self.degree}")
        if self.alpha <= -1 or self.beta <= -1:
            raise ValueError(
                f"Jacobi parameters must exceed -1, got ({self.alpha}, {self.beta})"
            )


def jacobi_p(idx: JacobiIndex, x):
    """Evaluate ``P_k^{(alpha, beta)}(x)`` by the three-term recurrence.

    ``x`` may be a scalar or an array; the return type follows it.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0 + _DOMAIN_TOL):
        raise ValueError("Jacobi argument outside [-1, 1]")
    k, a, b = idx.degree, float(idx.alpha), float(idx.beta)
    p_prev = np.ones_like(xa)
    if k == 0:
        return p_prev if xa.ndim else float(p_prev)
    p = (a + 1.0) + (a + b + 2.0) * (xa - 1.0) / 2.0
    for j in range(2, k + 1):
        s = 2 * j + a + b
        c1 = 2 * j * (j + a + b) * (s - 2)
        c2 = (s - 1) * (s * (s - 2) * xa + a * a - b * b)
        c3 = 2 * (j + a - 1) * (j + b - 1) * s
        p_prev, p = p, (c2 * p - c3 * p_prev) / c1
    return p if xa.ndim else float(p)


def jacobi_p_at_one(idx: JacobiIndex) -> float:
    """``P_k^{(alpha, beta)}(1) = (alpha+1)_k / k!``."""
    return pochhammer(idx.alpha + 1.0, idx.degree) / math.factorial(idx.degree)


def jacobi_norm(idx: JacobiIndex) -> float:
    """Squared L2 norm of ``P_k^{(alpha,beta)}`` against ``(1-x)^alpha (1+x)^beta``."""
    k, a, b = idx.degree, float(idx.alpha), float(idx.beta)
    logv = (a + b + 1) * math.log(2.0)
    logv += math.lgamma(k + a + 1) + math.lgamma(k + b + 1)
    logv -= math.lgamma(k + a + b + 1) + math.lgamma(k + 1)
    return math.exp(logv) / (2 * k + a + b + 1)


def _termination_index(upper: Sequence[float]) -> int:
    orders = [int(round(-a)) for a in upper if is_nonpositive_integer(a)]
    if not orders:
        raise ValueError(f"series with upper parameters {list(upper)} does not terminate")
    return min(orders)


def _exact_poch(a: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for j in range(k):
        out *= a + j
    return out


def hyp_pfq_exact(upper: Sequence[float], lower: Sequence[float], x) -> Fraction:
    """Exact rational value of a terminating ``pFq`` with dyadic parameters."""
    top = _termination_index(upper)
    for b in lower:
        if is_nonpositive_integer(b) and round(-b) < top:
            raise DegenerateSeriesError(
                f"lower parameter {b} vanishes inside the range 0..{top}"
            )
    up = [Fraction(a) for a in upper]
    lo = [Fraction(b) for b in lower]
    xf = Fraction(x)
    total = t = Fraction(1)
    for j in range(top):
        num = math.prod((a + j for a in up), start=Fraction(1))
        den = math.prod((b + j for b in lo), start=Fraction(1))
        t = t * num / den * xf / (j + 1)
        total += t
    return total


def hyp_pfq_terminating(upper: Sequence[float], lower: Sequence[float], x: float) -> float:
    """Sum a terminating ``pFq(upper; lower; x)``.

    The series must terminate through a nonpositive integer among ``upper``.
    Any lower parameter whose Pochhammer symbol vanishes before the last term
    raises :class:`DegenerateSeriesError`.
    """
    return float(hyp_pfq_exact(upper, lower, x))


def hyp_2f1_terminating(a: float, b: float, c: float, x: float) -> float:
    return hyp_pfq_terminating((a, b), (c,), x)


def hyp_4f3_terminating(upper: Sequence[float], lower: Sequence[float], x: float) -> float:
    if len(upper) != 4 or len(lower) != 3:
        raise ValueError("4F3 needs four upper and three lower parameters")
    return hyp_pfq_terminating(upper, lower, x)


@dataclass(frozen=True)
class KdFParams:
    """Parameters of the Kampe de Feriet function of type 2:2,2 / 2:1,1 at (1, 1).

    ``b1, b2`` and ``d1`` pair with the ``l`` index, ``b3, b4`` and ``d2`` with ``s``.
    """

    a1: float
    a2: float
    b1: float
    b2: float
    b3: float
    b4: float
    c1: float
    c2: float
    d1: float
    d2: float

    def orders(self) -> tuple[int, int]:
        return (_termination_index((self.b1, self.b2)),
                _termination_index((self.b3, self.b4)))


def _check_denominator(params: Sequence[float], upto: int, label: str) -> None:
    # (c)_j for j <= upto needs c + i != 0 for i < upto
    for c in params:
        if is_nonpositive_integer(c) and round(-c) < upto:
            raise DegenerateSeriesError(f"{label} parameter {c} vanishes before index {upto}")


def _kdf_fractions(p: KdFParams) -> dict:
    return {k: Fraction(v) for k, v in vars(p).items()}


def kdf_f2222(p: KdFParams) -> float:
    """Terminating double series

    sum_{l,s} (a1)_{l+s} (a2)_{l+s} / ((c1)_{l+s} (c2)_{l+s})
              * (b1)_l (b2)_l (b3)_s (b4)_s / ((d1)_l (d2)_s l! s!)
    """
    L, S = p.orders()
    _check_denominator((p.c1, p.c2), L + S, "c")
    _check_denominator((p.d1,), L, "d1")
    _check_denominator((p.d2,), S, "d2")
    f = _kdf_fractions(p)
    total = Fraction(0)
    for s in range(S + 1):
        for l in range(L + 1):
            num = (_exact_poch(f["a1"], l + s) * _exact_poch(f["a2"], l + s)
                   * _exact_poch(f["b1"], l) * _exact_poch(f["b2"], l)
                   * _exact_poch(f["b3"], s) * _exact_poch(f["b4"], s))
            if num == 0:
                continue
            den = (_exact_poch(f["c1"], l + s) * _exact_poch(f["c2"], l + s)
                   * _exact_poch(f["d1"], l) * _exact_poch(f["d2"], s)
                   * math.factorial(l) * math.factorial(s))
            total += num / den
    return float(total)


def kdf_f2222_nested(p: KdFParams) -> float:
    """Same value as :func:`kdf_f2222`, organised as an outer ``s`` sum of 4F3 values.

    Uses ``(a)_{l+s} = (a+s)_l (a)_s`` to split the coupled Pochhammers.
    """
    L, S = p.orders()
    _check_denominator((p.c1, p.c2), L + S, "c")
    f = _kdf_fractions(p)
    total = Fraction(0)
    for s in range(S + 1):
        outer_num = (_exact_poch(f["a1"], s) * _exact_poch(f["a2"], s)
                     * _exact_poch(f["b3"], s) * _exact_poch(f["b4"], s))
        if outer_num == 0:
            continue
        outer = outer_num / (_exact_poch(f["c1"], s) * _exact_poch(f["c2"], s)
                             * _exact_poch(f["d2"], s) * math.factorial(s))
        inner = hyp_pfq_exact(
            (p.b1, p.b2, p.a1 + s, p.a2 + s), (p.c1 + s, p.c2 + s, p.d1), 1
        )
        total += outer * inner
    return float(total)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Jacobi nodes and weights for ``(1-x)^alpha (1+x)^beta`` on [-1, 1]."""

    alpha: float
    beta: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        """Weighted sum of function values sampled at ``nodes``."""
        return math.fsum(np.broadcast_to(values, self.nodes.shape) * self.weights)


def gauss_jacobi_rule(size: int, alpha: float, beta: float) -> QuadratureRule:
    """Golub-Welsch construction from the symmetric Jacobi matrix."""
    if size < 1:
        raise ValueError("quadrature size must be positive")
    if alpha <= -1 or beta <= -1:
        raise ValueError("weight exponents must exceed -1")
    a, b = float(alpha), float(beta)
    ab = a + b
    i = np.arange(size, dtype=float)
    s = 2 * i + ab
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = np.where(np.abs(s * (s + 2)) > 0, (b * b - a * a) / (s * (s + 2)), 0.0)
    if size >= 1 and abs(ab + 2) > 0:
        diag[0] = (b - a) / (ab + 2)
    j = np.arange(1, size, dtype=float)
    sj = 2 * j + ab
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.sqrt(4 * j * (j + a) * (j + b) * (j + ab) / (sj * sj * (sj * sj - 1)))
    if size > 1 and abs(ab + 1) < 1e-15:
        # j=1 entry is 0/0 when alpha + beta = -1; take the limit
        off[0] = math.sqrt(4 * (1 + a) * (1 + b) / ((2 + ab) ** 2 * (3 + ab)))
    jac = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    try:
        nodes, vecs = np.linalg.eigh(jac)
    except np.linalg.LinAlgError as exc:
        raise QuadratureError(f"eigensolver failed for size={size}") from exc
    if not np.all(np.isfinite(nodes)):
        raise QuadratureError(f"non-finite nodes for size={size}")
    mu0 = math.exp((ab + 1) * math.log(2.0) + math.lgamma(a + 1) + math.lgamma(b + 1)
                   - math.lgamma(ab + 2))
    weights = mu0 * vecs[0, :] ** 2
    return QuadratureRule(a, b, nodes.copy(), weights.copy())
