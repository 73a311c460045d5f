"""Spectral data of the magnetic Laplacian on CP^n and of the Fubini-Study Laplacian."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import as_point, cos2_fs
from .specfun import (
    JacobiIndex,
    hyp_2f1_terminating,
    jacobi_p,
    jacobi_p_at_one,
    pochhammer,
)


@dataclass(frozen=True)
class LevelParams:
    """A generalized Bergman space: dimension ``n``, field ``two_nu = 2 nu``, level ``m``."""

    n: int
    two_nu: int
    m: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.two_nu < 0:
            raise ValueError(f"two_nu must be >= 0, got {self.two_nu}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")

    @property
    def nu(self) -> float:
        return self.two_nu / 2.0

    @property
    def lam(self) -> float:
        """Spectral parameter ``2(m + nu) + n`` labelling the eigenspace."""
        return 2 * self.m + self.two_nu + self.n

    @property
    def jacobi(self) -> JacobiIndex:
        return JacobiIndex(self.m, self.n - 1, self.two_nu)

    def as_dict(self) -> dict:
        return {"n": self.n, "two_nu": self.two_nu, "m": self.m}


def laplacian_eigenvalue(n: int, k: int) -> int:
    """Eigenvalue ``4k(k+n)`` of minus the Fubini-Study Laplacian."""
    return 4 * k * (k + n)


def expected_level_eigenvalue(p: LevelParams) -> float:
    """Eigenvalue ``n^2 - lam^2 + 4 nu^2`` of the magnetic operator on level ``p``."""
    return p.n ** 2 - p.lam ** 2 + p.two_nu ** 2


def dim_spherical(n: int, p: int, q: int) -> int:
    """Dimension of the spherical harmonics of bidegree ``(p, q)`` on S^{2n-1}."""
    if n < 2:
        raise ValueError("dimension formula requires n >= 2")
    if p < 0 or q < 0:
        raise ValueError("bidegrees must be nonnegative")
    f = math.factorial
    num = (p + q + n - 1) * f(p + n - 2) * f(q + n - 2)
    den = f(p) * f(q) * f(n - 1) * f(n - 2)
    assert num % den == 0
    return num // den


def dim_level(p: LevelParams) -> int:
    n, tn, m = p.n, p.two_nu, p.m
    val = (2 * m + n + tn) * math.exp(
        math.lgamma(m + n) + math.lgamma(m + n + tn)
        - math.log(n) - 2 * math.lgamma(n) - math.lgamma(m + 1) - math.lgamma(m + tn + 1)
    )
    r = round(val)
    if r < 1 or abs(r - val) >= 1e-6 * max(1.0, val):
        raise ArithmeticError(f"level dimension {val} for {p} is not a positive integer")
    return int(r)


def norm_const_c(p: LevelParams) -> float:
    n, tn, m = p.n, p.two_nu, p.m
    return (2 * m + tn + n) * math.exp(
        math.lgamma(m + n + tn) - n * math.log(math.pi) - math.lgamma(m + tn + 1)
    )


def normalization_N(p: LevelParams) -> float:
    """Diagonal value of the reproducing kernel, constant over CP^n."""
    return norm_const_c(p) * jacobi_p_at_one(p.jacobi)


def reproducing_kernel(p: LevelParams, x):
    """Reproducing kernel as a function of the chord variable ``x = cos 2d``."""
    x = np.asarray(x, dtype=float)
    val = norm_const_c(p) * ((1.0 + x) / 2.0) ** p.nu * jacobi_p(p.jacobi, x)
    return float(val) if val.ndim == 0 else val


def spectral_function_psi(n: int, k: int, x):
    """Kernel of the orthogonal projector onto the ``k``-th Fubini-Study eigenspace.

    ``(2k+n) Gamma(n+k) / (pi^n k!) * P_k^{(n-1,0)}(x)``.  Its value at ``x = 1``
    is the eigenspace dimension divided by the volume of CP^n.
    """
    idx = JacobiIndex(k, n - 1, 0)
    const = (2 * k + n) * math.exp(math.lgamma(n + k) - n * math.log(math.pi) - math.lgamma(k + 1))
    val = const * np.asarray(jacobi_p(idx, x))
    return float(val) if val.ndim == 0 else val


def spectral_function_psi_printed(n: int, k: int, x):
    """Variant normalised by ``P_k^{(n-1,0)}(1)``.

    Differs from :func:`spectral_function_psi` by the factor ``(n)_k / k!``, so
    it is idempotent only for ``n = 1``.  Kept for the verification report.
    """
    idx = JacobiIndex(k, n - 1, 0)
    return spectral_function_psi(n, k, x) / jacobi_p_at_one(idx)


def eigenspace_dim(n: int, k: int) -> int:
    """Dimension of the ``k``-th Fubini-Study eigenspace on CP^n."""
    b = math.comb(n + k - 1, k)
    num = (2 * k + n) * b * b
    assert num % n == 0
    return num // n


def eigenfunction_radial(p: LevelParams, pdeg: int, qdeg: int, z) -> complex:
    """One ``(pdeg, qdeg)`` term of the eigenfunction expansion on level ``p``.

    The harmonic factor is ``z1^pdeg conj(z2)^qdeg`` for ``n >= 2``, and
    ``z^pdeg`` or ``conj(z)^qdeg`` when ``n = 1``.
    """
    z = as_point(z)
    if not (0 <= pdeg <= p.m and 0 <= qdeg <= p.m + p.two_nu):
        raise ValueError(f"(p, q) = ({pdeg}, {qdeg}) outside the range of level {p}")
    if z.shape[-1] != p.n:
        raise ValueError("point dimension does not match the level")
    if p.n == 1:
        if pdeg and qdeg:
            raise ValueError("for n = 1 only z^p or conj(z)^q are harmonic")
        h = z[0] ** pdeg * np.conj(z[0]) ** qdeg
    else:
        h = z[0] ** pdeg * np.conj(z[1]) ** qdeg
    r2 = float(np.sum(np.abs(z) ** 2))
    f21 = hyp_2f1_terminating(pdeg - p.m, qdeg - p.m - p.two_nu, p.n + pdeg + qdeg, -r2)
    return complex((1.0 + r2) ** (-(p.m + p.nu)) * f21 * h)


def apply_delta_nu_fd(p: LevelParams, f: Callable, z, h: float) -> complex:
    """Apply the magnetic Laplacian to ``f`` at ``z`` by central differences.

    Wirtinger derivatives are assembled from real partials in the 2n real
    coordinates ``z_j = x_j + i y_j``.  ``f`` maps a point of C^n to a complex
    number.  Truncation error is O(h^2).
    """
    z = as_point(z)
    n = z.shape[-1]
    nu = p.nu
    # real coordinate directions: e_j for x_j, i e_j for y_j
    dirs = [np.eye(n, dtype=complex)[j] for j in range(n)]
    dirs += [1j * np.eye(n, dtype=complex)[j] for j in range(n)]
    f0 = complex(f(z))

    def d1(u):
        return (complex(f(z + h * u)) - complex(f(z - h * u))) / (2 * h)

    def d2(u, v):
        if u is v:
            return (complex(f(z + h * u)) - 2 * f0 + complex(f(z - h * u))) / h ** 2
        return (complex(f(z + h * u + h * v)) - complex(f(z + h * u - h * v))
                - complex(f(z - h * u + h * v)) + complex(f(z - h * u - h * v))) / (4 * h * h)

    H = np.empty((2 * n, 2 * n), dtype=complex)
    for a in range(2 * n):
        for b in range(a, 2 * n):
            H[a, b] = H[b, a] = d2(dirs[a], dirs[b])
    grad = np.array([d1(u) for u in dirs])
    fx, fy = grad[:n], grad[n:]

    second = 0.0 + 0.0j
    for i in range(n):
        for j in range(n):
            # d^2 f / dz_i dzbar_j
            wirt = 0.25 * (H[i, j] + H[n + i, n + j] + 1j * (H[i, n + j] - H[n + i, j]))
            coef = (1.0 if i == j else 0.0) + z[i] * np.conj(z[j])
            second += coef * wirt
    # sum_j z_j d/dz_j - zbar_j d/dzbar_j = i (y d/dx - x d/dy)
    rot = 1j * np.sum(z.imag * fx - z.real * fy)
    r2 = float(np.sum(np.abs(z) ** 2))
    return complex(4 * (1 + r2) * (second + nu * rot - nu ** 2 * f0) + 4 * nu ** 2 * f0)


def kernel_section(p: LevelParams, base=None) -> Callable:
    """``w -> K(cos 2d(w, base))``, a reproducing-kernel section through ``base``."""
    base = np.zeros(p.n, dtype=complex) if base is None else as_point(base)
    return lambda w: reproducing_kernel(p, cos2_fs(w, base))


def fd_step(z) -> float:
    return 1e-3 * (1.0 + float(np.linalg.norm(as_point(z))))


@dataclass(frozen=True)
class EigenProbe:
    E_hat: float
    spread: float
    ratios: tuple
    skipped: int


def eigenvalue_ratio(p: LevelParams, f: Callable, z, h: float | None = None) -> complex:
    z = as_point(z)
    return apply_delta_nu_fd(p, f, z, fd_step(z) if h is None else h) / complex(f(z))


def eigenvalue_probe(p: LevelParams, sample_points: Sequence, f: Callable | None = None,
                     h: float | None = None, min_rel: float = 0.05) -> EigenProbe:
    """Median and spread of ``(Delta_nu f) / f`` over ``sample_points``.

    ``f`` defaults to the reproducing-kernel section through the origin.
    The ratio is ill-conditioned near the nodal set of ``f``: the difference
    error is absolute, so points with ``|f|`` below ``min_rel`` times the
    largest sampled ``|f|`` are skipped (and counted in ``skipped``).
    """
    if len(sample_points) < 3:
        raise ValueError("need at least three sample points")
    f = kernel_section(p) if f is None else f
    pts = [as_point(z) for z in sample_points]
    vals = np.array([abs(complex(f(z))) for z in pts])
    cutoff = max(1e-8, min_rel * float(vals.max()))
    ratios = [eigenvalue_ratio(p, f, z, h).real for z, v in zip(pts, vals) if v >= cutoff]
    skipped = len(pts) - len(ratios)
    if not ratios:
        raise ArithmeticError("section vanishes at every sample point")
    r = np.asarray(ratios)
    e_hat = float(np.median(r))
    spread = float(np.max(np.abs(r - e_hat)) / max(abs(e_hat), 1.0))
    return EigenProbe(e_hat, spread, tuple(float(v) for v in r), skipped)
