"""Complex projective space in the standard affine chart.

Points of CP^n are represented by vectors ``z`` in C^n, i.e. the homogeneous
point ``[1 : z]``.  The chord variable ``x = cos 2 d_FS`` is the argument of all
distance-only kernels.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .specfun import gauss_jacobi_rule

CHUNK_SIZE = 4096
_CHART_EPS = 1e-9
_MAX_REJECTIONS = 1000


class ChartError(ValueError):
    """A point falls on the hyperplane at infinity of the affine chart."""


def as_point(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if not np.all(np.isfinite(z)):
        raise ValueError("projective point has non-finite coordinates")
    return z


def _check_dims(z: np.ndarray, w: np.ndarray) -> None:
    if z.shape[-1] != w.shape[-1]:
        raise ValueError(f"dimension mismatch: {z.shape[-1]} vs {w.shape[-1]}")


def cos2_fs(z, w):
    """``cos 2 d_FS(z, w)``, clamped to [-1, 1].

    Either argument may be a stack of points with shape ``(..., n)``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if z.ndim == 0:
        z = z[None]
    if w.ndim == 0:
        w = w[None]
    _check_dims(z, w)
    inner = 1.0 + np.sum(z * np.conj(w), axis=-1)
    nz = 1.0 + np.sum(np.abs(z) ** 2, axis=-1)
    nw = 1.0 + np.sum(np.abs(w) ** 2, axis=-1)
    x = 2.0 * np.abs(inner) ** 2 / (nz * nw) - 1.0
    x = np.clip(x, -1.0, 1.0)
    return float(x) if np.ndim(x) == 0 else x


def fs_distance(z, w):
    """Fubini-Study distance in radians, in ``[0, pi/2]``."""
    x = np.asarray(cos2_fs(z, w))
    d = np.arccos(np.sqrt(np.clip((1.0 + x) / 2.0, 0.0, 1.0)))
    return float(d) if d.ndim == 0 else d


def mu_density(w):
    """Density ``(1+|w|^2)^{-(n+1)}`` of the invariant measure against Lebesgue measure."""
    w = np.asarray(w, dtype=complex)
    if w.ndim == 0:
        w = w[None]
    n = w.shape[-1]
    d = (1.0 + np.sum(np.abs(w) ** 2, axis=-1)) ** (-(n + 1))
    return float(d) if np.ndim(d) == 0 else d


def total_mass(n: int) -> float:
    return math.pi ** n / math.factorial(n)


def radial_integral(n: int, g, order: int = 40) -> float:
    """Integrate a function of the chord variable over CP^n.

    Returns ``int g(cos 2 d_FS(z, w)) dmu_n(w)``, which is independent of ``z``
    and equals ``pi^n / Gamma(n) * 2^{-n} * int_{-1}^{1} g(x) (1-x)^{n-1} dx``.
    ``g`` must accept a numpy array.  The rule is exact for polynomial ``g``
    of degree at most ``2*order - 1``.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    rule = gauss_jacobi_rule(order, n - 1, 0)
    vals = np.broadcast_to(np.asarray(g(rule.nodes), dtype=float), rule.nodes.shape)
    const = math.exp(n * math.log(math.pi) - math.lgamma(n) - n * math.log(2.0))
    return const * rule.integrate(vals)


def _worker_count() -> int:
    cap = os.environ.get("CPNB_THREADS")
    cpus = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(cpus, int(cap)))
        except ValueError:
            pass
    return cpus


def _sample_chunk(n: int, seed_seq: np.random.SeedSequence, count: int) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    out = np.empty((count, n), dtype=complex)
    filled = 0
    rejections = 0
    while filled < count:
        need = count - filled
        u = (rng.standard_normal((need, n + 1)) + 1j * rng.standard_normal((need, n + 1)))
        ratio = np.abs(u[:, 0]) / np.linalg.norm(u, axis=1)
        ok = ratio >= _CHART_EPS
        if not np.any(ok):
            rejections += need
            if rejections >= _MAX_REJECTIONS:
                raise RuntimeError("sampler rejected too many points near the chart boundary")
            continue
        rejections = 0
        good = u[ok]
        out[filled:filled + len(good)] = good[:, 1:] / good[:, :1]
        filled += len(good)
    return out


def sample_fs(n: int, seed: int, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. points from the normalized invariant measure on CP^n.

    Returns an array of shape ``(count, n)``.  Points come from chunks of
    ``CHUNK_SIZE`` with their own derived seeds, so the result depends only on
    ``seed`` and not on how many worker threads are used.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    n_chunks = -(-count // CHUNK_SIZE)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [min(CHUNK_SIZE, count - i * CHUNK_SIZE) for i in range(n_chunks)]
    workers = min(_worker_count(), n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _sample_chunk(n, *a), zip(seqs, sizes)))
    else:
        parts = [_sample_chunk(n, s, c) for s, c in zip(seqs, sizes)]
    return np.concatenate(parts, axis=0)


def apply_unitary(U, z) -> np.ndarray:
    """Act by a unitary of C^{n+1} on ``[1 : z]`` and return to the affine chart."""
    z = as_point(z)
    U = np.asarray(U, dtype=complex)
    n = z.shape[-1]
    if U.shape != (n + 1, n + 1):
        raise ValueError(f"expected a {(n + 1, n + 1)} matrix, got {U.shape}")
    if not np.allclose(U.conj().T @ U, np.eye(n + 1), rtol=0, atol=1e-12):
        raise ValueError("matrix is not unitary")
    v = U @ np.concatenate(([1.0 + 0j], z))
    if abs(v[0]) < 1e-12:
        raise ChartError("image lies on the hyperplane at infinity")
    return v[1:] / v[0]


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    return q * (d / np.abs(d))
