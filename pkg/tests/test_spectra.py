import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cpnb.geometry import cos2_fs, radial_integral, total_mass
from cpnb.spectra import (
    LevelParams,
    apply_delta_nu_fd,
    dim_level,
    dim_spherical,
    eigenfunction_radial,
    eigenspace_dim,
    eigenvalue_probe,
    eigenvalue_ratio,
    expected_level_eigenvalue,
    fd_step,
    kernel_section,
    laplacian_eigenvalue,
    norm_const_c,
    normalization_N,
    reproducing_kernel,
    spectral_function_psi,
    spectral_function_psi_printed,
)

PROBE_POINTS = [np.array(v) for v in (
    [0.3 + 0.1j, -0.2j], [0.5, 0.4 + 0.3j], [-0.1 + 0.6j, 0.2], [0.25j, -0.35 + 0.05j], [0.7, 0.1j])]


def _points(n):
    return [z[:n] if n <= 2 else np.concatenate([z, [0.15 - 0.1j] * (n - 2)]) for z in PROBE_POINTS]


def _harmonic_dim_bruteforce(n, p, q):
    # nullity of sum_i d/dz_i d/dzbar_i from bidegree (p, q) to (p-1, q-1)
    def monos(d):
        return [c for c in itertools.product(range(d + 1), repeat=n) if sum(c) == d]
    src = [(a, b) for a in monos(p) for b in monos(q)]
    if p == 0 or q == 0:
        return len(src)
    dst = {(a, b): i for i, (a, b) in enumerate((a, b) for a in monos(p - 1) for b in monos(q - 1))}
    M = np.zeros((len(dst), len(src)))
    for col, (a, b) in enumerate(src):
        for i in range(n):
            if a[i] and b[i]:
                a2 = list(a); b2 = list(b)
                a2[i] -= 1; b2[i] -= 1
                M[dst[(tuple(a2), tuple(b2))], col] += a[i] * b[i]
    return len(src) - np.linalg.matrix_rank(M)


def test_level_params_validation():
    with pytest.raises(ValueError):
        LevelParams(0, 0, 0)
    with pytest.raises(ValueError):
        LevelParams(1, -1, 0)
    with pytest.raises(ValueError):
        LevelParams(1, 0, -1)
    p = LevelParams(2, 3, 1)
    assert p.nu == 1.5 and p.lam == 7
    assert p.as_dict() == {"n": 2, "two_nu": 3, "m": 1}


def test_dim_spherical_examples():
    assert dim_spherical(2, 1, 1) == 3
    assert dim_spherical(3, 2, 0) == 6
    with pytest.raises(ValueError):
        dim_spherical(1, 1, 1)


@pytest.mark.parametrize("n,p,q", [(2, 0, 0), (2, 2, 1), (2, 3, 3), (3, 1, 1), (3, 2, 2), (3, 3, 1), (4, 2, 1)])
def test_dim_spherical_bruteforce(n, p, q):
    assert dim_spherical(n, p, q) == _harmonic_dim_bruteforce(n, p, q)


def test_dim_level():
    assert dim_level(LevelParams(1, 1, 0)) == 2
    assert dim_level(LevelParams(2, 0, 0)) == 1
    assert dim_level(LevelParams(2, 0, 1)) == 8
    for k in range(6):
        assert dim_level(LevelParams(1, 0, k)) == 2 * k + 1


def test_norm_const_examples():
    assert math.isclose(norm_const_c(LevelParams(1, 1, 0)), 2 / math.pi)
    for m in range(4):
        assert math.isclose(norm_const_c(LevelParams(1, 0, m)), (2 * m + 1) / math.pi)
    assert math.isclose(norm_const_c(LevelParams(2, 2, 1)), 24 / math.pi ** 2)
    # cross-check through the trace identity: c * P_1^{(1,2)}(1) * vol = dim
    assert dim_level(LevelParams(2, 2, 1)) == 24


def test_reproducing_kernel_examples():
    p = LevelParams(1, 1, 0)
    assert_allclose(reproducing_kernel(p, [-1.0, 0.0, 1.0]), [0.0, math.sqrt(0.5) * 2 / math.pi, 2 / math.pi])
    assert math.isclose(normalization_N(LevelParams(2, 0, 1)), 8 / math.pi ** 2 * 2)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("tn", [0, 1, 2, 3, 4])
@pytest.mark.parametrize("m", [0, 1, 2, 3, 4])
def test_trace_and_diagonal(n, tn, m):
    p = LevelParams(n, tn, m)
    assert math.isclose(normalization_N(p) * total_mass(n), dim_level(p), rel_tol=1e-12)
    # |K|^2 integrates to the diagonal value
    sq = radial_integral(n, lambda x: reproducing_kernel(p, x) ** 2, order=30)
    assert math.isclose(sq, normalization_N(p), rel_tol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("m", range(5))
def test_kernel_without_field_is_projector(n, m):
    xs = np.linspace(-1, 1, 9)
    assert_allclose(reproducing_kernel(LevelParams(n, 0, m), xs), spectral_function_psi(n, m, xs), rtol=1e-13)


def test_psi_examples():
    assert math.isclose(spectral_function_psi(1, 0, 0.3), 1 / math.pi)
    for n in (1, 2, 3):
        assert math.isclose(spectral_function_psi(n, 0, -0.7), math.factorial(n) / math.pi ** n)
    assert math.isclose(spectral_function_psi(1, 2, 1.0), 5 / math.pi)
    assert math.isclose(spectral_function_psi_printed(2, 2, 0.4), spectral_function_psi(2, 2, 0.4) / 3)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_psi_reproducing_and_orthogonal(n):
    for j in range(5):
        for k in range(5):
            q = radial_integral(n, lambda x: spectral_function_psi(n, j, x) * spectral_function_psi(n, k, x))
            if j == k:
                assert math.isclose(q, spectral_function_psi(n, k, 1.0), rel_tol=1e-12)
                assert math.isclose(q * total_mass(n), eigenspace_dim(n, k), rel_tol=1e-12)
            else:
                assert abs(q) < 1e-10


def test_psi_printed_not_idempotent_for_n2():
    q = radial_integral(2, lambda x: spectral_function_psi_printed(2, 1, x) ** 2)
    assert not math.isclose(q, spectral_function_psi_printed(2, 1, 1.0), rel_tol=1e-3)


def test_eigenfunction_examples():
    p = LevelParams(2, 1, 1)
    assert eigenfunction_radial(p, 0, 0, [0j, 0j]) == 1.0
    z = np.array([0.5 + 0.5j, 0.2j])
    r2 = 0.54
    # 2F1(-1, -2; 2; -r2) = 1 - r2
    expected = (1 + r2) ** -1.5 * (1 - r2)
    assert abs(eigenfunction_radial(p, 0, 0, z) - expected) < 1e-14
    # (p, q) = (1, 0): 2F1(0, -2; 3; .) = 1, harmonic factor z1
    assert abs(eigenfunction_radial(p, 1, 0, z) - (1 + r2) ** -1.5 * z[0]) < 1e-14
    with pytest.raises(ValueError):
        eigenfunction_radial(p, 2, 0, z)
    with pytest.raises(ValueError):
        eigenfunction_radial(LevelParams(1, 0, 1), 1, 1, [0.1j])


def test_eigenfunction_bounded_decay():
    p = LevelParams(2, 2, 1)
    big = [abs(eigenfunction_radial(p, 1, 2, np.array([s, s * 1j]))) for s in (10.0, 100.0, 1000.0)]
    assert big[2] < big[1] < big[0] < 1.0


def test_fd_constant_and_chord():
    p0 = LevelParams(1, 0, 0)
    assert abs(apply_delta_nu_fd(p0, lambda w: 1.0, [0.3 + 0.2j], 1e-3)) < 1e-8
    z = np.array([0.4 - 0.3j])
    chord = lambda w: cos2_fs(w, [0j])
    assert math.isclose(eigenvalue_ratio(p0, chord, z).real, -8.0, rel_tol=1e-5)
    assert fd_step([0j]) == 1e-3


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("k", range(4))
def test_laplacian_on_psi(n, k):
    w0 = np.full(n, 0.1 + 0.05j)
    f = lambda w: spectral_function_psi(n, k, cos2_fs(w, w0))
    for z in _points(n):
        fz = f(z)
        if abs(fz) < 1e-3:
            continue
        lhs = apply_delta_nu_fd(LevelParams(n, 0, 0), f, z, fd_step(z))
        assert abs(lhs + laplacian_eigenvalue(n, k) * fz) <= 1e-4 * max(abs(lhs), 1.0)


def test_probe_level_examples():
    probe = eigenvalue_probe(LevelParams(1, 1, 0), _points(1))
    assert math.isclose(probe.E_hat, -2.0, rel_tol=1e-4)
    assert probe.spread < 1e-4


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("m", range(4))
def test_probe_without_field(n, m):
    probe = eigenvalue_probe(LevelParams(n, 0, m), _points(n))
    assert math.isclose(probe.E_hat, -4 * m * (m + n), rel_tol=1e-4, abs_tol=1e-5)
    assert probe.spread < 1e-4


@pytest.mark.parametrize("n,tn,m", [(1, 1, 1), (1, 2, 2), (2, 1, 1), (2, 3, 0), (3, 2, 1)])
def test_probe_matches_closed_form(n, tn, m):
    p = LevelParams(n, tn, m)
    probe = eigenvalue_probe(p, _points(n))
    assert math.isclose(probe.E_hat, expected_level_eigenvalue(p), rel_tol=1e-4)
    assert probe.spread < 1e-4


@pytest.mark.parametrize("n,tn,m", [(2, 1, 1), (2, 2, 1), (3, 1, 2)])
def test_conjugated_terms_are_eigenfunctions(n, tn, m):
    p = LevelParams(n, tn, m)
    E = expected_level_eigenvalue(p)
    for pdeg, qdeg in [(0, 0), (1, 0), (0, 1), (m, m + tn)]:
        f = lambda w, a=pdeg, b=qdeg: np.conj(eigenfunction_radial(p, a, b, w))
        # higher-degree terms need a finer step for the same O(h^2) error
        probe = eigenvalue_probe(p, _points(n), f=f, h=5e-4)
        assert math.isclose(probe.E_hat, E, rel_tol=1e-4)
        assert probe.spread < 1e-4


def test_literal_term_not_eigenfunction_when_field_on():
    p = LevelParams(2, 2, 1)
    f = lambda w: eigenfunction_radial(p, 1, 0, w)
    assert eigenvalue_probe(p, _points(2), f=f).spread > 1e-2


def test_kernel_section_base():
    p = LevelParams(2, 0, 1)
    f = kernel_section(p, base=[0.2j, 0.1])
    assert math.isclose(f(np.array([0.2j, 0.1])), normalization_N(p), rel_tol=1e-13)


def test_probe_needs_points():
    with pytest.raises(ValueError):
        eigenvalue_probe(LevelParams(1, 0, 0), _points(1)[:2])


def test_probe_skips_near_nodal_points():
    p = LevelParams(1, 0, 4)
    pts = [np.array([0.3 + 0.1j]), np.array([0.5]), np.array([0.7])]
    # K is about 0.4% of its peak at z = 0.7
    probe = eigenvalue_probe(p, pts)
    assert probe.skipped == 1 and len(probe.ratios) == 2
    assert eigenvalue_probe(p, pts, min_rel=0.0).skipped == 0
