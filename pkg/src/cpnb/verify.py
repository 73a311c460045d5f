"""Invariant suites behind ``cpnb verify``.

Each suite returns a list of :class:`Check` records.  ``finding`` marks a
measured discrepancy with a printed formula; it never fails a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import __version__
from .berezin import (
    IntegrationMethod,
    RadialObservable,
    berezin_apply,
    berezin_kernel,
    build_wtable,
    kernel_degree,
    linearization_check,
    spectral_synthesis,
    w_closed_n1m0,
    w_formula,
    w_oracle,
    weierstrass_telescoped,
)
from .geometry import (
    apply_unitary,
    cos2_fs,
    fs_distance,
    radial_integral,
    random_unitary,
    sample_fs,
    total_mass,
)
from .specfun import (
    JacobiIndex,
    KdFParams,
    gauss_jacobi_rule,
    jacobi_norm,
    jacobi_p,
    jacobi_p_at_one,
    kdf_f2222,
    kdf_f2222_nested,
)
from .spectra import (
    LevelParams,
    dim_level,
    eigenfunction_radial,
    eigenvalue_probe,
    expected_level_eigenvalue,
    laplacian_eigenvalue,
    normalization_N,
    reproducing_kernel,
    spectral_function_psi,
    spectral_function_psi_printed,
)

SCHEMA_VERSION = "1"
SUITES = ("specfun", "geometry", "spectra", "berezin")
GRIDS = {
    "small": {"n": (1, 2), "two_nu": (0, 1, 2), "m": (0, 1, 2)},
    "full": {"n": (1, 2, 3), "two_nu": (0, 1, 2, 3, 4), "m": (0, 1, 2, 3, 4)},
}


@dataclass
class Check:
    name: str
    measured: float
    expected: float | None
    tolerance: float
    status: str = ""
    params: dict | None = None

    def __post_init__(self):
        if not self.status:
            ok = self.expected is not None and abs(self.measured - self.expected) <= self.tolerance
            self.status = "pass" if ok else "fail"

    def as_dict(self) -> dict:
        d = {"name": self.name, "status": self.status, "measured": _num(self.measured),
             "expected": _num(self.expected), "tolerance": self.tolerance}
        if self.params is not None:
            d["params"] = self.params
        return d


def finding(name, measured, expected, tolerance=0.0, params=None) -> Check:
    return Check(name, measured, expected, tolerance, status="finding", params=params)


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class Context:
    grid: str = "small"
    seed: int = 42

    @property
    def levels(self) -> list[LevelParams]:
        g = GRIDS[self.grid]
        return [LevelParams(n, t, m) for n, t, m in product(g["n"], g["two_nu"], g["m"])]

    @property
    def mc_samples(self) -> int:
        return 1_000_000 if self.grid == "full" else 100_000


def mc_zscore(estimate: float, stderr: float, exact: float) -> float:
    """Deviation in standard errors; a degenerate (constant) estimator must be exact."""
    diff = abs(estimate - exact)
    floor = 1e-12 * max(1.0, abs(exact))
    if stderr > floor:
        return diff / stderr
    return 0.0 if diff <= floor else math.inf


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def suite_specfun(ctx: Context) -> list[Check]:
    out = []
    off, diag = 0.0, 0.0
    for a, b in product((0, 1, 2), (0, 1, 2, 3, 4)):
        rule = gauss_jacobi_rule(12, a, b)
        vals = [jacobi_p(JacobiIndex(k, a, b), rule.nodes) for k in range(9)]
        for j in range(9):
            for k in range(j, 9):
                q = rule.integrate(vals[j] * vals[k])
                if j == k:
                    diag = max(diag, _rel(q, jacobi_norm(JacobiIndex(k, a, b))))
                else:
                    off = max(off, abs(q))
    out.append(Check("jacobi_orthogonality", off, 0.0, 1e-12))
    out.append(Check("jacobi_norm", diag, 0.0, 1e-12))

    err = 0.0
    for k, a, b in product(range(21), (0, 0.5, 1, 2), (0, 1, 3)):
        idx = JacobiIndex(k, a, b)
        err = max(err, _rel(jacobi_p(idx, 1.0), jacobi_p_at_one(idx)))
    out.append(Check("jacobi_value_at_one", err, 0.0, 1e-13))

    xs = np.linspace(-1, 1, 41)
    err = 0.0
    for k, a, b in product(range(9), (0, 1, 2), (0, 1, 3)):
        lhs = jacobi_p(JacobiIndex(k, a, b), -xs)
        rhs = (-1) ** k * jacobi_p(JacobiIndex(k, b, a), xs)
        err = max(err, float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs)))))
    out.append(Check("jacobi_symmetry", err, 0.0, 1e-12))

    err = 0.0
    for p in ctx.levels:
        tn, n, m = p.two_nu, p.n, p.m
        for k in range(tn + 1):
            kp = KdFParams(tn + 1, tn + 1, -m, tn + m + n, -m, tn + m + n,
                           tn - k + 1, n + tn + k + 1, tn + 1, tn + 1)
            err = max(err, _rel(kdf_f2222_nested(kp), kdf_f2222(kp)))
    out.append(Check("kdf_nested_agreement", err, 0.0, 1e-12))
    return out


def suite_geometry(ctx: Context) -> list[Check]:
    out = []
    err = max(_rel(radial_integral(n, lambda x: 1.0), total_mass(n)) for n in range(1, 6))
    out.append(Check("total_mass", err, 0.0, 1e-12))
    for n in (1, 2, 3):
        pts = sample_fs(n, ctx.seed, ctx.mc_samples)
        x = cos2_fs(pts, np.zeros(n))
        for name, g in (("1", lambda x: np.ones_like(x)), ("x", lambda x: x), ("x2", lambda x: x * x)):
            vals = total_mass(n) * g(x)
            mc = float(np.mean(vals))
            se = float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
            exact = radial_integral(n, g)
            z = mc_zscore(mc, se, exact)
            out.append(Check(f"radial_vs_mc[g={name}]", z, 0.0, 4.0, params={"n": n}))

    rng = np.random.default_rng(ctx.seed)
    err = 0.0
    for n in (1, 2, 3):
        for _ in range(20):
            U = random_unitary(n + 1, rng)
            z, w = sample_fs(n, int(rng.integers(1 << 31)), 2)
            try:
                err = max(err, abs(cos2_fs(apply_unitary(U, z), apply_unitary(U, w)) - cos2_fs(z, w)))
            except ValueError:
                continue
    out.append(Check("unitary_invariance", err, 0.0, 1e-12))

    viol = 0.0
    for n in (1, 2):
        a, b, c = (sample_fs(n, ctx.seed + i, 10_000) for i in range(3))
        slack = fs_distance(a, b) + fs_distance(b, c) - fs_distance(a, c)
        viol = max(viol, float(max(0.0, -np.min(slack))))
    out.append(Check("triangle_inequality", viol, 0.0, 1e-12))
    return out


def _probe_points(n: int, seed: int, count: int = 6) -> list:
    pts = sample_fs(n, seed, 64)
    return [z for z in pts if np.linalg.norm(z) < 2.0][:count]


def suite_spectra(ctx: Context) -> list[Check]:
    out = []
    for p in ctx.levels:
        vol = total_mass(p.n)
        out.append(Check("trace_identity", _rel(normalization_N(p) * vol, dim_level(p)), 0.0, 1e-10,
                         params=p.as_dict()))
        order = kernel_degree(p) // 2 + 3
        k2 = radial_integral(p.n, lambda x: reproducing_kernel(p, x) ** 2, order=order)
        out.append(Check("reproducing_diagonal", _rel(k2, normalization_N(p)), 0.0, 1e-9,
                         params=p.as_dict()))

    for n in sorted({p.n for p in ctx.levels}):
        err_self, err_orth = 0.0, 0.0
        for j in range(9):
            pj = spectral_function_psi(n, j, 1.0)
            err_self = max(err_self, _rel(radial_integral(n, lambda x: spectral_function_psi(n, j, x) ** 2), pj))
            for k in range(j + 1, 9):
                v = radial_integral(n, lambda x: spectral_function_psi(n, j, x) * spectral_function_psi(n, k, x))
                err_orth = max(err_orth, abs(v) / pj)
        out.append(Check("psi_self_reproduction", err_self, 0.0, 1e-10, params={"n": n}))
        out.append(Check("psi_orthogonality", err_orth, 0.0, 1e-11, params={"n": n}))
        if n >= 2:
            v = radial_integral(n, lambda x: spectral_function_psi_printed(n, 1, x) ** 2)
            out.append(finding("psi_printed_idempotence_ratio",
                               v / spectral_function_psi_printed(n, 1, 1.0), 1.0, params={"n": n, "k": 1}))

    probe_levels = [p for p in ctx.levels if p.m <= 1 and p.two_nu <= 1] + [LevelParams(1, 1, 0)]
    seen = set()
    for p in probe_levels:
        if p in seen:
            continue
        seen.add(p)
        pts = _probe_points(p.n, ctx.seed)
        pr = eigenvalue_probe(p, pts)
        E = expected_level_eigenvalue(p)
        out.append(Check("eigenvalue_probe_spread", pr.spread, 0.0, 1e-4, params=p.as_dict()))
        out.append(Check("eigenvalue_probe_derived", pr.E_hat, E, 1e-4 * max(1.0, abs(E)),
                         params=p.as_dict()))
        printed = p.lam ** 2 - p.n ** 2 + p.two_nu ** 2
        out.append(finding("eigenvalue_probe_printed_convention", pr.E_hat, printed, params=p.as_dict()))
        # expansion terms: conjugates are eigenfunctions, the literal terms only when p == q
        for a, b in ((0, 1), (1, 0)):
            if b > p.m + p.two_nu or a > p.m or (p.n == 1 and a and b):
                continue
            f = (lambda z, a=a, b=b: eigenfunction_radial(p, a, b, z))
            fc = (lambda z, f=f: np.conj(f(z)))
            prc = eigenvalue_probe(p, pts, f=fc)
            out.append(Check("expansion_term_eigenvalue", prc.E_hat, pr.E_hat, 1e-3 * max(1.0, abs(E)),
                             params={**p.as_dict(), "p": a, "q": b, "conjugated": True}))
            if p.two_nu and a != b:
                prl = eigenvalue_probe(p, pts, f=f)
                out.append(finding("expansion_term_literal_spread", prl.spread, 0.0,
                                   params={**p.as_dict(), "p": a, "q": b}))

    for n in (1, 2):
        pts = _probe_points(n, ctx.seed)
        w0 = pts[-1] * 0.5
        for k in range(4):
            lvl = LevelParams(n, 0, 0)
            pr = eigenvalue_probe(lvl, pts[:5], f=lambda w, k=k: spectral_function_psi(n, k, cos2_fs(w, w0)))
            E = -laplacian_eigenvalue(n, k)
            err = abs(pr.E_hat - E) / max(1.0, abs(E))
            out.append(Check("laplacian_on_psi", err, 0.0, 1e-4, params={"n": n, "k": k}))
    return out


def suite_berezin(ctx: Context) -> list[Check]:
    out = []
    for p in ctx.levels:
        prm = p.as_dict()
        b1 = berezin_apply(p, RadialObservable(lambda x: 1.0, np.zeros(p.n)), np.zeros(p.n),
                           IntegrationMethod("radial"))
        out.append(Check("normalization_B1", b1.value, 1.0, 1e-10, params=prm))
        out.append(Check("w_at_zero", w_formula(p, 0), 1.0, 1e-10, params=prm))
        table = build_wtable(p)
        for row in table.rows:
            if row.k > p.two_nu:
                continue
            if p.n == 1:
                out.append(Check("w_formula_vs_oracle", row.w_formula, row.w_oracle, 1e-8,
                                 params={**prm, "k": row.k}))
            else:
                out.append(finding("w_formula_vs_oracle", row.w_formula, row.w_oracle, 1e-8,
                                   params={**prm, "k": row.k}))
                corr = row.w_formula * math.comb(p.n + row.k - 1, row.k)
                out.append(Check("w_formula_pochhammer_corrected", corr, row.w_oracle, 1e-8,
                                 params={**prm, "k": row.k}))
        if p.m >= 1:
            out.append(finding("truncation_tail", table.termination_report, 0.0, params=prm))
        else:
            out.append(Check("truncation_tail", table.termination_report, 0.0, 1e-12, params=prm))
        beyond = [abs(r.w_formula) for r in table.rows if r.k > p.two_nu and r.w_formula is not None]
        out.append(Check("literal_truncation", max(beyond, default=0.0), 0.0, 0.0, params=prm))
        xs = np.linspace(-1, 1, 101)
        rec = spectral_synthesis(p.n, {r.k: r.w_oracle for r in table.rows}, xs)
        scale = max(1.0, float(np.max(np.abs(berezin_kernel(p, xs)))))
        err = float(np.max(np.abs(rec - berezin_kernel(p, xs)))) / scale
        out.append(Check("spectral_reconstruction", err, 0.0, 1e-9, params=prm))
        lo = min(r.w_oracle for r in table.rows)
        hi = max(r.w_oracle for r in table.rows)
        viol = max(0.0, -lo, hi - 1.0)
        out.append(Check("contraction", viol, 0.0, 1e-12, params=prm))

    err = 0.0
    for tn in range(1, 7):
        for k in range(tn + 1):
            p = LevelParams(1, tn, 0)
            a, b, c = w_formula(p, k), w_closed_n1m0(tn, k), weierstrass_telescoped(tn, k)
            err = max(err, abs(a - b), abs(a - c))
    out.append(Check("berezin_original_formula", err, 0.0, 1e-8))

    worst = 0.0
    for a1, b, mu, m in product((0, 1, 2), (0, 1, 2), range(5), range(3)):
        chk = linearization_check(a1, b, mu, m)
        worst = max(worst, chk.max_residual_low)
        if m >= 1 and a1 == 1 and b == 0 and mu == 1:
            out.append(finding("linearization_tail", chk.residual_tail, 0.0,
                               params={"alpha1": a1, "beta": b, "mu": mu, "m": m}))
    out.append(Check("linearization_low_order", worst, 0.0, 1e-11))

    for t in ((1, 1, 0), (1, 1, 1), (2, 1, 1)):
        p = LevelParams(*t)
        z = np.full(p.n, 0.2 + 0.1j)
        w0 = np.zeros(p.n, dtype=complex)
        for k in range(3):
            f = RadialObservable(lambda x, k=k: spectral_function_psi(p.n, k, x), w0)
            r = berezin_apply(p, f, z, IntegrationMethod("monte_carlo", seed=ctx.seed, count=ctx.mc_samples))
            target = w_oracle(p, k) * float(f(z[None])[0])
            out.append(Check("eigen_operator_mc", mc_zscore(r.value, r.stderr, target), 0.0, 3.0,
                             params={**p.as_dict(), "k": k}))
    return out


SUITE_FUNCS = {
    "specfun": suite_specfun,
    "geometry": suite_geometry,
    "spectra": suite_spectra,
    "berezin": suite_berezin,
}


@dataclass
class ReportDocument:
    params: dict
    checks: list[Check] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @property
    def failed(self) -> bool:
        return any(c.status == "fail" for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "params": self.params,
            "checks": [c.as_dict() for c in self.checks],
            "provenance": self.provenance,
        }


def run(suites, grid: str = "small", seed: int = 42) -> ReportDocument:
    ctx = Context(grid, seed)
    g = GRIDS[grid]
    doc = ReportDocument(
        params={"grid": grid, "n": list(g["n"]), "two_nu": list(g["two_nu"]), "m": list(g["m"])},
        provenance={"seed": seed, "quadrature_orders": {"radial": 40, "oracle": "(deg+k)//2+2"},
                    "mc_samples": ctx.mc_samples, "build_id": f"cpnb-{__version__}"},
    )
    for name in suites:
        doc.checks.extend(SUITE_FUNCS[name](ctx))
    return doc
