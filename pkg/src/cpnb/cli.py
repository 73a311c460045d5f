"""Command-line front end: ``cpnb {wtable,verify,kernel,transform}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import verify
from .berezin import IntegrationMethod, RadialObservable, berezin_apply, berezin_kernel, build_wtable
from .spectra import LevelParams, reproducing_kernel, spectral_function_psi

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def _nonneg(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {s}")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _point(s: str) -> np.ndarray:
    try:
        vals = [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse point {s!r}") from None
    if not vals or len(vals) % 2:
        raise argparse.ArgumentTypeError("points are given as re1,im1,re2,im2,...")
    return np.array(vals[0::2]) + 1j * np.array(vals[1::2])


def _level_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=_positive, required=True, help="complex dimension")
    p.add_argument("--two-nu", type=_nonneg, required=True, help="twice the field strength")
    p.add_argument("--m", type=_nonneg, required=True, help="Landau level index")


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if not isinstance(v, int) else str(v) for v in r])
    return buf.getvalue()


def cmd_wtable(args) -> int:
    p = LevelParams(args.n, args.two_nu, args.m)
    table = build_wtable(p, args.kmax)
    if args.format == "csv":
        rows = [(r.k, r.Lambda, r.w_formula, r.w_oracle, r.residual) for r in table.rows]
        text = _csv(("k", "lambda", "w_formula", "w_oracle", "residual"), rows)
    else:
        text = _dumps({
            "schema_version": verify.SCHEMA_VERSION,
            "params": p.as_dict(),
            "rows": [r.as_dict() for r in table.rows],
            "termination_report": table.termination_report,
        })
    _write(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = verify.SUITES if args.suite == "all" else (args.suite,)
    doc = verify.run(suites, grid=args.grid, seed=args.seed)
    if args.json:
        _write(_dumps(doc.as_dict()), args.out)
    else:
        lines = []
        for c in doc.checks:
            tag = "" if c.params is None else " " + ",".join(f"{k}={v}" for k, v in c.params.items())
            lines.append(f"{c.status:7s} {c.name}{tag} measured={_fmt(c.measured)} "
                         f"expected={_fmt(c.expected)} tol={c.tolerance:g}")
        n_fail = sum(c.status == "fail" for c in doc.checks)
        n_find = sum(c.status == "finding" for c in doc.checks)
        lines.append(f"{len(doc.checks)} checks, {n_fail} failed, {n_find} findings")
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_FAIL if doc.failed else EXIT_OK


def _parse_which(which: str, parser) -> tuple[str, int | None]:
    if which in ("reproducing", "berezin"):
        return which, None
    if which.startswith("psi:"):
        try:
            k = int(which[4:])
        except ValueError:
            k = -1
        if k >= 0:
            return "psi", k
    parser.error(f"invalid --which {which!r}; use reproducing, berezin or psi:K")


def cmd_kernel(args, parser) -> int:
    p = LevelParams(args.n, args.two_nu, args.m)
    kind, k = _parse_which(args.which, parser)
    xs = np.linspace(-1.0, 1.0, args.points)
    if kind == "reproducing":
        vals = reproducing_kernel(p, xs)
    elif kind == "berezin":
        vals = berezin_kernel(p, xs)
    else:
        vals = spectral_function_psi(p.n, k, xs)
    vals = np.broadcast_to(vals, xs.shape)
    if args.format == "json":
        text = _dumps({"schema_version": verify.SCHEMA_VERSION, "params": p.as_dict(),
                       "which": args.which,
                       "points": [{"x": float(x), "value": float(v)} for x, v in zip(xs, vals)]})
    else:
        text = _csv(("x", "value"), zip(xs, vals))
    _write(text, args.out)
    return EXIT_OK


def cmd_transform(args, parser) -> int:
    p = LevelParams(args.n, args.two_nu, args.m)
    z = np.zeros(p.n, dtype=complex) if args.z is None else args.z
    w0 = np.zeros(p.n, dtype=complex) if args.w0 is None else args.w0
    if z.shape != (p.n,) or w0.shape != (p.n,):
        parser.error(f"--z and --w0 need {p.n} complex coordinates")
    if args.f == "const":
        g, center = (lambda x: np.ones_like(np.asarray(x, dtype=float))), z
    elif args.f == "chord":
        g, center = (lambda x: np.asarray(x, dtype=float)), w0
    elif args.f.startswith("psi:") and args.f[4:].isdigit():
        k = int(args.f[4:])
        g, center = (lambda x: spectral_function_psi(p.n, k, x)), w0
    else:
        parser.error(f"invalid --f {args.f!r}; use const, chord or psi:K")
    f = RadialObservable(g, center)
    if args.method == "radial":
        if not np.allclose(center, z, rtol=0, atol=1e-12):
            parser.error("radial method needs the observable centred at z (set --w0 equal to --z)")
        method = IntegrationMethod("radial")
    else:
        method = IntegrationMethod("monte_carlo", seed=args.seed, count=args.samples)
    res = berezin_apply(p, f, z, method)
    if args.json:
        doc = {"schema_version": verify.SCHEMA_VERSION, "params": p.as_dict(), "f": args.f,
               "method": args.method, "value": res.value,
               "stderr": res.stderr if args.method == "mc" else None,
               "f_at_z": float(np.atleast_1d(f(z[None]))[0])}
        _write(_dumps(doc), args.out)
    else:
        text = f"value {_fmt(res.value)}\n"
        if args.method == "mc":
            text += f"stderr {_fmt(res.stderr)}\n"
        _write(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpnb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wtable", help="spectral weights of the Berezin transform")
    _level_args(p)
    p.add_argument("--kmax", type=_nonneg, default=None, help="default 2nu+2m+2")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--suite", choices=verify.SUITES + ("all",), default="all")
    p.add_argument("--grid", choices=tuple(verify.GRIDS), default="small")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("kernel", help="tabulate a distance kernel on the chord variable")
    _level_args(p)
    p.add_argument("--which", default="berezin", help="reproducing, berezin or psi:K")
    p.add_argument("--points", type=_positive, default=101)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out")

    p = sub.add_parser("transform", help="evaluate B[f](z)")
    _level_args(p)
    p.add_argument("--f", default="const", help="const, chord or psi:K")
    p.add_argument("--z", type=_point, default=None, help="re1,im1,re2,im2,... (default origin)")
    p.add_argument("--w0", type=_point, default=None, help="centre of chord/psi observables")
    p.add_argument("--method", choices=("radial", "mc"), default="radial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=_positive, default=1_000_000)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "wtable":
        return cmd_wtable(args)
    if args.command == "verify":
        return cmd_verify(args)
    if args.command == "kernel":
        return cmd_kernel(args, parser)
    return cmd_transform(args, parser)


if __name__ == "__main__":
    sys.exit(main())
