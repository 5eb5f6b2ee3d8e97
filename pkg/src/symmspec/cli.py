"""Command-line interface: ``symmspec {spectrum,oracle,verify,greens}``.

Exit codes: 0 success, 1 a verification check failed, 2 bad configuration,
3 solver failure.  Output files are written to a temporary sibling and
renamed, so a failed run leaves nothing behind.  Every output file starts
with the effective settings (defaults included).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import Family, classify, inequality_report, sweep_family
from .assembly import BoundaryCondition, reduce, solve_load
from .eigensolve import DEFAULT_TOL, smallest_eigenpairs
from .errors import CoincidentPoints, ConfigError, SymmSpecError
from .geometry import DomainSpec, build_mesh, load_domain
from .oracles import disk_spectrum, green_p_disk, rectangle_spectrum, solve_via_green

DEFAULT_H = 0.05
EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 1, 2, 3

_BC = {
    "neumann": BoundaryCondition.FREE_NEUMANN,
    "dirichlet": BoundaryCondition.DIRICHLET,
    "nonlocal": BoundaryCondition.NONLOCAL_P,
}


def _g(x) -> str:
    return f"{float(x):.17g}"


def _header(args, skip=("func", "command")) -> dict:
    d = {"symmspec": __version__, "command": args.command}
    for k, v in sorted(vars(args).items()):
        if k not in skip:
            d[k] = v
    return d


def _csv_text(header: dict, columns, rows) -> str:
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(out, text):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


# ---------------------------------------------------------------------------
# spectrum


def cmd_spectrum(args) -> int:
    spec, file_h = load_domain(args.domain)
    h = args.h if args.h is not None else (file_h or DEFAULT_H)
    args.h = h
    mesh = build_mesh(spec, h)
    ops = reduce(mesh, _BC[args.bc])
    if args.k > ops.n_dofs:
        raise ConfigError(f"k={args.k} exceeds the {ops.n_dofs} degrees of freedom")
    result = smallest_eigenpairs(ops, args.k, args.tol)
    cls = classify(result, mesh)
    rows = [
        [i + 1, _g(e.eigenvalue), e.parity.value, _g(e.odd_residual), _g(e.even_residual), e.cluster_id]
        for i, e in enumerate(cls.entries)
    ]
    columns = ["index", "lambda", "parity", "odd_residual", "even_residual", "cluster"]
    header = _header(args)
    if args.format == "json":
        body = {"config": header, "domain": spec.label(), "n_nodes": mesh.n_nodes,
                "entries": [dict(zip(columns, r)) for r in rows]}
        for e in body["entries"]:
            for key in ("lambda", "odd_residual", "even_residual"):
                e[key] = float(e[key])
        text = json.dumps(body, indent=2) + "\n"
    else:
        text = _csv_text(header, columns, rows)
    write_atomic(args.out or f"spectrum.{args.format}", text)
    print(_g(cls.entries[0].eigenvalue))
    return 0


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args) -> int:
    if args.shape == "disk":
        values = disk_spectrum(args.radius, args.problem, args.count)
    else:
        values = rectangle_spectrum(args.a, args.b, args.problem, args.count)
    rows = [[i + 1, _g(v.value), v.problem.value, v.parity.value, v.indices[0], v.indices[1]]
            for i, v in enumerate(values)]
    _emit(args.out, _csv_text(_header(args), ["index", "value", "problem", "parity", "m", "n"], rows))
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    if (args.family is None) == (args.domain is None):
        raise ConfigError("give exactly one of --family or --domain")
    if args.family is not None:
        if args.steps < 2:
            raise ConfigError("--steps must be at least 2")
        h = args.h if args.h is not None else DEFAULT_H
        args.h = h
        sweep = sweep_family(args.family, args.steps, h, args.tol)
        header = _header(args)
        out = Path(args.out or f"verify_{args.family}.csv")
        for r in sweep.reports:
            write_atomic(out.with_name(f"{out.stem}_{r.domain_id}.json"), r.to_json(header))
        write_atomic(out, sweep.summary_csv(header))
        for r in sweep.reports:
            print(f"{r.domain_id} aspect={_g(r.aspect)} lambda1P={_g(r.lambda1_P)} "
                  f"{'pass' if r.all_pass else 'FAIL'}")
        if not sweep.extremal_ok:
            print("largest lambda1P not at the most ball-like member")
        return 0 if sweep.all_pass else EXIT_FAIL

    spec, file_h = load_domain(args.domain)
    h = args.h if args.h is not None else (file_h or DEFAULT_H)
    args.h = h
    report = inequality_report(spec, h, args.tol, domain_id=Path(args.domain).stem)
    header = _header(args)
    out = args.out or f"verify_{Path(args.domain).stem}.{args.format}"
    if args.format == "csv":
        rows = [[c.name, _g(c.lhs), c.relation, _g(c.rhs), _g(c.margin), _g(c.budget), c.status.value]
                for c in report.checks]
        text = _csv_text(header, ["check", "lhs", "relation", "rhs", "margin", "budget", "status"], rows)
    else:
        text = report.to_json(header)
    write_atomic(out, text)
    for c in report.checks:
        print(f"{c.name:22s} {_g(c.lhs):>24s} {c.relation:>2s} {_g(c.rhs):<24s} {c.status.value}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0 if report.all_pass else EXIT_FAIL


# ---------------------------------------------------------------------------
# greens


def _parse_point(text: str) -> np.ndarray:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad point {text!r}") from None
    if len(parts) != 2 or not all(math.isfinite(v) for v in parts):
        raise ConfigError(f"point must be 'x,y', got {text!r}")
    return np.array(parts)


def parse_load(expr: str):
    """Vectorized callable for an expression in ``x1, x2`` (``x, y`` also accepted)."""
    import sympy

    x1, x2 = sympy.symbols("x1 x2")
    try:
        e = sympy.sympify(expr, locals={"x1": x1, "x2": x2, "x": x1, "y": x2})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"cannot parse load {expr!r}: {exc}") from None
    if e.free_symbols - {x1, x2}:
        raise ConfigError(f"load may only use x1, x2; got {sorted(map(str, e.free_symbols))}")
    fn = sympy.lambdify((x1, x2), e, "numpy")

    def f(pts):
        pts = np.atleast_2d(pts)
        return np.broadcast_to(np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float), (len(pts),)).copy()

    return f


def green_vs_fem(f, h: float, radius_cap: float = 0.8):
    """Nodal FEM problem-P solution against Green quadrature on the same disk mesh.

    Returns ``(points, green, fem)`` at mesh nodes with ``|x| <= radius_cap``.
    """
    mesh = build_mesh(DomainSpec.disk(1.0), h)
    ops = reduce(mesh, BoundaryCondition.NONLOCAL_P)
    fem = solve_load(ops, f(mesh.nodes))
    sel = np.flatnonzero(np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1]) <= radius_cap)
    pts = mesh.nodes[sel]
    return pts, solve_via_green(f, pts, mesh), fem[sel]


def cmd_greens(args) -> int:
    y = _parse_point(args.source)
    if np.hypot(*y) >= 1.0:
        raise ConfigError("source must lie strictly inside the unit disk")
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    f = parse_load(args.solve) if args.solve is not None else None

    t = np.linspace(-1.0, 1.0, args.grid)
    rows = []
    for a in t:
        for b in t:
            x = np.array([a, b])
            if np.hypot(a, b) > 1.0:
                continue
            try:
                v = green_p_disk(x, y)
            except CoincidentPoints:
                continue
            rows.append([_g(a), _g(b), _g(v)])
    header = _header(args)
    out = Path(args.out or "greens.csv")
    texts = {out: _csv_text(header, ["x1", "x2", "value"], rows)}

    if f is not None:
        pts, green, fem = green_vs_fem(f, args.h)
        scale = max(np.abs(fem).max(), np.finfo(float).tiny)
        dev = np.abs(green - fem) / scale
        table = [[_g(p[0]), _g(p[1]), _g(g), _g(u), _g(d)] for p, g, u, d in zip(pts, green, fem, dev)]
        texts[out.with_name(f"{out.stem}_solve.csv")] = _csv_text(
            header, ["x1", "x2", "green", "fem", "rel_deviation"], table)
        print(f"green-vs-fem max relative deviation {_g(dev.max())} over {len(pts)} points")
    for path, text in texts.items():
        write_atomic(path, text)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="symmspec", description=__doc__.splitlines()[0], formatter_class=fmt)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", help="FEM eigenvalues with parity labels", formatter_class=fmt)
    s.add_argument("--domain", required=True, help="TOML domain file")
    s.add_argument("--bc", choices=sorted(_BC), default="nonlocal")
    s.add_argument("--k", type=int, default=6)
    s.add_argument("--h", type=float, default=None, help=f"mesh size (file value, else {DEFAULT_H})")
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--out", default=None, help="output path (default spectrum.<format>)")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.set_defaults(func=cmd_spectrum)

    o = sub.add_parser("oracle", help="analytic disk or rectangle spectra", formatter_class=fmt)
    o.add_argument("shape", choices=["disk", "rect"])
    o.add_argument("--problem", choices=["dirichlet", "neumann", "p"], default="p")
    o.add_argument("--count", type=int, default=6)
    o.add_argument("--radius", type=float, default=1.0)
    o.add_argument("--a", type=float, default=1.0)
    o.add_argument("--b", type=float, default=1.0)
    o.add_argument("--out", default=None, help="output path (default stdout)")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="inequality checks on a domain or shape family", formatter_class=fmt)
    v.add_argument("--family", choices=[f.value for f in Family], default=None)
    v.add_argument("--steps", type=int, default=5)
    v.add_argument("--domain", default=None, help="TOML domain file")
    v.add_argument("--h", type=float, default=None, help=f"mesh size (file value, else {DEFAULT_H})")
    v.add_argument("--tol", type=float, default=DEFAULT_TOL)
    v.add_argument("--out", default=None, help="summary path (default verify_<name>.<format>)")
    v.add_argument("--format", choices=["csv", "json"], default="json", help="single-domain report format")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("greens", help="sample G_P(., y) on the unit disk", formatter_class=fmt)
    g.add_argument("--source", required=True, help="source point 'y1,y2' with |y| < 1")
    g.add_argument("--grid", type=int, default=50)
    g.add_argument("--solve", default=None, metavar="F_EXPR", help="load f(x1, x2) for a Green-vs-FEM table")
    g.add_argument("--h", type=float, default=DEFAULT_H, help="mesh size for --solve")
    g.add_argument("--out", default=None, help="grid path (default greens.csv)")
    g.set_defaults(func=cmd_greens)
    return p


def _check_common(args) -> None:
    if getattr(args, "k", 1) < 1:
        raise ConfigError("--k must be at least 1")
    if getattr(args, "count", 1) < 1:
        raise ConfigError("--count must be at least 1")
    h = getattr(args, "h", None)
    if h is not None and not h > 0:
        raise ConfigError("--h must be positive")
    tol = getattr(args, "tol", None)
    if tol is not None and not 0 < tol < 1e-2:
        raise ConfigError("--tol must lie in (0, 1e-2)")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _check_common(args)
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SymmSpecError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except np.linalg.LinAlgError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
