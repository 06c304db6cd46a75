"""Command-line front end.

Subcommands ``insulation``, ``bisect``, ``neumann`` and ``export-mesh``.
Exit status: 0 success, 1 bad usage, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import io
from .domain import DomainError, build_preset
from .experiments import (
    BisectionError,
    bisect_critical_M,
    run_insulation_sweep,
    run_neumann,
)
from .fem import assemble
from .mesh import MeshError, triangulate
from .spectral import DEFAULT_TOL, EigenError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("meanhad")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _manifest(args, out: Path, **extra) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("func",)}
    m = {
        "command_line": io.command_line(),
        "command": args.command,
        "flags": flags,
        "solver": {"eig_tol": args.eig_tol},
        "versions": io.versions(),
    }
    m.update(extra)
    m["outputs"] = sorted(str(p.relative_to(out)) for p in m.pop("files"))
    return m


def cmd_insulation(args) -> int:
    out = args.out
    t0, started = time.perf_counter(), _now()
    rows = run_insulation_sweep(args.c, args.levels, tol=args.eig_tol)
    files = [io.write_csv(out / "insulation.csv", [r.csv_row() for r in rows])]
    domain = build_preset("canonical", {"c": args.c})
    mesh_stats = [{"level": r.level, "n_triangles": r.n_triangles, "n_nodes": r.n_nodes,
                   "n_free_dofs": r.n_free_dofs} for r in rows]
    files.append(out / "manifest.json")
    io.write_manifest(out / "manifest.json", _manifest(
        args, out, files=files, domain=domain.to_dict(), meshes=mesh_stats,
        started=started, finished=_now(), wall_time_s=time.perf_counter() - t0))
    for r in rows:
        print(f"level {r.level}: lambda_min = {r.lambda_min:.6e}  pd = {r.pd}")
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NUMERIC


def cmd_bisect(args) -> int:
    out = args.out
    t0, started = time.perf_counter(), _now()
    traces, status = [], EXIT_OK
    for k in args.k:
        try:
            traces.append(bisect_critical_M(k, args.level, args.tol, tol=args.eig_tol,
                                            snap=args.snap))
        except (BisectionError, EigenError) as exc:
            log.error("k=%d: %s", k, exc)
            status = EXIT_NUMERIC
            trace = getattr(exc, "trace", None)
            if trace is not None:
                traces.append(trace)
    files = [io.write_csv(out / "bisect.csv", [t.csv_row() for t in traces],
                          ["k", "delta", "M_theory5", "M_theory8", "M_num"])]
    probes = [{"k": t.k, "step": i, "M": M, "lambda_min": lam}
              for t in traces for i, (M, lam) in enumerate(t.probes)]
    files.append(io.write_csv(out / "bisect_probes.csv", probes,
                              ["k", "step", "M", "lambda_min"]))
    files.append(out / "manifest.json")
    snapped = {str(t.k): {"delta": t.delta, "bracket": [t.bracket_lo, t.bracket_hi]}
               for t in traces}
    io.write_manifest(out / "manifest.json", _manifest(
        args, out, files=files, preset="thin", snapped=snapped,
        started=started, finished=_now(), wall_time_s=time.perf_counter() - t0))
    for t in traces:
        print(f"k={t.k:<4d} delta={t.delta:.6g}  M_num = {t.M_num:.6f}")
    return status


def cmd_neumann(args) -> int:
    out = args.out
    t0, started = time.perf_counter(), _now()
    res = run_neumann(args.c, args.delta, args.level, args.layers, tol=args.eig_tol)
    mesh, phi = res.mesh, res.field
    modes = [{"id": i, "x": x, "y": y, "phi1": a, "phi2": b}
             for i, ((x, y), (a, b)) in enumerate(zip(mesh.nodes, phi))]
    files = [
        io.write_csv(out / "eigenmode.csv", modes, ["id", "x", "y", "phi1", "phi2"]),
        io.write_vtk(out / "eigenmode.vtk", mesh, point_vectors={"phi": phi},
                     cell_scalars={"det_grad_phi": res.det, "grad_phi_sq": res.grad_sq},
                     title="minimal eigenmode"),
        io.write_csv(out / "layers.csv", res.layers.csv_rows(),
                     ["layer", "x_lo", "x_hi", "energy"]),
        out / "manifest.json",
    ]
    io.write_manifest(out / "manifest.json", _manifest(
        args, out, files=files, domain=mesh.domain.to_dict(), mesh=mesh.stats(),
        eigen=res.eigen.to_dict(), started=started, finished=_now(),
        wall_time_s=time.perf_counter() - t0))
    print(f"lambda_min = {res.eigen.lambda_min:.6e}; "
          f"peak layer {int(res.layers.energy.argmax())} of {args.layers}")
    return EXIT_OK


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"expected key=value, got {item!r}")
        params[key.strip()] = float(value)
    return params


def cmd_export_mesh(args) -> int:
    out = args.out
    domain = build_preset(args.preset, _parse_params(args.param))
    mesh = triangulate(domain, args.level, fit_strips=args.fit_strips)
    files = list(io.write_mesh_csv(mesh, out))
    files.append(io.write_vtk(out / "mesh.vtk", mesh))
    if args.matrices:
        ops = assemble(mesh)
        for name in ("K1", "K2", "A"):
            files.append(io.write_matrix_market(out / f"{name}.mtx", getattr(ops, name)))
    files.append(out / "manifest.json")
    io.write_manifest(out / "manifest.json", _manifest(
        args, out, files=files, domain=domain.to_dict(), mesh=mesh.stats(),
        started=_now()))
    print(f"{mesh.n_nodes} nodes, {mesh.n_triangles} triangles -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meanhad", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--eig-tol", type=float, default=DEFAULT_TOL,
                        help="eigensolver tolerance (default %(default)g)")

    s = sub.add_parser("insulation", help="lambda_min sweep on the canonical domain")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--levels", type=int, default=5)
    common(s)
    s.set_defaults(func=cmd_insulation)

    s = sub.add_parser("bisect", help="critical coefficient on the thin strip")
    s.add_argument("--k", type=int, nargs="+", required=True)
    s.add_argument("--level", type=int, default=4)
    s.add_argument("--tol", type=float, default=1e-3, help="bracket width")
    s.add_argument("--snap", action="store_true",
                   help="round delta to whole cells instead of fitting the strip")
    common(s)
    s.set_defaults(func=cmd_bisect)

    s = sub.add_parser("neumann", help="eigenmode with a free right part")
    s.add_argument("--c", type=float, default=-4.0)
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--level", type=int, default=4)
    s.add_argument("--layers", type=int, default=64)
    common(s)
    s.set_defaults(func=cmd_neumann)

    s = sub.add_parser("export-mesh", help="write a preset's mesh (and matrices)")
    s.add_argument("--preset", required=True, choices=["canonical", "half", "thin", "neumann"])
    s.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="preset parameter, e.g. c=4 (repeatable)")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--fit-strips", action="store_true")
    s.add_argument("--matrices", action="store_true",
                   help="also dump K1, K2, A in MatrixMarket format")
    common(s)
    s.set_defaults(func=cmd_export_mesh)
    return p


def _validate(args, parser):
    for name in ("levels", "level", "layers"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            parser.error(f"--{name} must be >= 1")
    if getattr(args, "k", None) is not None and min(args.k) < 1:
        parser.error("--k values must be >= 1")
    if getattr(args, "tol", None) is not None and not args.tol > 0:
        parser.error("--tol must be positive")
    if getattr(args, "delta", None) is not None and args.delta < 0:
        parser.error("--delta must be >= 0")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(args, parser)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        return args.func(args)
    except (DomainError, MeshError) as exc:
        print(f"meanhad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EigenError, BisectionError) as exc:
        print(f"meanhad: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
