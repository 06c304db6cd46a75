"""Plain-text outputs: CSV tables, JSON manifests, legacy VTK, MatrixMarket."""
from __future__ import annotations

import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np
import scipy
import scipy.io

from .mesh import TriMesh

# 6 significant digits in scientific notation for spectral quantities
EIG_COLUMNS = {"lambda_min", "energy", "phi1", "phi2"}


def _fmt(key: str, value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if key in EIG_COLUMNS:
            return f"{float(value):.5e}"
        return repr(float(value))
    return str(value)


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> Path:
    path = Path(path)
    if columns is None:
        columns = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(c, row[c]) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def versions() -> dict:
    from . import __version__
    return {
        "meanhad": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def command_line() -> str:
    return " ".join(sys.argv)


def write_mesh_csv(mesh: TriMesh, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    nodes = [{"id": i, "x": x, "y": y} for i, (x, y) in enumerate(mesh.nodes)]
    tris = [{"id": i, "n0": t[0], "n1": t[1], "n2": t[2], "region_tag": r}
            for i, (t, r) in enumerate(zip(mesh.triangles, mesh.region_tag))]
    return (write_csv(directory / "nodes.csv", nodes, ["id", "x", "y"]),
            write_csv(directory / "triangles.csv", tris,
                      ["id", "n0", "n1", "n2", "region_tag"]))


def write_vtk(path, mesh: TriMesh, point_vectors: dict | None = None,
              cell_scalars: dict | None = None, title: str = "meanhad mesh") -> Path:
    """Legacy ASCII VTK unstructured grid of triangles (cell type 5).

    ``point_vectors`` maps names to (n_nodes, 2) arrays (written with z = 0);
    ``cell_scalars`` maps names to per-triangle arrays. The region tag is
    always written as an integer cell field.
    """
    path = Path(path)
    f = _fmt_num
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    lines += [f"{f(x)} {f(y)} 0" for x, y in mesh.nodes]
    n_tri = mesh.n_triangles
    lines.append(f"CELLS {n_tri} {4 * n_tri}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {n_tri}")
    lines += ["5"] * n_tri
    lines += [f"CELL_DATA {n_tri}", "SCALARS region_tag int 1", "LOOKUP_TABLE default"]
    lines += [str(int(t)) for t in mesh.region_tag]
    for name, vals in (cell_scalars or {}).items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f(v) for v in np.asarray(vals, dtype=float)]
    if point_vectors:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, vals in point_vectors.items():
            lines.append(f"VECTORS {name} double")
            lines += [f"{f(a)} {f(b)} 0" for a, b in np.asarray(vals, dtype=float)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _fmt_num(v) -> str:
    return repr(float(v))


def write_matrix_market(path, A, comment: str = "") -> Path:
    """Coordinate-format dump of a symmetric matrix (lower triangle stored)."""
    path = Path(path)
    scipy.io.mmwrite(str(path), A.tocoo(), comment=comment, field="real",
                     symmetry="symmetric")
    return path
