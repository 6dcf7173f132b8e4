"""File outputs: convergence CSV, legacy ASCII VTK point data, schlieren map."""

from __future__ import annotations

import csv
import os
import tempfile

import numpy as np

from .assembly import DiscreteOperators
from .state import SolutionField

CSV_COLUMNS = ["N", "delta1", "rate1", "delta2", "rate2", "deltainf", "rateinf"]


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_convergence_csv(path: str, rows: list[dict]) -> None:
    """Rows carry N/delta*/rate* keys; missing rates render as '--'."""
    out = [",".join(CSV_COLUMNS)]
    for row in rows:
        cells = []
        for col in CSV_COLUMNS:
            val = row.get(col)
            if val is None:
                cells.append("--")
            elif col == "N":
                cells.append(str(int(val)))
            elif col.startswith("rate"):
                cells.append(f"{val:.2f}")
            else:
                cells.append(f"{val:.6e}")
        out.append(",".join(cells))
    _atomic_write(path, "\n".join(out) + "\n")


def read_convergence_csv(path: str) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for col in CSV_COLUMNS:
                raw = rec[col]
                row[col] = None if raw == "--" else float(raw)
            rows.append(row)
    return rows


def density_gradient_magnitude(field: SolutionField, ops: DiscreteOperators) -> np.ndarray:
    """Nodal ||grad rho|| via lumped L2 projection of the cellwise gradient."""
    rho = field.u[:, 0]
    g_cell = np.einsum("cld,cl->cd", ops.cell_grads, rho[ops.cells])
    g = np.zeros((ops.n, ops.dim))
    w = ops.cell_measure / (ops.dim + 1)
    np.add.at(g, ops.cells.ravel(),
              np.repeat(g_cell * w[:, None], ops.dim + 1, axis=0))
    g /= ops.m_lumped[:, None]
    return np.linalg.norm(g, axis=1)


def schlieren(field: SolutionField, ops: DiscreteOperators) -> np.ndarray:
    """Contrast map exp(-10 (g - g_min)/(g_max - g_min)) of the density gradient."""
    g = density_gradient_magnitude(field, ops)
    lo, hi = g.min(), g.max()
    if hi <= lo:
        return np.ones_like(g)
    return np.exp(-10.0 * (g - lo) / (hi - lo))


def write_vtk(path: str, field: SolutionField, ops: DiscreteOperators,
              extra_point_data: dict | None = None) -> None:
    """Legacy ASCII VTK unstructured grid with conserved fields as point data."""
    dim = ops.dim
    n = ops.n
    coords3 = np.zeros((n, 3))
    coords3[:, :dim] = ops.coords
    cells = ops.cells
    nloc = cells.shape[1]
    vtk_type = 3 if dim == 1 else 5  # line / triangle

    lines = [
        "# vtk DataFile Version 3.0",
        f"solution t={field.t:.12g}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines += [" ".join(f"{v:.12e}" for v in p) for p in coords3]
    lines.append(f"CELLS {len(cells)} {len(cells) * (nloc + 1)}")
    lines += [f"{nloc} " + " ".join(str(v) for v in c) for c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(vtk_type)] * len(cells)
    lines.append(f"POINT_DATA {n}")

    def scalar(name, vals):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v:.12e}" for v in vals)

    scalar("density", field.u[:, 0])
    for k in range(dim):
        scalar(f"momentum_{'xyz'[k]}", field.u[:, 1 + k])
    scalar("total_energy", field.u[:, -1])
    for name, vals in (extra_point_data or {}).items():
        scalar(name, vals)
    _atomic_write(path, "\n".join(lines) + "\n")
