"""Generate the nonuniform Delaunay test meshes used by the 2D convergence test.

The meshes cover (-0.5, 1) x (0, 1) with jittered grid points triangulated by
scipy's Delaunay routine.  Bottom and top boundary nodes share identical
x-coordinates so they can be paired periodically; left and right boundaries
are tagged dirichlet.  Delaunay triangulations keep the thermal stiffness
nonpositive off the diagonal, which the solver's energy update relies on.

Usage:  python3 scripts/make_delaunay_fixtures.py [out_dir]
"""

import os
import sys

import numpy as np
from scipy.spatial import Delaunay

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from idpns.mesh import MeshTopology, export_mesh  # noqa: E402

X0, X1, Y0, Y1 = -0.5, 1.0, 0.0, 1.0
JITTER = 0.28


def _jitter_1d(vals, rng, amount):
    """Perturb interior entries of a sorted 1D array, endpoints fixed."""
    out = vals.copy()
    if len(vals) > 2:
        dx = np.diff(vals).min()
        out[1:-1] += rng.uniform(-amount * dx, amount * dx, len(vals) - 2)
    return out


def make_mesh(nx: int, ny: int, seed: int) -> MeshTopology:
    rng = np.random.default_rng(seed)
    xs = np.linspace(X0, X1, nx + 1)
    ys = np.linspace(Y0, Y1, ny + 1)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]

    bx = _jitter_1d(xs, rng, JITTER)  # shared by bottom and top
    ly = _jitter_1d(ys, rng, JITTER)
    ry = _jitter_1d(ys, rng, JITTER)

    xi, yi = np.meshgrid(xs[1:-1], ys[1:-1], indexing="ij")
    interior = np.column_stack([xi.ravel(), yi.ravel()])
    interior += rng.uniform(-JITTER, JITTER, interior.shape) * (dx, dy)

    points = [interior]
    index = {}
    start = len(interior)

    def add(block, name):
        nonlocal start
        points.append(block)
        index[name] = np.arange(start, start + len(block))
        start += len(block)

    add(np.column_stack([bx[1:-1], np.full(nx - 1, Y0)]), "bottom")
    add(np.column_stack([bx[1:-1], np.full(nx - 1, Y1)]), "top")
    add(np.column_stack([np.full(ny - 1, X0), ly[1:-1]]), "left")
    add(np.column_stack([np.full(ny - 1, X1), ry[1:-1]]), "right")
    add(np.array([[X0, Y0], [X1, Y0], [X0, Y1], [X1, Y1]]), "corners")
    coords = np.vstack(points)

    tri = Delaunay(coords)
    cells = tri.simplices.astype(np.int64)
    e1 = coords[cells[:, 1]] - coords[cells[:, 0]]
    e2 = coords[cells[:, 2]] - coords[cells[:, 0]]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    flip = det < 0.0
    cells[flip, 1], cells[flip, 2] = cells[flip, 2].copy(), cells[flip, 1].copy()

    tags = {}
    for node in np.concatenate([index["left"], index["right"], index["corners"]]):
        tags[int(node)] = "dirichlet"
    pairs = {}
    for a, b in zip(index["bottom"], index["top"]):
        pairs[int(a)] = int(b)
        pairs[int(b)] = int(a)
    return MeshTopology(2, coords, cells, tags, pairs)


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "tests", "fixtures")
    os.makedirs(out_dir, exist_ok=True)
    for name, nx, ny, seed in [("delaunay_coarse.msh", 81, 54, 10),
                               ("delaunay_fine.msh", 163, 107, 11)]:
        mesh = make_mesh(nx, ny, seed)
        path = os.path.join(out_dir, name)
        export_mesh(mesh, path)
        print(f"{name}: {len(mesh.coords)} nodes, {len(mesh.cells)} cells")


if __name__ == "__main__":
    main()
