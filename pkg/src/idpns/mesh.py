"""Mesh generation, import/export, and dof bookkeeping.

Meshes are P1 simplicial: segments in 1D, triangles in 2D.  Periodic
boundaries are realized by identifying paired boundary nodes into a single
degree of freedom; all discrete operators and solution fields live on the
dof set.

Mesh file format (ASCII)::

    idpmesh <dim> <n_nodes> <n_cells>
    <n_nodes lines of coordinates>
    <n_cells lines of 0-based node indices (2 or 3 per line)>
    boundary            # optional section
    <node_id> <tag>     # tag: dirichlet | slip | periodic:<partner_id>
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


def _boundary_faces(cells: np.ndarray, dim: int) -> np.ndarray:
    """Faces (sorted vertex tuples) that belong to exactly one cell."""
    if dim == 1:
        faces = cells.reshape(-1, 1)
    else:
        faces = np.vstack([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]])
        faces = np.sort(faces, axis=1)
    uniq, counts = np.unique(faces, axis=0, return_counts=True)
    if dim == 2 and (counts > 2).any():
        bad = uniq[counts > 2][0]
        raise MeshError(f"non-conforming mesh: edge {tuple(bad)} shared by >2 cells")
    return uniq[counts == 1]


@dataclass
class MeshTopology:
    """Simplicial mesh with boundary tags and optional periodic node pairing."""

    dim: int
    coords: np.ndarray  # (n_nodes, dim)
    cells: np.ndarray  # (n_cells, dim + 1) node indices
    boundary_tags: dict = field(default_factory=dict)  # node -> "dirichlet" | "slip"
    periodic_pairs: dict = field(default_factory=dict)  # node -> partner node

    boundary_nodes: np.ndarray = field(init=False)
    dof_of_node: np.ndarray = field(init=False)
    n_dofs: int = field(init=False)
    node_of_dof: np.ndarray = field(init=False)

    def __post_init__(self):
        self.coords = np.ascontiguousarray(self.coords, dtype=float).reshape(-1, self.dim)
        self.cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        n = self.n_nodes
        if self.cells.size and (self.cells.min() < 0 or self.cells.max() >= n):
            raise MeshError("cell references a node index out of range")
        used = np.zeros(n, dtype=bool)
        used[self.cells.ravel()] = True
        if not used.all():
            raise MeshError(f"node referenced by no cell: {int(np.argmin(used))}")

        if self.dim == 2:
            self._orient_cells()

        faces = _boundary_faces(self.cells, self.dim)
        self.boundary_nodes = np.unique(faces.ravel())

        for a, b in self.periodic_pairs.items():
            if self.periodic_pairs.get(b) != a:
                raise MeshError(f"periodic pairing of node {a} is not an involution")

        # dof identification: each periodic pair shares the dof of its smaller node
        rep = np.arange(n)
        for a, b in self.periodic_pairs.items():
            rep[max(a, b)] = min(a, b)
        uniq, dof = np.unique(rep, return_inverse=True)
        self.dof_of_node = dof
        self.n_dofs = len(uniq)
        self.node_of_dof = uniq

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.where(mask)[0]

    def dof_coords(self) -> np.ndarray:
        return self.coords[self.node_of_dof]

    def dofs_with_tag(self, tag: str) -> np.ndarray:
        nodes = [n for n, t in self.boundary_tags.items() if t == tag]
        return np.unique(self.dof_of_node[np.array(nodes, dtype=np.int64)]) if nodes else np.empty(0, dtype=np.int64)

    def _orient_cells(self):
        p = self.coords
        c = self.cells
        det = (p[c[:, 1], 0] - p[c[:, 0], 0]) * (p[c[:, 2], 1] - p[c[:, 0], 1]) - (
            p[c[:, 2], 0] - p[c[:, 0], 0]
        ) * (p[c[:, 1], 1] - p[c[:, 0], 1])
        flip = det < 0.0
        self.cells[flip] = self.cells[flip][:, [0, 2, 1]]


def generate_uniform_1d(a: float, b: float, n: int, periodic: bool = False,
                        tag: str = "dirichlet") -> MeshTopology:
    """Uniform segment mesh with n nodes on [a, b]."""
    if n < 2:
        raise MeshError(f"need at least 2 nodes, got {n}")
    if not b > a:
        raise MeshError(f"degenerate interval [{a}, {b}]")
    coords = np.linspace(a, b, n)[:, None]
    cells = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    tags = {}
    pairs = {}
    if periodic:
        pairs = {0: n - 1, n - 1: 0}
    else:
        tags = {0: tag, n - 1: tag}
    return MeshTopology(1, coords, cells, tags, pairs)


def generate_structured_tri_2d(box, nx: int, ny: int, diagonal: str = "alternating",
                               tags: dict | None = None) -> MeshTopology:
    """Structured triangle mesh of a box, nx-by-ny quads split into triangles.

    ``diagonal='alternating'`` flips the split direction per quad parity so
    the thermal stiffness stays nonpositive off-diagonal on right triangles.
    ``tags`` maps side name (left/right/bottom/top) to 'dirichlet', 'slip'
    or 'periodic' (pairs opposite sides; only bottom/top supported).
    """
    x0, x1, y0, y1 = box
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate box {box}")
    if nx < 1 or ny < 1:
        raise MeshError("need at least one cell in each direction")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    coords = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            p00, p10 = nid(i, j), nid(i + 1, j)
            p01, p11 = nid(i, j + 1), nid(i + 1, j + 1)
            if diagonal == "alternating" and (i + j) % 2 == 1:
                cells.append([p00, p10, p11])
                cells.append([p00, p11, p01])
            else:
                cells.append([p00, p10, p01])
                cells.append([p10, p11, p01])
    cells = np.array(cells, dtype=np.int64)

    tags = dict(tags or {"left": "dirichlet", "right": "dirichlet",
                         "bottom": "dirichlet", "top": "dirichlet"})
    node_tags = {}
    pairs = {}
    side_nodes = {
        "left": [nid(0, j) for j in range(ny + 1)],
        "right": [nid(nx, j) for j in range(ny + 1)],
        "bottom": [nid(i, 0) for i in range(nx + 1)],
        "top": [nid(i, ny) for i in range(nx + 1)],
    }
    if tags.get("bottom") == "periodic" or tags.get("top") == "periodic":
        for i in range(nx + 1):
            a, b = nid(i, 0), nid(i, ny)
            pairs[a] = b
            pairs[b] = a
        tags.pop("bottom", None)
        tags.pop("top", None)
    for side, t in tags.items():
        if t == "periodic":
            raise MeshError("periodic pairing only supported for bottom/top sides")
        for node in side_nodes[side]:
            if node not in pairs:
                node_tags.setdefault(node, t)
    return MeshTopology(2, coords, cells, node_tags, pairs)


def import_mesh(path) -> MeshTopology:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("idpmesh"):
        raise MeshError(f"{path}: missing 'idpmesh' header")
    parts = lines[0].split()
    try:
        dim, n_nodes, n_cells = int(parts[1]), int(parts[2]), int(parts[3])
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed header {lines[0]!r}") from exc
    if dim not in (1, 2):
        raise MeshError(f"{path}: unsupported dimension {dim}")
    if len(lines) < 1 + n_nodes + n_cells:
        raise MeshError(f"{path}: truncated file")

    try:
        coords = np.array([[float(v) for v in lines[1 + i].split()] for i in range(n_nodes)])
        cells = np.array(
            [[int(v) for v in lines[1 + n_nodes + i].split()] for i in range(n_cells)],
            dtype=np.int64,
        )
    except ValueError as exc:
        raise MeshError(f"{path}: malformed node/cell line: {exc}") from exc
    if coords.shape[1] != dim or cells.shape[1] != dim + 1:
        raise MeshError(f"{path}: wrong number of columns for dimension {dim}")

    span = coords.max(axis=0) - coords.min(axis=0)
    diameter = float(np.linalg.norm(span)) or 1.0
    order = np.lexsort(coords.T)
    close = np.all(np.abs(np.diff(coords[order], axis=0)) <= 1e-12 * diameter, axis=1)
    if close.any():
        k = int(np.argmax(close))
        raise MeshError(
            f"{path}: duplicate nodes {order[k]} and {order[k + 1]} within tolerance"
        )

    tags = {}
    pairs = {}
    rest = lines[1 + n_nodes + n_cells :]
    if rest:
        if rest[0] != "boundary":
            raise MeshError(f"{path}: unexpected content {rest[0]!r}")
        for ln in rest[1:]:
            node_s, tag = ln.split()
            node = int(node_s)
            if tag.startswith("periodic:"):
                pairs[node] = int(tag.split(":", 1)[1])
            elif tag in ("dirichlet", "slip"):
                tags[node] = tag
            else:
                raise MeshError(f"{path}: unknown boundary tag {tag!r}")
    return MeshTopology(dim, coords, cells, tags, pairs)


def export_mesh(mesh: MeshTopology, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"idpmesh {mesh.dim} {mesh.n_nodes} {mesh.n_cells}\n")
        for p in mesh.coords:
            fh.write(" ".join(repr(float(v)) for v in p) + "\n")
        for c in mesh.cells:
            fh.write(" ".join(str(int(v)) for v in c) + "\n")
        if mesh.boundary_tags or mesh.periodic_pairs:
            fh.write("boundary\n")
            for node, tag in sorted(mesh.boundary_tags.items()):
                fh.write(f"{node} {tag}\n")
            for node, partner in sorted(mesh.periodic_pairs.items()):
                fh.write(f"{node} periodic:{partner}\n")
