"""Assembly of the discrete operators shared by both substeps.

All operators (consistent mass, c_ij vectors, thermal stiffness beta_ij,
viscous d-by-d blocks B_ij) live on one shared CSR stencil graph over the
dof set.  P1 integrands are polynomials of degree <= 2, so the midpoint /
vertex rules used here are exact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .mesh import MeshTopology
from .state import GasModel


class AssemblyError(ValueError):
    pass


@dataclass
class DiscreteOperators:
    mesh: MeshTopology
    gas: GasModel
    dim: int
    n: int  # number of dofs

    # shared CSR stencil (includes the diagonal)
    indptr: np.ndarray
    indices: np.ndarray
    rows: np.ndarray  # expanded row index per entry
    trans: np.ndarray  # entry index of the transposed entry
    diag_pos: np.ndarray  # entry index of (i, i) per row

    m_lumped: np.ndarray  # (n,)
    m_cons: np.ndarray  # (nnz,)
    c: np.ndarray  # (nnz, dim)
    c_norm: np.ndarray  # (nnz,)
    n_unit: np.ndarray  # (nnz, dim)
    beta: np.ndarray  # (nnz,)
    bvisc: np.ndarray  # (nnz, dim, dim)

    # cell data (dof indices) for exact per-cell quadrature of dissipation
    cells: np.ndarray
    cell_measure: np.ndarray
    cell_grads: np.ndarray  # (n_cells, dim+1, dim)

    coords: np.ndarray  # representative dof coordinates
    dirichlet_dofs: np.ndarray
    slip_dofs: np.ndarray
    slip_normals: np.ndarray  # (len(slip_dofs), dim) unit outward
    boundary_dofs: np.ndarray

    domain_measure: float = field(init=False)

    def __post_init__(self):
        self.domain_measure = float(self.cell_measure.sum())
        self.offdiag = self.rows != self.indices
        self.n_neighbors = np.diff(self.indptr) - 1

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def rowsum(self, edge_vals: np.ndarray) -> np.ndarray:
        """Sum CSR entry values over each row (axis 0 of edge_vals)."""
        return np.add.reduceat(edge_vals, self.indptr[:-1], axis=0)

    def rowmin(self, edge_vals: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        vals = edge_vals if mask is None else np.where(mask, edge_vals, np.inf)
        return np.minimum.reduceat(vals, self.indptr[:-1])

    def rowmax(self, edge_vals: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        vals = edge_vals if mask is None else np.where(mask, edge_vals, -np.inf)
        return np.maximum.reduceat(vals, self.indptr[:-1])

    def gather(self, nodal: np.ndarray) -> np.ndarray:
        """Values of a nodal array at the column (neighbor) of each entry."""
        return nodal[self.indices]


def _cell_geometry(mesh: MeshTopology):
    p = mesh.coords
    c = mesh.cells
    if mesh.dim == 1:
        h = p[c[:, 1], 0] - p[c[:, 0], 0]
        measure = np.abs(h)
        if (measure <= 0.0).any():
            raise AssemblyError(f"zero-length cell {int(np.argmin(measure > 0))}")
        grads = np.empty((len(c), 2, 1))
        grads[:, 0, 0] = -1.0 / h
        grads[:, 1, 0] = 1.0 / h
        return measure, grads
    v0, v1, v2 = p[c[:, 0]], p[c[:, 1]], p[c[:, 2]]
    e1 = v1 - v0
    e2 = v2 - v0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    measure = 0.5 * det  # cells are CCW oriented
    if (measure <= 0.0).any():
        raise AssemblyError(f"zero-area cell {int(np.argmin(measure > 0))}")
    # grad phi_i is the inward-rotated opposite edge over twice the area
    grads = np.empty((len(c), 3, 2))
    for i, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        edge = p[c[:, b]] - p[c[:, a]]
        grads[:, i, 0] = -edge[:, 1] / det
        grads[:, i, 1] = edge[:, 0] / det
    return measure, grads


def _boundary_normals(mesh: MeshTopology):
    """Lumped outward unit normal per boundary node (dict node -> normal)."""
    p = mesh.coords
    accum: dict[int, np.ndarray] = {}
    if mesh.dim == 1:
        lo = int(np.argmin(p[:, 0]))
        hi = int(np.argmax(p[:, 0]))
        accum[lo] = np.array([-1.0])
        accum[hi] = np.array([1.0])
        return accum
    from .mesh import _boundary_faces

    faces = _boundary_faces(mesh.cells, 2)
    face_set = {tuple(f) for f in map(tuple, faces)}
    centroids = p[mesh.cells].mean(axis=1)
    for ci, cell in enumerate(mesh.cells):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            key = tuple(sorted((cell[a], cell[b])))
            if key not in face_set:
                continue
            edge = p[cell[b]] - p[cell[a]]
            nrm = np.array([edge[1], -edge[0]])
            mid = 0.5 * (p[cell[a]] + p[cell[b]])
            if np.dot(nrm, mid - centroids[ci]) < 0.0:
                nrm = -nrm
            w = 0.5  # |edge| / 2 per endpoint, |edge| already in nrm
            for node in (cell[a], cell[b]):
                accum[node] = accum.get(node, 0.0) + w * nrm
    return accum


def assemble_operators(mesh: MeshTopology, gas: GasModel,
                       strict_acute: bool = False) -> DiscreteOperators:
    """Assemble all discrete operators on the shared stencil graph.

    With ``strict_acute`` a positive off-diagonal thermal stiffness entry is
    an error; by default it only warns (the discrete minimum principle is
    then not guaranteed).
    """
    if gas.mu < 0.0:
        raise AssemblyError("negative viscosity")
    dim = mesh.dim
    nloc = dim + 1
    measure, grads = _cell_geometry(mesh)
    cd = mesh.dof_of_node[mesh.cells]
    n = mesh.n_dofs

    # shared CSR graph from all local (row, col) pairs
    loc_r, loc_c = np.meshgrid(np.arange(nloc), np.arange(nloc), indexing="ij")
    pair_r = cd[:, loc_r.ravel()].ravel()
    pair_c = cd[:, loc_c.ravel()].ravel()
    keys = pair_r * np.int64(n) + pair_c
    uniq, inv = np.unique(keys, return_inverse=True)
    rows = (uniq // n).astype(np.int64)
    indices = (uniq % n).astype(np.int64)
    indptr = np.searchsorted(rows, np.arange(n + 1))
    nnz = len(uniq)

    # transpose permutation (structure is symmetric)
    sigma = np.lexsort((rows, indices))
    trans = np.empty(nnz, dtype=np.int64)
    trans[sigma] = np.arange(nnz)
    diag_pos = np.where(rows == indices)[0]
    if len(diag_pos) != n:
        raise AssemblyError("stencil graph is missing diagonal entries")

    # local element matrices (exact for P1)
    w_mass = measure / (nloc * (nloc + 1.0))  # off-diagonal consistent mass weight
    mass_loc = w_mass[:, None, None] * (np.ones((nloc, nloc)) + np.eye(nloc))
    c_loc = (measure / nloc)[:, None, None, None] * np.broadcast_to(
        grads[:, None, :, :], (len(measure), nloc, nloc, dim)
    )  # entry [cell, i, j, :] = |K|/nloc * grad phi_j
    stiff_loc = np.einsum("kid,kjd,k->kij", grads, grads, measure)

    mu, lam = gas.mu, gas.lam
    gij = np.einsum("kid,kjd->kij", grads, grads)
    b_loc = (
        mu * np.einsum("kij,ab->kiajb", gij, np.eye(dim))
        + mu * np.einsum("kja,kib->kiajb", grads, grads)
        + (lam - 2.0 * mu / 3.0) * np.einsum("kjb,kia->kiajb", grads, grads)
    ) * measure[:, None, None, None, None]
    # b_loc[cell, i, a, j, b] = (B_ij)_{ab}; flatten to pair order (i, j)
    b_loc = np.transpose(b_loc, (0, 1, 3, 2, 4))

    m_cons = np.zeros(nnz)
    c_ij = np.zeros((nnz, dim))
    beta = np.zeros(nnz)
    bvisc = np.zeros((nnz, dim, dim))
    np.add.at(m_cons, inv, mass_loc.reshape(-1))
    np.add.at(c_ij, inv, c_loc.reshape(-1, dim))
    np.add.at(beta, inv, gas.kappa_over_cv * stiff_loc.reshape(-1))
    np.add.at(bvisc, inv, b_loc.reshape(-1, dim, dim))

    m_lumped = np.zeros(n)
    np.add.at(m_lumped, cd.ravel(), np.repeat(measure / nloc, nloc))

    c_norm = np.linalg.norm(c_ij, axis=1)
    n_unit = np.zeros_like(c_ij)
    nz = c_norm > 0.0
    n_unit[nz] = c_ij[nz] / c_norm[nz, None]

    offdiag = rows != indices
    tol = 1e-12 * max(1.0, float(np.abs(beta).max())) if nnz else 0.0
    worst = float(beta[offdiag].max()) if offdiag.any() else 0.0
    if worst > tol:
        msg = f"non-acute mesh: positive off-diagonal thermal stiffness (max {worst:.3e})"
        if strict_acute:
            raise AssemblyError(msg)
        if gas.kappa_over_cv > 0.0:
            warnings.warn(msg, stacklevel=2)

    tags = mesh.boundary_tags
    dirichlet_nodes = [nd for nd, t in tags.items() if t == "dirichlet"]
    slip_nodes = [nd for nd, t in tags.items() if t == "slip"]
    dirichlet_dofs = (
        np.unique(mesh.dof_of_node[np.array(dirichlet_nodes, dtype=np.int64)])
        if dirichlet_nodes
        else np.empty(0, dtype=np.int64)
    )
    normals = _boundary_normals(mesh)
    slip_dofs = []
    slip_normals = []
    for nd in slip_nodes:
        dof = int(mesh.dof_of_node[nd])
        nrm = normals.get(nd)
        if nrm is None:
            continue
        slip_dofs.append(dof)
        slip_normals.append(nrm / np.linalg.norm(nrm))
    slip_dofs = np.array(slip_dofs, dtype=np.int64) if slip_dofs else np.empty(0, dtype=np.int64)
    slip_normals = (
        np.array(slip_normals) if len(slip_normals) else np.empty((0, dim))
    )
    boundary_dofs = np.unique(mesh.dof_of_node[mesh.boundary_nodes])

    return DiscreteOperators(
        mesh=mesh,
        gas=gas,
        dim=dim,
        n=n,
        indptr=indptr,
        indices=indices,
        rows=rows,
        trans=trans,
        diag_pos=diag_pos,
        m_lumped=m_lumped,
        m_cons=m_cons,
        c=c_ij,
        c_norm=c_norm,
        n_unit=n_unit,
        beta=beta,
        bvisc=bvisc,
        cells=cd,
        cell_measure=measure,
        cell_grads=grads,
        coords=mesh.dof_coords(),
        dirichlet_dofs=dirichlet_dofs,
        slip_dofs=slip_dofs,
        slip_normals=slip_normals,
        boundary_dofs=boundary_dofs,
    )
