"""Implicit viscous substep: velocity solve, internal-energy update, FCT.

Density is frozen during this substep.  The velocity gets a Crank-Nicolson
solve against the viscous operator; internal energy is advanced with a
low-order positivity-preserving backward step and a Crank-Nicolson target,
then flux-corrected so the result stays above the local minimum principle.
Total energy is reassembled from the limited pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assembly import DiscreteOperators
from .boundary import BoundaryCondition
from .state import GasModel, SolutionField, check_admissible, internal_energy, velocity


class LinearSolverError(RuntimeError):
    def __init__(self, msg: str, residuals: np.ndarray):
        super().__init__(msg)
        self.residuals = residuals


@dataclass
class ParabolicConfig:
    cg_tol: float = 1e-10
    cg_max_iter_factor: int = 10
    fct_energy: bool = True


@dataclass
class ParabolicReport:
    velocity_iters: int = 0
    energy_low_iters: int = 0
    energy_high_iters: int = 0
    l_minus_min: float = 1.0


def cg_solve(apply_a: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
             precond: Callable[[np.ndarray], np.ndarray], tol: float = 1e-10,
             max_iter: int | None = None, x0: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Preconditioned conjugate gradients on flat SPD systems.

    Convergence test is relative to ||b||; the operator and preconditioner
    act on arrays of the shape of ``b`` (flattened internally).
    """
    shape = b.shape
    bf = b.ravel()
    nrm_b = np.linalg.norm(bf)
    if nrm_b == 0.0:
        return np.zeros(shape), 0
    if max_iter is None:
        max_iter = max(100, 10 * bf.size)
    x = np.zeros(shape) if x0 is None else x0.copy()
    r = b - apply_a(x)
    if np.linalg.norm(r) <= tol * nrm_b:
        return x, 0
    z = precond(r)
    p = z.copy()
    rz = float(np.vdot(r, z))
    history = [np.linalg.norm(r) / nrm_b]
    for it in range(1, max_iter + 1):
        ap = apply_a(p)
        pap = float(np.vdot(p, ap))
        if pap <= 0.0:
            raise LinearSolverError(
                "conjugate gradients hit a non-positive curvature direction",
                np.array(history),
            )
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        res = np.linalg.norm(r) / nrm_b
        history.append(res)
        if res <= tol:
            return x, it
        z = precond(r)
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolverError(
        f"conjugate gradients stalled at relative residual {history[-1]:.3e}",
        np.array(history),
    )


def _apply_bvisc(ops: DiscreteOperators, w: np.ndarray) -> np.ndarray:
    """y_i = sum_j B_ij w_j with the (nnz, dim, dim) viscous blocks."""
    return ops.rowsum(np.einsum("eab,eb->ea", ops.bvisc, w[ops.indices]))


def _constrain_rows(ops: DiscreteOperators, w: np.ndarray) -> np.ndarray:
    """Zero dirichlet components and slip-normal components of a velocity field."""
    out = w.copy()
    if len(ops.dirichlet_dofs):
        out[ops.dirichlet_dofs] = 0.0
    if len(ops.slip_dofs):
        nrm = ops.slip_normals
        vn = np.sum(out[ops.slip_dofs] * nrm, axis=1)
        out[ops.slip_dofs] -= vn[:, None] * nrm
    return out


def velocity_update(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                    dt: float, cfg: ParabolicConfig,
                    bc: Optional[BoundaryCondition] = None,
                    forcing: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    """Crank-Nicolson viscous velocity solve with frozen density.

    Solves  rho_i m_i v*_i + (dt/2) sum_j B_ij v*_j = m_i M_i/rho_i terms,
    i.e. the midpoint system; returns (v_half, v_new, iterations).
    Dirichlet velocity (if a sampler is present) is imposed at t + dt/2.
    """
    dim = field.dim
    rho = field.rho
    m = ops.m_lumped
    v_old = velocity(field.u, dim)

    v_bc = np.zeros_like(v_old)
    if len(ops.dirichlet_dofs):
        vb = bc.dirichlet_velocity(ops, field.t + 0.5 * dt) if bc is not None else None
        if vb is not None:
            v_bc[ops.dirichlet_dofs] = vb
        else:
            # no sampler: hold the current boundary velocity
            v_bc[ops.dirichlet_dofs] = v_old[ops.dirichlet_dofs]
    if len(ops.slip_dofs):
        nrm = ops.slip_normals
        vn = np.sum(v_bc[ops.slip_dofs] * nrm, axis=1)
        v_bc[ops.slip_dofs] -= vn[:, None] * nrm

    diag = (rho * m)[:, None]

    def apply_a(w):
        y = diag * w + 0.5 * dt * _apply_bvisc(ops, w)
        return _constrain_rows(ops, y)

    b = m[:, None] * (rho[:, None] * v_old)
    if forcing is not None:
        b = b + 0.5 * dt * m[:, None] * forcing
    b = b - (diag * v_bc + 0.5 * dt * _apply_bvisc(ops, v_bc))
    b = _constrain_rows(ops, b)

    # block-jacobi preconditioner: nodal rho m I + (dt/2) diag(B_ii)
    bd = ops.bvisc[ops.diag_pos]
    blocks = diag[:, :, None] * np.eye(dim) + 0.5 * dt * bd
    inv_blocks = np.linalg.inv(blocks)

    def precond(r):
        # keep iterates in the constrained subspace (SPD holds there)
        return _constrain_rows(ops, np.einsum("iab,ib->ia", inv_blocks, r))

    max_it = max(200, cfg.cg_max_iter_factor * len(rho) * dim)
    w, iters = cg_solve(apply_a, b, precond, tol=cfg.cg_tol, max_iter=max_it)
    v_half = w + v_bc
    v_new = 2.0 * v_half - v_old
    if bc is not None:
        vb_end = bc.dirichlet_velocity(ops, field.t + dt)
        if vb_end is not None:
            v_new[ops.dirichlet_dofs] = vb_end
    return v_half, v_new, iters


def viscous_dissipation(ops: DiscreteOperators, gas: GasModel,
                        v: np.ndarray) -> np.ndarray:
    """Nodal dissipation rate K_i = (1/m_i) integral of s(v):e(v) phi_i.

    The stress-strain contraction is cellwise constant for P1 velocity, so
    each cell spreads its contribution evenly over its vertices.
    """
    dim = ops.dim
    grad = np.einsum("cld,cle->cde", ops.cell_grads, v[ops.cells])  # dv_e/dx_d
    e = 0.5 * (grad + np.transpose(grad, (0, 2, 1)))
    div = np.trace(grad, axis1=1, axis2=2)
    mu, lam = gas.mu, gas.lam
    sd = 2.0 * mu * e + (lam - 2.0 * mu / 3.0) * div[:, None, None] * np.eye(dim)
    # lumped quadrature: integral of (s:e) phi_i over a cell is (s:e) |K|/(d+1)
    rate = np.einsum("cde,cde->c", sd, e) * ops.cell_measure / (dim + 1)
    k = np.zeros(ops.n)
    np.add.at(k, ops.cells.ravel(), np.repeat(rate, dim + 1))
    return k / ops.m_lumped


def energy_low_order(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                     dt: float, k_diss: np.ndarray,
                     cfg: ParabolicConfig) -> tuple[np.ndarray, int]:
    """Backward-Euler thermal step, (m rho I + dt beta) e = m rho e^n + dt m K.

    With beta_ij <= 0 off the diagonal (acute meshes) the matrix is an
    M-matrix and the solution satisfies a minimum principle.
    """
    rho = field.rho
    m = ops.m_lumped
    e_old = internal_energy(field.u, field.dim)
    diag = m * rho + dt * ops.beta[ops.diag_pos]

    def apply_a(w):
        return diag * w + dt * ops.rowsum(
            np.where(ops.offdiag, ops.beta, 0.0) * w[ops.indices]
        )

    b = m * rho * e_old + dt * m * k_diss
    inv_d = 1.0 / diag
    e_new, iters = cg_solve(apply_a, b, lambda r: inv_d * r, tol=cfg.cg_tol,
                            max_iter=max(200, cfg.cg_max_iter_factor * len(rho)),
                            x0=e_old)
    return e_new, iters


def energy_high_order(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                      dt: float, k_diss: np.ndarray,
                      cfg: ParabolicConfig) -> tuple[np.ndarray, int]:
    """Crank-Nicolson thermal target via a midpoint solve and extrapolation."""
    rho = field.rho
    m = ops.m_lumped
    e_old = internal_energy(field.u, field.dim)
    hdt = 0.5 * dt
    diag = m * rho + hdt * ops.beta[ops.diag_pos]

    def apply_a(w):
        return diag * w + hdt * ops.rowsum(
            np.where(ops.offdiag, ops.beta, 0.0) * w[ops.indices]
        )

    b = m * rho * e_old + hdt * m * k_diss
    inv_d = 1.0 / diag
    e_half, iters = cg_solve(apply_a, b, lambda r: inv_d * r, tol=cfg.cg_tol,
                             max_iter=max(200, cfg.cg_max_iter_factor * len(rho)),
                             x0=e_old)
    return 2.0 * e_half - e_old, iters


def fct_limit_energy(field: SolutionField, ops: DiscreteOperators, dt: float,
                     e_low: np.ndarray, e_high: np.ndarray) -> tuple[np.ndarray, float]:
    """Zalesak-style correction keeping e above the global minimum of e_old.

    Edge fluxes A_ij are antisymmetric by construction, so the corrected
    field conserves sum m_i rho_i e_i exactly (up to roundoff).
    """
    rho = field.rho
    m = ops.m_lumped
    e_old = internal_energy(field.u, field.dim)
    i, j = ops.rows, ops.indices
    beta_off = np.where(ops.offdiag, ops.beta, 0.0)
    a = -0.5 * dt * beta_off * (
        (e_high[j] - e_high[i]) + (e_old[j] - e_old[i]) - 2.0 * (e_low[j] - e_low[i])
    )
    e_min = e_old.min()
    p_minus = ops.rowsum(np.minimum(a, 0.0))
    q_minus = m * rho * (e_min - e_low)
    with np.errstate(divide="ignore", invalid="ignore"):
        l_minus = np.where(p_minus < 0.0, np.minimum(1.0, q_minus / p_minus), 1.0)
    l_minus = np.clip(np.nan_to_num(l_minus, nan=1.0), 0.0, 1.0)
    l_edge = np.where(a >= 0.0, l_minus[j], l_minus[i])
    e_new = e_low + ops.rowsum(l_edge * a) / (m * rho)
    return e_new, float(l_minus.min()) if len(l_minus) else 1.0


def parabolic_step(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                   dt: float, cfg: ParabolicConfig | None = None,
                   bc: Optional[BoundaryCondition] = None,
                   forcing: np.ndarray | None = None) -> tuple[SolutionField, ParabolicReport]:
    """Full viscous substep: velocity, dissipation, energy, reassembly.

    Density is returned bitwise unchanged.
    """
    cfg = cfg or ParabolicConfig()
    check_admissible(field.u, field.dim, "parabolic_step")
    report = ParabolicReport()

    if gas.mu == 0.0 and gas.lam == 0.0:
        out = field.copy()
        out.t = field.t + dt
        return out, report

    rho = field.rho
    v_half, v_new, report.velocity_iters = velocity_update(
        field, ops, gas, dt, cfg, bc, forcing
    )
    k_diss = viscous_dissipation(ops, gas, v_half)

    e_low, report.energy_low_iters = energy_low_order(field, ops, gas, dt, k_diss, cfg)
    if cfg.fct_energy:
        e_high, report.energy_high_iters = energy_high_order(field, ops, gas, dt, k_diss, cfg)
        e_new, report.l_minus_min = fct_limit_energy(field, ops, dt, e_low, e_high)
    else:
        e_new = e_low

    u_new = np.empty_like(field.u)
    u_new[:, 0] = field.u[:, 0]
    u_new[:, 1 : 1 + field.dim] = rho[:, None] * v_new
    u_new[:, -1] = rho * e_new + 0.5 * rho * np.sum(v_new**2, axis=1)
    out = SolutionField(u_new, field.dim, field.t + dt)
    check_admissible(out.u, out.dim, "parabolic_step result")
    return out, report
