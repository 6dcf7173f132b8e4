"""Explicit invariant-domain-preserving hyperbolic substep.

Pipeline per forward-Euler stage: graph viscosity from a wave-speed bound,
bar states and local bounds, low-order update, entropy-commutator high-order
target, convex limiting, boundary fix-up.  Two stages compose into the
SSPRK(2,2) substep used by the splitting driver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .assembly import DiscreteOperators
from .boundary import BoundaryCondition
from .state import (
    GasModel,
    SolutionField,
    check_admissible,
    entropy_and_derivative,
    flux,
    internal_energy,
    velocity,
)
from .wavespeed import max_wavespeed_primitive


class CFLError(RuntimeError):
    def __init__(self, msg: str, dt0: float):
        super().__init__(msg)
        self.dt0 = dt0


@dataclass
class HyperbolicConfig:
    use_high_order: bool = True
    relax_bounds: bool = False  # entropy/density bound relaxation, default off
    relax_factor: float = 1.0
    indicator_power: float = 0.67
    limiter_bisection_iters: int = 32
    limiter_tol: float = 1e-12
    stage_cfl_max: float = 1.0


@dataclass
class GraphViscosity:
    d: np.ndarray  # (nnz,), diagonal holds -sum of off-diagonal row entries

    def diag(self, ops: DiscreteOperators) -> np.ndarray:
        return self.d[ops.diag_pos]


@dataclass
class NodalBounds:
    rho_min: np.ndarray
    rho_max: np.ndarray
    psi_floor: np.ndarray  # entropy surrogate floor (rho e / rho^gamma)


@dataclass
class HighOrderUpdate:
    u: np.ndarray  # possibly inadmissible target field
    a_edges: np.ndarray  # antisymmetric antidiffusive edge fluxes (nnz, dim+2)
    alpha: np.ndarray  # nodal commutator indicator


@dataclass
class StageDiagnostics:
    dt0: float = np.inf
    l_min: float = 1.0
    l_mean: float = 1.0


def compute_dij_low(field: SolutionField, ops: DiscreteOperators, gas: GasModel) -> GraphViscosity:
    """Symmetric graph viscosity d_ij = max of the two directional bounds."""
    u = field.u
    dim = field.dim
    check_admissible(u, dim, "compute_dij_low")
    rho = u[:, 0]
    v = velocity(u, dim)
    p = (gas.gamma - 1.0) * rho * internal_energy(u, dim)

    i, j = ops.rows, ops.indices
    vn_i = np.sum(v[i] * ops.n_unit, axis=1)
    vn_j = np.sum(v[j] * ops.n_unit, axis=1)
    lam = max_wavespeed_primitive(gas.gamma, rho[i], vn_i, p[i], rho[j], vn_j, p[j])
    d = lam * ops.c_norm
    d = np.maximum(d, d[ops.trans])
    d[ops.diag_pos] = 0.0
    d[ops.diag_pos] = -ops.rowsum(d)
    return GraphViscosity(d=d)


def dt_max(ops: DiscreteOperators, dvisc: GraphViscosity) -> float:
    """Largest invariant-domain-preserving forward-Euler step, min_i m_i/(2|d_ii|)."""
    dii = np.abs(dvisc.diag(ops))
    active = dii > 0.0
    if not active.any():
        raise RuntimeError("no hyperbolic scale: all graph viscosities vanish")
    return float(np.min(ops.m_lumped[active] / (2.0 * dii[active])))


def _flux_divergence(u: np.ndarray, ops: DiscreteOperators, gas: GasModel) -> np.ndarray:
    f = flux(u, gas, ops.dim)
    per_edge = np.einsum("ekd,ed->ek", f[ops.indices], ops.c)
    return ops.rowsum(per_edge)


def low_order_update(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                     dvisc: GraphViscosity, dt: float,
                     bc: Optional[BoundaryCondition] = None) -> SolutionField:
    """First-order graph-viscosity forward-Euler update (admissible for CFL <= 1)."""
    dt0 = dt_max(ops, dvisc)
    if dt > dt0 * (1.0 + 1e-12):
        raise CFLError(f"low-order step dt={dt} exceeds dt0={dt0}", dt0)
    u = field.u
    du = u[ops.indices] - u[ops.rows]
    rhs = -_flux_divergence(u, ops, gas) + ops.rowsum(dvisc.d[:, None] * du)
    u_new = u + (dt / ops.m_lumped)[:, None] * rhs
    out = SolutionField(u_new, field.dim, field.t + dt)
    if bc is not None:
        bc.apply(out.u, ops, out.t)
    return out


def bar_states(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
               dvisc: GraphViscosity) -> np.ndarray:
    """Riemann-average auxiliary states per stencil entry (diagonal: own state)."""
    u = field.u
    f = flux(u, gas, ops.dim)
    df_c = np.einsum("ekd,ed->ek", f[ops.indices] - f[ops.rows], ops.c)
    d = dvisc.d.copy()
    d[ops.diag_pos] = 1.0  # diagonal: df_c is exactly zero there
    zero = d == 0.0
    if zero.any():
        if np.abs(df_c[zero]).max() > 0.0:
            raise RuntimeError("vanishing graph viscosity on an edge with flux jump")
        d[zero] = 1.0
    return 0.5 * (u[ops.indices] + u[ops.rows]) - df_c / (2.0 * d[:, None])


def compute_local_bounds(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                         bar: np.ndarray, cfg: HyperbolicConfig | None = None) -> NodalBounds:
    """Nodal density bounds and entropy-surrogate floor from the bar states."""
    u = field.u
    rho = u[:, 0]
    rho_min = np.minimum(ops.rowmin(bar[:, 0], mask=ops.offdiag), rho)
    rho_max = np.maximum(ops.rowmax(bar[:, 0], mask=ops.offdiag), rho)
    surrogate = internal_energy(u, field.dim) * rho ** (1.0 - gas.gamma)
    psi_floor = ops.rowmin(surrogate[ops.indices])
    if cfg is not None and cfg.relax_bounds:
        # mesh-dependent widening; a reconstruction of the cited technique
        h_rel = (ops.m_lumped / ops.domain_measure) ** (1.0 / ops.dim)
        r = np.minimum(0.5, cfg.relax_factor * h_rel**1.5)
        spread = 0.5 * (rho_max - rho_min)
        rho_min = rho_min - r * spread
        rho_max = rho_max + r * spread
        psi_floor = psi_floor * (1.0 - r)
    return NodalBounds(rho_min=rho_min, rho_max=rho_max, psi_floor=psi_floor)


def high_order_update(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                      dvisc_low: GraphViscosity, dt: float,
                      cfg: HyperbolicConfig) -> HighOrderUpdate:
    """Entropy-commutator-scaled viscosity update with consistent-mass correction.

    The returned target may leave the admissible set; the edge fluxes
    ``a_edges`` decompose (target - low order) antisymmetrically for limiting.
    """
    u = field.u
    dim = field.dim
    eta, deta = entropy_and_derivative(u, gas, dim)
    v = velocity(u, dim)
    g_ent = v * eta[:, None]  # entropy flux
    f = flux(u, gas, dim)

    i, j = ops.rows, ops.indices
    a1 = np.einsum("ed,ed->e", g_ent[j] - g_ent[i], ops.c)
    fjc = np.einsum("ekd,ed->ek", f[j] - f[i], ops.c)
    b1 = np.einsum("ek,ek->e", deta[i], fjc)
    num = np.abs(ops.rowsum(a1 - b1))
    den = ops.rowsum(np.abs(a1) + np.abs(b1))
    alpha = np.where(den > 0.0, num / np.maximum(den, 1e-300), 0.0)
    if cfg.indicator_power != 1.0:
        alpha = alpha**cfg.indicator_power

    alpha_edge = np.maximum(alpha[i], alpha[j])
    d_high = dvisc_low.d * np.minimum(1.0, alpha_edge)
    d_high[ops.diag_pos] = 0.0
    d_high[ops.diag_pos] = -ops.rowsum(d_high)

    du = u[j] - u[i]
    rhs = -_flux_divergence(u, ops, gas) + ops.rowsum(d_high[:, None] * du)
    delta = (dt / ops.m_lumped)[:, None] * rhs

    a_edges = ops.m_cons[:, None] * (delta[i] - delta[j]) + dt * (
        (d_high - dvisc_low.d)[:, None] * du
    )
    a_edges[ops.diag_pos] = 0.0
    # target includes the single-pass consistent-mass correction, so that
    # low order plus the full edge fluxes reproduces it exactly
    mass_corr = delta - ops.rowsum(ops.m_cons[:, None] * delta[j]) / ops.m_lumped[:, None]
    u_high = u + delta + mass_corr
    return HighOrderUpdate(u=u_high, a_edges=a_edges, alpha=alpha)


def _psi(u: np.ndarray, floor: np.ndarray, gamma: float, dim: int) -> np.ndarray:
    rho = np.maximum(u[:, 0], 1e-300)
    rho_e = u[:, -1] - 0.5 * np.sum(u[:, 1 : 1 + dim] ** 2, axis=1) / rho
    return rho_e - floor * rho**gamma


def convex_limit(u_low: SolutionField, high: HighOrderUpdate, bounds: NodalBounds,
                 ops: DiscreteOperators, gas: GasModel,
                 cfg: HyperbolicConfig | None = None) -> tuple[SolutionField, np.ndarray]:
    """Blend high-order edge fluxes into the low-order update under nodal bounds.

    Returns the limited field and the symmetric edge coefficients l_ij.
    Density bounds are affine along the limiting ray (closed form); the
    entropy-surrogate constraint is concave and handled by bisection.
    """
    cfg = cfg or HyperbolicConfig()
    dim = u_low.dim
    ul = u_low.u
    i = ops.rows
    nn = np.maximum(ops.n_neighbors[i], 1)
    p_edge = (nn / ops.m_lumped[i])[:, None] * high.a_edges

    # density bounds: affine constraint, closed form
    rho_l = ul[i, 0]
    p_rho = p_edge[:, 0]
    hi_gap = np.maximum(bounds.rho_max[i] - rho_l, 0.0)
    lo_gap = np.minimum(bounds.rho_min[i] - rho_l, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        l_rho = np.where(
            p_rho > 0.0, hi_gap / p_rho, np.where(p_rho < 0.0, lo_gap / p_rho, 1.0)
        )
    ell = np.clip(np.nan_to_num(l_rho, nan=1.0, posinf=1.0), 0.0, 1.0)

    # entropy surrogate Psi >= 0: concave along the ray, bisect on feasibility
    floor = bounds.psi_floor[i]
    base = ul[i]
    psi0 = _psi(base, floor, gas.gamma, dim)
    slack = 1e-15 * (np.abs(base[:, -1]) + floor * np.maximum(base[:, 0], 0.0) ** gas.gamma + 1e-300)
    feasible_at = lambda l: _psi(base + l[:, None] * p_edge, floor, gas.gamma, dim) >= -slack
    need = ~feasible_at(ell) & (ell > 0.0)
    if need.any():
        lo = np.zeros(int(need.sum()))
        hi = ell[need]
        sub_base = base[need]
        sub_p = p_edge[need]
        sub_floor = floor[need]
        sub_slack = slack[need]
        for _ in range(cfg.limiter_bisection_iters):
            mid = 0.5 * (lo + hi)
            ok = _psi(sub_base + mid[:, None] * sub_p, sub_floor, gas.gamma, dim) >= -sub_slack
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
            if np.max(hi - lo) <= cfg.limiter_tol:
                break
        ell[need] = lo
    ell = np.where(psi0 < -slack, 0.0, ell)  # guard: never amplify a rounding violation

    ell = np.minimum(ell, ell[ops.trans])
    ell[ops.diag_pos] = 0.0
    u_new = ul + ops.rowsum(ell[:, None] * high.a_edges) / ops.m_lumped[:, None]
    return SolutionField(u_new, dim, u_low.t), ell


def hyperbolic_stage(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                     dt: float, cfg: HyperbolicConfig,
                     bc: Optional[BoundaryCondition] = None) -> tuple[SolutionField, StageDiagnostics]:
    """One limited forward-Euler stage, boundary fix-up included."""
    dvisc = compute_dij_low(field, ops, gas)
    dt0 = dt_max(ops, dvisc)
    if dt > cfg.stage_cfl_max * dt0 * (1.0 + 1e-12):
        raise CFLError(f"stage dt={dt} exceeds {cfg.stage_cfl_max} * dt0={dt0}", dt0)
    diag = StageDiagnostics(dt0=dt0)
    u_low = low_order_update(field, ops, gas, dvisc, dt)
    if cfg.use_high_order:
        bar = bar_states(field, ops, gas, dvisc)
        bounds = compute_local_bounds(field, ops, gas, bar, cfg)
        high = high_order_update(field, ops, gas, dvisc, dt, cfg)
        out, ell = convex_limit(u_low, high, bounds, ops, gas, cfg)
        off = ops.offdiag
        if off.any():
            diag.l_min = float(ell[off].min())
            diag.l_mean = float(ell[off].mean())
    else:
        out = u_low
    out.t = field.t + dt
    if bc is not None:
        bc.apply(out.u, ops, out.t)
    return out, diag


def ssprk2_hyperbolic(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                      dt: float, cfg: HyperbolicConfig,
                      bc: Optional[BoundaryCondition] = None) -> tuple[SolutionField, list[StageDiagnostics]]:
    """Heun / SSPRK(2,2) wrapper: u <- u/2 + (stage o stage)(u)/2."""
    w1, diag1 = hyperbolic_stage(field, ops, gas, dt, cfg, bc)
    w2, diag2 = hyperbolic_stage(w1, ops, gas, dt, cfg, bc)
    u_new = 0.5 * (field.u + w2.u)
    out = SolutionField(u_new, field.dim, field.t + dt)
    if bc is not None:
        bc.apply(out.u, ops, out.t)
    return out, [diag1, diag2]
