"""Strang-split time loop: hyperbolic half, viscous full, hyperbolic half."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .assembly import DiscreteOperators
from .boundary import BoundaryCondition
from .hyperbolic import (
    CFLError,
    HyperbolicConfig,
    compute_dij_low,
    dt_max,
    ssprk2_hyperbolic,
)
from .parabolic import ParabolicConfig, parabolic_step
from .state import GasModel, SolutionField, check_admissible, internal_energy, specific_entropy


@dataclass
class TimeControls:
    cfl: float = 0.4
    t_final: float = 1.0
    max_steps: int = 10**7
    audit_every: int = 1

    def __post_init__(self):
        if self.cfl <= 0.0:
            raise ValueError("cfl must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass
class StepReport:
    step: int = 0
    t: float = 0.0
    dt: float = 0.0
    dt0: float = 0.0
    retried: bool = False
    min_rho: float = np.nan
    min_e: float = np.nan
    min_s: float = np.nan
    mass: float = np.nan
    momentum: np.ndarray | None = None
    energy: float = np.nan
    limiter_l_min: float = 1.0
    fct_l_min: float = 1.0
    substage_log: list = dc_field(default_factory=list)


def conserved_totals(field: SolutionField, ops: DiscreteOperators) -> tuple[float, np.ndarray, float]:
    w = ops.m_lumped[:, None] * field.u
    return float(w[:, 0].sum()), w[:, 1 : 1 + field.dim].sum(axis=0), float(w[:, -1].sum())


def _audit(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
           report: StepReport) -> None:
    report.min_rho = float(field.rho.min())
    report.min_e = float(internal_energy(field.u, field.dim).min())
    report.min_s = float(specific_entropy(field.u, gas, field.dim).min())
    report.mass, report.momentum, report.energy = conserved_totals(field, ops)


def _compose(field: SolutionField, ops: DiscreteOperators, gas: GasModel, dt: float,
             hcfg: HyperbolicConfig, pcfg: ParabolicConfig,
             bc: Optional[BoundaryCondition],
             forcing: Optional[Callable[[np.ndarray, float], np.ndarray]],
             report: StepReport) -> SolutionField:
    half = 0.5 * dt
    w, diags = ssprk2_hyperbolic(field, ops, gas, half, hcfg, bc)
    report.substage_log.append(("hyperbolic", half))
    f_mid = forcing(ops.coords, field.t + half) if forcing is not None else None
    w2, prep = parabolic_step(w, ops, gas, dt, pcfg, bc, f_mid)
    report.fct_l_min = prep.l_minus_min
    report.substage_log.append(("parabolic", dt))
    w2.t = field.t + half  # splitting bookkeeping: physical time advances by dt total
    out, diags2 = ssprk2_hyperbolic(w2, ops, gas, half, hcfg, bc)
    report.substage_log.append(("hyperbolic", half))
    report.limiter_l_min = min(
        [d.l_min for d in diags + diags2], default=1.0
    )
    out.t = field.t + dt
    return out


def strang_step(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                controls: TimeControls,
                hcfg: HyperbolicConfig | None = None,
                pcfg: ParabolicConfig | None = None,
                bc: Optional[BoundaryCondition] = None,
                forcing: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
                dt_cap: float | None = None) -> tuple[SolutionField, StepReport]:
    """One split step with dt = cfl * dt0(u^n), optionally clipped to dt_cap.

    A CFL violation inside the composition (the second hyperbolic half acts
    on intermediate data whose own dt0 may have shrunk) triggers one retry
    with dt halved; a second failure propagates.
    """
    hcfg = hcfg or HyperbolicConfig()
    pcfg = pcfg or ParabolicConfig()
    check_admissible(field.u, field.dim, "strang_step input")
    dvisc = compute_dij_low(field, ops, gas)
    dt0 = dt_max(ops, dvisc)
    dt = controls.cfl * dt0
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    report = StepReport(t=field.t, dt=dt, dt0=dt0)
    try:
        out = _compose(field, ops, gas, dt, hcfg, pcfg, bc, forcing, report)
    except CFLError:
        report.retried = True
        report.dt = dt = 0.5 * dt
        report.substage_log.clear()
        out = _compose(field, ops, gas, dt, hcfg, pcfg, bc, forcing, report)
    _audit(out, ops, gas, report)
    return out, report


def run_simulation(field: SolutionField, ops: DiscreteOperators, gas: GasModel,
                   controls: TimeControls,
                   hcfg: HyperbolicConfig | None = None,
                   pcfg: ParabolicConfig | None = None,
                   bc: Optional[BoundaryCondition] = None,
                   forcing: Optional[Callable[[np.ndarray, float], np.ndarray]] = None,
                   snapshot_times: Optional[list[float]] = None,
                   on_snapshot: Optional[Callable[[SolutionField, int], None]] = None,
                   collect_reports: bool = False) -> tuple[SolutionField, list[StepReport]]:
    """Advance to controls.t_final, clipping the last step to land exactly.

    Snapshot times are hit exactly by capping dt; ``on_snapshot`` receives
    the field and the snapshot index.  Reports are collected every
    ``controls.audit_every`` steps when requested.
    """
    f = field.copy()
    reports: list[StepReport] = []
    targets = sorted(t for t in (snapshot_times or []) if f.t < t <= controls.t_final)
    targets.append(controls.t_final)
    snap_idx = 0
    step = 0
    eps = 1e-12 * max(1.0, abs(controls.t_final))
    while f.t < controls.t_final - eps:
        if step >= controls.max_steps:
            raise RuntimeError(
                f"max_steps={controls.max_steps} reached at t={f.t} "
                f"before t_final={controls.t_final}"
            )
        next_target = targets[0]
        cap = next_target - f.t
        try:
            f, rep = strang_step(f, ops, gas, controls, hcfg, pcfg, bc, forcing,
                                 dt_cap=cap)
        except Exception as exc:
            raise RuntimeError(f"step {step} failed at t={f.t}: {exc}") from exc
        step += 1
        rep.step = step
        if collect_reports and (step % controls.audit_every == 0):
            reports.append(rep)
        if f.t >= next_target - eps:
            f.t = next_target
            targets.pop(0)
            if on_snapshot is not None and snapshot_times and any(
                abs(next_target - s) <= eps for s in snapshot_times
            ):
                on_snapshot(f, snap_idx)
                snap_idx += 1
    f.t = controls.t_final
    return f, reports
