"""Grid-refinement studies producing the seven-column convergence table."""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .config import RunConfig, build_problem
from .driver import run_simulation
from .errors import compute_delta_q, convergence_rate
from .output import write_convergence_csv


@dataclass
class StudyResult:
    rows: list
    failed_grid: int | None = None
    error: str | None = None


def run_case(cfg: RunConfig) -> tuple:
    """Run one configuration; returns (ErrorReport or None, final field, ops)."""
    field, ops, gas, bc, controls, hcfg, pcfg, exact = build_problem(cfg)
    final, _ = run_simulation(field, ops, gas, controls, hcfg, pcfg, bc)
    if exact is None:
        return None, final, ops
    u_ref = exact(ops.coords, final.t)
    return compute_delta_q(final, u_ref, ops, quadrature=cfg.quadrature), final, ops


def convergence_study(base: RunConfig, grids: list[int],
                      csv_path: str | None = None) -> StudyResult:
    """Sweep node counts on the 1D case and tabulate delta errors and rates.

    Any grid failure aborts the sweep but the partial table is still written.
    """
    if len(grids) < 2:
        raise ValueError("a convergence study needs at least two grids")
    rows = []
    result = StudyResult(rows=rows)
    prev = None
    for n in grids:
        cfg = copy.deepcopy(base)
        cfg.n_nodes = n
        try:
            report, _, _ = run_case(cfg)
        except Exception as exc:
            result.failed_grid = n
            result.error = str(exc)
            break
        if report is None:
            raise ValueError("convergence study needs a case with an exact solution")
        h = (cfg.b - cfg.a) / (n - 1)
        row = {"N": n, "delta1": report.delta1, "delta2": report.delta2,
               "deltainf": report.delta_inf, "h": h,
               "rate1": None, "rate2": None, "rateinf": None}
        if prev is not None:
            for key, rkey in (("delta1", "rate1"), ("delta2", "rate2"),
                              ("deltainf", "rateinf")):
                if prev[key] > 0.0 and row[key] > 0.0:
                    row[rkey] = convergence_rate(prev[key], row[key], prev["h"], h)
        rows.append(row)
        prev = row
    if csv_path is not None:
        write_convergence_csv(csv_path, rows)
    return result
